//! Text formats for instances and slide sequences.
//!
//! Instance: `n`, then `n-1` edge lines `u v`, then `I k v1 .. vk` and
//! `J k v1 .. vk`. Sequence: one `u v` move per line. `#` starts a comment
//! in both.

use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::graph::{GraphError, Move, SlideSequence, SpiderGraph, TokenSet, Vertex};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unexpected end of input: {0}")]
    Truncated(&'static str),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

fn syntax(line: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax { line, message: message.into() }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub spider: SpiderGraph,
    pub i: TokenSet,
    pub j: TokenSet,
}

impl Instance {
    pub fn new(spider: SpiderGraph, i: TokenSet, j: TokenSet) -> Self {
        Instance { spider, i, j }
    }

    /// Parses and validates: the graph must be a spider and both sets independent.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut lines = content_lines(text);
        let (ln, first) = lines.next().ok_or(ParseError::Truncated("vertex count"))?;
        let n = parse_number(ln, first)?;
        let mut edges = Vec::with_capacity(n.saturating_sub(1));
        for _ in 1..n {
            let (ln, line) = lines.next().ok_or(ParseError::Truncated("edge list"))?;
            let nums = parse_numbers(ln, line)?;
            let [u, v] = nums[..] else {
                return Err(syntax(ln, format!("expected an edge `u v`, got {line:?}")));
            };
            if u >= n || v >= n {
                return Err(syntax(ln, format!("edge endpoint out of range 0..{n}")));
            }
            edges.push((u, v));
        }
        let i = parse_set(&mut lines, "I", n)?;
        let j = parse_set(&mut lines, "J", n)?;
        if let Some((ln, _)) = lines.next() {
            return Err(syntax(ln, "trailing content after J line"));
        }
        let spider = SpiderGraph::new(n, &edges)?;
        spider.tree().validate_tokens(&i)?;
        spider.tree().validate_tokens(&j)?;
        Ok(Instance { spider, i, j })
    }
}

impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tree = self.spider.tree();
        writeln!(f, "{}", tree.vertex_count())?;
        for (u, v) in tree.edges() {
            writeln!(f, "{u} {v}")?;
        }
        for (name, set) in [("I", &self.i), ("J", &self.j)] {
            write!(f, "{name} {}", set.len())?;
            for x in set.iter() {
                write!(f, " {x}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(k, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        (!line.is_empty()).then_some((k + 1, line))
    })
}

fn parse_number(ln: usize, word: &str) -> Result<usize, ParseError> {
    word.parse().map_err(|_| syntax(ln, format!("expected a nonnegative integer, got {word:?}")))
}

fn parse_numbers(ln: usize, line: &str) -> Result<Vec<usize>, ParseError> {
    line.split_whitespace().map(|w| parse_number(ln, w)).collect()
}

fn parse_set<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    name: &'static str,
    n: usize,
) -> Result<TokenSet, ParseError> {
    let (ln, line) = lines.next().ok_or(ParseError::Truncated(name))?;
    let mut words = line.split_whitespace();
    if words.next() != Some(name) {
        return Err(syntax(ln, format!("expected a `{name} k v1 .. vk` line")));
    }
    let k = parse_number(ln, words.next().ok_or_else(|| syntax(ln, "missing token count"))?)?;
    let members: Vec<Vertex> = words.map(|w| parse_number(ln, w)).collect::<Result<_, _>>()?;
    if members.len() != k {
        return Err(syntax(ln, format!("{name} declares {k} tokens but lists {}", members.len())));
    }
    if let Some(&x) = members.iter().find(|&&x| x >= n) {
        return Err(syntax(ln, format!("vertex {x} out of range 0..{n}")));
    }
    let set = TokenSet::new(members);
    if set.len() != k {
        return Err(syntax(ln, format!("{name} lists a vertex twice")));
    }
    Ok(set)
}

pub fn parse_sequence(text: &str) -> Result<SlideSequence, ParseError> {
    content_lines(text)
        .map(|(ln, line)| match parse_numbers(ln, line)?[..] {
            [u, v] => Ok(Move::new(u, v)),
            _ => Err(syntax(ln, format!("expected a move `u v`, got {line:?}"))),
        })
        .collect()
}

/// One `u v` line per move, then an optional summary comment.
pub fn format_sequence(seq: &SlideSequence, summary: Option<(usize, usize)>) -> String {
    let mut out = String::new();
    for m in seq.iter() {
        let _ = writeln!(out, "{} {}", m.from, m.to);
    }
    if let Some((detours, mstar)) = summary {
        let _ = writeln!(out, "# len={} detours={detours} mstar={mstar}", seq.len());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# three legs of length two
7
0 1
1 2
0 3
3 4
0 5
5 6
I 2 1 4
J 2 1 6
";

    #[test]
    fn parses_and_round_trips() {
        let inst = Instance::parse(SAMPLE).unwrap();
        assert_eq!(inst.spider.body(), 0);
        assert_eq!(inst.i, TokenSet::new([1, 4]));
        assert_eq!(inst.j, TokenSet::new([1, 6]));
        assert_eq!(Instance::parse(&inst.to_string()).unwrap(), inst);
    }

    #[test]
    fn bad_edge_reports_its_line() {
        let text = SAMPLE.replace("3 4\n", "3 x\n");
        assert_eq!(
            Instance::parse(&text),
            Err(syntax(6, "expected a nonnegative integer, got \"x\""))
        );
        let text = SAMPLE.replace("3 4\n", "3 4 5\n");
        assert!(matches!(Instance::parse(&text), Err(ParseError::Syntax { line: 6, .. })));
    }

    #[test]
    fn structural_errors() {
        assert_eq!(Instance::parse(""), Err(ParseError::Truncated("vertex count")));
        let text = SAMPLE.replace("J 2 1 6\n", "");
        assert_eq!(Instance::parse(&text), Err(ParseError::Truncated("J")));
        let text = SAMPLE.replace("I 2 1 4", "I 3 1 4");
        assert!(matches!(Instance::parse(&text), Err(ParseError::Syntax { line: 9, .. })));
        let text = SAMPLE.replace("I 2 1 4", "I 2 1 2");
        assert!(matches!(Instance::parse(&text), Err(ParseError::Graph(GraphError::NotIndependent(1, 2)))));
        let path = "3\n0 1\n1 2\nI 1 0\nJ 1 2\n";
        assert!(matches!(Instance::parse(path), Err(ParseError::Graph(GraphError::NotASpider(_)))));
    }

    #[test]
    fn sequences() {
        let seq: SlideSequence = [Move::new(4, 3), Move::new(3, 0)].into_iter().collect();
        let text = format_sequence(&seq, Some((0, 2)));
        assert_eq!(text, "4 3\n3 0\n# len=2 detours=0 mstar=2\n");
        assert_eq!(parse_sequence(&text), Ok(seq));
        assert_eq!(parse_sequence("1 2 3\n"), Err(syntax(1, "expected a move `u v`, got \"1 2 3\"")));
        assert_eq!(parse_sequence("# nothing\n"), Ok(SlideSequence::new()));
    }
}

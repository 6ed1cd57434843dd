//! Repairs the assignment order into a move order in which no token has a
//! later-moving token on or next to its path.

use thiserror::Error;

use crate::assignment::TargetAssignment;
use crate::graph::{SpiderGraph, TokenSet, Vertex};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OrderingError {
    #[error("ordering did not settle after {0} repairs")]
    NonTermination(usize),
    #[error("{0} is not a source of the assignment")]
    NotASource(Vertex),
}

/// Later-ordered tokens blocking the path of `x`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BlockingSets {
    /// All of `K(x)`, ascending by the order it was computed under.
    pub k: Vec<Vertex>,
    /// Members of `x`'s leg that leave it.
    pub k1: Vec<Vertex>,
    /// Members of `x`'s leg that stay in it.
    pub k2: Vec<Vertex>,
    /// Members outside `x`'s leg; always empty without tokens next to the body.
    pub other: Vec<Vertex>,
}

impl BlockingSets {
    pub fn is_empty(&self) -> bool {
        self.k.is_empty()
    }
}

/// Where the rebuilt block of reordered tokens goes when those tokens are
/// not contiguous in the current order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BlockPlacement {
    /// At the earliest position any of them held.
    First,
    /// At the latest position any of them held.
    #[default]
    Last,
    /// Back into exactly the positions they held.
    Slots,
}

/// Tokens of `I` grouped by leg and depth, for neighborhood queries.
struct TokenIndex<'g> {
    g: &'g SpiderGraph,
    /// Per leg, `(depth, vertex)` ascending.
    by_leg: Vec<Vec<(usize, Vertex)>>,
    body_token: bool,
}

impl<'g> TokenIndex<'g> {
    fn new(g: &'g SpiderGraph, tokens: &TokenSet) -> Self {
        let mut by_leg = vec![Vec::new(); g.leg_count()];
        let mut body_token = false;
        for x in tokens.iter() {
            match g.leg_of(x) {
                Some(l) => by_leg[l].push((g.depth(x), x)),
                None => body_token = true,
            }
        }
        for leg in &mut by_leg {
            leg.sort_unstable();
        }
        TokenIndex { g, by_leg, body_token }
    }

    fn push_range(&self, leg: usize, lo: usize, hi: usize, out: &mut Vec<Vertex>) {
        let tokens = &self.by_leg[leg];
        let start = tokens.partition_point(|&(d, _)| d < lo);
        out.extend(tokens[start..].iter().take_while(|&&(d, _)| d <= hi).map(|&(_, x)| x));
    }

    /// Tokens in the closed neighborhood of the path between `x` and `y`.
    fn near_path(&self, x: Vertex, y: Vertex, out: &mut Vec<Vertex>) {
        out.clear();
        let g = self.g;
        let (lx, ly) = (g.leg_of(x), g.leg_of(y));
        let mut touches_body = false;
        let mut through_body = false;
        let mut segment = |leg: usize, a: usize, b: usize, out: &mut Vec<Vertex>| {
            self.push_range(leg, a.saturating_sub(1).max(1), b + 1, out);
            touches_body |= a <= 1;
        };
        match (lx, ly) {
            (Some(a), Some(b)) if a == b => {
                let (p, q) = (g.depth(x).min(g.depth(y)), g.depth(x).max(g.depth(y)));
                segment(a, p, q, out);
            }
            _ => {
                through_body = true;
                if let Some(a) = lx {
                    segment(a, 1, g.depth(x), out);
                }
                if let Some(b) = ly {
                    segment(b, 1, g.depth(y), out);
                }
            }
        }
        if through_body {
            for leg in 0..self.by_leg.len() {
                if Some(leg) != lx && Some(leg) != ly {
                    self.push_range(leg, 1, 1, out);
                }
            }
        }
        if (touches_body || through_body) && self.body_token {
            out.push(g.body());
        }
    }
}

fn classify(f: &TargetAssignment, x: Vertex, near: &[Vertex], rank: &[usize]) -> BlockingSets {
    let mut k: Vec<Vertex> = near.iter().copied().filter(|&y| rank[y] > rank[x]).collect();
    k.sort_by_key(|&y| rank[y]);
    let leg = f.home_leg(x);
    let mut sets = BlockingSets::default();
    for &y in &k {
        if f.home_leg(y) != leg {
            sets.other.push(y);
        } else if f.leaves_leg(y) {
            sets.k1.push(y);
        } else {
            sets.k2.push(y);
        }
    }
    sets.k = k;
    sets
}

fn rank_of(order: &[Vertex], n: usize) -> Vec<usize> {
    let mut rank = vec![usize::MAX; n];
    for (p, &w) in order.iter().enumerate() {
        rank[w] = p;
    }
    rank
}

/// `K(x, order)` and its split, straight from the definition.
pub fn blocking_sets(
    g: &SpiderGraph,
    f: &TargetAssignment,
    order: &[Vertex],
    x: Vertex,
) -> Result<BlockingSets, OrderingError> {
    let y = f.target(x).ok_or(OrderingError::NotASource(x))?;
    let rank = rank_of(order, g.vertex_count());
    let near: Vec<Vertex> = g
        .closed_path_neighborhood(x, y)
        .into_iter()
        .filter(|&z| rank[z] != usize::MAX)
        .collect();
    Ok(classify(f, x, &near, &rank))
}

/// One repair: the chosen token, its blocking sets, and the order before and after.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepairStep {
    pub chosen: Vertex,
    pub sets: BlockingSets,
    pub before: Vec<Vertex>,
    pub after: Vec<Vertex>,
}

/// Move order for the sources of `f`, starting from the assignment order.
pub fn token_ordering(g: &SpiderGraph, f: &TargetAssignment) -> Result<Vec<Vertex>, OrderingError> {
    repair(g, f, BlockPlacement::default(), None)
}

pub fn token_ordering_traced(
    g: &SpiderGraph,
    f: &TargetAssignment,
    placement: BlockPlacement,
) -> Result<(Vec<Vertex>, Vec<RepairStep>), OrderingError> {
    let mut trace = Vec::new();
    let order = repair(g, f, placement, Some(&mut trace))?;
    Ok((order, trace))
}

fn repair(
    g: &SpiderGraph,
    f: &TargetAssignment,
    placement: BlockPlacement,
    mut trace: Option<&mut Vec<RepairStep>>,
) -> Result<Vec<Vertex>, OrderingError> {
    let mut order = f.order().to_vec();
    let sources: TokenSet = order.iter().copied().collect();
    let index = TokenIndex::new(g, &sources);
    let mut rank = rank_of(&order, g.vertex_count());
    let mut near = Vec::new();
    let mut start = 0;
    let mut repairs = 0;
    loop {
        let mut found = None;
        for &w in &order[start..] {
            index.near_path(w, f.target(w).expect("source"), &mut near);
            let sets = classify(f, w, &near, &rank);
            if !sets.is_empty() {
                found = Some((w, sets));
                break;
            }
        }
        let Some((w, sets)) = found else { return Ok(order) };
        repairs += 1;
        if repairs > order.len() {
            return Err(OrderingError::NonTermination(order.len()));
        }

        // tokens of the leg that leave it but do not block w
        let leg = f.home_leg(w);
        let idle: Vec<Vertex> = if sets.k1.is_empty() {
            Vec::new()
        } else {
            let mut v: Vec<Vertex> = order
                .iter()
                .copied()
                .filter(|&z| z != w && f.home_leg(z) == leg && f.leaves_leg(z) && !sets.k1.contains(&z))
                .collect();
            v.sort_by_key(|&z| rank[z]);
            v
        };
        let mut block = idle;
        block.extend(&sets.other);
        block.extend(&sets.k1);
        block.extend(sets.k2.iter().rev());
        block.push(w);

        let mut slots: Vec<usize> = block.iter().map(|&z| rank[z]).collect();
        slots.sort_unstable();
        let before = trace.is_some().then(|| order.clone());
        let mut in_block = vec![false; g.vertex_count()];
        for &z in &block {
            in_block[z] = true;
        }
        order = match placement {
            BlockPlacement::Slots => {
                let mut next = order.clone();
                for (&p, &z) in slots.iter().zip(&block) {
                    next[p] = z;
                }
                next
            }
            BlockPlacement::First | BlockPlacement::Last => {
                let anchor = if placement == BlockPlacement::First { slots[0] } else { *slots.last().unwrap() };
                let mut next = Vec::with_capacity(order.len());
                for (p, &z) in order.iter().enumerate() {
                    if p == anchor {
                        next.extend(&block);
                    }
                    if !in_block[z] {
                        next.push(z);
                    }
                }
                next
            }
        };
        for (p, &z) in order.iter().enumerate().skip(slots[0]) {
            rank[z] = p;
        }
        start = slots[0];
        if let (Some(t), Some(before)) = (trace.as_deref_mut(), before) {
            t.push(RepairStep { chosen: w, sets, before, after: order.clone() });
        }
    }
}

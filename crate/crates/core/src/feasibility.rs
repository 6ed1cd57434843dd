//! Reconfigurability on trees: the per-edge token moving cost, its witness
//! sequence, rigid tokens, and the component-balance test.

use std::fmt;
use std::ops::Add;

use thiserror::Error;

use crate::graph::{GraphError, Move, SlideSequence, TokenSet, Tree, Vertex};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FeasibilityError {
    #[error("no token on {0}")]
    TokenMissing(Vertex),
    #[error("{1} is not a neighbor of {0}")]
    NotANeighbor(Vertex, Vertex),
    #[error("the token on {0} cannot reach {1}")]
    InfiniteCost(Vertex, Vertex),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// A slide count, or the sentinel for "impossible".
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Cost {
    Finite(usize),
    Infinite,
}

impl Cost {
    pub fn is_finite(self) -> bool {
        matches!(self, Cost::Finite(_))
    }

    pub fn finite(self) -> Option<usize> {
        match self {
            Cost::Finite(c) => Some(c),
            Cost::Infinite => None,
        }
    }
}

impl Add for Cost {
    type Output = Cost;

    fn add(self, rhs: Cost) -> Cost {
        match (self, rhs) {
            (Cost::Finite(a), Cost::Finite(b)) => Cost::Finite(a + b),
            _ => Cost::Infinite,
        }
    }
}

impl fmt::Display for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cost::Finite(c) => write!(f, "{c}"),
            Cost::Infinite => write!(f, "inf"),
        }
    }
}

/// Bottom-up table for moving the token on `root` onto `target`.
///
/// Only the subtree hanging below `target` (rooted at `root`) is evaluated;
/// `phi` is `None` elsewhere.
#[derive(Debug, Clone)]
pub struct CostTable {
    pub root: Vertex,
    pub target: Vertex,
    pub phi: Vec<Option<Cost>>,
    /// `c(z)` for every token `z` in the subtree with finite `phi`.
    pub chosen_child: Vec<Option<Vertex>>,
}

impl CostTable {
    pub fn new(tree: &Tree, tokens: &TokenSet, x: Vertex, y: Vertex) -> Result<Self, FeasibilityError> {
        if x >= tree.vertex_count() || !tokens.contains(x) {
            return Err(FeasibilityError::TokenMissing(x));
        }
        if y >= tree.vertex_count() || !tree.are_adjacent(x, y) {
            return Err(FeasibilityError::NotANeighbor(x, y));
        }
        let n = tree.vertex_count();
        // preorder of T^x_y with parents; children are evaluated first by walking it backwards
        let mut preorder = Vec::new();
        let mut stack = vec![(y, x)];
        while let Some((z, p)) = stack.pop() {
            preorder.push((z, p));
            stack.extend(tree.neighbors(z).iter().filter(|&&c| c != p).map(|&c| (c, z)));
        }
        let mut phi = vec![None; n];
        let mut chosen_child = vec![None; n];
        for &(z, p) in preorder.iter().rev() {
            let mut children = tree.neighbors(z).iter().copied().filter(|&c| c != p).peekable();
            let value = if children.peek().is_none() {
                if tokens.contains(z) {
                    Cost::Infinite
                } else {
                    Cost::Finite(1)
                }
            } else if !tokens.contains(z) {
                children
                    .filter(|&c| tokens.contains(c))
                    .fold(Cost::Finite(1), |acc, c| acc + phi[c].expect("child evaluated"))
            } else {
                let (best, value) = children
                    .map(|c| (c, phi[c].expect("child evaluated")))
                    .min_by_key(|&(c, v)| (v, c))
                    .expect("internal vertex has a child");
                if value.is_finite() {
                    chosen_child[z] = Some(best);
                }
                value
            };
            phi[z] = Some(value);
        }
        Ok(CostTable { root: x, target: y, phi, chosen_child })
    }

    pub fn cost(&self) -> Cost {
        self.phi[self.target].expect("target evaluated")
    }

    /// Witness of length `cost()` moving the root token onto the target.
    pub fn sequence(&self, tree: &Tree, tokens: &TokenSet) -> Result<SlideSequence, FeasibilityError> {
        if !self.cost().is_finite() {
            return Err(FeasibilityError::InfiniteCost(self.root, self.target));
        }
        enum Step {
            Clear(Vertex, Vertex),
            Emit(Move),
        }
        let mut out = SlideSequence::new();
        let mut stack = vec![Step::Emit(Move::new(self.root, self.target)), Step::Clear(self.target, self.root)];
        while let Some(step) = stack.pop() {
            match step {
                Step::Emit(m) => out.push(m),
                // every token child of u must first step down to its chosen child
                Step::Clear(u, parent) => {
                    for &w in tree.neighbors(u).iter().rev() {
                        if w != parent && tokens.contains(w) {
                            let c = self.chosen_child[w].expect("finite cost below a finite vertex");
                            stack.push(Step::Emit(Move::new(w, c)));
                            stack.push(Step::Clear(c, w));
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Fewest slides that bring the token on `x` onto its neighbor `y`, using only
/// the subtree beyond `y`.
pub fn cost(tree: &Tree, tokens: &TokenSet, x: Vertex, y: Vertex) -> Result<Cost, FeasibilityError> {
    Ok(CostTable::new(tree, tokens, x, y)?.cost())
}

pub fn extract_move_sequence(
    tree: &Tree,
    tokens: &TokenSet,
    x: Vertex,
    y: Vertex,
) -> Result<SlideSequence, FeasibilityError> {
    CostTable::new(tree, tokens, x, y)?.sequence(tree, tokens)
}

/// Costs over every directed edge, memoized so that all of them together
/// take time linear in the number of edges (times the body degree).
pub struct EdgeCosts<'t> {
    tree: &'t Tree,
    tokens: &'t TokenSet,
    /// `memo[z][k]`: value of `z` when its parent is `tree.neighbors(z)[k]`.
    memo: Vec<Vec<Option<Cost>>>,
}

impl<'t> EdgeCosts<'t> {
    pub fn new(tree: &'t Tree, tokens: &'t TokenSet) -> Self {
        let memo = (0..tree.vertex_count()).map(|z| vec![None; tree.degree(z)]).collect();
        EdgeCosts { tree, tokens, memo }
    }

    fn slot(&self, parent: Vertex, z: Vertex) -> usize {
        self.tree.neighbors(z).binary_search(&parent).expect("adjacent")
    }

    /// Same value as [`cost`] for the token on `x` and its neighbor `y`.
    pub fn cost(&mut self, x: Vertex, y: Vertex) -> Cost {
        let (tree, tokens) = (self.tree, self.tokens);
        let mut stack = vec![(x, y)];
        while let Some(&(p, z)) = stack.last() {
            let k = self.slot(p, z);
            if self.memo[z][k].is_some() {
                stack.pop();
                continue;
            }
            let holds = tokens.contains(z);
            // a free vertex only looks at its token children
            let needed = tree.neighbors(z).iter().copied().filter(|&c| c != p && (holds || tokens.contains(c)));
            let missing: Vec<(Vertex, Vertex)> =
                needed.clone().filter(|&c| self.memo[c][self.slot(z, c)].is_none()).map(|c| (z, c)).collect();
            if !missing.is_empty() {
                stack.extend(missing);
                continue;
            }
            let values = needed.map(|c| self.memo[c][self.slot(z, c)].expect("computed"));
            let value = if tree.degree(z) == 1 {
                if holds {
                    Cost::Infinite
                } else {
                    Cost::Finite(1)
                }
            } else if holds {
                values.min().expect("internal vertex has a child")
            } else {
                values.fold(Cost::Finite(1), |acc, c| acc + c)
            };
            self.memo[z][k] = Some(value);
            stack.pop();
        }
        self.memo[y][self.slot(x, y)].expect("computed")
    }
}

/// Tokens that no sequence can ever move.
pub fn rigid_tokens(tree: &Tree, tokens: &TokenSet) -> TokenSet {
    let mut costs = EdgeCosts::new(tree, tokens);
    tokens
        .iter()
        .filter(|&u| tree.neighbors(u).iter().all(|&y| costs.cost(u, y) == Cost::Infinite))
        .collect()
}

/// Components of the forest left after deleting the closed neighborhoods of `rigid`.
pub fn free_components(tree: &Tree, rigid: &TokenSet) -> Vec<Vec<Vertex>> {
    let n = tree.vertex_count();
    let mut blocked = vec![false; n];
    for u in rigid.iter() {
        blocked[u] = true;
        for &w in tree.neighbors(u) {
            blocked[w] = true;
        }
    }
    let mut seen = blocked;
    let mut out = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut comp = vec![s];
        let mut k = 0;
        while k < comp.len() {
            let z = comp[k];
            k += 1;
            for &w in tree.neighbors(z) {
                if !seen[w] {
                    seen[w] = true;
                    comp.push(w);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Reconfigurability {
    Reconfigurable,
    /// Rigid tokens of the two sets differ.
    RigidMismatch { rigid_i: TokenSet, rigid_j: TokenSet },
    /// Some free component holds a different number of tokens on each side.
    ComponentImbalance { component: Vec<Vertex>, count_i: usize, count_j: usize },
}

impl Reconfigurability {
    pub fn is_reconfigurable(&self) -> bool {
        matches!(self, Reconfigurability::Reconfigurable)
    }
}

impl fmt::Display for Reconfigurability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reconfigurability::Reconfigurable => write!(f, "reconfigurable"),
            Reconfigurability::RigidMismatch { rigid_i, rigid_j } => {
                write!(f, "rigid tokens differ: I has {rigid_i}, J has {rigid_j}")
            }
            Reconfigurability::ComponentImbalance { component, count_i, count_j } => write!(
                f,
                "component containing {} holds {count_i} tokens of I but {count_j} of J",
                component[0]
            ),
        }
    }
}

pub fn is_reconfigurable(tree: &Tree, i: &TokenSet, j: &TokenSet) -> Result<Reconfigurability, FeasibilityError> {
    Ok(classify(tree, i, j)?.0)
}

/// Verdict together with the rigid tokens of `I`.
pub fn classify(tree: &Tree, i: &TokenSet, j: &TokenSet) -> Result<(Reconfigurability, TokenSet), FeasibilityError> {
    if i.len() != j.len() {
        return Err(GraphError::SizeMismatch(i.len(), j.len()).into());
    }
    tree.validate_tokens(i)?;
    tree.validate_tokens(j)?;
    let rigid_i = rigid_tokens(tree, i);
    let rigid_j = rigid_tokens(tree, j);
    if rigid_i != rigid_j {
        return Ok((Reconfigurability::RigidMismatch { rigid_i: rigid_i.clone(), rigid_j }, rigid_i));
    }
    for component in free_components(tree, &rigid_i) {
        let count_i = component.iter().filter(|&&z| i.contains(z)).count();
        let count_j = component.iter().filter(|&&z| j.contains(z)).count();
        if count_i != count_j {
            return Ok((Reconfigurability::ComponentImbalance { component, count_i, count_j }, rigid_i));
        }
    }
    Ok((Reconfigurability::Reconfigurable, rigid_i))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(n: usize) -> Tree {
        let edges: Vec<_> = (1..n).map(|k| (k - 1, k)).collect();
        Tree::from_edges(n, &edges).unwrap()
    }

    fn star3() -> Tree {
        Tree::from_edges(4, &[(0, 1), (0, 2), (0, 3)]).unwrap()
    }

    #[test]
    fn free_neighbor_costs_one() {
        let t = path(3);
        let s = TokenSet::new([0]);
        assert_eq!(cost(&t, &s, 0, 1), Ok(Cost::Finite(1)));
        let seq = extract_move_sequence(&t, &s, 0, 1).unwrap();
        assert_eq!(seq.moves(), &[Move::new(0, 1)]);
    }

    #[test]
    fn blocked_leaf_is_infinite() {
        // 0-1-2 with tokens on 0 and 2: 2 is a leaf holding a token
        let t = path(3);
        let s = TokenSet::new([0, 2]);
        let table = CostTable::new(&t, &s, 0, 1).unwrap();
        assert_eq!(table.phi[2], Some(Cost::Infinite));
        assert_eq!(table.cost(), Cost::Infinite);
        assert_eq!(
            extract_move_sequence(&t, &s, 0, 1),
            Err(FeasibilityError::InfiniteCost(0, 1))
        );
    }

    #[test]
    fn nested_evacuation() {
        // 0-1-2-3: token 2 must step to 3 before 0 can enter 1
        let t = path(4);
        let s = TokenSet::new([0, 2]);
        assert_eq!(cost(&t, &s, 0, 1), Ok(Cost::Finite(2)));
        let seq = extract_move_sequence(&t, &s, 0, 1).unwrap();
        assert_eq!(seq.moves(), &[Move::new(2, 3), Move::new(0, 1)]);
        assert_eq!(t.replay(&s, &seq), Ok(TokenSet::new([1, 3])));
    }

    #[test]
    fn input_errors() {
        let t = path(4);
        let s = TokenSet::new([0, 2]);
        assert_eq!(cost(&t, &s, 1, 2), Err(FeasibilityError::TokenMissing(1)));
        assert_eq!(cost(&t, &s, 0, 3), Err(FeasibilityError::NotANeighbor(0, 3)));
    }

    #[test]
    fn star_leaves_all_rigid() {
        let t = star3();
        let s = TokenSet::new([1, 2, 3]);
        assert_eq!(rigid_tokens(&t, &s), s);
        assert!(rigid_tokens(&t, &TokenSet::default()).is_empty());
        for x in 0..4 {
            assert!(rigid_tokens(&t, &TokenSet::new([x])).is_empty());
        }
    }

    #[test]
    fn star_swap_is_infeasible() {
        let t = star3();
        let verdict = is_reconfigurable(&t, &TokenSet::new([1, 2]), &TokenSet::new([1, 3])).unwrap();
        assert!(!verdict.is_reconfigurable());
        let same = is_reconfigurable(&t, &TokenSet::new([1, 2]), &TokenSet::new([1, 2])).unwrap();
        assert!(same.is_reconfigurable());
        assert!(matches!(
            is_reconfigurable(&t, &TokenSet::new([1]), &TokenSet::new([1, 2])),
            Err(FeasibilityError::Graph(GraphError::SizeMismatch(1, 2)))
        ));
    }

    #[test]
    fn infinite_child_poisons_sum() {
        // 0-1-2-3 with 4 hanging off 1: tokens 0, 2 (2 can escape to 3), 4 (leaf)
        let t = Tree::from_edges(5, &[(0, 1), (1, 2), (2, 3), (1, 4)]).unwrap();
        let s = TokenSet::new([0, 2, 4]);
        assert_eq!(cost(&t, &s, 0, 1), Ok(Cost::Infinite));
        let s = TokenSet::new([0, 2]);
        assert_eq!(cost(&t, &s, 0, 1), Ok(Cost::Finite(2)));
    }

    #[test]
    fn memoized_costs_match_tables() {
        let t = Tree::from_edges(9, &[(0, 1), (1, 2), (2, 3), (1, 4), (4, 5), (0, 6), (6, 7), (7, 8)]).unwrap();
        for mask in 0u32..(1 << 9) {
            let s: TokenSet = (0..9).filter(|&x| mask >> x & 1 == 1).collect();
            if !t.is_independent(&s) {
                continue;
            }
            let mut memo = EdgeCosts::new(&t, &s);
            for x in s.iter() {
                for &y in t.neighbors(x) {
                    assert_eq!(memo.cost(x, y), cost(&t, &s, x, y).unwrap(), "{s} {x}->{y}");
                }
            }
        }
    }

    #[test]
    fn components_split_at_rigid_neighborhoods() {
        // path 0..6 with a rigid token on 3 leaves {0,1} and {5,6}
        let t = path(7);
        let comps = free_components(&t, &TokenSet::new([3]));
        assert_eq!(comps, vec![vec![0, 1], vec![5, 6]]);
    }
}

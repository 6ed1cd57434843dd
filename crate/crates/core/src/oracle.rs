//! Exhaustive breadth-first search over the reconfiguration graph, plus the
//! instance generators that feed the differential sweeps.
//!
//! Nothing here knows about spiders beyond what the generators build: the
//! search works on any [`Tree`].

use std::collections::hash_map::Entry;
use std::collections::{HashMap, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{GraphError, Move, SlideSequence, SpiderGraph, TokenSet, Tree, Vertex};
use crate::instance::Instance;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("state limit of {0} exceeded")]
    ResourceExceeded(usize),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_states: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_states: 10_000_000 }
    }
}

/// Canonical encoding of a token set: a bit signature when every id fits in
/// a `u64`, otherwise the sorted vertex tuple.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum StateKey {
    Bits(u64),
    Sorted(Box<[Vertex]>),
}

impl StateKey {
    pub fn encode(members: &[Vertex], vertex_count: usize) -> StateKey {
        if vertex_count <= 64 {
            StateKey::Bits(members.iter().fold(0u64, |acc, &x| acc | (1 << x)))
        } else {
            let mut v = members.to_vec();
            v.sort_unstable();
            StateKey::Sorted(v.into_boxed_slice())
        }
    }

    pub fn of(set: &TokenSet, vertex_count: usize) -> StateKey {
        StateKey::encode(set.as_slice(), vertex_count)
    }

    pub fn members(&self) -> Vec<Vertex> {
        match self {
            StateKey::Bits(b) => (0..64).filter(|k| b >> k & 1 == 1).collect(),
            StateKey::Sorted(v) => v.to_vec(),
        }
    }
}

/// Single legal slides out of `members`.
fn successors(tree: &Tree, members: &[Vertex], occupied: &mut [bool]) -> Vec<Move> {
    for &x in members {
        occupied[x] = true;
    }
    let mut out = Vec::new();
    for &x in members {
        for &y in tree.neighbors(x) {
            if !occupied[y] && tree.neighbors(y).iter().all(|&w| w == x || !occupied[w]) {
                out.push(Move::new(x, y));
            }
        }
    }
    for &x in members {
        occupied[x] = false;
    }
    out
}

fn apply(members: &[Vertex], m: Move) -> Vec<Vertex> {
    members.iter().map(|&z| if z == m.from { m.to } else { z }).collect()
}

/// Every token set reachable from a start set, with BFS parents.
pub struct ReachableSets {
    vertex_count: usize,
    index: HashMap<StateKey, usize>,
    /// (parent index, move from parent); the root points at itself.
    parent: Vec<(usize, Option<Move>)>,
    dist: Vec<usize>,
}

impl ReachableSets {
    pub fn explore(tree: &Tree, start: &TokenSet, limits: Limits) -> Result<Self, OracleError> {
        tree.validate_tokens(start)?;
        let n = tree.vertex_count();
        let mut index = HashMap::new();
        let mut keys = vec![StateKey::of(start, n)];
        index.insert(keys[0].clone(), 0);
        let mut parent = vec![(0, None)];
        let mut dist = vec![0];
        let mut occupied = vec![false; n];
        let mut head = 0;
        while head < keys.len() {
            let members = keys[head].members();
            for m in successors(tree, &members, &mut occupied) {
                let key = StateKey::encode(&apply(&members, m), n);
                if let Entry::Vacant(e) = index.entry(key.clone()) {
                    if keys.len() >= limits.max_states {
                        return Err(OracleError::ResourceExceeded(limits.max_states));
                    }
                    e.insert(keys.len());
                    keys.push(key);
                    parent.push((head, Some(m)));
                    dist.push(dist[head] + 1);
                }
            }
            head += 1;
        }
        Ok(ReachableSets { vertex_count: n, index, parent, dist })
    }

    pub fn state_count(&self) -> usize {
        self.dist.len()
    }

    pub fn distance(&self, target: &TokenSet) -> Option<usize> {
        self.index.get(&StateKey::of(target, self.vertex_count)).map(|&k| self.dist[k])
    }

    pub fn witness(&self, target: &TokenSet) -> Option<SlideSequence> {
        let mut k = *self.index.get(&StateKey::of(target, self.vertex_count))?;
        let mut moves = Vec::new();
        while let (p, Some(m)) = self.parent[k] {
            moves.push(m);
            k = p;
        }
        moves.reverse();
        Some(moves.into_iter().collect())
    }
}

/// Exact shortest sequence from `i` to `j`, `None` when unreachable.
pub fn oracle_shortest(
    tree: &Tree,
    i: &TokenSet,
    j: &TokenSet,
    limits: Limits,
) -> Result<Option<(usize, SlideSequence)>, OracleError> {
    if i.len() != j.len() {
        return Err(GraphError::SizeMismatch(i.len(), j.len()).into());
    }
    tree.validate_tokens(j)?;
    if i == j {
        tree.validate_tokens(i)?;
        return Ok(Some((0, SlideSequence::new())));
    }
    // bidirectional would be faster; the sweeps reuse full explorations instead
    let n = tree.vertex_count();
    let goal = StateKey::of(j, n);
    tree.validate_tokens(i)?;
    let mut index: HashMap<StateKey, usize> = HashMap::new();
    let mut keys = vec![StateKey::of(i, n)];
    index.insert(keys[0].clone(), 0);
    let mut parent: Vec<(usize, Option<Move>)> = vec![(0, None)];
    let mut occupied = vec![false; n];
    let mut head = 0;
    while head < keys.len() {
        let members = keys[head].members();
        for m in successors(tree, &members, &mut occupied) {
            let key = StateKey::encode(&apply(&members, m), n);
            if let Entry::Vacant(e) = index.entry(key.clone()) {
                if keys.len() >= limits.max_states {
                    return Err(OracleError::ResourceExceeded(limits.max_states));
                }
                e.insert(keys.len());
                parent.push((head, Some(m)));
                if key == goal {
                    let mut k = keys.len();
                    let mut moves = Vec::new();
                    while let (p, Some(m)) = parent[k] {
                        moves.push(m);
                        k = p;
                    }
                    moves.reverse();
                    return Ok(Some((moves.len(), moves.into_iter().collect())));
                }
                keys.push(key);
            }
        }
        head += 1;
    }
    Ok(None)
}

/// Fewest slides until the token starting on `x` sits on its neighbor `y`.
///
/// The search is confined to `x` plus the subtree beyond `y`, the same region
/// the per-edge cost accounts for; tokens elsewhere never interact with it.
pub fn oracle_token_move(
    tree: &Tree,
    i: &TokenSet,
    x: Vertex,
    y: Vertex,
    limits: Limits,
) -> Result<Option<usize>, OracleError> {
    tree.validate_tokens(i)?;
    if !i.contains(x) {
        return Err(GraphError::InvalidVertex(x).into());
    }
    let mut region = tree.subtree_vertices(x, y)?;
    region.push(x);
    region.sort_unstable();
    let (sub, old) = tree.induced(&region)?;
    let local = |v: Vertex| old.binary_search(&v).expect("vertex in region");
    let tokens: Vec<Vertex> = i.iter().filter(|&z| region.binary_search(&z).is_ok()).map(local).collect();
    let (sx, sy) = (local(x), local(y));
    let n = sub.vertex_count();

    let start = (StateKey::encode(&tokens, n), sx);
    let mut seen: HashMap<(StateKey, Vertex), usize> = HashMap::new();
    seen.insert(start.clone(), 0);
    let mut queue = VecDeque::from([start]);
    let mut occupied = vec![false; n];
    while let Some((key, tracked)) = queue.pop_front() {
        let d = seen[&(key.clone(), tracked)];
        let members = key.members();
        for m in successors(&sub, &members, &mut occupied) {
            let moved = if m.from == tracked { m.to } else { tracked };
            if moved == sy {
                return Ok(Some(d + 1));
            }
            let next = (StateKey::encode(&apply(&members, m), n), moved);
            if !seen.contains_key(&next) {
                if seen.len() >= limits.max_states {
                    return Err(OracleError::ResourceExceeded(limits.max_states));
                }
                seen.insert(next.clone(), d + 1);
                queue.push_back(next);
            }
        }
    }
    Ok(None)
}

/// Bounds for generated instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShapeSpec {
    /// Exhaustive mode uses exactly this many legs; sampling draws 3..=legs.
    pub legs: usize,
    pub max_leg_len: usize,
    /// Largest token count; every size 1..=tokens is produced.
    pub tokens: usize,
    /// Sampling only: cap on the vertex count.
    pub max_vertices: usize,
}

impl ShapeSpec {
    pub fn new(legs: usize, max_leg_len: usize, tokens: usize) -> Self {
        ShapeSpec { legs, max_leg_len, tokens, max_vertices: usize::MAX }
    }

    pub fn with_max_vertices(mut self, max_vertices: usize) -> Self {
        self.max_vertices = max_vertices;
        self
    }
}

/// Spider with the given leg lengths: body 0, legs numbered outward in order.
pub fn spider_from_leg_lengths(lengths: &[usize]) -> Result<SpiderGraph, GraphError> {
    let mut edges = Vec::new();
    let mut next = 1;
    for &len in lengths {
        let mut prev = 0;
        for _ in 0..len {
            edges.push((prev, next));
            prev = next;
            next += 1;
        }
    }
    SpiderGraph::new(next, &edges)
}

/// All independent sets of `tree` with exactly `size` members, in lexicographic order.
pub fn independent_sets(tree: &Tree, size: usize) -> Vec<TokenSet> {
    fn rec(tree: &Tree, from: Vertex, size: usize, cur: &mut Vec<Vertex>, out: &mut Vec<TokenSet>) {
        if cur.len() == size {
            out.push(TokenSet::new(cur.iter().copied()));
            return;
        }
        for x in from..tree.vertex_count() {
            if cur.iter().all(|&c| !tree.are_adjacent(c, x)) {
                cur.push(x);
                rec(tree, x + 1, size, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(tree, 0, size, &mut Vec::new(), &mut out);
    out
}

/// Leg-length multisets (nondecreasing) with `legs` entries in `1..=max_len`.
fn leg_shapes(legs: usize, max_len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..legs {
        out = out
            .into_iter()
            .flat_map(|s: Vec<usize>| {
                let lo = s.last().copied().unwrap_or(1);
                (lo..=max_len).map(move |l| {
                    let mut t = s.clone();
                    t.push(l);
                    t
                })
            })
            .collect();
    }
    out
}

/// Every spider with `shape.legs` legs of length at most `shape.max_leg_len`
/// (up to leg permutation) and every pair of independent sets of equal size
/// `1..=shape.tokens`.
pub fn enumerate_exhaustive(shape: ShapeSpec) -> impl Iterator<Item = Instance> {
    leg_shapes(shape.legs, shape.max_leg_len).into_iter().flat_map(move |lengths| {
        let spider = spider_from_leg_lengths(&lengths).expect("three or more legs");
        (1..=shape.tokens).flat_map(move |k| {
            let sets = independent_sets(spider.tree(), k);
            let spider = spider.clone();
            (0..sets.len()).flat_map(move |a| {
                let sets = sets.clone();
                let spider = spider.clone();
                (0..sets.len()).map(move |b| Instance::new(spider.clone(), sets[a].clone(), sets[b].clone()))
            })
        })
    })
}

fn sample_independent(tree: &Tree, size: usize, rng: &mut ChaCha8Rng) -> Option<TokenSet> {
    for _ in 0..32 {
        let mut order: Vec<Vertex> = (0..tree.vertex_count()).collect();
        order.shuffle(rng);
        let mut chosen: Vec<Vertex> = Vec::new();
        for x in order {
            if chosen.len() == size {
                break;
            }
            if chosen.iter().all(|&c| !tree.are_adjacent(c, x)) {
                chosen.push(x);
            }
        }
        if chosen.len() == size {
            return Some(TokenSet::new(chosen));
        }
    }
    None
}

/// Seeded random instances; the same seed always yields the same stream.
pub fn sample_instances(shape: ShapeSpec, seed: u64) -> impl Iterator<Item = Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let min_legs = 3.min(shape.legs);
    std::iter::from_fn(move || loop {
        let legs = rng.gen_range(min_legs..=shape.legs.max(min_legs));
        let lengths: Vec<usize> = (0..legs).map(|_| rng.gen_range(1..=shape.max_leg_len.max(1))).collect();
        if 1 + lengths.iter().sum::<usize>() > shape.max_vertices {
            continue;
        }
        let Ok(spider) = spider_from_leg_lengths(&lengths) else { continue };
        let k = rng.gen_range(1..=shape.tokens.max(1));
        let (Some(i), Some(j)) = (
            sample_independent(spider.tree(), k, &mut rng),
            sample_independent(spider.tree(), k, &mut rng),
        ) else {
            continue;
        };
        return Some(Instance::new(spider, i, j));
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_legs() -> SpiderGraph {
        // body 0; a = 1,2; b = 3,4; c = 5,6
        spider_from_leg_lengths(&[2, 2, 2]).unwrap()
    }

    #[test]
    fn identical_sets_cost_nothing() {
        let g = three_legs();
        let i = TokenSet::new([2, 3]);
        let (len, seq) = oracle_shortest(g.tree(), &i, &i, Limits::default()).unwrap().unwrap();
        assert_eq!(len, 0);
        assert!(seq.is_empty());
    }

    #[test]
    fn two_slides_through_the_body() {
        let g = three_legs();
        let (i, j) = (TokenSet::new([2, 3]), TokenSet::new([2, 5]));
        let (len, seq) = oracle_shortest(g.tree(), &i, &j, Limits::default()).unwrap().unwrap();
        assert_eq!(len, 2);
        assert_eq!(g.tree().replay(&i, &seq), Ok(j));
    }

    #[test]
    fn forced_detour_shape_needs_six() {
        let g = three_legs();
        let (i, j) = (TokenSet::new([1, 4]), TokenSet::new([1, 6]));
        let (len, seq) = oracle_shortest(g.tree(), &i, &j, Limits::default()).unwrap().unwrap();
        assert_eq!(len, 6);
        assert_eq!(g.tree().replay(&i, &seq), Ok(j.clone()));
        let reach = ReachableSets::explore(g.tree(), &i, Limits::default()).unwrap();
        assert!(reach.state_count() < 100);
        assert_eq!(reach.distance(&j), Some(6));
    }

    #[test]
    fn star_swap_unreachable() {
        let t = Tree::from_edges(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        let r = oracle_shortest(&t, &TokenSet::new([1, 2]), &TokenSet::new([1, 3]), Limits::default());
        assert_eq!(r, Ok(None));
        let reach = ReachableSets::explore(&t, &TokenSet::new([1, 2, 3]), Limits::default()).unwrap();
        assert_eq!(reach.state_count(), 1);
    }

    #[test]
    fn resource_limit_is_an_error() {
        let g = spider_from_leg_lengths(&[3, 3, 3]).unwrap();
        let r = oracle_shortest(g.tree(), &TokenSet::new([3, 6]), &TokenSet::new([9, 2]), Limits { max_states: 3 });
        assert_eq!(r, Err(OracleError::ResourceExceeded(3)));
    }

    #[test]
    fn token_move_oracle() {
        let t = Tree::from_edges(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        assert_eq!(oracle_token_move(&t, &TokenSet::new([0]), 0, 1, Limits::default()), Ok(Some(1)));
        assert_eq!(oracle_token_move(&t, &TokenSet::new([0, 2]), 0, 1, Limits::default()), Ok(Some(2)));
        let t3 = Tree::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(oracle_token_move(&t3, &TokenSet::new([0, 2]), 0, 1, Limits::default()), Ok(None));
    }

    #[test]
    fn state_keys_are_canonical() {
        assert_eq!(StateKey::encode(&[3, 1], 10), StateKey::encode(&[1, 3], 10));
        assert_eq!(StateKey::encode(&[70, 1], 100), StateKey::encode(&[1, 70], 100));
        assert_ne!(StateKey::encode(&[1, 2], 10), StateKey::encode(&[1, 3], 10));
        assert_eq!(StateKey::encode(&[5, 2], 100).members(), vec![2, 5]);
    }

    #[test]
    fn exhaustive_family_is_finite_and_independent() {
        let shape = ShapeSpec::new(3, 2, 2);
        let all: Vec<_> = enumerate_exhaustive(shape).collect();
        assert!(!all.is_empty());
        for inst in &all {
            assert!(inst.spider.tree().is_independent(&inst.i));
            assert!(inst.spider.tree().is_independent(&inst.j));
            assert_eq!(inst.i.len(), inst.j.len());
        }
        assert_eq!(all.len(), enumerate_exhaustive(shape).count());
    }

    #[test]
    fn sampling_is_reproducible() {
        let shape = ShapeSpec::new(4, 4, 4).with_max_vertices(13);
        let a: Vec<_> = sample_instances(shape, 7).take(50).collect();
        let b: Vec<_> = sample_instances(shape, 7).take(50).collect();
        assert_eq!(a, b);
        for inst in &a {
            assert!(inst.spider.vertex_count() <= 13);
            assert!(inst.spider.tree().is_independent(&inst.i));
            assert!(inst.spider.tree().is_independent(&inst.j));
            assert_eq!(inst.i.len(), inst.j.len());
        }
    }
}

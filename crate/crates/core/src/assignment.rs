//! Leg relabeling, the per-leg token partition and the greedy target
//! assignment whose total distance is the minimum over all bijections.

use std::cmp::Reverse;

use crate::graph::{GraphError, SpiderGraph, TokenSet, Vertex};

/// Legs (discovery indices) sorted ascending by `|I ∩ L| - |J ∩ L|`, stable.
/// The body is not counted here.
pub fn relabel_legs(g: &SpiderGraph, i: &TokenSet, j: &TokenSet) -> Vec<usize> {
    let mut surplus = vec![0isize; g.leg_count()];
    for x in i.iter() {
        if let Some(l) = g.leg_of(x) {
            surplus[l] += 1;
        }
    }
    for y in j.iter() {
        if let Some(l) = g.leg_of(y) {
            surplus[l] -= 1;
        }
    }
    let mut order: Vec<usize> = (0..g.leg_count()).collect();
    order.sort_by_key(|&l| surplus[l]);
    order
}

/// Bijection `f: I -> J` together with the order in which pairs were fixed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetAssignment {
    forward: Vec<Option<Vertex>>,
    inverse: Vec<Option<Vertex>>,
    order: Vec<Vertex>,
    /// Discovery indices in relabeled order; `legs[0]` is `L1`.
    legs: Vec<usize>,
    body: Vertex,
    leg_of: Vec<Option<usize>>,
    total: usize,
}

impl TargetAssignment {
    pub fn target(&self, w: Vertex) -> Option<Vertex> {
        self.forward.get(w).copied().flatten()
    }

    pub fn source(&self, y: Vertex) -> Option<Vertex> {
        self.inverse.get(y).copied().flatten()
    }

    /// `I` by assignment time.
    pub fn order(&self) -> &[Vertex] {
        &self.order
    }

    pub fn pairs(&self) -> impl Iterator<Item = (Vertex, Vertex)> + '_ {
        self.order.iter().map(|&w| (w, self.forward[w].expect("assigned")))
    }

    /// Legs in relabeled order, as discovery indices.
    pub fn leg_order(&self) -> &[usize] {
        &self.legs
    }

    /// Sum of `dist(w, f(w))`.
    pub fn total_distance(&self) -> usize {
        self.total
    }

    /// Leg whose `I_L` / `J_L` holds `x`; the body belongs to `L1`.
    pub fn home_leg(&self, x: Vertex) -> usize {
        if x == self.body {
            self.legs[0]
        } else {
            self.leg_of[x].expect("non-body vertex lies on a leg")
        }
    }

    /// `w ∈ I_L¹`: the target lies outside the leg holding `w`.
    pub fn leaves_leg(&self, w: Vertex) -> bool {
        let y = self.target(w).expect("w is a source");
        self.home_leg(w) != self.home_leg(y)
    }
}

/// Per-leg sets `I_L`, `J_L` and the split `I_L¹` (targets outside) /
/// `I_L²` (targets inside), indexed by discovery order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LegPartition {
    pub i: Vec<Vec<Vertex>>,
    pub j: Vec<Vec<Vertex>>,
    pub outbound: Vec<Vec<Vertex>>,
    pub inbound: Vec<Vec<Vertex>>,
}

impl LegPartition {
    pub fn new(f: &TargetAssignment, i: &TokenSet, j: &TokenSet) -> Self {
        let d = f.legs.len();
        let mut p = LegPartition { i: vec![vec![]; d], j: vec![vec![]; d], outbound: vec![vec![]; d], inbound: vec![vec![]; d] };
        for w in i.iter() {
            let l = f.home_leg(w);
            p.i[l].push(w);
            if f.leaves_leg(w) {
                p.outbound[l].push(w);
            } else {
                p.inbound[l].push(w);
            }
        }
        for y in j.iter() {
            p.j[f.home_leg(y)].push(y);
        }
        p
    }

    pub fn is_balanced(&self) -> bool {
        self.i.iter().zip(&self.j).all(|(a, b)| a.len() == b.len())
    }
}

/// Greedy assignment: within each leg pair farthest with farthest, then pair
/// the closest leftover source with the farthest leftover target.
pub fn target_assignment(g: &SpiderGraph, i: &TokenSet, j: &TokenSet) -> Result<TargetAssignment, GraphError> {
    if i.len() != j.len() {
        return Err(GraphError::SizeMismatch(i.len(), j.len()));
    }
    let n = g.vertex_count();
    if let Some(x) = i.iter().chain(j.iter()).find(|&x| x >= n) {
        return Err(GraphError::InvalidVertex(x));
    }
    let legs = relabel_legs(g, i, j);
    let mut rank = vec![0; legs.len()];
    for (r, &l) in legs.iter().enumerate() {
        rank[l] = r;
    }
    let body = g.body();
    let home = |x: Vertex| if x == body { legs[0] } else { g.leg_of(x).expect("on a leg") };

    // per leg, deepest first
    let split = |s: &TokenSet| {
        let mut per_leg = vec![Vec::new(); legs.len()];
        for x in s.iter() {
            per_leg[home(x)].push(x);
        }
        for members in &mut per_leg {
            members.sort_by_key(|&x| Reverse(g.depth(x)));
        }
        per_leg
    };
    let mut i_legs = split(i);
    let mut j_legs = split(j);

    let mut forward = vec![None; n];
    let mut inverse = vec![None; n];
    let mut order = Vec::with_capacity(i.len());
    let mut total = 0;
    let mut assign = |x: Vertex, y: Vertex, order: &mut Vec<Vertex>| {
        forward[x] = Some(y);
        inverse[y] = Some(x);
        order.push(x);
        total += g.dist(x, y);
    };

    for &l in &legs {
        let k = i_legs[l].len().min(j_legs[l].len());
        for (&x, &y) in i_legs[l][..k].iter().zip(&j_legs[l][..k]) {
            assign(x, y, &mut order);
        }
        i_legs[l].drain(..k);
        j_legs[l].drain(..k);
    }

    let mut rest_i: Vec<Vertex> = i_legs.into_iter().flatten().collect();
    let mut rest_j: Vec<Vertex> = j_legs.into_iter().flatten().collect();
    rest_i.sort_by_key(|&x| (g.depth(x), rank[home(x)], x));
    rest_j.sort_by_key(|&y| (Reverse(g.depth(y)), rank[home(y)], y));
    for (x, y) in rest_i.into_iter().zip(rest_j) {
        assign(x, y, &mut order);
    }

    let leg_of = (0..n).map(|x| g.leg_of(x)).collect();
    Ok(TargetAssignment { forward, inverse, order, legs, body, leg_of, total })
}

/// Minimum over all bijections of the summed token distances.
pub fn mstar(g: &SpiderGraph, i: &TokenSet, j: &TokenSet) -> Result<usize, GraphError> {
    Ok(target_assignment(g, i, j)?.total_distance())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{independent_sets, spider_from_leg_lengths};

    // body 0; a = 1,2; b = 3,4; c = 5,6
    fn three_legs() -> SpiderGraph {
        spider_from_leg_lengths(&[2, 2, 2]).unwrap()
    }

    fn brute_force(g: &SpiderGraph, i: &TokenSet, j: &TokenSet) -> usize {
        fn rec(g: &SpiderGraph, src: &[Vertex], dst: &mut Vec<Vertex>, k: usize) -> usize {
            if k == src.len() {
                return 0;
            }
            let mut best = usize::MAX;
            for t in k..dst.len() {
                dst.swap(k, t);
                best = best.min(g.dist(src[k], dst[k]) + rec(g, src, dst, k + 1));
                dst.swap(k, t);
            }
            best
        }
        rec(g, i.as_slice(), &mut j.as_slice().to_vec(), 0)
    }

    #[test]
    fn relabel_examples() {
        let g = three_legs();
        let e = TokenSet::default();
        assert_eq!(relabel_legs(&g, &e, &e), vec![0, 1, 2]);
        // I on leg a, J on leg c
        assert_eq!(relabel_legs(&g, &TokenSet::new([2]), &TokenSet::new([6])), vec![2, 1, 0]);
        // surpluses (+1, -1, 0)
        assert_eq!(relabel_legs(&g, &TokenSet::new([2, 6]), &TokenSet::new([4, 6])), vec![1, 2, 0]);
    }

    #[test]
    fn identity() {
        let g = three_legs();
        let s = TokenSet::new([0, 2, 4, 6]);
        let f = target_assignment(&g, &s, &s).unwrap();
        assert!(s.iter().all(|x| f.target(x) == Some(x)));
        assert_eq!(f.total_distance(), 0);
    }

    #[test]
    fn small_examples() {
        let g = three_legs();
        let f = target_assignment(&g, &TokenSet::new([2, 3]), &TokenSet::new([2, 5])).unwrap();
        assert_eq!((f.target(2), f.target(3)), (Some(2), Some(5)));
        assert_eq!(f.total_distance(), 2);
        let f = target_assignment(&g, &TokenSet::new([1, 4]), &TokenSet::new([1, 6])).unwrap();
        assert_eq!((f.target(1), f.target(4)), (Some(1), Some(6)));
        assert_eq!(f.total_distance(), 4);
        assert_eq!(f.source(6), Some(4));
        assert!(f.leaves_leg(4));
        assert!(!f.leaves_leg(1));
    }

    #[test]
    fn body_token_belongs_to_first_leg() {
        let g = three_legs();
        // surpluses: a +1, b -1 -> L1 = b, body counted with b
        let (i, j) = (TokenSet::new([0, 2]), TokenSet::new([0, 4]));
        let f = target_assignment(&g, &i, &j).unwrap();
        assert_eq!(f.leg_order()[0], 1);
        assert_eq!(f.home_leg(0), 1);
        let p = LegPartition::new(&f, &i, &j);
        assert_eq!(p.i[1], vec![0]);
        assert_eq!(p.j[1], vec![0, 4]);
        assert_eq!(f.total_distance(), brute_force(&g, &i, &j));
    }

    #[test]
    fn size_mismatch() {
        let g = three_legs();
        assert_eq!(
            target_assignment(&g, &TokenSet::new([1]), &TokenSet::new([1, 4])),
            Err(GraphError::SizeMismatch(1, 2))
        );
    }

    #[test]
    fn matches_brute_force_exhaustively() {
        for lengths in [[1, 2, 3], [3, 3, 3], [2, 2, 2]] {
            let g = spider_from_leg_lengths(&lengths).unwrap();
            for k in 1..=3 {
                let sets = independent_sets(g.tree(), k);
                for i in &sets {
                    for j in &sets {
                        let f = target_assignment(&g, i, j).unwrap();
                        assert_eq!(f.total_distance(), brute_force(&g, i, j), "{g} {i} {j}");
                        assert_eq!(mstar(&g, j, i).unwrap(), f.total_distance());
                        for w in i.iter() {
                            assert_eq!(f.source(f.target(w).unwrap()), Some(w));
                        }
                        let p = LegPartition::new(&f, i, j);
                        for l in 0..g.leg_count() {
                            assert_eq!(p.outbound[l].len() + p.inbound[l].len(), p.i[l].len());
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn exchange_inequality() {
        let g = spider_from_leg_lengths(&[3, 2, 3, 1]).unwrap();
        for k in 2..=3 {
            let sets = independent_sets(g.tree(), k);
            for i in &sets {
                for j in &sets {
                    let f = target_assignment(&g, i, j).unwrap();
                    let ord = f.order();
                    for a in 0..ord.len() {
                        for b in a + 1..ord.len() {
                            for c in a + 1..ord.len() {
                                let (wi, wj, wp) = (ord[a], ord[b], ord[c]);
                                let (fi, fp) = (f.target(wi).unwrap(), f.target(wp).unwrap());
                                assert!(g.dist(wi, fp) + g.dist(wj, fi) >= g.dist(wi, fi) + g.dist(wj, fp));
                            }
                        }
                    }
                }
            }
        }
    }
}

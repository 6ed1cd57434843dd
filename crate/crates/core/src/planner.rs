//! Shortest reconfiguration on spiders: case dispatch, the constructions for
//! each case, and the decomposition around rigid tokens.

use std::fmt;

use thiserror::Error;

use crate::assignment::{target_assignment, LegPartition, TargetAssignment};
use crate::feasibility::{
    classify, extract_move_sequence, free_components, rigid_tokens, FeasibilityError, Reconfigurability,
};
use crate::graph::{GraphError, Move, SlideSequence, SlideViolation, SpiderGraph, TokenSet, Tree, Vertex};
use crate::ordering::{token_ordering, OrderingError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Feasibility(#[from] FeasibilityError),
    #[error(transparent)]
    Ordering(#[from] OrderingError),
    #[error("{stage} produced an illegal slide: {violation}")]
    ConstructionFailed { stage: &'static str, violation: SlideViolation },
    #[error("{stage} ended at {reached} instead of {expected}")]
    WrongEndpoint { stage: &'static str, reached: TokenSet, expected: TokenSet },
    #[error("{0}")]
    PreconditionViolated(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaseTag {
    Balanced,
    Case1,
    Case2Plain,
    Case2ForcedDetour,
    Case3,
}

impl CaseTag {
    pub const ALL: [CaseTag; 5] =
        [CaseTag::Balanced, CaseTag::Case1, CaseTag::Case2Plain, CaseTag::Case2ForcedDetour, CaseTag::Case3];

    pub fn as_str(self) -> &'static str {
        match self {
            CaseTag::Balanced => "balanced",
            CaseTag::Case1 => "case1",
            CaseTag::Case2Plain => "case2_plain",
            CaseTag::Case2ForcedDetour => "case2_forced_detour",
            CaseTag::Case3 => "case3",
        }
    }
}

impl fmt::Display for CaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveReport {
    pub sequence: SlideSequence,
    pub length: usize,
    pub mstar: usize,
    /// Detours actually made by `sequence`.
    pub detours: usize,
    /// Detours predicted by the construction, from the auxiliary graphs.
    pub predicted_detours: usize,
    pub case_tag: Option<CaseTag>,
    pub feasible: bool,
    pub verdict: Reconfigurability,
}

/// A construction for one spider instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plan {
    pub sequence: SlideSequence,
    pub predicted_detours: usize,
    pub tag: CaseTag,
}

impl Plan {
    fn reversed(self) -> Plan {
        Plan { sequence: self.sequence.reverse(), ..self }
    }
}

/// Shortest sequence from `i` to `j`, or an infeasibility verdict.
pub fn solve(g: &SpiderGraph, i: &TokenSet, j: &TokenSet) -> Result<SolveReport, PlanError> {
    let tree = g.tree();
    let (verdict, rigid) = classify(tree, i, j)?;
    let mstar = target_assignment(g, i, j)?.total_distance();
    if !verdict.is_reconfigurable() {
        return Ok(SolveReport {
            sequence: SlideSequence::new(),
            length: 0,
            mstar,
            detours: 0,
            predicted_detours: 0,
            case_tag: None,
            feasible: false,
            verdict,
        });
    }
    let plan = if rigid.is_empty() { plan(g, i, j)? } else { plan_around_rigid(g, i, j, &rigid)? };
    check(tree, "solve", i, j, &plan.sequence)?;
    Ok(SolveReport {
        length: plan.sequence.len(),
        mstar,
        detours: plan.sequence.detour_count().total,
        predicted_detours: plan.predicted_detours,
        case_tag: Some(plan.tag),
        feasible: true,
        verdict,
        sequence: plan.sequence,
    })
}

fn check(tree: &Tree, stage: &'static str, from: &TokenSet, to: &TokenSet, seq: &SlideSequence) -> Result<(), PlanError> {
    let reached = tree.replay(from, seq).map_err(|violation| PlanError::ConstructionFailed { stage, violation })?;
    if &reached != to {
        return Err(PlanError::WrongEndpoint { stage, reached, expected: to.clone() });
    }
    Ok(())
}

/// Rigid tokens never move, so each component left after removing their
/// closed neighborhoods is solved on its own.
fn plan_around_rigid(g: &SpiderGraph, i: &TokenSet, j: &TokenSet, rigid: &TokenSet) -> Result<Plan, PlanError> {
    let tree = g.tree();
    let mut sequence = SlideSequence::new();
    let mut predicted = 0;
    let mut tag = None;
    for component in free_components(tree, rigid) {
        let local = |s: &TokenSet| -> TokenSet {
            s.iter().filter_map(|x| component.binary_search(&x).ok()).collect()
        };
        let (ci, cj) = (local(i), local(j));
        let (sub, old) = tree.induced(&component)?;
        let has_body = component.binary_search(&g.body()).is_ok();
        let part = match SpiderGraph::from_tree(sub.clone()) {
            Ok(spider) => {
                let p = plan(&spider, &ci, &cj)?;
                if has_body {
                    tag = Some(p.tag);
                }
                predicted += p.predicted_detours;
                p.sequence
            }
            Err(GraphError::NotASpider(_)) => path_plan(&sub, &ci, &cj)?,
            Err(e) => return Err(e.into()),
        };
        sequence.extend(part.iter().map(|m| Move::new(old[m.from], old[m.to])));
    }
    Ok(Plan { sequence, predicted_detours: predicted, tag: tag.unwrap_or(CaseTag::Balanced) })
}

/// Order-preserving matching on a path: right-movers from the right end,
/// then left-movers from the left end. No detours.
fn path_plan(tree: &Tree, i: &TokenSet, j: &TokenSet) -> Result<SlideSequence, PlanError> {
    let n = tree.vertex_count();
    if i.len() != j.len() {
        return Err(GraphError::SizeMismatch(i.len(), j.len()).into());
    }
    let Some(end) = (0..n).find(|&x| tree.degree(x) <= 1) else {
        return Err(PlanError::PreconditionViolated("component is not a path"));
    };
    let mut line = vec![end];
    let mut pos = vec![usize::MAX; n];
    pos[end] = 0;
    while let Some(&next) = tree.neighbors(*line.last().unwrap()).iter().find(|&&y| pos[y] == usize::MAX) {
        pos[next] = line.len();
        line.push(next);
    }
    if line.len() != n {
        return Err(PlanError::PreconditionViolated("component is not a path"));
    }
    let mut src: Vec<usize> = i.iter().map(|x| pos[x]).collect();
    let mut dst: Vec<usize> = j.iter().map(|x| pos[x]).collect();
    src.sort_unstable();
    dst.sort_unstable();
    let pairs: Vec<(usize, usize)> = src.into_iter().zip(dst).collect();
    let mut seq = SlideSequence::new();
    for &(a, b) in pairs.iter().rev().filter(|(a, b)| a < b) {
        seq.extend((a..b).map(|p| Move::new(line[p], line[p + 1])));
    }
    for &(a, b) in pairs.iter().filter(|(a, b)| a > b) {
        seq.extend((b + 1..=a).rev().map(|p| Move::new(line[p], line[p - 1])));
    }
    check(tree, "path", i, j, &seq)?;
    Ok(seq)
}

/// Walks every token of `movers` to its target, in the given order.
fn walk_all(g: &SpiderGraph, f: &TargetAssignment, movers: impl IntoIterator<Item = Vertex>) -> SlideSequence {
    movers.into_iter().flat_map(|w| g.walk(w, f.target(w).expect("source"))).collect()
}

fn body_neighbors(g: &SpiderGraph, s: &TokenSet) -> Vec<Vertex> {
    g.tree().neighbors(g.body()).iter().copied().filter(|&u| s.contains(u)).collect()
}

/// Shortest sequence on a spider without rigid tokens, for a reconfigurable pair.
pub fn plan(g: &SpiderGraph, i: &TokenSet, j: &TokenSet) -> Result<Plan, PlanError> {
    let f = target_assignment(g, i, j)?;
    let p = LegPartition::new(&f, i, j);
    let (ni, nj) = (body_neighbors(g, i), body_neighbors(g, j));
    let plan = if p.is_balanced() {
        in_order(g, &f, CaseTag::Balanced)?
    } else {
        match ni.len().max(nj.len()) {
            0 => in_order(g, &f, CaseTag::Case1)?,
            1 => case2(g, i, j, &f, &p, ni.first().copied(), nj.first().copied())?,
            _ => case3(g, i, j, &ni, &nj)?,
        }
    };
    check(g.tree(), plan.tag.as_str(), i, j, &plan.sequence)?;
    Ok(plan)
}

fn in_order(g: &SpiderGraph, f: &TargetAssignment, tag: CaseTag) -> Result<Plan, PlanError> {
    let order = token_ordering(g, f)?;
    Ok(Plan { sequence: walk_all(g, f, order), predicted_detours: 0, tag })
}

/// Moves `x` to its target after the tokens that must settle first: the
/// earlier tokens of its own leg, or every token of the target's leg.
fn settle_first(g: &SpiderGraph, f: &TargetAssignment, p: &LegPartition, x: Vertex) -> Result<SlideSequence, PlanError> {
    let order = token_ordering(g, f)?;
    let leg = f.home_leg(x);
    let target_leg = f.home_leg(f.target(x).expect("source"));
    let rx = order.iter().position(|&z| z == x).expect("ordered");
    let movers = order.iter().enumerate().filter(|&(r, &w)| {
        w == x || (target_leg == leg && r < rx && f.home_leg(w) == leg) || (target_leg != leg && p.i[target_leg].contains(&w))
    });
    Ok(walk_all(g, f, movers.map(|(_, &w)| w)))
}

fn case2(
    g: &SpiderGraph,
    i: &TokenSet,
    j: &TokenSet,
    f: &TargetAssignment,
    p: &LegPartition,
    x: Option<Vertex>,
    y: Option<Vertex>,
) -> Result<Plan, PlanError> {
    let v = g.body();
    let tree = g.tree();
    let (prefix, rest_i) = match (x, y) {
        (None, None) => return Err(PlanError::PreconditionViolated("no token next to the body")),
        (None, Some(_)) => return Ok(plan(g, j, i)?.reversed()),
        (Some(x), Some(y)) if x == y && p.i[f.home_leg(x)].len() == p.j[f.home_leg(x)].len() => {
            let (i2, j2) = (i.slid(x, v), j.slid(y, v));
            let inner = plan(g, &i2, &j2)?;
            let mut sequence = SlideSequence::new();
            sequence.push(Move::new(x, v));
            sequence.append(&inner.sequence);
            sequence.push(Move::new(v, y));
            return Ok(Plan {
                sequence,
                predicted_detours: inner.predicted_detours + 2,
                tag: CaseTag::Case2ForcedDetour,
            });
        }
        (Some(x), _y) => {
            let fx = f.target(x).expect("source");
            if fx == v {
                (SlideSequence::from_iter([Move::new(x, v)]), i.slid(x, v))
            } else {
                let prefix = settle_first(g, f, p, x)?;
                let reached = tree
                    .replay(i, &prefix)
                    .map_err(|violation| PlanError::ConstructionFailed { stage: "case2 clearing", violation })?;
                (prefix, reached)
            }
        }
    };
    let inner = plan(g, &rest_i, j)?;
    Ok(Plan {
        sequence: prefix.concat(&inner.sequence),
        predicted_detours: inner.predicted_detours,
        tag: CaseTag::Case2Plain,
    })
}

fn case3(g: &SpiderGraph, i: &TokenSet, j: &TokenSet, ni: &[Vertex], nj: &[Vertex]) -> Result<Plan, PlanError> {
    if ni.len() < 2 {
        debug_assert!(nj.len() >= 2);
        return Ok(plan(g, j, i)?.reversed());
    }
    let tree = g.tree();
    let aux = tree.auxiliary_graph(i, j)?;
    // a token stuck inside its own leg has to be the one left next to the body
    let stuck: Vec<usize> = (0..ni.len())
        .filter(|&k| {
            let leg = g.leg_of(ni[k]).expect("body neighbor lies on a leg");
            let local: TokenSet = g.legs()[leg]
                .iter()
                .enumerate()
                .filter(|&(_, &z)| i.contains(z))
                .map(|(d, _)| d)
                .collect();
            rigid_tokens(&g.leg_tree(leg), &local).contains(0)
        })
        .collect();
    let candidates: Vec<usize> = match stuck.len() {
        0 => (0..ni.len()).collect(),
        1 => stuck,
        _ => return Err(PlanError::PreconditionViolated("two body neighbors are rigid within their legs")),
    };
    let mut best: Option<Plan> = None;
    for keep in candidates {
        let mut clearing = SlideSequence::new();
        let mut current = i.clone();
        for (k, &w) in ni.iter().enumerate() {
            if k == keep {
                continue;
            }
            let outward = *tree
                .neighbors(w)
                .iter()
                .find(|&&z| z != g.body())
                .ok_or(PlanError::PreconditionViolated("body neighbor is a leaf"))?;
            let part = extract_move_sequence(tree, &current, w, outward)?;
            current = tree
                .replay(&current, &part)
                .map_err(|violation| PlanError::ConstructionFailed { stage: "case3 clearing", violation })?;
            clearing.append(&part);
        }
        let inner = plan(g, &current, j)?;
        let against = clearing.iter().filter(|m| aux.has_arc(m.to, m.from)).count();
        let candidate = Plan {
            sequence: clearing.concat(&inner.sequence),
            predicted_detours: inner.predicted_detours + 2 * against,
            tag: CaseTag::Case3,
        };
        if best.as_ref().is_none_or(|b| candidate.sequence.len() < b.sequence.len()) {
            best = Some(candidate);
        }
    }
    best.ok_or(PlanError::PreconditionViolated("no candidate"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::spider_from_leg_lengths;

    // body 0; a = 1,2; b = 3,4; c = 5,6
    fn three_legs() -> SpiderGraph {
        spider_from_leg_lengths(&[2, 2, 2]).unwrap()
    }

    fn solve_ok(g: &SpiderGraph, i: &[Vertex], j: &[Vertex]) -> SolveReport {
        let (i, j) = (TokenSet::new(i.iter().copied()), TokenSet::new(j.iter().copied()));
        let r = solve(g, &i, &j).unwrap();
        if r.feasible {
            assert_eq!(g.tree().replay(&i, &r.sequence), Ok(j));
        }
        r
    }

    #[test]
    fn identical_sets() {
        let r = solve_ok(&three_legs(), &[2, 4], &[2, 4]);
        assert_eq!((r.length, r.mstar, r.detours), (0, 0, 0));
        assert_eq!(r.case_tag, Some(CaseTag::Balanced));
    }

    #[test]
    fn through_the_body() {
        let r = solve_ok(&three_legs(), &[2, 3], &[2, 5]);
        assert_eq!(r.length, 2);
        assert_eq!(r.case_tag, Some(CaseTag::Case2Plain));
    }

    #[test]
    fn forced_detour() {
        let r = solve_ok(&three_legs(), &[1, 4], &[1, 6]);
        assert_eq!((r.length, r.mstar, r.detours, r.predicted_detours), (6, 4, 2, 2));
        assert_eq!(r.case_tag, Some(CaseTag::Case2ForcedDetour));
    }

    #[test]
    fn star_swap_is_infeasible() {
        let g = SpiderGraph::new(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        let r = solve_ok(&g, &[1, 2], &[1, 3]);
        assert!(!r.feasible);
        assert!(r.sequence.is_empty());
        assert_eq!(r.case_tag, None);
    }

    #[test]
    fn rigid_token_splits_the_instance() {
        // legs of length 1, 1, 4: a leaf token on a1 is rigid once b1 is taken too
        // body 0; a = 1; b = 2; c = 3..6
        let g = spider_from_leg_lengths(&[1, 1, 4]).unwrap();
        let r = solve_ok(&g, &[1, 2, 4], &[1, 2, 6]);
        assert!(r.feasible);
        assert_eq!(r.length, 2);
        assert_eq!(r.length, r.mstar + r.detours);
    }

    #[test]
    fn path_components_match_sorted_pairs() {
        let t = Tree::from_edges(7, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6)]).unwrap();
        let seq = path_plan(&t, &TokenSet::new([0, 3, 6]), &TokenSet::new([1, 4, 6])).unwrap();
        assert_eq!(seq.len(), 2);
        let seq = path_plan(&t, &TokenSet::new([2, 4]), &TokenSet::new([0, 6])).unwrap();
        assert_eq!(seq.len(), 4);
    }

    #[test]
    fn clearing_two_body_neighbors() {
        // body 0; a = 1,2; b = 3,4; c = 5,6,7
        let g = spider_from_leg_lengths(&[2, 2, 3]).unwrap();
        let r = solve_ok(&g, &[1, 3], &[6, 2]);
        assert_eq!(r.case_tag, Some(CaseTag::Case3));
        assert_eq!(r.predicted_detours, r.detours);
        assert_eq!(r.length, r.mstar + r.detours);
    }
}

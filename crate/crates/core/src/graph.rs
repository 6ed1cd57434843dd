//! Trees, spiders, token sets and slide sequences.
//!
//! Vertices are dense ids `0..n`. A [`Tree`] is the general host used by the
//! feasibility machinery and the exhaustive oracle; a [`SpiderGraph`] wraps a
//! tree with its body and leg decomposition so distances and paths become
//! constant-time lookups.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use thiserror::Error;

pub type Vertex = usize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("not a tree: {0}")]
    NotATree(String),
    #[error("not a spider: {0}")]
    NotASpider(String),
    #[error("vertex {0} out of range")]
    InvalidVertex(Vertex),
    #[error("{0} and {1} are not adjacent")]
    NotAnEdge(Vertex, Vertex),
    #[error("token sets differ in size ({0} vs {1})")]
    SizeMismatch(usize, usize),
    #[error("token set is not independent: {0} and {1} are adjacent")]
    NotIndependent(Vertex, Vertex),
}

/// An undirected tree stored as sorted adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tree {
    adj: Vec<Vec<Vertex>>,
}

impl Tree {
    pub fn from_edges(vertex_count: usize, edges: &[(Vertex, Vertex)]) -> Result<Self, GraphError> {
        if vertex_count == 0 {
            return Err(GraphError::NotATree("no vertices".into()));
        }
        if edges.len() != vertex_count - 1 {
            return Err(GraphError::NotATree(format!(
                "{} vertices need {} edges, got {}",
                vertex_count,
                vertex_count - 1,
                edges.len()
            )));
        }
        let mut adj = vec![Vec::new(); vertex_count];
        for &(u, v) in edges {
            for x in [u, v] {
                if x >= vertex_count {
                    return Err(GraphError::InvalidVertex(x));
                }
            }
            if u == v {
                return Err(GraphError::NotATree(format!("self-loop at {u}")));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
            if list.windows(2).any(|w| w[0] == w[1]) {
                return Err(GraphError::NotATree("parallel edges".into()));
            }
        }
        let tree = Tree { adj };
        let reached = tree.bfs_order(0).len();
        if reached != vertex_count {
            return Err(GraphError::NotATree(format!(
                "disconnected: {reached} of {vertex_count} vertices reachable from 0"
            )));
        }
        Ok(tree)
    }

    pub fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    pub fn neighbors(&self, x: Vertex) -> &[Vertex] {
        &self.adj[x]
    }

    pub fn degree(&self, x: Vertex) -> usize {
        self.adj[x].len()
    }

    pub fn are_adjacent(&self, x: Vertex, y: Vertex) -> bool {
        self.adj[x].binary_search(&y).is_ok()
    }

    pub fn edges(&self) -> impl Iterator<Item = (Vertex, Vertex)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().filter(move |&&w| u < w).map(move |&w| (u, w)))
    }

    fn check(&self, x: Vertex) -> Result<(), GraphError> {
        if x < self.adj.len() {
            Ok(())
        } else {
            Err(GraphError::InvalidVertex(x))
        }
    }

    /// Vertices in BFS order from `root` together with their parent pointers.
    fn bfs_order(&self, root: Vertex) -> Vec<(Vertex, Option<Vertex>)> {
        let mut seen = vec![false; self.adj.len()];
        let mut out = Vec::with_capacity(self.adj.len());
        let mut queue = VecDeque::new();
        seen[root] = true;
        queue.push_back((root, None));
        while let Some((x, parent)) = queue.pop_front() {
            out.push((x, parent));
            for &y in &self.adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    queue.push_back((y, Some(x)));
                }
            }
        }
        out
    }

    /// The unique `x`–`y` path, endpoints included.
    pub fn path(&self, x: Vertex, y: Vertex) -> Vec<Vertex> {
        let mut parent = vec![usize::MAX; self.adj.len()];
        for (z, p) in self.bfs_order(y) {
            parent[z] = p.unwrap_or(z);
        }
        let mut out = vec![x];
        let mut cur = x;
        while cur != y {
            cur = parent[cur];
            out.push(cur);
        }
        out
    }

    pub fn dist(&self, x: Vertex, y: Vertex) -> usize {
        self.path(x, y).len() - 1
    }

    /// Vertices of the subtree hanging below `y` when the tree is rooted at `x`.
    pub fn subtree_vertices(&self, x: Vertex, y: Vertex) -> Result<Vec<Vertex>, GraphError> {
        self.check(x)?;
        self.check(y)?;
        if !self.are_adjacent(x, y) {
            return Err(GraphError::NotAnEdge(x, y));
        }
        let mut out = vec![y];
        let mut stack = vec![(y, x)];
        while let Some((z, parent)) = stack.pop() {
            for &c in &self.adj[z] {
                if c != parent {
                    out.push(c);
                    stack.push((c, z));
                }
            }
        }
        Ok(out)
    }

    /// `|s ∩ V(T^x_y)|`.
    pub fn subtree_token_count(&self, x: Vertex, y: Vertex, s: &TokenSet) -> Result<usize, GraphError> {
        Ok(self
            .subtree_vertices(x, y)?
            .into_iter()
            .filter(|&z| s.contains(z))
            .count())
    }

    /// Returns the first adjacent pair of members, if any.
    pub fn independence_violation(&self, s: &TokenSet) -> Option<(Vertex, Vertex)> {
        s.iter()
            .find_map(|x| self.adj[x].iter().find(|&&y| y > x && s.contains(y)).map(|&y| (x, y)))
    }

    pub fn is_independent(&self, s: &TokenSet) -> bool {
        self.independence_violation(s).is_none()
    }

    /// Checks ids and independence.
    pub fn validate_tokens(&self, s: &TokenSet) -> Result<(), GraphError> {
        for x in s.iter() {
            self.check(x)?;
        }
        match self.independence_violation(s) {
            Some((x, y)) => Err(GraphError::NotIndependent(x, y)),
            None => Ok(()),
        }
    }

    /// Induced subgraph on `keep` (which must induce a tree), re-indexed densely.
    /// Returns the subtree and the map from new ids back to old ids.
    pub fn induced(&self, keep: &[Vertex]) -> Result<(Tree, Vec<Vertex>), GraphError> {
        let mut new_id = vec![usize::MAX; self.adj.len()];
        for (i, &x) in keep.iter().enumerate() {
            new_id[x] = i;
        }
        let edges: Vec<_> = keep
            .iter()
            .flat_map(|&x| {
                let new_id = &new_id;
                self.adj[x]
                    .iter()
                    .filter(move |&&y| x < y && new_id[y] != usize::MAX)
                    .map(move |&y| (new_id[x], new_id[y]))
            })
            .collect();
        Ok((Tree::from_edges(keep.len(), &edges)?, keep.to_vec()))
    }

    /// Replays `seq` from `start`, reporting the first illegal slide.
    pub fn replay(&self, start: &TokenSet, seq: &SlideSequence) -> Result<TokenSet, SlideViolation> {
        let n = self.adj.len();
        let mut occupied = vec![false; n];
        for x in start.iter() {
            if x >= n {
                return Err(SlideViolation { index: 0, kind: ViolationKind::VertexOutOfRange(x) });
            }
            occupied[x] = true;
        }
        for (index, mv) in seq.iter().enumerate() {
            let fail = |kind| Err(SlideViolation { index, kind });
            if mv.from >= n || mv.to >= n {
                return fail(ViolationKind::VertexOutOfRange(mv.from.max(mv.to)));
            }
            if !self.are_adjacent(mv.from, mv.to) {
                return fail(ViolationKind::NotAnEdge);
            }
            if !occupied[mv.from] {
                return fail(ViolationKind::EmptySource);
            }
            if occupied[mv.to] {
                return fail(ViolationKind::OccupiedTarget);
            }
            if let Some(&w) = self.adj[mv.to].iter().find(|&&w| w != mv.from && occupied[w]) {
                return fail(ViolationKind::AdjacentToken(w));
            }
            occupied[mv.from] = false;
            occupied[mv.to] = true;
        }
        Ok(TokenSet::from_sorted((0..n).filter(|&x| occupied[x]).collect()))
    }

    pub fn is_valid_sequence(&self, start: &TokenSet, seq: &SlideSequence) -> bool {
        self.replay(start, seq).is_ok()
    }

    /// Directed auxiliary graph: `(x, y)` is an arc iff `xy` is an edge and the
    /// side of `y` holds no more `i` tokens than `j` tokens.
    pub fn auxiliary_graph(&self, i: &TokenSet, j: &TokenSet) -> Result<AuxiliaryGraph, GraphError> {
        if i.len() != j.len() {
            return Err(GraphError::SizeMismatch(i.len(), j.len()));
        }
        let order = self.bfs_order(0);
        let mut count_i = vec![0usize; self.adj.len()];
        let mut count_j = vec![0usize; self.adj.len()];
        for &(x, parent) in order.iter().rev() {
            count_i[x] += usize::from(i.contains(x));
            count_j[x] += usize::from(j.contains(x));
            if let Some(p) = parent {
                count_i[p] += count_i[x];
                count_j[p] += count_j[x];
            }
        }
        let mut arcs = BTreeSet::new();
        for &(c, parent) in &order {
            let Some(p) = parent else { continue };
            // T^p_c is the subtree below c; T^c_p is its complement.
            if count_i[c] <= count_j[c] {
                arcs.insert((p, c));
            }
            if count_i[c] >= count_j[c] {
                arcs.insert((c, p));
            }
        }
        Ok(AuxiliaryGraph { arcs })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuxiliaryGraph {
    arcs: BTreeSet<(Vertex, Vertex)>,
}

impl AuxiliaryGraph {
    pub fn has_arc(&self, x: Vertex, y: Vertex) -> bool {
        self.arcs.contains(&(x, y))
    }

    pub fn arcs(&self) -> impl Iterator<Item = (Vertex, Vertex)> + '_ {
        self.arcs.iter().copied()
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }
}

/// A tree with exactly one vertex of degree at least three.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpiderGraph {
    tree: Tree,
    body: Vertex,
    legs: Vec<Vec<Vertex>>,
    leg_of: Vec<Option<usize>>,
    depth: Vec<usize>,
}

impl SpiderGraph {
    pub fn new(vertex_count: usize, edges: &[(Vertex, Vertex)]) -> Result<Self, GraphError> {
        Self::from_tree(Tree::from_edges(vertex_count, edges)?)
    }

    pub fn from_tree(tree: Tree) -> Result<Self, GraphError> {
        let hubs: Vec<Vertex> = (0..tree.vertex_count()).filter(|&x| tree.degree(x) >= 3).collect();
        let body = match hubs.as_slice() {
            [b] => *b,
            [] => return Err(GraphError::NotASpider("no vertex of degree >= 3".into())),
            _ => return Err(GraphError::NotASpider(format!("several vertices of degree >= 3: {hubs:?}"))),
        };
        let n = tree.vertex_count();
        let mut leg_of = vec![None; n];
        let mut depth = vec![0; n];
        let mut legs = Vec::with_capacity(tree.degree(body));
        for (index, &first) in tree.neighbors(body).iter().enumerate() {
            let mut leg = vec![first];
            let (mut prev, mut cur) = (body, first);
            loop {
                leg_of[cur] = Some(index);
                depth[cur] = leg.len();
                match tree.neighbors(cur).iter().find(|&&w| w != prev) {
                    Some(&next) => {
                        prev = cur;
                        cur = next;
                        leg.push(cur);
                    }
                    None => break,
                }
            }
            legs.push(leg);
        }
        Ok(SpiderGraph { tree, body, legs, leg_of, depth })
    }

    pub fn tree(&self) -> &Tree {
        &self.tree
    }

    pub fn vertex_count(&self) -> usize {
        self.tree.vertex_count()
    }

    pub fn body(&self) -> Vertex {
        self.body
    }

    /// Legs in discovery order: neighbors of the body by ascending id.
    pub fn legs(&self) -> &[Vec<Vertex>] {
        &self.legs
    }

    pub fn leg_count(&self) -> usize {
        self.legs.len()
    }

    /// Leg index of `x`, `None` for the body.
    pub fn leg_of(&self, x: Vertex) -> Option<usize> {
        self.leg_of[x]
    }

    /// Distance from the body.
    pub fn depth(&self, x: Vertex) -> usize {
        self.depth[x]
    }

    /// Vertex at `depth` (1-based) on `leg`.
    pub fn at(&self, leg: usize, depth: usize) -> Vertex {
        self.legs[leg][depth - 1]
    }

    pub fn dist(&self, x: Vertex, y: Vertex) -> usize {
        match (self.leg_of[x], self.leg_of[y]) {
            (Some(a), Some(b)) if a == b => self.depth[x].abs_diff(self.depth[y]),
            _ => self.depth[x] + self.depth[y],
        }
    }

    /// The unique `x`–`y` path, endpoints included.
    pub fn path(&self, x: Vertex, y: Vertex) -> Vec<Vertex> {
        let up = |z: Vertex| -> Vec<Vertex> {
            // z, its parent, ..., body
            match self.leg_of[z] {
                Some(leg) => {
                    let mut p: Vec<Vertex> = self.legs[leg][..self.depth[z]].iter().rev().copied().collect();
                    p.push(self.body);
                    p
                }
                None => vec![self.body],
            }
        };
        match (self.leg_of[x], self.leg_of[y]) {
            (Some(a), Some(b)) if a == b => {
                let (dx, dy) = (self.depth[x], self.depth[y]);
                let leg = &self.legs[a];
                if dx <= dy {
                    leg[dx - 1..dy].to_vec()
                } else {
                    leg[dy - 1..dx].iter().rev().copied().collect()
                }
            }
            _ => {
                let mut p = up(x);
                let mut q = up(y);
                q.pop();
                p.extend(q.into_iter().rev());
                p
            }
        }
    }

    /// The slides that walk a single token from `x` to `y` along the path.
    pub fn walk(&self, x: Vertex, y: Vertex) -> impl Iterator<Item = Move> {
        let p = self.path(x, y);
        (0..p.len().saturating_sub(1)).map(move |k| Move::new(p[k], p[k + 1]))
    }

    /// `N[P_xy]`, sorted.
    pub fn closed_path_neighborhood(&self, x: Vertex, y: Vertex) -> Vec<Vertex> {
        let mut out = Vec::new();
        for z in self.path(x, y) {
            out.push(z);
            out.extend_from_slice(self.tree.neighbors(z));
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// The leg `at(leg, 1..)` as a standalone path tree, re-indexed by depth − 1.
    pub fn leg_tree(&self, leg: usize) -> Tree {
        let len = self.legs[leg].len();
        let edges: Vec<_> = (1..len).map(|k| (k - 1, k)).collect();
        Tree::from_edges(len, &edges).expect("a leg is a path")
    }
}

impl fmt::Display for SpiderGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "spider(body={}, legs={:?})", self.body, self.legs)
    }
}

/// An independent set of token positions, kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct TokenSet(Vec<Vertex>);

impl TokenSet {
    pub fn new(members: impl IntoIterator<Item = Vertex>) -> Self {
        let mut v: Vec<Vertex> = members.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        TokenSet(v)
    }

    fn from_sorted(v: Vec<Vertex>) -> Self {
        TokenSet(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, x: Vertex) -> bool {
        self.0.binary_search(&x).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[Vertex] {
        &self.0
    }

    /// A copy with the token on `from` moved to `to`.
    pub fn slid(&self, from: Vertex, to: Vertex) -> TokenSet {
        TokenSet::new(self.iter().filter(|&x| x != from).chain([to]))
    }

    pub fn intersection_count(&self, other: &TokenSet) -> usize {
        self.iter().filter(|&x| other.contains(x)).count()
    }
}

impl FromIterator<Vertex> for TokenSet {
    fn from_iter<T: IntoIterator<Item = Vertex>>(iter: T) -> Self {
        TokenSet::new(iter)
    }
}

impl fmt::Display for TokenSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, x) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, "}}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Move {
    pub from: Vertex,
    pub to: Vertex,
}

impl Move {
    pub fn new(from: Vertex, to: Vertex) -> Self {
        Move { from, to }
    }

    pub fn reversed(self) -> Self {
        Move { from: self.to, to: self.from }
    }
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.from, self.to)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    VertexOutOfRange(Vertex),
    NotAnEdge,
    EmptySource,
    OccupiedTarget,
    /// The target is adjacent to another token, which sits on the given vertex.
    AdjacentToken(Vertex),
}

/// The first illegal slide found while replaying a sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("move {index} is illegal: {kind:?}")]
pub struct SlideViolation {
    pub index: usize,
    pub kind: ViolationKind,
}

/// Per-edge and total detour counts of a sequence.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DetourCount {
    /// Keyed by the edge with its smaller endpoint first; only edges with a
    /// nonzero count are present.
    pub per_edge: BTreeMap<(Vertex, Vertex), usize>,
    pub total: usize,
}

/// An ordered list of single-edge slides.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SlideSequence(Vec<Move>);

impl SlideSequence {
    pub fn new() -> Self {
        SlideSequence(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn push(&mut self, mv: Move) {
        self.0.push(mv);
    }

    pub fn iter(&self) -> impl Iterator<Item = Move> + '_ {
        self.0.iter().copied()
    }

    pub fn moves(&self) -> &[Move] {
        &self.0
    }

    pub fn append(&mut self, other: &SlideSequence) {
        self.0.extend_from_slice(&other.0);
    }

    pub fn reverse(&self) -> SlideSequence {
        SlideSequence(self.0.iter().rev().map(|m| m.reversed()).collect())
    }

    pub fn concat(&self, other: &SlideSequence) -> SlideSequence {
        let mut out = self.clone();
        out.append(other);
        out
    }

    /// Twice the smaller of the two traversal counts, per edge.
    pub fn detour_count(&self) -> DetourCount {
        let mut counts: HashMap<(Vertex, Vertex), (usize, usize)> = HashMap::new();
        for m in &self.0 {
            if m.from < m.to {
                counts.entry((m.from, m.to)).or_default().0 += 1;
            } else {
                counts.entry((m.to, m.from)).or_default().1 += 1;
            }
        }
        let mut out = DetourCount::default();
        for (edge, (fwd, back)) in counts {
            let d = 2 * fwd.min(back);
            if d > 0 {
                out.per_edge.insert(edge, d);
                out.total += d;
            }
        }
        out
    }
}

impl FromIterator<Move> for SlideSequence {
    fn from_iter<T: IntoIterator<Item = Move>>(iter: T) -> Self {
        SlideSequence(iter.into_iter().collect())
    }
}

impl Extend<Move> for SlideSequence {
    fn extend<T: IntoIterator<Item = Move>>(&mut self, iter: T) {
        self.0.extend(iter)
    }
}

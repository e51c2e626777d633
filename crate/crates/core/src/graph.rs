//! Stable graphs: the combinatorial skeletons of degenerating curves.
//!
//! A graph here is a finite connected multigraph with *tails* (numbered legs
//! attached to vertices).  Every edge carries a chosen orientation; the
//! oriented halves ("branches") are what parameters and residues attach to.
//! The reverse of the positive orientation `e` is written `-e`, and a
//! branch's *terminal* vertex is the vertex it points into.
//!
//! Stability (each vertex meets at least three branches, tails included,
//! loops counted twice) makes every vertex a sphere with three or more
//! special points.  The module also carries the two moves that connect
//! graphs of equal type: splitting a vertex along two chosen branches, and
//! contracting a non-loop edge.

use crate::error::GraphError;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

/// An oriented edge: the positive half is the edge as given, the negative
/// half points the other way.  Rendered as `e` / `-e`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OEdge {
    pub edge: String,
    pub positive: bool,
}

impl OEdge {
    pub fn pos(edge: impl Into<String>) -> Self {
        OEdge {
            edge: edge.into(),
            positive: true,
        }
    }

    pub fn neg(edge: impl Into<String>) -> Self {
        OEdge {
            edge: edge.into(),
            positive: false,
        }
    }

    pub fn reversed(&self) -> Self {
        OEdge {
            edge: self.edge.clone(),
            positive: !self.positive,
        }
    }

    /// `e` for the positive half, `-e` for the negative one.
    pub fn id(&self) -> String {
        if self.positive {
            self.edge.clone()
        } else {
            format!("-{}", self.edge)
        }
    }
}

impl fmt::Display for OEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.id())
    }
}

/// Either half-edge or tail: everything that ends at a vertex.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Branch {
    Edge(OEdge),
    Tail(String),
}

impl Branch {
    pub fn id(&self) -> String {
        match self {
            Branch::Edge(oe) => oe.id(),
            Branch::Tail(t) => t.clone(),
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.id())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub id: String,
    pub from: String,
    pub to: String,
}

impl Edge {
    pub fn is_loop(&self) -> bool {
        self.from == self.to
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tail {
    pub id: String,
    pub vertex: String,
    pub nu: usize,
}

/// A connected multigraph with oriented edges, numbered tails, and a set of
/// branches designated as sitting at infinity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StableGraph {
    vertices: BTreeSet<String>,
    edges: BTreeMap<String, Edge>,
    tails: BTreeMap<String, Tail>,
    infinity: BTreeSet<String>,
}

/// On-disk form.  Orientation convention: `from` is the initial vertex of
/// the positive half, `to` its terminal vertex.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphData {
    pub vertices: Vec<String>,
    pub edges: Vec<EdgeData>,
    pub tails: Vec<TailData>,
    #[serde(default)]
    pub infinity: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeData {
    pub id: String,
    pub from: String,
    pub to: String,
    #[serde(rename = "loop", default)]
    pub is_loop: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailData {
    pub id: String,
    pub vertex: String,
    pub nu: usize,
}

impl StableGraph {
    pub fn from_parts(
        vertices: impl IntoIterator<Item = String>,
        edges: impl IntoIterator<Item = Edge>,
        tails: impl IntoIterator<Item = Tail>,
        infinity: impl IntoIterator<Item = String>,
    ) -> Result<Self, GraphError> {
        let vertices: BTreeSet<String> = vertices.into_iter().collect();
        let mut edge_map = BTreeMap::new();
        let mut tail_map = BTreeMap::new();
        for e in edges {
            if e.id.starts_with('-') {
                return Err(GraphError::Malformed(format!(
                    "edge id `{}` may not start with `-` (reserved for orientation)",
                    e.id
                )));
            }
            if !vertices.contains(&e.from) {
                return Err(GraphError::UnknownVertex(e.from));
            }
            if !vertices.contains(&e.to) {
                return Err(GraphError::UnknownVertex(e.to));
            }
            if edge_map.insert(e.id.clone(), e.clone()).is_some() {
                return Err(GraphError::Malformed(format!("duplicate edge id `{}`", e.id)));
            }
        }
        for t in tails {
            if t.id.starts_with('-') {
                return Err(GraphError::Malformed(format!(
                    "tail id `{}` may not start with `-`",
                    t.id
                )));
            }
            if !vertices.contains(&t.vertex) {
                return Err(GraphError::UnknownVertex(t.vertex));
            }
            if edge_map.contains_key(&t.id) {
                return Err(GraphError::Malformed(format!(
                    "id `{}` used for both an edge and a tail",
                    t.id
                )));
            }
            if tail_map.insert(t.id.clone(), t.clone()).is_some() {
                return Err(GraphError::Malformed(format!("duplicate tail id `{}`", t.id)));
            }
        }
        let graph = StableGraph {
            vertices,
            edges: edge_map,
            tails: tail_map,
            infinity: BTreeSet::new(),
        };
        let mut infinity_set = BTreeSet::new();
        for id in infinity {
            graph.branch(&id)?; // must resolve to an existing branch
            infinity_set.insert(id);
        }
        Ok(StableGraph {
            infinity: infinity_set,
            ..graph
        })
    }

    pub fn from_data(data: &GraphData) -> Result<Self, GraphError> {
        for e in &data.edges {
            if e.is_loop != (e.from == e.to) {
                return Err(GraphError::Malformed(format!(
                    "edge `{}`: loop flag disagrees with endpoints",
                    e.id
                )));
            }
        }
        StableGraph::from_parts(
            data.vertices.iter().cloned(),
            data.edges.iter().map(|e| Edge {
                id: e.id.clone(),
                from: e.from.clone(),
                to: e.to.clone(),
            }),
            data.tails.iter().map(|t| Tail {
                id: t.id.clone(),
                vertex: t.vertex.clone(),
                nu: t.nu,
            }),
            data.infinity.iter().cloned(),
        )
    }

    pub fn from_json(json: &str) -> Result<Self, GraphError> {
        let data: GraphData =
            serde_json::from_str(json).map_err(|e| GraphError::Malformed(e.to_string()))?;
        StableGraph::from_data(&data)
    }

    pub fn to_data(&self) -> GraphData {
        GraphData {
            vertices: self.vertices.iter().cloned().collect(),
            edges: self
                .edges
                .values()
                .map(|e| EdgeData {
                    id: e.id.clone(),
                    from: e.from.clone(),
                    to: e.to.clone(),
                    is_loop: e.is_loop(),
                })
                .collect(),
            tails: self
                .tails
                .values()
                .map(|t| TailData {
                    id: t.id.clone(),
                    vertex: t.vertex.clone(),
                    nu: t.nu,
                })
                .collect(),
            infinity: self.infinity.iter().cloned().collect(),
        }
    }

    pub fn vertices(&self) -> impl Iterator<Item = &String> {
        self.vertices.iter()
    }

    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.values()
    }

    pub fn tails(&self) -> impl Iterator<Item = &Tail> {
        self.tails.values()
    }

    pub fn infinity(&self) -> &BTreeSet<String> {
        &self.infinity
    }

    pub fn has_vertex(&self, v: &str) -> bool {
        self.vertices.contains(v)
    }

    pub fn edge(&self, id: &str) -> Result<&Edge, GraphError> {
        self.edges
            .get(id)
            .ok_or_else(|| GraphError::UnknownEdge(id.to_string()))
    }

    pub fn tail(&self, id: &str) -> Result<&Tail, GraphError> {
        self.tails
            .get(id)
            .ok_or_else(|| GraphError::UnknownTail(id.to_string()))
    }

    /// Resolves a branch id: `e`, `-e`, or a tail id.
    pub fn branch(&self, id: &str) -> Result<Branch, GraphError> {
        if let Some(rest) = id.strip_prefix('-') {
            if self.edges.contains_key(rest) {
                return Ok(Branch::Edge(OEdge::neg(rest)));
            }
        } else if self.edges.contains_key(id) {
            return Ok(Branch::Edge(OEdge::pos(id)));
        } else if self.tails.contains_key(id) {
            return Ok(Branch::Tail(id.to_string()));
        }
        Err(GraphError::UnknownBranch(id.to_string()))
    }

    /// Terminal vertex of an oriented edge (the vertex it points into).
    pub fn terminal(&self, oe: &OEdge) -> Result<&String, GraphError> {
        let e = self.edge(&oe.edge)?;
        Ok(if oe.positive { &e.to } else { &e.from })
    }

    /// Initial vertex of an oriented edge.
    pub fn initial(&self, oe: &OEdge) -> Result<&String, GraphError> {
        self.terminal(&oe.reversed())
    }

    pub fn branch_vertex(&self, b: &Branch) -> Result<&String, GraphError> {
        match b {
            Branch::Edge(oe) => self.terminal(oe),
            Branch::Tail(t) => Ok(&self.tail(t)?.vertex),
        }
    }

    /// All branches ending at `v`, in id order.  A loop contributes both of
    /// its halves.
    pub fn star(&self, v: &str) -> Vec<Branch> {
        let mut out = Vec::new();
        for e in self.edges.values() {
            if e.to == v {
                out.push(Branch::Edge(OEdge::pos(&e.id)));
            }
            if e.from == v {
                out.push(Branch::Edge(OEdge::neg(&e.id)));
            }
        }
        for t in self.tails.values() {
            if t.vertex == v {
                out.push(Branch::Tail(t.id.clone()));
            }
        }
        out.sort_by_key(|b| b.id());
        out
    }

    pub fn is_connected(&self) -> bool {
        let Some(start) = self.vertices.iter().next() else {
            return false;
        };
        let mut seen = BTreeSet::from([start.clone()]);
        let mut queue = VecDeque::from([start.clone()]);
        while let Some(v) = queue.pop_front() {
            for e in self.edges.values() {
                for w in [&e.from, &e.to] {
                    if (e.from == v || e.to == v) && seen.insert(w.clone()) {
                        queue.push_back(w.clone());
                    }
                }
            }
        }
        seen.len() == self.vertices.len()
    }

    /// Structural health report: empty iff the graph is a stable graph.
    pub fn validate_stable(&self) -> Vec<String> {
        let mut violations = Vec::new();
        if !self.is_connected() {
            violations.push("not connected".to_string());
        }
        for v in &self.vertices {
            let k = self.star(v).len();
            if k < 3 {
                violations.push(format!("vertex `{v}` has {k} < 3 branches"));
            }
        }
        let mut nus: Vec<usize> = self.tails.values().map(|t| t.nu).collect();
        nus.sort_unstable();
        if nus != (1..=self.tails.len()).collect::<Vec<_>>() {
            violations.push(format!(
                "tail numbering {nus:?} is not a bijection onto 1..{}",
                self.tails.len()
            ));
        }
        for id in &self.infinity {
            if let Ok(Branch::Edge(oe)) = self.branch(id) {
                if self.infinity.contains(&oe.reversed().id()) && oe.positive {
                    violations.push(format!(
                        "infinity set contains both orientations of edge `{}`",
                        oe.edge
                    ));
                }
            }
        }
        let mut seats: BTreeMap<&String, Vec<&String>> = BTreeMap::new();
        for id in &self.infinity {
            if let Ok(b) = self.branch(id) {
                if let Ok(v) = self.branch_vertex(&b) {
                    seats.entry(v).or_default().push(id);
                }
            }
        }
        for (v, ids) in seats {
            if ids.len() > 1 {
                violations.push(format!(
                    "infinity members {ids:?} share terminal vertex `{v}`"
                ));
            }
        }
        violations
    }

    /// `(g, n)`: first Betti number and tail count.
    pub fn type_of(&self) -> Result<(usize, usize), GraphError> {
        if !self.is_connected() {
            return Err(GraphError::Disconnected);
        }
        let g = self.edges.len() + 1 - self.vertices.len();
        Ok((g, self.tails.len()))
    }

    /// The vertex carrying tail number 1, or the smallest vertex id if there
    /// are no tails.  Fixing this once makes generators and paths canonical.
    pub fn base_vertex(&self) -> String {
        self.tails
            .values()
            .find(|t| t.nu == 1)
            .map(|t| t.vertex.clone())
            .unwrap_or_else(|| self.vertices.iter().next().cloned().unwrap_or_default())
    }

    /// Deterministic maximal subtree: edges taken greedily in id order.
    pub fn maximal_subtree(&self) -> Result<BTreeSet<String>, GraphError> {
        if !self.is_connected() {
            return Err(GraphError::Disconnected);
        }
        let mut comp: BTreeMap<&String, usize> =
            self.vertices.iter().enumerate().map(|(i, v)| (v, i)).collect();
        let mut tree = BTreeSet::new();
        for e in self.edges.values() {
            let (a, b) = (comp[&e.from], comp[&e.to]);
            if a != b {
                tree.insert(e.id.clone());
                for c in comp.values_mut() {
                    if *c == b {
                        *c = a;
                    }
                }
            }
        }
        Ok(tree)
    }

    /// The unique reduced path from `from` to `to` inside the maximal
    /// subtree.
    pub fn tree_path(&self, from: &str, to: &str) -> Result<EdgePath, GraphError> {
        if !self.vertices.contains(from) {
            return Err(GraphError::UnknownVertex(from.to_string()));
        }
        if !self.vertices.contains(to) {
            return Err(GraphError::UnknownVertex(to.to_string()));
        }
        let tree = self.maximal_subtree()?;
        // BFS over tree edges; predecessor map gives the unique path.
        let mut pred: BTreeMap<String, OEdge> = BTreeMap::new();
        let mut seen = BTreeSet::from([from.to_string()]);
        let mut queue = VecDeque::from([from.to_string()]);
        while let Some(v) = queue.pop_front() {
            if v == to {
                break;
            }
            for id in &tree {
                let e = &self.edges[id];
                for oe in [OEdge::pos(id), OEdge::neg(id)] {
                    let (init, term) = if oe.positive {
                        (&e.from, &e.to)
                    } else {
                        (&e.to, &e.from)
                    };
                    if init == &v && seen.insert(term.clone()) {
                        pred.insert(term.clone(), oe);
                        queue.push_back(term.clone());
                    }
                }
            }
        }
        let mut path = Vec::new();
        let mut cur = to.to_string();
        while cur != from {
            let oe = pred
                .get(&cur)
                .ok_or(GraphError::Disconnected)?
                .clone();
            cur = self.initial(&oe)?.clone();
            path.push(oe);
        }
        path.reverse();
        Ok(EdgePath(path))
    }

    /// The unique tree path from the tail's vertex to `base`.
    pub fn tail_path(&self, tail: &str, base: &str) -> Result<EdgePath, GraphError> {
        let t = self.tail(tail)?;
        self.tree_path(&t.vertex.clone(), base)
    }

    /// One closed path per non-tree edge, in edge-id order: out along the
    /// tree, across the edge, back along the tree, then reduced.  These
    /// generate the fundamental group at `base` freely.
    pub fn fundamental_group_generators(&self, base: &str) -> Result<Vec<EdgePath>, GraphError> {
        if !self.vertices.contains(base) {
            return Err(GraphError::UnknownVertex(base.to_string()));
        }
        let tree = self.maximal_subtree()?;
        let mut out = Vec::new();
        for (id, _) in self.edges.iter().filter(|(id, _)| !tree.contains(*id)) {
            let oe = OEdge::pos(id);
            let head = self.tree_path(base, self.initial(&oe)?)?;
            let back = self.tree_path(self.terminal(&oe)?, base)?;
            let mut steps = head.0;
            steps.push(oe);
            steps.extend(back.0);
            out.push(EdgePath(steps).reduced());
        }
        Ok(out)
    }

    /// Splits `v0` into two vertices joined by a fresh edge: branches `h1`,
    /// `h2` stay at `v0` (together with the head of the new edge), all other
    /// branches move to the new vertex.
    pub fn split_vertex(
        &self,
        v0: &str,
        h1: &str,
        h2: &str,
    ) -> Result<(StableGraph, SplitRecord), GraphError> {
        let bail = |reason: &str| GraphError::BadSplit {
            vertex: v0.to_string(),
            reason: reason.to_string(),
        };
        if !self.vertices.contains(v0) {
            return Err(GraphError::UnknownVertex(v0.to_string()));
        }
        let star = self.star(v0);
        if star.len() < 4 {
            return Err(bail("vertex has fewer than 4 branches"));
        }
        let b1 = self.branch(h1)?;
        let b2 = self.branch(h2)?;
        if b1 == b2 {
            return Err(bail("the two branches coincide"));
        }
        if !star.contains(&b1) || !star.contains(&b2) {
            return Err(bail("branch is not incident to the vertex"));
        }

        let new_vertex = fresh_id("w", |c| self.vertices.contains(c));
        let new_edge = fresh_id("f", |c| {
            self.edges.contains_key(c) || self.tails.contains_key(c)
        });

        let mut vertices = self.vertices.clone();
        vertices.insert(new_vertex.clone());
        let mut edges = self.edges.clone();
        let mut tails = self.tails.clone();
        let mut moved = Vec::new();
        for b in &star {
            if b == &b1 || b == &b2 {
                continue;
            }
            moved.push(b.id());
            match b {
                Branch::Edge(oe) => {
                    let e = edges.get_mut(&oe.edge).expect("star edge exists");
                    if oe.positive {
                        e.to = new_vertex.clone();
                    } else {
                        e.from = new_vertex.clone();
                    }
                }
                Branch::Tail(t) => {
                    tails.get_mut(t).expect("star tail exists").vertex = new_vertex.clone();
                }
            }
        }
        edges.insert(
            new_edge.clone(),
            Edge {
                id: new_edge.clone(),
                from: new_vertex.clone(),
                to: v0.to_string(),
            },
        );
        let graph = StableGraph {
            vertices,
            edges,
            tails,
            infinity: self.infinity.clone(),
        };
        let record = SplitRecord {
            vertex: v0.to_string(),
            new_vertex,
            new_edge,
            kept: [h1.to_string(), h2.to_string()],
            moved,
        };
        Ok((graph, record))
    }

    /// Contracts a non-loop edge, merging its initial vertex into its
    /// terminal vertex.  Inverse of `split_vertex` (the new edge's terminal
    /// vertex is the original one, so the round trip restores the graph).
    pub fn contract_edge(&self, e: &str) -> Result<(StableGraph, ContractRecord), GraphError> {
        let edge = self.edge(e)?.clone();
        if edge.is_loop() {
            return Err(GraphError::BadContraction {
                edge: e.to_string(),
                reason: "edge is a loop".to_string(),
            });
        }
        let removed = edge.from.clone();
        let kept = edge.to.clone();
        let mut vertices = self.vertices.clone();
        vertices.remove(&removed);
        let mut edges = BTreeMap::new();
        for (id, other) in &self.edges {
            if id == e {
                continue;
            }
            let mut other = other.clone();
            if other.from == removed {
                other.from = kept.clone();
            }
            if other.to == removed {
                other.to = kept.clone();
            }
            edges.insert(id.clone(), other);
        }
        let mut tails = self.tails.clone();
        for t in tails.values_mut() {
            if t.vertex == removed {
                t.vertex = kept.clone();
            }
        }
        // Marks on the contracted edge's halves vanish with the edge.
        let mut infinity = self.infinity.clone();
        infinity.remove(e);
        infinity.remove(&format!("-{e}"));
        let graph = StableGraph {
            vertices,
            edges,
            tails,
            infinity,
        };
        let record = ContractRecord {
            edge: e.to_string(),
            removed_vertex: removed,
            merged_into: kept,
        };
        Ok((graph, record))
    }
}

/// What a split did: useful for undoing it and for transporting residue
/// assignments across the move.
#[derive(Debug, Clone)]
pub struct SplitRecord {
    pub vertex: String,
    pub new_vertex: String,
    pub new_edge: String,
    pub kept: [String; 2],
    pub moved: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct ContractRecord {
    pub edge: String,
    pub removed_vertex: String,
    pub merged_into: String,
}

fn fresh_id(prefix: &str, taken: impl Fn(&str) -> bool) -> String {
    if !taken(prefix) {
        return prefix.to_string();
    }
    (2..)
        .map(|k| format!("{prefix}{k}"))
        .find(|c| !taken(c))
        .unwrap()
}

/// A walk written as consecutive oriented edges; reduced when no step is
/// immediately undone.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct EdgePath(pub Vec<OEdge>);

impl EdgePath {
    pub fn empty() -> Self {
        EdgePath(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_reduced(&self) -> bool {
        self.0.windows(2).all(|w| w[1] != w[0].reversed())
    }

    /// Cancels adjacent inverse pairs until none remain.
    pub fn reduced(&self) -> EdgePath {
        let mut stack: Vec<OEdge> = Vec::with_capacity(self.0.len());
        for oe in &self.0 {
            if stack.last() == Some(&oe.reversed()) {
                stack.pop();
            } else {
                stack.push(oe.clone());
            }
        }
        EdgePath(stack)
    }

    pub fn inverse(&self) -> EdgePath {
        EdgePath(self.0.iter().rev().map(OEdge::reversed).collect())
    }

    pub fn concat(&self, other: &EdgePath) -> EdgePath {
        let mut steps = self.0.clone();
        steps.extend(other.0.iter().cloned());
        EdgePath(steps)
    }

    /// Checks each step exists and consecutive steps meet head-to-tail.
    pub fn validate(&self, graph: &StableGraph) -> Result<(), GraphError> {
        for (i, w) in self.0.windows(2).enumerate() {
            let head = graph.terminal(&w[0])?;
            let tail = graph.initial(&w[1])?;
            if head != tail {
                return Err(GraphError::BrokenPath {
                    position: i + 1,
                    detail: format!(
                        "step `{}` ends at `{head}` but step `{}` starts at `{tail}`",
                        w[0], w[1]
                    ),
                });
            }
        }
        if let Some(last) = self.0.last() {
            graph.terminal(last)?;
        }
        Ok(())
    }
}

impl fmt::Display for EdgePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        let ids: Vec<String> = self.0.iter().map(|oe| oe.id()).collect();
        write!(f, "{}", ids.join("."))
    }
}

/// Graph isomorphism preserving tails (matched by id and number) and edge
/// multiplicities; edge ids and orientations are anonymous.  Backtracking
/// over vertex assignments — fine at the scales this engine handles.
pub fn isomorphic(a: &StableGraph, b: &StableGraph) -> bool {
    if a.vertices.len() != b.vertices.len()
        || a.edges.len() != b.edges.len()
        || a.tails.len() != b.tails.len()
    {
        return false;
    }
    // Tails pin their vertices outright.
    let mut forced: BTreeMap<&String, &String> = BTreeMap::new();
    for (id, t) in &a.tails {
        match b.tails.get(id) {
            Some(s) if s.nu == t.nu => {
                if let Some(prev) = forced.insert(&t.vertex, &s.vertex) {
                    if prev != &s.vertex {
                        return false;
                    }
                }
            }
            _ => return false,
        }
    }
    let averts: Vec<&String> = a.vertices.iter().collect();
    let mut assign: BTreeMap<&String, &String> = forced.clone();
    let mut used: BTreeSet<&String> = forced.values().cloned().collect();

    fn pair_count(g: &StableGraph, u: &str, v: &str) -> usize {
        g.edges
            .values()
            .filter(|e| {
                (e.from == u && e.to == v) || (e.from == v && e.to == u)
            })
            .count()
    }

    fn consistent(a: &StableGraph, b: &StableGraph, assign: &BTreeMap<&String, &String>) -> bool {
        for (&u, &bu) in assign {
            for (&v, &bv) in assign {
                if pair_count(a, u, v) != pair_count(b, bu, bv) {
                    return false;
                }
            }
        }
        true
    }

    fn rec<'g>(
        a: &'g StableGraph,
        b: &'g StableGraph,
        averts: &[&'g String],
        i: usize,
        assign: &mut BTreeMap<&'g String, &'g String>,
        used: &mut BTreeSet<&'g String>,
    ) -> bool {
        if i == averts.len() {
            return consistent(a, b, assign);
        }
        let u = averts[i];
        if assign.contains_key(u) {
            return rec(a, b, averts, i + 1, assign, used);
        }
        for w in b.vertices.iter() {
            if used.contains(w) {
                continue;
            }
            if a.star(u).len() != b.star(w).len() {
                continue;
            }
            assign.insert(u, w);
            used.insert(w);
            if consistent(a, b, assign) && rec(a, b, averts, i + 1, assign, used) {
                return true;
            }
            assign.remove(u);
            used.remove(w);
        }
        false
    }

    if !used.is_subset(&b.vertices.iter().collect()) {
        return false;
    }
    rec(a, b, &averts, 0, &mut assign, &mut used)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(json: &str) -> StableGraph {
        StableGraph::from_json(json).unwrap()
    }

    /// One vertex, one loop, one tail — the smallest stable graph.
    fn loop_with_tail() -> StableGraph {
        graph(
            r#"{"vertices":["v"],
                "edges":[{"id":"l","from":"v","to":"v","loop":true}],
                "tails":[{"id":"t","vertex":"v","nu":1}],
                "infinity":[]}"#,
        )
    }

    /// Base vertex with `g` stems to looped vertices, `n` tails at the base.
    fn lollipop(g: usize, n: usize) -> StableGraph {
        let mut edges = Vec::new();
        let mut vertices = vec!["v0".to_string()];
        for i in 1..=g {
            vertices.push(format!("v{i}"));
            edges.push(Edge {
                id: format!("e{i}"),
                from: "v0".into(),
                to: format!("v{i}"),
            });
            edges.push(Edge {
                id: format!("l{i}"),
                from: format!("v{i}"),
                to: format!("v{i}"),
            });
        }
        let tails = (1..=n).map(|j| Tail {
            id: format!("t{j}"),
            vertex: "v0".into(),
            nu: j,
        });
        StableGraph::from_parts(vertices, edges, tails, []).unwrap()
    }

    #[test]
    fn minimal_graph_is_stable() {
        assert!(loop_with_tail().validate_stable().is_empty());
        assert_eq!(loop_with_tail().type_of().unwrap(), (1, 1));
    }

    #[test]
    fn stability_boundary_and_connectivity() {
        let no_tail = graph(
            r#"{"vertices":["v"],
                "edges":[{"id":"l","from":"v","to":"v","loop":true}],
                "tails":[]}"#,
        );
        let report = no_tail.validate_stable();
        assert!(report.iter().any(|v| v.contains("< 3 branches")), "{report:?}");

        let two_islands = graph(
            r#"{"vertices":["a","b"],
                "edges":[{"id":"p","from":"a","to":"a","loop":true},
                          {"id":"q","from":"a","to":"a","loop":true},
                          {"id":"r","from":"b","to":"b","loop":true},
                          {"id":"s","from":"b","to":"b","loop":true}],
                "tails":[]}"#,
        );
        assert!(two_islands
            .validate_stable()
            .iter()
            .any(|v| v == "not connected"));
        assert!(matches!(two_islands.type_of(), Err(GraphError::Disconnected)));
    }

    #[test]
    fn tail_numbering_must_be_a_bijection() {
        let bad = graph(
            r#"{"vertices":["v"],
                "edges":[{"id":"l","from":"v","to":"v","loop":true}],
                "tails":[{"id":"t1","vertex":"v","nu":1},{"id":"t2","vertex":"v","nu":3}]}"#,
        );
        assert!(bad
            .validate_stable()
            .iter()
            .any(|v| v.contains("not a bijection")));
    }

    #[test]
    fn infinity_set_constraints() {
        let both_halves = graph(
            r#"{"vertices":["v"],
                "edges":[{"id":"l","from":"v","to":"v","loop":true}],
                "tails":[{"id":"t","vertex":"v","nu":1}],
                "infinity":["l","-l"]}"#,
        );
        assert!(both_halves
            .validate_stable()
            .iter()
            .any(|v| v.contains("both orientations")));

        let crowded = graph(
            r#"{"vertices":["v"],
                "edges":[{"id":"l","from":"v","to":"v","loop":true}],
                "tails":[{"id":"t","vertex":"v","nu":1}],
                "infinity":["-l","t"]}"#,
        );
        assert!(crowded
            .validate_stable()
            .iter()
            .any(|v| v.contains("share terminal vertex")));

        assert!(matches!(
            StableGraph::from_json(
                r#"{"vertices":["v"],
                    "edges":[{"id":"l","from":"v","to":"v","loop":true}],
                    "tails":[{"id":"t","vertex":"v","nu":1}],
                    "infinity":["nope"]}"#
            ),
            Err(GraphError::UnknownBranch(_))
        ));
    }

    #[test]
    fn types_of_standard_families() {
        assert_eq!(lollipop(2, 1).type_of().unwrap(), (2, 1));
        assert_eq!(lollipop(3, 2).type_of().unwrap(), (3, 2));
        // A tree with tails has first Betti number zero.
        let tree = graph(
            r#"{"vertices":["a","b","c","d"],
                "edges":[{"id":"e1","from":"a","to":"b"},
                          {"id":"e2","from":"b","to":"c"},
                          {"id":"e3","from":"b","to":"d"}],
                "tails":[{"id":"t1","vertex":"a","nu":1},{"id":"t2","vertex":"a","nu":2},
                          {"id":"t3","vertex":"c","nu":3},{"id":"t4","vertex":"c","nu":4},
                          {"id":"t5","vertex":"d","nu":5},{"id":"t6","vertex":"d","nu":6}]}"#,
        );
        assert_eq!(tree.type_of().unwrap(), (0, 6));
    }

    #[test]
    fn subtree_is_deterministic_and_loop_free() {
        let g = lollipop(2, 1);
        let tree = g.maximal_subtree().unwrap();
        assert_eq!(tree, BTreeSet::from(["e1".to_string(), "e2".to_string()]));
        assert_eq!(loop_with_tail().maximal_subtree().unwrap(), BTreeSet::new());
        // A tree graph keeps all of its edges.
        let path = graph(
            r#"{"vertices":["a","b"],
                "edges":[{"id":"e","from":"a","to":"b"}],
                "tails":[{"id":"t1","vertex":"a","nu":1},{"id":"t2","vertex":"a","nu":2},
                          {"id":"t3","vertex":"b","nu":3},{"id":"t4","vertex":"b","nu":4}]}"#,
        );
        assert_eq!(
            path.maximal_subtree().unwrap(),
            BTreeSet::from(["e".to_string()])
        );
    }

    #[test]
    fn tail_paths_along_the_tree() {
        let g = lollipop(2, 1);
        assert!(g.tail_path("t1", "v0").unwrap().is_empty());
        let p = g.tree_path("v2", "v1").unwrap();
        assert_eq!(p.0, vec![OEdge::neg("e2"), OEdge::pos("e1")]);
        p.validate(&g).unwrap();
        assert!(p.is_reduced());
    }

    #[test]
    fn generators_are_reduced_closed_paths() {
        let g = lollipop(2, 1);
        let gens = g.fundamental_group_generators("v0").unwrap();
        assert_eq!(gens.len(), 2);
        assert_eq!(
            gens[0].0,
            vec![OEdge::pos("e1"), OEdge::pos("l1"), OEdge::neg("e1")]
        );
        assert_eq!(
            gens[1].0,
            vec![OEdge::pos("e2"), OEdge::pos("l2"), OEdge::neg("e2")]
        );
        for p in &gens {
            assert!(p.is_reduced());
            p.validate(&g).unwrap();
            assert_eq!(g.initial(&p.0[0]).unwrap(), "v0");
            assert_eq!(g.terminal(p.0.last().unwrap()).unwrap(), "v0");
        }
        // Wedge of loops: generators are the loops themselves.
        let w = graph(
            r#"{"vertices":["v"],
                "edges":[{"id":"l1","from":"v","to":"v","loop":true},
                          {"id":"l2","from":"v","to":"v","loop":true}],
                "tails":[{"id":"t","vertex":"v","nu":1}]}"#,
        );
        let wgens = w.fundamental_group_generators("v").unwrap();
        assert_eq!(wgens.len(), 2);
        assert_eq!(wgens[0].0, vec![OEdge::pos("l1")]);
        assert_eq!(wgens[1].0, vec![OEdge::pos("l2")]);
    }

    #[test]
    fn path_reduction_and_validation() {
        let g = lollipop(2, 1);
        let silly = EdgePath(vec![
            OEdge::pos("e1"),
            OEdge::neg("e1"),
            OEdge::pos("e2"),
            OEdge::pos("l2"),
        ]);
        assert!(!silly.is_reduced());
        let red = silly.reduced();
        assert_eq!(red.0, vec![OEdge::pos("e2"), OEdge::pos("l2")]);
        assert!(red.validate(&g).is_ok());
        let broken = EdgePath(vec![OEdge::pos("e1"), OEdge::pos("e2")]);
        assert!(matches!(
            broken.validate(&g),
            Err(GraphError::BrokenPath { position: 1, .. })
        ));
        assert_eq!(
            silly.inverse().0,
            vec![
                OEdge::neg("l2"),
                OEdge::neg("e2"),
                OEdge::pos("e1"),
                OEdge::neg("e1"),
            ]
        );
    }

    #[test]
    fn split_separating_two_loops_gives_lollipop_shape() {
        // One vertex with two loops and a tail; split so that one loop stays.
        let w = graph(
            r#"{"vertices":["v"],
                "edges":[{"id":"l1","from":"v","to":"v","loop":true},
                          {"id":"l2","from":"v","to":"v","loop":true}],
                "tails":[{"id":"t","vertex":"v","nu":1}]}"#,
        );
        let (split, rec) = w.split_vertex("v", "l1", "-l1").unwrap();
        assert!(split.validate_stable().is_empty());
        assert_eq!(split.type_of().unwrap(), (2, 1));
        // The kept vertex still has the first loop; the rest moved.
        let star_v: Vec<String> = split.star("v").iter().map(|b| b.id()).collect();
        assert_eq!(star_v, vec!["-l1".to_string(), rec.new_edge.clone(), "l1".to_string()]);
        assert_eq!(split.star(&rec.new_vertex).len(), 4);
    }

    #[test]
    fn split_with_one_loop_half_turns_the_loop_into_a_stem() {
        let w = graph(
            r#"{"vertices":["v"],
                "edges":[{"id":"l","from":"v","to":"v","loop":true}],
                "tails":[{"id":"t1","vertex":"v","nu":1},{"id":"t2","vertex":"v","nu":2}]}"#,
        );
        let (split, rec) = w.split_vertex("v", "l", "t1").unwrap();
        assert!(split.validate_stable().is_empty());
        assert_eq!(split.type_of().unwrap(), (1, 2));
        assert!(!split.edge("l").unwrap().is_loop());
        assert_eq!(split.edge("l").unwrap().from, rec.new_vertex);
    }

    #[test]
    fn split_rejects_trivalent_and_foreign_branches() {
        let g = loop_with_tail();
        assert!(matches!(
            g.split_vertex("v", "l", "-l"),
            Err(GraphError::BadSplit { .. })
        ));
        let w = lollipop(2, 2); // v0 has 4 branches; l1 lives at v1
        assert!(matches!(
            w.split_vertex("v0", "t1", "l1"),
            Err(GraphError::BadSplit { .. })
        ));
    }

    #[test]
    fn split_then_contract_restores_the_graph_exactly() {
        let w = graph(
            r#"{"vertices":["v"],
                "edges":[{"id":"l1","from":"v","to":"v","loop":true},
                          {"id":"l2","from":"v","to":"v","loop":true}],
                "tails":[{"id":"t","vertex":"v","nu":1}]}"#,
        );
        let (split, rec) = w.split_vertex("v", "l1", "-l1").unwrap();
        let (back, _) = split.contract_edge(&rec.new_edge).unwrap();
        assert_eq!(back, w);
    }

    #[test]
    fn contract_then_split_restores_up_to_isomorphism() {
        let g = lollipop(2, 1);
        let (merged, rec) = g.contract_edge("e1").unwrap();
        assert_eq!(rec.merged_into, "v1");
        assert_eq!(merged.type_of().unwrap(), (2, 1));
        // Split the merged vertex so the first loop separates again.
        let (resplit, _) = merged.split_vertex("v1", "l1", "-l1").unwrap();
        assert!(isomorphic(&resplit, &g));
        assert!(!isomorphic(&merged, &g));
    }

    #[test]
    fn contract_rejects_loops() {
        let g = loop_with_tail();
        assert!(matches!(
            g.contract_edge("l"),
            Err(GraphError::BadContraction { .. })
        ));
    }

    #[test]
    fn type_is_invariant_under_both_moves() {
        let g = lollipop(2, 2);
        let before = g.type_of().unwrap();
        let (merged, _) = g.contract_edge("e2").unwrap();
        assert_eq!(merged.type_of().unwrap(), before);
        let (split, _) = merged
            .split_vertex("v2", "l2", "-l2")
            .unwrap();
        assert_eq!(split.type_of().unwrap(), before);
    }

    #[test]
    fn contracting_all_tree_edges_leaves_a_wedge_of_loops() {
        let mut g = lollipop(2, 1);
        for e in ["e1", "e2"] {
            g = g.contract_edge(e).unwrap().0;
        }
        assert_eq!(g.vertices().count(), 1);
        assert_eq!(g.type_of().unwrap(), (2, 1));
        assert!(g.edges().all(|e| e.is_loop()));
        assert!(g.maximal_subtree().unwrap().is_empty());
    }

    #[test]
    fn json_round_trip_preserves_everything() {
        let g = graph(
            r#"{"vertices":["u","v"],
                "edges":[{"id":"e","from":"u","to":"v"},
                          {"id":"l","from":"v","to":"v","loop":true}],
                "tails":[{"id":"t1","vertex":"u","nu":1},{"id":"t2","vertex":"u","nu":2}],
                "infinity":["-l"]}"#,
        );
        let json = serde_json::to_string(&g.to_data()).unwrap();
        let back = StableGraph::from_json(&json).unwrap();
        assert_eq!(back, g);
        assert!(back.infinity().contains("-l"));
    }

    #[test]
    fn malformed_inputs_are_rejected() {
        assert!(StableGraph::from_json("not json at all").is_err());
        assert!(matches!(
            StableGraph::from_json(
                r#"{"vertices":["v"],
                    "edges":[{"id":"e","from":"v","to":"ghost"}],
                    "tails":[]}"#
            ),
            Err(GraphError::UnknownVertex(_))
        ));
        assert!(matches!(
            StableGraph::from_json(
                r#"{"vertices":["v"],
                    "edges":[{"id":"l","from":"v","to":"v","loop":false}],
                    "tails":[]}"#
            ),
            Err(GraphError::Malformed(_))
        ));
        assert!(matches!(
            StableGraph::from_json(
                r#"{"vertices":["v"],
                    "edges":[{"id":"-x","from":"v","to":"v","loop":true}],
                    "tails":[]}"#
            ),
            Err(GraphError::Malformed(_))
        ));
    }

    #[test]
    fn star_orders_branches_canonically() {
        let g = lollipop(1, 2);
        let ids: Vec<String> = g.star("v0").iter().map(|b| b.id()).collect();
        assert_eq!(ids, vec!["-e1", "t1", "t2"]);
        let ids1: Vec<String> = g.star("v1").iter().map(|b| b.id()).collect();
        assert_eq!(ids1, vec!["-l1", "e1", "l1"]);
    }

    #[test]
    fn base_vertex_prefers_the_first_tail() {
        assert_eq!(lollipop(2, 1).base_vertex(), "v0");
        let w = graph(
            r#"{"vertices":["a","b"],
                "edges":[{"id":"e","from":"a","to":"b"},
                          {"id":"l","from":"a","to":"a","loop":true},
                          {"id":"m","from":"b","to":"b","loop":true}],
                "tails":[{"id":"t","vertex":"b","nu":1}]}"#,
        );
        assert_eq!(w.base_vertex(), "b");
        let untailed = graph(
            r#"{"vertices":["z","a"],
                "edges":[{"id":"e","from":"z","to":"a"},
                          {"id":"l","from":"z","to":"z","loop":true},
                          {"id":"m","from":"a","to":"a","loop":true}],
                "tails":[]}"#,
        );
        assert_eq!(untailed.base_vertex(), "a");
    }
}

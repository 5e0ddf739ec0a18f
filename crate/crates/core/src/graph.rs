//! Arc-identified directed multigraph.
//!
//! Arcs carry stable dense integer ids assigned in insertion order; parallel
//! arcs in the same direction get distinct ids and ids of deleted elements are
//! never reused within one graph's lifetime. All certificates reference arcs
//! by id, so every structure built on top of this module can distinguish
//! parallel copies.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;

use thiserror::Error;

/// Dense non-negative vertex index.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct VertexId(pub u32);

/// Dense non-negative arc index, assigned in insertion order.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct ArcId(pub u32);

impl VertexId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl ArcId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl std::fmt::Display for VertexId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::fmt::Display for ArcId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("unknown vertex id {0}")]
    UnknownVertex(VertexId),
    #[error("unknown arc id {0}")]
    UnknownArc(ArcId),
    #[error("loop arc at vertex {0} rejected")]
    LoopArc(VertexId),
}

/// Loop-free directed multigraph with stable vertex and arc identifiers.
///
/// Opposite-direction arc pairs are allowed and are not parallel; parallel
/// means same tail and same head.
#[derive(Clone, Debug, Default)]
pub struct MultiDigraph {
    // slot-indexed; None / false marks a deleted id, never reused
    vertex_alive: Vec<bool>,
    arcs: Vec<Option<(VertexId, VertexId)>>,
    out_adj: Vec<Vec<ArcId>>,
    in_adj: Vec<Vec<ArcId>>,
    live_vertices: usize,
    live_arcs: usize,
}

impl MultiDigraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Graph with vertices `0..n` and no arcs.
    pub fn with_vertices(n: usize) -> Self {
        MultiDigraph {
            vertex_alive: vec![true; n],
            arcs: Vec::new(),
            out_adj: vec![Vec::new(); n],
            in_adj: vec![Vec::new(); n],
            live_vertices: n,
            live_arcs: 0,
        }
    }

    pub fn add_vertex(&mut self) -> VertexId {
        let id = VertexId(self.vertex_alive.len() as u32);
        self.vertex_alive.push(true);
        self.out_adj.push(Vec::new());
        self.in_adj.push(Vec::new());
        self.live_vertices += 1;
        id
    }

    pub fn add_arc(&mut self, tail: VertexId, head: VertexId) -> Result<ArcId, GraphError> {
        self.check_vertex(tail)?;
        self.check_vertex(head)?;
        if tail == head {
            return Err(GraphError::LoopArc(tail));
        }
        let id = ArcId(self.arcs.len() as u32);
        self.arcs.push(Some((tail, head)));
        self.out_adj[tail.index()].push(id);
        self.in_adj[head.index()].push(id);
        self.live_arcs += 1;
        Ok(id)
    }

    pub fn remove_arcs<I: IntoIterator<Item = ArcId>>(&mut self, ids: I) -> Result<(), GraphError> {
        for id in ids {
            let (tail, head) = self.arc_ends(id)?;
            self.arcs[id.index()] = None;
            self.out_adj[tail.index()].retain(|&a| a != id);
            self.in_adj[head.index()].retain(|&a| a != id);
            self.live_arcs -= 1;
        }
        Ok(())
    }

    /// Removes the vertices and every incident arc.
    pub fn remove_vertices<I: IntoIterator<Item = VertexId>>(
        &mut self,
        ids: I,
    ) -> Result<(), GraphError> {
        for v in ids {
            self.check_vertex(v)?;
            let incident: Vec<ArcId> = self.out_adj[v.index()]
                .iter()
                .chain(self.in_adj[v.index()].iter())
                .copied()
                .collect();
            self.remove_arcs(incident)?;
            self.vertex_alive[v.index()] = false;
            self.live_vertices -= 1;
        }
        Ok(())
    }

    pub fn contains_vertex(&self, v: VertexId) -> bool {
        self.vertex_alive.get(v.index()).copied().unwrap_or(false)
    }

    pub fn contains_arc(&self, a: ArcId) -> bool {
        self.arcs.get(a.index()).map_or(false, Option::is_some)
    }

    pub fn arc_ends(&self, a: ArcId) -> Result<(VertexId, VertexId), GraphError> {
        self.arcs
            .get(a.index())
            .copied()
            .flatten()
            .ok_or(GraphError::UnknownArc(a))
    }

    pub fn tail(&self, a: ArcId) -> Result<VertexId, GraphError> {
        Ok(self.arc_ends(a)?.0)
    }

    pub fn head(&self, a: ArcId) -> Result<VertexId, GraphError> {
        Ok(self.arc_ends(a)?.1)
    }

    fn check_vertex(&self, v: VertexId) -> Result<(), GraphError> {
        if self.contains_vertex(v) {
            Ok(())
        } else {
            Err(GraphError::UnknownVertex(v))
        }
    }

    /// Out-arcs of `v` in ascending ArcId order.
    pub fn out_arcs(&self, v: VertexId) -> &[ArcId] {
        &self.out_adj[v.index()]
    }

    /// In-arcs of `v` in ascending ArcId order.
    pub fn in_arcs(&self, v: VertexId) -> &[ArcId] {
        &self.in_adj[v.index()]
    }

    pub fn out_degree(&self, v: VertexId) -> Result<usize, GraphError> {
        self.check_vertex(v)?;
        Ok(self.out_adj[v.index()].len())
    }

    pub fn in_degree(&self, v: VertexId) -> Result<usize, GraphError> {
        self.check_vertex(v)?;
        Ok(self.in_adj[v.index()].len())
    }

    /// Number of arcs with tail `u` and head `v` (parallel copies counted).
    pub fn multiplicity(&self, u: VertexId, v: VertexId) -> Result<usize, GraphError> {
        self.check_vertex(u)?;
        self.check_vertex(v)?;
        Ok(self.out_adj[u.index()]
            .iter()
            .filter(|&&a| self.arcs[a.index()].unwrap().1 == v)
            .count())
    }

    /// Minimum outdegree over live vertices, with a witness of lowest id.
    /// `None` on an empty graph.
    pub fn min_out_degree(&self) -> Option<(VertexId, usize)> {
        self.vertices()
            .map(|v| (v, self.out_adj[v.index()].len()))
            .min_by_key(|&(v, d)| (d, v))
    }

    /// Maximum number of parallel same-direction arcs over all ordered pairs.
    pub fn max_multiplicity(&self) -> usize {
        let mut best = 0;
        let mut heads: Vec<VertexId> = Vec::new();
        for v in self.vertices() {
            heads.clear();
            heads.extend(
                self.out_adj[v.index()]
                    .iter()
                    .map(|&a| self.arcs[a.index()].unwrap().1),
            );
            heads.sort_unstable();
            let mut run = 0;
            let mut prev = None;
            for &h in &heads {
                if Some(h) == prev {
                    run += 1;
                } else {
                    run = 1;
                    prev = Some(h);
                }
                best = best.max(run);
            }
        }
        best
    }

    /// At most one arc per ordered pair.
    pub fn is_simple(&self) -> bool {
        self.max_multiplicity() <= 1
    }

    pub fn vertex_count(&self) -> usize {
        self.live_vertices
    }

    pub fn arc_count(&self) -> usize {
        self.live_arcs
    }

    /// One past the highest vertex id ever assigned.
    pub fn vertex_slots(&self) -> usize {
        self.vertex_alive.len()
    }

    /// One past the highest arc id ever assigned.
    pub fn arc_slots(&self) -> usize {
        self.arcs.len()
    }

    /// Live vertices in ascending id order.
    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertex_alive
            .iter()
            .enumerate()
            .filter(|(_, &alive)| alive)
            .map(|(i, _)| VertexId(i as u32))
    }

    /// Live arcs in ascending id order.
    pub fn arcs(&self) -> impl Iterator<Item = (ArcId, VertexId, VertexId)> + '_ {
        self.arcs
            .iter()
            .enumerate()
            .filter_map(|(i, a)| a.map(|(t, h)| (ArcId(i as u32), t, h)))
    }

    /// Subgraph induced by `keep`: all arcs with both ends inside, ArcIds
    /// preserved.
    pub fn induced(&self, keep: &BTreeSet<VertexId>) -> Result<MultiDigraph, GraphError> {
        for &v in keep {
            self.check_vertex(v)?;
        }
        let mut g = self.clone();
        let drop: Vec<VertexId> = self.vertices().filter(|v| !keep.contains(v)).collect();
        g.remove_vertices(drop)?;
        Ok(g)
    }

    /// Vertices with a directed path to `target` avoiding `forbidden` arcs.
    /// Always contains `target`.
    pub fn reach_to(
        &self,
        target: VertexId,
        forbidden: &BTreeSet<ArcId>,
    ) -> Result<BTreeSet<VertexId>, GraphError> {
        self.check_vertex(target)?;
        for &a in forbidden {
            self.arc_ends(a)?;
        }
        self.bfs(target, forbidden, false)
    }

    /// Vertices reachable from `source` avoiding `forbidden` arcs.
    pub fn reach_from(
        &self,
        source: VertexId,
        forbidden: &BTreeSet<ArcId>,
    ) -> Result<BTreeSet<VertexId>, GraphError> {
        self.check_vertex(source)?;
        for &a in forbidden {
            self.arc_ends(a)?;
        }
        self.bfs(source, forbidden, true)
    }

    fn bfs(
        &self,
        start: VertexId,
        forbidden: &BTreeSet<ArcId>,
        forward: bool,
    ) -> Result<BTreeSet<VertexId>, GraphError> {
        let mut seen = BTreeSet::new();
        seen.insert(start);
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            let adj = if forward {
                &self.out_adj[v.index()]
            } else {
                &self.in_adj[v.index()]
            };
            for &a in adj {
                if forbidden.contains(&a) {
                    continue;
                }
                let (t, h) = self.arcs[a.index()].unwrap();
                let next = if forward { h } else { t };
                if seen.insert(next) {
                    queue.push_back(next);
                }
            }
        }
        Ok(seen)
    }

    /// Full rescan confirming adjacency indexes and the arc map agree.
    pub fn check_consistency(&self) -> bool {
        let mut out_count = 0;
        let mut in_count = 0;
        for v in self.vertices() {
            for &a in &self.out_adj[v.index()] {
                match self.arcs.get(a.index()).copied().flatten() {
                    Some((t, _)) if t == v => out_count += 1,
                    _ => return false,
                }
            }
            for &a in &self.in_adj[v.index()] {
                match self.arcs.get(a.index()).copied().flatten() {
                    Some((_, h)) if h == v => in_count += 1,
                    _ => return false,
                }
            }
        }
        out_count == self.live_arcs
            && in_count == self.live_arcs
            && self
                .arcs()
                .all(|(_, t, h)| self.contains_vertex(t) && self.contains_vertex(h) && t != h)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormatError {
    #[error("line {0}: {1}")]
    Malformed(usize, String),
    #[error("arc count mismatch: header says {expected}, file has {found}")]
    ArcCount { expected: usize, found: usize },
    #[error("line {0}: vertex index {1} out of range")]
    VertexRange(usize, usize),
    #[error("missing `p dgr` header")]
    MissingHeader,
    #[error("graph error: {0}")]
    Graph(#[from] GraphError),
}

/// Parses the digraph text format: `p dgr <n> <m>` followed by `m` lines
/// `a <tail> <head>`. `#` starts a comment. ArcId is the 0-based order of
/// `a` lines.
pub fn parse_digraph(input: &str) -> Result<MultiDigraph, FormatError> {
    let mut graph: Option<MultiDigraph> = None;
    let mut expected = 0usize;
    let mut found = 0usize;
    for (lineno, raw) in input.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields.as_slice() {
            ["p", "dgr", n, m] if graph.is_none() => {
                let n: usize = n
                    .parse()
                    .map_err(|_| FormatError::Malformed(lineno + 1, line.to_string()))?;
                expected = m
                    .parse()
                    .map_err(|_| FormatError::Malformed(lineno + 1, line.to_string()))?;
                graph = Some(MultiDigraph::with_vertices(n));
            }
            ["a", t, h] => {
                let g = graph.as_mut().ok_or(FormatError::MissingHeader)?;
                let t: usize = t
                    .parse()
                    .map_err(|_| FormatError::Malformed(lineno + 1, line.to_string()))?;
                let h: usize = h
                    .parse()
                    .map_err(|_| FormatError::Malformed(lineno + 1, line.to_string()))?;
                if t >= g.vertex_slots() {
                    return Err(FormatError::VertexRange(lineno + 1, t));
                }
                if h >= g.vertex_slots() {
                    return Err(FormatError::VertexRange(lineno + 1, h));
                }
                g.add_arc(VertexId(t as u32), VertexId(h as u32))?;
                found += 1;
            }
            _ => return Err(FormatError::Malformed(lineno + 1, line.to_string())),
        }
    }
    let graph = graph.ok_or(FormatError::MissingHeader)?;
    if expected != found {
        return Err(FormatError::ArcCount { expected, found });
    }
    Ok(graph)
}

/// Writes the digraph text format, arcs in ascending ArcId order.
///
/// Graphs with deleted vertices are re-densified: surviving vertices are
/// renumbered 0..n in ascending-id order, and surviving arcs get fresh
/// 0-based ids in the emitted order.
pub fn write_digraph(g: &MultiDigraph) -> String {
    let verts: Vec<VertexId> = g.vertices().collect();
    let mut remap = vec![usize::MAX; g.vertex_slots()];
    for (i, v) in verts.iter().enumerate() {
        remap[v.index()] = i;
    }
    let mut out = String::new();
    let _ = writeln!(out, "p dgr {} {}", verts.len(), g.arc_count());
    for (_, t, h) in g.arcs() {
        let _ = writeln!(out, "a {} {}", remap[t.index()], remap[h.index()]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> (MultiDigraph, Vec<ArcId>) {
        // a -> b -> y
        let mut g = MultiDigraph::with_vertices(3);
        let e0 = g.add_arc(VertexId(0), VertexId(1)).unwrap();
        let e1 = g.add_arc(VertexId(1), VertexId(2)).unwrap();
        (g, vec![e0, e1])
    }

    #[test]
    fn parallel_arcs_get_distinct_ids() {
        let mut g = MultiDigraph::with_vertices(2);
        let a = g.add_arc(VertexId(0), VertexId(1)).unwrap();
        let b = g.add_arc(VertexId(0), VertexId(1)).unwrap();
        assert_ne!(a, b);
        assert_eq!(g.multiplicity(VertexId(0), VertexId(1)).unwrap(), 2);
    }

    #[test]
    fn loops_rejected() {
        let mut g = MultiDigraph::with_vertices(1);
        assert_eq!(
            g.add_arc(VertexId(0), VertexId(0)),
            Err(GraphError::LoopArc(VertexId(0)))
        );
    }

    #[test]
    fn remove_vertex_drops_incident_arcs() {
        let mut g = MultiDigraph::with_vertices(4);
        g.add_arc(VertexId(0), VertexId(1)).unwrap();
        g.add_arc(VertexId(1), VertexId(2)).unwrap();
        g.add_arc(VertexId(3), VertexId(1)).unwrap();
        g.add_arc(VertexId(0), VertexId(2)).unwrap();
        g.remove_vertices([VertexId(1)]).unwrap();
        assert_eq!(g.arc_count(), 1);
        assert!(g.check_consistency());
    }

    #[test]
    fn arc_ids_stable_across_removal() {
        let mut g = MultiDigraph::with_vertices(3);
        let a = g.add_arc(VertexId(0), VertexId(1)).unwrap();
        let b = g.add_arc(VertexId(1), VertexId(2)).unwrap();
        g.remove_arcs([a]).unwrap();
        assert_eq!(g.arc_ends(b).unwrap(), (VertexId(1), VertexId(2)));
        assert!(!g.contains_arc(a));
        // new arcs never reuse the deleted id
        let c = g.add_arc(VertexId(0), VertexId(2)).unwrap();
        assert!(c > b);
    }

    #[test]
    fn degree_queries() {
        let mut g = MultiDigraph::with_vertices(5);
        for u in 0..5u32 {
            for v in 0..5u32 {
                if u != v {
                    g.add_arc(VertexId(u), VertexId(v)).unwrap();
                }
            }
        }
        assert_eq!(g.min_out_degree().unwrap().1, 4);
        assert!(g.is_simple());
        let iso = MultiDigraph::with_vertices(1);
        assert_eq!(iso.out_degree(VertexId(0)).unwrap(), 0);
    }

    #[test]
    fn reach_to_basic() {
        let (g, arcs) = path3();
        let all = g.reach_to(VertexId(2), &BTreeSet::new()).unwrap();
        assert_eq!(all, BTreeSet::from([VertexId(0), VertexId(1), VertexId(2)]));
        let cut = g
            .reach_to(VertexId(2), &BTreeSet::from([arcs[1]]))
            .unwrap();
        assert_eq!(cut, BTreeSet::from([VertexId(2)]));
    }

    #[test]
    fn unknown_ids_rejected() {
        let g = MultiDigraph::with_vertices(2);
        assert!(g.out_degree(VertexId(7)).is_err());
        assert!(g.arc_ends(ArcId(0)).is_err());
        assert!(g.reach_to(VertexId(9), &BTreeSet::new()).is_err());
    }

    #[test]
    fn format_round_trip() {
        let mut g = MultiDigraph::with_vertices(3);
        g.add_arc(VertexId(0), VertexId(1)).unwrap();
        g.add_arc(VertexId(0), VertexId(1)).unwrap();
        g.add_arc(VertexId(1), VertexId(2)).unwrap();
        let text = write_digraph(&g);
        let back = parse_digraph(&text).unwrap();
        assert_eq!(write_digraph(&back), text);
        assert_eq!(back.multiplicity(VertexId(0), VertexId(1)).unwrap(), 2);
    }

    #[test]
    fn format_rejects_garbage() {
        assert!(parse_digraph("a 0 1").is_err());
        assert!(parse_digraph("p dgr 2 1\na 0 5").is_err());
        assert!(parse_digraph("p dgr 2 2\na 0 1").is_err());
        assert!(parse_digraph("# only comments").is_err());
    }

    // brute force over all simple paths, for cross-checking reach_to
    fn brute_reaches(
        g: &MultiDigraph,
        from: VertexId,
        to: VertexId,
        forbidden: &BTreeSet<ArcId>,
        visited: &mut Vec<VertexId>,
    ) -> bool {
        if from == to {
            return true;
        }
        for &a in g.out_arcs(from) {
            if forbidden.contains(&a) {
                continue;
            }
            let (_, h) = g.arc_ends(a).unwrap();
            if visited.contains(&h) {
                continue;
            }
            visited.push(h);
            if brute_reaches(g, h, to, forbidden, visited) {
                visited.pop();
                return true;
            }
            visited.pop();
        }
        false
    }

    #[test]
    fn reach_to_matches_brute_force_enumeration() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let n = rng.gen_range(2..=8);
            let mut g = MultiDigraph::with_vertices(n);
            let m = rng.gen_range(0..=2 * n);
            for _ in 0..m {
                let u = rng.gen_range(0..n) as u32;
                let v = rng.gen_range(0..n) as u32;
                if u != v {
                    g.add_arc(VertexId(u), VertexId(v)).unwrap();
                }
            }
            let target = VertexId(rng.gen_range(0..n) as u32);
            let mut forbidden = BTreeSet::new();
            for (a, _, _) in g.arcs() {
                if rng.gen_bool(0.2) {
                    forbidden.insert(a);
                }
            }
            let fast = g.reach_to(target, &forbidden).unwrap();
            for v in g.vertices() {
                let mut visited = vec![v];
                let slow = brute_reaches(&g, v, target, &forbidden, &mut visited);
                assert_eq!(fast.contains(&v), slow, "vertex {v} target {target}");
            }
        }
    }
}

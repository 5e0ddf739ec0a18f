//! Exact, exhaustive immersion testing on small hosts — the independent
//! ground truth for the verifier, the TT router, and small solver runs.
//!
//! Desk-scale only: the search enumerates injective vertex maps and then
//! routes pattern arcs one at a time by depth-first path search over unused
//! arcs, backtracking across both levels.

use thiserror::Error;

use crate::certify::{verify, ImmersionCertificate};
use crate::graph::{ArcId, MultiDigraph, VertexId};
use crate::patterns::Pattern;

#[derive(Clone, Copy, Debug)]
pub struct SearchLimits {
    pub max_host_vertices: usize,
    pub max_host_arcs: usize,
    /// Backtrack-node budget; exceeding it aborts, never silently truncates.
    pub node_budget: u64,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits {
            max_host_vertices: 12,
            max_host_arcs: 40,
            node_budget: 10_000_000,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("host exceeds search limits: {0}")]
    HostTooLarge(String),
    #[error("node budget exhausted after {0} nodes")]
    ResourceExceeded(u64),
}

#[derive(Debug)]
pub enum OracleOutcome {
    Found(ImmersionCertificate),
    NotPresent,
}

struct Search<'a> {
    host: &'a MultiDigraph,
    pattern: &'a Pattern,
    /// pattern vertices in assignment order (decreasing degree)
    vertex_order: Vec<VertexId>,
    host_vertices: Vec<VertexId>,
    nodes: u64,
    budget: u64,
}

/// Complete search for an immersion of `pattern` in `host`. Returns a
/// verifying certificate iff one exists within the limits.
pub fn exhaustive_immersion(
    host: &MultiDigraph,
    pattern: &Pattern,
    limits: SearchLimits,
) -> Result<OracleOutcome, OracleError> {
    if host.vertex_count() > limits.max_host_vertices {
        return Err(OracleError::HostTooLarge(format!(
            "{} vertices > {}",
            host.vertex_count(),
            limits.max_host_vertices
        )));
    }
    if host.arc_count() > limits.max_host_arcs {
        return Err(OracleError::HostTooLarge(format!(
            "{} arcs > {}",
            host.arc_count(),
            limits.max_host_arcs
        )));
    }
    if pattern.graph.vertex_count() > host.vertex_count() {
        return Ok(OracleOutcome::NotPresent);
    }

    let mut vertex_order: Vec<VertexId> = pattern.graph.vertices().collect();
    vertex_order.sort_by_key(|&v| {
        let deg = pattern.graph.out_degree(v).unwrap() + pattern.graph.in_degree(v).unwrap();
        (std::cmp::Reverse(deg), v)
    });

    let mut search = Search {
        host,
        pattern,
        vertex_order,
        host_vertices: host.vertices().collect(),
        nodes: 0,
        budget: limits.node_budget,
    };
    let mut assignment: Vec<Option<VertexId>> = vec![None; pattern.graph.vertex_slots()];
    let mut taken: Vec<VertexId> = Vec::new();
    match search.assign(0, &mut assignment, &mut taken) {
        Ok(Some(cert)) => {
            debug_assert!(verify(host, &cert).is_empty());
            Ok(OracleOutcome::Found(cert))
        }
        Ok(None) => Ok(OracleOutcome::NotPresent),
        Err(e) => Err(e),
    }
}

impl Search<'_> {
    fn tick(&mut self) -> Result<(), OracleError> {
        self.nodes += 1;
        if self.nodes > self.budget {
            Err(OracleError::ResourceExceeded(self.nodes))
        } else {
            Ok(())
        }
    }

    fn assign(
        &mut self,
        depth: usize,
        assignment: &mut Vec<Option<VertexId>>,
        taken: &mut Vec<VertexId>,
    ) -> Result<Option<ImmersionCertificate>, OracleError> {
        if depth == self.vertex_order.len() {
            return self.route_all(assignment);
        }
        let pv = self.vertex_order[depth];
        for i in 0..self.host_vertices.len() {
            let hv = self.host_vertices[i];
            if taken.contains(&hv) {
                continue;
            }
            self.tick()?;
            assignment[pv.index()] = Some(hv);
            taken.push(hv);
            if let Some(found) = self.assign(depth + 1, assignment, taken)? {
                return Ok(Some(found));
            }
            taken.pop();
            assignment[pv.index()] = None;
        }
        Ok(None)
    }

    fn route_all(
        &mut self,
        assignment: &[Option<VertexId>],
    ) -> Result<Option<ImmersionCertificate>, OracleError> {
        let vertex_map: Vec<VertexId> = (0..self.pattern.graph.vertex_slots())
            .map(|i| assignment[i].expect("complete assignment"))
            .collect();
        // route arcs whose endpoint images are close first, to prune early
        let mut order: Vec<(ArcId, VertexId, VertexId)> = self.pattern.graph.arcs().collect();
        let mut dist_cache: Vec<(usize, ArcId)> = order
            .iter()
            .map(|&(a, pt, ph)| {
                let d = self.bfs_distance(vertex_map[pt.index()], vertex_map[ph.index()]);
                (d.unwrap_or(usize::MAX), a)
            })
            .collect();
        dist_cache.sort();
        if dist_cache.last().map(|&(d, _)| d) == Some(usize::MAX) {
            return Ok(None); // some required pair not even connected
        }
        order.sort_by_key(|&(a, _, _)| dist_cache.iter().position(|&(_, b)| b == a).unwrap());

        let mut used = vec![false; self.host.arc_slots()];
        let mut paths: Vec<Vec<ArcId>> = vec![Vec::new(); self.pattern.graph.arc_count()];
        if self.route(&order, 0, &vertex_map, &mut used, &mut paths)? {
            Ok(Some(ImmersionCertificate {
                pattern: self.pattern.clone(),
                vertex_map,
                arc_paths: paths,
            }))
        } else {
            Ok(None)
        }
    }

    fn bfs_distance(&self, from: VertexId, to: VertexId) -> Option<usize> {
        use std::collections::VecDeque;
        let mut dist = vec![usize::MAX; self.host.vertex_slots()];
        dist[from.index()] = 0;
        let mut q = VecDeque::from([from]);
        while let Some(v) = q.pop_front() {
            if v == to {
                return Some(dist[v.index()]);
            }
            for &a in self.host.out_arcs(v) {
                let h = self.host.head(a).unwrap();
                if dist[h.index()] == usize::MAX {
                    dist[h.index()] = dist[v.index()] + 1;
                    q.push_back(h);
                }
            }
        }
        None
    }

    fn route(
        &mut self,
        order: &[(ArcId, VertexId, VertexId)],
        idx: usize,
        vertex_map: &[VertexId],
        used: &mut Vec<bool>,
        paths: &mut Vec<Vec<ArcId>>,
    ) -> Result<bool, OracleError> {
        if idx == order.len() {
            return Ok(true);
        }
        let (pa, pt, ph) = order[idx];
        let start = vertex_map[pt.index()];
        let goal = vertex_map[ph.index()];
        let mut path = Vec::new();
        let mut visited = vec![start];
        self.dfs_path(order, idx, start, goal, vertex_map, used, paths, &mut path, &mut visited, pa)
    }

    #[allow(clippy::too_many_arguments)]
    fn dfs_path(
        &mut self,
        order: &[(ArcId, VertexId, VertexId)],
        idx: usize,
        at: VertexId,
        goal: VertexId,
        vertex_map: &[VertexId],
        used: &mut Vec<bool>,
        paths: &mut Vec<Vec<ArcId>>,
        path: &mut Vec<ArcId>,
        visited: &mut Vec<VertexId>,
        pa: ArcId,
    ) -> Result<bool, OracleError> {
        if at == goal {
            paths[pa.index()] = path.clone();
            if self.route(order, idx + 1, vertex_map, used, paths)? {
                return Ok(true);
            }
            paths[pa.index()].clear();
            return Ok(false);
        }
        for i in 0..self.host.out_arcs(at).len() {
            let a = self.host.out_arcs(at)[i];
            if used[a.index()] {
                continue;
            }
            let h = self.host.head(a).unwrap();
            if visited.contains(&h) {
                continue;
            }
            self.tick()?;
            used[a.index()] = true;
            path.push(a);
            visited.push(h);
            if self.dfs_path(order, idx, h, goal, vertex_map, used, paths, path, visited, pa)? {
                return Ok(true);
            }
            visited.pop();
            path.pop();
            used[a.index()] = false;
        }
        Ok(false)
    }
}

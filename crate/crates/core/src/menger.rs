//! Arc-disjoint paths or a small cut: for (source, target, l) either l
//! pairwise arc-disjoint paths or a cut of fewer than l arcs separating the
//! target from the source.
//!
//! Unit-capacity augmenting flow, at most l augmentations, each an O(m)
//! residual search scanning out-arcs in ascending ArcId order, so the whole
//! query is deterministic and O(l·m).

use std::collections::BTreeSet;

use thiserror::Error;

use crate::certify::simplify_walk;
use crate::graph::{ArcId, GraphError, MultiDigraph, VertexId};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MengerError {
    #[error("source and target coincide at {0}")]
    SameEndpoints(VertexId),
    #[error("demand must be at least 1")]
    ZeroDemand,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Outcome of a paths-or-cut query.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CutCertificate {
    /// l pairwise arc-disjoint vertex-simple source-to-target paths.
    Paths(Vec<Vec<ArcId>>),
    /// Fewer than l arcs whose removal leaves the target unreachable, plus
    /// the set of vertices still able to reach the target afterwards.
    Cut {
        arcs: BTreeSet<ArcId>,
        reach: BTreeSet<VertexId>,
    },
}

#[derive(Clone, Copy)]
enum Step {
    Forward(ArcId),
    Backward(ArcId),
}

/// Either `demand` arc-disjoint s->t paths or a cut of size < `demand`.
///
/// The cut is read off the final residual frontier (arcs from
/// residual-reachable to non-reachable); the reach set is then recomputed
/// independently by reverse reachability and cross-checked.
pub fn paths_or_cut(
    g: &MultiDigraph,
    s: VertexId,
    t: VertexId,
    demand: usize,
) -> Result<CutCertificate, MengerError> {
    if s == t {
        return Err(MengerError::SameEndpoints(s));
    }
    if demand == 0 {
        return Err(MengerError::ZeroDemand);
    }
    if !g.contains_vertex(s) {
        return Err(GraphError::UnknownVertex(s).into());
    }
    if !g.contains_vertex(t) {
        return Err(GraphError::UnknownVertex(t).into());
    }

    let mut flowed = vec![false; g.arc_slots()];
    let mut flow = 0usize;
    let mut last_reach: Vec<bool> = Vec::new();
    while flow < demand {
        match augment(g, s, t, &mut flowed) {
            Some(()) => flow += 1,
            None => {
                last_reach = residual_reachable(g, s, &flowed);
                break;
            }
        }
    }

    if flow >= demand {
        return Ok(CutCertificate::Paths(decompose(g, s, t, demand, &flowed)));
    }

    // min cut: original arcs crossing from residual-reachable to the rest
    let mut cut = BTreeSet::new();
    for (a, tail, head) in g.arcs() {
        if last_reach[tail.index()] && !last_reach[head.index()] {
            cut.insert(a);
        }
    }
    debug_assert_eq!(cut.len(), flow, "residual cut size must equal flow value");
    let reach = g.reach_to(t, &cut)?;
    assert!(!reach.contains(&s), "cut fails to separate source from target");
    debug_assert!(!g.reach_from(s, &cut)?.contains(&t));
    Ok(CutCertificate::Cut { arcs: cut, reach })
}

/// One augmenting DFS in the residual graph. Unflowed arcs are traversed
/// forward, flowed arcs backward; both scans go in ascending ArcId order.
fn augment(g: &MultiDigraph, s: VertexId, t: VertexId, flowed: &mut [bool]) -> Option<()> {
    let mut visited = vec![false; g.vertex_slots()];
    let mut via: Vec<Option<Step>> = vec![None; g.vertex_slots()];
    visited[s.index()] = true;
    let mut stack = vec![s];
    'outer: while let Some(v) = stack.pop() {
        if v == t {
            break;
        }
        // push in descending order so the lowest-id move is explored first
        let mut moves: Vec<(ArcId, VertexId, Step)> = Vec::new();
        for &a in g.out_arcs(v) {
            if !flowed[a.index()] {
                let (_, h) = g.arc_ends(a).unwrap();
                moves.push((a, h, Step::Forward(a)));
            }
        }
        for &a in g.in_arcs(v) {
            if flowed[a.index()] {
                let (tail, _) = g.arc_ends(a).unwrap();
                moves.push((a, tail, Step::Backward(a)));
            }
        }
        moves.sort_by_key(|&(a, _, _)| a);
        for (_, next, step) in moves.into_iter().rev() {
            if !visited[next.index()] {
                visited[next.index()] = true;
                via[next.index()] = Some(step);
                if next == t {
                    break 'outer;
                }
                stack.push(next);
            }
        }
    }
    if !visited[t.index()] {
        return None;
    }
    // flip the augmenting path
    let mut v = t;
    while v != s {
        match via[v.index()].unwrap() {
            Step::Forward(a) => {
                flowed[a.index()] = true;
                v = g.tail(a).unwrap();
            }
            Step::Backward(a) => {
                flowed[a.index()] = false;
                v = g.head(a).unwrap();
            }
        }
    }
    Some(())
}

fn residual_reachable(g: &MultiDigraph, s: VertexId, flowed: &[bool]) -> Vec<bool> {
    let mut visited = vec![false; g.vertex_slots()];
    visited[s.index()] = true;
    let mut stack = vec![s];
    while let Some(v) = stack.pop() {
        for &a in g.out_arcs(v) {
            if !flowed[a.index()] {
                let h = g.head(a).unwrap();
                if !visited[h.index()] {
                    visited[h.index()] = true;
                    stack.push(h);
                }
            }
        }
        for &a in g.in_arcs(v) {
            if flowed[a.index()] {
                let tail = g.tail(a).unwrap();
                if !visited[tail.index()] {
                    visited[tail.index()] = true;
                    stack.push(tail);
                }
            }
        }
    }
    visited
}

/// Splits the flow into `demand` vertex-simple paths, tracing flowed out-arcs
/// from the source in ascending ArcId order. Flow cycles are discarded by
/// cycle excision.
fn decompose(
    g: &MultiDigraph,
    s: VertexId,
    t: VertexId,
    demand: usize,
    flowed: &[bool],
) -> Vec<Vec<ArcId>> {
    let mut used = vec![false; g.arc_slots()];
    let mut paths = Vec::with_capacity(demand);
    for _ in 0..demand {
        let mut walk = Vec::new();
        let mut v = s;
        while v != t {
            let a = *g
                .out_arcs(v)
                .iter()
                .find(|&&a| flowed[a.index()] && !used[a.index()])
                .expect("flow conservation: every traced vertex has an unused flowed out-arc");
            used[a.index()] = true;
            walk.push(a);
            v = g.head(a).unwrap();
        }
        paths.push(simplify_walk(g, &walk));
    }
    paths
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patterns::build_f;

    #[test]
    fn parallel_chain_packs_fully() {
        // F(2,3): three parallel arcs, demand 3
        let f = build_f(2, 3).unwrap();
        match paths_or_cut(&f.graph, VertexId(0), VertexId(1), 3).unwrap() {
            CutCertificate::Paths(paths) => {
                assert_eq!(paths.len(), 3);
                for (i, p) in paths.iter().enumerate() {
                    assert_eq!(p, &vec![ArcId(i as u32)]);
                }
            }
            other => panic!("expected paths, got {other:?}"),
        }
    }

    #[test]
    fn single_middle_vertex_cuts() {
        // s -> a -> t, demand 2: cut of one arc
        let mut g = MultiDigraph::with_vertices(3);
        g.add_arc(VertexId(0), VertexId(1)).unwrap();
        g.add_arc(VertexId(1), VertexId(2)).unwrap();
        match paths_or_cut(&g, VertexId(0), VertexId(2), 2).unwrap() {
            CutCertificate::Cut { arcs, reach } => {
                assert_eq!(arcs.len(), 1);
                assert!(!reach.contains(&VertexId(0)));
                assert!(reach.contains(&VertexId(2)));
            }
            other => panic!("expected cut, got {other:?}"),
        }
    }

    #[test]
    fn two_disjoint_length_two_paths() {
        let mut g = MultiDigraph::with_vertices(4);
        g.add_arc(VertexId(0), VertexId(1)).unwrap();
        g.add_arc(VertexId(1), VertexId(3)).unwrap();
        g.add_arc(VertexId(0), VertexId(2)).unwrap();
        g.add_arc(VertexId(2), VertexId(3)).unwrap();
        match paths_or_cut(&g, VertexId(0), VertexId(3), 2).unwrap() {
            CutCertificate::Paths(paths) => {
                assert_eq!(paths.len(), 2);
                let mut all: Vec<ArcId> = paths.iter().flatten().copied().collect();
                all.sort();
                all.dedup();
                assert_eq!(all.len(), 4, "paths must be arc-disjoint");
            }
            other => panic!("expected paths, got {other:?}"),
        }
    }

    #[test]
    fn rerouting_needed() {
        // the greedy first path takes the crossing arc and must be rerouted
        // via a residual backward step
        let mut g = MultiDigraph::with_vertices(6);
        let arcs = [
            (0, 1),
            (1, 2), // crossing
            (2, 5),
            (0, 3),
            (3, 2),
            (1, 4),
            (4, 5),
        ];
        for (u, v) in arcs {
            g.add_arc(VertexId(u), VertexId(v)).unwrap();
        }
        match paths_or_cut(&g, VertexId(0), VertexId(5), 2).unwrap() {
            CutCertificate::Paths(paths) => assert_eq!(paths.len(), 2),
            other => panic!("expected paths, got {other:?}"),
        }
    }

    #[test]
    fn unreachable_target_gives_empty_cut() {
        let mut g = MultiDigraph::with_vertices(3);
        g.add_arc(VertexId(2), VertexId(1)).unwrap();
        match paths_or_cut(&g, VertexId(0), VertexId(1), 2).unwrap() {
            CutCertificate::Cut { arcs, reach } => {
                assert!(arcs.is_empty());
                assert_eq!(reach, BTreeSet::from([VertexId(1), VertexId(2)]));
            }
            other => panic!("expected cut, got {other:?}"),
        }
    }

    #[test]
    fn errors() {
        let g = MultiDigraph::with_vertices(2);
        assert_eq!(
            paths_or_cut(&g, VertexId(0), VertexId(0), 1),
            Err(MengerError::SameEndpoints(VertexId(0)))
        );
        assert!(paths_or_cut(&g, VertexId(0), VertexId(5), 1).is_err());
        assert_eq!(
            paths_or_cut(&g, VertexId(0), VertexId(1), 0),
            Err(MengerError::ZeroDemand)
        );
    }

    #[test]
    fn deterministic() {
        let mut g = MultiDigraph::with_vertices(5);
        for (u, v) in [(0, 1), (0, 2), (1, 3), (2, 3), (3, 4), (1, 4), (0, 4)] {
            g.add_arc(VertexId(u), VertexId(v)).unwrap();
        }
        let a = paths_or_cut(&g, VertexId(0), VertexId(4), 3).unwrap();
        let b = paths_or_cut(&g, VertexId(0), VertexId(4), 3).unwrap();
        assert_eq!(a, b);
    }
}

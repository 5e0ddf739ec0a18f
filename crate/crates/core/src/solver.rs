//! The constructive engine: finds an F(K,l) immersion in any digraph meeting
//! the outdegree/multiplicity hypotheses, by induction on K with a recursion
//! on strictly shrinking reduced instances, and wraps it into a TT_k search.
//!
//! Every step of the underlying argument is executed and asserted at runtime.
//! A failing assertion is surfaced as [`SolverError::InternalInvariant`] with
//! a full diagnostic dump: it would mean the implementation and the argument
//! it executes have diverged, and is never ignored.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::certify::{
    compose, route_tt_in_f, simplify_walk, verify, ComposeError, ImmersionCertificate,
};
use crate::gen::Fixture;
use crate::graph::{write_digraph, ArcId, GraphError, MultiDigraph, VertexId};
use crate::menger::{paths_or_cut, CutCertificate, MengerError};
use crate::oracle::{exhaustive_immersion, OracleError, OracleOutcome, SearchLimits};
use crate::patterns::{
    bound_c1, bound_dprime, bound_f, build_f, build_tt, tt_routing_l, BoundsError,
};

/// Degree-precondition regime.
///
/// Strict checks the theorem's hypothesis at entry; Relaxed is the internal
/// "all but c1 vertices" contract; Fixture waives degree preconditions so the
/// reduction mechanics can be driven on tiny handcrafted graphs. Structural
/// invariants stay asserted in every mode.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Mode {
    Strict,
    Relaxed,
    Fixture,
}

/// Diagnostic payload emitted when a proof-level invariant fails at runtime.
#[derive(Debug)]
pub struct InvariantReport {
    pub message: String,
    /// The digraph under reduction, in the digraph text format.
    pub digraph: String,
    /// The inner certificate in play, if any.
    pub certificate: Option<String>,
    /// Line-oriented reduction dump: T, X, Y, cut/reach/private sizes,
    /// R degrees, ystar.
    pub dump: String,
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("input digraph is not simple")]
    NotSimple,
    #[error("minimum outdegree {found} does not exceed the required bound {required}")]
    InsufficientOutdegree { found: usize, required: i64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("internal invariant broken: {}", .0.message)]
    InternalInvariant(Box<InvariantReport>),
    #[error("search failed: {0}")]
    SearchFailed(String),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Menger(#[from] MengerError),
}

fn broken(
    message: impl Into<String>,
    graph: &MultiDigraph,
    cert: Option<&ImmersionCertificate>,
    dump: String,
) -> SolverError {
    SolverError::InternalInvariant(Box::new(InvariantReport {
        message: message.into(),
        digraph: write_digraph(graph),
        certificate: cert.map(crate::certify::write_certificate),
        dump,
    }))
}

/// Outdegrees forced to exactly f(K,l) or 0.
#[derive(Clone, Debug)]
pub struct NormalizedDigraph {
    pub graph: MultiDigraph,
    /// Vertices of outdegree zero after normalization.
    pub t_set: BTreeSet<VertexId>,
    pub removed_arcs: BTreeSet<ArcId>,
}

/// One induction step's reduction data.
#[derive(Clone, Debug)]
pub struct ReductionState {
    pub tip: VertexId,
    /// y -> (E_y, C_y): a sub-l cut and the vertices still reaching y.
    pub cuts: BTreeMap<VertexId, (BTreeSet<ArcId>, BTreeSet<VertexId>)>,
    /// Inclusion-minimal cover Y, ascending.
    pub cover: Vec<VertexId>,
    /// y -> S_y: vertices private to C_y within the cover.
    pub private: BTreeMap<VertexId, BTreeSet<VertexId>>,
    /// Multi-out/in-degrees in the auxiliary multidigraph R on Y.
    pub r_out: BTreeMap<VertexId, usize>,
    pub r_in: BTreeMap<VertexId, usize>,
    pub ystar: VertexId,
}

/// Where an arc of the reduced digraph H came from.
#[derive(Clone, Debug)]
pub enum HArcOrigin {
    /// An arc of the parent digraph, same identity.
    Parent(ArcId),
    /// A shortcut standing for a consecutive segment of an inner path.
    Shortcut { path: usize, segment: Vec<ArcId> },
}

/// The reduced digraph H together with the dictionaries needed to lift an
/// H-immersion back to the parent.
#[derive(Clone, Debug)]
pub struct HGraph {
    pub graph: MultiDigraph,
    /// H vertex id -> parent vertex id.
    pub to_parent_vertex: Vec<VertexId>,
    /// H arc id -> origin.
    pub arc_origin: Vec<HArcOrigin>,
}

/// Either an extension to a new branch vertex, or the full cut map.
#[derive(Debug)]
pub enum ExtendOutcome {
    Extended {
        y: VertexId,
        paths: Vec<Vec<ArcId>>,
    },
    AllCuts(BTreeMap<VertexId, (BTreeSet<ArcId>, BTreeSet<VertexId>)>),
}

fn reduction_dump(
    t_set: &BTreeSet<VertexId>,
    branch: &[VertexId],
    rs: Option<&ReductionState>,
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "T {}", join(t_set.iter()));
    let _ = writeln!(out, "X {}", join(branch.iter()));
    if let Some(rs) = rs {
        let _ = writeln!(out, "tip {}", rs.tip);
        let _ = writeln!(out, "Y {}", join(rs.cover.iter()));
        for (y, (e, c)) in &rs.cuts {
            let _ = writeln!(out, "cut {y} |E|={} |C|={}", e.len(), c.len());
        }
        for (y, s) in &rs.private {
            let _ = writeln!(out, "private {y} |S|={} {}", s.len(), join(s.iter()));
        }
        for y in &rs.cover {
            let _ = writeln!(
                out,
                "rdeg {y} out={} in={}",
                rs.r_out.get(y).copied().unwrap_or(0),
                rs.r_in.get(y).copied().unwrap_or(0)
            );
        }
        let _ = writeln!(out, "ystar {}", rs.ystar);
    }
    out
}

fn join<'a, I: Iterator<Item = &'a VertexId>>(it: I) -> String {
    it.map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

/// Forces every outdegree to exactly f(K,l) or 0: vertices below the bound
/// lose all out-arcs and form T, the rest are trimmed down to the bound by
/// deleting highest ArcIds first.
pub fn normalize(
    mut graph: MultiDigraph,
    big_k: u32,
    l: u32,
    mode: Mode,
) -> Result<NormalizedDigraph, SolverError> {
    if mode == Mode::Fixture {
        // degree preconditions waived; T is just what already has outdegree 0
        let t_set = graph
            .vertices()
            .filter(|&v| graph.out_degree(v).unwrap() == 0)
            .collect();
        return Ok(NormalizedDigraph {
            graph,
            t_set,
            removed_arcs: BTreeSet::new(),
        });
    }
    let f = bound_f(big_k as i64, l as i64)? as usize;
    let c1 = bound_c1(big_k as i64, l as i64)?;
    let verts: Vec<VertexId> = graph.vertices().collect();
    let mut t_set = BTreeSet::new();
    let mut removed_arcs = BTreeSet::new();
    for v in verts {
        let deg = graph.out_degree(v)?;
        if deg < f {
            t_set.insert(v);
            let drop: Vec<ArcId> = graph.out_arcs(v).to_vec();
            removed_arcs.extend(drop.iter().copied());
            graph.remove_arcs(drop)?;
        } else if deg > f {
            let mut arcs: Vec<ArcId> = graph.out_arcs(v).to_vec();
            arcs.sort_unstable();
            let drop: Vec<ArcId> = arcs.split_off(f);
            removed_arcs.extend(drop.iter().copied());
            graph.remove_arcs(drop)?;
        }
    }
    if t_set.len() as i64 > c1 {
        return Err(SolverError::Precondition(format!(
            "{} vertices below outdegree {f}, budget c1 = {c1}",
            t_set.len()
        )));
    }
    Ok(NormalizedDigraph {
        graph,
        t_set,
        removed_arcs,
    })
}

/// Removes T and trims every multiplicity above (K-1)·l, producing the
/// induction instance; re-checks the surviving outdegree bound at runtime.
pub fn reduce_for_induction(
    nd: &NormalizedDigraph,
    big_k: u32,
    l: u32,
    mode: Mode,
) -> Result<MultiDigraph, SolverError> {
    let mut g = nd.graph.clone();
    g.remove_vertices(nd.t_set.iter().copied())?;
    let cap = ((big_k - 1) * l) as usize;
    let verts: Vec<VertexId> = g.vertices().collect();
    for u in verts {
        let mut by_head: BTreeMap<VertexId, Vec<ArcId>> = BTreeMap::new();
        for &a in g.out_arcs(u) {
            by_head.entry(g.head(a)?).or_default().push(a);
        }
        for (_, mut arcs) in by_head {
            if arcs.len() > cap {
                arcs.sort_unstable();
                g.remove_arcs(arcs.split_off(cap))?;
            }
        }
    }
    if mode != Mode::Fixture {
        let dprime = bound_dprime(big_k as i64, l as i64)?;
        if let Some((v, deg)) = g.min_out_degree() {
            if (deg as i64) < dprime {
                return Err(broken(
                    format!(
                        "outdegree {deg} at vertex {v} after reduction, expected at least d' = {dprime}"
                    ),
                    &g,
                    None,
                    reduction_dump(&nd.t_set, &[], None),
                ));
            }
        }
        if g.vertex_count() == 0 {
            return Err(broken(
                "reduction emptied the digraph",
                &g,
                None,
                reduction_dump(&nd.t_set, &[], None),
            ));
        }
        debug_assert!(g.max_multiplicity() <= cap);
    }
    Ok(g)
}

/// Shrinks an immersion to the fixpoint where no path travels indirectly
/// between two of its vertices while an unused parallel copy of the direct
/// arc exists. Each applied shortcut strictly decreases the total arc count,
/// so the fixpoint is reached.
pub fn minimize_cert(
    graph: &MultiDigraph,
    mut cert: ImmersionCertificate,
) -> ImmersionCertificate {
    let mut used = vec![false; graph.arc_slots()];
    for a in cert.used_arcs() {
        used[a.index()] = true;
    }
    loop {
        let mut changed = false;
        for path in cert.arc_paths.iter_mut() {
            'rescan: loop {
                if path.len() < 2 {
                    break;
                }
                let mut seq: Vec<VertexId> = Vec::with_capacity(path.len() + 1);
                seq.push(graph.tail(path[0]).unwrap());
                for &a in path.iter() {
                    seq.push(graph.head(a).unwrap());
                }
                for p in 0..seq.len() {
                    for q in p + 2..seq.len() {
                        let (x, y) = (seq[p], seq[q]);
                        let direct = graph
                            .out_arcs(x)
                            .iter()
                            .copied()
                            .find(|&a| !used[a.index()] && graph.head(a).unwrap() == y);
                        if let Some(a) = direct {
                            for &old in &path[p..q] {
                                used[old.index()] = false;
                            }
                            used[a.index()] = true;
                            path.splice(p..q, [a]);
                            changed = true;
                            continue 'rescan;
                        }
                    }
                }
                break;
            }
        }
        if !changed {
            return cert;
        }
    }
}

/// D': the parent minus all inner path arcs minus every branch vertex except
/// the chain tip. Returns the reduced digraph and the tip.
pub fn build_dprime(
    parent: &MultiDigraph,
    inner: &ImmersionCertificate,
) -> Result<(MultiDigraph, VertexId), SolverError> {
    let tip = *inner
        .vertex_map
        .last()
        .ok_or_else(|| SolverError::Precondition("inner certificate has no vertices".into()))?;
    let mut g = parent.clone();
    g.remove_arcs(inner.used_arcs())?;
    g.remove_vertices(
        inner.vertex_map[..inner.vertex_map.len() - 1]
            .iter()
            .copied(),
    )?;
    Ok((g, tip))
}

/// Scans candidate targets in ascending id order; the first one admitting l
/// arc-disjoint paths from the tip wins. If none does, returns every cut.
///
/// With `jobs > 1` the per-candidate queries run on that many threads, but
/// results are consumed in ascending order, so the outcome is identical to
/// the sequential scan.
pub fn extend_or_cuts(
    dprime: &MultiDigraph,
    tip: VertexId,
    l: u32,
    jobs: usize,
) -> Result<ExtendOutcome, SolverError> {
    let candidates: Vec<VertexId> = dprime.vertices().filter(|&v| v != tip).collect();
    if candidates.is_empty() {
        return Err(broken(
            "empty candidate set: D' has no vertex besides the tip",
            dprime,
            None,
            String::new(),
        ));
    }
    let jobs = jobs.max(1);
    let mut cuts = BTreeMap::new();
    for chunk in candidates.chunks(jobs) {
        let results: Vec<(VertexId, CutCertificate)> = if jobs == 1 || chunk.len() == 1 {
            chunk
                .iter()
                .map(|&y| paths_or_cut(dprime, tip, y, l as usize).map(|c| (y, c)))
                .collect::<Result<_, _>>()?
        } else {
            std::thread::scope(|scope| {
                let handles: Vec<_> = chunk
                    .iter()
                    .map(|&y| {
                        scope.spawn(move || paths_or_cut(dprime, tip, y, l as usize).map(|c| (y, c)))
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("menger worker panicked"))
                    .collect::<Result<_, _>>()
            })?
        };
        for (y, outcome) in results {
            match outcome {
                CutCertificate::Paths(paths) => {
                    return Ok(ExtendOutcome::Extended { y, paths });
                }
                CutCertificate::Cut { arcs, reach } => {
                    cuts.insert(y, (arcs, reach));
                }
            }
        }
    }
    Ok(ExtendOutcome::AllCuts(cuts))
}

/// Stitches the inner F(K-1,l) immersion and the l new tip-to-y paths into an
/// F(K,l) certificate. The new paths live in D', which excludes every inner
/// path arc, so global arc-disjointness is automatic.
fn assemble_extension(
    parent: &MultiDigraph,
    inner: &ImmersionCertificate,
    y: VertexId,
    new_paths: Vec<Vec<ArcId>>,
    big_k: u32,
    l: u32,
) -> Result<ImmersionCertificate, SolverError> {
    let pattern = build_f(big_k, l)?;
    let mut vertex_map = inner.vertex_map.clone();
    vertex_map.push(y);
    let mut arc_paths = inner.arc_paths.clone();
    arc_paths.extend(new_paths);
    let cert = ImmersionCertificate {
        pattern,
        vertex_map,
        arc_paths,
    };
    let violations = verify(parent, &cert);
    if !violations.is_empty() {
        return Err(broken(
            format!("assembled extension fails verification: {}", violations[0]),
            parent,
            Some(&cert),
            String::new(),
        ));
    }
    Ok(cert)
}

/// From the full cut map, selects the minimal cover Y, the private sets S_y,
/// the auxiliary multidigraph R's degree tables and the low-out-loss vertex
/// ystar, asserting every structural invariant of the argument.
pub fn build_reduction(
    dprime: &MultiDigraph,
    t_set: &BTreeSet<VertexId>,
    tip: VertexId,
    cuts: BTreeMap<VertexId, (BTreeSet<ArcId>, BTreeSet<VertexId>)>,
    big_k: u32,
    l: u32,
    mode: Mode,
) -> Result<ReductionState, SolverError> {
    let fail = |msg: String, rs: Option<&ReductionState>| {
        broken(
            msg,
            dprime,
            None,
            reduction_dump(t_set, &[tip], rs),
        )
    };

    let universe: BTreeSet<VertexId> = dprime.vertices().filter(|&v| v != tip).collect();
    for (&y, (e, c)) in &cuts {
        if e.len() >= l as usize {
            return Err(fail(format!("|E_{y}| = {} not below l = {l}", e.len()), None));
        }
        if !c.contains(&y) {
            return Err(fail(format!("C_{y} does not contain {y}"), None));
        }
        if c.contains(&tip) {
            return Err(fail(format!("C_{y} contains the tip {tip}"), None));
        }
    }
    if cuts.len() != universe.len() {
        return Err(fail(
            format!("{} cuts for {} candidates", cuts.len(), universe.len()),
            None,
        ));
    }

    // greedy cover, then prune to inclusion-minimality
    let mut covered: BTreeSet<VertexId> = BTreeSet::new();
    let mut cover: Vec<VertexId> = Vec::new();
    while covered.len() < universe.len() {
        let best = cuts
            .iter()
            .map(|(&y, (_, c))| (c.difference(&covered).count(), y))
            .max_by_key(|&(gain, y)| (gain, std::cmp::Reverse(y)))
            .map(|(gain, y)| (gain, y))
            .unwrap();
        if best.0 == 0 {
            return Err(fail("cover cannot make progress".into(), None));
        }
        cover.push(best.1);
        covered.extend(cuts[&best.1].1.iter().copied());
    }
    cover.sort_unstable();
    let mut i = 0;
    while i < cover.len() {
        let without: BTreeSet<VertexId> = cover
            .iter()
            .filter(|&&y| y != cover[i])
            .flat_map(|y| cuts[y].1.iter().copied())
            .collect();
        if universe.is_subset(&without) {
            cover.remove(i);
        } else {
            i += 1;
        }
    }

    // T inside D' is forced into any cover
    for &t in t_set {
        if universe.contains(&t) && !cover.contains(&t) {
            return Err(fail(format!("zero-outdegree vertex {t} missing from Y"), None));
        }
    }

    // private sets
    let mut private: BTreeMap<VertexId, BTreeSet<VertexId>> = cover
        .iter()
        .map(|&y| (y, BTreeSet::new()))
        .collect();
    for &u in &universe {
        let owners: Vec<VertexId> = cover
            .iter()
            .copied()
            .filter(|y| cuts[y].1.contains(&u))
            .collect();
        if owners.len() == 1 {
            private.get_mut(&owners[0]).unwrap().insert(u);
        }
    }
    for &y in &cover {
        if private[&y].is_empty() {
            return Err(fail(format!("S_{y} empty despite minimality of Y"), None));
        }
        if !t_set.contains(&y) {
            if let Some(t) = private[&y].iter().find(|u| t_set.contains(u)) {
                return Err(fail(
                    format!("S_{y} of a non-T cover vertex contains T-vertex {t}"),
                    None,
                ));
            }
        }
    }

    // auxiliary multidigraph R: one arc per (D'-arc leaving S_y, covered head)
    let mut owner: BTreeMap<VertexId, VertexId> = BTreeMap::new();
    for (&y, s) in &private {
        for &u in s {
            owner.insert(u, y);
        }
    }
    let mut r_out: BTreeMap<VertexId, usize> = cover.iter().map(|&y| (y, 0)).collect();
    let mut r_in: BTreeMap<VertexId, usize> = cover.iter().map(|&y| (y, 0)).collect();
    for (_, tail, head) in dprime.arcs() {
        if let Some(&y) = owner.get(&tail) {
            for &y2 in &cover {
                if y2 != y && cuts[&y2].1.contains(&head) {
                    *r_out.get_mut(&y).unwrap() += 1;
                    *r_in.get_mut(&y2).unwrap() += 1;
                }
            }
        }
    }
    for &y in &cover {
        if r_in[&y] > cuts[&y].0.len() {
            return Err(fail(
                format!(
                    "R in-degree {} of {y} exceeds |E_{y}| = {}",
                    r_in[&y],
                    cuts[&y].0.len()
                ),
                None,
            ));
        }
    }

    if mode != Mode::Fixture {
        let c1 = bound_c1(big_k as i64, l as i64)?;
        if (cover.len() as i64) < 2 * c1 {
            return Err(fail(
                format!("|Y| = {} below 2·c1 = {}", cover.len(), 2 * c1),
                None,
            ));
        }
    }

    let ystar = cover
        .iter()
        .copied()
        .filter(|y| !t_set.contains(y))
        .min_by_key(|&y| (r_out[&y], y))
        .ok_or_else(|| fail("Y \\ T is empty, no ystar candidate".into(), None))?;
    if mode != Mode::Fixture && r_out[&ystar] as u32 > 2 * l {
        return Err(fail(
            format!("ystar {ystar} has R out-degree {} above 2l = {}", r_out[&ystar], 2 * l),
            None,
        ));
    }

    let rs = ReductionState {
        tip,
        cuts,
        cover,
        private,
        r_out,
        r_in,
        ystar,
    };
    Ok(rs)
}

/// Builds the reduced digraph H on S_ystar plus the branch vertices: D'-arcs
/// inside S_ystar, non-path arcs from S_ystar into the branch set, and one
/// shortcut arc per consecutive pair of S_ystar-vertices on each inner path.
pub fn build_h(
    parent: &MultiDigraph,
    inner: &ImmersionCertificate,
    rs: &ReductionState,
    big_k: u32,
    l: u32,
    mode: Mode,
) -> Result<HGraph, SolverError> {
    let s_star = &rs.private[&rs.ystar];
    let branch: BTreeSet<VertexId> = inner.vertex_map.iter().copied().collect();
    let used_path_arcs: BTreeSet<ArcId> = inner.used_arcs().collect();

    let mut members: Vec<VertexId> = s_star.union(&branch).copied().collect();
    members.sort_unstable();
    let mut to_h: BTreeMap<VertexId, VertexId> = BTreeMap::new();
    let mut graph = MultiDigraph::with_vertices(members.len());
    for (i, &v) in members.iter().enumerate() {
        to_h.insert(v, VertexId(i as u32));
    }
    let mut arc_origin: Vec<HArcOrigin> = Vec::new();

    // surviving parent arcs, in ascending id order
    for (a, tail, head) in parent.arcs() {
        if used_path_arcs.contains(&a) || !s_star.contains(&tail) {
            continue;
        }
        if s_star.contains(&head) || branch.contains(&head) {
            graph.add_arc(to_h[&tail], to_h[&head]).unwrap();
            arc_origin.push(HArcOrigin::Parent(a));
        }
    }

    // shortcut arcs, one per consecutive pair of S-vertices along each path
    for (pid, path) in inner.arc_paths.iter().enumerate() {
        if path.is_empty() {
            continue;
        }
        let mut seq: Vec<VertexId> = vec![parent.tail(path[0])?];
        for &a in path {
            seq.push(parent.head(a)?);
        }
        let marks: Vec<usize> = (0..seq.len())
            .filter(|&i| s_star.contains(&seq[i]))
            .collect();
        for w in marks.windows(2) {
            let (p, q) = (w[0], w[1]);
            graph.add_arc(to_h[&seq[p]], to_h[&seq[q]]).unwrap();
            arc_origin.push(HArcOrigin::Shortcut {
                path: pid,
                segment: path[p..q].to_vec(),
            });
        }
    }

    let fail = |msg: String| {
        broken(
            msg,
            parent,
            Some(inner),
            reduction_dump(&BTreeSet::new(), &inner.vertex_map, Some(rs)),
        )
    };
    if graph.vertex_count() >= parent.vertex_count() {
        return Err(fail(format!(
            "H has {} vertices, parent has {}: no strict shrink",
            graph.vertex_count(),
            parent.vertex_count()
        )));
    }
    let cap = (big_k * l) as usize;
    if graph.max_multiplicity() > cap {
        return Err(fail(format!(
            "H multiplicity {} above K·l = {cap}",
            graph.max_multiplicity()
        )));
    }
    if mode != Mode::Fixture {
        let f = bound_f(big_k as i64, l as i64)?;
        let c1 = bound_c1(big_k as i64, l as i64)?;
        let low = graph
            .vertices()
            .filter(|&v| (graph.out_degree(v).unwrap() as i64) < f)
            .count();
        if low as i64 > c1 {
            return Err(fail(format!(
                "H has {low} vertices below outdegree {f}, budget c1 = {c1}"
            )));
        }
    }

    Ok(HGraph {
        graph,
        to_parent_vertex: members,
        arc_origin,
    })
}

/// Expands every shortcut arc of an H-certificate into its recorded path
/// segment and re-verifies the result in the parent digraph.
pub fn lift(
    cert_h: &ImmersionCertificate,
    hg: &HGraph,
    parent: &MultiDigraph,
) -> Result<ImmersionCertificate, SolverError> {
    let violations = verify(&hg.graph, cert_h);
    if !violations.is_empty() {
        return Err(broken(
            format!("certificate to lift does not verify in H: {}", violations[0]),
            &hg.graph,
            Some(cert_h),
            String::new(),
        ));
    }
    let vertex_map: Vec<VertexId> = cert_h
        .vertex_map
        .iter()
        .map(|v| hg.to_parent_vertex[v.index()])
        .collect();
    let mut seen: BTreeSet<ArcId> = BTreeSet::new();
    let mut arc_paths = Vec::with_capacity(cert_h.arc_paths.len());
    for hpath in &cert_h.arc_paths {
        let mut walk: Vec<ArcId> = Vec::new();
        for &ha in hpath {
            match &hg.arc_origin[ha.index()] {
                HArcOrigin::Parent(a) => walk.push(*a),
                HArcOrigin::Shortcut { segment, .. } => walk.extend(segment.iter().copied()),
            }
        }
        let path = simplify_walk(parent, &walk);
        for &a in &path {
            if !seen.insert(a) {
                return Err(broken(
                    format!("lift collision: parent arc {a} claimed twice"),
                    parent,
                    Some(cert_h),
                    String::new(),
                ));
            }
        }
        arc_paths.push(path);
    }
    let cert = ImmersionCertificate {
        pattern: cert_h.pattern.clone(),
        vertex_map,
        arc_paths,
    };
    let violations = verify(parent, &cert);
    if !violations.is_empty() {
        return Err(broken(
            format!("lifted certificate fails verification: {}", violations[0]),
            parent,
            Some(&cert),
            String::new(),
        ));
    }
    Ok(cert)
}

/// Finds an F(K,l) immersion under the theorem's hypotheses.
///
/// `relaxed` admits up to c1(K,l) vertices below the outdegree bound, the
/// contract the recursion itself guarantees; strict mode demands the full
/// minimum-outdegree hypothesis.
pub fn find_f(
    d: &MultiDigraph,
    big_k: u32,
    l: u32,
    relaxed: bool,
    jobs: usize,
    trace: &mut Vec<String>,
) -> Result<ImmersionCertificate, SolverError> {
    if big_k < 1 {
        return Err(SolverError::Precondition("K must be at least 1".into()));
    }
    if l < 2 {
        return Err(SolverError::Precondition(format!(
            "l = {l} below 2, the bound is only established for l >= 2"
        )));
    }
    if d.vertex_count() == 0 {
        return Err(SolverError::Precondition("empty digraph".into()));
    }
    let cap = (big_k * l) as usize;
    if d.max_multiplicity() > cap {
        return Err(SolverError::Precondition(format!(
            "multiplicity {} above K·l = {cap}",
            d.max_multiplicity()
        )));
    }
    if big_k > 1 {
        let f = bound_f(big_k as i64, l as i64)?;
        if relaxed {
            let c1 = bound_c1(big_k as i64, l as i64)?;
            let low = d
                .vertices()
                .filter(|&v| (d.out_degree(v).unwrap() as i64) < f)
                .count();
            if low as i64 > c1 {
                return Err(SolverError::Precondition(format!(
                    "{low} vertices below outdegree {f}, budget c1 = {c1}"
                )));
            }
        } else {
            let (v, deg) = d.min_out_degree().unwrap();
            if deg as i64 <= f {
                return Err(SolverError::Precondition(format!(
                    "minimum outdegree {deg} at vertex {v} does not exceed f({big_k},{l}) = {f}"
                )));
            }
        }
    }
    let cert = find_f_rec(d.clone(), big_k, l, jobs, trace)?;
    let violations = verify(d, &cert);
    if !violations.is_empty() {
        return Err(broken(
            format!("final certificate fails verification: {}", violations[0]),
            d,
            Some(&cert),
            String::new(),
        ));
    }
    Ok(cert)
}

fn find_f_rec(
    graph: MultiDigraph,
    big_k: u32,
    l: u32,
    jobs: usize,
    trace: &mut Vec<String>,
) -> Result<ImmersionCertificate, SolverError> {
    if big_k == 1 {
        let v = graph
            .vertices()
            .next()
            .ok_or_else(|| SolverError::Precondition("empty digraph at K=1".into()))?;
        trace.push(format!("K=1: branch vertex {v}"));
        return Ok(ImmersionCertificate {
            pattern: build_f(1, l)?,
            vertex_map: vec![v],
            arc_paths: Vec::new(),
        });
    }
    let (n, m) = (graph.vertex_count(), graph.arc_count());
    let nd = normalize(graph, big_k, l, Mode::Relaxed)?;
    let reduced = reduce_for_induction(&nd, big_k, l, Mode::Relaxed)?;
    let inner = find_f_rec(reduced, big_k - 1, l, jobs, trace)?;
    let inner = minimize_cert(&nd.graph, inner);
    let (dprime, tip) = build_dprime(&nd.graph, &inner)?;
    match extend_or_cuts(&dprime, tip, l, jobs)? {
        ExtendOutcome::Extended { y, paths } => {
            trace.push(format!("K={big_k} n={n} m={m}: extended at y={y}"));
            assemble_extension(&nd.graph, &inner, y, paths, big_k, l)
        }
        ExtendOutcome::AllCuts(cuts) => {
            trace.push(format!(
                "K={big_k} n={n} m={m}: no extension, reducing through H"
            ));
            let rs = build_reduction(&dprime, &nd.t_set, tip, cuts, big_k, l, Mode::Relaxed)?;
            let hg = build_h(&nd.graph, &inner, &rs, big_k, l, Mode::Relaxed)?;
            let cert_h = find_f_rec(hg.graph.clone(), big_k, l, jobs, trace)?;
            lift(&cert_h, &hg, &nd.graph)
        }
    }
}

/// Finds a TT_k immersion: the F(k, max(2, k(k-1)/2)) engine composed with
/// the explicit TT routing. With `force`, degree preconditions are waived
/// and the search becomes best-effort (falling back to the exhaustive oracle
/// on small hosts).
pub fn find_tt(
    d: &MultiDigraph,
    k: u32,
    force: bool,
    jobs: usize,
    trace: &mut Vec<String>,
) -> Result<ImmersionCertificate, SolverError> {
    if !d.is_simple() {
        return Err(SolverError::NotSimple);
    }
    if k < 1 {
        return Err(SolverError::Precondition("k must be at least 1".into()));
    }
    if k == 1 {
        let v = d
            .vertices()
            .next()
            .ok_or_else(|| SolverError::Precondition("empty digraph".into()))?;
        return Ok(ImmersionCertificate {
            pattern: build_tt(1)?,
            vertex_map: vec![v],
            arc_paths: Vec::new(),
        });
    }
    if k == 2 {
        let (a, t, h) = d.arcs().next().ok_or(SolverError::InsufficientOutdegree {
            found: 0,
            required: 1,
        })?;
        return Ok(ImmersionCertificate {
            pattern: build_tt(2)?,
            vertex_map: vec![t, h],
            arc_paths: vec![vec![a]],
        });
    }

    let l = tt_routing_l(k);
    let required = bound_f(k as i64, l as i64)?;
    let (v, found) = d
        .min_out_degree()
        .ok_or_else(|| SolverError::Precondition("empty digraph".into()))?;
    if found as i64 <= required && !force {
        trace.push(format!("minimum outdegree {found} at vertex {v}"));
        return Err(SolverError::InsufficientOutdegree { found, required });
    }

    let result = find_f(d, k, l, false, jobs, trace).and_then(|outer| {
        let (_, inner) = route_tt_in_f(k)?;
        compose(d, &outer, &inner).map_err(|e| match e {
            ComposeError::HostMismatch(m) | ComposeError::ComposeOverlap(m) => broken(
                format!("TT composition failed: {m}"),
                d,
                Some(&outer),
                String::new(),
            ),
        })
    });
    match result {
        Ok(cert) => Ok(cert),
        Err(e) if force => {
            // best effort: the hypotheses do not hold, try the exact search
            trace.push(format!("forced search: solver path failed ({e}), trying oracle"));
            let pattern = build_tt(k)?;
            match exhaustive_immersion(d, &pattern, SearchLimits::default()) {
                Ok(OracleOutcome::Found(cert)) => Ok(cert),
                Ok(OracleOutcome::NotPresent) => {
                    Err(SolverError::SearchFailed("no TT immersion present".into()))
                }
                Err(OracleError::HostTooLarge(m)) => Err(SolverError::SearchFailed(format!(
                    "hypotheses unmet and host too large for exact search: {m}"
                ))),
                Err(OracleError::ResourceExceeded(n)) => Err(SolverError::SearchFailed(format!(
                    "exact search budget exhausted after {n} nodes"
                ))),
            }
        }
        Err(e) => Err(e),
    }
}

/// What a fixture run produced, for comparison against the fixture's
/// expectations.
#[derive(Debug)]
pub struct FixtureReport {
    pub max_cut_size: usize,
    pub cover: Vec<VertexId>,
    pub private_sizes: Vec<(VertexId, usize)>,
    pub t_set: Vec<VertexId>,
    pub ystar: VertexId,
    pub shortcut_segments: Vec<usize>,
    pub h_vertex_count: usize,
    pub lifted: ImmersionCertificate,
}

/// Drives a fixture through the whole reduction branch in fixture mode:
/// minimize, D', forced AllCuts, cover selection, H, an exact F(K,l) search
/// in H, and the lift back. Every expectation shipped with the fixture is
/// asserted against what actually happened.
pub fn run_reduction_fixture(fx: &Fixture) -> Result<FixtureReport, SolverError> {
    let violations = verify(&fx.graph, &fx.planted);
    if !violations.is_empty() {
        return Err(SolverError::Precondition(format!(
            "planted certificate of {} does not verify: {}",
            fx.name, violations[0]
        )));
    }
    let nd = normalize(fx.graph.clone(), fx.big_k, fx.l, Mode::Fixture)?;
    let inner = minimize_cert(&nd.graph, fx.planted.clone());
    let (dprime, tip) = build_dprime(&nd.graph, &inner)?;
    let cuts = match extend_or_cuts(&dprime, tip, fx.l, 1)? {
        ExtendOutcome::AllCuts(cuts) => cuts,
        ExtendOutcome::Extended { y, .. } => {
            return Err(SolverError::Precondition(format!(
                "fixture {} unexpectedly extended at y={y}; it must force the reduction branch",
                fx.name
            )));
        }
    };
    let max_cut_size = cuts.values().map(|(e, _)| e.len()).max().unwrap_or(0);
    let rs = build_reduction(&dprime, &nd.t_set, tip, cuts, fx.big_k, fx.l, Mode::Fixture)?;
    let hg = build_h(&nd.graph, &inner, &rs, fx.big_k, fx.l, Mode::Fixture)?;

    let pattern = build_f(fx.big_k, fx.l)?;
    let cert_h = match exhaustive_immersion(&hg.graph, &pattern, SearchLimits::default()) {
        Ok(OracleOutcome::Found(c)) => c,
        Ok(OracleOutcome::NotPresent) => {
            return Err(SolverError::SearchFailed(format!(
                "fixture {}: H contains no F({},{}) immersion",
                fx.name, fx.big_k, fx.l
            )));
        }
        Err(e) => return Err(SolverError::SearchFailed(e.to_string())),
    };
    let lifted = lift(&cert_h, &hg, &nd.graph)?;

    let shortcut_segments: Vec<usize> = hg
        .arc_origin
        .iter()
        .filter_map(|o| match o {
            HArcOrigin::Shortcut { segment, .. } => Some(segment.len()),
            HArcOrigin::Parent(_) => None,
        })
        .collect();
    let report = FixtureReport {
        max_cut_size,
        cover: rs.cover.clone(),
        private_sizes: rs.private.iter().map(|(&y, s)| (y, s.len())).collect(),
        t_set: nd.t_set.iter().copied().collect(),
        ystar: rs.ystar,
        shortcut_segments,
        h_vertex_count: hg.graph.vertex_count(),
        lifted,
    };

    // the fixture's shipped expectations are part of the contract
    let exp = &fx.expected;
    let got = (
        report.max_cut_size <= exp.max_cut_size,
        report.cover == exp.cover.iter().map(|&v| VertexId(v)).collect::<Vec<_>>(),
        report.private_sizes
            == exp
                .private_sizes
                .iter()
                .map(|&(v, n)| (VertexId(v), n))
                .collect::<Vec<_>>(),
        report.t_set == exp.t_set.iter().map(|&v| VertexId(v)).collect::<Vec<_>>(),
        report.ystar == VertexId(exp.ystar),
        report.shortcut_segments == exp.shortcut_segments,
        report.h_vertex_count == exp.h_vertex_count,
    );
    if got != (true, true, true, true, true, true, true) {
        return Err(broken(
            format!("fixture {} diverged from its expected mechanics: {report:?}", fx.name),
            &fx.graph,
            Some(&fx.planted),
            reduction_dump(&nd.t_set, &inner.vertex_map, Some(&rs)),
        ));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patterns::PatternKind;

    fn complete_digraph(n: u32) -> MultiDigraph {
        let mut g = MultiDigraph::with_vertices(n as usize);
        for u in 0..n {
            for v in 0..n {
                if u != v {
                    g.add_arc(VertexId(u), VertexId(v)).unwrap();
                }
            }
        }
        g
    }

    #[test]
    fn normalize_trims_to_exact_outdegree() {
        // K=1 f(1,2)=8: vertex 0 with 10 out-arcs loses the 2 highest ids
        let mut g = MultiDigraph::with_vertices(11);
        let mut arcs = Vec::new();
        for v in 1..11u32 {
            arcs.push(g.add_arc(VertexId(0), VertexId(v)).unwrap());
        }
        // vertices 1..11 have outdegree 0 and would all land in T; give the
        // graph only one vertex slot below the bound by checking K=1 directly
        let nd = normalize(g, 1, 2, Mode::Relaxed);
        // c1 needs K >= 2, so K=1 normalization is never called in the real
        // pipeline; assert the precondition error instead
        assert!(nd.is_err());
    }

    #[test]
    fn normalize_examples() {
        // f(2,2)=64, c1(2,2)=5: 66-vertex complete digraph, outdegree 65
        let g = complete_digraph(66);
        let nd = normalize(g, 2, 2, Mode::Relaxed).unwrap();
        assert!(nd.t_set.is_empty());
        for v in nd.graph.vertices() {
            assert_eq!(nd.graph.out_degree(v).unwrap(), 64);
        }
        // removed arcs are the highest ids of each vertex
        assert_eq!(nd.removed_arcs.len(), 66);
    }

    #[test]
    fn normalize_zero_outdegree_vertex_goes_to_t() {
        let mut g = complete_digraph(66);
        let drop: Vec<ArcId> = g.out_arcs(VertexId(65)).to_vec();
        g.remove_arcs(drop).unwrap();
        let nd = normalize(g, 2, 2, Mode::Relaxed).unwrap();
        assert_eq!(nd.t_set, BTreeSet::from([VertexId(65)]));
    }

    #[test]
    fn reduce_trims_parallel_arcs() {
        // K=2, l=2: pairs capped at (K-1)l = 2
        let mut g = complete_digraph(66);
        for _ in 0..2 {
            g.add_arc(VertexId(0), VertexId(1)).unwrap();
        }
        let nd = NormalizedDigraph {
            graph: g,
            t_set: BTreeSet::new(),
            removed_arcs: BTreeSet::new(),
        };
        let reduced = reduce_for_induction(&nd, 2, 2, Mode::Fixture).unwrap();
        assert_eq!(reduced.multiplicity(VertexId(0), VertexId(1)).unwrap(), 2);
    }

    #[test]
    fn minimize_applies_single_shortcut() {
        let mut g = MultiDigraph::with_vertices(3);
        let a = g.add_arc(VertexId(0), VertexId(1)).unwrap();
        let b = g.add_arc(VertexId(1), VertexId(2)).unwrap();
        let c = g.add_arc(VertexId(0), VertexId(2)).unwrap();
        let cert = ImmersionCertificate {
            pattern: build_f(2, 1).unwrap(),
            vertex_map: vec![VertexId(0), VertexId(2)],
            arc_paths: vec![vec![a, b]],
        };
        let min = minimize_cert(&g, cert);
        assert_eq!(min.arc_paths, vec![vec![c]]);
    }

    #[test]
    fn minimize_cascades_freed_arcs() {
        // shortcutting path 0 frees its (a,b) arc, enabling a second shortcut
        // on path 1
        let mut g = MultiDigraph::with_vertices(6);
        let s = VertexId(0);
        let a = VertexId(1);
        let x = VertexId(2);
        let b = VertexId(3);
        let t = VertexId(4);
        let e0 = g.add_arc(s, a).unwrap();
        let e1 = g.add_arc(a, b).unwrap();
        let e2 = g.add_arc(b, t).unwrap();
        let e3 = g.add_arc(s, b).unwrap(); // direct shortcut for path 0
        let e4 = g.add_arc(a, x).unwrap();
        let e5 = g.add_arc(x, b).unwrap();
        let e6 = g.add_arc(b, t).unwrap();
        let e7 = g.add_arc(s, a).unwrap();
        let cert = ImmersionCertificate {
            pattern: build_f(2, 2).unwrap(),
            vertex_map: vec![s, t],
            arc_paths: vec![vec![e0, e1, e2], vec![e7, e4, e5, e6]],
        };
        assert!(verify(&g, &cert).is_empty());
        let min = minimize_cert(&g, cert);
        assert_eq!(min.arc_paths[0], vec![e3, e2]);
        assert_eq!(min.arc_paths[1], vec![e7, e1, e6]);
        assert!(verify(&g, &min).is_empty());
    }

    #[test]
    fn minimize_noop_when_no_shortcuts() {
        let mut g = MultiDigraph::with_vertices(3);
        let a = g.add_arc(VertexId(0), VertexId(1)).unwrap();
        let b = g.add_arc(VertexId(1), VertexId(2)).unwrap();
        let cert = ImmersionCertificate {
            pattern: build_f(2, 1).unwrap(),
            vertex_map: vec![VertexId(0), VertexId(2)],
            arc_paths: vec![vec![a, b]],
        };
        let min = minimize_cert(&g, cert.clone());
        assert_eq!(min.arc_paths, cert.arc_paths);
    }

    #[test]
    fn find_f_k2_on_complete_66() {
        // outdegree 65 > f(2,2) = 64
        let g = complete_digraph(66);
        let mut trace = Vec::new();
        let cert = find_f(&g, 2, 2, false, 1, &mut trace).unwrap();
        assert_eq!(cert.pattern.kind, PatternKind::F { k: 2, l: 2 });
        assert_eq!(cert.vertex_map.len(), 2);
        assert_eq!(cert.arc_paths.len(), 2);
        assert!(verify(&g, &cert).is_empty());
    }

    #[test]
    fn find_f_rejects_insufficient_degree() {
        let g = complete_digraph(10);
        let mut trace = Vec::new();
        assert!(matches!(
            find_f(&g, 2, 2, false, 1, &mut trace),
            Err(SolverError::Precondition(_))
        ));
    }

    #[test]
    fn find_tt_trivial_cases() {
        let g = complete_digraph(3);
        let mut trace = Vec::new();
        let c1 = find_tt(&g, 1, false, 1, &mut trace).unwrap();
        assert_eq!(c1.vertex_map, vec![VertexId(0)]);
        let c2 = find_tt(&g, 2, false, 1, &mut trace).unwrap();
        assert_eq!(c2.arc_paths, vec![vec![ArcId(0)]]);
    }

    #[test]
    fn find_tt_requires_degree_without_force() {
        let g = complete_digraph(10);
        let mut trace = Vec::new();
        match find_tt(&g, 3, false, 1, &mut trace) {
            Err(SolverError::InsufficientOutdegree { found, required }) => {
                assert_eq!(found, 9);
                assert_eq!(required, 486);
            }
            other => panic!("expected InsufficientOutdegree, got {other:?}"),
        }
    }

    #[test]
    fn find_tt_force_uses_oracle_on_small_hosts() {
        let g = complete_digraph(4);
        let mut trace = Vec::new();
        let cert = find_tt(&g, 3, true, 1, &mut trace).unwrap();
        assert!(verify(&g, &cert).is_empty());
        // a 3-cycle genuinely has no TT_3
        let mut cycle = MultiDigraph::with_vertices(3);
        cycle.add_arc(VertexId(0), VertexId(1)).unwrap();
        cycle.add_arc(VertexId(1), VertexId(2)).unwrap();
        cycle.add_arc(VertexId(2), VertexId(0)).unwrap();
        assert!(matches!(
            find_tt(&cycle, 3, true, 1, &mut trace),
            Err(SolverError::SearchFailed(_))
        ));
    }

    #[test]
    fn find_tt_rejects_multigraphs() {
        let mut g = MultiDigraph::with_vertices(2);
        g.add_arc(VertexId(0), VertexId(1)).unwrap();
        g.add_arc(VertexId(0), VertexId(1)).unwrap();
        let mut trace = Vec::new();
        assert!(matches!(
            find_tt(&g, 2, false, 1, &mut trace),
            Err(SolverError::NotSimple)
        ));
    }

    #[test]
    fn fixtures_run_clean() {
        for name in crate::gen::FIXTURE_NAMES {
            let fx = crate::gen::gen_reduction_fixture(name).unwrap();
            let report = run_reduction_fixture(&fx)
                .unwrap_or_else(|e| panic!("fixture {name} failed: {e}"));
            assert!(
                verify(&fx.graph, &report.lifted).is_empty(),
                "lifted certificate of {name} must verify in the fixture graph"
            );
        }
    }

    #[test]
    fn extend_or_cuts_parallel_matches_serial() {
        let fx = crate::gen::gen_reduction_fixture("shortcut-cascade").unwrap();
        let nd = normalize(fx.graph.clone(), fx.big_k, fx.l, Mode::Fixture).unwrap();
        let inner = minimize_cert(&nd.graph, fx.planted.clone());
        let (dprime, tip) = build_dprime(&nd.graph, &inner).unwrap();
        let serial = extend_or_cuts(&dprime, tip, fx.l, 1).unwrap();
        let parallel = extend_or_cuts(&dprime, tip, fx.l, 4).unwrap();
        match (serial, parallel) {
            (ExtendOutcome::AllCuts(a), ExtendOutcome::AllCuts(b)) => assert_eq!(a, b),
            _ => panic!("both scans must return all cuts"),
        }
    }
}

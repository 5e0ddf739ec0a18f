//! Immersion certificates: an independent verifier, certificate composition,
//! and the explicit TT_k routing through F(k, max(2, k(k-1)/2)).
//!
//! A certificate is the machine-checkable witness of an immersion: an
//! injective vertex map plus one arc-id path per pattern arc, globally
//! arc-disjoint. The verifier re-checks everything from scratch against the
//! host and never trusts the producer.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::graph::{ArcId, MultiDigraph, VertexId};
use crate::patterns::{build_f, build_pattern, build_tt, tt_routing_l, BoundsError, Pattern, PatternKind};

/// A concrete certificate defect, re-checkable in isolation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    /// Two pattern vertices share a host image.
    NotInjective {
        first: VertexId,
        second: VertexId,
        image: VertexId,
    },
    /// Consecutive path arcs are not head-to-tail chained.
    BrokenPath { pattern_arc: ArcId, position: usize },
    /// A path visits some vertex twice.
    VertexRepeat { pattern_arc: ArcId, vertex: VertexId },
    /// A host arc appears in more than one path position.
    DuplicateArc {
        host_arc: ArcId,
        first_pattern_arc: ArcId,
        second_pattern_arc: ArcId,
    },
    /// A path is empty, or references an arc the host does not have.
    MissingArc {
        pattern_arc: ArcId,
        host_arc: Option<ArcId>,
    },
    /// A path does not start or end at the mapped branch vertex.
    EndpointMismatch {
        pattern_arc: ArcId,
        expected: VertexId,
        found: VertexId,
    },
    /// A mapped host vertex does not exist.
    UnknownVertex {
        pattern_vertex: VertexId,
        host_vertex: VertexId,
    },
    /// Certificate shape does not match the pattern at all.
    Malformed(String),
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::NotInjective { first, second, image } => {
                write!(f, "NotInjective: pattern vertices {first} and {second} both map to {image}")
            }
            Violation::BrokenPath { pattern_arc, position } => {
                write!(f, "BrokenPath: pattern arc {pattern_arc} breaks at position {position}")
            }
            Violation::VertexRepeat { pattern_arc, vertex } => {
                write!(f, "VertexRepeat: pattern arc {pattern_arc} revisits vertex {vertex}")
            }
            Violation::DuplicateArc { host_arc, first_pattern_arc, second_pattern_arc } => write!(
                f,
                "DuplicateArc: host arc {host_arc} used by pattern arcs {first_pattern_arc} and {second_pattern_arc}"
            ),
            Violation::MissingArc { pattern_arc, host_arc: Some(a) } => {
                write!(f, "MissingArc: pattern arc {pattern_arc} references unknown host arc {a}")
            }
            Violation::MissingArc { pattern_arc, host_arc: None } => {
                write!(f, "MissingArc: pattern arc {pattern_arc} has an empty path")
            }
            Violation::EndpointMismatch { pattern_arc, expected, found } => write!(
                f,
                "EndpointMismatch: pattern arc {pattern_arc} expected endpoint {expected}, found {found}"
            ),
            Violation::UnknownVertex { pattern_vertex, host_vertex } => {
                write!(f, "UnknownVertex: pattern vertex {pattern_vertex} maps to unknown host vertex {host_vertex}")
            }
            Violation::Malformed(msg) => write!(f, "Malformed: {msg}"),
        }
    }
}

/// Injective vertex map plus, per pattern arc, a host arc-id path; globally
/// arc-disjoint. Paths are vertex-simple.
#[derive(Clone, Debug)]
pub struct ImmersionCertificate {
    pub pattern: Pattern,
    /// Indexed by pattern vertex id.
    pub vertex_map: Vec<VertexId>,
    /// Indexed by pattern arc id.
    pub arc_paths: Vec<Vec<ArcId>>,
}

impl ImmersionCertificate {
    /// All host arcs used by any path, in path order.
    pub fn used_arcs(&self) -> impl Iterator<Item = ArcId> + '_ {
        self.arc_paths.iter().flatten().copied()
    }
}

/// Checks every certificate invariant against the host. Empty result means
/// the certificate is valid.
pub fn verify(host: &MultiDigraph, cert: &ImmersionCertificate) -> Vec<Violation> {
    let mut out = Vec::new();
    let pat = &cert.pattern.graph;
    let k = pat.vertex_count();
    if cert.vertex_map.len() != k {
        out.push(Violation::Malformed(format!(
            "vertex map has {} entries, pattern has {} vertices",
            cert.vertex_map.len(),
            k
        )));
        return out;
    }
    if cert.arc_paths.len() != pat.arc_count() {
        out.push(Violation::Malformed(format!(
            "{} paths for {} pattern arcs",
            cert.arc_paths.len(),
            pat.arc_count()
        )));
        return out;
    }

    let mut image_of: HashMap<VertexId, VertexId> = HashMap::new();
    for (i, &img) in cert.vertex_map.iter().enumerate() {
        let pv = VertexId(i as u32);
        if !host.contains_vertex(img) {
            out.push(Violation::UnknownVertex {
                pattern_vertex: pv,
                host_vertex: img,
            });
        }
        if let Some(&prev) = image_of.get(&img) {
            out.push(Violation::NotInjective {
                first: prev,
                second: pv,
                image: img,
            });
        } else {
            image_of.insert(img, pv);
        }
    }

    let mut seen_arc: HashMap<ArcId, ArcId> = HashMap::new();
    for (pid, path) in cert.arc_paths.iter().enumerate() {
        let pattern_arc = ArcId(pid as u32);
        let (pa, pb) = match pat.arc_ends(pattern_arc) {
            Ok(e) => e,
            Err(_) => {
                out.push(Violation::Malformed(format!(
                    "pattern arc {pattern_arc} does not exist"
                )));
                continue;
            }
        };
        let want_start = cert.vertex_map[pa.index()];
        let want_end = cert.vertex_map[pb.index()];

        if path.is_empty() {
            out.push(Violation::MissingArc {
                pattern_arc,
                host_arc: None,
            });
            continue;
        }
        let mut bad_ref = false;
        for &a in path {
            if !host.contains_arc(a) {
                out.push(Violation::MissingArc {
                    pattern_arc,
                    host_arc: Some(a),
                });
                bad_ref = true;
            }
            match seen_arc.get(&a) {
                Some(&first) => out.push(Violation::DuplicateArc {
                    host_arc: a,
                    first_pattern_arc: first,
                    second_pattern_arc: pattern_arc,
                }),
                None => {
                    seen_arc.insert(a, pattern_arc);
                }
            }
        }
        if bad_ref {
            continue;
        }

        let mut visited: Vec<VertexId> = Vec::with_capacity(path.len() + 1);
        let (first_tail, _) = host.arc_ends(path[0]).unwrap();
        if first_tail != want_start {
            out.push(Violation::EndpointMismatch {
                pattern_arc,
                expected: want_start,
                found: first_tail,
            });
        }
        visited.push(first_tail);
        let mut current = first_tail;
        for (pos, &a) in path.iter().enumerate() {
            let (t, h) = host.arc_ends(a).unwrap();
            if t != current {
                out.push(Violation::BrokenPath {
                    pattern_arc,
                    position: pos,
                });
                break;
            }
            if visited.contains(&h) {
                out.push(Violation::VertexRepeat {
                    pattern_arc,
                    vertex: h,
                });
                break;
            }
            visited.push(h);
            current = h;
        }
        if current != want_end && out.iter().all(|v| !matches!(v, Violation::BrokenPath { pattern_arc: p, .. } | Violation::VertexRepeat { pattern_arc: p, .. } if *p == pattern_arc)) {
            out.push(Violation::EndpointMismatch {
                pattern_arc,
                expected: want_end,
                found: current,
            });
        }
    }
    out
}

/// Normalizes a chained walk to a vertex-simple path by excising every cycle:
/// whenever a vertex repeats, the arc segment between its two occurrences is
/// deleted. Endpoints are preserved.
pub fn simplify_walk(host: &MultiDigraph, walk: &[ArcId]) -> Vec<ArcId> {
    if walk.is_empty() {
        return Vec::new();
    }
    let start = host.tail(walk[0]).expect("walk arc in host");
    let mut arcs: Vec<ArcId> = Vec::with_capacity(walk.len());
    // seq[i] is the vertex before arcs[i]; current end tracked separately
    let mut seq: Vec<VertexId> = vec![start];
    for &a in walk {
        let (_, h) = host.arc_ends(a).expect("walk arc in host");
        if let Some(p) = seq.iter().position(|&v| v == h) {
            arcs.truncate(p);
            seq.truncate(p + 1);
        } else {
            arcs.push(a);
            seq.push(h);
        }
    }
    arcs
}

#[derive(Debug, Error)]
pub enum ComposeError {
    #[error("host mismatch: {0}")]
    HostMismatch(String),
    #[error("composition produced an invalid certificate: {0}")]
    ComposeOverlap(String),
}

/// Transitivity of immersion: given Q immersed in D (`outer`) and P immersed
/// in Q's graph (`inner`), produces P immersed in D.
///
/// Each inner path is expanded arc by arc through the outer paths, then
/// normalized to a vertex-simple path by cycle excision.
pub fn compose(
    host: &MultiDigraph,
    outer: &ImmersionCertificate,
    inner: &ImmersionCertificate,
) -> Result<ImmersionCertificate, ComposeError> {
    let v = verify(host, outer);
    if !v.is_empty() {
        return Err(ComposeError::HostMismatch(format!(
            "outer certificate does not verify in host: {}",
            v[0]
        )));
    }
    let v = verify(&outer.pattern.graph, inner);
    if !v.is_empty() {
        return Err(ComposeError::HostMismatch(format!(
            "inner certificate does not verify in outer pattern {}: {}",
            outer.pattern.kind, v[0]
        )));
    }

    let vertex_map: Vec<VertexId> = inner
        .vertex_map
        .iter()
        .map(|q| outer.vertex_map[q.index()])
        .collect();
    let arc_paths: Vec<Vec<ArcId>> = inner
        .arc_paths
        .iter()
        .map(|qpath| {
            let walk: Vec<ArcId> = qpath
                .iter()
                .flat_map(|q| outer.arc_paths[q.index()].iter().copied())
                .collect();
            simplify_walk(host, &walk)
        })
        .collect();

    let cert = ImmersionCertificate {
        pattern: inner.pattern.clone(),
        vertex_map,
        arc_paths,
    };
    let v = verify(host, &cert);
    if !v.is_empty() {
        return Err(ComposeError::ComposeOverlap(format!("{}", v[0])));
    }
    Ok(cert)
}

/// Routes TT_k through F(k, max(2, k(k-1)/2)): TT arc (i,j) crosses levels
/// i..j, taking at each level the lowest parallel copy not claimed by an
/// earlier TT arc in lexicographic order. Returns the host pattern and the
/// certificate.
///
/// This always succeeds: the number of TT arcs crossing level t is
/// t(k-t) <= k(k-1)/2.
pub fn route_tt_in_f(k: u32) -> Result<(Pattern, ImmersionCertificate), BoundsError> {
    if k < 1 {
        return Err(BoundsError::OutOfRange(format!("route_tt_in_f({k})")));
    }
    let l = tt_routing_l(k);
    let host = build_f(k, l)?;
    let tt = build_tt(k)?;
    let levels = k.saturating_sub(1) as usize;
    let mut next_copy = vec![0u32; levels];
    let mut arc_paths = Vec::with_capacity(tt.graph.arc_count());
    for (_, i, j) in tt.graph.arcs() {
        let mut path = Vec::with_capacity((j.0 - i.0) as usize);
        for t in i.0..j.0 {
            let copy = next_copy[t as usize];
            assert!(copy < l, "level {t} overloaded routing TT({k})");
            next_copy[t as usize] += 1;
            path.push(ArcId(t * l + copy));
        }
        arc_paths.push(path);
    }
    let cert = ImmersionCertificate {
        pattern: tt,
        vertex_map: (0..k).map(VertexId).collect(),
        arc_paths,
    };
    Ok((host, cert))
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CertFormatError {
    #[error("line {0}: {1}")]
    Malformed(usize, String),
    #[error("missing `c immersion` header")]
    MissingHeader,
    #[error("bad pattern parameters: {0}")]
    Bounds(String),
}

/// Certificate text format:
/// `c immersion <kind> <k> <l>` (l is 0 for tt), then `v` lines in pattern
/// vertex order, then `p` lines in pattern arc order. Round-trips bit-exactly.
pub fn write_certificate(cert: &ImmersionCertificate) -> String {
    let mut out = String::new();
    match cert.pattern.kind {
        PatternKind::F { k, l } => {
            let _ = writeln!(out, "c immersion f {k} {l}");
        }
        PatternKind::Tt { k } => {
            let _ = writeln!(out, "c immersion tt {k} 0");
        }
    }
    for (i, img) in cert.vertex_map.iter().enumerate() {
        let _ = writeln!(out, "v {i} {img}");
    }
    for (pid, path) in cert.arc_paths.iter().enumerate() {
        let _ = write!(out, "p {pid}");
        for a in path {
            let _ = write!(out, " {a}");
        }
        let _ = writeln!(out);
    }
    out
}

pub fn parse_certificate(input: &str) -> Result<ImmersionCertificate, CertFormatError> {
    let mut pattern: Option<Pattern> = None;
    let mut vertex_map: Vec<(usize, VertexId)> = Vec::new();
    let mut arc_paths: Vec<(usize, Vec<ArcId>)> = Vec::new();
    for (lineno, raw) in input.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let bad = || CertFormatError::Malformed(lineno + 1, line.to_string());
        match fields.as_slice() {
            ["c", "immersion", kind, k, l] if pattern.is_none() => {
                let k: u32 = k.parse().map_err(|_| bad())?;
                let l: u32 = l.parse().map_err(|_| bad())?;
                let kind = match *kind {
                    "f" => PatternKind::F { k, l },
                    "tt" => PatternKind::Tt { k },
                    _ => return Err(bad()),
                };
                pattern = Some(
                    build_pattern(kind).map_err(|e| CertFormatError::Bounds(e.to_string()))?,
                );
            }
            ["v", pv, hv] => {
                if pattern.is_none() {
                    return Err(CertFormatError::MissingHeader);
                }
                let pv: usize = pv.parse().map_err(|_| bad())?;
                let hv: u32 = hv.parse().map_err(|_| bad())?;
                vertex_map.push((pv, VertexId(hv)));
            }
            ["p", pid, rest @ ..] => {
                if pattern.is_none() {
                    return Err(CertFormatError::MissingHeader);
                }
                let pid: usize = pid.parse().map_err(|_| bad())?;
                let path = rest
                    .iter()
                    .map(|s| s.parse::<u32>().map(ArcId).map_err(|_| bad()))
                    .collect::<Result<Vec<_>, _>>()?;
                arc_paths.push((pid, path));
            }
            _ => return Err(bad()),
        }
    }
    let pattern = pattern.ok_or(CertFormatError::MissingHeader)?;
    let k = pattern.graph.vertex_count();
    let m = pattern.graph.arc_count();
    let mut vmap = vec![VertexId(u32::MAX); k];
    for (pv, hv) in vertex_map {
        if pv >= k {
            return Err(CertFormatError::Bounds(format!("vertex line index {pv} out of range")));
        }
        vmap[pv] = hv;
    }
    let mut paths = vec![Vec::new(); m];
    for (pid, path) in arc_paths {
        if pid >= m {
            return Err(CertFormatError::Bounds(format!("path line index {pid} out of range")));
        }
        paths[pid] = path;
    }
    Ok(ImmersionCertificate {
        pattern,
        vertex_map: vmap,
        arc_paths: paths,
    })
}

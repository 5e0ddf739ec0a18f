//! DOT export of a host digraph, optionally highlighting an immersion
//! certificate: branch vertices are filled, path arcs are colored and labeled
//! with the pattern arc they realize.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::certify::ImmersionCertificate;
use crate::graph::{ArcId, MultiDigraph};

const PALETTE: &[&str] = &[
    "crimson", "royalblue", "forestgreen", "darkorange", "purple", "teal", "goldenrod", "magenta",
];

pub fn write_dot(g: &MultiDigraph, cert: Option<&ImmersionCertificate>) -> String {
    let mut branch: BTreeMap<u32, usize> = BTreeMap::new();
    let mut on_path: BTreeMap<ArcId, usize> = BTreeMap::new();
    if let Some(cert) = cert {
        for (i, v) in cert.vertex_map.iter().enumerate() {
            branch.insert(v.0, i);
        }
        for (pid, path) in cert.arc_paths.iter().enumerate() {
            for &a in path {
                on_path.insert(a, pid);
            }
        }
    }

    let mut out = String::from("digraph host {\n");
    let _ = writeln!(out, "  rankdir=LR;");
    let _ = writeln!(out, "  node [shape=circle];");
    for v in g.vertices() {
        match branch.get(&v.0) {
            Some(i) => {
                let _ = writeln!(
                    out,
                    "  {v} [style=filled, fillcolor=gold, xlabel=\"x{i}\"];"
                );
            }
            None => {
                let _ = writeln!(out, "  {v};");
            }
        }
    }
    for (a, t, h) in g.arcs() {
        match on_path.get(&a) {
            Some(&pid) => {
                let color = PALETTE[pid % PALETTE.len()];
                let _ = writeln!(
                    out,
                    "  {t} -> {h} [color={color}, penwidth=2, label=\"p{pid}\"];"
                );
            }
            None => {
                let _ = writeln!(out, "  {t} -> {h} [color=gray70];");
            }
        }
    }
    out.push_str("}\n");
    out
}

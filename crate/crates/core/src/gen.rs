//! Deterministic seeded instance generators, plus the handcrafted bottleneck
//! fixtures that force the solver through its reduction branch.
//!
//! Dense random out-regular digraphs essentially always take the extension
//! (Menger-success) branch, so the reduction machinery is covered by fixtures
//! with deliberately throttled tip connectivity.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::certify::ImmersionCertificate;
use crate::graph::{MultiDigraph, VertexId};
use crate::patterns::{build_f, Pattern};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GenError {
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("unknown fixture {0:?}; known: {known:?}", known = FIXTURE_NAMES)]
    UnknownFixture(String),
}

/// Simple out-regular digraph: every vertex gets exactly `d` distinct
/// out-neighbors.
///
/// Deterministic: ChaCha8 seeded with `seed`; vertices are processed in
/// ascending order, each drawing `d` targets by a partial Fisher-Yates
/// shuffle of the ascending candidate list, and the chosen targets are
/// emitted in ascending order. Same seed, same byte-identical graph.
pub fn gen_out_regular(n: usize, d: usize, seed: u64) -> Result<MultiDigraph, GenError> {
    if n < 2 || d < 1 || d > n - 1 {
        return Err(GenError::OutOfRange(format!("n={n}, d={d}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = MultiDigraph::with_vertices(n);
    for v in 0..n {
        let mut candidates: Vec<u32> = (0..n as u32).filter(|&u| u as usize != v).collect();
        for i in 0..d {
            let j = rng.gen_range(i..candidates.len());
            candidates.swap(i, j);
        }
        let mut chosen = candidates[..d].to_vec();
        chosen.sort_unstable();
        for t in chosen {
            g.add_arc(VertexId(v as u32), VertexId(t)).unwrap();
        }
    }
    debug_assert!(g.is_simple());
    Ok(g)
}

/// What a fixture's reduction run is expected to produce, asserted by the
/// fixture driver.
#[derive(Clone, Debug)]
pub struct FixtureExpect {
    /// Upper bound on every |E_y| (always < l).
    pub max_cut_size: usize,
    /// The cover, ascending.
    pub cover: Vec<u32>,
    /// (cover vertex, |S_y|) pairs, ascending.
    pub private_sizes: Vec<(u32, usize)>,
    /// Zero-outdegree vertices.
    pub t_set: Vec<u32>,
    /// The chosen low-outdegree cover vertex.
    pub ystar: u32,
    /// Segment length of every shortcut arc, in construction order.
    pub shortcut_segments: Vec<usize>,
    pub h_vertex_count: usize,
}

/// A reduction fixture: a small digraph, a planted inner immersion whose tip
/// has arc-connectivity below l to every other vertex, and the mechanics the
/// reduction is expected to exhibit.
#[derive(Clone, Debug)]
pub struct Fixture {
    pub name: &'static str,
    pub graph: MultiDigraph,
    /// Inner F(K-1, l) immersion, already in place.
    pub planted: ImmersionCertificate,
    pub big_k: u32,
    pub l: u32,
    pub expected: FixtureExpect,
}

pub const FIXTURE_NAMES: &[&str] = &["bottleneck-1", "two-covers", "shortcut-cascade"];

pub fn gen_reduction_fixture(name: &str) -> Result<Fixture, GenError> {
    match name {
        "bottleneck-1" => Ok(bottleneck_1()),
        "two-covers" => Ok(two_covers()),
        "shortcut-cascade" => Ok(shortcut_cascade()),
        other => Err(GenError::UnknownFixture(other.to_string())),
    }
}

fn single_vertex_inner(tip: u32, l: u32) -> ImmersionCertificate {
    ImmersionCertificate {
        pattern: build_f(1, l).unwrap(),
        vertex_map: vec![VertexId(tip)],
        arc_paths: Vec::new(),
    }
}

/// Tip with a single out-arc feeding a strongly connected cluster that
/// contains F(2,2) outright, plus a second unreachable cluster so the cover
/// needs two members.
fn bottleneck_1() -> Fixture {
    let mut g = MultiDigraph::with_vertices(7);
    for (u, v) in [
        (0, 1), // the bottleneck arc out of the tip
        (1, 2),
        (2, 3),
        (2, 3), // parallel pair: F(2,2) lives here
        (3, 1),
        (3, 4),
        (4, 2),
        (5, 6),
        (6, 5),
    ] {
        g.add_arc(VertexId(u), VertexId(v)).unwrap();
    }
    Fixture {
        name: "bottleneck-1",
        graph: g,
        planted: single_vertex_inner(0, 2),
        big_k: 2,
        l: 2,
        expected: FixtureExpect {
            max_cut_size: 1,
            cover: vec![1, 5],
            private_sizes: vec![(1, 4), (5, 2)],
            t_set: vec![],
            ystar: 1,
            shortcut_segments: vec![],
            h_vertex_count: 5,
        },
    }
}

/// Two overlapping reach sets are needed to cover the candidates; the
/// overlap vertex ends up in no private set.
fn two_covers() -> Fixture {
    let mut g = MultiDigraph::with_vertices(6);
    for (u, v) in [
        (0, 1), // bottleneck arc
        (2, 1),
        (2, 1), // parallel pair inside the eventual H
        (3, 2),
        (3, 4),
        (4, 5),
        (1, 0), // keeps vertex 1 out of the zero-outdegree set
    ] {
        g.add_arc(VertexId(u), VertexId(v)).unwrap();
    }
    Fixture {
        name: "two-covers",
        graph: g,
        planted: single_vertex_inner(0, 2),
        big_k: 2,
        l: 2,
        expected: FixtureExpect {
            max_cut_size: 1,
            cover: vec![1, 5],
            private_sizes: vec![(1, 2), (5, 2)],
            t_set: vec![5],
            ystar: 1,
            shortcut_segments: vec![],
            h_vertex_count: 3,
        },
    }
}

/// Planted F(2,2) whose long path carries two private vertices at distance
/// three, producing one shortcut arc with a three-arc segment that the lifted
/// certificate must expand.
fn shortcut_cascade() -> Fixture {
    let mut g = MultiDigraph::with_vertices(9);
    let mut arcs = Vec::new();
    for (u, v) in [
        (0, 2), // a0  P11
        (2, 3), // a1  P11
        (3, 4), // a2  P11
        (4, 7), // a3  P11
        (7, 1), // a4  P11
        (0, 5), // a5  P12
        (5, 1), // a6  P12
        (2, 8), // a7  detour replacing the direct 2->7 arc
        (8, 7), // a8
        (7, 1), // a9  spare parallel copies for the new top level
        (7, 1), // a10
        (1, 3), // a11 the tip's only outgoing arc in D'
        (3, 6), // a12 drains 3,4,5 into a shared reach set
        (4, 6), // a13
        (5, 6), // a14
    ] {
        arcs.push(g.add_arc(VertexId(u), VertexId(v)).unwrap());
    }
    let planted = ImmersionCertificate {
        pattern: build_f(2, 2).unwrap(),
        vertex_map: vec![VertexId(0), VertexId(1)],
        arc_paths: vec![
            vec![arcs[0], arcs[1], arcs[2], arcs[3], arcs[4]],
            vec![arcs[5], arcs[6]],
        ],
    };
    Fixture {
        name: "shortcut-cascade",
        graph: g,
        planted,
        big_k: 3,
        l: 2,
        expected: FixtureExpect {
            max_cut_size: 1,
            cover: vec![6, 7],
            private_sizes: vec![(6, 4), (7, 3)],
            t_set: vec![6],
            ystar: 7,
            shortcut_segments: vec![3],
            h_vertex_count: 5,
        },
    }
}

/// The planted inner pattern of a fixture, for callers that need it.
pub fn fixture_inner_pattern(fx: &Fixture) -> &Pattern {
    &fx.planted.pattern
}

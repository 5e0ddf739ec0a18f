//! Pattern digraphs F(k,l) and TT_k, and the exact closed-form bounds the
//! solver relies on.
//!
//! All bound arithmetic is checked 64-bit; overflow is a hard error, never a
//! silent wrap.

use thiserror::Error;

use crate::graph::{ArcId, MultiDigraph, VertexId};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BoundsError {
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("integer overflow evaluating {0}")]
    Overflow(String),
}

fn mul(a: i64, b: i64, what: &str) -> Result<i64, BoundsError> {
    a.checked_mul(b)
        .ok_or_else(|| BoundsError::Overflow(what.to_string()))
}

/// f(k,l) = 2k³l², the outdegree threshold.
pub fn bound_f(k: i64, l: i64) -> Result<i64, BoundsError> {
    if k < 1 || l < 1 {
        return Err(BoundsError::OutOfRange(format!("f({k},{l})")));
    }
    let k3 = mul(mul(k, k, "f")?, k, "f")?;
    let l2 = mul(l, l, "f")?;
    mul(mul(2, k3, "f")?, l2, "f")
}

/// c₁(K,l) = (K−1) + K·l, the budget of exceptional low-outdegree vertices
/// for induction target K.
pub fn bound_c1(big_k: i64, l: i64) -> Result<i64, BoundsError> {
    if big_k < 2 || l < 1 {
        return Err(BoundsError::OutOfRange(format!("c1({big_k},{l})")));
    }
    Ok(big_k - 1 + mul(big_k, l, "c1")?)
}

/// d′(K,l) = f(K,l) − c₁(K,l)·K·l − f(K,l)/K, the outdegree surviving the
/// induction step's removals. Exact: K always divides 2K³l².
pub fn bound_dprime(big_k: i64, l: i64) -> Result<i64, BoundsError> {
    if big_k < 2 || l < 1 {
        return Err(BoundsError::OutOfRange(format!("dprime({big_k},{l})")));
    }
    let f = bound_f(big_k, l)?;
    let c1 = bound_c1(big_k, l)?;
    debug_assert_eq!(f % big_k, 0);
    let d = f - mul(c1, mul(big_k, l, "dprime")?, "dprime")? - f / big_k;
    // induction inequality, claimed for l >= 2
    if l >= 2 {
        debug_assert!(d >= bound_f(big_k - 1, l)?);
    }
    Ok(d)
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum PatternKind {
    /// Chain of k vertices with l parallel arcs per step.
    F { k: u32, l: u32 },
    /// Transitive tournament on k vertices.
    Tt { k: u32 },
}

impl PatternKind {
    pub fn vertex_count(self) -> usize {
        match self {
            PatternKind::F { k, .. } | PatternKind::Tt { k } => k as usize,
        }
    }
}

impl std::fmt::Display for PatternKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PatternKind::F { k, l } => write!(f, "F({k},{l})"),
            PatternKind::Tt { k } => write!(f, "TT({k})"),
        }
    }
}

/// A pattern digraph with its deterministic vertex and arc numbering.
#[derive(Clone, Debug)]
pub struct Pattern {
    pub kind: PatternKind,
    pub graph: MultiDigraph,
}

impl Pattern {
    /// For F-patterns, the chain level of an arc: arc ids are laid out level
    /// by level, copy by copy, so arc `i` sits at level `i / l`.
    pub fn level(&self, arc: ArcId) -> Option<usize> {
        match self.kind {
            PatternKind::F { l, .. } if self.graph.contains_arc(arc) => {
                Some(arc.index() / l as usize)
            }
            _ => None,
        }
    }
}

/// F(k,l): vertices 0..k, arcs level by level, copy by copy, so the c-th
/// parallel copy at level t has ArcId t·l + c.
pub fn build_f(k: u32, l: u32) -> Result<Pattern, BoundsError> {
    if k < 1 || l < 1 {
        return Err(BoundsError::OutOfRange(format!("F({k},{l})")));
    }
    let mut graph = MultiDigraph::with_vertices(k as usize);
    for t in 0..k - 1 {
        for _ in 0..l {
            graph.add_arc(VertexId(t), VertexId(t + 1)).unwrap();
        }
    }
    Ok(Pattern {
        kind: PatternKind::F { k, l },
        graph,
    })
}

/// TT(k): vertices 0..k, one arc (i,j) for every i < j, emitted in
/// lexicographic (i,j) order.
pub fn build_tt(k: u32) -> Result<Pattern, BoundsError> {
    if k < 1 {
        return Err(BoundsError::OutOfRange(format!("TT({k})")));
    }
    let mut graph = MultiDigraph::with_vertices(k as usize);
    for i in 0..k {
        for j in i + 1..k {
            graph.add_arc(VertexId(i), VertexId(j)).unwrap();
        }
    }
    Ok(Pattern {
        kind: PatternKind::Tt { k },
        graph,
    })
}

pub fn build_pattern(kind: PatternKind) -> Result<Pattern, BoundsError> {
    match kind {
        PatternKind::F { k, l } => build_f(k, l),
        PatternKind::Tt { k } => build_tt(k),
    }
}

/// The parallel-arc budget TT_k routing needs: max(2, k(k−1)/2). The lower
/// clamp keeps the solver inside the proof's l ≥ 2 hypothesis.
pub fn tt_routing_l(k: u32) -> u32 {
    let binom = k * (k - 1) / 2;
    binom.max(2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f_formula() {
        assert_eq!(bound_f(3, 3).unwrap(), 486);
        assert_eq!(bound_f(1, 2).unwrap(), 8);
        assert_eq!(bound_f(2, 2).unwrap(), 64);
        assert!(bound_f(0, 1).is_err());
        assert!(bound_f(1 << 21, 1 << 21).is_err());
    }

    #[test]
    fn c1_formula() {
        assert_eq!(bound_c1(3, 2).unwrap(), 8);
        assert_eq!(bound_c1(3, 3).unwrap(), 11);
        assert_eq!(bound_c1(2, 1).unwrap(), 3);
        assert!(bound_c1(1, 1).is_err());
    }

    #[test]
    fn dprime_formula() {
        // 486 - 11*9 - 162
        assert_eq!(bound_dprime(3, 3).unwrap(), 225);
        assert!(bound_dprime(3, 3).unwrap() >= bound_f(2, 3).unwrap());
        // 64 - 5*4 - 32; c1(2,2) = 1 + 2*2 = 5
        assert_eq!(bound_dprime(2, 2).unwrap(), 12);
        assert!(bound_dprime(2, 2).unwrap() >= bound_f(1, 2).unwrap());
        // 54 - 5*3 - 18; holds even though the theorem only claims l >= 2
        assert_eq!(bound_dprime(3, 1).unwrap(), 21);
        assert!(bound_dprime(3, 1).unwrap() >= bound_f(2, 1).unwrap());
    }

    #[test]
    fn induction_inequality_sweep() {
        for k in 1..=9i64 {
            for l in 2..=12i64 {
                let lhs = bound_dprime(k + 1, l).unwrap();
                assert!(
                    lhs >= bound_f(k, l).unwrap(),
                    "induction inequality fails at k={k} l={l}"
                );
            }
        }
    }

    #[test]
    fn f_pattern_shape() {
        let p = build_f(3, 2).unwrap();
        assert_eq!(p.graph.vertex_count(), 3);
        assert_eq!(p.graph.arc_count(), 4);
        assert_eq!(p.graph.max_multiplicity(), 2);
        assert_eq!(p.level(ArcId(0)), Some(0));
        assert_eq!(p.level(ArcId(3)), Some(1));

        let one = build_f(1, 5).unwrap();
        assert_eq!(one.graph.vertex_count(), 1);
        assert_eq!(one.graph.arc_count(), 0);
    }

    #[test]
    fn tt_pattern_shape() {
        let p = build_tt(4).unwrap();
        assert_eq!(p.graph.vertex_count(), 4);
        assert_eq!(p.graph.arc_count(), 6);
        assert!(p.graph.is_simple());
        // lexicographic arc order
        assert_eq!(p.graph.arc_ends(ArcId(0)).unwrap(), (VertexId(0), VertexId(1)));
        assert_eq!(p.graph.arc_ends(ArcId(5)).unwrap(), (VertexId(2), VertexId(3)));
    }

    #[test]
    fn builders_are_deterministic() {
        let a = crate::graph::write_digraph(&build_f(5, 4).unwrap().graph);
        let b = crate::graph::write_digraph(&build_f(5, 4).unwrap().graph);
        assert_eq!(a, b);
    }

    #[test]
    fn induced_prefix_of_f_is_smaller_f() {
        use std::collections::BTreeSet;
        let f32 = build_f(3, 2).unwrap();
        let keep = BTreeSet::from([VertexId(0), VertexId(1)]);
        let sub = f32.graph.induced(&keep).unwrap();
        let f22 = build_f(2, 2).unwrap();
        assert_eq!(sub.vertex_count(), f22.graph.vertex_count());
        assert_eq!(sub.arc_count(), f22.graph.arc_count());
        assert_eq!(sub.multiplicity(VertexId(0), VertexId(1)).unwrap(), 2);
    }
}

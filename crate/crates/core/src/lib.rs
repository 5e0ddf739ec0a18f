//! Constructive immersion finding in directed multigraphs.
//!
//! Centerpiece: every digraph with large enough minimum outdegree and bounded
//! arc multiplicity contains an immersion of the parallel chain F(k,l), and
//! hence of the transitive tournament TT_k. The solver executes that argument
//! and emits a machine-checkable certificate; an independent verifier,
//! a paths-or-cut engine, an exhaustive small-scale oracle, and deterministic
//! generators round out the toolkit.

pub mod certify;
pub mod dot;
pub mod gen;
pub mod graph;
pub mod menger;
pub mod oracle;
pub mod patterns;
pub mod solver;

pub use certify::{verify, ImmersionCertificate, Violation};
pub use graph::{ArcId, MultiDigraph, VertexId};
pub use patterns::{bound_c1, bound_dprime, bound_f, build_f, build_tt, Pattern, PatternKind};
pub use solver::{find_f, find_tt, Mode, SolverError};

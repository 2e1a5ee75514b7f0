//! Variational solver and verifier for Kazdan–Warner equations on finite
//! connected weighted graphs.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` aliases below fix the double-precision instantiation used by the
//! CLI and the acceptance suite.

// `!(x > 0)` is the NaN-rejecting form of the domain checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calculus;
pub mod error;
pub mod functional;
pub mod graph;
mod linalg;
pub mod scalar;
pub mod solver;
pub mod spectral;
pub mod verify;

pub use calculus::{
    dirichlet_energy, gamma, integrate, inner, laplacian, mean, norm_one_alpha, project_mean_zero,
};
pub use error::{KwError, Result};
pub use functional::{
    el_gradient, estimate_tm_constant, eval_j, hessian_quadratic_form, heu_lower_bound, log_integral_h_exp,
    HeuBound,
};
pub use graph::{parse_graph, parse_graph_unchecked, validate, Edge, Graph, GraphDocument, VertexFunction, Violation};
pub use scalar::Scalar;
pub use solver::{
    classify_regime, default_eq_tol, minimize, probe_divergence, ProbeReport, RaySample, Regime, RegimeTag,
    SolveReport, SolveStatus, SolverOptions, Verdict, DEFAULT_PROBE_EXPONENT,
};
pub use spectral::{
    compute_spectrum, poincare_constant, project_ek, project_ek_perp, Spectrum, DEFAULT_GROUPING_TOL,
};
pub use verify::{
    kw_residual, multipliers, verify_solution, Candidate, CandidateDocument, CheckResult, Multiplier, Multipliers,
};

pub type Graph64 = Graph<f64>;
pub type VertexFunction64 = VertexFunction<f64>;
pub type Spectrum64 = Spectrum<f64>;
pub type SolveReport64 = SolveReport<f64>;
pub type ProbeReport64 = ProbeReport<f64>;
pub type Candidate64 = Candidate<f64>;

pub type Graph32 = Graph<f32>;
pub type VertexFunction32 = VertexFunction<f32>;
pub type Spectrum32 = Spectrum<f32>;

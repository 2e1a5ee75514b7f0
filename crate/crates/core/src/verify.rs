//! Solver-independent checks: Lagrange multipliers, Kazdan–Warner residuals,
//! subspace membership.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::calculus::{check_len, inner_unchecked, laplacian};
use crate::error::{KwError, Result};
use crate::functional::exp_integral;
use crate::graph::{Graph, VertexFunction};
use crate::scalar::Scalar;
use crate::spectral::Spectrum;

/// Multiplier `t_si` attached to eigenvector `u_si` (both indices 1-based).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Multiplier<T> {
    pub s: usize,
    pub i: usize,
    pub value: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Multipliers<T> {
    pub xi: T,
    pub t: Vec<Multiplier<T>>,
}

/// `ξ = β / Vol(V)` and `t_si = β ∫ h u_si e^u dμ / ∫ h e^u dμ` for `1 ≤ s ≤ k`.
pub fn multipliers<T: Scalar>(
    g: &Graph<T>,
    spec: &Spectrum<T>,
    u: &VertexFunction<T>,
    beta: T,
    k: usize,
) -> Result<Multipliers<T>> {
    check_len(g, u)?;
    if k >= spec.m() {
        return Err(KwError::IndexOutOfRange { k, max: spec.m().saturating_sub(1) });
    }
    let xi = beta / g.volume();
    let ex = exp_integral(g, u.values());
    let mut t = Vec::new();
    for s in 1..=k {
        for (i, v) in spec.basis(s).iter().enumerate() {
            // weights already carry μ h e^u / S
            let value = beta * ex.weights.iter().zip(v.iter()).map(|(&p, &x)| p * x).sum::<T>();
            t.push(Multiplier { s, i: i + 1, value });
        }
    }
    Ok(Multipliers { xi, t })
}

/// `r = Δu + αu + β h e^u / S − ξ − Σ_{s≤k} Σ_i t_si u_si`.
///
/// Zero exactly when `u` solves the Kazdan–Warner equation on `E_k^⊥`.
pub fn kw_residual<T: Scalar>(
    g: &Graph<T>,
    spec: &Spectrum<T>,
    u: &VertexFunction<T>,
    alpha: T,
    beta: T,
    k: usize,
) -> Result<VertexFunction<T>> {
    let mult = multipliers(g, spec, u, beta, k)?;
    let lap = laplacian(g, u)?;
    let ex = exp_integral(g, u.values());
    let mut r: Vec<T> = (0..g.len())
        .map(|x| lap[x] + alpha * u[x] + beta * ex.weights[x] / g.mu()[x] - mult.xi)
        .collect();
    for m in &mult.t {
        let v = &spec.basis(m.s)[m.i - 1];
        for (rx, &vx) in r.iter_mut().zip(v.iter()) {
            *rx -= m.value * vx;
        }
    }
    Ok(VertexFunction::new(r))
}

/// A candidate solution, either emitted by the solver or supplied externally.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate<T> {
    pub alpha: T,
    pub beta: T,
    pub k: usize,
    pub u: VertexFunction<T>,
    /// Multipliers claimed by the producer, if any.
    pub xi: Option<T>,
    pub t_multipliers: Option<Vec<Multiplier<T>>>,
}

/// Candidate-solution JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateDocument {
    pub graph: String,
    pub alpha: f64,
    pub beta: f64,
    pub k: usize,
    pub u: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_multipliers: Option<Vec<Multiplier<f64>>>,
}

impl CandidateDocument {
    /// Aligns the named values with the graph's vertex order.
    pub fn to_candidate<T: Scalar>(&self, g: &Graph<T>) -> Result<Candidate<T>> {
        let mut values = Vec::with_capacity(g.len());
        for id in g.vertex_ids() {
            let x = self
                .u
                .get(id)
                .ok_or_else(|| KwError::Malformed(format!("candidate has no value for vertex `{id}`")))?;
            values.push(T::of(*x));
        }
        if let Some(extra) = self.u.keys().find(|id| g.index_of(id).is_none()) {
            return Err(KwError::UnknownVertex(extra.clone()));
        }
        Ok(Candidate {
            alpha: T::of(self.alpha),
            beta: T::of(self.beta),
            k: self.k,
            u: VertexFunction::new(values),
            xi: self.xi.map(T::of),
            t_multipliers: self
                .t_multipliers
                .as_ref()
                .map(|v| v.iter().map(|m| Multiplier { s: m.s, i: m.i, value: T::of(m.value) }).collect()),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// The measured quantity compared against the tolerance.
    pub value: f64,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &str, value: f64, limit: f64, detail: String) -> Self {
        Self { name: name.into(), passed: value <= limit, value, detail }
    }
}

/// Runs every check on a candidate. Failures are returned, never raised,
/// except for structurally unusable input (length or index errors).
pub fn verify_solution<T: Scalar>(
    g: &Graph<T>,
    spec: &Spectrum<T>,
    cand: &Candidate<T>,
    tol: T,
) -> Result<Vec<CheckResult>> {
    check_len(g, &cand.u)?;
    let tol_f = tol.as_f64();
    let vol = g.volume();
    let u = cand.u.values();
    let mut out = Vec::new();

    let ones = vec![T::one(); g.len()];
    let mean_part = inner_unchecked(g.mu(), u, &ones).abs();
    out.push(CheckResult::new(
        "mean_zero",
        mean_part.as_f64(),
        (tol * vol).as_f64(),
        format!("|<u,1>_mu| = {mean_part:e}"),
    ));
    let mut worst = T::zero();
    for s in 1..=cand.k.min(spec.m().saturating_sub(1)) {
        for v in spec.basis(s) {
            worst = worst.max(inner_unchecked(g.mu(), u, v.values()).abs());
        }
    }
    out.push(CheckResult::new(
        "subspace_membership",
        worst.as_f64(),
        tol_f,
        format!("max |<u,u_si>_mu| over s <= {} = {worst:e}", cand.k),
    ));

    let r = kw_residual(g, spec, &cand.u, cand.alpha, cand.beta, cand.k)?;
    let rsup = r.sup_norm();
    out.push(CheckResult::new("kw_residual", rsup.as_f64(), tol_f, format!("sup |r| = {rsup:e}")));

    let mult = multipliers(g, spec, &cand.u, cand.beta, cand.k)?;
    if let Some(xi) = cand.xi {
        let d = (xi - mult.xi).abs();
        out.push(CheckResult::new("xi", d.as_f64(), tol_f, format!("reported {xi}, recomputed {}", mult.xi)));
    }
    if let Some(reported) = &cand.t_multipliers {
        let mut worst = T::zero();
        let mut detail = String::from("all t_si match");
        if reported.len() != mult.t.len() {
            worst = T::infinity();
            detail = format!("reported {} multipliers, expected {}", reported.len(), mult.t.len());
        } else {
            for (a, b) in reported.iter().zip(&mult.t) {
                if a.s != b.s || a.i != b.i {
                    worst = T::infinity();
                    detail = format!("multiplier index ({}, {}) does not match ({}, {})", a.s, a.i, b.s, b.i);
                    break;
                }
                worst = worst.max((a.value - b.value).abs());
            }
        }
        out.push(CheckResult::new("t_multipliers", worst.as_f64(), tol_f, detail));
    }

    let integral = inner_unchecked(g.mu(), r.values(), &ones).abs();
    out.push(CheckResult::new(
        "integrated_equation",
        integral.as_f64(),
        (tol * vol).as_f64(),
        format!("|∫ r dμ| = {integral:e}"),
    ));
    Ok(out)
}

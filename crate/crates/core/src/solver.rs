//! Regime classification, constrained minimization of `J_{α,β}` over
//! `E_k^⊥`, and divergence probes for the unbounded regimes.
//!
//! Minimization works in coordinates of the μ-orthonormal eigenbasis of the
//! target subspace, so iterates stay in the subspace to rounding. The
//! descent phase takes steepest-descent steps in the `‖·‖_{k+1,α}` metric
//! (the quadratic part of `J` is diagonal in these coordinates); once the
//! gradient is small it switches to damped Newton on the projected Hessian.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{KwError, Result};
use crate::functional::{eval_j_unchecked, exp_integral, hessian_form_with, raw_gradient};
use crate::graph::{Graph, VertexFunction};
use crate::linalg::{cholesky, cholesky_solve, symmetric_eigen};
use crate::scalar::Scalar;
use crate::spectral::{project_ek_perp, Spectrum};
use crate::verify::{kw_residual, multipliers, Multiplier};
use crate::calculus::{check_len, inner_unchecked, laplacian};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RegimeTag {
    MinimizerInEkPerp,
    EigenfunctionSolution,
    MinimizerInNextPerp,
    UnboundedBelow,
}

impl RegimeTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            RegimeTag::MinimizerInEkPerp => "MINIMIZER_IN_EK_PERP",
            RegimeTag::EigenfunctionSolution => "EIGENFUNCTION_SOLUTION",
            RegimeTag::MinimizerInNextPerp => "MINIMIZER_IN_NEXT_PERP",
            RegimeTag::UnboundedBelow => "UNBOUNDED_BELOW",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Regime {
    pub tag: RegimeTag,
    /// k of the minimization subspace `E_k^⊥` (0 = H).
    pub subspace_index: usize,
    /// Set when the minimization subspace is `{0}`.
    #[serde(default)]
    pub trivial_subspace: bool,
}

/// Equality tolerance `10⁻⁹ (1 + |λ|)` for `α ≈ λ`.
pub fn default_eq_tol<T: Scalar>(lambda: T) -> T {
    T::of(1e-9) * (T::one() + lambda.abs())
}

/// Maps `(α, β, k)` onto the existence/unboundedness trichotomy with
/// `λ = λ_{k+1}`.
pub fn classify_regime<T: Scalar>(spec: &Spectrum<T>, alpha: T, beta: T, k: usize, eq_tol: T) -> Result<Regime> {
    if spec.m() < 2 || k > spec.m() - 2 {
        return Err(KwError::IndexOutOfRange { k, max: spec.m().saturating_sub(2) });
    }
    if !(eq_tol > T::zero()) {
        return Err(KwError::InvalidArgument(format!("eq_tol must be positive, got {eq_tol}")));
    }
    let lambda = spec.lambda(k + 1);
    let regime = |tag, subspace_index| Regime { tag, subspace_index, trivial_subspace: false };
    if alpha < lambda - eq_tol {
        Ok(regime(RegimeTag::MinimizerInEkPerp, k))
    } else if alpha > lambda + eq_tol || beta > T::zero() {
        Ok(regime(RegimeTag::UnboundedBelow, k))
    } else if beta == T::zero() {
        Ok(regime(RegimeTag::EigenfunctionSolution, k))
    } else {
        Ok(Regime {
            tag: RegimeTag::MinimizerInNextPerp,
            subspace_index: k + 1,
            trivial_subspace: k + 1 == spec.m() - 1,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Sup-norm stopping tolerance on the projected gradient.
    pub grad_tol: f64,
    pub max_iters: usize,
    pub armijo_c: f64,
    pub backtrack: f64,
    /// Gradient sup-norm below which Newton steps are taken.
    pub newton_switch_tol: f64,
    /// Chooses the escape direction sign at saddle points.
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { grad_tol: 1e-10, max_iters: 10_000, armijo_c: 1e-4, backtrack: 0.5, newton_switch_tol: 1e-3, seed: 0 }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("grad_tol", self.grad_tol),
            ("armijo_c", self.armijo_c),
            ("newton_switch_tol", self.newton_switch_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(KwError::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(KwError::InvalidArgument(format!("backtrack must lie in (0, 1), got {}", self.backtrack)));
        }
        if self.max_iters == 0 {
            return Err(KwError::InvalidArgument("max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Converged,
    MaxIters,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport<T> {
    pub regime: Regime,
    pub alpha: T,
    pub beta: T,
    pub minimizer: VertexFunction<T>,
    pub objective: T,
    pub grad_sup: T,
    pub xi: T,
    pub t_multipliers: Vec<Multiplier<T>>,
    pub residual_sup: T,
    pub residual_l2: T,
    pub iterations: usize,
    pub saddle_escapes: usize,
    pub status: SolveStatus,
    /// Objective after each accepted step, starting from `u = 0`.
    pub objective_trace: Vec<T>,
}

/// Minimizes `J_{α,β}` over the subspace selected by [`classify_regime`],
/// starting from `u = 0`.
pub fn minimize<T: Scalar>(
    g: &Graph<T>,
    spec: &Spectrum<T>,
    alpha: T,
    beta: T,
    k: usize,
    opts: &SolverOptions,
) -> Result<SolveReport<T>> {
    opts.validate()?;
    let lambda = spec.lambda((k + 1).min(spec.m().saturating_sub(1)));
    let regime = classify_regime(spec, alpha, beta, k, default_eq_tol(lambda))?;
    match regime.tag {
        RegimeTag::UnboundedBelow => {
            Err(KwError::UnboundedRegime { alpha: alpha.as_f64(), beta: beta.as_f64(), k })
        }
        RegimeTag::EigenfunctionSolution => eigenfunction_report(g, spec, regime, alpha, beta, k),
        RegimeTag::MinimizerInEkPerp | RegimeTag::MinimizerInNextPerp => {
            descend(g, spec, regime, alpha, beta, opts)
        }
    }
}

fn eigenfunction_report<T: Scalar>(
    g: &Graph<T>,
    spec: &Spectrum<T>,
    regime: Regime,
    alpha: T,
    beta: T,
    k: usize,
) -> Result<SolveReport<T>> {
    let u = spec.basis(k + 1)[0].clone();
    let lambda = spec.lambda(k + 1);
    let lap = laplacian(g, &u)?;
    let eig_res: Vec<T> = lap.iter().zip(u.iter()).map(|(&l, &x)| -l - lambda * x).collect();
    let residual_sup = eig_res.iter().fold(T::zero(), |m, &x| m.max(x.abs()));
    let residual_l2 = inner_unchecked(g.mu(), &eig_res, &eig_res).sqrt();
    let grad = project_ek_perp(spec, g, &VertexFunction::new(raw_gradient(g, &u, alpha, beta)?), k)?;
    let mult = multipliers(g, spec, &u, beta, k)?;
    let objective = eval_j_unchecked(g, u.values(), alpha, beta);
    Ok(SolveReport {
        regime,
        alpha,
        beta,
        objective,
        grad_sup: grad.sup_norm(),
        xi: mult.xi,
        t_multipliers: mult.t,
        residual_sup,
        residual_l2,
        iterations: 0,
        saddle_escapes: 0,
        status: SolveStatus::Converged,
        objective_trace: vec![objective],
        minimizer: u,
    })
}

struct Problem<'a, T: Scalar> {
    g: &'a Graph<T>,
    spec: &'a Spectrum<T>,
    alpha: T,
    beta: T,
    sub: usize,
    basis: Vec<&'a VertexFunction<T>>,
    /// `λ_j − α` for each basis vector: the quadratic part in coordinates.
    metric: Vec<T>,
}

impl<'a, T: Scalar> Problem<'a, T> {
    fn assemble(&self, c: &[T]) -> Vec<T> {
        let mut u = vec![T::zero(); self.g.len()];
        for (cj, v) in c.iter().zip(&self.basis) {
            for (o, &x) in u.iter_mut().zip(v.iter()) {
                *o += *cj * x;
            }
        }
        u
    }

    fn objective(&self, c: &[T]) -> T {
        eval_j_unchecked(self.g, &self.assemble(c), self.alpha, self.beta)
    }

    /// Coordinate gradient and the vertex-wise projected gradient sup norm.
    fn gradient(&self, c: &[T]) -> Result<(Vec<T>, T)> {
        let u = VertexFunction::new(self.assemble(c));
        let raw = raw_gradient(self.g, &u, self.alpha, self.beta)?;
        let gc: Vec<T> = self.basis.iter().map(|v| inner_unchecked(self.g.mu(), &raw, v.values())).collect();
        let projected = project_ek_perp(self.spec, self.g, &VertexFunction::new(raw), self.sub)?;
        Ok((gc, projected.sup_norm()))
    }

    /// Dense projected Hessian by polarization of the second variation.
    fn hessian(&self, c: &[T]) -> Vec<T> {
        let n = self.basis.len();
        let u = self.assemble(c);
        let weights = exp_integral(self.g, &u).weights;
        let q = |a: &[T]| hessian_form_with(self.g, &weights, self.alpha, self.beta, a, a);
        let diag: Vec<T> = self.basis.iter().map(|v| q(v.values())).collect();
        let mut h = vec![T::zero(); n * n];
        for i in 0..n {
            h[i * n + i] = diag[i];
            for j in (i + 1)..n {
                let sum: Vec<T> = self.basis[i].iter().zip(self.basis[j].iter()).map(|(&a, &b)| a + b).collect();
                let hij = T::of(0.5) * (q(&sum) - diag[i] - diag[j]);
                h[i * n + j] = hij;
                h[j * n + i] = hij;
            }
        }
        h
    }
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn descend<T: Scalar>(
    g: &Graph<T>,
    spec: &Spectrum<T>,
    regime: Regime,
    alpha: T,
    beta: T,
    opts: &SolverOptions,
) -> Result<SolveReport<T>> {
    let sub = regime.subspace_index;
    let complement = spec.complement_basis(sub);
    let prob = Problem {
        g,
        spec,
        alpha,
        beta,
        sub,
        metric: complement.iter().map(|&(s, _)| spec.lambda(s) - alpha).collect(),
        basis: complement.into_iter().map(|(_, v)| v).collect(),
    };
    let n = prob.basis.len();
    let grad_tol = T::of(opts.grad_tol);
    let switch_tol = T::of(opts.newton_switch_tol);
    let armijo = T::of(opts.armijo_c);
    let shrink = T::of(opts.backtrack);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut c = vec![T::zero(); n];
    let mut f = prob.objective(&c);
    let mut trace = vec![f];
    let mut status = SolveStatus::MaxIters;
    let mut iterations = 0;
    let mut saddle_escapes = 0;
    let mut step0 = T::one();
    let mut grad_sup = T::zero();

    while iterations < opts.max_iters {
        let (gc, gsup) = prob.gradient(&c)?;
        grad_sup = gsup;
        if n == 0 {
            status = SolveStatus::Converged;
            break;
        }
        if gsup <= grad_tol {
            // β ≤ 0 makes J convex on the subspace; otherwise rule out a saddle.
            if beta <= T::zero() || saddle_escapes >= MAX_ESCAPES {
                status = SolveStatus::Converged;
                break;
            }
            let h = prob.hessian(&c);
            match escape_direction(&h, n) {
                None => {
                    status = SolveStatus::Converged;
                    break;
                }
                Some((curv, mut dir)) => {
                    if rng.gen::<bool>() {
                        dir.iter_mut().for_each(|x| *x = -*x);
                    }
                    let Some((nc, nf)) = curvature_step(&prob, &c, f, &dir, curv, armijo, shrink) else {
                        status = SolveStatus::Converged;
                        break;
                    };
                    c = nc;
                    f = nf;
                    trace.push(f);
                    saddle_escapes += 1;
                    iterations += 1;
                    step0 = T::one();
                    continue;
                }
            }
        }

        let newton = gsup < switch_tol;
        let dir: Vec<T> = if newton {
            newton_direction(&prob.hessian(&c), n, &gc)
        } else {
            gc.iter().zip(&prob.metric).map(|(&gj, &d)| -gj / d).collect()
        };
        let slope = dot(&gc, &dir);
        let noise = T::of(16.0) * T::epsilon() * (T::one() + f.abs());
        let mut step = if newton { T::one() } else { step0 };
        let mut accepted = None;
        while step > T::of(1e-20) {
            let trial: Vec<T> = c.iter().zip(&dir).map(|(&x, &d)| x + step * d).collect();
            let tf = prob.objective(&trial);
            if tf.is_finite() && tf <= f + armijo * step * slope + noise {
                accepted = Some((trial, tf));
                break;
            }
            step *= shrink;
        }
        let Some((nc, nf)) = accepted else {
            break;
        };
        if !newton {
            step0 = (step / shrink).min(T::one());
        }
        c = nc;
        f = nf;
        trace.push(f);
        iterations += 1;
    }

    let u = VertexFunction::new(prob.assemble(&c));
    let objective = eval_j_unchecked(g, u.values(), alpha, beta);
    let mult = multipliers(g, spec, &u, beta, sub)?;
    let r = kw_residual(g, spec, &u, alpha, beta, sub)?;
    Ok(SolveReport {
        regime,
        alpha,
        beta,
        objective,
        grad_sup,
        xi: mult.xi,
        t_multipliers: mult.t,
        residual_sup: r.sup_norm(),
        residual_l2: inner_unchecked(g.mu(), r.values(), r.values()).sqrt(),
        iterations,
        saddle_escapes,
        status,
        objective_trace: trace,
        minimizer: u,
    })
}

const MAX_ESCAPES: usize = 64;

/// Newton direction `−(H + δI)⁻¹ g` with the Levenberg shift `δ` starting at
/// `10⁻⁸` and doubled until the shifted Hessian factors.
fn newton_direction<T: Scalar>(h: &[T], n: usize, gc: &[T]) -> Vec<T> {
    let mut shift = T::zero();
    loop {
        if let Some(l) = cholesky(h, n, shift) {
            return cholesky_solve(&l, n, gc).into_iter().map(|x| -x).collect();
        }
        shift = if shift == T::zero() { T::of(1e-8) } else { shift * T::of(2.0) };
    }
}

/// Most negative curvature direction of `h`, if it is meaningfully negative.
fn escape_direction<T: Scalar>(h: &[T], n: usize) -> Option<(T, Vec<T>)> {
    let (vals, vecs) = symmetric_eigen(h, n);
    let scale = vals.iter().fold(T::one(), |m, &x| m.max(x.abs()));
    if vals[0] >= -T::of(1e-8) * scale {
        return None;
    }
    Some((vals[0], (0..n).map(|r| vecs[r * n]).collect()))
}

fn curvature_step<T: Scalar>(
    prob: &Problem<'_, T>,
    c: &[T],
    f: T,
    dir: &[T],
    curv: T,
    armijo: T,
    shrink: T,
) -> Option<(Vec<T>, T)> {
    let mut step = T::one();
    while step > T::of(1e-12) {
        let trial: Vec<T> = c.iter().zip(dir).map(|(&x, &d)| x + step * d).collect();
        let tf = prob.objective(&trial);
        if tf < f + armijo * T::of(0.5) * curv * step * step {
            return Some((trial, tf));
        }
        step *= shrink;
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Unbounded,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RaySample<T> {
    pub t: T,
    #[serde(rename = "J")]
    pub j: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport<T> {
    pub regime: Regime,
    pub alpha: T,
    pub beta: T,
    /// Unit-norm `λ_{k+1}` eigenfunction spanning the ray.
    pub direction: VertexFunction<T>,
    pub samples: Vec<RaySample<T>>,
    pub verdict: Verdict,
}

pub const DEFAULT_PROBE_EXPONENT: u32 = 20;

/// Threshold below which the final ray value certifies divergence outright.
pub const DIVERGENCE_LEVEL: f64 = -1e6;

/// Samples `J_{α,β}(t·u_{k+1,1})` at `t = 2⁰ … 2^{t_max_exponent}`.
///
/// The verdict is `unbounded` when the last five samples strictly decrease
/// and either the final value is below `-10⁶` or the last four drops grow
/// geometrically (each at least 1.5× the previous one), which separates
/// linear and quadratic divergence from convergence to a finite limit.
pub fn probe_divergence<T: Scalar>(
    g: &Graph<T>,
    spec: &Spectrum<T>,
    alpha: T,
    beta: T,
    k: usize,
    t_max_exponent: u32,
) -> Result<ProbeReport<T>> {
    let lambda = spec.lambda((k + 1).min(spec.m().saturating_sub(1)));
    let regime = classify_regime(spec, alpha, beta, k, default_eq_tol(lambda))?;
    if regime.tag != RegimeTag::UnboundedBelow {
        return Err(KwError::BoundedRegime { alpha: alpha.as_f64(), beta: beta.as_f64(), k });
    }
    let direction = spec.basis(k + 1)[0].clone();
    check_len(g, &direction)?;
    let samples: Vec<RaySample<T>> = (0..=t_max_exponent)
        .map(|e| {
            let t = T::of(2f64.powi(e as i32));
            let u: Vec<T> = direction.iter().map(|&x| t * x).collect();
            RaySample { t, j: eval_j_unchecked(g, &u, alpha, beta) }
        })
        .collect();
    let verdict = divergence_verdict(&samples);
    Ok(ProbeReport { regime, alpha, beta, direction, samples, verdict })
}

fn divergence_verdict<T: Scalar>(samples: &[RaySample<T>]) -> Verdict {
    if samples.len() < 5 {
        return Verdict::Inconclusive;
    }
    let tail: Vec<T> = samples[samples.len() - 5..].iter().map(|s| s.j).collect();
    if !tail.windows(2).all(|w| w[1] < w[0]) {
        return Verdict::Inconclusive;
    }
    let last = *tail.last().unwrap();
    let drops: Vec<T> = tail.windows(2).map(|w| w[0] - w[1]).collect();
    let accelerating = drops.windows(2).all(|d| d[1] >= T::of(1.5) * d[0]);
    if last < T::of(DIVERGENCE_LEVEL) || accelerating {
        Verdict::Unbounded
    } else {
        Verdict::Inconclusive
    }
}

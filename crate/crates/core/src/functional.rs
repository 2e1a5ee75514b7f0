//! The functional `J_{α,β}(u) = ½∫(|∇u|² − αu²)dμ − β log ∫ h e^u dμ`,
//! its first and second variations, and the lower bound on `∫ h e^u dμ`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::calculus::{check_len, dirichlet_form_unchecked, dirichlet_unchecked, inner_unchecked, laplacian};
use crate::error::{KwError, Result};
use crate::graph::{Graph, VertexFunction};
use crate::scalar::Scalar;
use crate::spectral::{compute_spectrum, poincare_constant, project_ek_perp, Spectrum, DEFAULT_GROUPING_TOL};

/// `log ∫ h e^u dμ` together with the normalized weights
/// `p(x) = μ(x) h(x) e^{u(x)} / ∫ h e^u dμ`, computed with a max shift.
pub(crate) struct ExpIntegral<T> {
    pub log_s: T,
    pub weights: Vec<T>,
}

pub(crate) fn exp_integral<T: Scalar>(g: &Graph<T>, u: &[T]) -> ExpIntegral<T> {
    let shift = u.iter().copied().fold(T::neg_infinity(), T::max);
    let mut weights: Vec<T> = g
        .mu()
        .iter()
        .zip(g.h())
        .zip(u)
        .map(|((&m, &h), &x)| m * h * (x - shift).exp())
        .collect();
    let sum: T = weights.iter().copied().sum();
    for w in &mut weights {
        *w /= sum;
    }
    ExpIntegral { log_s: sum.ln() + shift, weights }
}

/// `log ∫ h e^u dμ`, stable for large |u|.
pub fn log_integral_h_exp<T: Scalar>(g: &Graph<T>, u: &VertexFunction<T>) -> Result<T> {
    check_len(g, u)?;
    Ok(exp_integral(g, u.values()).log_s)
}

pub(crate) fn eval_j_unchecked<T: Scalar>(g: &Graph<T>, u: &[T], alpha: T, beta: T) -> T {
    let quad = dirichlet_unchecked(g, u) - alpha * inner_unchecked(g.mu(), u, u);
    let log_term = if beta == T::zero() { T::zero() } else { beta * exp_integral(g, u).log_s };
    T::of(0.5) * quad - log_term
}

/// `J_{α,β}(u)`; with `alpha = 0` this is `J_β`.
pub fn eval_j<T: Scalar>(g: &Graph<T>, u: &VertexFunction<T>, alpha: T, beta: T) -> Result<T> {
    check_len(g, u)?;
    Ok(eval_j_unchecked(g, u.values(), alpha, beta))
}

/// Unprojected μ-gradient `−Δu − αu − β h e^u / S`.
pub(crate) fn raw_gradient<T: Scalar>(g: &Graph<T>, u: &VertexFunction<T>, alpha: T, beta: T) -> Result<Vec<T>> {
    let lap = laplacian(g, u)?;
    let ex = exp_integral(g, u.values());
    Ok((0..g.len())
        .map(|x| -lap[x] - alpha * u[x] - beta * ex.weights[x] / g.mu()[x])
        .collect())
}

/// μ-Riesz representative of the first variation of `J_{α,β}` restricted
/// to `E_k^⊥` (k = 0 is H): `P_{E_k^⊥}(−Δu − αu − β h e^u / S)`.
pub fn el_gradient<T: Scalar>(
    g: &Graph<T>,
    spec: &Spectrum<T>,
    u: &VertexFunction<T>,
    alpha: T,
    beta: T,
    k: usize,
) -> Result<VertexFunction<T>> {
    let raw = VertexFunction::new(raw_gradient(g, u, alpha, beta)?);
    project_ek_perp(spec, g, &raw, k)
}

/// Second derivative of `t ↦ J(u + tφ)` at `t = 0`:
/// `∫(|∇φ|² − αφ²) − β[∫h e^u φ²/S − (∫h e^u φ/S)²]`.
pub fn hessian_quadratic_form<T: Scalar>(
    g: &Graph<T>,
    u: &VertexFunction<T>,
    alpha: T,
    beta: T,
    phi: &VertexFunction<T>,
) -> Result<T> {
    check_len(g, u)?;
    check_len(g, phi)?;
    let ex = exp_integral(g, u.values());
    Ok(hessian_form_with(g, &ex.weights, alpha, beta, phi.values(), phi.values()))
}

/// Symmetric bilinear second variation evaluated with precomputed weights.
pub(crate) fn hessian_form_with<T: Scalar>(
    g: &Graph<T>,
    weights: &[T],
    alpha: T,
    beta: T,
    a: &[T],
    b: &[T],
) -> T {
    let quad = dirichlet_form_unchecked(g, a, b) - alpha * inner_unchecked(g.mu(), a, b);
    if beta == T::zero() {
        return quad;
    }
    let pab: T = weights.iter().zip(a).zip(b).map(|((&p, &x), &y)| p * x * y).sum();
    let pa: T = weights.iter().zip(a).map(|(&p, &x)| p * x).sum();
    let pb: T = weights.iter().zip(b).map(|(&p, &y)| p * y).sum();
    quad - beta * (pab - pa * pb)
}

/// Both sides of `∫ h e^u dμ ≥ C₁ exp(C₂ ‖∇u‖₂)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeuBound<T> {
    pub lhs: T,
    pub rhs: T,
    pub holds: bool,
}

/// Evaluates the lower bound with `C₁ = (min h)·Vol(V)` and
/// `C₂ = −C_P^{1/2} μ_min^{−1/2}`, `C_P = 1/λ₁`. Requires mean-zero `u`.
pub fn heu_lower_bound<T: Scalar>(g: &Graph<T>, spec: &Spectrum<T>, u: &VertexFunction<T>) -> Result<HeuBound<T>> {
    check_len(g, u)?;
    let total = inner_unchecked(g.mu(), u.values(), &vec![T::one(); g.len()]);
    let l1: T = g.mu().iter().zip(u.iter()).map(|(&m, &x)| m * x.abs()).sum();
    if total.abs() > T::of(1e-10) * l1 {
        return Err(KwError::Domain(format!("u is not mean-zero (∫u dμ = {total})")));
    }
    let cp = poincare_constant(spec)?;
    let c1 = g.h_min() * g.volume();
    let c2 = -cp.sqrt() / g.mu_min().sqrt();
    let grad_norm = dirichlet_unchecked(g, u.values()).sqrt();
    let log_lhs = exp_integral(g, u.values()).log_s;
    let log_rhs = c1.ln() + c2 * grad_norm;
    // a few ulps of slack for the equality case u = 0 with constant h
    let slack = T::of(8.0) * T::epsilon() * (T::one() + log_rhs.abs());
    Ok(HeuBound { lhs: log_lhs.exp(), rhs: log_rhs.exp(), holds: log_lhs + slack >= log_rhs })
}

/// Empirical lower estimate of `sup{∫ e^{θv²} dμ : v ∈ H, ∫|∇v|² dμ = 1}`.
///
/// Each of the `budget` restarts runs projected gradient ascent on the unit
/// Dirichlet sphere from a random start; restart `i` is seeded from
/// `(seed, i)`, so the estimate is non-decreasing in `budget`.
pub fn estimate_tm_constant<T: Scalar>(g: &Graph<T>, theta: T, budget: usize, seed: u64) -> Result<T> {
    if budget == 0 {
        return Err(KwError::InvalidArgument("budget must be at least 1".into()));
    }
    let spec = compute_spectrum(g, T::of(DEFAULT_GROUPING_TOL))?;
    // v = Σ c_j φ_j / sqrt(λ_j) puts the Dirichlet sphere at |c| = 1.
    let dirs: Vec<Vec<T>> = spec
        .complement_basis(0)
        .into_iter()
        .map(|(s, v)| {
            let scale = T::one() / spec.lambda(s).sqrt();
            v.iter().map(|&x| x * scale).collect()
        })
        .collect();
    let dim = dirs.len();
    let n = g.len();

    let assemble = |c: &[T]| -> Vec<T> {
        let mut v = vec![T::zero(); n];
        for (cj, d) in c.iter().zip(&dirs) {
            for (o, &x) in v.iter_mut().zip(d) {
                *o += *cj * x;
            }
        }
        v
    };
    // log ∫ e^{θ v²} dμ
    let log_objective = |v: &[T]| -> T {
        let e: Vec<T> = v.iter().map(|&x| theta * x * x).collect();
        let shift = e.iter().copied().fold(T::neg_infinity(), T::max);
        let s: T = g.mu().iter().zip(&e).map(|(&m, &x)| m * (x - shift).exp()).sum();
        s.ln() + shift
    };

    let mut best = T::neg_infinity();
    for restart in 0..budget {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (restart as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let mut c: Vec<T> = (0..dim).map(|_| T::of(rng.gen_range(-1.0..1.0))).collect();
        normalize(&mut c);
        let mut v = assemble(&c);
        let mut f = log_objective(&v);
        let mut step = T::one();
        for _ in 0..500 {
            // gradient of log ∫ e^{θv²} in c, then tangent projection
            let e: Vec<T> = v.iter().map(|&x| theta * x * x).collect();
            let shift = e.iter().copied().fold(T::neg_infinity(), T::max);
            let w: Vec<T> = g.mu().iter().zip(&e).map(|(&m, &x)| m * (x - shift).exp()).collect();
            let ws: T = w.iter().copied().sum();
            let mut grad: Vec<T> = dirs
                .iter()
                .map(|d| {
                    w.iter().zip(&v).zip(d).map(|((&wx, &vx), &dx)| wx * T::of(2.0) * theta * vx * dx).sum::<T>() / ws
                })
                .collect();
            let radial: T = grad.iter().zip(&c).map(|(&a, &b)| a * b).sum();
            for (gj, &cj) in grad.iter_mut().zip(&c) {
                *gj -= radial * cj;
            }
            let gnorm = grad.iter().map(|&x| x * x).sum::<T>().sqrt();
            if gnorm <= T::of(1e-12) {
                break;
            }
            let mut improved = false;
            while step > T::of(1e-14) {
                let mut trial: Vec<T> = c.iter().zip(&grad).map(|(&a, &b)| a + step * b).collect();
                normalize(&mut trial);
                let tv = assemble(&trial);
                let tf = log_objective(&tv);
                if tf > f {
                    c = trial;
                    v = tv;
                    f = tf;
                    improved = true;
                    step *= T::of(2.0);
                    break;
                }
                step *= T::of(0.5);
            }
            if !improved {
                break;
            }
        }
        best = best.max(f);
    }
    Ok(best.exp())
}

fn normalize<T: Scalar>(c: &mut [T]) {
    let nrm = c.iter().map(|&x| x * x).sum::<T>().sqrt();
    if nrm > T::zero() {
        for x in c.iter_mut() {
            *x /= nrm;
        }
    } else if let Some(first) = c.first_mut() {
        *first = T::one();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Edge;

    fn k2(h: [f64; 2]) -> Graph<f64> {
        Graph::new(vec!["a".into(), "b".into()], vec![1.0, 1.0], h.to_vec(), vec![Edge { i: 0, j: 1, w: 1.0 }])
            .unwrap()
    }

    fn p3() -> Graph<f64> {
        Graph::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![1.0; 3],
            vec![1.0; 3],
            vec![Edge { i: 0, j: 1, w: 1.0 }, Edge { i: 1, j: 2, w: 1.0 }],
        )
        .unwrap()
    }

    fn vf(x: &[f64]) -> VertexFunction<f64> {
        VertexFunction::new(x.to_vec())
    }

    #[test]
    fn eval_j_examples() {
        let g = k2([1.0, 1.0]);
        for beta in [-3.0, 0.0, 2.5] {
            let j = eval_j(&g, &vf(&[0.0, 0.0]), 0.0, beta).unwrap();
            assert!((j + beta * 2f64.ln()).abs() < 1e-15);
        }
        let u = vf(&[1.0, -1.0]);
        let direct = 2.0 - (1f64.exp() + (-1f64).exp()).ln();
        assert!((eval_j(&g, &u, 0.0, 1.0).unwrap() - direct).abs() < 1e-15);
        assert!((direct - 0.87307).abs() < 1e-5);
        assert_eq!(eval_j(&g, &u, 1.0, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn eval_j_survives_huge_arguments() {
        let g = k2([1.0, 1.0]);
        let j = eval_j(&g, &vf(&[1000.0, -1000.0]), 2.0, 1.0).unwrap();
        // ½(4e6 − 2·2e6) − log(e^{1000} + e^{−1000}) = −1000
        assert!((j + 1000.0).abs() < 1e-9);
    }

    #[test]
    fn el_gradient_k2_example() {
        let g = k2([1.0, 1.0]);
        let s = compute_spectrum(&g, 1e-8).unwrap();
        let grad = el_gradient(&g, &s, &vf(&[1.0, -1.0]), 0.0, 1.0, 0).unwrap();
        let t = 1f64.tanh();
        let want = 2.0 - t / 2.0;
        assert!((grad[0] - want).abs() < 1e-13 && (grad[1] + want).abs() < 1e-13);
        assert!((want - 1.61920).abs() < 1e-5);
        // directional derivative along (1,−1) equals 4 − tanh 1
        assert!((2.0 * want - (4.0 - t)).abs() < 1e-13);
    }

    #[test]
    fn el_gradient_vanishes_for_constant_h_at_zero() {
        let g = p3();
        let s = compute_spectrum(&g, 1e-8).unwrap();
        for (alpha, beta, k) in [(0.0, 5.0, 0), (0.7, -2.0, 1), (-3.0, 1.0, 2)] {
            let grad = el_gradient(&g, &s, &vf(&[0.0; 3]), alpha, beta, k).unwrap();
            assert!(grad.sup_norm() < 1e-15);
        }
    }

    #[test]
    fn hessian_examples() {
        let g = k2([1.0, 1.0]);
        let zero = vf(&[0.0, 0.0]);
        let phi = vf(&[1.0, -1.0]);
        assert!((hessian_quadratic_form(&g, &zero, 0.0, 8.0, &phi).unwrap() + 4.0).abs() < 1e-14);
        assert!((hessian_quadratic_form(&g, &zero, 0.0, 2.0, &phi).unwrap() - 2.0).abs() < 1e-14);
        let u = vf(&[0.3, -0.2]);
        let q = hessian_quadratic_form(&g, &u, 0.5, 0.0, &phi).unwrap();
        assert!((q - (4.0 - 0.5 * 2.0)).abs() < 1e-14);
    }

    #[test]
    fn heu_bound_examples() {
        let g = k2([1.0, 1.0]);
        let s = compute_spectrum(&g, 1e-8).unwrap();
        let b = heu_lower_bound(&g, &s, &vf(&[0.0, 0.0])).unwrap();
        assert!((b.lhs - 2.0).abs() < 1e-15 && (b.rhs - 2.0).abs() < 1e-15 && b.holds);
        let b = heu_lower_bound(&g, &s, &vf(&[1.0, -1.0])).unwrap();
        let rhs = 2.0 * (-(0.5f64).sqrt() * 2.0).exp();
        assert!((b.lhs - (1f64.exp() + (-1f64).exp())).abs() < 1e-14);
        assert!((b.rhs - rhs).abs() < 1e-14);
        assert!((b.lhs - 3.08616).abs() < 1e-5 && (b.rhs - 0.486233).abs() < 1e-6);
        assert!(b.holds);
        assert!(matches!(heu_lower_bound(&g, &s, &vf(&[1.0, 0.0])), Err(KwError::Domain(_))));
    }

    #[test]
    fn tm_constant_k2_closed_form() {
        let g = k2([1.0, 1.0]);
        let est = estimate_tm_constant(&g, 1.0, 3, 7).unwrap();
        assert!((est - 2.0 * 0.25f64.exp()).abs() < 1e-12);
        assert!((est - 2.56805).abs() < 1e-5);
    }

    #[test]
    fn tm_constant_theta_zero_is_volume() {
        let est = estimate_tm_constant(&p3(), 0.0, 4, 1).unwrap();
        assert!((est - 3.0).abs() < 1e-12);
    }

    #[test]
    fn tm_constant_p3_monotone_in_budget() {
        let g = p3();
        let mut prev = 0.0;
        for budget in [1, 2, 4, 8, 16] {
            let est = estimate_tm_constant(&g, 1.0, budget, 42).unwrap();
            assert!(est.is_finite() && est >= 3.0);
            assert!(est >= prev);
            prev = est;
        }
    }
}

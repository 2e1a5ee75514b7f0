//! Worked examples checked against independent brute-force oracles.

mod common;

use common::*;
use kwgraph::*;

/// det(A − λI) for a small dense matrix by cofactor expansion.
fn det(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    if n == 1 {
        return a[0][0];
    }
    (0..n)
        .map(|c| {
            let minor: Vec<Vec<f64>> =
                a[1..].iter().map(|row| row.iter().enumerate().filter(|&(j, _)| j != c).map(|(_, &x)| x).collect()).collect();
            let sign = if c % 2 == 0 { 1.0 } else { -1.0 };
            sign * a[0][c] * det(&minor)
        })
        .sum()
}

/// Eigenvalues of −Δ = M⁻¹L from sign changes of the characteristic
/// polynomial on a fine grid, refined by bisection; double roots are found
/// where the derivative changes sign and the polynomial vanishes.
fn char_poly_roots(g: &Graph64) -> Vec<f64> {
    let n = g.len();
    let mut op = vec![vec![0.0; n]; n];
    for e in g.edges() {
        op[e.i][e.i] += e.w / g.mu()[e.i];
        op[e.j][e.j] += e.w / g.mu()[e.j];
        op[e.i][e.j] -= e.w / g.mu()[e.i];
        op[e.j][e.i] -= e.w / g.mu()[e.j];
    }
    let p = |lam: f64| {
        let shifted: Vec<Vec<f64>> = op
            .iter()
            .enumerate()
            .map(|(i, row)| row.iter().enumerate().map(|(j, &x)| if i == j { x - lam } else { x }).collect())
            .collect();
        det(&shifted)
    };
    // roots of p and of its derivative (for even multiplicity) via |p| minima
    let step = 1e-3;
    let mut roots = Vec::new();
    let mut lam = -0.5;
    while lam < 10.0 {
        let (a, b) = (lam, lam + step);
        let (pa, pb) = (p(a), p(b));
        if pa == 0.0 {
            roots.push(a);
        } else if pa * pb < 0.0 {
            let (mut lo, mut hi) = (a, b);
            for _ in 0..100 {
                let m = 0.5 * (lo + hi);
                if p(lo) * p(m) <= 0.0 {
                    hi = m;
                } else {
                    lo = m;
                }
            }
            roots.push(0.5 * (lo + hi));
        } else {
            // double root: p touches zero where its derivative changes sign
            let dp = |x: f64| (p(x + 1e-6) - p(x - 1e-6)) / 2e-6;
            if dp(a) * dp(b) < 0.0 {
                let (mut lo, mut hi) = (a, b);
                for _ in 0..60 {
                    let m = 0.5 * (lo + hi);
                    if dp(lo) * dp(m) <= 0.0 {
                        hi = m;
                    } else {
                        lo = m;
                    }
                }
                let x = 0.5 * (lo + hi);
                if p(x).abs() < 1e-9 {
                    roots.push(x);
                }
            }
        }
        lam += step;
    }
    roots.dedup_by(|x, y| (*x - *y).abs() < 1e-2);
    roots
}

#[test]
fn spectra_match_characteristic_polynomial() {
    for (g, want_mult) in [(k2(), vec![1, 1]), (p3(), vec![1, 1, 1]), (k3(), vec![1, 2])] {
        let roots = char_poly_roots(&g);
        let spec = compute_spectrum(&g, DEFAULT_GROUPING_TOL).unwrap();
        assert_eq!(spec.multiplicities, want_mult);
        assert_eq!(roots.len(), spec.m(), "roots {roots:?}");
        for (r, l) in roots.iter().zip(&spec.distinct_eigenvalues) {
            assert!((r - l).abs() < 1e-3, "oracle {r} vs {l}");
        }
        let cp = poincare_constant(&spec).unwrap();
        assert!((cp - 1.0 / roots[1]).abs() < 1e-3);
    }
    // frozen from the oracle runs above
    let s = compute_spectrum(&k3(), DEFAULT_GROUPING_TOL).unwrap();
    assert!((s.lambda1() - 3.0).abs() < 1e-12);
}

#[test]
fn p3_eigenvectors_by_brute_force_product() {
    let g = p3();
    for (v, lam) in [([1.0, 0.0, -1.0], 1.0), ([1.0, -2.0, 1.0], 3.0)] {
        let u = VertexFunction64::new(v.to_vec());
        let lap = laplacian(&g, &u).unwrap();
        for x in 0..3 {
            assert_eq!(-lap[x], lam * v[x]);
        }
    }
    // dirichlet energy equals λ₁ ∫u² on the λ₁ eigenvector
    let u = VertexFunction64::new(vec![1.0, 0.0, -1.0]);
    let brute: f64 = g.edges().iter().map(|e| e.w * (u[e.j] - u[e.i]).powi(2)).sum();
    assert_eq!(brute, 2.0);
    assert_eq!(dirichlet_energy(&g, &u).unwrap(), brute);
}

fn central_difference(g: &Graph64, u: &VertexFunction64, phi: &VertexFunction64, alpha: f64, beta: f64, h: f64) -> f64 {
    let plus = eval_j(g, &u.axpy(h, phi), alpha, beta).unwrap();
    let minus = eval_j(g, &u.axpy(-h, phi), alpha, beta).unwrap();
    (plus - minus) / (2.0 * h)
}

#[test]
fn k2_gradient_matches_finite_difference() {
    let g = k2();
    let s = compute_spectrum(&g, DEFAULT_GROUPING_TOL).unwrap();
    let u = VertexFunction64::new(vec![1.0, -1.0]);
    let phi = VertexFunction64::new(vec![1.0, -1.0]);
    let fd = central_difference(&g, &u, &phi, 0.0, 1.0, 1e-6);
    let grad = el_gradient(&g, &s, &u, 0.0, 1.0, 0).unwrap();
    let an = inner(&g, &grad, &phi).unwrap();
    assert!((fd - an).abs() < 1e-8);
    assert!((an - 3.23840).abs() < 1e-5);
    assert!((grad[0] - 1.61920).abs() < 1e-5 && (grad[1] + 1.61920).abs() < 1e-5);
}

#[test]
fn hessian_examples_match_second_difference() {
    let g = k2();
    let zero = VertexFunction64::zeros(2);
    let phi = VertexFunction64::new(vec![1.0, -1.0]);
    for (beta, want) in [(8.0, -4.0), (2.0, 2.0)] {
        let h = 1e-4;
        let j = |t: f64| eval_j(&g, &zero.axpy(t, &phi), 0.0, beta).unwrap();
        let fd = (j(h) - 2.0 * j(0.0) + j(-h)) / (h * h);
        assert!((fd - want).abs() < 1e-5, "beta {beta}: fd {fd}");
        assert!((hessian_quadratic_form(&g, &zero, 0.0, beta, &phi).unwrap() - want).abs() < 1e-14);
    }
}

#[test]
fn k2_minimizers_match_one_dimensional_oracle() {
    let g = k2();
    let s = compute_spectrum(&g, DEFAULT_GROUPING_TOL).unwrap();

    let (t_star, j_star) = k2_oracle_minimizer(8.0);
    assert!((t_star.abs() - 1.9150).abs() < 1e-4);
    assert!((j_star + 8.158).abs() < 1e-3);
    let rep = minimize(&g, &s, 0.0, 8.0, 0, &SolverOptions::default()).unwrap();
    assert!((rep.minimizer[0].abs() - t_star.abs()).abs() < 1e-6);
    assert!((rep.objective - j_star).abs() < 1e-8);
    let r = kw_residual(&g, &s, &rep.minimizer, 0.0, 8.0, 0).unwrap();
    assert!(r.sup_norm() <= 1e-9);

    // h = (1, 2): 4t = (e^t − 2e^{−t}) / (e^t + 2e^{−t}), bisection on [−1, 1]
    let g = unit_graph(2, &[(0, 1)], &[1.0, 2.0]);
    let s = compute_spectrum(&g, DEFAULT_GROUPING_TOL).unwrap();
    let f = |t: f64| 4.0 * t - (t.exp() - 2.0 * (-t).exp()) / (t.exp() + 2.0 * (-t).exp());
    let (mut a, mut b) = (-1.0, 1.0);
    for _ in 0..100 {
        let m = 0.5 * (a + b);
        if f(a) * f(m) <= 0.0 {
            b = m;
        } else {
            a = m;
        }
    }
    let t_oracle = 0.5 * (a + b);
    assert!((t_oracle + 0.106).abs() < 1e-3);
    let rep = minimize(&g, &s, 0.0, 1.0, 0, &SolverOptions::default()).unwrap();
    assert!((rep.minimizer[0] - t_oracle).abs() < 1e-9);
    assert!((rep.minimizer[1] + t_oracle).abs() < 1e-9);
}

#[test]
fn k2_oracle_equivalence_grid() {
    let g = k2();
    let s = compute_spectrum(&g, DEFAULT_GROUPING_TOL).unwrap();
    for beta in [-8.0, -3.0, 0.0, 2.0, 4.0001, 8.0, 50.0] {
        let (t_star, j_star) = k2_oracle_minimizer(beta);
        let rep = minimize(&g, &s, 0.0, beta, 0, &SolverOptions::default()).unwrap();
        assert_eq!(rep.status, SolveStatus::Converged, "beta {beta}");
        assert!(
            (rep.minimizer[0].abs() - t_star.abs()).abs() <= 1e-6,
            "beta {beta}: solver t {} oracle {t_star}",
            rep.minimizer[0]
        );
        assert!((rep.objective - j_star).abs() <= 1e-8, "beta {beta}");
    }
}

#[test]
fn probe_ray_values_match_direct_evaluation() {
    let g = k2();
    let s = compute_spectrum(&g, DEFAULT_GROUPING_TOL).unwrap();
    let rep = probe_divergence(&g, &s, 2.0, 1.0, 0, 20).unwrap();
    for sample in &rep.samples {
        // J(t u₁) = −log(2 cosh(t/√2)), evaluated stably
        let x = sample.t / 2f64.sqrt();
        let oracle = -(x + (-2.0 * x).exp().ln_1p());
        assert!((sample.j - oracle).abs() <= 1e-12 * (1.0 + oracle.abs()));
    }
    assert_eq!(rep.verdict, Verdict::Unbounded);
}

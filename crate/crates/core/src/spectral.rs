//! Spectrum of `-Δ` in the μ-inner product, eigenspaces `E_k` and their
//! complements `E_k^⊥` inside H.

use serde::{Deserialize, Serialize};

use crate::calculus::{check_len, inner_unchecked};
use crate::error::{KwError, Result};
use crate::graph::{Graph, VertexFunction};
use crate::linalg::symmetric_eigen;
use crate::scalar::Scalar;

/// Default relative tolerance for merging numerically equal eigenvalues.
pub const DEFAULT_GROUPING_TOL: f64 = 1e-8;

/// Distinct eigenvalues `0 = λ₀ < λ₁ < … < λ_{m−1}` of `-Δ` with
/// μ-orthonormal eigenbases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum<T> {
    pub distinct_eigenvalues: Vec<T>,
    pub multiplicities: Vec<usize>,
    pub bases: Vec<Vec<VertexFunction<T>>>,
    pub grouping_tol: T,
}

impl<T: Scalar> Spectrum<T> {
    /// Number of distinct eigenvalues, zero included.
    pub fn m(&self) -> usize {
        self.distinct_eigenvalues.len()
    }

    pub fn lambda(&self, k: usize) -> T {
        self.distinct_eigenvalues[k]
    }

    /// λ₁, the first nonzero eigenvalue.
    pub fn lambda1(&self) -> T {
        self.distinct_eigenvalues[1]
    }

    pub fn basis(&self, k: usize) -> &[VertexFunction<T>] {
        &self.bases[k]
    }

    /// Basis vectors spanning `E_k^⊥`, i.e. all eigenvectors with index > k.
    pub fn complement_basis(&self, k: usize) -> Vec<(usize, &VertexFunction<T>)> {
        self.bases
            .iter()
            .enumerate()
            .skip(k + 1)
            .flat_map(|(s, b)| b.iter().map(move |v| (s, v)))
            .collect()
    }

    /// Dimension of `E_k^⊥`.
    pub fn complement_dim(&self, k: usize) -> usize {
        self.multiplicities.iter().skip(k + 1).sum()
    }

    fn check_k(&self, k: usize) -> Result<()> {
        if self.m() == 0 || k > self.m() - 1 {
            return Err(KwError::IndexOutOfRange { k, max: self.m().saturating_sub(1) });
        }
        Ok(())
    }
}

/// Full eigendecomposition of `-Δ = M⁻¹ L`.
///
/// `M^{-1/2} L M^{-1/2}` is diagonalized by Jacobi rotations and the
/// eigenvectors are mapped back by `M^{-1/2}`, which makes them
/// μ-orthonormal. Eigenvalues within `grouping_tol · max|λ|` of their
/// predecessor are merged into one distinct eigenvalue.
pub fn compute_spectrum<T: Scalar>(g: &Graph<T>, grouping_tol: T) -> Result<Spectrum<T>> {
    if !(grouping_tol > T::zero()) {
        return Err(KwError::InvalidArgument(format!("grouping_tol must be positive, got {grouping_tol}")));
    }
    let violations = crate::graph::validate(g);
    if !violations.is_empty() {
        return Err(KwError::InvalidGraph(violations));
    }
    let n = g.len();
    let inv_sqrt_mu: Vec<T> = g.mu().iter().map(|&m| T::one() / m.sqrt()).collect();

    let mut a = vec![T::zero(); n * n];
    for e in g.edges() {
        let (i, j, w) = (e.i, e.j, e.w);
        a[i * n + i] += w * inv_sqrt_mu[i] * inv_sqrt_mu[i];
        a[j * n + j] += w * inv_sqrt_mu[j] * inv_sqrt_mu[j];
        let off = -w * inv_sqrt_mu[i] * inv_sqrt_mu[j];
        a[i * n + j] += off;
        a[j * n + i] += off;
    }
    let (values, vectors) = symmetric_eigen(&a, n);
    let column = |c: usize| -> Vec<T> { (0..n).map(|r| vectors[r * n + c] * inv_sqrt_mu[r]).collect() };

    // λ₀ = 0 is simple on a connected graph; its basis is pinned to the
    // exact constant Vol^{-1/2}.
    let vol = g.volume();
    let constant = vec![T::one() / vol.sqrt(); n];
    let max_abs = values.iter().fold(T::zero(), |m, &x| m.max(x.abs()));
    let tol = grouping_tol * max_abs;

    let mut groups: Vec<Vec<usize>> = Vec::new();
    for c in 1..n {
        match groups.last_mut() {
            Some(gr) if (values[c] - values[*gr.last().unwrap()]).abs() <= tol => gr.push(c),
            _ => groups.push(vec![c]),
        }
    }

    let mut distinct = vec![T::zero()];
    let mut multiplicities = vec![1];
    let mut bases = vec![vec![VertexFunction::new(constant.clone())]];
    let mut accepted: Vec<Vec<T>> = vec![constant];
    for gr in groups {
        let lam = gr.iter().map(|&c| values[c]).sum::<T>() / T::of_usize(gr.len());
        let mut basis = Vec::with_capacity(gr.len());
        for &c in &gr {
            let mut v = column(c);
            // modified Gram-Schmidt against everything accepted so far
            for prev in &accepted {
                let p = inner_unchecked(g.mu(), &v, prev);
                for (x, &y) in v.iter_mut().zip(prev) {
                    *x -= p * y;
                }
            }
            let nrm = inner_unchecked(g.mu(), &v, &v).sqrt();
            for x in &mut v {
                *x /= nrm;
            }
            fix_sign(&mut v);
            accepted.push(v.clone());
            basis.push(VertexFunction::new(v));
        }
        distinct.push(lam);
        multiplicities.push(gr.len());
        bases.push(basis);
    }

    Ok(Spectrum { distinct_eigenvalues: distinct, multiplicities, bases, grouping_tol })
}

fn fix_sign<T: Scalar>(v: &mut [T]) {
    let scale = v.iter().fold(T::zero(), |m, &x| m.max(x.abs()));
    let cutoff = scale * T::of(1e-10);
    if let Some(&first) = v.iter().find(|x| x.abs() > cutoff) {
        if first < T::zero() {
            for x in v.iter_mut() {
                *x = -*x;
            }
        }
    }
}

/// μ-orthogonal projection onto `E_k = E_{λ₁} ⊕ … ⊕ E_{λ_k}` (zero for k = 0).
pub fn project_ek<T: Scalar>(
    spec: &Spectrum<T>,
    g: &Graph<T>,
    f: &VertexFunction<T>,
    k: usize,
) -> Result<VertexFunction<T>> {
    spec.check_k(k)?;
    check_len(g, f)?;
    let mut out = vec![T::zero(); g.len()];
    for basis in spec.bases.iter().take(k + 1).skip(1) {
        for v in basis {
            let c = inner_unchecked(g.mu(), f.values(), v.values());
            for (o, &y) in out.iter_mut().zip(v.iter()) {
                *o += c * y;
            }
        }
    }
    Ok(VertexFunction::new(out))
}

/// μ-orthogonal projection onto `E_k^⊥` inside H; k = 0 is the projection
/// onto H itself.
pub fn project_ek_perp<T: Scalar>(
    spec: &Spectrum<T>,
    g: &Graph<T>,
    f: &VertexFunction<T>,
    k: usize,
) -> Result<VertexFunction<T>> {
    spec.check_k(k)?;
    check_len(g, f)?;
    let mut out = f.values().to_vec();
    for basis in spec.bases.iter().take(k + 1) {
        for v in basis {
            let c = inner_unchecked(g.mu(), &out, v.values());
            for (o, &y) in out.iter_mut().zip(v.iter()) {
                *o -= c * y;
            }
        }
    }
    Ok(VertexFunction::new(out))
}

/// Sharp Poincaré constant `1/λ₁`.
pub fn poincare_constant<T: Scalar>(spec: &Spectrum<T>) -> Result<T> {
    if spec.m() < 2 {
        return Err(KwError::Domain("spectrum has no nonzero eigenvalue".into()));
    }
    Ok(T::one() / spec.lambda1())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{laplacian, project_mean_zero};
    use crate::graph::Edge;

    fn unit_graph(n: usize, edges: &[(usize, usize)]) -> Graph<f64> {
        Graph::new(
            (0..n).map(|i| format!("v{i}")).collect(),
            vec![1.0; n],
            vec![1.0; n],
            edges.iter().map(|&(i, j)| Edge { i, j, w: 1.0 }).collect(),
        )
        .unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn k2_spectrum() {
        let s = compute_spectrum(&unit_graph(2, &[(0, 1)]), DEFAULT_GROUPING_TOL).unwrap();
        assert!(close(&s.distinct_eigenvalues, &[0.0, 2.0], 1e-13));
        assert_eq!(s.multiplicities, vec![1, 1]);
        assert!((poincare_constant(&s).unwrap() - 0.5).abs() < 1e-13);
    }

    #[test]
    fn p3_spectrum_and_vectors() {
        let s = compute_spectrum(&unit_graph(3, &[(0, 1), (1, 2)]), DEFAULT_GROUPING_TOL).unwrap();
        assert!(close(&s.distinct_eigenvalues, &[0.0, 1.0, 3.0], 1e-13));
        assert_eq!(s.multiplicities, vec![1, 1, 1]);
        let r2 = 2f64.sqrt();
        let r3 = 3f64.sqrt();
        let r6 = 6f64.sqrt();
        assert!(close(s.basis(0)[0].values(), &[1.0 / r3; 3], 1e-13));
        assert!(close(s.basis(1)[0].values(), &[1.0 / r2, 0.0, -1.0 / r2], 1e-13));
        assert!(close(s.basis(2)[0].values(), &[1.0 / r6, -2.0 / r6, 1.0 / r6], 1e-13));
        assert!((poincare_constant(&s).unwrap() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn k3_groups_double_eigenvalue() {
        let g = unit_graph(3, &[(0, 1), (1, 2), (0, 2)]);
        let s = compute_spectrum(&g, DEFAULT_GROUPING_TOL).unwrap();
        assert!(close(&s.distinct_eigenvalues, &[0.0, 3.0], 1e-13));
        assert_eq!(s.multiplicities, vec![1, 2]);
        assert!((poincare_constant(&s).unwrap() - 1.0 / 3.0).abs() < 1e-13);
        let b = s.basis(1);
        assert!(inner_unchecked(g.mu(), b[0].values(), b[1].values()).abs() < 1e-14);
        for v in b {
            let lap = laplacian(&g, v).unwrap();
            assert!(lap.iter().zip(v.iter()).all(|(l, x)| (-l - 3.0 * x).abs() < 1e-12));
            let first = v.iter().find(|x| x.abs() > 1e-10).unwrap();
            assert!(*first > 0.0);
        }
    }

    #[test]
    fn projections_on_p3() {
        let g = unit_graph(3, &[(0, 1), (1, 2)]);
        let s = compute_spectrum(&g, DEFAULT_GROUPING_TOL).unwrap();
        let f = VertexFunction::new(vec![2.0, -2.0, 0.0]);
        let p = project_ek_perp(&s, &g, &f, 1).unwrap();
        assert!(close(p.values(), &[1.0, -2.0, 1.0], 1e-13));
        let e1 = VertexFunction::new(vec![1.0, 0.0, -1.0]);
        assert!(project_ek_perp(&s, &g, &e1, 1).unwrap().sup_norm() < 1e-14);
        let f = VertexFunction::new(vec![0.3, 1.7, -2.0]);
        let p0 = project_ek_perp(&s, &g, &f, 0).unwrap();
        assert!(close(p0.values(), project_mean_zero(&g, &f).unwrap().values(), 1e-14));
        assert!(matches!(project_ek_perp(&s, &g, &f, 3), Err(KwError::IndexOutOfRange { k: 3, max: 2 })));
    }

    #[test]
    fn weighted_measure_is_mu_orthonormal() {
        let g = Graph::new(
            vec!["a".into(), "b".into(), "c".into(), "d".into()],
            vec![0.5, 2.0, 1.0, 3.0],
            vec![1.0; 4],
            vec![
                Edge { i: 0, j: 1, w: 1.5 },
                Edge { i: 1, j: 2, w: 0.2 },
                Edge { i: 2, j: 3, w: 4.0 },
                Edge { i: 3, j: 0, w: 1.0 },
            ],
        )
        .unwrap();
        let s = compute_spectrum(&g, DEFAULT_GROUPING_TOL).unwrap();
        let all: Vec<_> = s.bases.iter().flatten().collect();
        assert_eq!(all.len(), 4);
        for (i, a) in all.iter().enumerate() {
            for (j, b) in all.iter().enumerate() {
                let d = inner_unchecked(g.mu(), a.values(), b.values());
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((d - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_nonpositive_grouping_tol() {
        assert!(compute_spectrum(&unit_graph(2, &[(0, 1)]), 0.0).is_err());
    }
}

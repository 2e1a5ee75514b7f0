//! Discrete calculus on a weighted graph with vertex measure.
//!
//! All inner products are taken with respect to the measure:
//! `<u, v> = sum_x mu(x) u(x) v(x)`. Under this pairing `-Δ` is self-adjoint.

use crate::error::{KwError, Result};
use crate::graph::{Graph, VertexFunction};
use crate::scalar::Scalar;

pub(crate) fn check_len<T: Scalar>(g: &Graph<T>, f: &VertexFunction<T>) -> Result<()> {
    if f.len() != g.len() {
        return Err(KwError::LengthMismatch { expected: g.len(), found: f.len() });
    }
    Ok(())
}

/// `∫ f dμ = Σ μ(x) f(x)`.
pub fn integrate<T: Scalar>(g: &Graph<T>, f: &VertexFunction<T>) -> Result<T> {
    check_len(g, f)?;
    Ok(g.mu().iter().zip(f.iter()).map(|(&m, &x)| m * x).sum())
}

/// μ-weighted inner product `∫ u v dμ`.
pub fn inner<T: Scalar>(g: &Graph<T>, u: &VertexFunction<T>, v: &VertexFunction<T>) -> Result<T> {
    check_len(g, u)?;
    check_len(g, v)?;
    Ok(inner_unchecked(g.mu(), u.values(), v.values()))
}

#[inline]
pub(crate) fn inner_unchecked<T: Scalar>(mu: &[T], u: &[T], v: &[T]) -> T {
    mu.iter().zip(u).zip(v).map(|((&m, &a), &b)| m * a * b).sum()
}

/// `(Δu)(x) = μ(x)⁻¹ Σ_{y~x} w_xy (u(y) − u(x))`.
pub fn laplacian<T: Scalar>(g: &Graph<T>, u: &VertexFunction<T>) -> Result<VertexFunction<T>> {
    check_len(g, u)?;
    let out = (0..g.len())
        .map(|x| {
            let s: T = g.neighbors(x).iter().map(|&(y, w)| w * (u[y] - u[x])).sum();
            s / g.mu()[x]
        })
        .collect();
    Ok(VertexFunction::new(out))
}

/// Gradient form `Γ(u,v)(x) = (2μ(x))⁻¹ Σ_{y~x} w_xy (u(y)−u(x))(v(y)−v(x))`.
pub fn gamma<T: Scalar>(
    g: &Graph<T>,
    u: &VertexFunction<T>,
    v: &VertexFunction<T>,
) -> Result<VertexFunction<T>> {
    check_len(g, u)?;
    check_len(g, v)?;
    let two = T::of(2.0);
    let out = (0..g.len())
        .map(|x| {
            let s: T = g
                .neighbors(x)
                .iter()
                .map(|&(y, w)| w * (u[y] - u[x]) * (v[y] - v[x]))
                .sum();
            s / (two * g.mu()[x])
        })
        .collect();
    Ok(VertexFunction::new(out))
}

/// `∫ |∇u|² dμ`, computed edgewise as `Σ_edges w (u(j) − u(i))²`.
pub fn dirichlet_energy<T: Scalar>(g: &Graph<T>, u: &VertexFunction<T>) -> Result<T> {
    check_len(g, u)?;
    Ok(dirichlet_unchecked(g, u.values()))
}

pub(crate) fn dirichlet_unchecked<T: Scalar>(g: &Graph<T>, u: &[T]) -> T {
    g.edges()
        .iter()
        .map(|e| {
            let d = u[e.j] - u[e.i];
            e.w * d * d
        })
        .sum()
}

/// Edgewise bilinear form `∫ Γ(u, v) dμ`.
pub(crate) fn dirichlet_form_unchecked<T: Scalar>(g: &Graph<T>, u: &[T], v: &[T]) -> T {
    g.edges().iter().map(|e| e.w * (u[e.j] - u[e.i]) * (v[e.j] - v[e.i])).sum()
}

/// μ-mean `∫ f dμ / Vol(V)`.
pub fn mean<T: Scalar>(g: &Graph<T>, f: &VertexFunction<T>) -> Result<T> {
    Ok(integrate(g, f)? / g.volume())
}

/// Projection onto H: subtracts the μ-mean.
pub fn project_mean_zero<T: Scalar>(g: &Graph<T>, f: &VertexFunction<T>) -> Result<VertexFunction<T>> {
    let m = mean(g, f)?;
    Ok(f.map(|x| x - m))
}

/// `‖u‖²_{λ,α} = ∫(|∇u|² − α u²) dμ` without the square root.
pub fn norm_alpha_squared<T: Scalar>(
    g: &Graph<T>,
    u: &VertexFunction<T>,
    alpha: T,
    lambda: T,
) -> Result<T> {
    if !(alpha < lambda) {
        return Err(KwError::NotANorm { alpha: alpha.as_f64(), lambda: lambda.as_f64() });
    }
    let e = dirichlet_energy(g, u)?;
    Ok(e - alpha * inner_unchecked(g.mu(), u.values(), u.values()))
}

/// `‖u‖_{1,α} = (∫(|∇u|² − α u²) dμ)^{1/2}` on the subspace whose lowest
/// eigenvalue is `lambda` (λ₁ for H, λ_{k+1} for E_k^⊥).
pub fn norm_one_alpha<T: Scalar>(
    g: &Graph<T>,
    u: &VertexFunction<T>,
    alpha: T,
    lambda: T,
) -> Result<T> {
    let r = norm_alpha_squared(g, u, alpha, lambda)?;
    if r < T::zero() {
        return Err(KwError::Domain(format!(
            "negative radicand {r}; u is not in the subspace associated with lambda = {lambda}"
        )));
    }
    Ok(r.sqrt())
}

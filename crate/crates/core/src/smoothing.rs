//! Entropy-smoothed maximum eigenvalue and the box projection.
//!
//! `f_μ(U) = μ log Tr exp((A+U)/μ) − μ log n` is a smooth uniform
//! approximation of `λ^max(A+U)`:
//!
//! ```text
//! f_μ(U) ≤ λ^max(A+U) ≤ f_μ(U) + μ log n
//! ```
//!
//! Its gradient is the maximizer of `⟨Z, X⟩ − μ d₂(X)` over the
//! spectahedron, a matrix softmax of the spectrum of `Z = A + U`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{sym_eig, SymMatrix};

/// Softmax weights below this are dropped when forming `V diag(h) Vᵀ`;
/// their contribution is far beneath `f64` resolution of the kept terms.
const NEGLIGIBLE_WEIGHT: f64 = 1e-20;

/// Result of maximizing `⟨Z, X⟩ − μ d₂(X)` over unit-trace PSD matrices.
#[derive(Clone, Debug)]
pub struct SmoothedMax {
    /// The maximizer `u*(Z)`: symmetric, PSD, unit trace.
    pub x: SymMatrix,
    /// Optimal value `f_μ`.
    pub value: f64,
    /// `λ^max(Z)`, a by-product of the eigendecomposition.
    pub lambda_max: f64,
}

pub fn u_star(z: &SymMatrix, mu: f64) -> Result<SmoothedMax> {
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::param(format!("smoothing parameter must be positive, got {mu}")));
    }
    let eig = sym_eig(z)?;
    let n = z.n();
    let d_max = eig.values[0];

    let mut h: Vec<f64> = eig.values.iter().map(|d| ((d - d_max) / mu).exp()).collect();
    let sum: f64 = h.iter().sum();
    h.iter_mut().for_each(|w| *w /= sum);

    // eigenvalues are sorted descending, so the weights are too
    let kept = h.iter().take_while(|w| **w > NEGLIGIBLE_WEIGHT).count().max(1);
    let b = DMatrix::from_fn(n, kept, |i, j| eig.vectors[(i, j)] * h[j].sqrt());
    let x = SymMatrix::symmetrize(&b * b.transpose());

    let value = d_max + mu * sum.ln() - mu * (n as f64).ln();
    Ok(SmoothedMax {
        x,
        value,
        lambda_max: d_max,
    })
}

/// `f_μ(U)` and `∇f_μ(U) = u*(A+U)`.
pub fn f_mu_and_grad(a: &SymMatrix, u: &SymMatrix, mu: f64) -> Result<SmoothedMax> {
    if a.n() != u.n() {
        return Err(Error::DimensionMismatch {
            expected: a.n(),
            actual: u.n(),
        });
    }
    u_star(&a.add(u), mu)
}

/// Euclidean projection onto `{Y : |Yᵢⱼ| ≤ bound}`, i.e.
/// `Yᵢⱼ = sgn(Vᵢⱼ) min(|Vᵢⱼ|, bound)`.
pub fn project_box(v: &SymMatrix, bound: f64) -> SymMatrix {
    v.map(|x| x.clamp(-bound, bound))
}

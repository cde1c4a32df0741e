//! Exact cardinality-constrained maximum eigenvalue by support enumeration.

use itertools::Itertools;
use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{lambda_min, LoadingVector, SymMatrix};

pub const MAX_ORACLE_DIM: usize = 20;

#[derive(Clone, Debug, Serialize)]
pub struct ExactSparseMax {
    pub value: f64,
    pub support: Vec<usize>,
    pub x: LoadingVector,
}

/// `max { xᵀAx : ‖x‖₂ = 1, Card(x) ≤ k }`.
///
/// For positive semidefinite `A` only supports of size exactly `k` are
/// visited, since `λ^max` of a principal submatrix cannot decrease when the
/// support grows. Otherwise every support of size at most `k` is visited.
pub fn exact_sparse_lambda_max(a: &SymMatrix, k: usize) -> Result<ExactSparseMax> {
    let n = a.n();
    if n > MAX_ORACLE_DIM {
        return Err(Error::TooLarge {
            n,
            max: MAX_ORACLE_DIM,
        });
    }
    if k == 0 || k > n {
        return Err(Error::param(format!("sparsity target k = {k} must lie in [1, {n}]")));
    }
    let psd = lambda_min(a)? >= 0.0;
    let sizes = if psd { k..=k } else { 1..=k };

    let mut best: Option<(f64, Vec<usize>, Vec<f64>)> = None;
    for size in sizes {
        for support in (0..n).combinations(size) {
            let sub = DMatrix::from_fn(size, size, |i, j| a[(support[i], support[j])]);
            let eig = sub.symmetric_eigen();
            let (top, value) = eig
                .eigenvalues
                .iter()
                .copied()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
            if best.as_ref().map_or(true, |b| value > b.0) {
                let v = eig.eigenvectors.column(top).iter().copied().collect();
                best = Some((value, support, v));
            }
        }
    }
    let (value, support, sub_vec) = best.expect("at least one support is enumerated");

    let mut x = vec![0.0; n];
    for (&i, &v) in support.iter().zip(&sub_vec) {
        x[i] = v;
    }
    let lead = crate::linalg::argmax_abs(x.iter().copied());
    if x[lead] < 0.0 {
        x.iter_mut().for_each(|v| *v = -*v);
    }
    Ok(ExactSparseMax {
        value,
        support,
        x: LoadingVector::new(x),
    })
}

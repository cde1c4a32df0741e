//! Dense symmetric matrices, eigendecompositions and loading vectors.
//!
//! Every matrix in the relaxation (the covariance `A`, the primal `X` and the
//! dual perturbation `U`) is symmetric and generically dense, so a single
//! dense type with enforced symmetry backs all of them.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative cutoff, against the largest-magnitude entry, below which a
/// loading is treated as an exact zero.
pub const DEFAULT_ZERO_THRESHOLD: f64 = 1e-4;

/// Dense symmetric `n × n` matrix.
///
/// Constructors mirror or average the two triangles, so `m[(i, j)]` and
/// `m[(j, i)]` are always bit-identical.
#[derive(Clone, PartialEq)]
pub struct SymMatrix {
    inner: DMatrix<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "matrix dimension must be at least 1");
        Self {
            inner: DMatrix::zeros(n, n),
        }
    }

    pub fn identity(n: usize) -> Self {
        assert!(n >= 1, "matrix dimension must be at least 1");
        Self {
            inner: DMatrix::identity(n, n),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        assert!(!diag.is_empty(), "matrix dimension must be at least 1");
        Self {
            inner: DMatrix::from_diagonal(&DVector::from_column_slice(diag)),
        }
    }

    /// Builds the matrix from its lower triangle: `f(i, j)` is called for
    /// `j <= i` only and mirrored.
    pub fn from_lower_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let v = f(i, j);
                m.inner[(i, j)] = v;
                m.inner[(j, i)] = v;
            }
        }
        m
    }

    /// Rows must form a square grid and agree with their transpose to within
    /// `tol` (absolute); the stored matrix is `(M + Mᵀ)/2`.
    pub fn from_rows(rows: &[Vec<f64>], tol: f64) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::param("matrix must have at least one row"));
        }
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: row.len(),
                });
            }
        }
        let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        Self::from_dmatrix(m, tol)
    }

    /// Validates symmetry of a square matrix to within `tol` and symmetrizes.
    pub fn from_dmatrix(m: DMatrix<f64>, tol: f64) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                actual: m.ncols(),
            });
        }
        if m.nrows() == 0 {
            return Err(Error::param("matrix must have at least one row"));
        }
        let n = m.nrows();
        for i in 0..n {
            for j in 0..i {
                let diff = (m[(i, j)] - m[(j, i)]).abs();
                if diff > tol || diff.is_nan() {
                    return Err(Error::Asymmetric {
                        row: i,
                        col: j,
                        diff,
                    });
                }
            }
        }
        Ok(Self::symmetrize(m))
    }

    /// `(M + Mᵀ)/2` with no validation.
    pub fn symmetrize(mut m: DMatrix<f64>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "matrix must be square");
        assert!(m.nrows() >= 1, "matrix dimension must be at least 1");
        let n = m.nrows();
        for i in 0..n {
            for j in 0..i {
                let v = 0.5 * (m[(i, j)] + m[(j, i)]);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Self { inner: m }
    }

    /// `scale · x xᵀ`.
    pub fn rank_one(x: &[f64], scale: f64) -> Self {
        Self::from_lower_fn(x.len(), |i, j| scale * x[i] * x[j])
    }

    pub fn n(&self) -> usize {
        self.inner.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.inner[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.inner
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.inner
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n())
            .map(|i| self.inner.row(i).iter().copied().collect())
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.inner.iter().all(|v| v.is_finite())
    }

    pub fn trace(&self) -> f64 {
        self.inner.trace()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.inner.diagonal().iter().copied().collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.inner.norm()
    }

    /// `max |mᵢⱼ|`.
    pub fn max_abs(&self) -> f64 {
        self.inner.iter().fold(0.0, |acc: f64, v| acc.max(v.abs()))
    }

    /// `𝟏ᵀ|M|𝟏`, the sum of absolute values of all entries.
    pub fn l1_norm_all(&self) -> f64 {
        self.inner.iter().map(|v| v.abs()).sum()
    }

    /// Frobenius inner product `⟨M, B⟩ = Tr(M B)`.
    pub fn dot(&self, other: &SymMatrix) -> f64 {
        self.check_same(other);
        self.inner.dot(&other.inner)
    }

    /// `xᵀ M x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.n(), "vector length must match matrix");
        let n = self.n();
        let mut acc = 0.0;
        for j in 0..n {
            let col = self.inner.column(j);
            let mut s = 0.0;
            for i in 0..n {
                s += col[i] * x[i];
            }
            acc += s * x[j];
        }
        acc
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n(), "vector length must match matrix");
        let v = &self.inner * DVector::from_column_slice(x);
        v.iter().copied().collect()
    }

    pub fn scaled(&self, s: f64) -> SymMatrix {
        Self {
            inner: &self.inner * s,
        }
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        self.check_same(other);
        Self {
            inner: &self.inner + &other.inner,
        }
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        self.check_same(other);
        Self {
            inner: &self.inner - &other.inner,
        }
    }

    /// `self += s · other`.
    pub fn add_scaled_mut(&mut self, s: f64, other: &SymMatrix) {
        self.check_same(other);
        self.inner.zip_apply(&other.inner, |a, b| *a += s * b);
    }

    /// `a · self + b · other`.
    pub fn lin_comb(&self, a: f64, other: &SymMatrix, b: f64) -> SymMatrix {
        self.check_same(other);
        Self {
            inner: self.inner.zip_map(&other.inner, |x, y| a * x + b * y),
        }
    }

    /// Entrywise map; `f` must not depend on position so symmetry is kept.
    pub fn map(&self, f: impl FnMut(f64) -> f64) -> SymMatrix {
        Self {
            inner: self.inner.map(f),
        }
    }

    /// Hadamard product `M ∘ B`.
    pub fn hadamard(&self, other: &SymMatrix) -> SymMatrix {
        self.check_same(other);
        Self {
            inner: self.inner.component_mul(&other.inner),
        }
    }

    /// `M + s·I`.
    pub fn shifted(&self, s: f64) -> SymMatrix {
        let mut out = self.clone();
        for i in 0..out.n() {
            out.inner[(i, i)] += s;
        }
        out
    }

    /// General (non-symmetric) product; used for residual checks.
    pub fn matmul(&self, other: &SymMatrix) -> DMatrix<f64> {
        self.check_same(other);
        &self.inner * &other.inner
    }

    fn check_same(&self, other: &SymMatrix) {
        assert_eq!(
            self.n(),
            other.n(),
            "matrix dimensions must agree ({} vs {})",
            self.n(),
            other.n()
        );
    }
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SymMatrix{}", self.inner)
    }
}

impl std::ops::Index<(usize, usize)> for SymMatrix {
    type Output = f64;

    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.inner[idx]
    }
}

/// Eigendecomposition `Z = V diag(d) Vᵀ` with `d` sorted descending.
///
/// Each eigenvector is signed so that its largest-magnitude entry is
/// positive (lowest index wins ties), which keeps golden values stable.
#[derive(Clone, Debug)]
pub struct EigDecomposition {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl EigDecomposition {
    pub fn lambda_max(&self) -> f64 {
        self.values[0]
    }

    pub fn vector(&self, i: usize) -> Vec<f64> {
        self.vectors.column(i).iter().copied().collect()
    }

    pub fn reconstruct(&self) -> SymMatrix {
        let scaled = DMatrix::from_fn(self.vectors.nrows(), self.vectors.ncols(), |i, j| {
            self.vectors[(i, j)] * self.values[j]
        });
        SymMatrix::symmetrize(scaled * self.vectors.transpose())
    }
}

pub fn sym_eig(z: &SymMatrix) -> Result<EigDecomposition> {
    if !z.is_finite() {
        return Err(Error::NonFinite);
    }
    let eig = z.as_matrix().clone().symmetric_eigen();
    let n = z.n();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(src);
        let sign = if col[argmax_abs(col.iter().copied())] < 0.0 {
            -1.0
        } else {
            1.0
        };
        for i in 0..n {
            vectors[(i, dst)] = sign * col[i];
        }
    }
    Ok(EigDecomposition { values, vectors })
}

pub fn lambda_max(z: &SymMatrix) -> Result<f64> {
    if !z.is_finite() {
        return Err(Error::NonFinite);
    }
    let values = z.as_matrix().clone().symmetric_eigenvalues();
    Ok(values.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

pub fn lambda_min(z: &SymMatrix) -> Result<f64> {
    if !z.is_finite() {
        return Err(Error::NonFinite);
    }
    let values = z.as_matrix().clone().symmetric_eigenvalues();
    Ok(values.iter().copied().fold(f64::INFINITY, f64::min))
}

pub fn l1_norm_all(x: &SymMatrix) -> f64 {
    x.l1_norm_all()
}

/// Index of the largest-magnitude entry; the lowest index wins ties.
pub(crate) fn argmax_abs(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_abs = f64::NEG_INFINITY;
    for (i, v) in values.into_iter().enumerate() {
        if v.abs() > best_abs {
            best = i;
            best_abs = v.abs();
        }
    }
    best
}

/// A unit-norm loading vector with its cardinality.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoadingVector {
    pub values: Vec<f64>,
    pub cardinality: usize,
}

impl LoadingVector {
    /// Wraps `values` as is; cardinality counts exact nonzeros.
    pub fn new(values: Vec<f64>) -> Self {
        let cardinality = values.iter().filter(|v| **v != 0.0).count();
        Self {
            values,
            cardinality,
        }
    }

    /// Scales `values` to unit norm. A zero vector is rejected.
    pub fn normalized(mut values: Vec<f64>) -> Result<Self> {
        let norm = l2_norm(&values);
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::NotUnitNorm { norm });
        }
        values.iter_mut().for_each(|v| *v /= norm);
        Ok(Self::new(values))
    }

    /// Unit vector along coordinate `i`.
    pub fn basis(n: usize, i: usize) -> Self {
        let mut values = vec![0.0; n];
        values[i] = 1.0;
        Self::new(values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.values)
    }

    pub fn support(&self) -> Vec<usize> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, _)| i)
            .collect()
    }

    pub(crate) fn ensure_unit(&self) -> Result<()> {
        let norm = self.norm();
        if (norm - 1.0).abs() > 1e-8 {
            return Err(Error::NotUnitNorm { norm });
        }
        Ok(())
    }
}

pub(crate) fn l2_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Dominant eigenvector of `x`, with entries at most
/// `zero_threshold · ‖v‖_∞` clamped to zero and the result renormalized.
pub fn dominant_eigenvector(x: &SymMatrix, zero_threshold: f64) -> Result<LoadingVector> {
    let eig = sym_eig(x)?;
    let mut v = eig.vector(0);
    let cutoff = zero_threshold * v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    for e in v.iter_mut() {
        if e.abs() <= cutoff {
            *e = 0.0;
        }
    }
    LoadingVector::normalized(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs_dm(m: &DMatrix<f64>) -> f64 {
        m.iter().fold(0.0, |a: f64, v| a.max(v.abs()))
    }

    #[test]
    fn eig_identity_and_diagonal() {
        let eig = sym_eig(&SymMatrix::identity(3)).unwrap();
        assert_eq!(eig.values, vec![1.0, 1.0, 1.0]);
        let ortho = eig.vectors.transpose() * &eig.vectors - DMatrix::identity(3, 3);
        assert!(max_abs_dm(&ortho) <= 1e-10);

        let eig = sym_eig(&SymMatrix::from_diagonal(&[1.0, 3.0])).unwrap();
        assert_eq!(eig.values, vec![3.0, 1.0]);
        assert_eq!(eig.vector(0), vec![0.0, 1.0]);
        assert_eq!(eig.vector(1), vec![1.0, 0.0]);
    }

    #[test]
    fn eig_two_by_two() {
        // characteristic polynomial (2-λ)² - 1 = 0 → λ = 3, 1
        let z = SymMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]], 0.0).unwrap();
        let eig = sym_eig(&z).unwrap();
        assert!((eig.values[0] - 3.0).abs() < 1e-14);
        assert!((eig.values[1] - 1.0).abs() < 1e-14);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v0 = eig.vector(0);
        assert!((v0[0] - s).abs() < 1e-12 && (v0[1] - s).abs() < 1e-12);
        let v1 = eig.vector(1);
        // largest-magnitude entry positive, lowest index on ties
        assert!((v1[0] - s).abs() < 1e-12 && (v1[1] + s).abs() < 1e-12);
        assert!((lambda_max(&z).unwrap() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn lambda_max_examples() {
        assert!((lambda_max(&SymMatrix::identity(5)).unwrap() - 1.0).abs() < 1e-15);
        assert!((lambda_max(&SymMatrix::from_diagonal(&[-1.0, -2.0])).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn non_finite_rejected() {
        let z = SymMatrix::from_diagonal(&[1.0, f64::NAN]);
        assert!(matches!(sym_eig(&z), Err(Error::NonFinite)));
        assert!(matches!(lambda_max(&z), Err(Error::NonFinite)));
    }

    #[test]
    fn l1_examples() {
        assert_eq!(l1_norm_all(&SymMatrix::identity(3)), 3.0);
        assert_eq!(l1_norm_all(&SymMatrix::from_lower_fn(2, |_, _| 1.0)), 4.0);
        let m = SymMatrix::from_rows(&[vec![1.0, -2.0], vec![-2.0, 4.0]], 0.0).unwrap();
        assert_eq!(l1_norm_all(&m), 9.0);
    }

    #[test]
    fn dominant_eigenvector_examples() {
        let x = SymMatrix::rank_one(&[1.0, 0.0, 0.0, 0.0], 1.0);
        let v = dominant_eigenvector(&x, DEFAULT_ZERO_THRESHOLD).unwrap();
        assert_eq!(v.values, vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(v.cardinality, 1);

        let x = SymMatrix::rank_one(&[1.0, 1.0, 0.0, 0.0, 0.0], 0.5);
        let v = dominant_eigenvector(&x, DEFAULT_ZERO_THRESHOLD).unwrap();
        assert_eq!(v.cardinality, 2);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((v.values[0] - s).abs() < 1e-12 && (v.values[1] - s).abs() < 1e-12);
        assert!((v.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dominant_eigenvector_sign_convention() {
        let x = SymMatrix::rank_one(&[0.2, -0.9, 0.1], 1.0);
        let v = dominant_eigenvector(&x, 0.0).unwrap();
        assert!(v.values[1] > 0.0);
        assert!(v.values[0] < 0.0);
    }

    #[test]
    fn from_rows_validates_symmetry() {
        let err = SymMatrix::from_rows(&[vec![1.0, 0.5], vec![0.4, 1.0]], 1e-9).unwrap_err();
        assert!(matches!(err, Error::Asymmetric { row: 1, col: 0, .. }));
        let m = SymMatrix::from_rows(&[vec![1.0, 0.5], vec![0.5 + 1e-12, 1.0]], 1e-9).unwrap();
        assert_eq!(m[(0, 1)], m[(1, 0)]);
        assert!(matches!(
            SymMatrix::from_rows(&[vec![1.0, 0.5]], 1e-9),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn quad_form_matches_product() {
        let m = SymMatrix::from_lower_fn(3, |i, j| (i * 3 + j) as f64 - 2.0);
        let x = [0.3, -1.0, 2.0];
        let mx = m.mul_vec(&x);
        let expected: f64 = mx.iter().zip(&x).map(|(a, b)| a * b).sum();
        assert!((m.quad_form(&x) - expected).abs() < 1e-12);
    }

    #[test]
    fn loading_vector_rejects_zero() {
        assert!(LoadingVector::normalized(vec![0.0, 0.0]).is_err());
        let v = LoadingVector::normalized(vec![3.0, 0.0, 4.0]).unwrap();
        assert_eq!(v.support(), vec![0, 2]);
        assert!((v.values[2] - 0.8).abs() < 1e-15);
    }
}

//! Sparse factor decomposition by repeated solve, truncate and deflate.
//!
//! Each round solves the budget-constrained relaxation on the current
//! residual, keeps the dominant eigenvector of the solution as the sparse
//! component and removes its variance with `A ← A − (xᵀAx) xxᵀ`. The loop
//! stops when every residual entry is below the penalty of the latest solve
//! (the residual cannot be told apart from noise of that size), when the
//! residual vanishes, or after the requested number of components.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{dominant_eigenvector, LoadingVector, SymMatrix, DEFAULT_ZERO_THRESHOLD};
use crate::relaxation::{solve_constrained_with, ConstrainedOptions, SparsityTarget};

const ZERO_RESIDUAL_REL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    NoiseFloor,
    MaxComponents,
    ZeroResidual,
}

#[derive(Clone, Debug, Serialize)]
pub struct SparseComponent {
    pub loading: LoadingVector,
    /// `xᵀAᵢx` on the residual the component was extracted from.
    pub variance: f64,
    pub rho_used: f64,
    pub l1_mass: f64,
    pub k: usize,
}

#[derive(Clone, Debug)]
pub struct SparseDecomposition {
    pub components: Vec<SparseComponent>,
    pub residual: SymMatrix,
    pub stop_reason: StopReason,
}

impl SparseDecomposition {
    pub fn loadings(&self) -> Vec<LoadingVector> {
        self.components.iter().map(|c| c.loading.clone()).collect()
    }

    pub fn cumulative_cardinality(&self) -> Vec<usize> {
        self.components
            .iter()
            .scan(0, |acc, c| {
                *acc += c.loading.cardinality;
                Some(*acc)
            })
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct DecompositionOptions {
    pub solver: ConstrainedOptions,
    pub max_components: usize,
    pub zero_threshold: f64,
    /// Stop once every residual entry is at most the latest penalty.
    pub noise_floor_stop: bool,
}

impl DecompositionOptions {
    pub fn new(epsilon: f64, max_components: usize) -> Self {
        let mut solver = ConstrainedOptions::new(epsilon);
        solver.require_psd = false;
        Self {
            solver,
            max_components,
            zero_threshold: DEFAULT_ZERO_THRESHOLD,
            noise_floor_stop: true,
        }
    }
}

/// `A − (xᵀAx) xxᵀ`.
pub fn deflate(a: &SymMatrix, x: &LoadingVector) -> Result<SymMatrix> {
    if x.len() != a.n() {
        return Err(Error::DimensionMismatch {
            expected: a.n(),
            actual: x.len(),
        });
    }
    x.ensure_unit()?;
    let variance = a.quad_form(&x.values);
    Ok(a.sub(&SymMatrix::rank_one(&x.values, variance)))
}

/// `ks` gives the budget of each component; the last entry is reused when
/// there are more components than entries.
pub fn sparse_decompose(
    a: &SymMatrix,
    ks: &[usize],
    epsilon: f64,
    max_components: usize,
) -> Result<SparseDecomposition> {
    sparse_decompose_with(a, ks, &DecompositionOptions::new(epsilon, max_components))
}

pub fn sparse_decompose_with(
    a: &SymMatrix,
    ks: &[usize],
    opts: &DecompositionOptions,
) -> Result<SparseDecomposition> {
    let n = a.n();
    if ks.is_empty() {
        return Err(Error::param("at least one sparsity target is required"));
    }
    for &k in ks {
        SparsityTarget::new(k, n)?;
    }
    if opts.max_components == 0 {
        return Err(Error::param("max_components must be at least 1"));
    }
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }

    let scale = a.frobenius_norm();
    let mut residual = a.clone();
    let mut components: Vec<SparseComponent> = Vec::new();
    let stop_reason = loop {
        if residual.frobenius_norm() <= ZERO_RESIDUAL_REL * scale {
            break StopReason::ZeroResidual;
        }
        if opts.noise_floor_stop {
            if let Some(last) = components.last() {
                if residual.max_abs() <= last.rho_used {
                    break StopReason::NoiseFloor;
                }
            }
        }
        if components.len() >= opts.max_components {
            break StopReason::MaxComponents;
        }

        let index = components.len();
        let k = ks[index.min(ks.len() - 1)];
        let target = SparsityTarget::new(k, n)?;
        let step = solve_constrained_with(&residual, target, &opts.solver)
            .and_then(|sol| Ok((dominant_eigenvector(&sol.inner.x, opts.zero_threshold)?, sol)));
        let (loading, sol) = match step {
            Ok(v) => v,
            Err(source) => {
                return Err(Error::Decomposition {
                    component: index,
                    partial: Box::new(SparseDecomposition {
                        components,
                        residual,
                        stop_reason: StopReason::MaxComponents,
                    }),
                    source: Box::new(source),
                })
            }
        };
        let variance = residual.quad_form(&loading.values);
        residual = deflate(&residual, &loading)?;
        components.push(SparseComponent {
            loading,
            variance,
            rho_used: sol.rho_used,
            l1_mass: sol.l1_mass,
            k,
        });
    };

    Ok(SparseDecomposition {
        components,
        residual,
        stop_reason,
    })
}

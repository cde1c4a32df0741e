//! Full PCA and simple thresholding of PCA loadings.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{sym_eig, LoadingVector, SymMatrix};

/// Magnitudes are compared on this relative grid, so loadings that are
/// equal in exact arithmetic tie regardless of rounding in the eigensolver.
const TIE_RESOLUTION: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineMethod {
    Pca,
    SimpleThreshold,
}

#[derive(Clone, Debug, Serialize)]
pub struct BaselineResult {
    pub method: BaselineMethod,
    pub loadings: Vec<LoadingVector>,
    /// `xᵀAx` for each loading.
    pub variances: Vec<f64>,
}

pub fn pca(a: &SymMatrix, num_components: usize) -> Result<BaselineResult> {
    check_count(a, num_components)?;
    let eig = sym_eig(a)?;
    let loadings = (0..num_components).map(|i| LoadingVector::new(eig.vector(i))).collect();
    Ok(BaselineResult {
        method: BaselineMethod::Pca,
        loadings,
        variances: eig.values[..num_components].to_vec(),
    })
}

/// Zeroes the smallest PCA loadings of component `i` until `cards[i]`
/// remain, then renormalizes.
///
/// Loadings are zeroed in increasing order of magnitude; among equal
/// magnitudes the lowest index is zeroed first.
pub fn simple_threshold(a: &SymMatrix, num_components: usize, cards: &[usize]) -> Result<BaselineResult> {
    check_count(a, num_components)?;
    let n = a.n();
    if cards.len() < num_components {
        return Err(Error::param(format!(
            "need {num_components} cardinalities, got {}",
            cards.len()
        )));
    }
    if let Some(&bad) = cards.iter().find(|&&c| c == 0 || c > n) {
        return Err(Error::param(format!("cardinality {bad} must lie in [1, {n}]")));
    }
    let full = pca(a, num_components)?;
    let mut loadings = Vec::with_capacity(num_components);
    let mut variances = Vec::with_capacity(num_components);
    for (pc, &card) in full.loadings.iter().zip(cards) {
        let x = LoadingVector::normalized(threshold(&pc.values, card))?;
        variances.push(a.quad_form(&x.values));
        loadings.push(x);
    }
    Ok(BaselineResult {
        method: BaselineMethod::SimpleThreshold,
        loadings,
        variances,
    })
}

fn threshold(values: &[f64], keep: usize) -> Vec<f64> {
    let max = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let key = |i: usize| {
        if max > 0.0 {
            (values[i].abs() / max / TIE_RESOLUTION).round() as u64
        } else {
            0
        }
    };
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| key(a).cmp(&key(b)).then(a.cmp(&b)));
    let mut out = values.to_vec();
    for &i in &order[..values.len() - keep] {
        out[i] = 0.0;
    }
    out
}

fn check_count(a: &SymMatrix, num_components: usize) -> Result<()> {
    if num_components == 0 || num_components > a.n() {
        return Err(Error::param(format!(
            "number of components {num_components} must lie in [1, {}]",
            a.n()
        )));
    }
    Ok(())
}

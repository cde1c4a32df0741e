//! The budget-constrained relaxation
//!
//! ```text
//! maximize  Tr(AX)  subject to  Tr(X) = 1, 𝟏ᵀ|X|𝟏 ≤ k, X ⪰ 0
//! ```
//!
//! solved through the penalized form: the penalty `ρ` is the multiplier of
//! the l1 budget, so a search over `ρ` drives `𝟏ᵀ|X|𝟏` onto `k`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{dominant_eigenvector, lambda_max, lambda_min, LoadingVector, SymMatrix};
use crate::solver::{solve_penalized, RelaxationSolution, SolverParams, DEFAULT_GAP_CHECK_EVERY};

/// Allowed excess of `𝟏ᵀ|X|𝟏` over the budget, absorbing solver inaccuracy.
pub const FEASIBILITY_SLACK: f64 = 1e-3;
pub const MAX_BISECTION_STEPS: usize = 30;
/// Negative eigenvalues down to `−PSD_REPAIR_TOL · λ^max` are shifted away.
pub const PSD_REPAIR_TOL: f64 = 1e-8;

const RHO_LO_FACTOR: f64 = 1e-6;
const MIX_BISECTION_STEPS: usize = 60;

/// Sparsity budget `k` with `1 ≤ k ≤ n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SparsityTarget(usize);

impl SparsityTarget {
    pub fn new(k: usize, n: usize) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::param(format!("sparsity target k = {k} must lie in [1, {n}]")));
        }
        Ok(Self(k))
    }

    pub fn get(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
pub struct ConstrainedOptions {
    /// Absolute accuracy of the returned `Tr(AX)`. Half goes to each
    /// penalized solve, half to how close the l1 mass gets to `k`.
    pub epsilon: f64,
    pub max_iters: Option<usize>,
    pub gap_check_every: usize,
    pub max_bisection_steps: usize,
    /// Validate (and repair) positive semidefiniteness of `A`. Deflated
    /// residuals are generally indefinite and skip this.
    pub require_psd: bool,
}

impl ConstrainedOptions {
    pub fn new(epsilon: f64) -> Self {
        Self {
            epsilon,
            max_iters: None,
            gap_check_every: DEFAULT_GAP_CHECK_EVERY,
            max_bisection_steps: MAX_BISECTION_STEPS,
            require_psd: true,
        }
    }
}

/// One penalized solve of the search.
#[derive(Clone, Debug, Serialize)]
pub struct BisectionStep {
    pub rho: f64,
    pub l1_mass: f64,
    /// `Tr(AX)`
    pub objective: f64,
    pub feasible: bool,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Debug)]
pub struct ConstrainedSolution {
    pub inner: RelaxationSolution,
    pub rho_used: f64,
    /// `𝟏ᵀ|X|𝟏`
    pub l1_mass: f64,
    pub k_target: usize,
    /// `Tr(AX)` for the caller's `A`.
    pub objective: f64,
    /// Diagonal shift applied to repair a slightly indefinite `A`.
    pub psd_shift: f64,
    /// `X` is a blend of the two solves bracketing the budget.
    pub mixed: bool,
    /// `X` had its off-diagonal part scaled down to meet the budget.
    pub shrunk: bool,
    pub steps: Vec<BisectionStep>,
}

impl ConstrainedSolution {
    pub fn loading(&self, zero_threshold: f64) -> Result<LoadingVector> {
        dominant_eigenvector(&self.inner.x, zero_threshold)
    }
}

pub fn solve_constrained(a: &SymMatrix, k: SparsityTarget, epsilon: f64) -> Result<ConstrainedSolution> {
    solve_constrained_with(a, k, &ConstrainedOptions::new(epsilon))
}

/// Geometric bisection on `ρ ∈ [10⁻⁶‖A‖_∞, ‖A‖_∞]`.
///
/// A solve is feasible when `𝟏ᵀ|X|𝟏 ≤ k + FEASIBILITY_SLACK`. The bracket
/// keeps an infeasible solve at the low end and a feasible one at the high
/// end. When the l1 mass jumps across `k` between the two (the solution set
/// is not a singleton at the critical penalty), the two primal points are
/// blended to use the whole budget. The feasible point with the largest
/// `Tr(AX)` is returned.
///
/// An `ε/2`-optimal penalized solution with mass `m ≤ k` is within
/// `ε/2 + ρ(k − m)` of the constrained optimum, so the search continues
/// until `k − m ≤ ε/(2ρ)`.
pub fn solve_constrained_with(
    a: &SymMatrix,
    k: SparsityTarget,
    opts: &ConstrainedOptions,
) -> Result<ConstrainedSolution> {
    let n = a.n();
    let k = SparsityTarget::new(k.get(), n)?.get();
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }
    let psd_shift = if opts.require_psd { psd_repair_shift(a)? } else { 0.0 };
    let shifted = if psd_shift > 0.0 { a.shifted(psd_shift) } else { a.clone() };

    let params = SolverParams::auto(n, opts.epsilon / 2.0)?.with_gap_check_every(opts.gap_check_every);
    let params = match opts.max_iters {
        Some(m) => params.with_max_iters(m),
        None => params,
    };
    let budget = k as f64;
    let mut steps = Vec::new();
    let mut solve = |rho: f64| -> Result<(RelaxationSolution, f64)> {
        let sol = solve_penalized(&shifted, rho, &params)?;
        let mass = sol.x.l1_norm_all();
        steps.push(BisectionStep {
            rho,
            l1_mass: mass,
            objective: a.dot(&sol.x),
            feasible: mass <= budget + FEASIBILITY_SLACK,
            iterations: sol.iterations,
            converged: sol.converged,
        });
        Ok((sol, mass))
    };

    let norm = match a.max_abs() {
        m if m > 0.0 => m,
        _ => 1.0,
    };
    let mut rho_lo = RHO_LO_FACTOR * norm;
    let mut rho_hi = norm;
    let rho_hi_initial = rho_hi;

    let (lo_sol, lo_mass) = solve(rho_lo)?;
    if lo_mass <= budget + FEASIBILITY_SLACK {
        drop(solve);
        return Ok(finish(a, k, psd_shift, lo_sol, lo_mass, steps));
    }
    let (mut hi_sol, mut hi_mass) = solve(rho_hi)?;
    let mut shrunk = false;
    if hi_mass > budget + FEASIBILITY_SLACK {
        // At ρ ≥ max|Aᵢⱼ| every off-diagonal term of the penalized objective
        // is nonpositive, so the exact solution is diagonal with unit mass.
        // Excess mass of a converged solve is solver leakage and is removed;
        // an unconverged one is reported.
        match hi_sol.converged.then(|| shrink_to_budget(&shifted, &hi_sol, budget)).flatten() {
            Some((sol, mass)) => {
                hi_sol = sol;
                hi_mass = mass;
                shrunk = true;
            }
            None => {
                return Err(Error::NoFeasiblePenalty {
                    k,
                    rho_lo,
                    rho_hi,
                    mass_at_rho_hi: hi_mass,
                })
            }
        }
    }

    let mut lo = (lo_sol, lo_mass);
    let mut hi = (hi_sol, hi_mass);
    let mut best = hi.clone();
    let mut best_obj = a.dot(&best.0.x);
    let short_of_budget = |rho: f64, mass: f64| mass < budget - FEASIBILITY_SLACK.min(opts.epsilon / (2.0 * rho));
    for _ in 0..opts.max_bisection_steps {
        if !short_of_budget(rho_hi, hi.1) || rho_hi / rho_lo < 1.0 + 1e-9 {
            break;
        }
        let mid = (rho_lo * rho_hi).sqrt();
        let (sol, mass) = solve(mid)?;
        if mass <= budget + FEASIBILITY_SLACK {
            let obj = a.dot(&sol.x);
            if obj > best_obj {
                best = (sol.clone(), mass);
                best_obj = obj;
            }
            rho_hi = mid;
            hi = (sol, mass);
        } else {
            rho_lo = mid;
            lo = (sol, mass);
        }
    }
    drop(solve);

    if short_of_budget(rho_hi, hi.1) {
        if let Some((mixed, mass)) = blend_to_budget(&shifted, &hi.0, &lo.0, budget) {
            if a.dot(&mixed.x) > best_obj {
                let mut sol = finish(a, k, psd_shift, mixed, mass, steps);
                sol.mixed = true;
                return Ok(sol);
            }
        }
    }
    let best_is_first_hi = best.0.rho == rho_hi_initial;
    let mut sol = finish(a, k, psd_shift, best.0, best.1, steps);
    sol.shrunk = shrunk && best_is_first_hi;
    Ok(sol)
}

fn finish(
    a: &SymMatrix,
    k: usize,
    psd_shift: f64,
    inner: RelaxationSolution,
    l1_mass: f64,
    steps: Vec<BisectionStep>,
) -> ConstrainedSolution {
    ConstrainedSolution {
        rho_used: inner.rho,
        objective: a.dot(&inner.x),
        inner,
        l1_mass,
        k_target: k,
        psd_shift,
        mixed: false,
        shrunk: false,
        steps,
    }
}

/// Largest `t` with `𝟏ᵀ|(1−t)X_hi + tX_lo|𝟏 ≤ budget`. The mass is convex in
/// `t`, so the feasible set is an interval starting at 0.
fn blend_to_budget(
    a: &SymMatrix,
    hi: &RelaxationSolution,
    lo: &RelaxationSolution,
    budget: f64,
) -> Option<(RelaxationSolution, f64)> {
    let mass_at = |t: f64| hi.x.lin_comb(1.0 - t, &lo.x, t).l1_norm_all();
    let (mut t_ok, mut t_bad) = (0.0, 1.0);
    if mass_at(t_bad) <= budget {
        return None;
    }
    for _ in 0..MIX_BISECTION_STEPS {
        let t = 0.5 * (t_ok + t_bad);
        if mass_at(t) <= budget {
            t_ok = t;
        } else {
            t_bad = t;
        }
    }
    if t_ok == 0.0 {
        return None;
    }
    let x = hi.x.lin_comb(1.0 - t_ok, &lo.x, t_ok);
    let mass = x.l1_norm_all();
    // The dual point of the feasible solve still bounds the penalized value
    // at its penalty.
    let primal_obj = a.dot(&x) - hi.rho * mass;
    Some((
        RelaxationSolution {
            primal_obj,
            gap: hi.dual_obj - primal_obj,
            x,
            ..hi.clone()
        },
        mass,
    ))
}

/// `s X + (1−s) Diag(X)` with the largest `s ≤ 1` meeting the budget. The
/// result stays on the spectahedron and its mass is `1 + s · (off-diagonal
/// mass)`.
fn shrink_to_budget(a: &SymMatrix, sol: &RelaxationSolution, budget: f64) -> Option<(RelaxationSolution, f64)> {
    let diag = SymMatrix::from_diagonal(&sol.x.diagonal());
    let diag_mass = diag.l1_norm_all();
    let off_mass = sol.x.l1_norm_all() - diag_mass;
    if diag_mass > budget + FEASIBILITY_SLACK || off_mass <= 0.0 {
        return None;
    }
    let s = ((budget - diag_mass) / off_mass).clamp(0.0, 1.0);
    let x = sol.x.lin_comb(s, &diag, 1.0 - s);
    let mass = x.l1_norm_all();
    let primal_obj = a.dot(&x) - sol.rho * mass;
    Some((
        RelaxationSolution {
            primal_obj,
            gap: sol.dual_obj - primal_obj,
            x,
            ..sol.clone()
        },
        mass,
    ))
}

/// Shift needed to make `A` positive semidefinite, if within the repair
/// tolerance; otherwise an error.
pub fn psd_repair_shift(a: &SymMatrix) -> Result<f64> {
    let min = lambda_min(a)?;
    if min >= 0.0 {
        return Ok(0.0);
    }
    let max = lambda_max(a)?;
    if max > 0.0 && min >= -PSD_REPAIR_TOL * max {
        Ok(-min)
    } else {
        Err(Error::NotPsd {
            min_eig: min,
            max_eig: max,
        })
    }
}

/// Explained variance `xᵀAx`, absolute and as a percentage of `Tr(A)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExplainedVariance {
    pub variance: f64,
    pub percent: f64,
}

pub fn explained_variance(a: &SymMatrix, x: &LoadingVector) -> Result<ExplainedVariance> {
    check_len(a, x)?;
    x.ensure_unit()?;
    let variance = a.quad_form(&x.values);
    Ok(ExplainedVariance {
        variance,
        percent: 100.0 * variance / a.trace(),
    })
}

/// Variance captured by the span of `xs`: `Tr(QᵀAQ)` for an orthonormal
/// basis `Q` built by Gram–Schmidt in the given order. Directions whose
/// residual norm falls below `1e-10` are dropped.
pub fn cumulative_explained_variance(a: &SymMatrix, xs: &[LoadingVector]) -> Result<ExplainedVariance> {
    if xs.is_empty() {
        return Err(Error::param("at least one loading vector is required"));
    }
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for x in xs {
        check_len(a, x)?;
        x.ensure_unit()?;
        let mut r = x.values.clone();
        // two passes of modified Gram–Schmidt
        for _ in 0..2 {
            for q in &basis {
                let proj: f64 = q.iter().zip(&r).map(|(a, b)| a * b).sum();
                r.iter_mut().zip(q).for_each(|(ri, qi)| *ri -= proj * qi);
            }
        }
        let norm = crate::linalg::l2_norm(&r);
        if norm > 1e-10 {
            r.iter_mut().for_each(|v| *v /= norm);
            basis.push(r);
        }
    }
    let variance: f64 = basis.iter().map(|q| a.quad_form(q)).sum();
    Ok(ExplainedVariance {
        variance,
        percent: 100.0 * variance / a.trace(),
    })
}

fn check_len(a: &SymMatrix, x: &LoadingVector) -> Result<()> {
    if x.len() != a.n() {
        return Err(Error::DimensionMismatch {
            expected: a.n(),
            actual: x.len(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn target_bounds() {
        assert!(SparsityTarget::new(0, 5).is_err());
        assert!(SparsityTarget::new(6, 5).is_err());
        assert_eq!(SparsityTarget::new(5, 5).unwrap().get(), 5);
    }

    #[test]
    fn identity_objective_is_one() {
        for k in [1, 2, 3] {
            let a = SymMatrix::identity(3);
            let sol = solve_constrained(&a, SparsityTarget::new(k, 3).unwrap(), 1e-3).unwrap();
            assert!((sol.objective - 1.0).abs() <= 1e-3, "k={k}: {}", sol.objective);
            assert!(sol.l1_mass <= k as f64 + FEASIBILITY_SLACK);
        }
    }

    #[test]
    fn rejects_indefinite() {
        let a = SymMatrix::from_diagonal(&[1.0, -0.5]);
        let err = solve_constrained(&a, SparsityTarget::new(1, 2).unwrap(), 1e-3).unwrap_err();
        assert!(matches!(err, Error::NotPsd { .. }));
    }

    #[test]
    fn repairs_tiny_negative_eigenvalue() {
        let a = SymMatrix::from_diagonal(&[2.0, -1e-10]);
        assert_eq!(psd_repair_shift(&a).unwrap(), 1e-10);
        let sol = solve_constrained(&a, SparsityTarget::new(1, 2).unwrap(), 1e-4).unwrap();
        assert_eq!(sol.psd_shift, 1e-10);
        assert!((sol.objective - 2.0).abs() < 1e-4);
    }

    #[test]
    fn explained_variance_examples() {
        let a = SymMatrix::from_diagonal(&[3.0, 1.0]);
        let ev = explained_variance(&a, &LoadingVector::basis(2, 0)).unwrap();
        assert_eq!(ev.variance, 3.0);
        assert_eq!(ev.percent, 75.0);
        let not_unit = LoadingVector::new(vec![1.0, 1.0]);
        assert!(matches!(explained_variance(&a, &not_unit), Err(Error::NotUnitNorm { .. })));
    }

    #[test]
    fn cumulative_variance_examples() {
        let a = SymMatrix::from_diagonal(&[3.0, 2.0, 1.0]);
        let e0 = LoadingVector::basis(3, 0);
        let e1 = LoadingVector::basis(3, 1);
        let ev = cumulative_explained_variance(&a, &[e0.clone(), e1]).unwrap();
        assert!((ev.percent - 500.0 / 6.0).abs() < 1e-12);
        let single = cumulative_explained_variance(&a, &[e0.clone()]).unwrap();
        let dup = cumulative_explained_variance(&a, &[e0.clone(), e0]).unwrap();
        assert_eq!(single, dup);
    }

    #[test]
    fn trace_identity_for_full_basis() {
        let a = SymMatrix::from_lower_fn(4, |i, j| if i == j { 3.0 + i as f64 } else { 0.4 });
        let eig = crate::linalg::sym_eig(&a).unwrap();
        let total: f64 = (0..4)
            .map(|i| explained_variance(&a, &LoadingVector::new(eig.vector(i))).unwrap().variance)
            .sum();
        assert!((total - a.trace()).abs() < 1e-10);
    }
}

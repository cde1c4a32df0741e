//! Smoothed first-order solver for the penalized relaxation
//!
//! ```text
//! maximize  Tr(AX) − ρ 𝟏ᵀ|X|𝟏   subject to  Tr(X) = 1, X ⪰ 0
//! ```
//!
//! through its dual `minimize λ^max(A+U) subject to |Uᵢⱼ| ≤ ρ`. The
//! non-smooth `λ^max` is replaced by its entropy smoothing `f_μ` and
//! minimized over the box with an optimal gradient scheme: a projected
//! gradient step, a projected step on the weighted gradient history, and a
//! convex combination of the two. The duality gap between the current dual
//! point and the best primal point certifies the result.
//!
//! The loop always runs on the unit-penalty problem `A/ρ`; results are
//! mapped back to the original scale on return.

use std::io::Write;
use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{lambda_min, SymMatrix};
use crate::smoothing::{f_mu_and_grad, project_box};

pub const DEFAULT_GAP_CHECK_EVERY: usize = 100;
pub const MAX_ITERS_CAP: usize = 100_000;

/// Constants of the smoothing scheme for a problem of size `n` at absolute
/// accuracy `epsilon` with unit penalty.
///
/// `d1 = n²/2`, `d2 = log n`, `σ₁ = σ₂ = ‖T‖ = 1`, `μ = ε/(2 d2)` and
/// `L = 2 d2/ε`. The scaling to other penalties is handled by
/// [`solve_penalized`].
#[derive(Clone, Debug, Serialize)]
pub struct SolverParams {
    pub epsilon: f64,
    pub mu: f64,
    pub lipschitz: f64,
    pub d1: f64,
    pub d2: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub t_norm: f64,
    /// Iteration cap; `None` uses `min(2 N, 100000)` where `N` is
    /// [`iteration_bound`](Self::iteration_bound) of the problem actually run.
    pub max_iters: Option<usize>,
    pub gap_check_every: usize,
}

impl SolverParams {
    pub fn auto(n: usize, epsilon: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("problem dimension must be at least 1"));
        }
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::param(format!("epsilon must be positive, got {epsilon}")));
        }
        let nf = n as f64;
        // log 1 = 0 would make μ infinite; n = 1 is solved in closed form
        // anyway, so only keep the constants finite.
        let d2 = nf.max(2.0).ln();
        let sigma2 = 1.0;
        let t_norm = 1.0;
        Ok(Self {
            epsilon,
            mu: epsilon / (2.0 * d2),
            lipschitz: d2 * t_norm * t_norm / (epsilon * sigma2 / 2.0),
            d1: nf * nf / 2.0,
            d2,
            sigma1: 1.0,
            sigma2,
            t_norm,
            max_iters: None,
            gap_check_every: DEFAULT_GAP_CHECK_EVERY,
        })
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = Some(max_iters);
        self
    }

    pub fn with_gap_check_every(mut self, every: usize) -> Self {
        self.gap_check_every = every.max(1);
        self
    }

    /// Worst-case iteration count `⌈(4‖T‖/ε) √(D₁D₂/(σ₁σ₂))⌉`.
    pub fn iteration_bound(&self) -> usize {
        let n = (4.0 * self.t_norm / self.epsilon)
            * (self.d1 * self.d2 / (self.sigma1 * self.sigma2)).sqrt();
        n.ceil().min(usize::MAX as f64) as usize
    }

    pub fn effective_max_iters(&self) -> usize {
        self.max_iters
            .unwrap_or_else(|| self.iteration_bound().saturating_mul(2).min(MAX_ITERS_CAP))
    }

    /// Constants for `A/ρ` with unit penalty at accuracy `ε/ρ`.
    fn for_unit_penalty(&self, rho: f64) -> Self {
        Self {
            epsilon: self.epsilon / rho,
            mu: self.mu / rho,
            lipschitz: self.lipschitz * rho,
            ..self.clone()
        }
    }
}

/// Iterates of the scheme, all in the unit box `|·ᵢⱼ| ≤ 1`.
#[derive(Clone, Debug)]
pub struct SolverState {
    pub k: usize,
    pub u: SymMatrix,
    pub y: SymMatrix,
    pub w: SymMatrix,
    /// `Σᵢ (i+1)/2 ∇f_μ(Uᵢ)` over completed iterations.
    pub grad_accum: SymMatrix,
    /// Gap at the latest check, in the unit-penalty scale.
    pub gap: f64,
    pub f_mu: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub f_mu: f64,
    pub gap: f64,
    pub wall_time_ms: f64,
}

/// Primal/dual pair for the penalized relaxation, in the caller's scale.
#[derive(Clone, Debug)]
pub struct RelaxationSolution {
    /// Primal point on the spectahedron.
    pub x: SymMatrix,
    /// Dual point, `|Uᵢⱼ| ≤ ρ`.
    pub u: SymMatrix,
    pub rho: f64,
    pub epsilon: f64,
    /// `Tr(AX) − ρ 𝟏ᵀ|X|𝟏`.
    pub primal_obj: f64,
    /// `λ^max(A+U)`.
    pub dual_obj: f64,
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl RelaxationSolution {
    pub fn n(&self) -> usize {
        self.x.n()
    }
}

#[derive(Clone, Debug)]
struct Candidate {
    value: f64,
    matrix: SymMatrix,
}

/// Stepwise driver for the smoothing scheme.
///
/// ```
/// use dspca::{SmoothSolver, SolverParams, SymMatrix};
///
/// let a = SymMatrix::from_diagonal(&[5.0, 1.0, 1.0]);
/// let params = SolverParams::auto(3, 1e-3).unwrap();
/// let mut solver = SmoothSolver::new(&a, 0.5, &params).unwrap();
/// while !solver.step().unwrap() {
///     assert!(solver.state().u.max_abs() <= 1.0);
/// }
/// let (sol, _trace) = solver.finish();
/// assert!(sol.converged);
/// assert!((sol.primal_obj - 4.5).abs() < 1e-3);
/// ```
pub struct SmoothSolver {
    a: SymMatrix,
    rho: f64,
    params: SolverParams,
    max_iters: usize,
    state: SolverState,
    best_dual: Option<Candidate>,
    best_primal: Option<Candidate>,
    finished: bool,
    converged: bool,
    trace: Vec<TraceRow>,
    started: Instant,
}

impl SmoothSolver {
    pub fn new(a: &SymMatrix, rho: f64, params: &SolverParams) -> Result<Self> {
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::param(format!("rho must be positive, got {rho}")));
        }
        if !a.is_finite() {
            return Err(Error::NonFinite);
        }
        let n = a.n();
        let params = params.for_unit_penalty(rho);
        let max_iters = params.effective_max_iters();
        let zero = SymMatrix::zeros(n);
        Ok(Self {
            a: a.scaled(1.0 / rho),
            rho,
            params,
            max_iters,
            state: SolverState {
                k: 0,
                u: zero.clone(),
                y: zero.clone(),
                w: zero.clone(),
                grad_accum: zero,
                gap: f64::INFINITY,
                f_mu: f64::NAN,
            },
            best_dual: None,
            best_primal: None,
            finished: false,
            converged: false,
            trace: Vec::new(),
            started: Instant::now(),
        })
    }

    pub fn state(&self) -> &SolverState {
        &self.state
    }

    /// Constants of the unit-penalty problem being iterated.
    pub fn params(&self) -> &SolverParams {
        &self.params
    }

    pub fn max_iters(&self) -> usize {
        self.max_iters
    }

    pub fn trace(&self) -> &[TraceRow] {
        &self.trace
    }

    /// Runs one iteration. Returns `true` once the gap target is met or the
    /// iteration cap is reached; further calls are no-ops.
    pub fn step(&mut self) -> Result<bool> {
        if self.finished {
            return Ok(true);
        }
        let n = self.a.n();
        if n == 1 {
            self.solve_scalar();
            return Ok(true);
        }

        let k = self.state.k;
        let smooth = f_mu_and_grad(&self.a, &self.state.u, self.params.mu)?;
        self.state.f_mu = smooth.value;
        let grad = smooth.x;

        let at_cap = k >= self.max_iters;
        if k % self.params.gap_check_every == 0 || at_cap {
            self.check_gap(smooth.lambda_max, &grad);
            if self.state.gap <= self.params.epsilon {
                self.converged = true;
                self.finished = true;
                return Ok(true);
            }
        }
        if at_cap {
            self.finished = true;
            return Ok(true);
        }

        let lipschitz = self.params.lipschitz;
        let state = &mut self.state;
        state.y = project_box(&state.u.lin_comb(1.0, &grad, -1.0 / lipschitz), 1.0);
        state.grad_accum.add_scaled_mut((k as f64 + 1.0) / 2.0, &grad);
        state.w = project_box(&state.grad_accum.scaled(-self.params.sigma1 / lipschitz), 1.0);
        let kf = k as f64;
        state.u = state
            .w
            .lin_comb(2.0 / (kf + 3.0), &state.y, (kf + 1.0) / (kf + 3.0));
        state.k += 1;
        debug_assert!(state.u.max_abs() <= 1.0);
        Ok(false)
    }

    /// Runs to completion.
    pub fn run(mut self) -> Result<RelaxationSolution> {
        while !self.step()? {}
        Ok(self.finish().0)
    }

    /// Solution assembled from the best points seen so far, plus the trace.
    pub fn finish(self) -> (RelaxationSolution, Vec<TraceRow>) {
        let rho = self.rho;
        let n = self.a.n();
        let (dual_obj, u) = match self.best_dual {
            Some(c) => (c.value, c.matrix),
            None => (f64::INFINITY, self.state.u.clone()),
        };
        let (primal_obj, x) = match self.best_primal {
            Some(c) => (c.value, c.matrix),
            None => (f64::NEG_INFINITY, SymMatrix::identity(n).scaled(1.0 / n as f64)),
        };
        let solution = RelaxationSolution {
            x,
            u: u.scaled(rho),
            rho,
            epsilon: self.params.epsilon * rho,
            primal_obj: primal_obj * rho,
            dual_obj: dual_obj * rho,
            gap: (dual_obj - primal_obj) * rho,
            iterations: self.state.k,
            converged: self.converged,
        };
        let trace = self
            .trace
            .into_iter()
            .map(|row| TraceRow {
                f_mu: row.f_mu * rho,
                gap: row.gap * rho,
                ..row
            })
            .collect();
        (solution, trace)
    }

    /// Updates the best dual bound with `λ^max(A+U_k)` and the best primal
    /// value with both the current gradient `X_k = u*(A+U_k)` and the
    /// weighted average of past gradients; every candidate is feasible, so
    /// the difference of the two bounds is a valid gap.
    fn check_gap(&mut self, lambda_max: f64, grad: &SymMatrix) {
        let k = self.state.k;
        if self.best_dual.as_ref().map_or(true, |c| lambda_max < c.value) {
            self.best_dual = Some(Candidate {
                value: lambda_max,
                matrix: self.state.u.clone(),
            });
        }
        self.offer_primal(grad);
        if k > 0 {
            let weight = 4.0 / ((k as f64) * (k as f64 + 1.0));
            let averaged = self.state.grad_accum.scaled(weight);
            self.offer_primal(&averaged);
        }
        let gap = self.best_dual.as_ref().unwrap().value - self.best_primal.as_ref().unwrap().value;
        self.state.gap = gap;
        self.trace.push(TraceRow {
            iteration: k,
            f_mu: self.state.f_mu,
            gap,
            wall_time_ms: self.started.elapsed().as_secs_f64() * 1e3,
        });
    }

    fn offer_primal(&mut self, x: &SymMatrix) {
        let value = self.a.dot(x) - x.l1_norm_all();
        if self.best_primal.as_ref().map_or(true, |c| value > c.value) {
            self.best_primal = Some(Candidate {
                value,
                matrix: x.clone(),
            });
        }
    }

    fn solve_scalar(&mut self) {
        // X = [1] is the only feasible point and U = -1 attains the dual.
        let a = self.a.get(0, 0);
        let x = SymMatrix::identity(1);
        let u = SymMatrix::from_diagonal(&[-1.0]);
        self.best_primal = Some(Candidate {
            value: a - 1.0,
            matrix: x,
        });
        self.best_dual = Some(Candidate {
            value: a - 1.0,
            matrix: u.clone(),
        });
        self.state.u = u;
        self.state.gap = 0.0;
        self.converged = true;
        self.finished = true;
    }
}

/// Solves the penalized relaxation with penalty `rho` to absolute accuracy
/// `params.epsilon`.
pub fn solve_penalized(a: &SymMatrix, rho: f64, params: &SolverParams) -> Result<RelaxationSolution> {
    SmoothSolver::new(a, rho, params)?.run()
}

pub fn write_trace_csv<W: Write>(trace: &[TraceRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in trace {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Residuals of the optimality conditions linking the penalized relaxation
/// and its dual.
#[derive(Clone, Debug, Serialize)]
pub struct KktReport {
    /// `‖(A+U)X − λ^max(A+U) X‖_F`
    pub eigen_residual: f64,
    /// `‖U∘X + ρ|X|‖_F`
    pub complementarity_residual: f64,
    /// `|Tr(X) − 1|`
    pub trace_residual: f64,
    /// `max(0, max|Uᵢⱼ| − ρ)`
    pub box_violation: f64,
    pub min_eigenvalue_x: f64,
}

impl KktReport {
    pub fn max_residual(&self) -> f64 {
        self.eigen_residual
            .max(self.complementarity_residual)
            .max(self.trace_residual)
            .max(self.box_violation)
    }
}

pub fn check_kkt(a: &SymMatrix, sol: &RelaxationSolution, rho: f64) -> Result<KktReport> {
    kkt_residuals(a, &sol.x, &sol.u, rho)
}

/// KKT residuals for an arbitrary pair `(X, U)`.
///
/// Complementarity is `U∘X = −ρ|X|`: the inner minimization
/// `min_{|U|≤ρ} Tr(X(A+U))` sets `Uᵢⱼ = −ρ sgn(Xᵢⱼ)` wherever `Xᵢⱼ ≠ 0`.
pub fn kkt_residuals(a: &SymMatrix, x: &SymMatrix, u: &SymMatrix, rho: f64) -> Result<KktReport> {
    for m in [x, u] {
        if m.n() != a.n() {
            return Err(Error::DimensionMismatch {
                expected: a.n(),
                actual: m.n(),
            });
        }
    }
    let z = a.add(u);
    let lmax = crate::linalg::lambda_max(&z)?;
    let zx = z.matmul(x);
    let eigen_residual = (zx - x.as_matrix() * lmax).norm();
    let complementarity_residual = u
        .hadamard(x)
        .add(&x.map(f64::abs).scaled(rho))
        .frobenius_norm();
    Ok(KktReport {
        eigen_residual,
        complementarity_residual,
        trace_residual: (x.trace() - 1.0).abs(),
        box_violation: (u.max_abs() - rho).max(0.0),
        min_eigenvalue_x: lambda_min(x)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dominant_eigenvector, DEFAULT_ZERO_THRESHOLD};

    #[test]
    fn auto_constants() {
        let p = SolverParams::auto(10, 1e-3).unwrap();
        let d2 = 10f64.ln();
        assert_eq!(p.d1, 50.0);
        assert!((p.d2 - d2).abs() < 1e-15);
        assert!((p.mu - 1e-3 / (2.0 * d2)).abs() < 1e-18);
        assert!((p.lipschitz - 2.0 * d2 / 1e-3).abs() < 1e-9);
        assert!((p.lipschitz - 1.0 / (p.mu * p.sigma2)).abs() < 1e-9);
        let n_bound = ((4.0 / 1e-3) * (50.0 * d2).sqrt()).ceil() as usize;
        assert_eq!(p.iteration_bound(), n_bound);
        assert_eq!(p.effective_max_iters(), (2 * n_bound).min(MAX_ITERS_CAP));
        assert_eq!(p.gap_check_every, 100);
    }

    #[test]
    fn auto_rejects_bad_epsilon() {
        assert!(SolverParams::auto(4, 0.0).is_err());
        assert!(SolverParams::auto(4, -1.0).is_err());
        assert!(SolverParams::auto(0, 1e-3).is_err());
    }

    #[test]
    fn rejects_non_positive_rho() {
        let a = SymMatrix::identity(3);
        let p = SolverParams::auto(3, 1e-3).unwrap();
        assert!(matches!(solve_penalized(&a, 0.0, &p), Err(Error::InvalidParameter(_))));
        assert!(matches!(solve_penalized(&a, -2.0, &p), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn diagonal_problem() {
        // For diagonal A the penalized optimum is max_i(A_ii − ρ) at e_i e_iᵀ.
        let a = SymMatrix::from_diagonal(&[5.0, 1.0, 1.0]);
        let p = SolverParams::auto(3, 1e-3).unwrap();
        let sol = solve_penalized(&a, 0.5, &p).unwrap();
        assert!(sol.converged);
        assert!(sol.gap >= -1e-8 && sol.gap <= 1e-3);
        assert!((sol.primal_obj - 4.5).abs() <= 1e-3);
        assert!(sol.u.max_abs() <= 0.5 + 1e-12);
        assert!((sol.x.trace() - 1.0).abs() < 1e-8);
        let x = dominant_eigenvector(&sol.x, DEFAULT_ZERO_THRESHOLD).unwrap();
        assert_eq!(x.values, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn scalar_problem() {
        let a = SymMatrix::from_diagonal(&[3.0]);
        let p = SolverParams::auto(1, 1e-3).unwrap();
        let sol = solve_penalized(&a, 2.0, &p).unwrap();
        assert!(sol.converged);
        assert_eq!(sol.primal_obj, 1.0);
        assert_eq!(sol.dual_obj, 1.0);
        assert_eq!(sol.u.get(0, 0), -2.0);
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let a = SymMatrix::from_lower_fn(6, |i, j| if i == j { 2.0 + i as f64 } else { 0.7 });
        let p = SolverParams::auto(6, 1e-9).unwrap().with_max_iters(5);
        let sol = solve_penalized(&a, 0.3, &p).unwrap();
        assert!(!sol.converged);
        assert_eq!(sol.iterations, 5);
        assert!(sol.gap > 0.0 && sol.gap.is_finite());
    }

    #[test]
    fn trace_rows_follow_cadence() {
        let a = SymMatrix::from_lower_fn(4, |i, j| if i == j { 4.0 - i as f64 } else { 0.5 });
        let p = SolverParams::auto(4, 1e-6)
            .unwrap()
            .with_gap_check_every(10)
            .with_max_iters(45);
        let mut solver = SmoothSolver::new(&a, 0.2, &p).unwrap();
        while !solver.step().unwrap() {}
        let (_, trace) = solver.finish();
        let iters: Vec<usize> = trace.iter().map(|r| r.iteration).collect();
        assert_eq!(&iters[..2], &[0, 10]);
        assert!(iters.windows(2).all(|w| w[0] < w[1]));
        let mut buf = Vec::new();
        write_trace_csv(&trace, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("iteration,f_mu,gap,wall_time_ms\n"));
    }

    #[test]
    fn kkt_of_analytic_solution() {
        // A = diag(5,1), ρ small: X = e₁e₁ᵀ, U = −ρ on the support of X.
        let rho = 0.1;
        let a = SymMatrix::from_diagonal(&[5.0, 1.0]);
        let x = SymMatrix::from_diagonal(&[1.0, 0.0]);
        let u = SymMatrix::from_diagonal(&[-rho, 0.0]);
        let r = kkt_residuals(&a, &x, &u, rho).unwrap();
        assert!(r.max_residual() <= 1e-10, "{r:?}");
        assert!(r.min_eigenvalue_x >= 0.0);

        let bad = kkt_residuals(&a, &x.scaled(2.0), &u, rho).unwrap();
        assert!((bad.trace_residual - 1.0).abs() < 1e-15);
    }
}

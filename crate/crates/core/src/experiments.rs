//! Experiment drivers with JSON-serializable reports.
//!
//! Every report carries an `experiment` id, its full configuration and
//! wall-clock timings, so a saved report is enough to rerun it. Sweeps are
//! deterministic per seed regardless of how many workers run them; the
//! worker count comes from the `DSPCA_WORKERS` environment variable.

use std::io::Write;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use crate::baselines::{pca, simple_threshold, BaselineMethod};
use crate::data::{planted_instance, random_covariance, PLANTED_DIM};
use crate::decomposition::{sparse_decompose_with, DecompositionOptions, StopReason};
use crate::error::{Error, Result};
use crate::linalg::{dominant_eigenvector, LoadingVector, SymMatrix, DEFAULT_ZERO_THRESHOLD};
use crate::relaxation::{
    cumulative_explained_variance, explained_variance, solve_constrained_with, BisectionStep,
    ConstrainedOptions, SparsityTarget,
};
use crate::solver::{SmoothSolver, SolverParams};

pub const WORKERS_ENV: &str = "DSPCA_WORKERS";

/// Accuracy used by the planted-cardinality sweep. Coarser runs leave
/// residual mass of order `1e-4` on the noise variables, right at the
/// truncation threshold.
pub const PLANTED_EPSILON: f64 = 6e-3;

/// Default accuracy for a matrix: `1e-3` relative to its largest entry.
pub fn default_epsilon(a: &SymMatrix) -> f64 {
    let scale = a.max_abs();
    if scale > 0.0 {
        1e-3 * scale
    } else {
        1e-3
    }
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

pub fn write_json<T: Serialize, W: Write>(report: &T, mut writer: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut writer, report)?;
    writeln!(writer)?;
    Ok(())
}

/// Thread pool sized by `DSPCA_WORKERS`, or rayon's default when unset.
pub fn worker_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(raw) = std::env::var(WORKERS_ENV) {
        let workers: usize = raw
            .trim()
            .parse()
            .ok()
            .filter(|w| *w >= 1)
            .ok_or_else(|| Error::param(format!("{WORKERS_ENV} must be a positive integer, got {raw:?}")))?;
        builder = builder.num_threads(workers);
    }
    builder
        .build()
        .map_err(|e| Error::param(format!("cannot start worker pool: {e}")))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveTarget {
    /// l1 budget `k` of the constrained relaxation.
    Budget(usize),
    /// Fixed penalty `ρ` of the penalized relaxation.
    Penalty(f64),
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    pub experiment: &'static str,
    pub target: SolveTarget,
    pub epsilon: f64,
    pub zero_threshold: f64,
    pub n: usize,
    pub k: Option<usize>,
    /// Penalty of the returned solution; equal to `rho_used`.
    pub rho: f64,
    pub rho_used: f64,
    pub l1_mass: f64,
    /// `Tr(AX)`
    pub objective: f64,
    pub primal_obj: f64,
    pub dual_obj: f64,
    pub gap: f64,
    pub loading: LoadingVector,
    pub cardinality: usize,
    pub explained_variance_pct: f64,
    /// Total over all penalized solves.
    pub iterations: usize,
    pub converged: bool,
    pub mixed: bool,
    pub shrunk: bool,
    pub bisection: Vec<BisectionStep>,
    pub x: Vec<Vec<f64>>,
    pub wall_time_ms: f64,
}

/// `max_iters` overrides the per-solve iteration cap.
pub fn run_solve(
    a: &SymMatrix,
    target: SolveTarget,
    epsilon: f64,
    zero_threshold: f64,
    max_iters: Option<usize>,
) -> Result<SolveReport> {
    let start = Instant::now();
    let n = a.n();
    let (inner, k, l1_mass, iterations, (mixed, shrunk), bisection) = match target {
        SolveTarget::Budget(k) => {
            let mut opts = ConstrainedOptions::new(epsilon);
            opts.max_iters = max_iters;
            let sol = solve_constrained_with(a, SparsityTarget::new(k, n)?, &opts)?;
            let iterations = sol.steps.iter().map(|s| s.iterations).sum();
            (sol.inner, Some(k), sol.l1_mass, iterations, (sol.mixed, sol.shrunk), sol.steps)
        }
        SolveTarget::Penalty(rho) => {
            let mut params = SolverParams::auto(n, epsilon)?;
            params.max_iters = max_iters;
            let sol = crate::solver::solve_penalized(a, rho, &params)?;
            let mass = sol.x.l1_norm_all();
            let iterations = sol.iterations;
            (sol, None, mass, iterations, (false, false), Vec::new())
        }
    };
    let loading = dominant_eigenvector(&inner.x, zero_threshold)?;
    let explained = explained_variance(a, &loading)?;
    Ok(SolveReport {
        experiment: "solve",
        target,
        epsilon,
        zero_threshold,
        n,
        k,
        rho: inner.rho,
        rho_used: inner.rho,
        l1_mass,
        objective: a.dot(&inner.x),
        primal_obj: inner.primal_obj,
        dual_obj: inner.dual_obj,
        gap: inner.gap,
        cardinality: loading.cardinality,
        loading,
        explained_variance_pct: explained.percent,
        iterations,
        converged: inner.converged,
        mixed,
        shrunk,
        bisection,
        x: inner.x.to_rows(),
        wall_time_ms: elapsed_ms(start),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ComponentRecord {
    pub index: usize,
    pub k: usize,
    pub loading: LoadingVector,
    pub cardinality: usize,
    /// `xᵀAᵢx` on the residual the component came from.
    pub deflated_variance: f64,
    /// `xᵀAx / Tr(A)` on the input matrix.
    pub explained_variance_pct: f64,
    pub rho_used: f64,
    pub l1_mass: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecomposeReport {
    pub experiment: &'static str,
    pub ks: Vec<usize>,
    pub epsilon: f64,
    pub max_components: usize,
    pub noise_floor_stop: bool,
    pub components: Vec<ComponentRecord>,
    pub cumulative_cardinality: Vec<usize>,
    /// Variance of the span of the first `i` loadings, in percent.
    pub cumulative_variance_pct: Vec<f64>,
    pub stop_reason: StopReason,
    pub wall_time_ms: f64,
}

pub fn run_decompose(a: &SymMatrix, ks: &[usize], opts: &DecompositionOptions) -> Result<DecomposeReport> {
    let start = Instant::now();
    let dec = sparse_decompose_with(a, ks, opts)?;
    let loadings = dec.loadings();
    let components = dec
        .components
        .iter()
        .enumerate()
        .map(|(index, c)| {
            Ok(ComponentRecord {
                index,
                k: c.k,
                cardinality: c.loading.cardinality,
                deflated_variance: c.variance,
                explained_variance_pct: explained_variance(a, &c.loading)?.percent,
                rho_used: c.rho_used,
                l1_mass: c.l1_mass,
                loading: c.loading.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let cumulative_variance_pct = (1..=loadings.len())
        .map(|i| Ok(cumulative_explained_variance(a, &loadings[..i])?.percent))
        .collect::<Result<Vec<_>>>()?;
    Ok(DecomposeReport {
        experiment: "decompose",
        ks: ks.to_vec(),
        epsilon: opts.solver.epsilon,
        max_components: opts.max_components,
        noise_floor_stop: opts.noise_floor_stop,
        components,
        cumulative_cardinality: dec.cumulative_cardinality(),
        cumulative_variance_pct,
        stop_reason: dec.stop_reason,
        wall_time_ms: elapsed_ms(start),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CompareMethod {
    Pca,
    SimpleThreshold,
    Dspca,
}

impl CompareMethod {
    fn label(self) -> &'static str {
        match self {
            CompareMethod::Pca => "PCA",
            CompareMethod::SimpleThreshold => "ST",
            CompareMethod::Dspca => "DSPCA",
        }
    }
}

impl From<BaselineMethod> for CompareMethod {
    fn from(m: BaselineMethod) -> Self {
        match m {
            BaselineMethod::Pca => CompareMethod::Pca,
            BaselineMethod::SimpleThreshold => CompareMethod::SimpleThreshold,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MethodRecord {
    pub method: CompareMethod,
    pub loadings: Vec<LoadingVector>,
    pub explained_variance_pct: Vec<f64>,
    pub cumulative_variance_pct: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CompareReport {
    pub experiment: &'static str,
    pub k: usize,
    pub num_components: usize,
    pub epsilon: f64,
    pub methods: Vec<MethodRecord>,
    pub wall_time_ms: f64,
}

impl CompareReport {
    /// Aligned text table: one row per (method, component), one column per
    /// variable, explained variance last.
    pub fn render_table(&self) -> String {
        let n = self.methods.first().and_then(|m| m.loadings.first()).map_or(0, |x| x.len());
        let mut out = format!("{:<10}", "");
        for j in 0..n {
            out.push_str(&format!("{:>8}", format!("X{}", j + 1)));
        }
        out.push_str(&format!("{:>11}\n", "var (%)"));
        for m in &self.methods {
            for (i, (x, pct)) in m.loadings.iter().zip(&m.explained_variance_pct).enumerate() {
                out.push_str(&format!("{:<10}", format!("{}, PC{}", m.method.label(), i + 1)));
                for v in &x.values {
                    if *v == 0.0 {
                        out.push_str(&format!("{:>8}", "0"));
                    } else {
                        out.push_str(&format!("{v:>8.3}"));
                    }
                }
                out.push_str(&format!("{pct:>11.2}\n"));
            }
        }
        out
    }
}

/// PCA, simple thresholding to `k` loadings per component, and the sparse
/// decomposition with budget `k`, each with `num_components` components.
pub fn run_compare(a: &SymMatrix, k: usize, num_components: usize, epsilon: f64) -> Result<CompareReport> {
    let start = Instant::now();
    SparsityTarget::new(k, a.n())?;
    let mut methods = Vec::new();
    for base in [pca(a, num_components)?, simple_threshold(a, num_components, &vec![k; num_components])?] {
        methods.push(method_record(a, base.method.into(), base.loadings)?);
    }
    let mut opts = DecompositionOptions::new(epsilon, num_components);
    opts.noise_floor_stop = false;
    let dec = sparse_decompose_with(a, &[k], &opts)?;
    methods.push(method_record(a, CompareMethod::Dspca, dec.loadings())?);
    Ok(CompareReport {
        experiment: "compare",
        k,
        num_components,
        epsilon,
        methods,
        wall_time_ms: elapsed_ms(start),
    })
}

fn method_record(a: &SymMatrix, method: CompareMethod, loadings: Vec<LoadingVector>) -> Result<MethodRecord> {
    let explained_variance_pct = loadings
        .iter()
        .map(|x| Ok(explained_variance(a, x)?.percent))
        .collect::<Result<Vec<_>>>()?;
    let cumulative_variance_pct = cumulative_explained_variance(a, &loadings)?.percent;
    Ok(MethodRecord {
        method,
        loadings,
        explained_variance_pct,
        cumulative_variance_pct,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CardinalitySweepConfig {
    pub num_instances: usize,
    pub first_seed: u64,
    pub k_values: Vec<usize>,
    pub epsilon: f64,
    pub zero_threshold: f64,
}

impl Default for CardinalitySweepConfig {
    fn default() -> Self {
        Self {
            num_instances: 50,
            first_seed: 0,
            k_values: (1..=PLANTED_DIM).collect(),
            epsilon: PLANTED_EPSILON,
            zero_threshold: DEFAULT_ZERO_THRESHOLD,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CardinalityRecord {
    pub seed: u64,
    pub k: usize,
    pub cardinality: Option<usize>,
    pub rho_used: Option<f64>,
    pub l1_mass: Option<f64>,
    pub iterations: usize,
    pub wall_time_ms: f64,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CardinalitySummary {
    pub k: usize,
    pub runs: usize,
    pub failures: usize,
    pub mean: f64,
    /// Population standard deviation over successful runs.
    pub std: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CardinalitySweepReport {
    pub experiment: &'static str,
    pub config: CardinalitySweepConfig,
    pub workers: usize,
    pub records: Vec<CardinalityRecord>,
    pub summary: Vec<CardinalitySummary>,
    /// Rank correlation between `k` and mean cardinality.
    pub spearman: Option<f64>,
    pub wall_time_ms: f64,
}

/// Planted-support instances (`A = UᵀU + 15 vvᵀ`, `Card(v) = 5`) solved for
/// every `(seed, k)`. Failed solves are recorded and the sweep continues.
pub fn run_cardinality_sweep(cfg: &CardinalitySweepConfig) -> Result<CardinalitySweepReport> {
    if cfg.num_instances == 0 || cfg.k_values.is_empty() {
        return Err(Error::param("the sweep needs at least one instance and one k"));
    }
    for &k in &cfg.k_values {
        SparsityTarget::new(k, PLANTED_DIM)?;
    }
    let start = Instant::now();
    let jobs: Vec<(u64, usize)> = (0..cfg.num_instances as u64)
        .flat_map(|i| cfg.k_values.iter().map(move |&k| (cfg.first_seed + i, k)))
        .collect();
    let pool = worker_pool()?;
    let records: Vec<CardinalityRecord> =
        pool.install(|| jobs.par_iter().map(|&(seed, k)| planted_run(seed, k, cfg)).collect());

    let summary: Vec<CardinalitySummary> = cfg
        .k_values
        .iter()
        .map(|&k| {
            let rows: Vec<&CardinalityRecord> = records.iter().filter(|r| r.k == k).collect();
            let cards: Vec<f64> = rows.iter().filter_map(|r| r.cardinality).map(|c| c as f64).collect();
            let (mean, std) = mean_std(&cards);
            CardinalitySummary {
                k,
                runs: rows.len(),
                failures: rows.len() - cards.len(),
                mean,
                std,
            }
        })
        .collect();
    let ks: Vec<f64> = summary.iter().filter(|s| s.mean.is_finite()).map(|s| s.k as f64).collect();
    let means: Vec<f64> = summary.iter().filter(|s| s.mean.is_finite()).map(|s| s.mean).collect();
    Ok(CardinalitySweepReport {
        experiment: "cardinality_sweep",
        config: cfg.clone(),
        workers: pool.current_num_threads(),
        records,
        spearman: spearman(&ks, &means),
        summary,
        wall_time_ms: elapsed_ms(start),
    })
}

fn planted_run(seed: u64, k: usize, cfg: &CardinalitySweepConfig) -> CardinalityRecord {
    let start = Instant::now();
    let inst = planted_instance(seed);
    let result = SparsityTarget::new(k, PLANTED_DIM)
        .and_then(|target| solve_constrained_with(&inst.a, target, &ConstrainedOptions::new(cfg.epsilon)))
        .and_then(|sol| Ok((sol.loading(cfg.zero_threshold)?, sol)));
    match result {
        Ok((x, sol)) => CardinalityRecord {
            seed,
            k,
            cardinality: Some(x.cardinality),
            rho_used: Some(sol.rho_used),
            l1_mass: Some(sol.l1_mass),
            iterations: sol.steps.iter().map(|s| s.iterations).sum(),
            wall_time_ms: elapsed_ms(start),
            error: None,
        },
        Err(e) => CardinalityRecord {
            seed,
            k,
            cardinality: None,
            rho_used: None,
            l1_mass: None,
            iterations: 0,
            wall_time_ms: elapsed_ms(start),
            error: Some(e.to_string()),
        },
    }
}

/// One row per `(seed, k)`.
pub fn write_cardinality_csv<W: Write>(report: &CardinalitySweepReport, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in &report.records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct TimingSweepConfig {
    pub sizes: Vec<usize>,
    pub epsilon: f64,
    pub rho: f64,
    pub seed: u64,
    /// Runs exceeding this are stopped and reported as censored.
    pub timeout: Option<Duration>,
}

impl Default for TimingSweepConfig {
    fn default() -> Self {
        Self {
            sizes: vec![50, 100, 200],
            epsilon: 1e-3,
            rho: 0.1,
            seed: 0,
            timeout: None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TimingRecord {
    pub n: usize,
    pub seed: u64,
    pub wall_time_ms: f64,
    pub iterations: usize,
    pub iteration_cap: usize,
    pub converged: bool,
    pub censored: bool,
    pub gap: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TimingSweepReport {
    pub experiment: &'static str,
    pub config: TimingSweepConfig,
    pub records: Vec<TimingRecord>,
    /// Least-squares slope of `log time` against `log n` over uncensored runs.
    pub slope: Option<f64>,
    pub note: Option<String>,
    pub wall_time_ms: f64,
}

/// Penalized solves on `random_covariance(n, seed)` for each size, run one
/// after another so the timings do not compete for cores.
pub fn run_timing_sweep(cfg: &TimingSweepConfig) -> Result<TimingSweepReport> {
    if cfg.sizes.is_empty() || cfg.sizes.contains(&0) {
        return Err(Error::param("sizes must be a nonempty list of positive integers"));
    }
    let start = Instant::now();
    let mut records = Vec::with_capacity(cfg.sizes.len());
    for &n in &cfg.sizes {
        let a = random_covariance(n, cfg.seed);
        let params = SolverParams::auto(n, cfg.epsilon)?;
        let run_start = Instant::now();
        let mut solver = SmoothSolver::new(&a, cfg.rho, &params)?;
        let mut censored = false;
        while !solver.step()? {
            if cfg.timeout.is_some_and(|t| run_start.elapsed() > t) {
                censored = true;
                break;
            }
        }
        let iteration_cap = solver.max_iters();
        let (sol, _) = solver.finish();
        records.push(TimingRecord {
            n,
            seed: cfg.seed,
            wall_time_ms: elapsed_ms(run_start),
            iterations: sol.iterations,
            iteration_cap,
            converged: sol.converged,
            censored,
            gap: sol.gap,
        });
    }
    let points: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| !r.censored && r.wall_time_ms > 0.0)
        .map(|r| ((r.n as f64).ln(), r.wall_time_ms.ln()))
        .collect();
    let slope = log_log_slope(&points);
    let note = slope
        .is_none()
        .then(|| "insufficient points: the slope needs at least two distinct uncensored sizes".to_string());
    Ok(TimingSweepReport {
        experiment: "timing_sweep",
        config: cfg.clone(),
        records,
        slope,
        note,
        wall_time_ms: elapsed_ms(start),
    })
}

pub fn write_timing_csv<W: Write>(report: &TimingSweepReport, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in &report.records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    let m = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (points.len() >= 2 && sxx > 1e-12).then(|| sxy / sxx)
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / m;
    (mean, var.sqrt())
}

/// Average ranks, ties sharing the mean of their positions.
fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            out[idx] = rank;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation; `None` when either side is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let m = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / m, ry.iter().sum::<f64>() / m);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    (vx > 0.0 && vy > 0.0).then(|| cov / (vx * vy).sqrt())
}

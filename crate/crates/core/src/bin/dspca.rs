use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use dspca::data::{
    artificial_covariance, load_covariance_csv, planted_instance, random_covariance, write_covariance_csv,
    ArtificialModel,
};
use dspca::decomposition::DecompositionOptions;
use dspca::experiments::{self, CardinalitySweepConfig, SolveTarget, TimingSweepConfig};
use dspca::{Error, SymMatrix, DEFAULT_ZERO_THRESHOLD};

const EXIT_USAGE: u8 = 1;
const EXIT_NOT_CONVERGED: u8 = 2;
const EXIT_DATA: u8 = 3;

/// Sparse PCA by semidefinite relaxation.
///
/// Reports are written as JSON to --out, or to stdout when it is omitted.
/// Exit codes: 0 success, 1 usage or input error, 2 non-convergence,
/// 3 invalid matrix data.
#[derive(Parser)]
#[command(name = "dspca", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the relaxation for an l1 budget k or a fixed penalty rho.
    Solve(SolveArgs),
    /// Extract sparse components by repeated solve and deflation.
    Decompose(DecomposeArgs),
    /// PCA, simple thresholding and DSPCA side by side.
    Compare(CompareArgs),
    /// Recovered cardinality versus k on planted-support instances.
    CardinalitySweep(CardinalitySweepArgs),
    /// Solve time versus problem size on random covariance matrices.
    TimingSweep(TimingSweepArgs),
    /// Write a built-in test matrix as covariance CSV.
    Dataset(DatasetArgs),
}

#[derive(Args)]
struct MatrixArgs {
    /// Covariance CSV: n lines of n comma-separated numbers.
    #[arg(long)]
    matrix: PathBuf,
    /// Absolute accuracy; defaults to 1e-3 times the largest |Aᵢⱼ|.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Target {
    /// l1 budget of the constrained relaxation.
    #[arg(long)]
    k: Option<usize>,
    /// Penalty of the penalized relaxation.
    #[arg(long)]
    rho: Option<f64>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    matrix: MatrixArgs,
    #[command(flatten)]
    target: Target,
    /// Loadings at most this fraction of the largest are set to zero.
    #[arg(long, default_value_t = DEFAULT_ZERO_THRESHOLD)]
    zero_threshold: f64,
    /// Iteration cap per penalized solve.
    #[arg(long)]
    max_iters: Option<usize>,
}

#[derive(Args)]
struct DecomposeArgs {
    #[command(flatten)]
    matrix: MatrixArgs,
    /// Budget per component; the last one is reused.
    #[arg(long, value_delimiter = ',', required = true)]
    ks: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    max_components: usize,
    /// Keep going past the noise-floor stopping rule.
    #[arg(long)]
    no_noise_floor: bool,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    matrix: MatrixArgs,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 2)]
    components: usize,
}

#[derive(Args)]
struct CardinalitySweepArgs {
    #[arg(long, default_value_t = 50)]
    instances: usize,
    #[arg(long, default_value_t = 0)]
    first_seed: u64,
    #[arg(long, default_value_t = 1)]
    k_min: usize,
    #[arg(long, default_value_t = 10)]
    k_max: usize,
    #[arg(long, default_value_t = experiments::PLANTED_EPSILON)]
    epsilon: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write one CSV row per (seed, k).
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct TimingSweepArgs {
    #[arg(long, value_delimiter = ',', default_value = "50,100,200")]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 1e-3)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.1)]
    rho: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Per-size time limit; slower runs are reported as censored.
    #[arg(long)]
    timeout_secs: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Dataset {
    /// Three-factor model with the stated noise variances.
    Artificial,
    /// Three-factor model with unit noise on the third factor.
    ArtificialBenchmark,
    /// Planted-support instance A = UᵀU + 15 vvᵀ.
    Planted,
    /// GᵀG/n with G uniform on [-1, 1).
    Random,
}

#[derive(Args)]
struct DatasetArgs {
    #[arg(value_enum)]
    kind: Dataset,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Dimension of the random matrix.
    #[arg(long, default_value_t = 50)]
    n: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Decomposition { source, .. } => exit_code(source),
        Error::NoFeasiblePenalty { .. } => EXIT_NOT_CONVERGED,
        Error::NonFinite | Error::NotPsd { .. } | Error::Asymmetric { .. } | Error::Parse { .. } | Error::Csv(_) => {
            EXIT_DATA
        }
        _ => EXIT_USAGE,
    }
}

fn converged_code(ok: bool) -> u8 {
    if ok {
        0
    } else {
        EXIT_NOT_CONVERGED
    }
}

fn run(command: Command) -> dspca::Result<u8> {
    match command {
        Command::Solve(args) => {
            let (a, epsilon) = load(&args.matrix)?;
            let target = match (args.target.k, args.target.rho) {
                (Some(k), _) => SolveTarget::Budget(k),
                (_, Some(rho)) => SolveTarget::Penalty(rho),
                _ => unreachable!("clap requires one of --k and --rho"),
            };
            let report = experiments::run_solve(&a, target, epsilon, args.zero_threshold, args.max_iters)?;
            emit(&report, args.matrix.out.as_deref())?;
            Ok(converged_code(report.converged))
        }
        Command::Decompose(args) => {
            let (a, epsilon) = load(&args.matrix)?;
            let mut opts = DecompositionOptions::new(epsilon, args.max_components);
            opts.noise_floor_stop = !args.no_noise_floor;
            let report = experiments::run_decompose(&a, &args.ks, &opts)?;
            emit(&report, args.matrix.out.as_deref())?;
            Ok(0)
        }
        Command::Compare(args) => {
            let (a, epsilon) = load(&args.matrix)?;
            let report = experiments::run_compare(&a, args.k, args.components, epsilon)?;
            emit(&report, args.matrix.out.as_deref())?;
            if args.matrix.out.is_some() {
                print!("{}", report.render_table());
            }
            Ok(0)
        }
        Command::CardinalitySweep(args) => {
            if args.k_min > args.k_max {
                return Err(Error::InvalidParameter(format!(
                    "k range {}..={} is empty",
                    args.k_min, args.k_max
                )));
            }
            let cfg = CardinalitySweepConfig {
                num_instances: args.instances,
                first_seed: args.first_seed,
                k_values: (args.k_min..=args.k_max).collect(),
                epsilon: args.epsilon,
                ..Default::default()
            };
            let report = experiments::run_cardinality_sweep(&cfg)?;
            if let Some(path) = &args.csv {
                experiments::write_cardinality_csv(&report, File::create(path)?)?;
            }
            emit(&report, args.out.as_deref())?;
            Ok(0)
        }
        Command::TimingSweep(args) => {
            let cfg = TimingSweepConfig {
                sizes: args.sizes,
                epsilon: args.epsilon,
                rho: args.rho,
                seed: args.seed,
                timeout: args.timeout_secs.map(Duration::from_secs_f64),
            };
            let report = experiments::run_timing_sweep(&cfg)?;
            if let Some(path) = &args.csv {
                experiments::write_timing_csv(&report, File::create(path)?)?;
            }
            emit(&report, args.out.as_deref())?;
            let all_done = report.records.iter().all(|r| r.converged || r.censored);
            Ok(converged_code(all_done))
        }
        Command::Dataset(args) => {
            let a = match args.kind {
                Dataset::Artificial => artificial_covariance(),
                Dataset::ArtificialBenchmark => ArtificialModel::benchmark_table().covariance(),
                Dataset::Planted => planted_instance(args.seed).a,
                Dataset::Random => {
                    if args.n == 0 {
                        return Err(Error::InvalidParameter("--n must be at least 1".into()));
                    }
                    random_covariance(args.n, args.seed)
                }
            };
            match &args.out {
                Some(path) => write_covariance_csv(&a, File::create(path)?)?,
                None => write_covariance_csv(&a, io::stdout().lock())?,
            }
            Ok(0)
        }
    }
}

fn load(args: &MatrixArgs) -> dspca::Result<(SymMatrix, f64)> {
    let a = load_covariance_csv(&args.matrix)?;
    let epsilon = args.epsilon.unwrap_or_else(|| experiments::default_epsilon(&a));
    Ok((a, epsilon))
}

fn emit<T: Serialize>(report: &T, out: Option<&Path>) -> dspca::Result<()> {
    match out {
        Some(path) => experiments::write_json(report, BufWriter::new(File::create(path)?)),
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            experiments::write_json(report, &mut lock)?;
            lock.flush()?;
            Ok(())
        }
    }
}

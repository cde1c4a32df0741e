//! Steps the smoothing solver by hand on a random covariance matrix,
//! printing the duality gap as it closes and the optimality residuals of
//! the final pair.
//!
//! ```text
//! cargo run --release --example penalized_trace -- [n] [rho] [epsilon]
//! ```

use dspca::data::random_covariance;
use dspca::solver::{check_kkt, write_trace_csv};
use dspca::{dominant_eigenvector, SmoothSolver, SolverParams, DEFAULT_ZERO_THRESHOLD};

fn main() -> dspca::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(20, |s| s.parse().expect("n"));
    let rho: f64 = args.next().map_or(0.1, |s| s.parse().expect("rho"));
    let epsilon: f64 = args.next().map_or(1e-3, |s| s.parse().expect("epsilon"));

    let a = random_covariance(n, 7);
    let params = SolverParams::auto(n, epsilon)?;
    let mut solver = SmoothSolver::new(&a, rho, &params)?;
    println!(
        "n = {n}, rho = {rho}, epsilon = {epsilon}: iteration bound {}, cap {}",
        params.iteration_bound(),
        solver.max_iters()
    );
    while !solver.step()? {}
    let (sol, trace) = solver.finish();

    for row in trace.iter().step_by((trace.len() / 10).max(1)) {
        println!("  k = {:>6}  gap = {:.3e}", row.iteration, row.gap);
    }
    println!(
        "converged {} after {} iterations: primal {:.6}, dual {:.6}, gap {:.2e}",
        sol.converged, sol.iterations, sol.primal_obj, sol.dual_obj, sol.gap
    );

    let kkt = check_kkt(&a, &sol, rho)?;
    println!("{kkt:#?}");
    let x = dominant_eigenvector(&sol.x, DEFAULT_ZERO_THRESHOLD)?;
    println!("dominant loading has cardinality {} of {n}", x.cardinality);

    let path = std::env::temp_dir().join("dspca_trace.csv");
    write_trace_csv(&trace, std::fs::File::create(&path)?)?;
    println!("trace written to {}", path.display());
    Ok(())
}

//! Exhaustive search against the relaxation on a small random covariance:
//! for every budget k the relaxation value lies between the exact sparse
//! maximum and the unconstrained maximum eigenvalue.
//!
//! ```text
//! cargo run --release --example oracle_sandwich -- [n] [seed]
//! ```

use dspca::data::random_covariance;
use dspca::oracle::exact_sparse_lambda_max;
use dspca::{lambda_max, solve_constrained, SparsityTarget, DEFAULT_ZERO_THRESHOLD};

fn main() -> dspca::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(8, |s| s.parse().expect("n"));
    let seed: u64 = args.next().map_or(1, |s| s.parse().expect("seed"));
    let a = random_covariance(n, seed);
    let top = lambda_max(&a)?;
    let epsilon = 1e-3 * a.max_abs();

    println!("{:>2} {:>10} {:>10} {:>10} {:>5}", "k", "exact", "relaxed", "lambda_max", "card");
    for k in 1..=n {
        let exact = exact_sparse_lambda_max(&a, k)?;
        let sol = solve_constrained(&a, SparsityTarget::new(k, n)?, epsilon)?;
        let card = sol.loading(DEFAULT_ZERO_THRESHOLD)?.cardinality;
        println!(
            "{k:>2} {:>10.5} {:>10.5} {top:>10.5} {card:>5}",
            exact.value, sol.objective
        );
    }
    Ok(())
}

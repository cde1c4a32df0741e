//! Six sparse factors of the pit props correlation matrix with budgets
//! 6, 2, 2, 1, 1, 1, tracking cumulative cardinality and variance.
//!
//! ```text
//! cargo run --release --example pitprops -- [epsilon]
//! ```

use dspca::data::load_covariance_csv;
use dspca::decomposition::DecompositionOptions;
use dspca::experiments::run_decompose;

fn main() -> dspca::Result<()> {
    let epsilon: f64 = std::env::args().nth(1).map_or(1e-4, |s| s.parse().expect("epsilon"));
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/pitprops.csv");
    let a = load_covariance_csv(path)?;

    let mut opts = DecompositionOptions::new(epsilon, 6);
    // the unit diagonal of a correlation matrix sits exactly on the noise
    // floor once the budget-one components start
    opts.noise_floor_stop = false;
    let report = run_decompose(&a, &[6, 2, 2, 1, 1, 1], &opts)?;

    for (c, (card, pct)) in report
        .components
        .iter()
        .zip(report.cumulative_cardinality.iter().zip(&report.cumulative_variance_pct))
    {
        let support: Vec<usize> = c.loading.support().iter().map(|i| i + 1).collect();
        println!(
            "PC{} k={} support {:?}: cumulative cardinality {card}, variance {pct:.1}%",
            c.index + 1,
            c.k,
            support
        );
    }
    println!("stop: {:?}, {:.1} s", report.stop_reason, report.wall_time_ms / 1e3);
    Ok(())
}

//! Recovered cardinality against the budget k on planted-support
//! instances `A = UᵀU + 15 vvᵀ` with `Card(v) = 5`.
//!
//! ```text
//! cargo run --release --example planted_cardinality -- [instances]
//! ```
//!
//! The full experiment (50 instances) is `dspca cardinality-sweep`.

use dspca::experiments::{run_cardinality_sweep, CardinalitySweepConfig};

fn main() -> dspca::Result<()> {
    let instances = std::env::args().nth(1).map_or(3, |s| s.parse().expect("instances"));
    let report = run_cardinality_sweep(&CardinalitySweepConfig {
        num_instances: instances,
        ..Default::default()
    })?;
    println!("{:>3} {:>8} {:>8}", "k", "mean", "std");
    for row in &report.summary {
        println!("{:>3} {:>8.2} {:>8.2}", row.k, row.mean, row.std);
    }
    if let Some(r) = report.spearman {
        println!("rank correlation of k and mean cardinality: {r:.3}");
    }
    println!("{:.1} s on {} worker(s)", report.wall_time_ms / 1e3, report.workers);
    Ok(())
}

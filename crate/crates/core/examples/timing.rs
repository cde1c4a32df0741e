//! Solve time against dimension, with the fitted log-log slope.
//!
//! ```text
//! cargo run --release --example timing -- [sizes...]
//! ```

use dspca::experiments::{run_timing_sweep, TimingSweepConfig};

fn main() -> dspca::Result<()> {
    let sizes: Vec<usize> = std::env::args().skip(1).map(|s| s.parse().expect("size")).collect();
    let cfg = TimingSweepConfig {
        sizes: if sizes.is_empty() { vec![20, 40, 80] } else { sizes },
        ..Default::default()
    };
    let report = run_timing_sweep(&cfg)?;
    for r in &report.records {
        println!(
            "n = {:>4}: {:>9.1} ms, {:>6} iterations, converged {}",
            r.n, r.wall_time_ms, r.iterations, r.converged
        );
    }
    match report.slope {
        Some(s) => println!("log-log slope {s:.2}"),
        None => println!("{}", report.note.unwrap_or_default()),
    }
    Ok(())
}

//! Random-harmonics benchmark at full scale: 1000 functions on 1000 grid
//! points, sensors restricted to [0.1π, 1.9π], r = 5..35.
//!
//!     cargo run --release --example harmonics_benchmark [seed]

use cdeim::harmonics::{run_harmonics_experiment, HarmonicsConfig};
use cdeim::solver::PenaltyParams;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(42);
    let config = HarmonicsConfig {
        seed,
        ..HarmonicsConfig::default()
    };
    let counts = [5, 10, 15, 20, 25, 30, 35];
    let start = std::time::Instant::now();
    let report = run_harmonics_experiment(&config, &counts, &PenaltyParams::default())?;
    println!(" r  method  mean rel. error  mean rel. residual  failed  max violation");
    for row in &report.rows {
        println!(
            "{:>2}  {:<6}  {:>15.4}  {:>18.4}  {:>6}  {:>13.3e}",
            row.r, row.method, row.mean_error, row.mean_residual, row.n_failed, row.max_violation
        );
    }
    println!("elapsed {:.1?}", start.elapsed());
    Ok(())
}

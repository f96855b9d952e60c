//! Wildfire reconstruction and two-hour forecasts for both sensor scenarios.
//!
//!     cargo run --release --example wildfire_reconstruction [n_train] [n_test] [r,r,...]
//!
//! Defaults to a reduced ensemble of 200 training and 50 test runs.

use cdeim::wildfire::{
    fire_penalty_params, generate_fire_ensemble, run_fire_on, FireConfig, FireRunOptions, SensorScenario,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let n_train = args.next().map(|s| s.parse()).transpose()?.unwrap_or(200);
    let n_test = args.next().map(|s| s.parse()).transpose()?.unwrap_or(50);
    let counts: Vec<usize> = match args.next() {
        Some(list) => list.split(',').map(str::parse).collect::<Result<_, _>>()?,
        None => vec![30, 50, 70],
    };
    let config = FireConfig { n_train, n_test, ..FireConfig::default() };

    let start = std::time::Instant::now();
    let ensemble = generate_fire_ensemble(&config)?;
    println!("ensemble of {} runs in {:.1?}", n_train + n_test, start.elapsed());

    for scenario in [SensorScenario::RestrictedCpqrLines, SensorScenario::RandomBurning] {
        let options = FireRunOptions { forecast: true, keep_states: false };
        let report = run_fire_on(&config, &ensemble, scenario, &counts, &fire_penalty_params(), options)?.report;
        println!("\n{scenario}");
        println!(" r  method  rel. error  rel. residual  forecast error  failed  max violation");
        for row in &report.rows {
            println!(
                "{:>2}  {:<6}  {:>10.4}  {:>13.4}  {:>14.4}  {:>6}  {:>13.3e}",
                row.r,
                row.method,
                row.mean_error,
                row.mean_residual,
                row.mean_forecast_error.unwrap_or(f64::NAN),
                row.n_failed,
                row.max_violation
            );
        }
    }
    println!("\nelapsed {:.1?}", start.elapsed());
    Ok(())
}

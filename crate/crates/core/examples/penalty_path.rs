//! Trace of the penalty parameter search for one harmonics test function:
//! the geometric ladder in λ followed by bisection on the feasibility threshold.
//!
//!     cargo run --release --example penalty_path [r] [case]
//!
//! Without a case, the first test function whose DEIM reconstruction leaves
//! the bounds is used.

use cdeim::basis::{assemble_bundle, compute_pod_basis, restricted_cpqr_select};
use cdeim::harmonics::{generate_harmonics, HarmonicsConfig};
use cdeim::penalty::BoundsSpec;
use cdeim::solver::{cdeim_solve, deim_solve, PenaltyParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let r: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(15);
    let case: Option<usize> = args.next().map(|s| s.parse()).transpose()?;

    let config = HarmonicsConfig::default();
    let data = generate_harmonics(&config)?;
    let pod = compute_pod_basis(&data.train, r)?;
    let sel = restricted_cpqr_select(&pod.modes, &config.access_mask(), r)?;
    let bundle = assemble_bundle(pod.modes, sel.indices)?;
    let bounds = BoundsSpec::new(-1.0, 1.0)?;
    let params = PenaltyParams::default();
    let violation = |j: usize| -> Result<f64, cdeim::error::Error> {
        let y = bundle.sample(&data.test.data().column(j).clone_owned())?;
        Ok(bounds.max_violation(&(bundle.phi() * deim_solve(&bundle, &y)?)))
    };
    let case = match case {
        Some(c) => c,
        None => (0..data.test.n_snapshots())
            .find(|&j| violation(j).is_ok_and(|v| v > 0.0))
            .unwrap_or(0),
    };
    let truth = data.test.data().column(case).clone_owned();
    let y = bundle.sample(&truth)?;
    println!("test case {case}, r = {r}");
    println!("DEIM: max bound violation {:.4e}", violation(case)?);

    let out = cdeim_solve(&bundle, &y, bounds, &params)?;
    println!("\nladder (δ = {:e})", params.delta);
    println!("{:>12}  {:>12}  {:>6}", "lambda", "penalty", "newton");
    for step in &out.trace.ladder {
        println!("{:>12.3e}  {:>12.4e}  {:>6}", step.lambda, step.penalty, step.newton_iterations);
    }
    if !out.trace.bisection.is_empty() {
        println!("\nbisection");
        println!("{:>12}  {:>12}  {:>12}  {:>12}", "lower", "upper", "mid", "P(mid)");
        for b in &out.trace.bisection {
            println!("{:>12.4e}  {:>12.4e}  {:>12.4e}  {:>12.4e}", b.lower, b.upper, b.mid, b.penalty_mid);
        }
    }
    println!(
        "\nλ_opt = {:.4e}, penalty {:.3e}, max violation {:.4e}",
        out.lambda_opt, out.penalty_value, out.bound_violation_max
    );
    println!(
        "residual |Θα − y| = {:.4e} <= bound {:.4e}",
        out.obs_residual, out.residual_bound
    );
    Ok(())
}

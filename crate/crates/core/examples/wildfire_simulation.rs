//! One wildfire realization: wind draw, time step, burned area over time, and
//! an ASCII picture of the final state (`#` burning, `.` burned out).
//!
//!     cargo run --release --example wildfire_simulation [member]

use cdeim::wildfire::{CellStatus, FireConfig, FireSimulation};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let member: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(0);
    let config = FireConfig::default();
    let mut sim = FireSimulation::new(&config, member)?;
    let d = sim.draws;
    println!("wind draw: A = {:.3}, B = {:.3}, φ1 = {:.3}, φ2 = {:.3}", d.a, d.b, d.phi1, d.phi2);
    let ts = sim.time_step;
    println!("Δt = {:.3} s (Δt_max {:.3} s), {} steps to t = {} s", ts.dt, ts.dt_max, ts.steps, config.sim_time);

    let chunk = (ts.steps / 6).max(1);
    let mut done = 0;
    while done < ts.steps {
        let n = chunk.min(ts.steps - done);
        sim.advance(n);
        done += n;
        println!(
            "t = {:>7.1} s  ignited {:>6}  burning {:>5}",
            sim.state.time(),
            sim.state.ignited_count(),
            sim.state.burning_cells().len()
        );
    }

    let (nx, ny) = (config.nx(), config.ny());
    let lit: Vec<(usize, usize)> = (0..ny)
        .flat_map(|j| (0..nx).map(move |i| (i, j)))
        .filter(|&(i, j)| sim.state.status(config.cell_index(i, j)) != CellStatus::Unburned)
        .collect();
    let (i0, i1) = (lit.iter().map(|c| c.0).min().unwrap(), lit.iter().map(|c| c.0).max().unwrap());
    let (j0, j1) = (lit.iter().map(|c| c.1).min().unwrap(), lit.iter().map(|c| c.1).max().unwrap());
    println!("\ncells {i0}..={i1} x {j0}..={j1}, north up");
    for j in (j0..=j1).rev().step_by(2) {
        let line: String = (i0..=i1)
            .map(|i| match sim.state.status(config.cell_index(i, j)) {
                CellStatus::Burning => '#',
                CellStatus::BurnedDown => '.',
                CellStatus::Unburned => ' ',
            })
            .collect();
        println!("{line}");
    }
    Ok(())
}

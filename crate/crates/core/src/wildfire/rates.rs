use std::f64::consts::FRAC_PI_4;

use super::wind::WindField;
use crate::error::{Error, Result};

/// Neighbor offsets `(di, dj)` for the directions `θ_k = kπ/4`, counter-clockwise from `+x`.
pub const DIRECTIONS: [(i64, i64); 8] = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)];

pub fn direction_angle(k: usize) -> f64 {
    k as f64 * FRAC_PI_4
}

/// Center-to-center distance to the neighbor in direction `k`.
pub fn neighbor_distance(k: usize, cell_length: f64) -> f64 {
    if k % 2 == 0 {
        cell_length
    } else {
        cell_length * std::f64::consts::SQRT_2
    }
}

/// Per-cell spread parameters for a single cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellRates {
    pub r_max: f64,
    pub rho: f64,
    pub ecc: f64,
    pub rate: [f64; 8],
}

impl CellRates {
    /// Rates for wind speed `speed` blowing toward `angle`.
    pub fn new(speed: f64, angle: f64) -> Self {
        let r_max = 0.1 * speed + 5e-3;
        let rho = 1.0 + 0.5592 * speed;
        let ecc = (1.0 - 1.0 / (rho * rho)).sqrt();
        let mut rate = [0.0; 8];
        for (k, r) in rate.iter_mut().enumerate() {
            *r = elliptical_rate(r_max, ecc, direction_angle(k) - angle);
        }
        Self { r_max, rho, ecc, rate }
    }
}

/// `R_max (1 − E) / (1 − E cos Δθ)`.
pub fn elliptical_rate(r_max: f64, ecc: f64, dtheta: f64) -> f64 {
    r_max * (1.0 - ecc) / (1.0 - ecc * dtheta.cos())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpreadRates {
    pub nx: usize,
    pub ny: usize,
    pub cells: Vec<CellRates>,
}

pub fn spread_rates(wind: &WindField) -> SpreadRates {
    let cells = (0..wind.vx.len())
        .map(|c| CellRates::new(wind.speed(c), wind.angle(c)))
        .collect();
    SpreadRates { nx: wind.nx, ny: wind.ny, cells }
}

impl SpreadRates {
    /// Largest rate over all cells and the eight grid directions.
    pub fn max_rate(&self) -> f64 {
        self.cells
            .iter()
            .flat_map(|c| c.rate.iter().copied())
            .fold(0.0, f64::max)
    }
}

/// Time step that divides the horizon evenly and never exceeds one cell length of spread.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeStep {
    pub dt: f64,
    pub dt_max: f64,
    /// Steps needed to reach the horizon.
    pub steps: usize,
}

pub fn compute_time_step(rates: &SpreadRates, cell_length: f64, horizon: f64) -> Result<TimeStep> {
    let max_rate = rates.max_rate();
    if !(max_rate > 0.0 && max_rate.is_finite()) {
        return Err(Error::validation(format!("maximum spread rate must be positive, got {max_rate}")));
    }
    if !(horizon > 0.0) {
        return Err(Error::validation(format!("simulation time must be positive, got {horizon}")));
    }
    let dt_max = cell_length / max_rate;
    let steps = (horizon / dt_max).ceil() as usize;
    Ok(TimeStep { dt: horizon / steps as f64, dt_max, steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn uniform(r: CellRates) -> SpreadRates {
        SpreadRates { nx: 1, ny: 1, cells: vec![r] }
    }

    #[test]
    fn windless_is_isotropic() {
        let r = CellRates::new(0.0, 0.0);
        assert_eq!((r.r_max, r.rho, r.ecc), (0.005, 1.0, 0.0));
        assert!(r.rate.iter().all(|&v| v == 0.005));
    }

    #[test]
    fn base_wind_values() {
        let r = CellRates::new(2.5, 0.0);
        assert_relative_eq!(r.r_max, 0.255, max_relative = 1e-14);
        assert_relative_eq!(r.rho, 2.398, max_relative = 1e-14);
        let oracle = (1.0 - 1.0 / (2.398f64 * 2.398)).sqrt();
        assert_relative_eq!(r.ecc, oracle, max_relative = 1e-14);
        assert!((r.ecc - 0.9089).abs() < 1e-4);
        assert_eq!(r.rate[0], r.r_max);
        assert_relative_eq!(r.rate[4], r.r_max * (1.0 - r.ecc) / (1.0 + r.ecc), max_relative = 1e-12);
        assert!(r.rate[4] < r.rate[2] && r.rate[2] < r.rate[1] && r.rate[1] < r.rate[0]);
    }

    #[test]
    fn head_fire_follows_the_wind() {
        let r = CellRates::new(1.7, PI / 2.0);
        let best = (0..8).max_by(|&a, &b| r.rate[a].total_cmp(&r.rate[b])).unwrap();
        assert_eq!(best, 2);
        assert_relative_eq!(r.rate[2], r.r_max, max_relative = 1e-14);
    }

    #[test]
    fn time_step_example() {
        let ts = compute_time_step(&uniform(CellRates::new(2.5, 0.0)), 10.0, 3600.0).unwrap();
        assert_relative_eq!(ts.dt_max, 10.0 / 0.255, max_relative = 1e-14);
        assert_eq!(ts.steps, 92);
        assert_relative_eq!(ts.dt, 3600.0 / 92.0, max_relative = 1e-15);
    }

    #[test]
    fn exact_multiple_keeps_dt_max() {
        let rates = uniform(CellRates::new(0.0, 0.0));
        let ts = compute_time_step(&rates, 10.0, 4000.0).unwrap();
        assert_eq!(ts.steps, 2);
        assert_eq!(ts.dt, ts.dt_max);
    }

    #[test]
    fn zero_rate_rejected() {
        let mut r = CellRates::new(0.0, 0.0);
        r.rate = [0.0; 8];
        assert!(compute_time_step(&uniform(r), 10.0, 3600.0).is_err());
    }

    proptest! {
        #[test]
        fn step_is_safe(speed in 0.0f64..6.0, angle in -PI..PI, horizon in 100.0f64..10000.0) {
            let rates = uniform(CellRates::new(speed, angle));
            let ts = compute_time_step(&rates, 10.0, horizon).unwrap();
            prop_assert!(ts.dt <= ts.dt_max);
            prop_assert!(rates.max_rate() * ts.dt <= 10.0 * (1.0 + 1e-12));
            prop_assert!((ts.dt * ts.steps as f64 - horizon).abs() <= 1e-9 * horizon);
        }

        #[test]
        fn rates_between_back_and_head(speed in 0.0f64..6.0, angle in -PI..PI) {
            let r = CellRates::new(speed, angle);
            let back = r.r_max * (1.0 - r.ecc) / (1.0 + r.ecc);
            for &v in &r.rate {
                prop_assert!(v <= r.r_max * (1.0 + 1e-12) && v >= back * (1.0 - 1e-12));
            }
        }
    }
}

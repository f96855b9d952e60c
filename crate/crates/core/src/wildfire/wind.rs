use std::f64::consts::TAU;

use rand::Rng;

use super::FireConfig;
use crate::rng;

/// Random parameters of one stream-function realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindDraws {
    pub a: f64,
    pub b: f64,
    pub phi1: f64,
    pub phi2: f64,
}

impl WindDraws {
    /// Draws `A, B ~ N(0,1)` then `φ₁, φ₂ ~ U[0, 2π)`, in that order.
    pub fn sample(rng: &mut impl Rng) -> Self {
        let a = rng::standard_normal(rng);
        let b = rng::standard_normal(rng);
        let phi1 = TAU * rng::uniform(rng);
        let phi2 = TAU * rng::uniform(rng);
        Self { a, b, phi1, phi2 }
    }

    /// Draws of ensemble member `index`.
    pub fn for_member(seed: u64, index: usize) -> Self {
        Self::sample(&mut rng::substream(seed, rng::purpose::FIRE_WIND, index as u64))
    }

    pub fn calm() -> Self {
        Self { a: 0.0, b: 0.0, phi1: 0.0, phi2: 0.0 }
    }
}

/// Stream function `ψ(x, y)`.
pub fn stream_function(config: &FireConfig, d: &WindDraws, x: f64, y: f64) -> f64 {
    let (lx, ly, nu) = (config.lx, config.ly, config.nu);
    config.v0 * y
        + config.epsilon
            * (d.a * lx / nu * (TAU * nu * x / lx + d.phi1).cos() + d.b * ly / nu * (TAU * nu * y / ly + d.phi2).sin())
}

/// Velocity `(∂ψ/∂y, −∂ψ/∂x)` at a point.
pub fn velocity(config: &FireConfig, d: &WindDraws, x: f64, y: f64) -> (f64, f64) {
    let vx = config.v0 + TAU * config.epsilon * d.b * (TAU * config.nu * y / config.ly + d.phi2).cos();
    let vy = TAU * config.epsilon * d.a * (TAU * config.nu * x / config.lx + d.phi1).sin();
    (vx, vy)
}

/// Wind sampled at cell centers, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct WindField {
    pub nx: usize,
    pub ny: usize,
    pub vx: Vec<f64>,
    pub vy: Vec<f64>,
}

impl WindField {
    pub fn speed(&self, cell: usize) -> f64 {
        self.vx[cell].hypot(self.vy[cell])
    }

    /// Wind direction `atan2(v_y, v_x)`.
    pub fn angle(&self, cell: usize) -> f64 {
        self.vy[cell].atan2(self.vx[cell])
    }
}

pub fn build_wind_field(config: &FireConfig, draws: &WindDraws) -> WindField {
    let (nx, ny) = (config.nx(), config.ny());
    let mut vx = Vec::with_capacity(nx * ny);
    let mut vy = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (x, y) = config.cell_center(i, j);
            let (u, v) = velocity(config, draws, x, y);
            vx.push(u);
            vy.push(v);
        }
    }
    WindField { nx, ny, vx, vy }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn unperturbed_wind_is_uniform() {
        let cfg = FireConfig { epsilon: 0.0, ..FireConfig::default() };
        let w = build_wind_field(&cfg, &WindDraws::for_member(1, 0));
        assert!(w.vx.iter().all(|&v| v == 2.5) && w.vy.iter().all(|&v| v == 0.0));
        assert_eq!(w.angle(17), 0.0);
        let calm = build_wind_field(&FireConfig::default(), &WindDraws { a: 0.0, b: 0.0, phi1: 1.0, phi2: 2.0 });
        assert!(calm.vx.iter().all(|&v| v == 2.5) && calm.vy.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn member_draws_are_reproducible() {
        assert_eq!(WindDraws::for_member(3, 9), WindDraws::for_member(3, 9));
        assert_ne!(WindDraws::for_member(3, 9), WindDraws::for_member(3, 10));
    }

    proptest! {
        #[test]
        fn velocity_matches_stream_function_differences(
            a in -3.0f64..3.0, b in -3.0f64..3.0, phi1 in 0.0f64..TAU, phi2 in 0.0f64..TAU,
            x in 1.0f64..1999.0, y in 1.0f64..1499.0,
        ) {
            let cfg = FireConfig::default();
            let d = WindDraws { a, b, phi1, phi2 };
            let h = 0.01;
            let dpsi_dy = (stream_function(&cfg, &d, x, y + h) - stream_function(&cfg, &d, x, y - h)) / (2.0 * h);
            let dpsi_dx = (stream_function(&cfg, &d, x + h, y) - stream_function(&cfg, &d, x - h, y)) / (2.0 * h);
            let (vx, vy) = velocity(&cfg, &d, x, y);
            let scale = vx.hypot(vy).max(1.0);
            prop_assert!((vx - dpsi_dy).abs() <= 1e-4 * scale);
            prop_assert!((vy + dpsi_dx).abs() <= 1e-4 * scale);
        }

        #[test]
        fn discrete_divergence_vanishes(a in -3.0f64..3.0, b in -3.0f64..3.0, x in 10.0f64..1990.0, y in 10.0f64..1490.0) {
            let cfg = FireConfig::default();
            let d = WindDraws { a, b, phi1: 0.3, phi2: 1.1 };
            let h = 1e-3;
            let div = (velocity(&cfg, &d, x + h, y).0 - velocity(&cfg, &d, x - h, y).0) / (2.0 * h)
                + (velocity(&cfg, &d, x, y + h).1 - velocity(&cfg, &d, x, y - h).1) / (2.0 * h);
            prop_assert!(div.abs() < 1e-9);
        }
    }
}

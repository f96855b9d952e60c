use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of the wildfire cellular automaton and its ensemble experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FireConfig {
    /// Domain width in meters.
    pub lx: f64,
    /// Domain height in meters.
    pub ly: f64,
    pub cell_length: f64,
    /// Ignition point `(x, y)` in meters.
    pub ignition: (f64, f64),
    /// Base wind speed in m/s.
    pub v0: f64,
    pub epsilon: f64,
    pub nu: f64,
    /// Time of the reconstructed snapshot in seconds; forecasts run one more leg of the same length.
    pub sim_time: f64,
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    /// `y` coordinates (meters) of the horizontal sensor lines.
    pub sensor_lines: Vec<f64>,
}

impl Default for FireConfig {
    fn default() -> Self {
        Self {
            lx: 2000.0,
            ly: 1500.0,
            cell_length: 10.0,
            ignition: (380.0, 490.0),
            v0: 2.5,
            epsilon: 0.1,
            nu: 5.0,
            sim_time: 3600.0,
            seed: 42,
            n_train: 800,
            n_test: 200,
            sensor_lines: vec![400.0, 500.0, 600.0],
        }
    }
}

fn cells_along(len: f64, ell: f64) -> Option<usize> {
    let n = (len / ell).round();
    ((n * ell - len).abs() <= 1e-9 * len && n >= 1.0).then_some(n as usize)
}

impl FireConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [("lx", self.lx), ("ly", self.ly), ("cell_length", self.cell_length), ("sim_time", self.sim_time)];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::validation(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("v0", self.v0), ("epsilon", self.epsilon), ("nu", self.nu)] {
            if !v.is_finite() {
                return Err(Error::validation(format!("{name} must be finite")));
            }
        }
        if cells_along(self.lx, self.cell_length).is_none() || cells_along(self.ly, self.cell_length).is_none() {
            return Err(Error::validation(format!(
                "cell length {} must divide the domain {}x{}",
                self.cell_length, self.lx, self.ly
            )));
        }
        let (x, y) = self.ignition;
        if !(x >= 0.0 && x < self.lx && y >= 0.0 && y < self.ly) {
            return Err(Error::validation(format!("ignition ({x}, {y}) lies outside the domain")));
        }
        for &y in &self.sensor_lines {
            if !(y >= 0.0 && y < self.ly) {
                return Err(Error::validation(format!("sensor line y={y} lies outside the domain")));
            }
        }
        if self.n_train == 0 || self.n_test == 0 {
            return Err(Error::validation("ensemble needs at least one training and one test run"));
        }
        Ok(())
    }

    /// Cells along `x`.
    pub fn nx(&self) -> usize {
        cells_along(self.lx, self.cell_length).unwrap_or(0)
    }

    /// Cells along `y`.
    pub fn ny(&self) -> usize {
        cells_along(self.ly, self.cell_length).unwrap_or(0)
    }

    pub fn n_cells(&self) -> usize {
        self.nx() * self.ny()
    }

    /// Row-major cell index: `j·nx + i`, with `j` counting rows along `y`.
    pub fn cell_index(&self, i: usize, j: usize) -> usize {
        j * self.nx() + i
    }

    /// Cell containing the point `(x, y)`.
    pub fn cell_of(&self, x: f64, y: f64) -> (usize, usize) {
        let i = ((x / self.cell_length).floor() as usize).min(self.nx() - 1);
        let j = ((y / self.cell_length).floor() as usize).min(self.ny() - 1);
        (i, j)
    }

    pub fn cell_center(&self, i: usize, j: usize) -> (f64, f64) {
        ((i as f64 + 0.5) * self.cell_length, (j as f64 + 0.5) * self.cell_length)
    }

    pub fn ignition_cell(&self) -> usize {
        let (i, j) = self.cell_of(self.ignition.0, self.ignition.1);
        self.cell_index(i, j)
    }

    /// Grid rows hit by the sensor lines, deduplicated, in line order.
    pub fn sensor_rows(&self) -> Vec<usize> {
        let mut rows = Vec::new();
        for &y in &self.sensor_lines {
            let j = self.cell_of(0.0, y).1;
            if !rows.contains(&j) {
                rows.push(j);
            }
        }
        rows
    }
}

//! Range-violation penalties and the total penalty over a reconstruction.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Admissible range `[u_min, u_max]` of the reconstructed quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundsSpec {
    u_min: f64,
    u_max: f64,
}

impl BoundsSpec {
    pub fn new(u_min: f64, u_max: f64) -> Result<Self> {
        if !u_min.is_finite() || !u_max.is_finite() {
            return Err(Error::validation(format!(
                "bounds must be finite, got [{u_min}, {u_max}]"
            )));
        }
        if u_min >= u_max {
            return Err(Error::validation(format!(
                "lower bound {u_min} must be below upper bound {u_max}"
            )));
        }
        Ok(Self { u_min, u_max })
    }

    pub fn u_min(&self) -> f64 {
        self.u_min
    }

    pub fn u_max(&self) -> f64 {
        self.u_max
    }

    pub fn contains(&self, u: f64) -> bool {
        (self.u_min..=self.u_max).contains(&u)
    }

    /// Distance of `u` outside the interval (0 inside).
    pub fn violation(&self, u: f64) -> f64 {
        if u < self.u_min {
            self.u_min - u
        } else if u > self.u_max {
            u - self.u_max
        } else {
            0.0
        }
    }

    /// Largest violation over all entries of `u`.
    pub fn max_violation(&self, u: &DVector<f64>) -> f64 {
        u.iter().map(|&v| self.violation(v)).fold(0.0, f64::max)
    }
}

/// Value and first two derivatives of a scalar penalty at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyTriple {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

/// A componentwise penalty `p(u)`.
///
/// Implementations must be nonnegative, convex and C² with Lipschitz `p''`,
/// vanish exactly on the bounds interval, be decreasing below it and
/// increasing above it, and have `p'' > 0` outside it.
pub trait PenaltyFunction: Sync {
    fn bounds(&self) -> BoundsSpec;

    fn eval(&self, u: f64) -> PenaltyTriple;

    /// Largest distance outside the bounds any single entry can reach while the
    /// total penalty stays below `delta`.
    fn max_violation_for(&self, delta: f64) -> f64;
}

/// Piecewise cubic penalty: `∓(u - bound)³ / 6` outside the bounds, zero inside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicPenalty {
    bounds: BoundsSpec,
}

impl CubicPenalty {
    pub fn new(bounds: BoundsSpec) -> Self {
        Self { bounds }
    }
}

impl PenaltyFunction for CubicPenalty {
    fn bounds(&self) -> BoundsSpec {
        self.bounds
    }

    fn eval(&self, u: f64) -> PenaltyTriple {
        p_cubic(u, self.bounds)
    }

    /// `(6δ)^{1/3}`.
    fn max_violation_for(&self, delta: f64) -> f64 {
        (6.0 * delta).cbrt()
    }
}

/// Piecewise cubic penalty and its analytic derivatives.
///
/// Points exactly on a bound use the zero branch.
pub fn p_cubic(u: f64, bounds: BoundsSpec) -> PenaltyTriple {
    if u < bounds.u_min {
        let z = u - bounds.u_min;
        PenaltyTriple {
            value: -z * z * z / 6.0,
            d1: -z * z / 2.0,
            d2: -z,
        }
    } else if u > bounds.u_max {
        let z = u - bounds.u_max;
        PenaltyTriple {
            value: z * z * z / 6.0,
            d1: z * z / 2.0,
            d2: z,
        }
    } else {
        PenaltyTriple {
            value: 0.0,
            d1: 0.0,
            d2: 0.0,
        }
    }
}

/// Total penalty `P(α) = Σ p(ũ_i)` with its gradient and the Hessian diagonal `D`.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyEval {
    pub value: f64,
    /// `∇P = Φᵀ p'(ũ)`, length `m`.
    pub gradient: DVector<f64>,
    /// `p''(ũ_i)`, length `N`.
    pub hess_diag: DVector<f64>,
}

pub fn total_penalty(
    alpha: &DVector<f64>,
    phi: &DMatrix<f64>,
    penalty: &impl PenaltyFunction,
) -> Result<PenaltyEval> {
    if alpha.len() != phi.ncols() {
        return Err(Error::Dimension(format!(
            "coefficient vector has length {} but basis has {} columns",
            alpha.len(),
            phi.ncols()
        )));
    }
    let recon = phi * alpha;
    Ok(penalty_at(&recon, phi, penalty))
}

/// Same as [`total_penalty`] for an already computed reconstruction `ũ = Φα`.
pub(crate) fn penalty_at(
    recon: &DVector<f64>,
    phi: &DMatrix<f64>,
    penalty: &impl PenaltyFunction,
) -> PenaltyEval {
    let n = recon.len();
    let mut value = 0.0;
    let mut d1 = DVector::zeros(n);
    let mut hess_diag = DVector::zeros(n);
    for i in 0..n {
        let t = penalty.eval(recon[i]);
        value += t.value;
        d1[i] = t.d1;
        hess_diag[i] = t.d2;
    }
    let gradient = phi.tr_mul(&d1);
    PenaltyEval {
        value,
        gradient,
        hess_diag,
    }
}

/// Value-only total penalty of a reconstruction.
pub fn penalty_value(recon: &DVector<f64>, penalty: &impl PenaltyFunction) -> f64 {
    recon.iter().map(|&u| penalty.eval(u).value).sum()
}

//! DEIM and bound-constrained DEIM solvers.
//!
//! The constrained reconstruction minimizes `f_λ(α) = ½|Θα − y|² + λP(α)`.
//! For a fixed `λ` the minimizer is found by pure Newton iteration. The penalty
//! parameter is chosen as the smallest value (to within `tau_lambda`) whose
//! minimizer has total penalty below `delta`: a geometric ladder brackets it and
//! arithmetic bisection refines the bracket. Every Newton solve is warm-started
//! from the previous iterate.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::BasisBundle;
use crate::error::{Error, Result};
use crate::penalty::{penalty_at, BoundsSpec, CubicPenalty, PenaltyFunction};

/// Tolerances and continuation controls for [`cdeim_solve`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PenaltyParams {
    pub lambda_init: f64,
    pub gamma: f64,
    /// Stopping tolerance on the total penalty.
    pub delta: f64,
    /// Newton step tolerance.
    pub tau: f64,
    /// Width at which bisection on `λ` stops.
    pub tau_lambda: f64,
    pub max_newton_iters: usize,
    pub lambda_cap: f64,
}

impl Default for PenaltyParams {
    fn default() -> Self {
        Self {
            lambda_init: 1e-7,
            gamma: 10.0,
            delta: 1e-7,
            tau: 1e-10,
            tau_lambda: 0.1,
            max_newton_iters: 100,
            lambda_cap: 1e12,
        }
    }
}

impl PenaltyParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lambda_init", self.lambda_init),
            ("delta", self.delta),
            ("tau", self.tau),
            ("tau_lambda", self.tau_lambda),
            ("lambda_cap", self.lambda_cap),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::validation(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !(self.gamma.is_finite() && self.gamma > 1.0) {
            return Err(Error::validation(format!("gamma must exceed 1, got {}", self.gamma)));
        }
        if self.max_newton_iters == 0 {
            return Err(Error::validation("max_newton_iters must be positive"));
        }
        if self.lambda_init >= self.lambda_cap {
            return Err(Error::validation(format!(
                "lambda_init {} must be below lambda_cap {}",
                self.lambda_init, self.lambda_cap
            )));
        }
        Ok(())
    }
}

/// Minimum-norm least-squares coefficients `Θ⁺y`.
pub fn deim_solve(bundle: &BasisBundle, y: &DVector<f64>) -> Result<DVector<f64>> {
    check_observations(bundle, y)?;
    Ok(bundle.theta_pinv() * y)
}

fn check_observations(bundle: &BasisBundle, y: &DVector<f64>) -> Result<()> {
    if y.len() != bundle.n_sensors() {
        return Err(Error::Dimension(format!(
            "{} observations for {} sensors",
            y.len(),
            bundle.n_sensors()
        )));
    }
    if let Some(i) = y.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { row: i, col: 0 });
    }
    Ok(())
}

/// Penalized cost with its gradient and Hessian at one point.
#[derive(Debug, Clone)]
pub struct CostDerivatives {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
    /// Total penalty `P(α)` at the same point.
    pub penalty: f64,
}

/// `f_λ`, `∇f_λ = Θᵀ(Θα − y) + λΦᵀp'(Φα)` and `∇²f_λ = ΘᵀΘ + λΦᵀD(Φα)Φ`.
pub fn cost_and_derivatives(
    alpha: &DVector<f64>,
    lambda: f64,
    bundle: &BasisBundle,
    y: &DVector<f64>,
    penalty: &impl PenaltyFunction,
) -> Result<CostDerivatives> {
    check_observations(bundle, y)?;
    if alpha.len() != bundle.n_modes() {
        return Err(Error::Dimension(format!(
            "coefficient vector has length {} but basis has {} modes",
            alpha.len(),
            bundle.n_modes()
        )));
    }
    if !(lambda >= 0.0) {
        return Err(Error::validation(format!("penalty parameter must be nonnegative, got {lambda}")));
    }
    Ok(derivatives(alpha, lambda, bundle, y, penalty))
}

fn derivatives(
    alpha: &DVector<f64>,
    lambda: f64,
    bundle: &BasisBundle,
    y: &DVector<f64>,
    penalty: &impl PenaltyFunction,
) -> CostDerivatives {
    let theta = bundle.theta();
    let phi = bundle.phi();
    let residual = theta * alpha - y;
    let recon = phi * alpha;
    let pen = penalty_at(&recon, phi, penalty);

    let mut gradient = theta.tr_mul(&residual);
    let mut hessian = theta.tr_mul(theta);
    if lambda > 0.0 {
        gradient.axpy(lambda, &pen.gradient, 1.0);
        // Only rows outside the bounds contribute to ΦᵀDΦ.
        let active: Vec<usize> = (0..recon.len()).filter(|&i| pen.hess_diag[i] > 0.0).collect();
        if !active.is_empty() {
            let m = phi.ncols();
            let scaled = DMatrix::from_fn(active.len(), m, |k, j| {
                let i = active[k];
                pen.hess_diag[i].sqrt() * phi[(i, j)]
            });
            hessian += scaled.tr_mul(&scaled) * lambda;
        }
    }
    CostDerivatives {
        value: 0.5 * residual.norm_squared() + lambda * pen.value,
        gradient,
        hessian,
        penalty: pen.value,
    }
}

/// Result of one Newton solve at fixed `λ`.
#[derive(Debug, Clone)]
pub struct NewtonResult {
    pub alpha: DVector<f64>,
    pub iterations: usize,
    /// `|∇f_λ|` at the returned iterate's predecessor, i.e. the gradient that produced the last step.
    pub last_gradient_norm: f64,
}

/// Pure Newton iteration on `f_λ` from `alpha_init` until `|α_k − α_{k−1}| ≤ tau`.
///
/// Each Hessian system is solved by Cholesky. If the factorization fails a
/// shift `μI` with `μ = 1e-12·tr(H)/m` is added once.
pub fn newton_solve(
    lambda: f64,
    alpha_init: &DVector<f64>,
    bundle: &BasisBundle,
    y: &DVector<f64>,
    penalty: &impl PenaltyFunction,
    params: &PenaltyParams,
) -> Result<NewtonResult> {
    check_observations(bundle, y)?;
    if alpha_init.len() != bundle.n_modes() {
        return Err(Error::Dimension(format!(
            "initial guess has length {} but basis has {} modes",
            alpha_init.len(),
            bundle.n_modes()
        )));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::validation(format!("penalty parameter must be nonnegative, got {lambda}")));
    }

    let mut alpha = alpha_init.clone();
    let mut last_step = f64::INFINITY;
    for k in 1..=params.max_newton_iters {
        let d = derivatives(&alpha, lambda, bundle, y, penalty);
        let step = solve_spd(d.hessian, &d.gradient)?;
        alpha -= &step;
        last_step = step.norm();
        if last_step <= params.tau {
            return Ok(NewtonResult {
                alpha,
                iterations: k,
                last_gradient_norm: d.gradient.norm(),
            });
        }
        if !last_step.is_finite() {
            break;
        }
    }
    Err(Error::NonConvergence {
        iterations: params.max_newton_iters,
        last_step,
        last_iterate: alpha,
    })
}

fn solve_spd(hessian: DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    if let Some(chol) = Cholesky::new(hessian.clone()) {
        return Ok(chol.solve(rhs));
    }
    let m = hessian.nrows();
    let shift = 1e-12 * hessian.trace() / m as f64;
    let mut shifted = hessian;
    for i in 0..m {
        shifted[(i, i)] += shift;
    }
    Cholesky::new(shifted)
        .map(|chol| chol.solve(rhs))
        .ok_or(Error::SingularHessian { shift })
}

/// One rung of the geometric `λ` ladder (the first rung is the unpenalized start, `λ = 0`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LadderStep {
    pub lambda: f64,
    pub penalty: f64,
    pub newton_iterations: usize,
}

/// One bisection probe; `lower`/`upper` are the bracket before the probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BisectionStep {
    pub lower: f64,
    pub upper: f64,
    /// Penalty at the lower end, unknown if that end was never solved.
    pub penalty_lower: Option<f64>,
    pub penalty_upper: f64,
    pub mid: f64,
    pub penalty_mid: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SolveTrace {
    pub ladder: Vec<LadderStep>,
    pub bisection: Vec<BisectionStep>,
}

/// Reconstruction and diagnostics of one constrained solve.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub alpha: DVector<f64>,
    pub reconstruction: DVector<f64>,
    pub lambda_opt: f64,
    pub penalty_value: f64,
    /// `|Θα − y|`.
    pub obs_residual: f64,
    /// `(λ_opt / σ_min(Θ)) · |∇P(α)|`.
    pub residual_bound: f64,
    /// `|∇P(α)|` at the returned coefficients.
    pub penalty_gradient_norm: f64,
    pub sigma_min: f64,
    pub newton_iterations_total: usize,
    pub bisection_steps: usize,
    pub bound_violation_max: f64,
    pub trace: SolveTrace,
}

impl SolveOutcome {
    /// Relative observation residual `|Θα − y| / |y|` (NaN for zero observations).
    pub fn relative_obs_residual(&self, y: &DVector<f64>) -> f64 {
        self.obs_residual / y.norm()
    }
}

/// Constrained DEIM with the piecewise cubic penalty on `bounds`.
pub fn cdeim_solve(
    bundle: &BasisBundle,
    y: &DVector<f64>,
    bounds: BoundsSpec,
    params: &PenaltyParams,
) -> Result<SolveOutcome> {
    cdeim_solve_with(bundle, y, &CubicPenalty::new(bounds), params)
}

/// Constrained DEIM with an arbitrary admissible penalty.
pub fn cdeim_solve_with(
    bundle: &BasisBundle,
    y: &DVector<f64>,
    penalty: &impl PenaltyFunction,
    params: &PenaltyParams,
) -> Result<SolveOutcome> {
    params.validate()?;
    let mut alpha = deim_solve(bundle, y)?;
    let mut trace = SolveTrace::default();
    let mut newton_total = 0usize;
    let mut p = crate::penalty::penalty_value(&(bundle.phi() * &alpha), penalty);
    trace.ladder.push(LadderStep {
        lambda: 0.0,
        penalty: p,
        newton_iterations: 0,
    });

    let solve = |alpha: &DVector<f64>, lambda: f64, total: &mut usize| -> Result<(DVector<f64>, f64, usize)> {
        let res = newton_solve(lambda, alpha, bundle, y, penalty, params)?;
        *total += res.iterations;
        let p = crate::penalty::penalty_value(&(bundle.phi() * &res.alpha), penalty);
        Ok((res.alpha, p, res.iterations))
    };

    let lambda_opt = if p < params.delta {
        0.0
    } else {
        let mut lambda = params.lambda_init;
        while p >= params.delta {
            lambda *= params.gamma;
            if lambda > params.lambda_cap {
                return Err(Error::Infeasible {
                    cap: params.lambda_cap,
                    penalty: p,
                });
            }
            let (a, pn, iters) = solve(&alpha, lambda, &mut newton_total)?;
            alpha = a;
            p = pn;
            trace.ladder.push(LadderStep {
                lambda,
                penalty: p,
                newton_iterations: iters,
            });
        }
        let mut lower = lambda / params.gamma;
        let mut upper = lambda;
        let n = trace.ladder.len();
        let mut p_lower = if n >= 3 { Some(trace.ladder[n - 2].penalty) } else { None };
        let mut p_upper = p;
        while upper - lower > params.tau_lambda {
            let mid = 0.5 * (lower + upper);
            let (a, pm, _) = solve(&alpha, mid, &mut newton_total)?;
            alpha = a;
            trace.bisection.push(BisectionStep {
                lower,
                upper,
                penalty_lower: p_lower,
                penalty_upper: p_upper,
                mid,
                penalty_mid: pm,
            });
            if pm >= params.delta {
                lower = mid;
                p_lower = Some(pm);
            } else {
                upper = mid;
                p_upper = pm;
            }
        }
        let (a, _, _) = solve(&alpha, upper, &mut newton_total)?;
        alpha = a;
        upper
    };

    let reconstruction = bundle.phi() * &alpha;
    let pen = penalty_at(&reconstruction, bundle.phi(), penalty);
    let obs_residual = (bundle.theta() * &alpha - y).norm();
    let sigma_min = bundle.sigma_min();
    let grad_norm = pen.gradient.norm();
    let residual_bound = if lambda_opt == 0.0 {
        0.0
    } else {
        lambda_opt / sigma_min * grad_norm
    };
    let bounds = penalty.bounds();
    Ok(SolveOutcome {
        bound_violation_max: bounds.max_violation(&reconstruction),
        alpha,
        reconstruction,
        lambda_opt,
        penalty_value: pen.value,
        obs_residual,
        residual_bound,
        penalty_gradient_norm: grad_norm,
        sigma_min,
        newton_iterations_total: newton_total,
        bisection_steps: trace.bisection.len(),
        trace,
    })
}

/// Clamps `u` into the bounds, then snaps entries in `(0, floor_epsilon)` to the lower bound.
pub fn threshold_reconstruction(u: &DVector<f64>, bounds: BoundsSpec, floor_epsilon: f64) -> DVector<f64> {
    u.map(|v| {
        let c = v.clamp(bounds.u_min(), bounds.u_max());
        if c > 0.0 && c < floor_epsilon {
            bounds.u_min()
        } else {
            c
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{assemble_bundle, cpqr_select};
    use approx::assert_relative_eq;
    use nalgebra::dmatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit() -> BoundsSpec {
        BoundsSpec::new(-1.0, 1.0).unwrap()
    }

    fn scalar_bundle() -> BasisBundle {
        assemble_bundle(DMatrix::from_element(1, 1, 1.0), vec![0]).unwrap()
    }

    fn random_bundle(n: usize, m: usize, seed: u64) -> BasisBundle {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi = DMatrix::from_fn(n, m, |_, _| rng.random::<f64>() - 0.5).qr().q();
        let sel = cpqr_select(&phi, m).unwrap();
        assemble_bundle(phi, sel.indices).unwrap()
    }

    /// Bisection root finder used as an independent scalar oracle.
    fn bisect_root(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (f(mid) > 0.0) == (f(hi) > 0.0) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn deim_identity_and_rank_deficient() {
        let b = assemble_bundle(DMatrix::identity(2, 2), vec![0, 1]).unwrap();
        let a = deim_solve(&b, &DVector::from_vec(vec![3.0, -1.0])).unwrap();
        assert_relative_eq!(a, DVector::from_vec(vec![3.0, -1.0]), epsilon = 1e-14);

        let phi = dmatrix![2.0, 0.0; 0.0, 0.0];
        let b = assemble_bundle(phi, vec![0, 1]).unwrap();
        assert_eq!(b.theta_rank(), 1);
        let a = deim_solve(&b, &DVector::from_vec(vec![4.0, 1.0])).unwrap();
        assert_relative_eq!(a, DVector::from_vec(vec![2.0, 0.0]), epsilon = 1e-14);
    }

    #[test]
    fn deim_interpolates() {
        let b = random_bundle(40, 7, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let y = DVector::from_fn(7, |_, _| rng.random::<f64>() * 4.0 - 2.0);
        let a = deim_solve(&b, &y).unwrap();
        // oracle: LU solve of the square system
        let direct = b.theta().clone().lu().solve(&y).unwrap();
        assert!((&a - direct).norm() < 1e-10 * (1.0 + a.norm()));
        assert!((b.theta() * &a - &y).norm() <= 1e-10 * y.norm());
        assert!(deim_solve(&b, &DVector::zeros(3)).is_err());
    }

    #[test]
    fn derivatives_without_penalty() {
        let b = random_bundle(20, 4, 5);
        let y = DVector::from_vec(vec![5.0, -4.0, 3.0, 2.0]);
        let alpha = DVector::from_vec(vec![0.3, -3.0, 2.0, 7.0]);
        let d = cost_and_derivatives(&alpha, 0.0, &b, &y, &CubicPenalty::new(unit())).unwrap();
        let th = b.theta();
        assert_relative_eq!(d.gradient, th.transpose() * (th * &alpha - &y), epsilon = 1e-12);
        assert_relative_eq!(d.hessian, th.transpose() * th, epsilon = 1e-12);
    }

    #[test]
    fn derivatives_inside_constraint_set() {
        let b = random_bundle(20, 4, 6);
        let y = DVector::from_vec(vec![5.0, -4.0, 3.0, 2.0]);
        let alpha = DVector::from_vec(vec![0.1, -0.2, 0.05, 0.3]);
        let d = cost_and_derivatives(&alpha, 1e3, &b, &y, &CubicPenalty::new(unit())).unwrap();
        let th = b.theta();
        assert_eq!(d.penalty, 0.0);
        assert_eq!(d.gradient, th.tr_mul(&(th * &alpha - &y)));
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let pen = CubicPenalty::new(unit());
        for case in 0..30 {
            let m = 2 + case % 6;
            let b = random_bundle(30, m, 100 + case as u64);
            let y = DVector::from_fn(m, |_, _| 3.0 * (rng.random::<f64>() - 0.5));
            let alpha = DVector::from_fn(m, |_, _| 8.0 * (rng.random::<f64>() - 0.5));
            let lambda = 10f64.powf(4.0 * rng.random::<f64>() - 2.0);
            let d = cost_and_derivatives(&alpha, lambda, &b, &y, &pen).unwrap();
            let mut fd_grad = DVector::zeros(m);
            let mut fd_hess = DMatrix::zeros(m, m);
            for j in 0..m {
                let h = 1e-6 * (1.0 + alpha[j].abs());
                let mut ap = alpha.clone();
                let mut am = alpha.clone();
                ap[j] += h;
                am[j] -= h;
                let dp = cost_and_derivatives(&ap, lambda, &b, &y, &pen).unwrap();
                let dm = cost_and_derivatives(&am, lambda, &b, &y, &pen).unwrap();
                fd_grad[j] = (dp.value - dm.value) / (2.0 * h);
                fd_hess.set_column(j, &((dp.gradient - dm.gradient) / (2.0 * h)));
            }
            let ge = (&fd_grad - &d.gradient).norm() / d.gradient.norm();
            let he = (&fd_hess - &d.hessian).norm() / d.hessian.norm();
            assert!(ge <= 1e-6, "case {case}: gradient rel err {ge}");
            assert!(he <= 1e-5, "case {case}: hessian rel err {he}");
        }
    }

    #[test]
    fn newton_quadratic_one_step() {
        let b = random_bundle(25, 5, 12);
        let y = DVector::from_vec(vec![1.0, 2.0, -3.0, 0.5, 4.0]);
        let params = PenaltyParams::default();
        let start = DVector::from_vec(vec![10.0, -7.0, 3.0, 1.0, 0.0]);
        let res = newton_solve(0.0, &start, &b, &y, &CubicPenalty::new(unit()), &params).unwrap();
        // the second iteration confirms the first step landed on the minimizer
        assert!(res.iterations <= 2);
        let exact = b.theta().clone().lu().solve(&y).unwrap();
        assert!((res.alpha - exact).norm() < 1e-10);
    }

    #[test]
    fn newton_fixed_point_inside() {
        let b = assemble_bundle(DMatrix::identity(3, 3), vec![0, 1, 2]).unwrap();
        let alpha = DVector::from_vec(vec![0.2, -0.5, 0.9]);
        let y = alpha.clone();
        let res = newton_solve(5.0, &alpha, &b, &y, &CubicPenalty::new(unit()), &PenaltyParams::default()).unwrap();
        assert_eq!(res.iterations, 1);
        assert_eq!(res.alpha, alpha);
    }

    #[test]
    fn newton_scalar_problem_matches_root_oracle() {
        // f'(α) = (α - 2) + ½(α - 1)² for α > 1
        let oracle = bisect_root(|a| (a - 2.0) + 0.5 * (a - 1.0).powi(2), 1.0, 2.0);
        assert_relative_eq!(oracle, 3f64.sqrt(), epsilon = 1e-12);
        let b = scalar_bundle();
        let y = DVector::from_vec(vec![2.0]);
        let res = newton_solve(1.0, &y, &b, &y, &CubicPenalty::new(unit()), &PenaltyParams::default()).unwrap();
        assert!((res.alpha[0] - oracle).abs() < 1e-10);
    }

    #[test]
    fn newton_iteration_cap() {
        let b = scalar_bundle();
        let y = DVector::from_vec(vec![50.0]);
        let params = PenaltyParams {
            max_newton_iters: 2,
            ..PenaltyParams::default()
        };
        let err = newton_solve(1e3, &y, &b, &y, &CubicPenalty::new(unit()), &params).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { iterations: 2, .. }));
    }

    #[test]
    fn cdeim_returns_deim_when_feasible() {
        let b = random_bundle(30, 4, 3);
        let alpha = DVector::from_vec(vec![0.1, 0.2, -0.1, 0.05]);
        let y = b.sample(&(b.phi() * &alpha)).unwrap();
        let out = cdeim_solve(&b, &y, unit(), &PenaltyParams::default()).unwrap();
        assert_eq!(out.lambda_opt, 0.0);
        assert_eq!(out.alpha, deim_solve(&b, &y).unwrap());
        assert_eq!(out.newton_iterations_total, 0);
    }

    #[test]
    fn cdeim_scalar_lambda_matches_sweep_oracle() {
        let b = scalar_bundle();
        let y = DVector::from_vec(vec![2.0]);
        let params = PenaltyParams {
            lambda_init: 1e-3,
            delta: 1e-3,
            ..PenaltyParams::default()
        };
        let out = cdeim_solve(&b, &y, unit(), &params).unwrap();
        // Oracle: P(α(λ)) from scalar root finding on a dense logarithmic grid.
        let pen_at = |lambda: f64| {
            let a = bisect_root(|a| (a - 2.0) + lambda * 0.5 * (a - 1.0).powi(2), 1.0, 2.0);
            (a - 1.0).powi(3) / 6.0
        };
        let grid: Vec<f64> = (0..=60000).map(|k| 10f64.powf(-3.0 + k as f64 * 1e-4)).collect();
        let smallest = grid.iter().copied().find(|&l| pen_at(l) < params.delta).unwrap();
        assert!(pen_at(out.lambda_opt) < params.delta);
        assert!(
            (out.lambda_opt - smallest).abs() <= params.tau_lambda,
            "lambda_opt {} vs oracle {}",
            out.lambda_opt,
            smallest
        );
        assert!(out.penalty_value < params.delta);
        assert!(out.bound_violation_max <= (6.0 * params.delta).cbrt());
    }

    #[test]
    fn cdeim_random_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let params = PenaltyParams::default();
        for case in 0..20u64 {
            let m = 3 + (case % 5) as usize;
            let b = random_bundle(40, m, 300 + case);
            let y = DVector::from_fn(m, |_, _| 2.0 * (rng.random::<f64>() - 0.5));
            let out = cdeim_solve(&b, &y, unit(), &params).unwrap();
            assert!(out.penalty_value < params.delta);
            assert!(out.bound_violation_max <= (6.0 * params.delta).cbrt());
            assert!(out.obs_residual <= out.residual_bound + 1e-8 * (1.0 + out.residual_bound));
            for w in out.trace.ladder.windows(2) {
                assert!(w[1].penalty <= w[0].penalty + 1e-12);
            }
            for s in &out.trace.bisection {
                assert!(s.penalty_upper < params.delta);
                if let Some(pl) = s.penalty_lower {
                    assert!(pl >= params.delta);
                }
            }
        }
    }

    #[test]
    fn cdeim_infeasible_cap() {
        // Constant mode forced to value 5 at the sensor with bounds [-1, 1] is
        // penalized, but the cap is tiny.
        let b = scalar_bundle();
        let params = PenaltyParams {
            lambda_cap: 1e-5,
            ..PenaltyParams::default()
        };
        let err = cdeim_solve(&b, &DVector::from_vec(vec![5.0]), unit(), &params).unwrap_err();
        assert!(matches!(err, Error::Infeasible { .. }));
    }

    #[test]
    fn threshold_examples() {
        let b01 = BoundsSpec::new(0.0, 1.0).unwrap();
        let u = DVector::from_vec(vec![-0.2, 0.5, 1.3]);
        assert_eq!(threshold_reconstruction(&u, b01, 0.0).as_slice(), &[0.0, 0.5, 1.0]);
        let inside = DVector::from_vec(vec![0.1, 0.9]);
        assert_eq!(threshold_reconstruction(&inside, b01, 0.0), inside);
        let u = DVector::from_vec(vec![0.01, 0.5]);
        assert_eq!(threshold_reconstruction(&u, b01, 0.05).as_slice(), &[0.0, 0.5]);
    }

    #[test]
    fn params_validation() {
        assert!(PenaltyParams::default().validate().is_ok());
        let bad = PenaltyParams {
            gamma: 1.0,
            ..PenaltyParams::default()
        };
        assert!(bad.validate().is_err());
        let bad = PenaltyParams {
            lambda_init: 1e13,
            ..PenaltyParams::default()
        };
        assert!(bad.validate().is_err());
    }
}

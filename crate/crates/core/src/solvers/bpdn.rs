//! Basis pursuit denoising through its Lagrangian form.
//!
//! `min ||x||_1 s.t. ||y - M x||_2 <= eps` is solved by picking the weight
//! `lambda` of `min 1/2 ||y - M x||^2 + lambda ||x||_1` whose solution has
//! residual norm `eps` (the discrepancy principle). Each Lagrangian problem
//! is solved by FISTA with a monotone restart: whenever the accelerated
//! step would raise the objective, momentum is reset and a plain proximal
//! gradient step from the last accepted iterate is taken instead.

use nalgebra::DVector;

use super::{check_observation, SolveResult, SolverFlags};
use crate::error::{Error, Result};
use crate::linalg;
use crate::matrix::MeasurementMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BpdnOptions {
    /// Iteration cap of each inner FISTA solve.
    pub max_iter: usize,
    /// Relative iterate change that ends an inner solve.
    pub tol: f64,
    pub bisection_iter: usize,
    /// Accept a weight once the residual is within this fraction of `eps`.
    pub discrepancy_rtol: f64,
    /// With `eps = 0` the target residual is `residual_tol * ||y||`.
    pub residual_tol: f64,
}

impl Default for BpdnOptions {
    fn default() -> Self {
        Self {
            max_iter: 5000,
            tol: 1e-10,
            bisection_iter: 20,
            discrepancy_rtol: 0.02,
            residual_tol: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoSolution {
    pub x: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after every accepted iteration, starting with the initial
    /// point.
    pub objective: Vec<f64>,
}

fn objective(mx: &DVector<f64>, y: &DVector<f64>, x: &DVector<f64>, lambda: f64) -> f64 {
    0.5 * (y - mx).norm_squared() + lambda * x.lp_norm(1)
}

/// Lipschitz constant of the smooth part, padded slightly above the power
/// iteration estimate.
fn lipschitz(m: &MeasurementMatrix) -> f64 {
    let s = linalg::operator_norm(m.data());
    (s * s * 1.01).max(f64::MIN_POSITIVE)
}

/// FISTA with monotone restart for `1/2 ||y - M x||^2 + lambda ||x||_1`.
pub fn lasso(
    m: &MeasurementMatrix,
    y: &DVector<f64>,
    lambda: f64,
    max_iter: usize,
    tol: f64,
    warm: Option<&DVector<f64>>,
) -> Result<LassoSolution> {
    check_observation(m, y)?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!("lambda must be >= 0, got {lambda}")));
    }
    Ok(lasso_with(m, y, lambda, max_iter, tol, warm, lipschitz(m)))
}

fn lasso_with(
    m: &MeasurementMatrix,
    y: &DVector<f64>,
    lambda: f64,
    max_iter: usize,
    tol: f64,
    warm: Option<&DVector<f64>>,
    lip: f64,
) -> LassoSolution {
    let step = 1.0 / lip;
    let thresh = lambda * step;
    let mut x = warm.cloned().unwrap_or_else(|| DVector::zeros(m.cols()));
    let mut mx = m.apply(&x);
    let mut z = x.clone();
    let mut mz = mx.clone();
    let mut t = 1.0f64;
    let mut f = objective(&mx, y, &x, lambda);
    let mut trace = vec![f];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < max_iter {
        iterations += 1;
        let grad = m.apply_transpose(&(&mz - y));
        let mut x_new = linalg::soft_threshold(&(&z - grad * step), thresh);
        let mut mx_new = m.apply(&x_new);
        let mut f_new = objective(&mx_new, y, &x_new, lambda);
        if f_new > f {
            t = 1.0;
            let grad = m.apply_transpose(&(&mx - y));
            x_new = linalg::soft_threshold(&(&x - grad * step), thresh);
            mx_new = m.apply(&x_new);
            f_new = objective(&mx_new, y, &x_new, lambda);
            if f_new > f {
                // rounding-level increase: x is a fixed point to working precision
                converged = true;
                break;
            }
        }
        let t_new = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_new;
        let dx = &x_new - &x;
        let change = dx.norm();
        z = &x_new + &dx * beta;
        mz = &mx_new + (&mx_new - &mx) * beta;
        x = x_new;
        mx = mx_new;
        f = f_new;
        t = t_new;
        trace.push(f);
        if change <= tol * x.norm() || change == 0.0 {
            converged = true;
            break;
        }
    }

    LassoSolution {
        x,
        iterations,
        converged,
        objective: trace,
    }
}

/// Basis pursuit denoising with residual level `epsilon`.
///
/// The weight is searched in `[1e-10, 1] * ||M^T y||_inf`: first decade by
/// decade downward from the top, then by log-scale bisection inside the
/// decade where the residual crosses `epsilon`, with at most
/// `bisection_iter` Lagrangian solves in total.
///
/// `epsilon >= ||y||` returns the zero vector. If no weight in the bracket
/// reaches the residual level, the last solution is returned with
/// `infeasible_epsilon` set.
pub fn bpdn(m: &MeasurementMatrix, y: &DVector<f64>, epsilon: f64, opts: &BpdnOptions) -> Result<SolveResult> {
    check_observation(m, y)?;
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::Domain(format!("epsilon must be >= 0, got {epsilon}")));
    }
    let y_norm = y.norm();
    let target = if epsilon > 0.0 {
        epsilon
    } else {
        opts.residual_tol * y_norm
    };
    let lam_hi = m.apply_transpose(y).amax();
    if y_norm == 0.0 || target >= y_norm || lam_hi == 0.0 {
        return Ok(SolveResult {
            estimate: DVector::zeros(m.cols()),
            iterations: 0,
            residual_norm: y_norm,
            converged: target >= y_norm,
            flags: SolverFlags {
                infeasible_epsilon: target < y_norm,
                ..Default::default()
            },
            trace: vec![0.5 * y_norm * y_norm],
            lambda: Some(lam_hi),
        });
    }

    let lip = lipschitz(m);
    let band = opts.discrepancy_rtol * target;
    let lam_lo = lam_hi * 1e-10;
    let budget = opts.bisection_iter.max(1);
    let mut evals = 0;
    let mut warm: Option<DVector<f64>> = None;
    // largest-weight solution with residual <= target + band
    let mut feasible: Option<(f64, LassoSolution, f64)> = None;
    let mut last: Option<(f64, LassoSolution, f64)> = None;
    let mut accepted = false;
    let solve = |lambda: f64, warm: &mut Option<DVector<f64>>| {
        let sol = lasso_with(m, y, lambda, opts.max_iter, opts.tol, warm.as_ref(), lip);
        let res = (y - m.apply(&sol.x)).norm();
        *warm = Some(sol.x.clone());
        (sol, res)
    };

    // walk down one decade at a time from the top of the bracket until the
    // residual drops to the target, then bisect that decade in log scale
    let (mut lo, mut hi) = (lam_lo.ln(), lam_hi.ln());
    let mut lambda = lam_hi;
    while evals < budget {
        lambda = (lambda * 0.1).max(lam_lo);
        evals += 1;
        let (sol, res) = solve(lambda, &mut warm);
        let done = (res - target).abs() <= band;
        let below = res <= target + band;
        if below {
            feasible = Some((lambda, sol.clone(), res));
        }
        last = Some((lambda, sol, res));
        if done {
            accepted = true;
            break;
        }
        if res < target {
            lo = lambda.ln();
            hi = (lambda * 10.0).min(lam_hi).ln();
            break;
        }
        if lambda <= lam_lo {
            break;
        }
    }
    if !accepted && feasible.is_some() {
        while evals < budget {
            evals += 1;
            let mid = 0.5 * (lo + hi);
            let lambda = mid.exp();
            let (sol, res) = solve(lambda, &mut warm);
            let done = (res - target).abs() <= band;
            if res <= target + band && feasible.as_ref().is_none_or(|(l, _, _)| lambda > *l) {
                feasible = Some((lambda, sol.clone(), res));
            }
            last = Some((lambda, sol, res));
            if done {
                accepted = true;
                feasible = last.clone();
                break;
            }
            if res > target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }

    let infeasible = feasible.is_none();
    let (lambda, sol, res) = feasible.or(last).expect("at least one bisection step");
    Ok(SolveResult {
        estimate: sol.x,
        iterations: sol.iterations,
        residual_norm: res,
        converged: accepted || (!infeasible && sol.converged),
        flags: SolverFlags {
            infeasible_epsilon: infeasible,
            ..Default::default()
        },
        trace: sol.objective,
        lambda: Some(lambda),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{generate, EnsembleSpec};
    use crate::rip::scatter;

    #[test]
    fn large_epsilon_gives_zero() {
        let m = generate(&EnsembleSpec::gaussian(20, 40, 1)).unwrap();
        let y = DVector::from_fn(20, |i, _| i as f64 / 10.0);
        let r = bpdn(&m, &y, y.norm(), &BpdnOptions::default()).unwrap();
        assert_eq!(r.estimate, DVector::zeros(40));
        assert!(r.converged);
    }

    #[test]
    fn orthonormal_lasso_is_soft_threshold() {
        let m = MeasurementMatrix::fourier_basis(32).unwrap();
        let y = DVector::from_fn(32, |i, _| ((i * 13 % 7) as f64 - 3.0) / 2.0);
        let lambda = 0.4;
        let sol = lasso(&m, &y, lambda, 5000, 1e-14, None).unwrap();
        let closed = linalg::soft_threshold(&m.apply_transpose(&y), lambda);
        assert!((sol.x - closed).amax() < 1e-10);
    }

    #[test]
    fn objective_never_increases() {
        let m = generate(&EnsembleSpec::gaussian(30, 80, 6)).unwrap();
        let x = scatter(80, &[2, 9, 40, 77], &[1.0, -2.0, 0.5, 1.5]);
        let y = m.apply(&x);
        let sol = lasso(&m, &y, 0.01, 3000, 1e-13, None).unwrap();
        assert!(sol.objective.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn discrepancy_is_matched() {
        let m = generate(&EnsembleSpec::gaussian(60, 120, 2)).unwrap();
        let x = scatter(120, &[5, 50, 100], &[1.0, -1.0, 1.0]);
        let noise = DVector::from_fn(60, |i, _| 0.01 * (((i * 37) % 11) as f64 - 5.0) / 3.0);
        let y = m.apply(&x) + &noise;
        let eps = noise.norm();
        let r = bpdn(&m, &y, eps, &BpdnOptions::default()).unwrap();
        assert!(r.converged);
        assert!((r.residual_norm - eps).abs() <= 0.02 * eps, "{} vs {eps}", r.residual_norm);
    }

    #[test]
    fn noiseless_limit_recovers() {
        let m = generate(&EnsembleSpec::gaussian(50, 100, 3)).unwrap();
        let x = scatter(100, &[1, 30, 60, 99], &[1.0, -0.5, 2.0, 0.8]);
        let r = bpdn(&m, &m.apply(&x), 0.0, &BpdnOptions::default()).unwrap();
        assert!((&r.estimate - &x).norm() / x.norm() < 1e-5);
    }

    #[test]
    fn negative_epsilon_rejected() {
        let m = MeasurementMatrix::identity(3).unwrap();
        assert!(bpdn(&m, &DVector::zeros(3), -1.0, &BpdnOptions::default()).is_err());
    }
}

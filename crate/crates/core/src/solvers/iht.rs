use nalgebra::DVector;

use super::{check_observation, residual, SolveResult, SolverFlags};
use crate::error::{Error, Result};
use crate::linalg;
use crate::matrix::MeasurementMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Step {
    /// `1 / ||M||_2^2`.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IhtOptions {
    pub step: Step,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for IhtOptions {
    fn default() -> Self {
        Self {
            step: Step::Auto,
            max_iter: 500,
            tol: 1e-12,
        }
    }
}

/// Iterations over which residual growth is measured for divergence.
const DIVERGENCE_WINDOW: usize = 50;

/// Iterative hard thresholding: `x <- H_k(x + step * M^T (y - M x))`.
///
/// Stops when the relative residual or the relative iterate change falls
/// below `tol`. An update that moves `x` by at most `tol` relative is not
/// counted, so a fixed point confirmed at step `t` reports `t - 1`
/// iterations. A zero step returns the zero vector with `converged = false`.
pub fn iht(m: &MeasurementMatrix, y: &DVector<f64>, k: usize, opts: &IhtOptions) -> Result<SolveResult> {
    check_observation(m, y)?;
    if k > m.cols() {
        return Err(Error::Domain(format!("k = {k} exceeds {} columns", m.cols())));
    }
    let step = match opts.step {
        Step::Auto => {
            let s = linalg::operator_norm(m.data());
            if s == 0.0 {
                0.0
            } else {
                1.0 / (s * s)
            }
        }
        Step::Fixed(s) if s >= 0.0 && s.is_finite() => s,
        Step::Fixed(s) => return Err(Error::Domain(format!("step must be >= 0, got {s}"))),
    };

    let y_norm = y.norm();
    let mut x = DVector::zeros(m.cols());
    let mut flags = SolverFlags::default();
    if step == 0.0 {
        return Ok(SolveResult {
            estimate: x,
            iterations: 0,
            residual_norm: y_norm,
            converged: false,
            flags,
            trace: vec![],
            lambda: None,
        });
    }

    let mut r = y.clone();
    let mut res = y_norm;
    let mut trace: Vec<f64> = Vec::new();
    let mut iterations = 0;
    let mut converged = y_norm == 0.0;

    while !converged && iterations < opts.max_iter {
        let t = iterations + 1;
        let grad = m.apply_transpose(&r);
        let x_new = linalg::hard_threshold(&(&x + grad * step), k);
        let change = (&x_new - &x).norm();
        if change <= opts.tol * x_new.norm() {
            converged = true;
            break;
        }
        x = x_new;
        r = residual(m, y, &x);
        res = r.norm();
        trace.push(res);
        iterations = t;
        if res <= opts.tol * y_norm {
            converged = true;
        } else if t > DIVERGENCE_WINDOW && res > 10.0 * trace[t - 1 - DIVERGENCE_WINDOW] {
            flags.diverged = true;
            break;
        }
    }

    Ok(SolveResult {
        estimate: x,
        iterations,
        residual_norm: res,
        converged,
        flags,
        trace,
        lambda: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rip::scatter;

    #[test]
    fn identity_keeps_two_largest() {
        let m = MeasurementMatrix::identity(4).unwrap();
        let y = DVector::from_vec(vec![0.0, 3.0, 0.0, -1.0]);
        let r = iht(&m, &y, 2, &IhtOptions::default()).unwrap();
        assert_eq!(r.estimate, y);
        assert_eq!(r.iterations, 1);
        assert!(r.converged);
    }

    #[test]
    fn zero_step_returns_zero() {
        let m = MeasurementMatrix::identity(4).unwrap();
        let y = DVector::from_vec(vec![0.0, 3.0, 0.0, -1.0]);
        let opts = IhtOptions {
            step: Step::Fixed(0.0),
            ..Default::default()
        };
        let r = iht(&m, &y, 2, &opts).unwrap();
        assert_eq!(r.estimate, DVector::zeros(4));
        assert!(!r.converged);
    }

    #[test]
    fn orthonormal_unit_step_is_one_shot() {
        let m = MeasurementMatrix::fourier_basis(16).unwrap();
        let y = DVector::from_fn(16, |i, _| ((i * 7 % 5) as f64) - 2.0);
        let opts = IhtOptions {
            step: Step::Fixed(1.0),
            ..Default::default()
        };
        let one_shot = linalg::hard_threshold(&m.apply_transpose(&y), 3);
        let r = iht(&m, &y, 3, &opts).unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations, 1);
        assert!((r.estimate - one_shot).norm() < 1e-12);
    }

    #[test]
    fn at_most_k_nonzeros() {
        let m = MeasurementMatrix::fourier_basis(16).unwrap();
        let y = DVector::from_fn(16, |i, _| (i as f64).sin());
        let r = iht(&m, &y, 4, &IhtOptions::default()).unwrap();
        assert!(r.sparse().nnz() <= 4);
    }

    #[test]
    fn divergence_is_flagged() {
        let m = MeasurementMatrix::fourier_basis(8).unwrap();
        let x = scatter(8, &[1, 2], &[1.0, -1.0]);
        let y = m.apply(&x) + DVector::from_element(8, 0.1);
        let opts = IhtOptions {
            step: Step::Fixed(3.0),
            max_iter: 500,
            tol: 1e-12,
        };
        let r = iht(&m, &y, 8, &opts).unwrap();
        assert!(r.flags.diverged);
        assert!(!r.converged);
    }
}

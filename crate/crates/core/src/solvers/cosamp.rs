use nalgebra::DVector;

use super::{check_observation, residual, SolveResult, SolverFlags};
use crate::error::{Error, Result};
use crate::linalg;
use crate::matrix::MeasurementMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CosampOptions {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for CosampOptions {
    fn default() -> Self {
        Self {
            max_iter: 100,
            tol: 1e-12,
        }
    }
}

/// Compressive sampling matching pursuit.
///
/// Each iteration merges the `2k` strongest proxy entries with the current
/// support, solves least squares on the merged set and prunes back to `k`.
/// Stops when the residual is below `tol * ||y||`, when it stops improving by
/// more than that amount, or at `max_iter`.
pub fn cosamp(m: &MeasurementMatrix, y: &DVector<f64>, k: usize, opts: &CosampOptions) -> Result<SolveResult> {
    check_observation(m, y)?;
    if k > m.cols() {
        return Err(Error::Domain(format!("k = {k} exceeds {} columns", m.cols())));
    }
    let y_norm = y.norm();
    let floor = opts.tol * y_norm;
    let mut x = DVector::zeros(m.cols());
    let mut r = y.clone();
    let mut res = y_norm;
    let mut flags = SolverFlags::default();
    let mut trace = Vec::new();
    let mut converged = y_norm == 0.0 || k == 0;
    let mut iterations = 0;

    while !converged && iterations < opts.max_iter {
        iterations += 1;
        let proxy = m.apply_transpose(&r);
        let mut merged = linalg::top_k_indices(proxy.as_slice(), 2 * k);
        merged.extend(x.iter().enumerate().filter(|(_, &v)| v != 0.0).map(|(i, _)| i));
        merged.sort_unstable();
        merged.dedup();

        let sub = m.select_columns(&merged);
        let (b, ridge) = linalg::least_squares(&sub, y);
        flags.rank_deficient |= ridge;
        let mut full = DVector::zeros(m.cols());
        for (&i, &v) in merged.iter().zip(b.iter()) {
            full[i] = v;
        }
        x = linalg::hard_threshold(&full, k);
        r = residual(m, y, &x);
        let prev = res;
        res = r.norm();
        trace.push(res);
        if res <= floor || (prev - res).abs() <= floor {
            converged = true;
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

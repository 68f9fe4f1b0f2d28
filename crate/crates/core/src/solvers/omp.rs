use nalgebra::DVector;

use super::{check_observation, SolveResult, SolverFlags};
use crate::error::{Error, Result};
use crate::linalg;
use crate::matrix::MeasurementMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OmpStop {
    /// Select exactly this many atoms (fewer if the residual vanishes).
    Sparsity(usize),
    /// Select atoms until the residual norm drops to this level.
    ResidualTol(f64),
}

/// Orthogonal matching pursuit.
///
/// Each step adds the column most correlated with the residual and refits
/// the whole support by least squares, so the residual is always orthogonal
/// to the selected columns and its norm never increases.
pub fn omp(m: &MeasurementMatrix, y: &DVector<f64>, stop: OmpStop) -> Result<SolveResult> {
    check_observation(m, y)?;
    let max_atoms = match stop {
        OmpStop::Sparsity(k) => {
            if k > m.rows() || k > m.cols() {
                return Err(Error::Domain(format!(
                    "OMP sparsity {k} exceeds matrix dimensions {}x{}",
                    m.rows(),
                    m.cols()
                )));
            }
            k
        }
        OmpStop::ResidualTol(tol) => {
            if tol.is_nan() || tol < 0.0 {
                return Err(Error::Domain(format!("residual tolerance must be >= 0, got {tol}")));
            }
            m.rows().min(m.cols())
        }
    };
    let target = match stop {
        OmpStop::ResidualTol(tol) => tol,
        OmpStop::Sparsity(_) => 0.0,
    };

    let mut support: Vec<usize> = Vec::with_capacity(max_atoms);
    let mut coef = DVector::zeros(0);
    let mut r = y.clone();
    let mut res = r.norm();
    let mut trace = Vec::with_capacity(max_atoms);
    let mut flags = SolverFlags::default();

    while support.len() < max_atoms && res > target {
        let corr = m.apply_transpose(&r);
        let Some(j) = linalg::argmax_abs(&corr, &support) else {
            break;
        };
        if corr[j] == 0.0 {
            break;
        }
        support.push(j);
        let sub = m.select_columns(&support);
        let (c, ridge) = linalg::least_squares(&sub, y);
        flags.rank_deficient |= ridge;
        r = y - &sub * &c;
        coef = c;
        res = r.norm();
        trace.push(res);
    }

    let mut estimate = DVector::zeros(m.cols());
    for (&i, &v) in support.iter().zip(coef.iter()) {
        estimate[i] = v;
    }
    let converged = match stop {
        OmpStop::Sparsity(k) => support.len() == k || res == 0.0,
        OmpStop::ResidualTol(tol) => res <= tol,
    };
    Ok(SolveResult {
        estimate,
        iterations: support.len(),
        residual_norm: res,
        converged,
        flags,
        trace,
        lambda: None,
    })
}

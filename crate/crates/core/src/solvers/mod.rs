//! Sparse-recovery solvers and the Monte Carlo harness that runs them.
//!
//! All selection steps break ties toward the lowest column index.

mod bpdn;
mod cosamp;
mod iht;
mod omp;
pub mod trial;

pub use bpdn::{bpdn, lasso, BpdnOptions, LassoSolution};
pub use cosamp::{cosamp, CosampOptions};
pub use iht::{iht, IhtOptions, Step};
pub use omp::{omp, OmpStop};
pub use trial::{
    phase_csv, phase_curve, recovery_trial, recovery_trial_indexed, wilson_interval, MatrixSource,
    PhasePoint, SolverSpec, TrialResult,
};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::MeasurementMatrix;

/// Sparse vector stored as sorted support plus values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseSignal {
    pub dim: usize,
    pub support: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseSignal {
    pub fn new(dim: usize, support: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if support.len() != values.len() {
            return Err(Error::Dimension("support and values differ in length".into()));
        }
        if support.windows(2).any(|w| w[0] >= w[1]) || support.iter().any(|&i| i >= dim) {
            return Err(Error::Domain("support must be sorted, distinct and in range".into()));
        }
        if values.contains(&0.0) {
            return Err(Error::Domain("explicit zero on the support".into()));
        }
        Ok(Self {
            dim,
            support,
            values,
        })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            support: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Keeps the exact nonzeros of `x`.
    pub fn from_dense(x: &DVector<f64>) -> Self {
        let (support, values) = x
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(i, &v)| (i, v))
            .unzip();
        Self {
            dim: x.len(),
            support,
            values,
        }
    }

    pub fn to_dense(&self) -> DVector<f64> {
        let mut x = DVector::zeros(self.dim);
        for (&i, &v) in self.support.iter().zip(&self.values) {
            x[i] = v;
        }
        x
    }

    pub fn nnz(&self) -> usize {
        self.support.len()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverFlags {
    /// A least-squares step fell back to the ridge-regularized solve.
    pub rank_deficient: bool,
    pub diverged: bool,
    /// The requested residual level could not be reached.
    pub infeasible_epsilon: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub estimate: DVector<f64>,
    pub iterations: usize,
    pub residual_norm: f64,
    pub converged: bool,
    pub flags: SolverFlags,
    /// Residual norm per iteration for the greedy methods; objective value
    /// per accepted iteration for BPDN.
    pub trace: Vec<f64>,
    /// Lagrange weight chosen by BPDN.
    pub lambda: Option<f64>,
}

impl SolveResult {
    pub fn sparse(&self) -> SparseSignal {
        SparseSignal::from_dense(&self.estimate)
    }
}

pub(crate) fn check_observation(m: &MeasurementMatrix, y: &DVector<f64>) -> Result<()> {
    if y.len() != m.rows() {
        return Err(Error::Dimension(format!(
            "observation has length {} but the matrix has {} rows",
            y.len(),
            m.rows()
        )));
    }
    Ok(())
}

pub(crate) fn residual(m: &MeasurementMatrix, y: &DVector<f64>, x: &DVector<f64>) -> DVector<f64> {
    y - m.apply(x)
}

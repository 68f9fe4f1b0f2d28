use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{bpdn, cosamp, iht, omp, BpdnOptions, CosampOptions, IhtOptions, OmpStop, SolveResult, SolverFlags, SparseSignal};
use crate::error::{Error, Result};
use crate::matrix::{generate, EnsembleSpec, MeasurementMatrix};
use crate::report::fmt_g12;
use crate::rip::draw_sparse;
use crate::rng::{self, purpose, CoefficientModel};

/// Relative error at or below which a noiseless trial counts as a success.
pub const NOISELESS_SUCCESS_TOL: f64 = 1e-4;
/// In noisy trials an estimated entry is on the support when it exceeds this
/// many noise standard deviations.
pub const NOISY_SUPPORT_SIGMAS: f64 = 10.0;
/// In noiseless trials an entry is on the support when it exceeds this
/// fraction of the largest estimated magnitude.
pub const NOISELESS_SUPPORT_FRACTION: f64 = 1e-6;
/// BPDN residual level as a multiple of `sigma * sqrt(n)`.
pub const BPDN_EPSILON_FACTOR: f64 = 1.1;

const WILSON_Z: f64 = 1.959963984540054;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolverSpec {
    Omp,
    Iht(IhtOptions),
    Cosamp(CosampOptions),
    Bpdn(BpdnOptions),
}

impl SolverSpec {
    pub fn name(&self) -> &'static str {
        match self {
            SolverSpec::Omp => "omp",
            SolverSpec::Iht(_) => "iht",
            SolverSpec::Cosamp(_) => "cosamp",
            SolverSpec::Bpdn(_) => "bpdn",
        }
    }

    /// Runs the solver with sparsity `k`. BPDN ignores `k` and uses the
    /// residual level `1.1 * noise_sigma * sqrt(n)`.
    pub fn solve(&self, m: &MeasurementMatrix, y: &DVector<f64>, k: usize, noise_sigma: f64) -> Result<SolveResult> {
        match self {
            SolverSpec::Omp => omp(m, y, OmpStop::Sparsity(k)),
            SolverSpec::Iht(o) => iht(m, y, k, o),
            SolverSpec::Cosamp(o) => cosamp(m, y, k, o),
            SolverSpec::Bpdn(o) => bpdn(m, y, bpdn_epsilon(noise_sigma, m.rows()), o),
        }
    }
}

impl fmt::Display for SolverSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "omp" => Ok(SolverSpec::Omp),
            "iht" => Ok(SolverSpec::Iht(IhtOptions::default())),
            "cosamp" => Ok(SolverSpec::Cosamp(CosampOptions::default())),
            "bpdn" => Ok(SolverSpec::Bpdn(BpdnOptions::default())),
            other => Err(Error::Unsupported(format!("unknown solver '{other}'"))),
        }
    }
}

pub fn bpdn_epsilon(noise_sigma: f64, rows: usize) -> f64 {
    BPDN_EPSILON_FACTOR * noise_sigma * (rows as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub k: usize,
    pub seed: u64,
    pub truth: SparseSignal,
    pub estimate: SparseSignal,
    pub rel_error: f64,
    pub support_precision: f64,
    pub support_recall: f64,
    pub success: bool,
    pub iterations: usize,
    pub flags: SolverFlags,
}

/// Error and support statistics of one estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Score {
    pub rel_error: f64,
    pub precision: f64,
    pub recall: f64,
    pub success: bool,
}

/// Indices of `x` counted as nonzero under the noise-dependent threshold.
pub(crate) fn detected_support(x: &DVector<f64>, noise_sigma: f64) -> Vec<usize> {
    let thresh = if noise_sigma > 0.0 {
        NOISY_SUPPORT_SIGMAS * noise_sigma
    } else {
        NOISELESS_SUPPORT_FRACTION * x.amax()
    };
    x.iter()
        .enumerate()
        .filter(|(_, v)| v.abs() > thresh)
        .map(|(i, _)| i)
        .collect()
}

/// Relative error (absolute when the truth is zero) plus support precision
/// and recall.
pub(crate) fn score(truth: &DVector<f64>, estimate: &DVector<f64>, noise_sigma: f64) -> Score {
    let err = (estimate - truth).norm();
    let t_norm = truth.norm();
    let rel_error = if t_norm > 0.0 { err / t_norm } else { err };
    let true_support: Vec<usize> = truth
        .iter()
        .enumerate()
        .filter(|(_, &v)| v != 0.0)
        .map(|(i, _)| i)
        .collect();
    let found = detected_support(estimate, noise_sigma);
    let hits = found.iter().filter(|i| true_support.binary_search(i).is_ok()).count();
    let precision = if found.is_empty() {
        1.0
    } else {
        hits as f64 / found.len() as f64
    };
    let recall = if true_support.is_empty() {
        1.0
    } else {
        hits as f64 / true_support.len() as f64
    };
    let success = if noise_sigma > 0.0 {
        found == true_support
    } else {
        rel_error <= NOISELESS_SUCCESS_TOL
    };
    Score {
        rel_error,
        precision,
        recall,
        success,
    }
}

pub fn recovery_trial(
    m: &MeasurementMatrix,
    k: usize,
    spec: &SolverSpec,
    noise_sigma: f64,
    seed: u64,
) -> Result<TrialResult> {
    recovery_trial_indexed(m, k, spec, noise_sigma, seed, 0, CoefficientModel::Gaussian)
}

/// One trial drawn from stream `index` of `seed`: random k-sparse `x`,
/// `y = M x + noise_sigma * z`, then the solver.
pub fn recovery_trial_indexed(
    m: &MeasurementMatrix,
    k: usize,
    spec: &SolverSpec,
    noise_sigma: f64,
    seed: u64,
    index: u64,
    model: CoefficientModel,
) -> Result<TrialResult> {
    if k > m.cols() {
        return Err(Error::Domain(format!("k = {k} exceeds {} columns", m.cols())));
    }
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(Error::Domain(format!("noise sigma must be >= 0, got {noise_sigma}")));
    }
    let mut r = rng::stream(seed, purpose::TRIAL, index);
    let (support, values) = draw_sparse(&mut r, m.cols(), k, model);
    let mut y = m.combine(&support, &values);
    if noise_sigma > 0.0 {
        for v in y.iter_mut() {
            *v += noise_sigma * rng::standard_normal(&mut r);
        }
    }
    let truth = SparseSignal::new(m.cols(), support, values)?;
    let solved = spec.solve(m, &y, k, noise_sigma)?;
    let s = score(&truth.to_dense(), &solved.estimate, noise_sigma);
    Ok(TrialResult {
        k,
        seed,
        truth,
        estimate: solved.sparse(),
        rel_error: s.rel_error,
        support_precision: s.precision,
        support_recall: s.recall,
        success: s.success,
        iterations: solved.iterations,
        flags: solved.flags,
    })
}

/// Where each phase-curve trial gets its matrix.
#[derive(Debug, Clone, Copy)]
pub enum MatrixSource<'a> {
    Fixed(&'a MeasurementMatrix),
    /// A new draw per trial; the ensemble seed is ignored.
    Fresh(EnsembleSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub k: usize,
    pub trials: usize,
    pub successes: usize,
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Wilson score 95% interval for a binomial proportion.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = WILSON_Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// Success rates per sparsity. Trial `t` at position `i` of `k_list` uses
/// stream index `(i << 32) | t`.
pub fn phase_curve(
    source: MatrixSource<'_>,
    k_list: &[usize],
    spec: &SolverSpec,
    trials: usize,
    noise_sigma: f64,
    seed: u64,
) -> Result<Vec<PhasePoint>> {
    if k_list.is_empty() {
        return Err(Error::Domain("k list is empty".into()));
    }
    if k_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("k list must be strictly ascending".into()));
    }
    if trials == 0 {
        return Err(Error::Domain("trials must be at least 1".into()));
    }
    if let MatrixSource::Fresh(s) = source {
        s.validate()?;
    }
    k_list
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let outcomes = (0..trials)
                .into_par_iter()
                .map(|t| {
                    let index = ((i as u64) << 32) | t as u64;
                    let fresh;
                    let m = match source {
                        MatrixSource::Fixed(m) => m,
                        MatrixSource::Fresh(s) => {
                            let mseed = rng::stream(seed, purpose::PHASE_MATRIX, index).next_u64();
                            fresh = generate(&EnsembleSpec { seed: mseed, ..s })?;
                            &fresh
                        }
                    };
                    recovery_trial_indexed(m, k, spec, noise_sigma, seed, index, CoefficientModel::Gaussian)
                        .map(|r| r.success)
                })
                .collect::<Result<Vec<bool>>>()?;
            let successes = outcomes.iter().filter(|&&s| s).count();
            let (ci_low, ci_high) = wilson_interval(successes, trials);
            Ok(PhasePoint {
                k,
                trials,
                successes,
                rate: successes as f64 / trials as f64,
                ci_low,
                ci_high,
            })
        })
        .collect()
}

pub fn phase_csv(points: &[PhasePoint]) -> String {
    let mut s = String::from("k,trials,successes,rate,ci_low,ci_high\n");
    for p in points {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            p.k,
            p.trials,
            p.successes,
            fmt_g12(p.rate),
            fmt_g12(p.ci_low),
            fmt_g12(p.ci_high)
        ));
    }
    s
}

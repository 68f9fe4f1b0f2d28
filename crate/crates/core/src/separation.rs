//! Two-dictionary separation `y = D x + B e + n` solved as one BPDN problem
//! over the joint dictionary `[D, B]`.
//!
//! An absent `B` stands for a dictionary with zero columns.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{rip_width, separation_condition, RipVariant, SeparationCondition};
use crate::coherence::{cross_coherence, profile_matrix};
use crate::error::{Error, Result};
use crate::matrix::{EnsembleTag, MeasurementMatrix};
use crate::rip::{draw_sparse, fraction_in_band};
use crate::rng::{self, purpose, CoefficientModel};
use crate::solvers::trial::{bpdn_epsilon, score};
use crate::solvers::{bpdn, BpdnOptions, SolverFlags, SparseSignal, TrialResult};

/// Corruptions in robust recovery trials are this many times larger than
/// the signal coefficients.
pub const CORRUPTION_SCALE: f64 = 10.0;
/// Tolerance of the per-trial energy decomposition check.
pub const DECOMPOSITION_TOL: f64 = 1e-10;
/// A separation trial succeeds when both components are recovered to this
/// relative error.
pub const SEPARATION_SUCCESS_TOL: f64 = 1e-3;

/// `[D, B]`, D-block first. Without `B` this is `D` itself.
pub fn joint_dictionary(d: &MeasurementMatrix, b: Option<&MeasurementMatrix>) -> Result<MeasurementMatrix> {
    let Some(b) = b else {
        return Ok(d.clone());
    };
    if d.rows() != b.rows() {
        return Err(Error::Dimension(format!(
            "dictionaries have {} and {} rows",
            d.rows(),
            b.rows()
        )));
    }
    let mut data = DMatrix::zeros(d.rows(), d.cols() + b.cols());
    data.columns_mut(0, d.cols()).copy_from(d.data());
    data.columns_mut(d.cols(), b.cols()).copy_from(b.data());
    MeasurementMatrix::new(data, EnsembleTag::Custom, None)
}

#[derive(Debug, Clone)]
pub struct SeparationProblem<'a> {
    pub d: &'a MeasurementMatrix,
    pub b: Option<&'a MeasurementMatrix>,
    pub y: DVector<f64>,
    pub epsilon: f64,
    pub n_x: usize,
    pub n_e: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverStats {
    pub iterations: usize,
    pub residual_norm: f64,
    pub converged: bool,
    pub flags: SolverFlags,
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparationResult {
    pub x_hat: DVector<f64>,
    pub e_hat: DVector<f64>,
    /// `D x_hat`.
    pub feature_d: DVector<f64>,
    /// `B e_hat`, zero when there is no `B`.
    pub feature_b: DVector<f64>,
    /// `None` without `B` or with a zero claimed sparsity.
    pub condition: Option<SeparationCondition>,
    pub stats: SolverStats,
}

impl SeparationResult {
    pub fn x_sparse(&self) -> SparseSignal {
        SparseSignal::from_dense(&self.x_hat)
    }

    pub fn e_sparse(&self) -> SparseSignal {
        SparseSignal::from_dense(&self.e_hat)
    }
}

/// Measured standard deviation of the pairwise coherences; zero for a
/// single column.
fn measured_sigma(m: &MeasurementMatrix) -> Result<f64> {
    if m.cols() < 2 {
        return Ok(0.0);
    }
    Ok(profile_matrix(m, None)?.std)
}

/// Admissibility condition evaluated at the measured coherence statistics
/// of `D`, `B` and the cross products.
pub fn measured_condition(
    d: &MeasurementMatrix,
    b: Option<&MeasurementMatrix>,
    n_x: usize,
    n_e: usize,
) -> Result<Option<SeparationCondition>> {
    let Some(b) = b else {
        return Ok(None);
    };
    if n_x == 0 || n_e == 0 {
        return Ok(None);
    }
    let cross = cross_coherence(d, b)?;
    separation_condition(measured_sigma(d)?, measured_sigma(b)?, cross.sigma_mu_m, n_x, n_e).map(Some)
}

pub fn separate(problem: &SeparationProblem<'_>, opts: &BpdnOptions) -> Result<SeparationResult> {
    let condition = measured_condition(problem.d, problem.b, problem.n_x, problem.n_e)?;
    separate_with_condition(problem, condition, opts)
}

/// [`separate`] with a precomputed condition, for repeated trials on the
/// same dictionaries.
pub fn separate_with_condition(
    problem: &SeparationProblem<'_>,
    condition: Option<SeparationCondition>,
    opts: &BpdnOptions,
) -> Result<SeparationResult> {
    let d = problem.d;
    let joint = joint_dictionary(d, problem.b)?;
    let solved = bpdn(&joint, &problem.y, problem.epsilon, opts)?;
    let nx = d.cols();
    let x_hat = solved.estimate.rows(0, nx).into_owned();
    let e_hat = solved.estimate.rows(nx, joint.cols() - nx).into_owned();
    let feature_d = d.apply(&x_hat);
    let feature_b = match problem.b {
        Some(b) => b.apply(&e_hat),
        None => DVector::zeros(d.rows()),
    };
    Ok(SeparationResult {
        x_hat,
        e_hat,
        feature_d,
        feature_b,
        condition,
        stats: SolverStats {
            iterations: solved.iterations,
            residual_norm: solved.residual_norm,
            converged: solved.converged,
            flags: solved.flags,
            lambda: solved.lambda,
        },
    })
}

/// Robust recovery against `n_e` sparse corruptions of the measurements:
/// `B` is the identity, `y = D x + e + noise` with corruption values
/// `CORRUPTION_SCALE` times standard Gaussian. Scores the estimate of `x`.
pub fn robust_recovery_trial(
    d: &MeasurementMatrix,
    k: usize,
    n_e: usize,
    noise_sigma: f64,
    seed: u64,
) -> Result<TrialResult> {
    robust_recovery_trial_indexed(d, k, n_e, noise_sigma, seed, 0)
}

pub fn robust_recovery_trial_indexed(
    d: &MeasurementMatrix,
    k: usize,
    n_e: usize,
    noise_sigma: f64,
    seed: u64,
    index: u64,
) -> Result<TrialResult> {
    let n = d.rows();
    if n_e > n {
        return Err(Error::Domain(format!("{n_e} corruptions exceed {n} measurements")));
    }
    if k > d.cols() {
        return Err(Error::Domain(format!("k = {k} exceeds {} columns", d.cols())));
    }
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(Error::Domain(format!("noise sigma must be >= 0, got {noise_sigma}")));
    }
    let mut r = rng::stream(seed, purpose::SEPARATION, index);
    let (support, values) = draw_sparse(&mut r, d.cols(), k, CoefficientModel::Gaussian);
    let (e_support, e_values) = draw_sparse(&mut r, n, n_e, CoefficientModel::Gaussian);
    let mut y = d.combine(&support, &values);
    for (&i, &v) in e_support.iter().zip(&e_values) {
        y[i] += CORRUPTION_SCALE * v;
    }
    if noise_sigma > 0.0 {
        for v in y.iter_mut() {
            *v += noise_sigma * rng::standard_normal(&mut r);
        }
    }
    let truth = SparseSignal::new(d.cols(), support, values)?;
    let identity = MeasurementMatrix::identity(n)?;
    let b = (n_e > 0).then_some(&identity);
    let problem = SeparationProblem {
        d,
        b,
        y,
        epsilon: bpdn_epsilon(noise_sigma, n),
        n_x: k,
        n_e,
    };
    let res = separate_with_condition(&problem, None, &BpdnOptions::default())?;
    let s = score(&truth.to_dense(), &res.x_hat, noise_sigma);
    Ok(TrialResult {
        k,
        seed,
        truth,
        estimate: res.x_sparse(),
        rel_error: s.rel_error,
        support_precision: s.precision,
        support_recall: s.recall,
        success: s.success,
        iterations: res.stats.iterations,
        flags: res.stats.flags,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparationTrial {
    pub x_rel_error: f64,
    pub e_rel_error: f64,
    pub iterations: usize,
    pub flags: SolverFlags,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationSummary {
    pub n_x: usize,
    pub n_e: usize,
    pub trials: usize,
    pub noise_sigma: f64,
    pub epsilon: f64,
    pub mean_x_rel_error: f64,
    pub mean_e_rel_error: f64,
    pub max_x_rel_error: f64,
    pub max_e_rel_error: f64,
    pub successes: usize,
    pub condition: SeparationCondition,
    pub per_trial: Vec<SeparationTrial>,
}

fn rel_error(truth: &DVector<f64>, est: &DVector<f64>) -> f64 {
    let t = truth.norm();
    let e = (est - truth).norm();
    if t > 0.0 {
        e / t
    } else {
        e
    }
}

/// Random separation trials: `x` with `n_x` Gaussian entries on `D`, `e`
/// with `n_e` Gaussian entries on `B`, `y = D x + B e + noise`.
/// `epsilon` defaults to `1.1 * noise_sigma * sqrt(n)`.
#[allow(clippy::too_many_arguments)]
pub fn separation_experiment(
    d: &MeasurementMatrix,
    b: &MeasurementMatrix,
    n_x: usize,
    n_e: usize,
    trials: usize,
    noise_sigma: f64,
    epsilon: Option<f64>,
    seed: u64,
) -> Result<SeparationSummary> {
    if trials == 0 {
        return Err(Error::Domain("trials must be at least 1".into()));
    }
    if n_x > d.cols() || n_e > b.cols() {
        return Err(Error::Domain(format!(
            "sparsities ({n_x}, {n_e}) exceed dictionary sizes ({}, {})",
            d.cols(),
            b.cols()
        )));
    }
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(Error::Domain(format!("noise sigma must be >= 0, got {noise_sigma}")));
    }
    let cross = cross_coherence(d, b)?;
    let condition = separation_condition(
        measured_sigma(d)?,
        measured_sigma(b)?,
        cross.sigma_mu_m,
        n_x.max(1),
        n_e.max(1),
    )?;
    let epsilon = epsilon.unwrap_or_else(|| bpdn_epsilon(noise_sigma, d.rows()));
    let per_trial = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut r = rng::stream(seed, purpose::SEPARATION, t as u64);
            let (xs, xv) = draw_sparse(&mut r, d.cols(), n_x, CoefficientModel::Gaussian);
            let (es, ev) = draw_sparse(&mut r, b.cols(), n_e, CoefficientModel::Gaussian);
            let mut y = d.combine(&xs, &xv) + b.combine(&es, &ev);
            if noise_sigma > 0.0 {
                for v in y.iter_mut() {
                    *v += noise_sigma * rng::standard_normal(&mut r);
                }
            }
            let problem = SeparationProblem {
                d,
                b: Some(b),
                y,
                epsilon,
                n_x,
                n_e,
            };
            let res = separate_with_condition(&problem, Some(condition), &BpdnOptions::default())?;
            let x = SparseSignal::new(d.cols(), xs, xv)?.to_dense();
            let e = SparseSignal::new(b.cols(), es, ev)?.to_dense();
            Ok(SeparationTrial {
                x_rel_error: rel_error(&x, &res.x_hat),
                e_rel_error: rel_error(&e, &res.e_hat),
                iterations: res.stats.iterations,
                flags: res.stats.flags,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let n = trials as f64;
    let fold = |f: fn(&SeparationTrial) -> f64| per_trial.iter().map(f).fold(0.0f64, f64::max);
    Ok(SeparationSummary {
        n_x,
        n_e,
        trials,
        noise_sigma,
        epsilon,
        mean_x_rel_error: per_trial.iter().map(|t| t.x_rel_error).sum::<f64>() / n,
        mean_e_rel_error: per_trial.iter().map(|t| t.e_rel_error).sum::<f64>() / n,
        max_x_rel_error: fold(|t| t.x_rel_error),
        max_e_rel_error: fold(|t| t.e_rel_error),
        successes: per_trial
            .iter()
            .filter(|t| t.x_rel_error <= SEPARATION_SUCCESS_TOL && t.e_rel_error <= SEPARATION_SUCCESS_TOL)
            .count(),
        condition,
        per_trial,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointRipReport {
    pub n_x: usize,
    pub n_e: usize,
    pub trials: usize,
    pub seed: u64,
    pub g_joint: f64,
    /// Fraction of ratios inside `[1 - g_joint, 1 + g_joint]`.
    pub in_band: f64,
    pub g_joint_scaled: f64,
    pub in_band_scaled: f64,
    /// Largest gap between `||D~ x~||^2` and
    /// `||D x||^2 + ||B e||^2 + 2 <D x, B e>` over the trials.
    pub max_decomposition_error: f64,
    pub decomposition_ok: bool,
    pub ratios: Vec<f64>,
}

/// Monte Carlo check of the joint isometry band over random `(n_x, n_e)`
/// sparse pairs, using the widths from the measured coherence statistics.
/// Without `B` this is the single-dictionary band at sparsity `n_x`.
pub fn joint_rip_check(
    d: &MeasurementMatrix,
    b: Option<&MeasurementMatrix>,
    n_x: usize,
    n_e: usize,
    trials: usize,
    seed: u64,
) -> Result<JointRipReport> {
    if trials == 0 {
        return Err(Error::Domain("trials must be at least 1".into()));
    }
    let n_e = if b.is_some() { n_e } else { 0 };
    if n_x + n_e == 0 {
        return Err(Error::Domain("need at least one nonzero coefficient".into()));
    }
    if n_x > d.cols() || b.is_some_and(|b| n_e > b.cols()) {
        return Err(Error::Domain("sparsity exceeds dictionary size".into()));
    }
    let (g_joint, g_joint_scaled) = match b {
        Some(b) if n_x > 0 && n_e > 0 => {
            let c = measured_condition(d, Some(b), n_x, n_e)?.expect("both blocks present");
            (c.g_joint, c.g_joint_scaled)
        }
        Some(b) if n_x == 0 => {
            let g = rip_width(n_e, measured_sigma(b)?, RipVariant::Thm1).g;
            (g, g)
        }
        _ => {
            let g = rip_width(n_x, measured_sigma(d)?, RipVariant::Thm1).g;
            (g, g)
        }
    };

    let pairs: Vec<(f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut r = rng::stream(seed, purpose::JOINT_RIP, t as u64);
            let (xs, xv) = draw_sparse(&mut r, d.cols(), n_x, CoefficientModel::Gaussian);
            let dx = d.combine(&xs, &xv);
            let mut energy = xv.iter().map(|v| v * v).sum::<f64>();
            let (direct, split) = match b {
                Some(b) => {
                    let (es, ev) = draw_sparse(&mut r, b.cols(), n_e, CoefficientModel::Gaussian);
                    energy += ev.iter().map(|v| v * v).sum::<f64>();
                    let be = b.combine(&es, &ev);
                    let direct = (&dx + &be).norm_squared();
                    (direct, dx.norm_squared() + be.norm_squared() + 2.0 * dx.dot(&be))
                }
                None => (dx.norm_squared(), dx.norm_squared()),
            };
            (direct / energy, (direct - split).abs())
        })
        .collect();
    let ratios: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let max_err = pairs.iter().map(|p| p.1).fold(0.0, f64::max);
    Ok(JointRipReport {
        n_x,
        n_e,
        trials,
        seed,
        g_joint,
        in_band: fraction_in_band(&ratios, g_joint),
        g_joint_scaled,
        in_band_scaled: fraction_in_band(&ratios, g_joint_scaled),
        max_decomposition_error: max_err,
        decomposition_ok: max_err <= DECOMPOSITION_TOL,
        ratios,
    })
}

/// Spikes (identity) and the orthonormal real Fourier basis of size `n`.
pub fn spikes_fourier(n: usize) -> Result<(MeasurementMatrix, MeasurementMatrix)> {
    Ok((MeasurementMatrix::identity(n)?, MeasurementMatrix::fourier_basis(n)?))
}

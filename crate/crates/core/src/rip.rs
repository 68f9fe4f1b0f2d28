//! Monte Carlo checks of the statistical isometry band and its tail bounds.
//!
//! Trial `t` of every sampler draws from `stream(seed, purpose, t)`, so a
//! sample is identical at any rayon thread count, and values are stored in
//! trial order.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::matrix::MeasurementMatrix;
use crate::rng::{self, purpose, CoefficientModel};

/// Ratios `||D x||^2 / ||x||^2` over random k-sparse `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioSample {
    pub values: Vec<f64>,
    pub k: usize,
    pub trials: usize,
    pub seed: u64,
    pub coeff_model: CoefficientModel,
}

/// Spectral deviations `||D_S^T D_S - I||_2` over random supports `S`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSample {
    pub values: Vec<f64>,
    pub k: usize,
    pub trials: usize,
    pub seed: u64,
}

/// A sample whose exceedances can be compared against a tail bound.
pub trait TailStatistic {
    /// Nonnegative deviations from the ideal value.
    fn deviations(&self) -> Vec<f64>;
    fn trials(&self) -> usize;
}

impl TailStatistic for RatioSample {
    fn deviations(&self) -> Vec<f64> {
        self.values.iter().map(|r| (r - 1.0).abs()).collect()
    }

    fn trials(&self) -> usize {
        self.trials
    }
}

impl TailStatistic for SpectralSample {
    fn deviations(&self) -> Vec<f64> {
        self.values.clone()
    }

    fn trials(&self) -> usize {
        self.trials
    }
}

/// Random k-sparse coefficients: sorted support and matching values.
pub fn draw_sparse<R: rand::Rng>(
    rng: &mut R,
    dim: usize,
    k: usize,
    model: CoefficientModel,
) -> (Vec<usize>, Vec<f64>) {
    let support = rng::random_support(rng, dim, k);
    let values = model.draw(rng, k);
    (support, values)
}

fn check_k(m: &MeasurementMatrix, k: usize, trials: usize) -> Result<()> {
    if k == 0 || k > m.cols() {
        return Err(Error::Domain(format!(
            "k must be in 1..={}, got {k}",
            m.cols()
        )));
    }
    if trials == 0 {
        return Err(Error::Domain("trials must be at least 1".into()));
    }
    Ok(())
}

pub fn sample_ratios(
    m: &MeasurementMatrix,
    k: usize,
    trials: usize,
    seed: u64,
    coeff_model: CoefficientModel,
) -> Result<RatioSample> {
    check_k(m, k, trials)?;
    let values = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut r = rng::stream(seed, purpose::RATIO, t as u64);
            let (support, x) = draw_sparse(&mut r, m.cols(), k, coeff_model);
            let y = m.combine(&support, &x);
            y.norm_squared() / x.iter().map(|v| v * v).sum::<f64>()
        })
        .collect();
    Ok(RatioSample {
        values,
        k,
        trials,
        seed,
        coeff_model,
    })
}

/// Allowance for rounding at the band edges, so that an orthonormal matrix
/// sits inside a zero-width band.
pub const BAND_ROUNDING: f64 = 1e-12;

/// Fraction of ratios inside `[1 - g, 1 + g]`, widened by [`BAND_ROUNDING`].
pub fn band_frequency(sample: &RatioSample, g: f64) -> f64 {
    fraction_in_band(&sample.values, g)
}

pub(crate) fn fraction_in_band(ratios: &[f64], g: f64) -> f64 {
    if ratios.is_empty() {
        return 0.0;
    }
    let w = g + BAND_ROUNDING;
    let inside = ratios.iter().filter(|&&r| (r - 1.0).abs() <= w).count();
    inside as f64 / ratios.len() as f64
}

/// `||D x||^2` two ways: directly, and as `||x||^2 + sum_{i != j} mu_ij x_i x_j`
/// from pairwise column inner products.
pub fn energy_two_ways(m: &MeasurementMatrix, support: &[usize], x: &[f64]) -> (f64, f64) {
    let direct = m.combine(support, x).norm_squared();
    let d = m.data();
    let mut via = x.iter().map(|v| v * v).sum::<f64>();
    for (a, &i) in support.iter().enumerate() {
        for (b, &j) in support.iter().enumerate() {
            if a != b {
                via += d.column(i).dot(&d.column(j)) * x[a] * x[b];
            }
        }
    }
    (direct, via)
}

fn check_support(m: &MeasurementMatrix, support: &[usize]) -> Result<()> {
    let mut seen = support.to_vec();
    seen.sort_unstable();
    if seen.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Domain("support contains duplicate indices".into()));
    }
    if let Some(&bad) = seen.iter().find(|&&i| i >= m.cols()) {
        return Err(Error::Domain(format!(
            "column index {bad} out of range for {} columns",
            m.cols()
        )));
    }
    Ok(())
}

/// `||D_S^T D_S - I||_2` for the columns in `support`.
pub fn spectral_deviation(m: &MeasurementMatrix, support: &[usize]) -> Result<f64> {
    check_support(m, support)?;
    Ok(gram_deviation_norm(&m.select_columns(support)))
}

fn gram_deviation_norm(sub: &DMatrix<f64>) -> f64 {
    let mut g = sub.tr_mul(sub);
    for i in 0..g.nrows() {
        g[(i, i)] -= 1.0;
    }
    linalg::symmetric_norm(&g)
}

pub fn sample_spectral(m: &MeasurementMatrix, k: usize, trials: usize, seed: u64) -> Result<SpectralSample> {
    check_k(m, k, trials)?;
    let values = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut r = rng::stream(seed, purpose::SPECTRAL, t as u64);
            let support = rng::random_support(&mut r, m.cols(), k);
            gram_deviation_norm(&m.select_columns(&support))
        })
        .collect();
    Ok(SpectralSample {
        values,
        k,
        trials,
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailPoint {
    pub t: f64,
    pub empirical: f64,
    pub bound: f64,
    pub slack: f64,
    pub ok: bool,
}

/// Binomial slack: two standard errors of a frequency at `bound`, plus one
/// trial's worth.
pub fn binomial_slack(bound: f64, trials: usize) -> f64 {
    let n = trials as f64;
    let b = bound.clamp(0.0, 1.0);
    2.0 * (b * (1.0 - b) / n).sqrt() + 1.0 / n
}

/// Empirical `Pr(deviation > t)` against `bound_fn(t)` on each grid point.
pub fn tail_check<S: TailStatistic + ?Sized>(
    sample: &S,
    t_grid: &[f64],
    bound_fn: impl Fn(f64) -> f64,
) -> Vec<TailPoint> {
    let dev = sample.deviations();
    let trials = sample.trials().max(1);
    t_grid
        .iter()
        .map(|&t| {
            let exceed = dev.iter().filter(|&&d| d > t).count();
            let empirical = exceed as f64 / trials as f64;
            let bound = bound_fn(t);
            let slack = binomial_slack(bound, trials);
            TailPoint {
                t,
                empirical,
                bound,
                slack,
                ok: empirical <= bound + slack,
            }
        })
        .collect()
}

/// Writes one value per row, for external plotting.
pub fn ratio_values_csv(sample: &RatioSample) -> String {
    values_csv("ratio", &sample.values)
}

pub fn spectral_values_csv(sample: &SpectralSample) -> String {
    values_csv("spectral_deviation", &sample.values)
}

fn values_csv(header: &str, values: &[f64]) -> String {
    let mut s = format!("{header}\n");
    for v in values {
        s.push_str(&crate::report::fmt_g12(*v));
        s.push('\n');
    }
    s
}

/// Coefficient vector with `values` placed on `support`.
pub fn scatter(dim: usize, support: &[usize], values: &[f64]) -> DVector<f64> {
    let mut x = DVector::zeros(dim);
    for (&i, &v) in support.iter().zip(values) {
        x[i] = v;
    }
    x
}

//! Pairwise column coherences and their statistics.
//!
//! The coherence sample of a column-normalized matrix is the list of inner
//! products `<d_i, d_j>` for all pairs `i < j`, in lexicographic pair order.
//! Statistics are computed from it as if the values were i.i.d.; they are not
//! (pairs sharing a column are correlated), and [`normality_check`] exists to
//! show how far a given matrix is from the Gaussian picture.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{MeasurementMatrix, NORMALIZED_TOL};

/// Columns per Gram row block.
const BLOCK: usize = 256;
/// Row blocks computed concurrently before being folded in order.
const BATCH: usize = 8;
/// Above this many columns the profile is computed without materializing
/// the sample.
pub const STREAMING_THRESHOLD: usize = 5000;
pub const MAX_DEFAULT_BINS: usize = 512;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceSample {
    pub values: Vec<f64>,
    /// `(n, N)` of the matrix the sample came from.
    pub source_dims: (usize, usize),
}

impl CoherenceSample {
    pub fn count(&self) -> usize {
        self.values.len()
    }

    /// Position of pair `(i, j)`, `i < j`, in `values`.
    pub fn pair_index(&self, i: usize, j: usize) -> usize {
        pair_index(self.source_dims.1, i, j)
    }
}

pub fn pair_count(cols: usize) -> usize {
    cols * cols.saturating_sub(1) / 2
}

pub fn pair_index(cols: usize, i: usize, j: usize) -> usize {
    assert!(i < j && j < cols, "pair ({i}, {j}) out of order or range");
    i * cols - i * (i + 1) / 2 + (j - i - 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
}

/// Central moments kept alongside a profile so the normality check can run
/// on streamed statistics too.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub m2: f64,
    pub m4: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceProfile {
    pub mutual_coherence: f64,
    pub mean: f64,
    /// Population standard deviation (divides by the count).
    pub std: f64,
    pub histogram: Vec<HistogramBin>,
    pub sample_count: usize,
    pub moments: Moments,
    /// Rows of the source matrix.
    pub rows: usize,
}

/// Square-root rule, capped at [`MAX_DEFAULT_BINS`].
pub fn default_bins(count: usize) -> usize {
    ((count as f64).sqrt().ceil() as usize).clamp(1, MAX_DEFAULT_BINS)
}

#[derive(Debug, Clone, Copy)]
struct FirstPass {
    count: usize,
    sum: f64,
    min: f64,
    max: f64,
    max_abs: f64,
}

impl FirstPass {
    fn new() -> Self {
        Self {
            count: 0,
            sum: 0.0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            max_abs: 0.0,
        }
    }

    fn push(&mut self, v: f64) {
        self.count += 1;
        self.sum += v;
        self.min = self.min.min(v);
        self.max = self.max.max(v);
        self.max_abs = self.max_abs.max(v.abs());
    }

    fn mean(&self) -> f64 {
        self.sum / self.count as f64
    }
}

struct SecondPass {
    mean: f64,
    min: f64,
    width: f64,
    s2: f64,
    s4: f64,
    counts: Vec<usize>,
}

impl SecondPass {
    fn new(first: &FirstPass, bins: usize) -> Self {
        Self {
            mean: first.mean(),
            min: first.min,
            width: (first.max - first.min) / bins as f64,
            s2: 0.0,
            s4: 0.0,
            counts: vec![0; bins],
        }
    }

    fn push(&mut self, v: f64) {
        let d = v - self.mean;
        let d2 = d * d;
        self.s2 += d2;
        self.s4 += d2 * d2;
        let bins = self.counts.len();
        let b = if self.width > 0.0 {
            (((v - self.min) / self.width) as usize).min(bins - 1)
        } else {
            0
        };
        self.counts[b] += 1;
    }

    fn finish(self, first: &FirstPass, rows: usize) -> CoherenceProfile {
        let count = first.count as f64;
        let m2 = self.s2 / count;
        let m4 = self.s4 / count;
        let bins = self.counts.len();
        let histogram = self
            .counts
            .iter()
            .enumerate()
            .map(|(b, &c)| HistogramBin {
                lower: first.min + b as f64 * self.width,
                upper: if b + 1 == bins {
                    first.max
                } else {
                    first.min + (b + 1) as f64 * self.width
                },
                count: c,
            })
            .collect();
        CoherenceProfile {
            mutual_coherence: first.max_abs,
            mean: self.mean,
            std: m2.sqrt(),
            histogram,
            sample_count: first.count,
            moments: Moments {
                m2,
                m4,
                min: first.min,
                max: first.max,
            },
            rows,
        }
    }
}

/// Gram entries `<d_i, d_j>` for rows `i` in block `b`, all `j > i`,
/// in lexicographic order.
fn block_values(data: &DMatrix<f64>, b: usize) -> Vec<f64> {
    let cols = data.ncols();
    let i0 = b * BLOCK;
    let i1 = (i0 + BLOCK).min(cols);
    let left = data.columns(i0, i1 - i0);
    let right = data.columns(i0, cols - i0);
    let g = left.tr_mul(&right);
    let mut out = Vec::with_capacity((i1 - i0) * (cols - i0));
    for i in i0..i1 {
        for j in (i + 1)..cols {
            out.push(g[(i - i0, j - i0)]);
        }
    }
    out
}

/// Visits every coherence value in lexicographic pair order. Blocks are
/// computed in parallel; the visit order is fixed.
fn for_each_value(data: &DMatrix<f64>, mut f: impl FnMut(f64)) {
    let blocks = data.ncols().div_ceil(BLOCK);
    let ids: Vec<usize> = (0..blocks).collect();
    for batch in ids.chunks(BATCH) {
        let vals: Vec<Vec<f64>> = batch.par_iter().map(|&b| block_values(data, b)).collect();
        for v in vals.iter().flatten() {
            f(*v);
        }
    }
}

pub fn coherence_sample(m: &MeasurementMatrix) -> Result<CoherenceSample> {
    m.check_normalized(NORMALIZED_TOL)?;
    let mut values = Vec::with_capacity(pair_count(m.cols()));
    for_each_value(m.data(), |v| values.push(v));
    Ok(CoherenceSample {
        values,
        source_dims: (m.rows(), m.cols()),
    })
}

pub fn profile(sample: &CoherenceSample, bins: usize) -> Result<CoherenceProfile> {
    if sample.values.is_empty() {
        return Err(Error::InsufficientData(
            "coherence sample is empty (fewer than two columns)".into(),
        ));
    }
    if bins == 0 {
        return Err(Error::Domain("histogram needs at least one bin".into()));
    }
    let mut first = FirstPass::new();
    sample.values.iter().for_each(|&v| first.push(v));
    let mut second = SecondPass::new(&first, bins);
    sample.values.iter().for_each(|&v| second.push(v));
    Ok(second.finish(&first, sample.source_dims.0))
}

/// Profile computed straight from the matrix in two streamed passes, never
/// holding more than a batch of Gram blocks. Bit-identical to
/// `profile(&coherence_sample(m)?, bins)`.
pub fn profile_streaming(m: &MeasurementMatrix, bins: usize) -> Result<CoherenceProfile> {
    m.check_normalized(NORMALIZED_TOL)?;
    if m.cols() < 2 {
        return Err(Error::InsufficientData(
            "coherence sample is empty (fewer than two columns)".into(),
        ));
    }
    if bins == 0 {
        return Err(Error::Domain("histogram needs at least one bin".into()));
    }
    let mut first = FirstPass::new();
    for_each_value(m.data(), |v| first.push(v));
    let mut second = SecondPass::new(&first, bins);
    for_each_value(m.data(), |v| second.push(v));
    Ok(second.finish(&first, m.rows()))
}

/// Picks the materialized or streamed path by column count.
pub fn profile_matrix(m: &MeasurementMatrix, bins: Option<usize>) -> Result<CoherenceProfile> {
    let bins = bins.unwrap_or_else(|| default_bins(pair_count(m.cols())));
    if m.cols() > STREAMING_THRESHOLD {
        profile_streaming(m, bins)
    } else {
        profile(&coherence_sample(m)?, bins)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalityThresholds {
    pub max_abs_z_mean: f64,
    pub max_abs_excess_kurtosis: f64,
    /// Added to `sqrt(2 ln count)`, the typical largest |z| of a Gaussian
    /// sample, to get the outlier cutoff.
    pub outlier_slack: f64,
    pub min_count: usize,
}

impl Default for NormalityThresholds {
    fn default() -> Self {
        Self {
            max_abs_z_mean: 4.0,
            max_abs_excess_kurtosis: 0.5,
            outlier_slack: 3.0,
            min_count: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub z_mean: f64,
    /// `std^2 * n`; about 1 for the Gaussian ensemble.
    pub var_ratio: f64,
    pub excess_kurtosis: f64,
    /// Largest `|v - mean| / std` in the sample.
    pub max_abs_z: f64,
    pub outlier: bool,
    pub degenerate_variance: bool,
    pub pass: bool,
}

pub fn normality_check(sample: &CoherenceSample, thresholds: &NormalityThresholds) -> Result<FitReport> {
    let p = profile(sample, 1)?;
    normality_from_profile(&p, thresholds)
}

pub fn normality_from_profile(p: &CoherenceProfile, thresholds: &NormalityThresholds) -> Result<FitReport> {
    if p.sample_count < thresholds.min_count {
        return Err(Error::InsufficientData(format!(
            "normality check needs at least {} values, got {}",
            thresholds.min_count, p.sample_count
        )));
    }
    let count = p.sample_count as f64;
    let var_ratio = p.moments.m2 * p.rows as f64;
    if p.std == 0.0 {
        return Ok(FitReport {
            z_mean: 0.0,
            var_ratio,
            excess_kurtosis: 0.0,
            max_abs_z: 0.0,
            outlier: false,
            degenerate_variance: true,
            pass: false,
        });
    }
    let z_mean = p.mean / (p.std / count.sqrt());
    let excess_kurtosis = p.moments.m4 / (p.moments.m2 * p.moments.m2) - 3.0;
    let spread = (p.moments.max - p.mean).abs().max((p.moments.min - p.mean).abs());
    let max_abs_z = spread / p.std;
    let outlier = max_abs_z > (2.0 * count.ln()).sqrt() + thresholds.outlier_slack;
    let pass = z_mean.abs() <= thresholds.max_abs_z_mean
        && excess_kurtosis.abs() <= thresholds.max_abs_excess_kurtosis
        && !outlier;
    Ok(FitReport {
        z_mean,
        var_ratio,
        excess_kurtosis,
        max_abs_z,
        outlier,
        degenerate_variance: false,
        pass,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossCoherenceProfile {
    pub mu_m: f64,
    pub sigma_mu_m: f64,
    pub mean: f64,
    pub sample_count: usize,
}

/// Statistics of `<d_i, b_j>` over all `N_x * N_e` pairs.
pub fn cross_coherence(d: &MeasurementMatrix, b: &MeasurementMatrix) -> Result<CrossCoherenceProfile> {
    if d.rows() != b.rows() {
        return Err(Error::Dimension(format!(
            "dictionaries have {} and {} rows",
            d.rows(),
            b.rows()
        )));
    }
    d.check_normalized(NORMALIZED_TOL)?;
    b.check_normalized(NORMALIZED_TOL)?;
    let g = d.data().tr_mul(b.data());
    let mut first = FirstPass::new();
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            first.push(g[(i, j)]);
        }
    }
    let mean = first.mean();
    let mut s2 = 0.0;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            s2 += (g[(i, j)] - mean).powi(2);
        }
    }
    Ok(CrossCoherenceProfile {
        mu_m: first.max_abs,
        sigma_mu_m: (s2 / first.count as f64).sqrt(),
        mean,
        sample_count: first.count,
    })
}

/// CSV with columns `bin_lower,bin_upper,count`.
pub fn histogram_csv(p: &CoherenceProfile) -> String {
    let mut s = String::from("bin_lower,bin_upper,count\n");
    for b in &p.histogram {
        s.push_str(&format!(
            "{},{},{}\n",
            crate::report::fmt_g12(b.lower),
            crate::report::fmt_g12(b.upper),
            b.count
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{generate, EnsembleSpec};

    fn frac_sqrt2() -> f64 {
        std::f64::consts::FRAC_1_SQRT_2
    }

    #[test]
    fn identity_sample_is_zero() {
        let s = coherence_sample(&MeasurementMatrix::identity(3).unwrap()).unwrap();
        assert_eq!(s.values, vec![0.0, 0.0, 0.0]);
        let p = profile(&s, 4).unwrap();
        assert_eq!((p.mutual_coherence, p.mean, p.std), (0.0, 0.0, 0.0));
        assert_eq!(p.histogram.iter().map(|b| b.count).sum::<usize>(), 3);
    }

    #[test]
    fn three_columns_in_pair_order() {
        let h = frac_sqrt2();
        let m = MeasurementMatrix::from_columns(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![h, h]]).unwrap();
        let s = coherence_sample(&m).unwrap();
        // direct inner products: (1,2) -> 0, (1,3) -> h, (2,3) -> h
        let oracle = [0.0, h, h];
        for (v, o) in s.values.iter().zip(oracle) {
            assert!((v - o).abs() < 1e-15);
        }
        assert_eq!(s.pair_index(1, 2), 2);
    }

    #[test]
    fn count_and_index_bookkeeping() {
        let m = generate(&EnsembleSpec::gaussian(6, 300, 1)).unwrap();
        let s = coherence_sample(&m).unwrap();
        assert_eq!(s.count(), 300 * 299 / 2);
        let d = m.data();
        for (i, j) in [(0, 1), (0, 299), (17, 256), (255, 256), (298, 299)] {
            let direct = d.column(i).dot(&d.column(j));
            assert!((s.values[s.pair_index(i, j)] - direct).abs() < 1e-14);
        }
    }

    #[test]
    fn unnormalized_rejected() {
        let m = MeasurementMatrix::from_columns(&[vec![2.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(coherence_sample(&m), Err(Error::NotNormalized { index: 0, .. })));
    }

    #[test]
    fn single_column_is_insufficient() {
        let m = MeasurementMatrix::identity(1).unwrap();
        let s = coherence_sample(&m).unwrap();
        assert!(matches!(profile(&s, 3), Err(Error::InsufficientData(_))));
        assert!(matches!(profile_streaming(&m, 3), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn streaming_matches_materialized_bitwise() {
        let m = generate(&EnsembleSpec::gaussian(20, 700, 5)).unwrap();
        let a = profile(&coherence_sample(&m).unwrap(), 37).unwrap();
        let b = profile_streaming(&m, 37).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn histogram_edges() {
        let s = CoherenceSample {
            values: vec![-0.5, 0.0, 0.25, 0.5],
            source_dims: (2, 3),
        };
        let p = profile(&s, 2).unwrap();
        // half-open bins, the maximum lands in the last one
        assert_eq!(p.histogram[0].count, 1);
        assert_eq!(p.histogram[1].count, 3);
        assert_eq!(p.histogram[1].upper, 0.5);
    }

    #[test]
    fn gaussian_normality_passes() {
        let m = generate(&EnsembleSpec::gaussian(200, 400, 3)).unwrap();
        let r = normality_check(&coherence_sample(&m).unwrap(), &NormalityThresholds::default()).unwrap();
        assert!(r.pass, "{r:?}");
        assert!((0.8..=1.2).contains(&r.var_ratio));
    }

    #[test]
    fn repeated_column_fails_normality() {
        let m = generate(&EnsembleSpec::gaussian(200, 400, 3)).unwrap();
        let mut data = m.data().clone();
        let c0 = data.column(0).clone_owned();
        data.set_column(1, &c0);
        let m = MeasurementMatrix::custom(data).unwrap();
        let r = normality_check(&coherence_sample(&m).unwrap(), &NormalityThresholds::default()).unwrap();
        assert!(r.outlier && !r.pass, "{r:?}");
    }

    #[test]
    fn constant_sample_is_degenerate() {
        let s = CoherenceSample {
            values: vec![0.0; 120],
            source_dims: (16, 16),
        };
        let r = normality_check(&s, &NormalityThresholds::default()).unwrap();
        assert!(r.degenerate_variance && !r.pass);
    }

    #[test]
    fn small_sample_rejected() {
        let s = CoherenceSample {
            values: vec![0.1; 10],
            source_dims: (4, 5),
        };
        assert!(normality_check(&s, &NormalityThresholds::default()).is_err());
    }

    #[test]
    fn cross_identity() {
        let id = MeasurementMatrix::identity(3).unwrap();
        let c = cross_coherence(&id, &id).unwrap();
        assert_eq!(c.mu_m, 1.0);
        assert!((c.mean - 1.0 / 3.0).abs() < 1e-15);
        // population std of {1,1,1,0,0,0,0,0,0}
        assert!((c.sigma_mu_m - (2.0f64 / 9.0).sqrt()).abs() < 1e-15);
        assert_eq!(c.sample_count, 9);
    }

    #[test]
    fn spikes_vs_fourier() {
        let n = 64;
        let id = MeasurementMatrix::identity(n).unwrap();
        let f = MeasurementMatrix::fourier_basis(n).unwrap();
        let c = cross_coherence(&id, &f).unwrap();
        let target = (2.0 / n as f64).sqrt();
        assert!((c.mu_m - target).abs() <= 0.15 * target, "{}", c.mu_m);
    }

    #[test]
    fn orthogonal_column_contributes_zeros() {
        let d = MeasurementMatrix::from_columns(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]).unwrap();
        let b = MeasurementMatrix::from_columns(&[vec![0.0, 0.0, 1.0]]).unwrap();
        let c = cross_coherence(&d, &b).unwrap();
        assert_eq!((c.mu_m, c.mean, c.sigma_mu_m), (0.0, 0.0, 0.0));
    }

    #[test]
    fn cross_row_mismatch() {
        let a = MeasurementMatrix::identity(3).unwrap();
        let b = MeasurementMatrix::identity(4).unwrap();
        assert!(matches!(cross_coherence(&a, &b), Err(Error::Dimension(_))));
    }
}

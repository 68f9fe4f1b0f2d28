//! Measurement matrices and the random ensembles they are drawn from.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, purpose};

/// Tolerance used when checking that columns are unit-norm.
pub const NORMALIZED_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleTag {
    Gaussian,
    Bernoulli,
    PartialFourier,
    Custom,
}

/// Random ensembles that can be generated from a seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ensemble {
    Gaussian,
    Bernoulli,
    PartialFourier,
}

impl Ensemble {
    pub fn tag(self) -> EnsembleTag {
        match self {
            Ensemble::Gaussian => EnsembleTag::Gaussian,
            Ensemble::Bernoulli => EnsembleTag::Bernoulli,
            Ensemble::PartialFourier => EnsembleTag::PartialFourier,
        }
    }
}

impl std::str::FromStr for Ensemble {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "gaussian" => Ok(Ensemble::Gaussian),
            "bernoulli" => Ok(Ensemble::Bernoulli),
            "partial_fourier" | "fourier" => Ok(Ensemble::PartialFourier),
            other => Err(Error::Unsupported(format!("unknown ensemble '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub ensemble: Ensemble,
    pub rows: usize,
    pub cols: usize,
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn new(ensemble: Ensemble, rows: usize, cols: usize, seed: u64) -> Self {
        Self {
            ensemble,
            rows,
            cols,
            seed,
        }
    }

    pub fn gaussian(rows: usize, cols: usize, seed: u64) -> Self {
        Self::new(Ensemble::Gaussian, rows, cols, seed)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::Dimension(format!(
                "ensemble needs rows >= 1 and cols >= 1, got {}x{}",
                self.rows, self.cols
            )));
        }
        if self.ensemble == Ensemble::PartialFourier && self.rows > self.cols {
            return Err(Error::Unsupported(format!(
                "partial_fourier needs rows <= cols, got {}x{}",
                self.rows, self.cols
            )));
        }
        Ok(())
    }

    /// Entries before column normalization.
    ///
    /// Gaussian entries are N(0, 1/n) and Bernoulli entries are +-1/sqrt(n),
    /// both drawn in column-major order from `stream(seed, "ensemble", 0)`.
    /// Partial Fourier picks a uniform `rows`-subset of the `cols`x`cols`
    /// real harmonic frame (sorted row order).
    pub fn raw(&self) -> Result<DMatrix<f64>> {
        self.validate()?;
        let (n, cols) = (self.rows, self.cols);
        let mut rng = rng::stream(self.seed, purpose::ENSEMBLE, 0);
        let scale = 1.0 / (n as f64).sqrt();
        let m = match self.ensemble {
            Ensemble::Gaussian => {
                let v: Vec<f64> = (0..n * cols)
                    .map(|_| scale * rng::standard_normal(&mut rng))
                    .collect();
                DMatrix::from_vec(n, cols, v)
            }
            Ensemble::Bernoulli => {
                use rand::Rng;
                let v: Vec<f64> = (0..n * cols)
                    .map(|_| if rng.random::<bool>() { scale } else { -scale })
                    .collect();
                DMatrix::from_vec(n, cols, v)
            }
            Ensemble::PartialFourier => {
                let frame = harmonic_frame(cols);
                let picked = rng::random_support(&mut rng, cols, n);
                frame.select_rows(picked.iter())
            }
        };
        Ok(m)
    }
}

/// Orthonormal real Fourier frame of size `n`x`n`; row `r` is one harmonic
/// sampled at `t = 0..n`.
///
/// Row order: the constant row, then a cosine/sine pair for each frequency
/// `1..ceil(n/2)`, then the alternating Nyquist row when `n` is even.
pub fn harmonic_frame(n: usize) -> DMatrix<f64> {
    let nf = n as f64;
    let mut m = DMatrix::zeros(n, n);
    let c0 = 1.0 / nf.sqrt();
    let c = (2.0 / nf).sqrt();
    for t in 0..n {
        m[(0, t)] = c0;
    }
    let mut row = 1;
    for f in (1..).take_while(|f| 2 * f < n) {
        for t in 0..n {
            let arg = 2.0 * PI * (f * t % n) as f64 / nf;
            m[(row, t)] = c * arg.cos();
            m[(row + 1, t)] = c * arg.sin();
        }
        row += 2;
    }
    if n.is_multiple_of(2) && n > 1 {
        for t in 0..n {
            m[(row, t)] = if t % 2 == 0 { c0 } else { -c0 };
        }
        row += 1;
    }
    debug_assert_eq!(row, n);
    m
}

/// Dense real `n`x`N` matrix under audit.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementMatrix {
    data: DMatrix<f64>,
    ensemble: EnsembleTag,
    seed: Option<u64>,
}

impl MeasurementMatrix {
    pub fn new(data: DMatrix<f64>, ensemble: EnsembleTag, seed: Option<u64>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::Dimension(format!(
                "matrix must be at least 1x1, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        for j in 0..data.ncols() {
            for i in 0..data.nrows() {
                if !data[(i, j)].is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
            }
        }
        Ok(Self {
            data,
            ensemble,
            seed,
        })
    }

    pub fn custom(data: DMatrix<f64>) -> Result<Self> {
        Self::new(data, EnsembleTag::Custom, None)
    }

    pub fn from_row_major(rows: usize, cols: usize, values: &[f64]) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} matrix needs {} values, got {}",
                rows * cols,
                values.len()
            )));
        }
        Self::custom(DMatrix::from_row_slice(rows, cols, values))
    }

    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::Dimension("columns have unequal lengths".into()));
        }
        let flat: Vec<f64> = columns.iter().flatten().copied().collect();
        Self::custom(DMatrix::from_vec(rows, columns.len(), flat))
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::custom(DMatrix::identity(n, n))
    }

    /// Columns are the atoms of the real harmonic frame (a sinusoid dictionary).
    pub fn fourier_basis(n: usize) -> Result<Self> {
        Self::custom(harmonic_frame(n).transpose())
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_data(self) -> DMatrix<f64> {
        self.data
    }

    pub fn ensemble(&self) -> EnsembleTag {
        self.ensemble
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn column_norms(&self) -> Vec<f64> {
        self.data.column_iter().map(|c| c.norm()).collect()
    }

    /// First column whose norm differs from one by more than `tol`.
    pub fn check_normalized(&self, tol: f64) -> Result<()> {
        for (index, norm) in self.column_norms().into_iter().enumerate() {
            if (norm - 1.0).abs() > tol {
                return Err(Error::NotNormalized { index, norm });
            }
        }
        Ok(())
    }

    /// Divides each column by its Euclidean norm.
    ///
    /// Columns within 1e-14 of unit norm are left untouched, which makes the
    /// operation exactly idempotent.
    pub fn normalize_columns(mut self) -> Result<Self> {
        for (index, mut col) in self.data.column_iter_mut().enumerate() {
            let norm = col.norm();
            if norm == 0.0 {
                return Err(Error::DegenerateColumn { index });
            }
            if (norm - 1.0).abs() > 1e-14 {
                col /= norm;
            }
        }
        Ok(self)
    }

    /// `M * x` for a dense coefficient vector.
    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.data * x
    }

    /// `M^T * r`.
    pub fn apply_transpose(&self, r: &DVector<f64>) -> DVector<f64> {
        self.data.tr_mul(r)
    }

    /// `sum_i values[i] * column(support[i])`.
    pub fn combine(&self, support: &[usize], values: &[f64]) -> DVector<f64> {
        let mut out = DVector::zeros(self.rows());
        for (&j, &v) in support.iter().zip(values) {
            out.axpy(v, &self.data.column(j), 1.0);
        }
        out
    }

    pub fn select_columns(&self, support: &[usize]) -> DMatrix<f64> {
        self.data.select_columns(support.iter())
    }
}

/// Draws a matrix from `spec` and normalizes its columns.
pub fn generate(spec: &EnsembleSpec) -> Result<MeasurementMatrix> {
    let raw = spec.raw()?;
    MeasurementMatrix::new(raw, spec.ensemble.tag(), Some(spec.seed))?.normalize_columns()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_columns_are_unit_norm() {
        let m = generate(&EnsembleSpec::gaussian(200, 400, 42)).unwrap();
        assert_eq!((m.rows(), m.cols()), (200, 400));
        for norm in m.column_norms() {
            assert!((norm - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn bernoulli_entries_are_half() {
        let m = generate(&EnsembleSpec::new(Ensemble::Bernoulli, 4, 4, 7)).unwrap();
        assert!(m.data().iter().all(|&v| v == 0.5 || v == -0.5));
    }

    #[test]
    fn gaussian_raw_variance_is_one_over_n() {
        for seed in [1u64, 2, 3] {
            let raw = EnsembleSpec::gaussian(100, 500, seed).raw().unwrap();
            let count = raw.len() as f64;
            let mean = raw.iter().sum::<f64>() / count;
            let var = raw.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / count;
            assert!((var - 0.01).abs() <= 0.001, "variance {var}");
            let se = (0.01f64 / count).sqrt();
            assert!(mean.abs() <= 4.0 * se, "mean {mean}");
        }
    }

    #[test]
    fn generation_is_deterministic() {
        for ens in [Ensemble::Gaussian, Ensemble::Bernoulli, Ensemble::PartialFourier] {
            let spec = EnsembleSpec::new(ens, 16, 40, 99);
            assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        }
    }

    #[test]
    fn partial_fourier_rejects_tall() {
        let spec = EnsembleSpec::new(Ensemble::PartialFourier, 10, 5, 1);
        assert!(matches!(generate(&spec), Err(Error::Unsupported(_))));
    }

    #[test]
    fn zero_dims_rejected() {
        assert!(matches!(
            generate(&EnsembleSpec::gaussian(0, 5, 1)),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            generate(&EnsembleSpec::gaussian(5, 0, 1)),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn harmonic_frame_is_orthonormal() {
        for n in [1usize, 2, 3, 8, 9, 64] {
            let f = harmonic_frame(n);
            let g = &f * f.transpose();
            let err = (g - DMatrix::<f64>::identity(n, n)).abs().max();
            assert!(err < 1e-12, "n={n} err={err}");
        }
    }

    #[test]
    fn partial_fourier_is_normalized() {
        let m = generate(&EnsembleSpec::new(Ensemble::PartialFourier, 32, 128, 5)).unwrap();
        assert!(m.check_normalized(1e-12).is_ok());
    }

    #[test]
    fn normalize_examples() {
        let id = MeasurementMatrix::identity(3).unwrap();
        assert_eq!(id.clone().normalize_columns().unwrap(), id);

        let m = MeasurementMatrix::from_columns(&[vec![3.0, 4.0]]).unwrap();
        let m = m.normalize_columns().unwrap();
        assert!((m.data()[(0, 0)] - 0.6).abs() < 1e-15);
        assert!((m.data()[(1, 0)] - 0.8).abs() < 1e-15);

        let once = generate(&EnsembleSpec::gaussian(7, 9, 3)).unwrap();
        let twice = once.clone().normalize_columns().unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn zero_column_is_named() {
        let m = MeasurementMatrix::from_columns(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        match m.normalize_columns() {
            Err(Error::DegenerateColumn { index }) => assert_eq!(index, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_finite_rejected() {
        let r = MeasurementMatrix::from_row_major(1, 2, &[1.0, f64::NAN]);
        assert!(matches!(r, Err(Error::NonFinite { row: 0, col: 1 })));
    }
}

//! Statistical coherence analysis of measurement matrices.
//!
//! Given a dictionary with unit-norm columns, the crate computes the sample
//! of pairwise column inner products, summarizes it (mutual coherence, mean,
//! standard deviation, histogram), turns the spread into sparsity thresholds
//! and tail bounds, and checks those claims by Monte Carlo: isometry band
//! frequencies, sparse recovery with OMP, IHT, CoSaMP and BPDN, and
//! two-dictionary separation.
//!
//! ```
//! use coherence_audit::{bounds, coherence, matrix};
//!
//! let m = matrix::generate(&matrix::EnsembleSpec::gaussian(50, 100, 7)).unwrap();
//! let p = coherence::profile_matrix(&m, None).unwrap();
//! let b = bounds::sparsity_bounds(p.mutual_coherence, p.std).unwrap();
//! assert!(b.thm1.floor >= b.worst_case.floor);
//! ```

pub mod bounds;
pub mod cli;
pub mod coherence;
pub mod error;
pub mod io;
pub mod linalg;
pub mod matrix;
pub mod report;
pub mod rip;
pub mod rng;
pub mod separation;
pub mod solvers;

pub use error::{Error, Result};
pub use matrix::{generate, Ensemble, EnsembleSpec, MeasurementMatrix};

//! Empirical isometry ratios of random sparse vectors against the
//! statistical band, plus tail checks.

use coherence_audit::bounds::{rip_width, tail_eq11, tail_eq6, RipVariant};
use coherence_audit::coherence::profile_matrix;
use coherence_audit::rip::{band_frequency, sample_ratios, sample_spectral, tail_check};
use coherence_audit::rng::CoefficientModel;
use coherence_audit::{generate, EnsembleSpec};

fn main() -> coherence_audit::Result<()> {
    let m = generate(&EnsembleSpec::gaussian(200, 400, 42))?;
    let sigma = profile_matrix(&m, None)?.std;
    for k in [2, 5, 10, 20] {
        let g = rip_width(k, sigma, RipVariant::Thm1).g;
        let ratios = sample_ratios(&m, k, 5000, 1, CoefficientModel::Gaussian)?;
        println!("k = {k:>2}: g = {g:.4}, in band {:.4}", band_frequency(&ratios, g));
    }
    let k = 5;
    let g = rip_width(k, sigma, RipVariant::Thm1).g;
    let grid = [0.5 * g, g, 2.0 * g];
    let ratios = sample_ratios(&m, k, 2000, 2, CoefficientModel::Gaussian)?;
    let spectral = sample_spectral(&m, k, 2000, 2)?;
    for p in tail_check(&ratios, &grid, |t| tail_eq6(t, k, sigma, 1.0).unwrap_or(1.0)) {
        println!("ratio tail    t = {:.4}: {:.4} vs bound {:.4}", p.t, p.empirical, p.bound);
    }
    for p in tail_check(&spectral, &grid, |t| tail_eq11(t, k, sigma).unwrap_or(1.0)) {
        println!("spectral tail t = {:.4}: {:.4} vs bound {:.4}", p.t, p.empirical, p.bound);
    }
    Ok(())
}

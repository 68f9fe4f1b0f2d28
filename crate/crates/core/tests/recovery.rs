//! Monte Carlo success rates of the solvers on Gaussian ensembles.

use coherence_audit::rng::CoefficientModel;
use coherence_audit::solvers::{
    iht, phase_curve, recovery_trial_indexed, IhtOptions, MatrixSource, SolverSpec,
};
use coherence_audit::{generate, EnsembleSpec, MeasurementMatrix};
use rayon::prelude::*;

fn success_count(m: &MeasurementMatrix, k: usize, spec: SolverSpec, noise: f64, trials: u64, model: CoefficientModel) -> usize {
    (0..trials)
        .into_par_iter()
        .filter(|&t| {
            recovery_trial_indexed(m, k, &spec, noise, 17, t, model)
                .unwrap()
                .success
        })
        .count()
}

#[test]
fn omp_k5_on_100x500() {
    let m = generate(&EnsembleSpec::gaussian(100, 500, 1)).unwrap();
    let s = success_count(&m, 5, SolverSpec::Omp, 0.0, 100, CoefficientModel::Gaussian);
    assert!(s >= 95, "{s}/100");
}

#[test]
fn omp_k10_on_100x500() {
    let m = generate(&EnsembleSpec::gaussian(100, 500, 2)).unwrap();
    let s = success_count(&m, 10, SolverSpec::Omp, 0.0, 200, CoefficientModel::Gaussian);
    assert!(s >= 180, "{s}/200");
}

#[test]
fn iht_k8_on_200x400() {
    let m = generate(&EnsembleSpec::gaussian(200, 400, 3)).unwrap();
    let opts = IhtOptions::default();
    let good = (0..100u64)
        .into_par_iter()
        .filter(|&t| {
            let mut r = coherence_audit::rng::stream(5, "iht-check", t);
            let (support, values) =
                coherence_audit::rip::draw_sparse(&mut r, 400, 8, CoefficientModel::Gaussian);
            let x = coherence_audit::rip::scatter(400, &support, &values);
            let res = iht(&m, &m.apply(&x), 8, &opts).unwrap();
            let rel = (&res.estimate - &x).norm() / x.norm();
            rel <= 1e-6 && res.iterations <= 500
        })
        .count();
    assert!(good >= 90, "{good}/100");
}

#[test]
fn cosamp_k10_on_100x500() {
    let m = generate(&EnsembleSpec::gaussian(100, 500, 4)).unwrap();
    let spec: SolverSpec = "cosamp".parse().unwrap();
    let s = success_count(&m, 10, spec, 0.0, 100, CoefficientModel::Gaussian);
    assert!(s >= 80, "{s}/100");
}

#[test]
fn bpdn_noisy_support_on_200x400() {
    let m = generate(&EnsembleSpec::gaussian(200, 400, 5)).unwrap();
    let spec: SolverSpec = "bpdn".parse().unwrap();
    let s = success_count(&m, 5, spec, 0.01, 100, CoefficientModel::Rademacher);
    assert!(s >= 80, "{s}/100");
}

#[test]
fn phase_curve_trend_on_100x500() {
    let m = generate(&EnsembleSpec::gaussian(100, 500, 1)).unwrap();
    let ks = [2, 6, 10, 14, 18, 25];
    let pts = phase_curve(MatrixSource::Fixed(&m), &ks, &SolverSpec::Omp, 200, 0.0, 1).unwrap();
    assert_eq!(pts.len(), 6);
    assert!(pts[0].rate >= pts[5].rate);
    for w in pts.windows(2) {
        // a later rate may only exceed an earlier one within the intervals
        assert!(w[1].rate <= w[0].ci_high, "{w:?}");
    }
    for p in &pts {
        assert!(p.ci_low <= p.rate && p.rate <= p.ci_high);
    }
}

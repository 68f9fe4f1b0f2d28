//! Randomized invariants across solvers, coherence statistics and the
//! separation decomposition.

use coherence_audit::coherence::{coherence_sample, profile_matrix};
use coherence_audit::rip::energy_two_ways;
use coherence_audit::separation::joint_dictionary;
use coherence_audit::solvers::{cosamp, iht, omp, CosampOptions, IhtOptions, OmpStop, SolveResult};
use coherence_audit::{generate, EnsembleSpec, MeasurementMatrix};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn matrix(rows: usize, cols: usize, seed: u64) -> MeasurementMatrix {
    generate(&EnsembleSpec::gaussian(rows, cols, seed)).unwrap()
}

fn run(which: u8, m: &MeasurementMatrix, y: &DVector<f64>, k: usize) -> SolveResult {
    match which {
        0 => omp(m, y, OmpStop::Sparsity(k)).unwrap(),
        1 => iht(m, y, k, &IhtOptions::default()).unwrap(),
        _ => cosamp(m, y, k, &CosampOptions::default()).unwrap(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn greedy_output_shape(which in 0u8..3, seed in 0u64..1000, k in 1usize..6, obs in prop::collection::vec(-3.0f64..3.0, 24)) {
        let m = matrix(24, 48, seed);
        let res = run(which, &m, &DVector::from_vec(obs), k);
        prop_assert_eq!(res.estimate.len(), 48);
        prop_assert!(res.estimate.iter().filter(|v| **v != 0.0).count() <= k);
        prop_assert!(res.estimate.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn greedy_is_scale_equivariant(which in 0u8..3, seed in 0u64..1000, scale in 0.1f64..50.0) {
        let m = matrix(30, 60, seed);
        let mut x = DVector::zeros(60);
        x[(seed % 60) as usize] = 1.0;
        x[((seed * 7 + 3) % 60) as usize] -= 0.7;
        let y = m.apply(&x);
        let a = run(which, &m, &y, 2).estimate;
        let b = run(which, &m, &(&y * scale), 2).estimate;
        prop_assert!((&a * scale - &b).norm() <= 1e-8 * (1.0 + b.norm()), "{} vs {}", a * scale, b);
    }

    #[test]
    fn coherence_statistics_ignore_column_signs(seed in 0u64..1000, flip in 0usize..20) {
        let m = matrix(15, 20, seed);
        let mut data = m.data().clone();
        data.column_mut(flip).neg_mut();
        let flipped = MeasurementMatrix::custom(data).unwrap();
        let a = profile_matrix(&m, None).unwrap();
        let b = profile_matrix(&flipped, None).unwrap();
        prop_assert!((a.mutual_coherence - b.mutual_coherence).abs() <= 1e-12);
        let second = |p: &coherence_audit::coherence::CoherenceProfile| p.std * p.std + p.mean * p.mean;
        prop_assert!((second(&a) - second(&b)).abs() <= 1e-12);
    }

    #[test]
    fn coherences_are_bounded(seed in 0u64..1000, rows in 2usize..20) {
        let m = matrix(rows, 25, seed);
        let s = coherence_sample(&m).unwrap();
        prop_assert_eq!(s.values.len(), 25 * 24 / 2);
        prop_assert!(s.values.iter().all(|v| v.abs() <= 1.0 + 1e-12));
    }

    #[test]
    fn energy_decomposes(seed in 0u64..1000, coeffs in prop::collection::vec(-5.0f64..5.0, 1..6)) {
        let m = matrix(20, 40, seed);
        let support: Vec<usize> = (0..coeffs.len()).map(|i| (i * 7 + seed as usize) % 40).collect();
        let mut uniq = support.clone();
        uniq.sort_unstable();
        uniq.dedup();
        prop_assume!(uniq.len() == support.len());
        let (direct, via) = energy_two_ways(&m, &support, &coeffs);
        prop_assert!((direct - via).abs() <= 1e-10 * (1.0 + direct));
    }

    #[test]
    fn joint_dictionary_splits_back(seed in 0u64..1000, extra in 1usize..10) {
        let d = matrix(12, 20, seed);
        let b = matrix(12, extra, seed + 1);
        let j = joint_dictionary(&d, Some(&b)).unwrap();
        prop_assert_eq!(j.cols(), 20 + extra);
        let x = DVector::from_fn(20, |i, _| i as f64 - 3.0);
        let e = DVector::from_fn(extra, |i, _| 1.0 / (1.0 + i as f64));
        let mut z = DVector::zeros(20 + extra);
        z.rows_mut(0, 20).copy_from(&x);
        z.rows_mut(20, extra).copy_from(&e);
        let gap = (j.apply(&z) - d.apply(&x) - b.apply(&e)).norm();
        prop_assert!(gap <= 1e-10);
        let none = joint_dictionary(&d, None).unwrap();
        prop_assert_eq!(none.data(), &DMatrix::clone(d.data()));
    }
}

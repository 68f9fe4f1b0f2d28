//! Closed-form sparsity thresholds and tail bounds driven by coherence
//! statistics.
//!
//! `mu` is the mutual coherence (largest |<d_i, d_j>|), `sigma` the standard
//! deviation of the coherence sample. Every threshold is returned as a real
//! value together with its floor; nothing is ever rounded up.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_unit_interval(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 && v <= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must lie in (0, 1], got {v}")))
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive, got {v}")))
    }
}

/// `1/2 (1 + 1/mu)`: deterministic uniqueness threshold.
pub fn worst_case_k(mu: f64) -> f64 {
    0.5 * (1.0 + 1.0 / mu)
}

/// `1/2 (1 + 1/(2 sigma))`.
pub fn heuristic_k(sigma: f64) -> f64 {
    0.5 * (1.0 + 1.0 / (2.0 * sigma))
}

/// `1/2 (1 + 1/(4 sigma^2))`, uniqueness from the scalar Bernstein band.
pub fn thm1_k(sigma: f64) -> f64 {
    0.5 * (1.0 + 1.0 / (4.0 * sigma * sigma))
}

/// `1/(4 sigma)`, uniqueness from the operator Bernstein bound.
pub fn thm2_k(sigma: f64) -> f64 {
    1.0 / (4.0 * sigma)
}

/// `1 + sigma^-2 / 9`, stable l1 recovery.
pub fn thm3_k(sigma: f64) -> f64 {
    1.0 + 1.0 / (9.0 * sigma * sigma)
}

/// Direct evaluation of `1 - 2 sigma sqrt(k-1) - sigma sqrt(k) >= 0`.
pub fn eq21_feasible(k: usize, sigma: f64) -> bool {
    eq21_margin(k, sigma) >= 0.0
}

pub fn eq21_margin(k: usize, sigma: f64) -> f64 {
    let kf = k as f64;
    1.0 - 2.0 * sigma * (kf - 1.0).max(0.0).sqrt() - sigma * kf.sqrt()
}

/// Largest `k >= 1` with [`eq21_feasible`], or 0 if even `k = 1` fails.
pub fn eq21_max_k(sigma: f64) -> usize {
    if !eq21_feasible(1, sigma) {
        return 0;
    }
    // the margin is decreasing in k, so double then bisect
    let mut hi = 2usize;
    while eq21_feasible(hi, sigma) {
        if hi > usize::MAX / 4 {
            return hi;
        }
        hi *= 2;
    }
    let mut lo = hi / 2;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if eq21_feasible(mid, sigma) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub value: f64,
    pub floor: u64,
}

impl Threshold {
    fn new(value: f64) -> Self {
        Self {
            value,
            floor: value.floor() as u64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub mu: f64,
    pub sigma_mu: f64,
    pub worst_case: Threshold,
    pub heuristic: Threshold,
    pub thm1: Threshold,
    pub thm2: Threshold,
    pub thm3: Threshold,
    /// Largest k meeting the stability inequality exactly as derived.
    pub eq21_max_k: u64,
    /// Lower bound on Pr(|mu_r (k-1)| < 1) at the heuristic floor.
    pub eq4_probability_at_heuristic: f64,
    /// Upper bound on the spectral deviation exceeding
    /// `2 sigma sqrt(k(k-1))` at the operator-Bernstein floor.
    pub eq11_tail_at_thm2: f64,
}

pub fn sparsity_bounds(mu: f64, sigma_mu: f64) -> Result<BoundReport> {
    check_unit_interval("mu", mu)?;
    check_unit_interval("sigma_mu", sigma_mu)?;
    let heuristic = Threshold::new(heuristic_k(sigma_mu));
    let thm2 = Threshold::new(thm2_k(sigma_mu));
    let eq4 = tail_eq4(heuristic.floor.max(1) as usize, sigma_mu)?;
    let eq11 = if thm2.floor >= 2 {
        let k = thm2.floor as usize;
        let w = rip_width(k, sigma_mu, RipVariant::Thm2).g;
        tail_eq11(w, k, sigma_mu)?
    } else {
        0.0
    };
    Ok(BoundReport {
        mu,
        sigma_mu,
        worst_case: Threshold::new(worst_case_k(mu)),
        heuristic,
        thm1: Threshold::new(thm1_k(sigma_mu)),
        thm2,
        thm3: Threshold::new(thm3_k(sigma_mu)),
        eq21_max_k: eq21_max_k(sigma_mu) as u64,
        eq4_probability_at_heuristic: eq4,
        eq11_tail_at_thm2: eq11,
    })
}

/// `1 - exp(-1 / (2 (k-1)^2 sigma^2))`, clamped to [0, 1].
///
/// For `k = 1` the event is certain and 1 is returned; `k = 0` is a domain
/// error.
pub fn tail_eq4(k: usize, sigma_mu: f64) -> Result<f64> {
    check_positive("sigma_mu", sigma_mu)?;
    match k {
        0 => Err(Error::Domain("k must be at least 1".into())),
        1 => Ok(1.0),
        _ => {
            let km1 = (k - 1) as f64;
            let p = -(-1.0 / (2.0 * km1 * km1 * sigma_mu * sigma_mu)).exp_m1();
            Ok(p.clamp(0.0, 1.0))
        }
    }
}

/// `min(1, 2 exp(-t^2 / (2 sigma^2 (k-1) ||x||^4)))`.
pub fn tail_eq6(t: f64, k: usize, sigma_mu: f64, x_norm2: f64) -> Result<f64> {
    check_positive("t", t)?;
    check_positive("sigma_mu", sigma_mu)?;
    check_positive("x_norm2", x_norm2)?;
    if k < 2 {
        return Err(Error::Domain(format!("k must be at least 2, got {k}")));
    }
    let x4 = x_norm2.powi(4);
    let e = t * t / (2.0 * sigma_mu * sigma_mu * (k - 1) as f64 * x4);
    Ok((2.0 * (-e).exp()).min(1.0))
}

/// `min(1, k(k-1)/2 * exp(-t^2 / (2 k (k-1) sigma^2)))`.
pub fn tail_eq11(t: f64, k: usize, sigma_mu: f64) -> Result<f64> {
    check_positive("t", t)?;
    check_positive("sigma_mu", sigma_mu)?;
    if k < 2 {
        return Err(Error::Domain(format!("k must be at least 2, got {k}")));
    }
    let kk = (k * (k - 1)) as f64;
    let e = t * t / (2.0 * kk * sigma_mu * sigma_mu);
    Ok((0.5 * kk * (-e).exp()).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RipVariant {
    Thm1,
    Thm2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RipWidth {
    pub k: usize,
    pub variant: RipVariant,
    pub g: f64,
}

/// Half-width of the statistical isometry band around 1.
pub fn rip_width(k: usize, sigma_mu: f64, variant: RipVariant) -> RipWidth {
    let kf = k as f64;
    let km1 = (kf - 1.0).max(0.0);
    let g = match variant {
        RipVariant::Thm1 => 2.0 * sigma_mu * km1.sqrt(),
        RipVariant::Thm2 => 2.0 * sigma_mu * (kf * km1).sqrt(),
    };
    RipWidth { k, variant, g }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparationCondition {
    pub g_x: f64,
    pub g_e: f64,
    /// `max(g_x, g_e) + sigma_mu_m`.
    pub g_joint: f64,
    /// `1 - g_joint - sigma_mu_m sqrt(n_x + n_e)`.
    pub margin: f64,
    pub ok: bool,
    /// Same band with the cross term scaled by `sqrt(n_x n_e)`, matching the
    /// worst-case chain; reported alongside, never substituted.
    pub g_joint_scaled: f64,
    pub margin_scaled: f64,
}

pub fn separation_condition(
    sigma_d: f64,
    sigma_b: f64,
    sigma_mu_m: f64,
    n_x: usize,
    n_e: usize,
) -> Result<SeparationCondition> {
    for (name, v) in [("sigma_D", sigma_d), ("sigma_B", sigma_b), ("sigma_mu_m", sigma_mu_m)] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::Domain(format!("{name} must be >= 0, got {v}")));
        }
    }
    if n_x == 0 || n_e == 0 {
        return Err(Error::Domain("sparsities must be at least 1".into()));
    }
    let g_x = rip_width(n_x, sigma_d, RipVariant::Thm1).g;
    let g_e = rip_width(n_e, sigma_b, RipVariant::Thm1).g;
    let w = (n_x + n_e) as f64;
    let g_joint = g_x.max(g_e) + sigma_mu_m;
    let margin = 1.0 - g_joint - sigma_mu_m * w.sqrt();
    let g_joint_scaled = g_x.max(g_e) + sigma_mu_m * ((n_x * n_e) as f64).sqrt();
    let margin_scaled = 1.0 - g_joint_scaled - sigma_mu_m * w.sqrt();
    Ok(SeparationCondition {
        g_x,
        g_e,
        g_joint,
        margin,
        ok: margin > 0.0,
        g_joint_scaled,
        margin_scaled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reproduces_the_200_by_400_thresholds() {
        let r = sparsity_bounds(0.3124, 0.0707).unwrap();
        assert_eq!(r.worst_case.floor, 2);
        assert_eq!(r.heuristic.floor, 4);
        assert_eq!(r.thm1.floor, 25);
        assert_eq!(r.thm2.floor, 3);
        assert!((r.thm2.value - 3.536).abs() < 1e-3);
        assert_eq!(r.thm3.floor, 23);
        assert!((r.thm3.value - 23.23).abs() < 1e-2);
    }

    #[test]
    fn duplicate_columns_give_one() {
        assert_eq!(sparsity_bounds(1.0, 0.5).unwrap().worst_case.value, 1.0);
    }

    #[test]
    fn domain_errors() {
        assert!(sparsity_bounds(0.0, 0.1).is_err());
        assert!(sparsity_bounds(0.1, 0.0).is_err());
        assert!(sparsity_bounds(1.5, 0.1).is_err());
        assert!(tail_eq4(0, 0.1).is_err());
        assert!(tail_eq6(0.0, 3, 0.1, 1.0).is_err());
        assert!(tail_eq11(1.0, 1, 0.1).is_err());
        assert!(separation_condition(-0.1, 0.0, 0.0, 1, 1).is_err());
    }

    #[test]
    fn eq4_examples() {
        // k = 1 + 1/(2 sigma) with sigma = 0.1
        assert!((tail_eq4(6, 0.1).unwrap() - (1.0 - (-2.0f64).exp())).abs() < 1e-12);
        assert!((tail_eq4(6, 0.1).unwrap() - 0.8647).abs() < 1e-4);
        assert!((tail_eq4(2, 0.1).unwrap() - 1.0).abs() < 1e-15);
        assert!((tail_eq4(2, 1.0).unwrap() - 0.393_469_340_287_366_6).abs() < 1e-12);
        assert_eq!(tail_eq4(1, 0.3).unwrap(), 1.0);
    }

    #[test]
    fn eq6_examples() {
        let (k, s, x) = (5usize, 0.07, 1.7);
        let t = 2.0 * s * ((k - 1) as f64).sqrt() * x * x;
        assert!((tail_eq6(t, k, s, x).unwrap() - 2.0 * (-2.0f64).exp()).abs() < 1e-12);
        assert_eq!(tail_eq6(1e-12, k, s, x).unwrap(), 1.0);
        let a = tail_eq6(1.0, 10, 0.1, 1.0).unwrap();
        let b = tail_eq6(1.0, 10, 0.1, 2.0).unwrap();
        assert!(b > a);
    }

    #[test]
    fn eq11_examples() {
        let s = 0.05;
        let t = 2.0 * s * 6.0f64.sqrt();
        assert!((tail_eq11(t, 3, s).unwrap() - 3.0 * (-2.0f64).exp()).abs() < 1e-12);
        assert!(tail_eq11(100.0, 2, 0.1).unwrap() < 1e-300);
        // same exponent t^2 / (2 k (k-1) sigma^2) = 10
        let t2 = (10.0 * 2.0 * 2.0 * 0.01f64).sqrt();
        let t5 = (10.0 * 2.0 * 20.0 * 0.01f64).sqrt();
        let r = tail_eq11(t5, 5, 0.1).unwrap() / tail_eq11(t2, 2, 0.1).unwrap();
        assert!((r - 10.0).abs() < 1e-9);
    }

    #[test]
    fn rip_width_examples() {
        let w = rip_width(10, 0.0707, RipVariant::Thm1);
        assert!((w.g - 0.4242).abs() < 1e-4);
        assert_eq!(rip_width(1, 0.3, RipVariant::Thm1).g, 0.0);
        assert_eq!(rip_width(1, 0.3, RipVariant::Thm2).g, 0.0);
    }

    #[test]
    fn separation_examples() {
        let s = 0.2;
        let c = separation_condition(s, s, s, 1, 1).unwrap();
        assert_eq!((c.g_x, c.g_e), (0.0, 0.0));
        assert!((c.margin - (1.0 - s * (1.0 + 2.0f64.sqrt()))).abs() < 1e-15);

        let c = separation_condition(0.0, 0.0, 0.0, 5, 7).unwrap();
        assert_eq!(c.margin, 1.0);
        assert!(c.ok);

        let c = separation_condition(0.0707, 0.0707, 0.0707, 4, 4).unwrap();
        assert!((c.g_joint - 0.3156).abs() < 1e-3);
        assert!((c.margin - 0.484).abs() < 1e-3);
        assert!(c.ok);
    }

    #[test]
    fn single_dictionary_degeneration() {
        let c = separation_condition(0.05, 0.0, 0.0, 9, 1).unwrap();
        assert!((c.margin - (1.0 - c.g_x)).abs() < 1e-15);
    }

    #[test]
    fn eq21_against_thm3() {
        // at sigma = 1/sqrt(200) the derived inequality admits fewer k than
        // the closed form
        let s = 1.0 / 200f64.sqrt();
        let kmax = eq21_max_k(s);
        assert!(eq21_feasible(kmax, s) && !eq21_feasible(kmax + 1, s));
        assert!((kmax as f64) < thm3_k(s));
    }

    #[test]
    fn gaussian_reference_closed_forms() {
        for n in [50usize, 100, 200, 400, 1000] {
            let s = 1.0 / (n as f64).sqrt();
            let r = sparsity_bounds(0.5, s).unwrap();
            let nf = n as f64;
            assert!((r.thm1.value - (1.0 + nf / 4.0) / 2.0).abs() < 1e-9 * nf);
            assert!((r.thm3.value - (1.0 + nf / 9.0)).abs() < 1e-9 * nf);
        }
    }

    proptest! {
        #[test]
        fn bounds_decrease(a in 1e-3f64..1.0, b in 1e-3f64..1.0) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assume!(hi - lo > 1e-9);
            prop_assert!(worst_case_k(lo) > worst_case_k(hi));
            prop_assert!(heuristic_k(lo) > heuristic_k(hi));
            prop_assert!(thm1_k(lo) > thm1_k(hi));
            prop_assert!(thm2_k(lo) > thm2_k(hi));
            prop_assert!(thm3_k(lo) > thm3_k(hi));
        }

        #[test]
        fn thm1_dominates_heuristic(s in 1e-3f64..=0.5) {
            prop_assert!(thm1_k(s) >= heuristic_k(s));
        }

        #[test]
        fn tails_in_unit_interval_and_monotone(
            t in 1e-3f64..5.0, dt in 1e-3f64..5.0, k in 2usize..40, s in 1e-3f64..1.0, x in 0.1f64..3.0,
        ) {
            let a6 = tail_eq6(t, k, s, x).unwrap();
            let b6 = tail_eq6(t + dt, k, s, x).unwrap();
            prop_assert!((0.0..=1.0).contains(&a6) && b6 <= a6);
            let a11 = tail_eq11(t, k, s).unwrap();
            let b11 = tail_eq11(t + dt, k, s).unwrap();
            prop_assert!((0.0..=1.0).contains(&a11) && b11 <= a11);
            let p4 = tail_eq4(k, s).unwrap();
            prop_assert!((0.0..=1.0).contains(&p4));
        }

        #[test]
        fn thm2_width_dominates_thm1(k in 2usize..200, s in 0.0f64..1.0) {
            prop_assert!(rip_width(k, s, RipVariant::Thm2).g >= rip_width(k, s, RipVariant::Thm1).g);
        }
    }
}

//! Report types and canonical JSON.
//!
//! Canonical JSON has object keys in sorted order, two-space indentation and
//! every non-integer number printed with 12 significant digits, so equal
//! inputs give byte-identical files.

use serde::Serialize;
use serde_json::Value;

use crate::bounds::{rip_width, sparsity_bounds, tail_eq11, tail_eq6, BoundReport, RipVariant};
use crate::coherence::{normality_from_profile, profile_matrix, CoherenceProfile, FitReport, NormalityThresholds};
use crate::error::{Error, Result};
use crate::matrix::{EnsembleTag, MeasurementMatrix};
use crate::rip::{band_frequency, sample_ratios, sample_spectral, tail_check, TailPoint};
use crate::rng::CoefficientModel;

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
/// Coherence spreads at or below this are rounding noise of an orthogonal
/// matrix and are treated as zero.
pub const SIGMA_FLOOR: f64 = 1e-12;

/// C-style `%.12g`.
pub fn fmt_g12(v: f64) -> String {
    const P: i32 = 12;
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.*e}", (P - 1) as usize, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..P).contains(&exp) {
        let fixed = format!("{:.*}", (P - 1 - exp) as usize, v);
        strip_zeros(&fixed).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", strip_zeros(mantissa), exp.abs())
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Serializes `value` as canonical JSON with a trailing newline. Non-finite
/// floats become `null`.
pub fn to_canonical_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|e| Error::Domain(format!("serialization failed: {e}")))?;
    let mut out = String::new();
    write_value(&v, 0, &mut out);
    out.push('\n');
    Ok(out)
}

fn write_value(v: &Value, indent: usize, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                let f = n.as_f64().expect("f64 number");
                out.push_str(&fmt_g12(f));
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                pad(indent + 1, out);
                write_value(item, indent + 1, out);
                if i + 1 < items.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            pad(indent, out);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, k) in keys.iter().enumerate() {
                pad(indent + 1, out);
                out.push_str(&Value::String((*k).clone()).to_string());
                out.push_str(": ");
                write_value(&map[*k], indent + 1, out);
                if i + 1 < keys.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            pad(indent, out);
            out.push('}');
        }
    }
}

fn pad(indent: usize, out: &mut String) {
    for _ in 0..indent {
        out.push_str("  ");
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatrixMeta {
    pub rows: usize,
    pub cols: usize,
    pub ensemble: EnsembleTag,
    pub seed: Option<u64>,
    pub source: Option<String>,
}

impl MatrixMeta {
    pub fn of(m: &MeasurementMatrix, source: Option<String>) -> Self {
        Self {
            rows: m.rows(),
            cols: m.cols(),
            ensemble: m.ensemble(),
            seed: m.seed(),
            source,
        }
    }
}

/// Thresholds, or the string `"degenerate"` when the coherence statistics
/// vanish and bound nothing.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum BoundsEntry {
    Report(BoundReport),
    Degenerate(&'static str),
}

impl BoundsEntry {
    pub fn from_profile(p: &CoherenceProfile) -> Result<Self> {
        if p.std <= SIGMA_FLOOR || p.mutual_coherence <= SIGMA_FLOOR {
            return Ok(BoundsEntry::Degenerate("degenerate"));
        }
        Ok(BoundsEntry::Report(sparsity_bounds(
            p.mutual_coherence.min(1.0),
            p.std.min(1.0),
        )?))
    }

    pub fn report(&self) -> Option<&BoundReport> {
        match self {
            BoundsEntry::Report(r) => Some(r),
            BoundsEntry::Degenerate(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum NormalityEntry {
    Report(FitReport),
    Unavailable { status: &'static str, detail: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandEntry {
    pub variant: RipVariant,
    pub g: f64,
    pub frequency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifySummary {
    pub k: usize,
    pub trials: usize,
    pub seed: u64,
    pub coeff_model: CoefficientModel,
    pub bands: Vec<BandEntry>,
    /// Grid points as multiples of the narrower band width.
    pub t_multiples: Vec<f64>,
    /// Ratio deviations `|r - 1|` against the scalar Bernstein tail with unit
    /// coefficient norm. Empty for `k < 2` or vanishing coherence spread.
    pub ratio_tail: Vec<TailPoint>,
    /// Spectral deviations against the operator Bernstein tail.
    pub spectral_tail: Vec<TailPoint>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub schema_version: u32,
    pub tool_version: &'static str,
    pub matrix: MatrixMeta,
    pub profile: CoherenceProfile,
    pub normality: NormalityEntry,
    pub bounds: BoundsEntry,
    pub verification: Option<VerifySummary>,
    pub config: Value,
}

/// Profile, normality check and sparsity bounds of a column-normalized
/// matrix.
pub fn audit(m: &MeasurementMatrix, source: Option<String>, bins: Option<usize>, config: Value) -> Result<AuditReport> {
    let profile = profile_matrix(m, bins)?;
    let normality = match normality_from_profile(&profile, &NormalityThresholds::default()) {
        Ok(r) => NormalityEntry::Report(r),
        Err(Error::InsufficientData(detail)) => NormalityEntry::Unavailable {
            status: "insufficient_data",
            detail,
        },
        Err(e) => return Err(e),
    };
    let bounds = BoundsEntry::from_profile(&profile)?;
    Ok(AuditReport {
        schema_version: SCHEMA_VERSION,
        tool_version: TOOL_VERSION,
        matrix: MatrixMeta::of(m, source),
        profile,
        normality,
        bounds,
        verification: None,
        config,
    })
}

/// Band frequencies at both widths and tail checks on the grid
/// `t_multiples * g`, where `g` is the narrower width at `k`.
pub fn verify(
    m: &MeasurementMatrix,
    sigma_mu: f64,
    k: usize,
    trials: usize,
    seed: u64,
    t_multiples: &[f64],
) -> Result<VerifySummary> {
    if t_multiples.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(Error::Domain("t-grid multiples must be positive".into()));
    }
    let sigma_mu = if sigma_mu <= SIGMA_FLOOR { 0.0 } else { sigma_mu };
    let model = CoefficientModel::Gaussian;
    let ratios = sample_ratios(m, k, trials, seed, model)?;
    let bands = [RipVariant::Thm1, RipVariant::Thm2]
        .into_iter()
        .map(|variant| {
            let g = rip_width(k, sigma_mu, variant).g;
            BandEntry {
                variant,
                g,
                frequency: band_frequency(&ratios, g),
            }
        })
        .collect();
    let g = rip_width(k, sigma_mu, RipVariant::Thm1).g;
    let (ratio_tail, spectral_tail) = if k >= 2 && g > 0.0 {
        let grid: Vec<f64> = t_multiples.iter().map(|c| c * g).collect();
        let spectral = sample_spectral(m, k, trials, seed)?;
        (
            tail_check(&ratios, &grid, |t| tail_eq6(t, k, sigma_mu, 1.0).expect("positive arguments")),
            tail_check(&spectral, &grid, |t| tail_eq11(t, k, sigma_mu).expect("positive arguments")),
        )
    } else {
        (Vec::new(), Vec::new())
    };
    let pass = ratio_tail.iter().chain(&spectral_tail).all(|p| p.ok);
    Ok(VerifySummary {
        k,
        trials,
        seed,
        coeff_model: model,
        bands,
        t_multiples: t_multiples.to_vec(),
        ratio_tail,
        spectral_tail,
        pass,
    })
}

/// CSV projection of the tail checks: `statistic,t,empirical,bound,slack,ok`.
pub fn tail_csv(v: &VerifySummary) -> String {
    let mut s = String::from("statistic,t,empirical,bound,slack,ok\n");
    for (name, points) in [("ratio", &v.ratio_tail), ("spectral", &v.spectral_tail)] {
        for p in points {
            s.push_str(&format!(
                "{name},{},{},{},{},{}\n",
                fmt_g12(p.t),
                fmt_g12(p.empirical),
                fmt_g12(p.bound),
                fmt_g12(p.slack),
                p.ok
            ));
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn g12_matches_printf() {
        let cases = [
            (1.0, "1"),
            (0.1, "0.1"),
            (1.0 / 3.0, "0.333333333333"),
            (2.0 / 3.0, "0.666666666667"),
            (123456789012.0, "123456789012"),
            (1234567890123.0, "1.23456789012e+12"),
            (1e-5, "1e-05"),
            (0.0001234, "0.0001234"),
            (-2.5e-7, "-2.5e-07"),
            (1e100, "1e+100"),
            (25.0, "25"),
            (0.0707106781187, "0.0707106781187"),
            (999999999999.5, "1e+12"),
        ];
        for (v, want) in cases {
            assert_eq!(fmt_g12(v), want, "{v}");
        }
    }

    #[test]
    fn canonical_sorts_keys() {
        let v = json!({"b": 1, "a": {"d": 0.5, "c": [1.0, 2.25]}, "e": null});
        let s = to_canonical_json(&v).unwrap();
        assert_eq!(
            s,
            "{\n  \"a\": {\n    \"c\": [\n      1,\n      2.25\n    ],\n    \"d\": 0.5\n  },\n  \"b\": 1,\n  \"e\": null\n}\n"
        );
    }

    #[test]
    fn canonical_is_valid_json() {
        let v = json!({"x": 1.0 / 7.0, "s": "quote \" here", "big": 1e300});
        let s = to_canonical_json(&v).unwrap();
        let back: Value = serde_json::from_str(&s).unwrap();
        assert!((back["x"].as_f64().unwrap() - 1.0 / 7.0).abs() < 1e-12);
        assert_eq!(back["s"], "quote \" here");
    }

    #[test]
    fn identity_audit_is_degenerate() {
        let m = MeasurementMatrix::identity(3).unwrap();
        let r = audit(&m, None, None, Value::Null).unwrap();
        assert_eq!(r.profile.mutual_coherence, 0.0);
        assert_eq!(r.bounds, BoundsEntry::Degenerate("degenerate"));
        let s = to_canonical_json(&r).unwrap();
        assert!(s.contains("\"bounds\": \"degenerate\""));
    }

    #[test]
    fn orthonormal_verify_passes() {
        let m = MeasurementMatrix::fourier_basis(32).unwrap();
        let sigma = profile_matrix(&m, None).unwrap().std;
        let v = verify(&m, sigma, 5, 500, 1, &[0.5, 1.0, 2.0]).unwrap();
        assert!(v.bands.iter().all(|b| b.frequency == 1.0));
        assert!(v.pass);
    }
}

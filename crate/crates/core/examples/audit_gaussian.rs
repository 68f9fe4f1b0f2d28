//! Coherence profile and sparsity bounds of a Gaussian 200x400 matrix.
//!
//! cargo run --release --example audit_gaussian -- [seed]

use coherence_audit::report::{audit, to_canonical_json};
use coherence_audit::{generate, EnsembleSpec};

fn main() -> coherence_audit::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let m = generate(&EnsembleSpec::gaussian(200, 400, seed))?;
    let report = audit(&m, None, None, serde_json::json!({ "example": "audit_gaussian" }))?;
    println!(
        "mu = {:.4}, sigma = {:.5}, {} pairs",
        report.profile.mutual_coherence, report.profile.std, report.profile.sample_count
    );
    print!("{}", to_canonical_json(&report)?);
    Ok(())
}

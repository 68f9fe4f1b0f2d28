//! Recover a sparse vector from measurements with a few gross corruptions.

use coherence_audit::separation::robust_recovery_trial_indexed;
use coherence_audit::{generate, EnsembleSpec};

fn main() -> coherence_audit::Result<()> {
    let d = generate(&EnsembleSpec::gaussian(128, 256, 6))?;
    for n_e in [0, 5, 10, 20, 40, 60] {
        let mut good = 0;
        for t in 0..20 {
            if robust_recovery_trial_indexed(&d, 5, n_e, 0.0, 31, t)?.rel_error <= 1e-2 {
                good += 1;
            }
        }
        println!("{n_e:>2} corruptions: {good}/20 recovered");
    }
    Ok(())
}

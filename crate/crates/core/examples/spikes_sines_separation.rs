//! Separate a signal into spikes and sinusoids.

use coherence_audit::separation::{joint_rip_check, separation_experiment, spikes_fourier};

fn main() -> coherence_audit::Result<()> {
    let (d, b) = spikes_fourier(128)?;
    let s = separation_experiment(&d, &b, 4, 4, 50, 0.0, None, 2024)?;
    println!(
        "{} trials: mean error x {:.2e}, e {:.2e}, {} successes",
        s.trials, s.mean_x_rel_error, s.mean_e_rel_error, s.successes
    );
    println!("condition margin {:.4} (ok = {})", s.condition.margin, s.condition.ok);
    let j = joint_rip_check(&d, Some(&b), 4, 4, 5000, 2024)?;
    println!(
        "joint band g = {:.4}: {:.4} inside; scaled g = {:.4}: {:.4} inside",
        j.g_joint, j.in_band, j.g_joint_scaled, j.in_band_scaled
    );
    Ok(())
}

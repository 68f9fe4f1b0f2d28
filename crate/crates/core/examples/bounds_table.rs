//! Sparsity thresholds over a grid of coherence statistics.

use coherence_audit::bounds::sparsity_bounds;

fn main() -> coherence_audit::Result<()> {
    println!("{:>6} {:>7} {:>6} {:>9} {:>5} {:>5} {:>5} {:>9}", "mu", "sigma", "worst", "heuristic", "thm1", "thm2", "thm3", "stable_k");
    for (mu, sigma) in [(0.3124, 0.0707), (0.2, 0.05), (0.15, 0.03), (0.1, 0.02), (0.05, 0.01)] {
        let r = sparsity_bounds(mu, sigma)?;
        println!(
            "{mu:>6} {sigma:>7} {:>6} {:>9} {:>5} {:>5} {:>5} {:>9}",
            r.worst_case.floor, r.heuristic.floor, r.thm1.floor, r.thm2.floor, r.thm3.floor, r.eq21_max_k
        );
    }
    Ok(())
}

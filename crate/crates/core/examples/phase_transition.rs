//! OMP success rate against sparsity on a Gaussian 100x500 matrix.
//!
//! cargo run --release --example phase_transition -- [omp|iht|cosamp|bpdn]

use coherence_audit::bounds::sparsity_bounds;
use coherence_audit::coherence::profile_matrix;
use coherence_audit::solvers::{phase_csv, phase_curve, MatrixSource, SolverSpec};
use coherence_audit::{generate, EnsembleSpec};

fn main() -> coherence_audit::Result<()> {
    let spec: SolverSpec = std::env::args().nth(1).unwrap_or_else(|| "omp".into()).parse()?;
    let m = generate(&EnsembleSpec::gaussian(100, 500, 1))?;
    let p = profile_matrix(&m, None)?;
    let bounds = sparsity_bounds(p.mutual_coherence, p.std)?;
    let pts = phase_curve(MatrixSource::Fixed(&m), &[2, 6, 10, 14, 18, 25, 30], &spec, 100, 0.0, 1)?;
    print!("{}", phase_csv(&pts));
    println!(
        "worst-case guarantee k <= {}, statistical k <= {}",
        bounds.worst_case.floor, bounds.thm1.floor
    );
    Ok(())
}

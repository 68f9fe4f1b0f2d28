//! Round-trip a matrix through the CSV and binary formats and audit the
//! loaded copy.

use coherence_audit::io::{load_matrix, save_matrix, MatrixFormat};
use coherence_audit::report::audit;
use coherence_audit::{generate, Ensemble, EnsembleSpec};

fn main() -> coherence_audit::Result<()> {
    let dir = std::env::temp_dir();
    let m = generate(&EnsembleSpec::new(Ensemble::PartialFourier, 64, 128, 3))?;
    for name in ["matrix.csv", "matrix.bin"] {
        let path = dir.join(name);
        let format = MatrixFormat::from_path(&path);
        save_matrix(&m, &path, format)?;
        let loaded = load_matrix(&path, format)?;
        let gap = (loaded.data() - m.data()).abs().max();
        let r = audit(&loaded, Some(path.display().to_string()), None, serde_json::Value::Null)?;
        println!("{name}: max gap {gap:.1e}, mu = {:.4}", r.profile.mutual_coherence);
    }
    Ok(())
}

//! Regenerates the bundled synthetic corpus under `crates/core/data`.

use veriscope::synth::{bundled_data_dir, generate, SynthConfig};

fn main() -> veriscope::Result<()> {
    let root = std::env::args().nth(1).map_or_else(bundled_data_dir, Into::into);
    let corpus = generate(&SynthConfig::default())?;
    for dir in ["fixtures/rumor", "fixtures/cqa"] {
        let path = root.join(dir);
        if path.exists() {
            std::fs::remove_dir_all(&path).map_err(|e| veriscope::Error::Io { path: path.clone(), source: e })?;
        }
    }
    corpus.write(&root)?;
    println!("wrote {} files to {}", corpus.files.len(), root.display());
    Ok(())
}

//! Saves a trained model to a single file and loads it back.

use std::collections::BTreeMap;

use hma::data::{generate_synthetic, load_model, save_model, Provenance, SyntheticSpec};
use hma::pipeline::{train_model, TrainOptions};

fn main() -> hma::Result<()> {
    let manifest = generate_synthetic(&SyntheticSpec::default())?;
    let provenance = Provenance {
        seed: 0,
        parameters: BTreeMap::from([("centers".to_string(), "12".to_string())]),
    };
    let container = train_model(&manifest, &TrainOptions::default(), provenance)?.container;
    let path = std::env::temp_dir().join("hma-example.hma");
    save_model(&container, &path)?;
    let loaded = load_model(&path)?;
    println!(
        "{} bytes, {} objects, style dim {}, identical: {}",
        std::fs::metadata(&path)?.len(),
        loaded.object_ids.len(),
        loaded.space.style_dim(),
        loaded == container
    );
    Ok(())
}

//! Generates the Fourier-curve dataset, writes its manifest and parses it back.

use hma::data::{generate_synthetic, load_manifest, Split, SyntheticSpec};

fn main() -> hma::Result<()> {
    let spec = SyntheticSpec {
        object_count: 3,
        views_per_object: 12,
        feature_dim: 8,
        ..SyntheticSpec::default()
    };
    let manifest = generate_synthetic(&spec)?;
    let path = std::env::temp_dir().join("hma-synthetic.txt");
    std::fs::write(&path, manifest.to_text())?;
    let back = load_manifest(&path)?;
    println!(
        "{} records ({} train, {} test) in {}",
        back.records.len(),
        back.split(Split::Train).count(),
        back.split(Split::Test).count(),
        path.display()
    );
    for line in manifest.to_text().lines().take(8) {
        println!("{line}");
    }
    Ok(())
}

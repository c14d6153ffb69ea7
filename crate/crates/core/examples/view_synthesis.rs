//! Trains on frames of a rotating bar and renders unseen angles.

use hma::data::{write_rotating_bar_dataset, Provenance, Split};
use hma::grbf::synthesis_mse;
use hma::pipeline::{reference_image, synthesize_object, train_model, CenterPlacement, TrainOptions};

fn main() -> hma::Result<()> {
    let dir = std::env::temp_dir().join("hma-view-synthesis");
    let manifest = write_rotating_bar_dataset(dir.join("bar.txt"), 32, 72, 4)?;
    let opts = TrainOptions {
        centers: CenterPlacement::TrainingViews,
        ..TrainOptions::default()
    };
    let container = train_model(&manifest, &opts, Provenance::default())?.container;

    let mut total = 0.0;
    let held: Vec<_> = manifest.split(Split::Test).collect();
    for (_, record) in &held {
        let img = synthesize_object(&container, 0, &record.pose()?)?;
        let hma::data::Media::Path(path) = &record.media else { unreachable!() };
        let truth = reference_image(&manifest.base_dir.join(path), &container.feature_config)?;
        total += synthesis_mse(&truth, &img)?;
    }
    let mse = total / held.len() as f64;
    println!("{} held-out views, mean MSE {mse:.3e} (0-1 scale), {:.3} on 0-255", held.len(), mse * 65025.0);

    let img = synthesize_object(&container, 0, &hma::manifold::PoseAngles::yaw_only(1.0)?)?;
    let out = dir.join("synth.pgm");
    img.scaled(255.0).save_8bit(&out)?;
    println!("wrote {}", out.display());
    Ok(())
}

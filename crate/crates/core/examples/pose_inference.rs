//! Estimates pose and style of held-out views with the particle sampler and
//! compares against the exhaustive grid.

use hma::data::{generate_synthetic, Provenance, Split, SyntheticSpec};
use hma::infer::{grid_oracle, infer_observed, InferenceConfig};
use hma::pipeline::{train_model, TrainOptions};

fn main() -> hma::Result<()> {
    let manifest = generate_synthetic(&SyntheticSpec::default())?;
    let space = train_model(&manifest, &TrainOptions::default(), Provenance::default())?
        .container
        .space;

    for (seed, (i, record)) in manifest.split(Split::Test).step_by(17).enumerate() {
        let y = manifest.features(i)?;
        let cfg = InferenceConfig::default().with_seed(seed as u64);
        let mut sigmas = Vec::new();
        let est = infer_observed(&space, &y, &cfg, |p| sigmas.push(p.sigma))?;
        let grid = grid_oracle(&space, &y, 1f64.to_radians())?;
        println!(
            "{} at {:>5.1}: sampler {:>6.2} (err {:.3e}), grid {:>6.2} (err {:.3e}), final sigma {:.2e}",
            record.object_id,
            record.yaw_deg,
            est.pose.yaw().to_degrees(),
            est.reconstruction_error,
            grid.pose.yaw().to_degrees(),
            grid.reconstruction_error,
            sigmas.last().unwrap(),
        );
    }
    Ok(())
}

//! Fuses two feature channels that share a viewpoint.

use hma::data::{generate_synthetic, Provenance, Split, SyntheticSpec};
use hma::infer::{infer, infer_multimodal, InferenceConfig};
use hma::pipeline::{train_model, TrainOptions};

fn main() -> hma::Result<()> {
    let spec_a = SyntheticSpec::default();
    let spec_b = SyntheticSpec {
        feature_dim: 20,
        seed: 1,
        noise_std: 0.05,
        ..SyntheticSpec::default()
    };
    let (a, b) = (generate_synthetic(&spec_a)?, generate_synthetic(&spec_b)?);
    let opts = TrainOptions::default();
    let space_a = train_model(&a, &opts, Provenance::default())?.container.space;
    let space_b = train_model(&b, &opts, Provenance::default())?.container.space;

    for (seed, (i, record)) in a.split(Split::Test).step_by(23).enumerate() {
        let cfg = InferenceConfig::default().with_seed(seed as u64);
        let (ya, yb) = (a.features(i)?, b.features(i)?);
        let single = infer(&space_a, &ya, &cfg)?;
        let fused = infer_multimodal(&space_a, &space_b, &ya, &yb, 0.5, 0.5, &cfg)?;
        println!(
            "truth {:>5.1}: channel a {:>6.2}, fused {:>6.2} (fused error {:.3e})",
            record.yaw_deg,
            single.pose.yaw().to_degrees(),
            fused.pose.yaw().to_degrees(),
            fused.fused_error
        );
    }
    Ok(())
}

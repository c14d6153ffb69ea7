//! Embeds poses on the unit circle, sphere and 3-sphere and reads them back.

use hma::manifold::{embed, place_centers, recover_angles, ManifoldCase, PoseAngles};

fn main() -> hma::Result<()> {
    let poses = [
        PoseAngles::yaw_only(30f64.to_radians())?,
        PoseAngles::yaw_pitch(200f64.to_radians(), (-20f64).to_radians())?,
        PoseAngles::yaw_pitch_roll(90f64.to_radians(), 10f64.to_radians(), 45f64.to_radians())?,
    ];
    for p in &poses {
        let x = embed(p);
        let back = recover_angles(&x)?;
        println!("{:?} -> {:.4?} -> {:.3?}", p.to_degrees(), x.coords(), back.to_degrees());
    }

    for case in [ManifoldCase::OneD, ManifoldCase::TwoD, ManifoldCase::ThreeD] {
        let centers = place_centers(8, case);
        println!("{} centers on the {} manifold, first {:.3?}", centers.len(), case.as_str(), centers[0].coords());
    }
    Ok(())
}

//! Fits a thin-plate mapping from the circle to a curve in feature space and
//! checks it between training views.

use std::f64::consts::TAU;

use hma::grbf::{fit_mapping, KernelConfig};
use hma::manifold::{embed, place_centers, ManifoldCase, PoseAngles};
use nalgebra::{DMatrix, DVector};

fn curve(theta: f64) -> DVector<f64> {
    DVector::from_vec(vec![theta.cos(), (2.0 * theta).sin(), 0.5 * (3.0 * theta).cos()])
}

fn main() -> hma::Result<()> {
    let n = 24;
    let angles: Vec<f64> = (0..n).map(|i| TAU * i as f64 / n as f64).collect();
    let xs = angles
        .iter()
        .map(|&a| PoseAngles::yaw_only(a).map(|p| embed(&p)))
        .collect::<hma::Result<Vec<_>>>()?;
    let ys = DMatrix::from_fn(n, 3, |i, j| curve(angles[i])[j]);

    let kernel = KernelConfig::thin_plate(place_centers(12, ManifoldCase::OneD))?;
    let model = fit_mapping(&xs, &ys, &kernel)?;
    println!("coefficients {}x{}", model.coefficients().nrows(), model.coefficients().ncols());

    for deg in [7.5, 100.0, 271.0] {
        let theta = f64::to_radians(deg);
        let y = model.evaluate(&embed(&PoseAngles::yaw_only(theta)?));
        println!("yaw {deg:>6.1}: error {:.2e}", (y - curve(theta)).norm());
    }
    Ok(())
}

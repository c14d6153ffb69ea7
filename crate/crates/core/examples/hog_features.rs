//! Extracts HOG and raw descriptors from a synthetic image, plus a depth map
//! with holes.

use hma::data::rotating_bar_image;
use hma::features::{extract, extract_depth, fill_depth_holes, FeatureConfig, Image};

fn main() -> hma::Result<()> {
    let img = rotating_bar_image(64, 0.6);
    for cfg in [FeatureConfig::hog(7, 9), FeatureConfig::hog(4, 9), FeatureConfig::raw(16, 16)] {
        let f = extract(&img, &cfg)?;
        let norm = f.values.iter().map(|v| v * v).sum::<f64>().sqrt();
        println!("{:?} grid {}: {} values, norm {norm:.3}, digest {:08x}", cfg.kind, cfg.hog_grid, f.values.len(), f.config_digest);
    }

    let depth = Image::from_fn(32, 32, |r, c| if (r + c) % 11 == 0 { 0.0 } else { 100.0 + r as f64 });
    let holes = depth.pixels().iter().filter(|v| **v == 0.0).count();
    let (_, left) = fill_depth_holes(&depth);
    let f = extract_depth(&depth, &FeatureConfig::hog(4, 9))?;
    println!("depth: {holes} holes, {left} left after filling, {} values", f.values.len());
    Ok(())
}

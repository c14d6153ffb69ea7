//! Image to feature-vector conversion.
//!
//! Two descriptors are supported: raw intensities (resized, scaled to `[0, 1]`,
//! row-major) and a grid-of-cells HOG descriptor with unsigned orientations and
//! optional global L2 normalization.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major grayscale image with real-valued pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    rows: usize,
    cols: usize,
    pixels: Vec<f64>,
}

impl Image {
    pub fn new(rows: usize, cols: usize, pixels: Vec<f64>) -> Result<Self> {
        if rows * cols != pixels.len() {
            return Err(Error::ShapeMismatch {
                expected: (rows, cols),
                found: (pixels.len(), 1),
            });
        }
        Ok(Image { rows, cols, pixels })
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut pixels = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                pixels.push(f(r, c));
            }
        }
        Image { rows, cols, pixels }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.pixels
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.pixels[r * self.cols + c]
    }

    /// Same image with every pixel multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Image {
        Image {
            rows: self.rows,
            cols: self.cols,
            pixels: self.pixels.iter().map(|p| p * factor).collect(),
        }
    }

    /// Reads PGM or PNG. 8-bit images keep their 0–255 scale, 16-bit images
    /// (depth maps) keep their raw values, and color is converted to luma.
    pub fn open(path: impl AsRef<Path>) -> Result<Image> {
        let path = path.as_ref();
        if !path.is_file() {
            return Err(Error::MissingMedia(path.to_path_buf()));
        }
        let dynamic = image::open(path)?;
        let (cols, rows) = (dynamic.width() as usize, dynamic.height() as usize);
        let pixels: Vec<f64> = match &dynamic {
            image::DynamicImage::ImageLuma16(buf) => buf.pixels().map(|p| p.0[0] as f64).collect(),
            image::DynamicImage::ImageLuma8(buf) => buf.pixels().map(|p| p.0[0] as f64).collect(),
            other => other.to_luma8().pixels().map(|p| p.0[0] as f64).collect(),
        };
        Image::new(rows, cols, pixels)
    }

    /// Writes an 8-bit grayscale PGM or PNG (by extension); values are rounded
    /// and clamped to 0–255.
    pub fn save_8bit(&self, path: impl AsRef<Path>) -> Result<()> {
        let bytes: Vec<u8> = self
            .pixels
            .iter()
            .map(|p| p.round().clamp(0.0, 255.0) as u8)
            .collect();
        let buf = image::GrayImage::from_raw(self.cols as u32, self.rows as u32, bytes)
            .expect("buffer length matches shape");
        buf.save(path.as_ref())?;
        Ok(())
    }
}

/// Bilinear resize using pixel-center alignment; an identity when the shape
/// is unchanged.
pub fn resize_bilinear(img: &Image, rows: usize, cols: usize) -> Image {
    if img.shape() == (rows, cols) {
        return img.clone();
    }
    let sy = img.rows as f64 / rows as f64;
    let sx = img.cols as f64 / cols as f64;
    let max_r = (img.rows - 1) as f64;
    let max_c = (img.cols - 1) as f64;
    Image::from_fn(rows, cols, |r, c| {
        let y = ((r as f64 + 0.5) * sy - 0.5).clamp(0.0, max_r);
        let x = ((c as f64 + 0.5) * sx - 0.5).clamp(0.0, max_c);
        let (y0, x0) = (y.floor() as usize, x.floor() as usize);
        let (y1, x1) = ((y0 + 1).min(img.rows - 1), (x0 + 1).min(img.cols - 1));
        let (fy, fx) = (y - y0 as f64, x - x0 as f64);
        let top = img.get(y0, x0) * (1.0 - fx) + img.get(y0, x1) * fx;
        let bottom = img.get(y1, x0) * (1.0 - fx) + img.get(y1, x1) * fx;
        top * (1.0 - fy) + bottom * fy
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Raw,
    Hog,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    None,
    L2Global,
}

/// Featurization settings. Stored with datasets and models so training and
/// test images are always processed the same way.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub kind: FeatureKind,
    pub resize_to: (usize, usize),
    pub hog_grid: usize,
    pub hog_bins: usize,
    pub normalize: Normalization,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig::hog(7, 9)
    }
}

const L2_EPS: f64 = 1e-12;

impl FeatureConfig {
    pub fn raw(rows: usize, cols: usize) -> Self {
        FeatureConfig {
            kind: FeatureKind::Raw,
            resize_to: (rows, cols),
            hog_grid: 1,
            hog_bins: 9,
            normalize: Normalization::None,
        }
    }

    /// HOG on an `n × n` grid over a 112×112 resize, globally L2 normalized.
    pub fn hog(grid: usize, bins: usize) -> Self {
        FeatureConfig {
            kind: FeatureKind::Hog,
            resize_to: (112, 112),
            hog_grid: grid,
            hog_bins: bins,
            normalize: Normalization::L2Global,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (r, c) = self.resize_to;
        if self.hog_grid < 1 || self.hog_bins < 2 || r < self.hog_grid || c < self.hog_grid {
            return Err(Error::InvalidConfig(format!(
                "feature config needs grid >= 1, bins >= 2 and resize >= grid: {self:?}"
            )));
        }
        Ok(())
    }

    pub fn feature_dim(&self) -> usize {
        match self.kind {
            FeatureKind::Raw => self.resize_to.0 * self.resize_to.1,
            FeatureKind::Hog => self.hog_grid * self.hog_grid * self.hog_bins,
        }
    }

    /// `key: value` header lines, in manifest order.
    pub fn header_pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            (
                "feature.kind",
                match self.kind {
                    FeatureKind::Raw => "raw",
                    FeatureKind::Hog => "hog",
                }
                .to_string(),
            ),
            ("feature.resize", format!("{}x{}", self.resize_to.0, self.resize_to.1)),
            ("feature.grid", self.hog_grid.to_string()),
            ("feature.bins", self.hog_bins.to_string()),
            (
                "feature.normalize",
                match self.normalize {
                    Normalization::None => "none",
                    Normalization::L2Global => "l2_global",
                }
                .to_string(),
            ),
        ]
    }

    /// Parses the header values produced by [`FeatureConfig::header_pairs`].
    pub fn from_header(get: impl Fn(&str) -> Option<String>) -> Result<Self> {
        let field = |key: &str| {
            get(key).ok_or_else(|| Error::InvalidConfig(format!("missing header key '{key}'")))
        };
        let bad = |key: &str, v: &str| Error::InvalidConfig(format!("bad value '{v}' for {key}"));
        let kind = match field("feature.kind")?.as_str() {
            "raw" => FeatureKind::Raw,
            "hog" => FeatureKind::Hog,
            v => return Err(bad("feature.kind", v)),
        };
        let resize = field("feature.resize")?;
        let (r, c) = resize
            .split_once('x')
            .and_then(|(r, c)| Some((r.trim().parse().ok()?, c.trim().parse().ok()?)))
            .ok_or_else(|| bad("feature.resize", &resize))?;
        let grid = field("feature.grid")?;
        let bins = field("feature.bins")?;
        let normalize = match field("feature.normalize")?.as_str() {
            "none" => Normalization::None,
            "l2_global" => Normalization::L2Global,
            v => return Err(bad("feature.normalize", v)),
        };
        let cfg = FeatureConfig {
            kind,
            resize_to: (r, c),
            hog_grid: grid.parse().map_err(|_| bad("feature.grid", &grid))?,
            hog_bins: bins.parse().map_err(|_| bad("feature.bins", &bins))?,
            normalize,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Stable identifier of this configuration.
    pub fn digest(&self) -> u32 {
        let text: String = self
            .header_pairs()
            .into_iter()
            .map(|(k, v)| format!("{k}={v};"))
            .collect();
        crc32fast::hash(text.as_bytes())
    }
}

/// A descriptor bound to the configuration that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub config_digest: u32,
}

/// Computes the configured descriptor of a grayscale image with pixels in 0–255.
pub fn extract(image: &Image, config: &FeatureConfig) -> Result<FeatureVector> {
    if image.is_empty() {
        return Err(Error::EmptyImage);
    }
    config.validate()?;
    let (rows, cols) = config.resize_to;
    let resized = resize_bilinear(image, rows, cols);
    let mut values = match config.kind {
        FeatureKind::Raw => resized.pixels.iter().map(|p| p / 255.0).collect(),
        FeatureKind::Hog => hog_cells(&resized, config.hog_grid, config.hog_bins),
    };
    if config.normalize == Normalization::L2Global {
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        values.iter_mut().for_each(|v| *v /= norm + L2_EPS);
    }
    Ok(FeatureVector {
        values,
        config_digest: config.digest(),
    })
}

/// Per-cell orientation histograms, cells concatenated row-major.
///
/// Bin `b` is centred on orientation `bπ/bins`; each gradient's magnitude is
/// split linearly between the two nearest centres, wrapping at π.
fn hog_cells(img: &Image, grid: usize, bins: usize) -> Vec<f64> {
    let (rows, cols) = img.shape();
    let mut hist = vec![0.0; grid * grid * bins];
    let bin_width = PI / bins as f64;
    for r in 0..rows {
        let up = r.saturating_sub(1);
        let down = (r + 1).min(rows - 1);
        let cell_r = r * grid / rows;
        for c in 0..cols {
            let left = c.saturating_sub(1);
            let right = (c + 1).min(cols - 1);
            let gx = img.get(r, right) - img.get(r, left);
            let gy = img.get(down, c) - img.get(up, c);
            let mag = gx.hypot(gy);
            if mag == 0.0 {
                continue;
            }
            let mut angle = gy.atan2(gx).rem_euclid(PI);
            if angle >= PI {
                angle = 0.0;
            }
            let pos = angle / bin_width;
            let lo = pos.floor() as usize % bins;
            let hi = (lo + 1) % bins;
            let frac = pos - pos.floor();
            let cell = (cell_r * grid + c * grid / cols) * bins;
            hist[cell + lo] += mag * (1.0 - frac);
            hist[cell + hi] += mag * frac;
        }
    }
    hist
}

const MAX_FILL_PASSES: usize = 10;

/// Fills zero-valued holes with the median of their valid 3×3 neighbours,
/// repeating until nothing changes or the pass limit is hit.
///
/// Returns the filled map and the number of holes left.
pub fn fill_depth_holes(depth: &Image) -> (Image, usize) {
    let (rows, cols) = depth.shape();
    let mut cur = depth.clone();
    for _ in 0..MAX_FILL_PASSES {
        let mut next = cur.clone();
        let mut changed = false;
        let mut neighbours = Vec::with_capacity(8);
        for r in 0..rows {
            for c in 0..cols {
                if cur.get(r, c) != 0.0 {
                    continue;
                }
                neighbours.clear();
                for rr in r.saturating_sub(1)..=(r + 1).min(rows - 1) {
                    for cc in c.saturating_sub(1)..=(c + 1).min(cols - 1) {
                        let v = cur.get(rr, cc);
                        if v != 0.0 {
                            neighbours.push(v);
                        }
                    }
                }
                if neighbours.is_empty() {
                    continue;
                }
                neighbours.sort_by(|a, b| a.total_cmp(b));
                let k = neighbours.len();
                let median = if k % 2 == 1 {
                    neighbours[k / 2]
                } else {
                    0.5 * (neighbours[k / 2 - 1] + neighbours[k / 2])
                };
                next.pixels[r * cols + c] = median;
                changed = true;
            }
        }
        cur = next;
        if !changed {
            break;
        }
    }
    let holes = cur.pixels.iter().filter(|v| **v == 0.0).count();
    (cur, holes)
}

/// Depth descriptor: fill holes, min-max scale valid depths to 0–255, then
/// [`extract`].
pub fn extract_depth(depth_image: &Image, config: &FeatureConfig) -> Result<FeatureVector> {
    if depth_image.is_empty() {
        return Err(Error::EmptyImage);
    }
    if depth_image.pixels.iter().any(|v| *v < 0.0 || !v.is_finite()) {
        return Err(Error::InvalidConfig("depth values must be finite and >= 0".into()));
    }
    if depth_image.pixels.iter().all(|v| *v == 0.0) {
        return Err(Error::AllHoles);
    }
    let (filled, _) = fill_depth_holes(depth_image);
    let valid = filled.pixels.iter().copied().filter(|v| *v != 0.0);
    let (lo, hi) = valid.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let span = hi - lo;
    let scaled = Image::from_fn(filled.rows, filled.cols, |r, c| {
        let v = filled.get(r, c);
        if v == 0.0 || span == 0.0 {
            0.0
        } else {
            (v - lo) / span * 255.0
        }
    });
    extract(&scaled, config)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hog_cfg(n: usize, bins: usize, size: usize) -> FeatureConfig {
        FeatureConfig {
            kind: FeatureKind::Hog,
            resize_to: (size, size),
            hog_grid: n,
            hog_bins: bins,
            normalize: Normalization::L2Global,
        }
    }

    fn textured(rows: usize, cols: usize) -> Image {
        Image::from_fn(rows, cols, |r, c| {
            let (x, y) = (c as f64, r as f64);
            120.0 + 60.0 * (0.4 * x + 0.1 * y).sin() + 40.0 * (0.23 * y - 0.3 * x).cos()
        })
    }

    #[test]
    fn constant_image_has_zero_hog() {
        let img = Image::from_fn(16, 16, |_, _| 77.0);
        let f = extract(&img, &hog_cfg(4, 9, 16)).unwrap();
        assert!(f.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn vertical_edge_lands_in_bin_zero() {
        let img = Image::from_fn(8, 8, |_, c| if c < 4 { 0.0 } else { 255.0 });
        let mut cfg = hog_cfg(2, 9, 8);
        cfg.normalize = Normalization::None;
        let f = extract(&img, &cfg).unwrap();
        // columns 3 and 4 see gx = 255 each, in the left and right cell columns
        for cell in 0..4 {
            let h = &f.values[cell * 9..cell * 9 + 9];
            assert_eq!(h[0], 4.0 * 255.0, "cell {cell}: {h:?}");
            assert!(h[1..].iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn hog_dimension_matches_grid() {
        let img = textured(40, 50);
        let f = extract(&img, &FeatureConfig::hog(7, 9)).unwrap();
        assert_eq!(f.values.len(), 441);
        let norm: f64 = f.values.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(norm <= 1.0 + 1e-9);
    }

    #[test]
    fn raw_features_scale_and_flatten() {
        let img = Image::from_fn(4, 6, |r, c| (r * 6 + c) as f64);
        let f = extract(&img, &FeatureConfig::raw(4, 6)).unwrap();
        assert_eq!(f.values.len(), 24);
        assert_eq!(f.values[7], 7.0 / 255.0);
    }

    #[test]
    fn empty_image_rejected() {
        let img = Image::new(0, 0, vec![]).unwrap();
        assert!(matches!(extract(&img, &FeatureConfig::default()), Err(Error::EmptyImage)));
    }

    #[test]
    fn hog_is_shift_and_scale_invariant() {
        let img = textured(30, 30);
        let cfg = hog_cfg(3, 9, 24);
        let base = extract(&img, &cfg).unwrap().values;
        let shifted = Image::from_fn(30, 30, |r, c| img.get(r, c) + 13.0);
        let scaled = img.scaled(0.37);
        for other in [shifted, scaled] {
            let v = extract(&other, &cfg).unwrap().values;
            for (a, b) in base.iter().zip(&v) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn extraction_is_deterministic() {
        let img = textured(33, 21);
        let cfg = FeatureConfig::hog(5, 8);
        assert_eq!(extract(&img, &cfg).unwrap(), extract(&img, &cfg).unwrap());
    }

    #[test]
    fn resize_identity_and_constant() {
        let img = textured(9, 9);
        assert_eq!(resize_bilinear(&img, 9, 9), img);
        let flat = Image::from_fn(7, 5, |_, _| 3.0);
        let up = resize_bilinear(&flat, 20, 11);
        assert!(up.pixels().iter().all(|p| (*p - 3.0).abs() < 1e-12));
    }

    #[test]
    fn config_header_round_trip() {
        let cfg = FeatureConfig::hog(5, 12);
        let pairs = cfg.header_pairs();
        let back = FeatureConfig::from_header(|k| {
            pairs.iter().find(|(key, _)| *key == k).map(|(_, v)| v.clone())
        })
        .unwrap();
        assert_eq!(back, cfg);
        assert_ne!(cfg.digest(), FeatureConfig::hog(7, 9).digest());
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = FeatureConfig::hog(7, 1);
        assert!(cfg.validate().is_err());
        cfg = FeatureConfig::hog(0, 9);
        assert!(cfg.validate().is_err());
        cfg = FeatureConfig::hog(7, 9);
        cfg.resize_to = (4, 100);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn hole_free_depth_matches_scaled_extract() {
        let depth = Image::from_fn(12, 12, |r, c| 500.0 + 10.0 * r as f64 + 3.0 * c as f64);
        let cfg = hog_cfg(3, 9, 12);
        let lo = 500.0;
        let hi = 500.0 + 110.0 + 33.0;
        let scaled = Image::from_fn(12, 12, |r, c| (depth.get(r, c) - lo) / (hi - lo) * 255.0);
        assert_eq!(
            extract_depth(&depth, &cfg).unwrap(),
            extract(&scaled, &cfg).unwrap()
        );
    }

    #[test]
    fn single_hole_is_filled() {
        let mut px = vec![800.0; 25];
        px[12] = 0.0;
        let depth = Image::new(5, 5, px).unwrap();
        let (filled, holes) = fill_depth_holes(&depth);
        assert_eq!(holes, 0);
        assert!(filled.pixels().iter().all(|v| *v == 800.0));
        let cfg = hog_cfg(1, 9, 5);
        let f = extract_depth(&depth, &cfg).unwrap();
        let constant = extract(&Image::from_fn(5, 5, |_, _| 0.0), &cfg).unwrap();
        assert_eq!(f, constant);
    }

    #[test]
    fn checkerboard_holes_vanish() {
        let depth = Image::from_fn(16, 16, |r, c| {
            if (r + c) % 2 == 0 {
                0.0
            } else {
                100.0 + (r * 16 + c) as f64
            }
        });
        let (filled, holes) = fill_depth_holes(&depth);
        assert_eq!(holes, 0);
        assert!(filled.pixels().iter().all(|v| *v > 0.0));
    }

    #[test]
    fn all_holes_rejected() {
        let depth = Image::from_fn(4, 4, |_, _| 0.0);
        assert!(matches!(extract_depth(&depth, &FeatureConfig::default()), Err(Error::AllHoles)));
    }
}

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::manifest::{DatasetManifest, Media, Record, Split};
use crate::error::{Error, Result};
use crate::features::{FeatureConfig, Image};
use crate::manifold::ManifoldCase;

/// Turntable objects whose view manifolds are truncated Fourier curves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub object_count: usize,
    pub views_per_object: usize,
    pub feature_dim: usize,
    pub harmonic_order: usize,
    pub noise_std: f64,
    pub seed: u64,
    /// Every `heldout_every`-th view goes to the test split; 0 keeps all views
    /// for training.
    pub heldout_every: usize,
    /// Objects cycle through this many categories.
    pub category_count: usize,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            object_count: 5,
            views_per_object: 72,
            feature_dim: 40,
            harmonic_order: 3,
            noise_std: 0.01,
            seed: 0,
            heldout_every: 4,
            category_count: 5,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.object_count == 0 || self.views_per_object == 0 {
            return Err(Error::InvalidConfig("object and view counts must be positive".into()));
        }
        if self.harmonic_order == 0 || self.feature_dim < 2 * self.harmonic_order {
            return Err(Error::InvalidConfig(format!(
                "feature dimension {} cannot hold {} harmonics",
                self.feature_dim, self.harmonic_order
            )));
        }
        if self.category_count == 0 {
            return Err(Error::InvalidConfig("category count must be positive".into()));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::InvalidConfig("noise std must be non-negative".into()));
        }
        Ok(())
    }

    pub fn object_id(k: usize) -> String {
        format!("obj{k}")
    }

    pub fn category_id(&self, k: usize) -> String {
        format!("cat{}", k % self.category_count)
    }

    pub fn angle(&self, i: usize) -> f64 {
        TAU * i as f64 / self.views_per_object as f64
    }

    pub fn is_heldout(&self, i: usize) -> bool {
        self.heldout_every > 0 && i % self.heldout_every == self.heldout_every - 1
    }
}

/// The per-object `D × 2H` mixing matrices, drawn from the dataset seed.
pub fn synthetic_bases(spec: &SyntheticSpec) -> Vec<DMatrix<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    (0..spec.object_count)
        .map(|_| {
            DMatrix::from_fn(spec.feature_dim, 2 * spec.harmonic_order, |_, _| {
                StandardNormal.sample(&mut rng)
            })
        })
        .collect()
}

/// Noise-free feature vector `B·[cos θ, sin θ, …, cos Hθ, sin Hθ]`.
pub fn render_fourier_view(basis: &DMatrix<f64>, theta: f64) -> DVector<f64> {
    let h = basis.ncols() / 2;
    let harmonics = DVector::from_fn(2 * h, |i, _| {
        let order = (i / 2 + 1) as f64;
        if i % 2 == 0 {
            (order * theta).cos()
        } else {
            (order * theta).sin()
        }
    });
    basis * harmonics
}

/// Builds an inline-feature manifest with ground-truth yaw labels.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<DatasetManifest> {
    spec.validate()?;
    let bases = synthetic_bases(spec);
    let mut noise_rng = ChaCha8Rng::seed_from_u64(spec.seed);
    noise_rng.set_stream(1);
    let mut records = Vec::with_capacity(spec.object_count * spec.views_per_object);
    for (k, basis) in bases.iter().enumerate() {
        for i in 0..spec.views_per_object {
            let theta = spec.angle(i);
            let mut y = render_fourier_view(basis, theta);
            if spec.noise_std > 0.0 {
                for v in y.iter_mut() {
                    let n: f64 = StandardNormal.sample(&mut noise_rng);
                    *v += spec.noise_std * n;
                }
            }
            records.push(Record {
                media: Media::Inline(y.as_slice().to_vec()),
                object_id: SyntheticSpec::object_id(k),
                category_id: spec.category_id(k),
                yaw_deg: 360.0 * i as f64 / spec.views_per_object as f64,
                pitch_deg: None,
                roll_deg: None,
                split: if spec.is_heldout(i) { Split::Test } else { Split::Train },
            });
        }
    }
    Ok(DatasetManifest {
        manifold_case: ManifoldCase::OneD,
        feature_config: FeatureConfig::default(),
        records,
        base_dir: PathBuf::new(),
    })
}

/// A clock hand pointing at angle `theta` (counter-clockwise from the +x
/// axis), intensities in 0–255 with a Gaussian edge profile.
pub fn rotating_bar_image(size: usize, theta: f64) -> Image {
    let c = (size as f64 - 1.0) / 2.0;
    let reach = 0.8 * c;
    let width = 0.08 * size as f64;
    let (dx, dy) = (theta.cos(), -theta.sin());
    Image::from_fn(size, size, |r, col| {
        let px = col as f64 - c;
        let py = r as f64 - c;
        let t = (px * dx + py * dy).clamp(0.0, reach);
        let d = (px - t * dx).hypot(py - t * dy);
        255.0 * (-(d * d) / (2.0 * width * width)).exp()
    })
}

/// Writes `views` PGM frames of a rotating bar next to a raw-intensity
/// manifest at `manifest_path`.
pub fn write_rotating_bar_dataset(
    manifest_path: impl AsRef<Path>,
    size: usize,
    views: usize,
    heldout_every: usize,
) -> Result<DatasetManifest> {
    let manifest_path = manifest_path.as_ref();
    let dir = manifest_path.parent().unwrap_or(Path::new(""));
    if !dir.as_os_str().is_empty() {
        std::fs::create_dir_all(dir)?;
    }
    let mut records = Vec::with_capacity(views);
    for i in 0..views {
        let theta = TAU * i as f64 / views as f64;
        let name = format!("bar_{i:03}.pgm");
        rotating_bar_image(size, theta).save_8bit(dir.join(&name))?;
        let held = heldout_every > 0 && i % heldout_every == heldout_every - 1;
        records.push(Record {
            media: Media::Path(PathBuf::from(name)),
            object_id: "bar".into(),
            category_id: "bar".into(),
            yaw_deg: 360.0 * i as f64 / views as f64,
            pitch_deg: None,
            roll_deg: None,
            split: if held { Split::Test } else { Split::Train },
        });
    }
    let manifest = DatasetManifest {
        manifold_case: ManifoldCase::OneD,
        feature_config: FeatureConfig::raw(size, size),
        records,
        base_dir: dir.to_path_buf(),
    };
    std::fs::write(manifest_path, manifest.to_text())?;
    Ok(manifest)
}

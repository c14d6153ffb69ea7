//! Conceptual view manifolds.
//!
//! Pose angles are embedded on a normalized sphere whose dimension follows the
//! number of rotational degrees of freedom: yaw only lives on the unit circle
//! in R^2, yaw and pitch on the 2-sphere in R^3, and yaw, pitch and roll on the
//! 3-sphere in R^4. The embedding preserves only topology; object-specific
//! geometry is carried by the mapping coefficients.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Unit-norm tolerance accepted by [`recover_angles`] and [`ConceptualPoint::new`].
pub const UNIT_NORM_TOL: f64 = 1e-9;

/// Number of rotational degrees of freedom, which fixes the conceptual manifold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ManifoldCase {
    /// Yaw only; unit circle in R^2.
    #[serde(rename = "1D")]
    OneD,
    /// Yaw and pitch; unit 2-sphere in R^3.
    #[serde(rename = "2D")]
    TwoD,
    /// Yaw, pitch and roll; unit 3-sphere in R^4.
    #[serde(rename = "3D")]
    ThreeD,
}

impl ManifoldCase {
    /// Length of an embedded coordinate vector.
    pub fn embedding_dim(self) -> usize {
        match self {
            ManifoldCase::OneD => 2,
            ManifoldCase::TwoD => 3,
            ManifoldCase::ThreeD => 4,
        }
    }

    pub fn from_embedding_dim(dim: usize) -> Option<Self> {
        match dim {
            2 => Some(ManifoldCase::OneD),
            3 => Some(ManifoldCase::TwoD),
            4 => Some(ManifoldCase::ThreeD),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ManifoldCase::OneD => "1D",
            ManifoldCase::TwoD => "2D",
            ManifoldCase::ThreeD => "3D",
        }
    }
}

impl fmt::Display for ManifoldCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ManifoldCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "1D" | "1d" => Ok(ManifoldCase::OneD),
            "2D" | "2d" => Ok(ManifoldCase::TwoD),
            "3D" | "3d" => Ok(ManifoldCase::ThreeD),
            other => Err(Error::InvalidConfig(format!("unknown manifold case '{other}'"))),
        }
    }
}

/// Orientation in radians.
///
/// Yaw is kept in `[0, 2π)`, pitch in `[-π/2, π/2]` and roll in `(-π/2, π/2)` so
/// that every inverse trigonometric recovery is single valued.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseAngles {
    yaw: f64,
    pitch: Option<f64>,
    roll: Option<f64>,
}

impl PoseAngles {
    pub fn yaw_only(yaw: f64) -> Result<Self> {
        Self::new(yaw, None, None)
    }

    pub fn yaw_pitch(yaw: f64, pitch: f64) -> Result<Self> {
        Self::new(yaw, Some(pitch), None)
    }

    pub fn yaw_pitch_roll(yaw: f64, pitch: f64, roll: f64) -> Result<Self> {
        Self::new(yaw, Some(pitch), Some(roll))
    }

    /// Validates the angles and wraps yaw into `[0, 2π)`.
    pub fn new(yaw: f64, pitch: Option<f64>, roll: Option<f64>) -> Result<Self> {
        if !yaw.is_finite() {
            return Err(Error::InvalidPose(format!("yaw {yaw} is not finite")));
        }
        if roll.is_some() && pitch.is_none() {
            return Err(Error::InvalidPose("roll requires pitch".into()));
        }
        if let Some(p) = pitch {
            if !p.is_finite() || !(-FRAC_PI_2..=FRAC_PI_2).contains(&p) {
                return Err(Error::InvalidPose(format!("pitch {p} outside [-π/2, π/2]")));
            }
        }
        if let Some(r) = roll {
            if !r.is_finite() || r <= -FRAC_PI_2 || r >= FRAC_PI_2 {
                return Err(Error::InvalidPose(format!("roll {r} outside (-π/2, π/2)")));
            }
        }
        Ok(PoseAngles {
            yaw: wrap_angle(yaw),
            pitch,
            roll,
        })
    }

    /// Builds a pose of the given case from degrees; missing angles default to zero.
    pub fn from_degrees(case: ManifoldCase, yaw: f64, pitch: f64, roll: f64) -> Result<Self> {
        match case {
            ManifoldCase::OneD => Self::yaw_only(yaw.to_radians()),
            ManifoldCase::TwoD => Self::yaw_pitch(yaw.to_radians(), pitch.to_radians()),
            ManifoldCase::ThreeD => {
                Self::yaw_pitch_roll(yaw.to_radians(), pitch.to_radians(), roll.to_radians())
            }
        }
    }

    pub fn yaw(&self) -> f64 {
        self.yaw
    }

    pub fn pitch(&self) -> Option<f64> {
        self.pitch
    }

    pub fn roll(&self) -> Option<f64> {
        self.roll
    }

    pub fn case(&self) -> ManifoldCase {
        match (self.pitch, self.roll) {
            (None, _) => ManifoldCase::OneD,
            (Some(_), None) => ManifoldCase::TwoD,
            (Some(_), Some(_)) => ManifoldCase::ThreeD,
        }
    }

    /// Angles in degrees as `[yaw, pitch, roll]`, absent entries omitted.
    pub fn to_degrees(&self) -> Vec<f64> {
        std::iter::once(self.yaw)
            .chain(self.pitch)
            .chain(self.roll)
            .map(f64::to_degrees)
            .collect()
    }

    /// Canonical pose for unconstrained angles.
    ///
    /// The result embeds to the same conceptual point as the raw angles. Pitch or
    /// roll that run past a pole are folded back over it; exactly at a pole the
    /// yaw is set to zero.
    pub(crate) fn canonicalize(
        case: ManifoldCase,
        yaw: f64,
        pitch: f64,
        roll: f64,
    ) -> PoseAngles {
        let coords = embed_raw(case, yaw, pitch, roll);
        recover_lenient(case, &coords)
    }
}

/// A point on the normalized conceptual sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptualPoint {
    coords: Vec<f64>,
}

impl ConceptualPoint {
    /// Wraps coordinates that are already unit norm within [`UNIT_NORM_TOL`].
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if ManifoldCase::from_embedding_dim(coords.len()).is_none() {
            return Err(Error::DimensionMismatch {
                what: "conceptual point",
                expected: 2,
                found: coords.len(),
            });
        }
        let norm = l2(&coords);
        if !norm.is_finite() || (norm - 1.0).abs() > UNIT_NORM_TOL {
            return Err(Error::InvalidPose(format!("conceptual point has norm {norm}")));
        }
        Ok(ConceptualPoint { coords })
    }

    /// Projects arbitrary nonzero coordinates onto the sphere.
    pub fn normalized(mut coords: Vec<f64>) -> Result<Self> {
        let norm = l2(&coords);
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidPose("cannot normalize a zero vector".into()));
        }
        coords.iter_mut().for_each(|c| *c /= norm);
        Self::new(coords)
    }

    pub(crate) fn from_unit(coords: Vec<f64>) -> Self {
        debug_assert!((l2(&coords) - 1.0).abs() < 1e-9);
        ConceptualPoint { coords }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn case(&self) -> ManifoldCase {
        ManifoldCase::from_embedding_dim(self.coords.len()).expect("validated at construction")
    }

    /// Chordal (ambient Euclidean) distance.
    pub fn distance(&self, other: &ConceptualPoint) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

fn embed_raw(case: ManifoldCase, yaw: f64, pitch: f64, roll: f64) -> Vec<f64> {
    let (sy, cy) = yaw.sin_cos();
    match case {
        ManifoldCase::OneD => vec![cy, sy],
        ManifoldCase::TwoD => {
            let (sp, cp) = pitch.sin_cos();
            vec![cy * cp, sy * cp, sp]
        }
        ManifoldCase::ThreeD => {
            let (sp, cp) = pitch.sin_cos();
            let (sr, cr) = roll.sin_cos();
            vec![cy * cp * cr, sy * cp * cr, sp * cr, sr]
        }
    }
}

/// Embeds a pose on its conceptual manifold.
pub fn embed(pose: &PoseAngles) -> ConceptualPoint {
    let coords = embed_raw(
        pose.case(),
        pose.yaw,
        pose.pitch.unwrap_or(0.0),
        pose.roll.unwrap_or(0.0),
    );
    ConceptualPoint::from_unit(coords)
}

/// Recovers pose angles from an embedded point.
///
/// Yaw uses the two-argument arctangent so the full circle is recovered. Pitch
/// and roll are computed as `atan2(x_i, ‖x_{<i}‖)`, which equals the arcsine
/// of the corresponding coordinate but stays accurate near the poles.
pub fn recover_angles(x: &ConceptualPoint) -> Result<PoseAngles> {
    let c = &x.coords;
    let norm = l2(c);
    if (norm - 1.0).abs() > UNIT_NORM_TOL {
        return Err(Error::InvalidPose(format!("conceptual point has norm {norm}")));
    }
    let case = x.case();
    match case {
        ManifoldCase::OneD => {}
        ManifoldCase::TwoD => {
            if c[2].abs() >= 1.0 - UNIT_NORM_TOL {
                return Err(Error::GimbalDegenerate);
            }
        }
        ManifoldCase::ThreeD => {
            if c[3].abs() >= 1.0 - UNIT_NORM_TOL || c[2].abs() >= 1.0 - UNIT_NORM_TOL {
                return Err(Error::GimbalDegenerate);
            }
        }
    }
    Ok(recover_lenient(case, c))
}

fn recover_lenient(case: ManifoldCase, c: &[f64]) -> PoseAngles {
    let planar = c[0].hypot(c[1]);
    let yaw = if planar == 0.0 {
        0.0
    } else {
        wrap_angle(c[1].atan2(c[0]))
    };
    match case {
        ManifoldCase::OneD => PoseAngles {
            yaw,
            pitch: None,
            roll: None,
        },
        ManifoldCase::TwoD => PoseAngles {
            yaw,
            pitch: Some(c[2].atan2(planar)),
            roll: None,
        },
        ManifoldCase::ThreeD => {
            let spatial = planar.hypot(c[2]);
            let limit = FRAC_PI_2 - 1e-12;
            PoseAngles {
                yaw,
                pitch: Some(c[2].atan2(planar)),
                roll: Some(c[3].atan2(spatial).clamp(-limit, limit)),
            }
        }
    }
}

/// Circular distance between two angles, in `[0, π]`.
pub fn angular_error(a: f64, b: f64) -> f64 {
    let d = (a - b).abs().rem_euclid(TAU);
    d.min(TAU - d)
}

/// Deterministic, roughly uniform mapping centers on the conceptual manifold.
///
/// The circle gets equally spaced angles starting at zero, the 2-sphere a
/// Fibonacci lattice and the 3-sphere a super-Fibonacci spiral.
pub fn place_centers(count: usize, case: ManifoldCase) -> Vec<ConceptualPoint> {
    assert!(count >= 1, "at least one center is required");
    let n = count as f64;
    match case {
        ManifoldCase::OneD => (0..count)
            .map(|j| {
                let t = TAU * j as f64 / n;
                ConceptualPoint::from_unit(vec![t.cos(), t.sin()])
            })
            .collect(),
        ManifoldCase::TwoD => {
            let golden_angle = PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|i| {
                    let z = 1.0 - (2.0 * i as f64 + 1.0) / n;
                    let r = (1.0 - z * z).max(0.0).sqrt();
                    let phi = golden_angle * i as f64;
                    normalize_exact(vec![r * phi.cos(), r * phi.sin(), z])
                })
                .collect()
        }
        ManifoldCase::ThreeD => {
            // Irrational steps for the two Hopf-fibre angles.
            let phi = std::f64::consts::SQRT_2;
            let psi = 1.533_751_168_755_204_3_f64;
            (0..count)
                .map(|i| {
                    let s = i as f64 + 0.5;
                    let r = (s / n).sqrt();
                    let big_r = (1.0 - s / n).sqrt();
                    let alpha = TAU * s / phi;
                    let beta = TAU * s / psi;
                    normalize_exact(vec![
                        r * alpha.sin(),
                        r * alpha.cos(),
                        big_r * beta.sin(),
                        big_r * beta.cos(),
                    ])
                })
                .collect()
        }
    }
}

fn normalize_exact(mut v: Vec<f64>) -> ConceptualPoint {
    let n = l2(&v);
    v.iter_mut().for_each(|x| *x /= n);
    ConceptualPoint::from_unit(v)
}

/// Draws a point uniformly on the conceptual manifold and returns its pose.
pub(crate) fn sample_uniform_pose<R: rand::Rng + ?Sized>(
    case: ManifoldCase,
    rng: &mut R,
) -> PoseAngles {
    use rand_distr::{Distribution, StandardNormal};
    loop {
        let v: Vec<f64> = (0..case.embedding_dim())
            .map(|_| StandardNormal.sample(rng))
            .collect();
        let n = l2(&v);
        if n > 1e-12 {
            let unit: Vec<f64> = v.iter().map(|x| x / n).collect();
            return recover_lenient(case, &unit);
        }
    }
}

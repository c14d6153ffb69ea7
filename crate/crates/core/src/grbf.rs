//! Generalized radial basis function mappings from the conceptual manifold to
//! feature space.
//!
//! Each output dimension is an RBF expansion around `M` centers plus a linear
//! polynomial `[1, xᵀ]·c`, giving `γ(x) = C·ψ(x)` with
//! `ψ(x) = [φ(‖x − z_1‖), …, φ(‖x − z_M‖), 1, xᵀ]ᵀ`. Coefficients are found by
//! solving the bordered system
//!
//! ```text
//! | A + λI   P_x | Cᵀ = | Y |
//! | P_tᵀ      0  |      | 0 |
//! ```
//!
//! directly when there are as many views as centers, and through its
//! constrained least-squares normal equations otherwise.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::Image;
use crate::manifold::{embed, ConceptualPoint, ManifoldCase, PoseAngles};

pub const DEFAULT_RIDGE: f64 = 1e-8;

/// Condition number above which the bordered system counts as singular.
pub const SINGULAR_CONDITION: f64 = 1e12;

/// Relative tolerance on the orthogonality side conditions `P_tᵀ ω = 0`.
pub const SIDE_CONDITION_TOL: f64 = 1e-6;

/// Radial basis function `φ(r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BasisFunction {
    /// `r² log r`, with `φ(0) = 0`.
    ThinPlateSpline,
    /// `exp(−r² / 2w²)`.
    Gaussian { width: f64 },
    /// `sqrt(r² + c²)`.
    Multiquadric { shape: f64 },
}

impl BasisFunction {
    #[inline]
    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            BasisFunction::ThinPlateSpline => {
                if r <= 0.0 {
                    0.0
                } else {
                    let v = r * r * r.ln();
                    // r² underflows before ln(r) overflows; keep the 0·(−∞) case out.
                    if v.is_finite() {
                        v
                    } else {
                        0.0
                    }
                }
            }
            BasisFunction::Gaussian { width } => (-(r * r) / (2.0 * width * width)).exp(),
            BasisFunction::Multiquadric { shape } => (r * r + shape * shape).sqrt(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BasisFunction::ThinPlateSpline => "thin_plate_spline",
            BasisFunction::Gaussian { .. } => "gaussian",
            BasisFunction::Multiquadric { .. } => "multiquadric",
        }
    }

    /// Shape parameter (Gaussian width or multiquadric shape), if any.
    pub fn shape_param(&self) -> Option<f64> {
        match *self {
            BasisFunction::ThinPlateSpline => None,
            BasisFunction::Gaussian { width } => Some(width),
            BasisFunction::Multiquadric { shape } => Some(shape),
        }
    }

    pub fn from_name(name: &str, shape: Option<f64>) -> Result<Self> {
        let need = |what: &str| {
            shape.ok_or_else(|| Error::InvalidConfig(format!("{what} basis needs a shape parameter")))
        };
        match name {
            "thin_plate_spline" | "tps" | "thin-plate" => Ok(BasisFunction::ThinPlateSpline),
            "gaussian" => Ok(BasisFunction::Gaussian { width: need("gaussian")? }),
            "multiquadric" => Ok(BasisFunction::Multiquadric { shape: need("multiquadric")? }),
            other => Err(Error::InvalidConfig(format!("unknown basis '{other}'"))),
        }
    }
}

/// Kernel map configuration shared by every object in a style space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    basis: BasisFunction,
    centers: Vec<ConceptualPoint>,
    ridge: f64,
    polynomial: bool,
}

impl KernelConfig {
    /// Configuration with the linear polynomial part.
    pub fn new(basis: BasisFunction, centers: Vec<ConceptualPoint>, ridge: f64) -> Result<Self> {
        let cfg = KernelConfig {
            basis,
            centers,
            ridge,
            polynomial: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Thin-plate spline with the default ridge.
    pub fn thin_plate(centers: Vec<ConceptualPoint>) -> Result<Self> {
        Self::new(BasisFunction::ThinPlateSpline, centers, DEFAULT_RIDGE)
    }

    /// Gaussian configuration without a polynomial part.
    pub fn gaussian_pure(width: f64, centers: Vec<ConceptualPoint>, ridge: f64) -> Result<Self> {
        let cfg = KernelConfig {
            basis: BasisFunction::Gaussian { width },
            centers,
            ridge,
            polynomial: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub(crate) fn from_parts(
        basis: BasisFunction,
        centers: Vec<ConceptualPoint>,
        ridge: f64,
        polynomial: bool,
    ) -> Result<Self> {
        let cfg = KernelConfig {
            basis,
            centers,
            ridge,
            polynomial,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.centers.is_empty() {
            return Err(Error::InvalidConfig("kernel needs at least one center".into()));
        }
        let dim = self.centers[0].dim();
        if self.centers.iter().any(|c| c.dim() != dim) {
            return Err(Error::InvalidConfig("centers have mixed dimensions".into()));
        }
        if !(self.ridge >= 0.0 && self.ridge.is_finite()) {
            return Err(Error::InvalidConfig(format!("ridge {} must be >= 0", self.ridge)));
        }
        match self.basis {
            BasisFunction::ThinPlateSpline => {}
            BasisFunction::Gaussian { width: s } | BasisFunction::Multiquadric { shape: s } => {
                if !(s > 0.0 && s.is_finite()) {
                    return Err(Error::InvalidConfig(format!("shape parameter {s} must be > 0")));
                }
            }
        }
        if !self.polynomial && !matches!(self.basis, BasisFunction::Gaussian { .. }) {
            return Err(Error::InvalidConfig(
                "only the gaussian basis may omit the polynomial part".into(),
            ));
        }
        Ok(())
    }

    pub fn basis(&self) -> BasisFunction {
        self.basis
    }

    pub fn centers(&self) -> &[ConceptualPoint] {
        &self.centers
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    pub fn has_polynomial(&self) -> bool {
        self.polynomial
    }

    pub fn num_centers(&self) -> usize {
        self.centers.len()
    }

    pub fn case(&self) -> ManifoldCase {
        self.centers[0].case()
    }

    pub fn embedding_dim(&self) -> usize {
        self.centers[0].dim()
    }

    /// Number of polynomial terms, `e + 1` or zero.
    pub fn polynomial_len(&self) -> usize {
        if self.polynomial {
            self.embedding_dim() + 1
        } else {
            0
        }
    }

    /// Length `N_ψ` of the kernel map.
    pub fn feature_len(&self) -> usize {
        self.num_centers() + self.polynomial_len()
    }

    pub fn with_ridge(mut self, ridge: f64) -> Result<Self> {
        self.ridge = ridge;
        self.validate()?;
        Ok(self)
    }
}

/// Kernel map `ψ(x)`.
pub type KernelFeatures = DVector<f64>;

/// Evaluates `ψ(x)`: basis responses to each center, then `[1, xᵀ]` when the
/// polynomial part is present.
pub fn kernel_map(x: &ConceptualPoint, config: &KernelConfig) -> KernelFeatures {
    let m = config.num_centers();
    let mut out = DVector::zeros(config.feature_len());
    for (j, z) in config.centers.iter().enumerate() {
        out[j] = config.basis.eval(x.distance(z));
    }
    if config.polynomial {
        out[m] = 1.0;
        for (i, &xi) in x.coords().iter().enumerate() {
            out[m + 1 + i] = xi;
        }
    }
    out
}

/// A fitted mapping `γ(x) = C·ψ(x)` for one object.
#[derive(Debug, Clone, PartialEq)]
pub struct MappingModel {
    coefficients: DMatrix<f64>,
    kernel: KernelConfig,
}

impl MappingModel {
    pub fn new(coefficients: DMatrix<f64>, kernel: KernelConfig) -> Result<Self> {
        if coefficients.ncols() != kernel.feature_len() {
            return Err(Error::DimensionMismatch {
                what: "coefficient columns",
                expected: kernel.feature_len(),
                found: coefficients.ncols(),
            });
        }
        if coefficients.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericalFailure("non-finite mapping coefficient".into()));
        }
        Ok(MappingModel {
            coefficients,
            kernel,
        })
    }

    pub fn coefficients(&self) -> &DMatrix<f64> {
        &self.coefficients
    }

    pub fn kernel(&self) -> &KernelConfig {
        &self.kernel
    }

    pub fn feature_dim(&self) -> usize {
        self.coefficients.nrows()
    }

    /// The RBF weights ω (first `M` columns of `C`).
    pub fn rbf_block(&self) -> DMatrix<f64> {
        self.coefficients.columns(0, self.kernel.num_centers()).into_owned()
    }

    pub fn evaluate(&self, x: &ConceptualPoint) -> DVector<f64> {
        evaluate_mapping(self, x)
    }
}

/// `C·ψ(x)`.
pub fn evaluate_mapping(model: &MappingModel, x: &ConceptualPoint) -> DVector<f64> {
    &model.coefficients * kernel_map(x, &model.kernel)
}

/// Learns the coefficient matrix for one object from its views.
///
/// `observations` holds one view per row (`N × D`), aligned with `embeddings`.
pub fn fit_mapping(
    embeddings: &[ConceptualPoint],
    observations: &DMatrix<f64>,
    config: &KernelConfig,
) -> Result<MappingModel> {
    let n = embeddings.len();
    let m = config.num_centers();
    let p = config.polynomial_len();
    let e = config.embedding_dim();
    let d = observations.ncols();

    if n < 2 {
        return Err(Error::DimensionMismatch {
            what: "training views (at least 2)",
            expected: 2,
            found: n,
        });
    }
    if observations.nrows() != n {
        return Err(Error::DimensionMismatch {
            what: "observation rows",
            expected: n,
            found: observations.nrows(),
        });
    }
    if let Some(bad) = embeddings.iter().find(|x| x.dim() != e) {
        return Err(Error::DimensionMismatch {
            what: "embedding dimension",
            expected: e,
            found: bad.dim(),
        });
    }
    if p > 0 && n < p {
        return Err(Error::DimensionMismatch {
            what: "training views for the polynomial part",
            expected: p,
            found: n,
        });
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if embeddings[i].distance(&embeddings[j]) <= 1e-12 {
                return Err(Error::SingularSystem {
                    condition: f64::INFINITY,
                });
            }
        }
    }

    let basis = config.basis;
    let a = DMatrix::from_fn(n, m, |i, j| basis.eval(embeddings[i].distance(&config.centers[j])));
    let px = DMatrix::from_fn(n, p, |i, k| if k == 0 { 1.0 } else { embeddings[i].coords()[k - 1] });
    let pt = DMatrix::from_fn(m, p, |i, k| {
        if k == 0 {
            1.0
        } else {
            config.centers[i].coords()[k - 1]
        }
    });
    let lambda = config.ridge;

    let (system, rhs) = if n == m {
        let size = m + p;
        let mut s = DMatrix::zeros(size, size);
        s.view_mut((0, 0), (m, m)).copy_from(&a);
        for i in 0..m {
            s[(i, i)] += lambda;
        }
        s.view_mut((0, m), (m, p)).copy_from(&px);
        s.view_mut((m, 0), (p, m)).copy_from(&pt.transpose());
        let mut r = DMatrix::zeros(size, d);
        r.view_mut((0, 0), (n, d)).copy_from(observations);
        (s, r)
    } else {
        // Normal equations of min ‖Aω + P_x c − Y‖² + λ‖ω‖² subject to P_tᵀω = 0.
        let mut b = DMatrix::zeros(n, m + p);
        b.view_mut((0, 0), (n, m)).copy_from(&a);
        b.view_mut((0, m), (n, p)).copy_from(&px);
        let bt = b.transpose();
        let size = m + 2 * p;
        let mut s = DMatrix::zeros(size, size);
        s.view_mut((0, 0), (m + p, m + p)).copy_from(&(&bt * &b));
        for i in 0..m {
            s[(i, i)] += lambda;
        }
        let ptt = pt.transpose();
        s.view_mut((m + p, 0), (p, m)).copy_from(&ptt);
        s.view_mut((0, m + p), (m, p)).copy_from(&pt);
        let mut r = DMatrix::zeros(size, d);
        r.view_mut((0, 0), (m + p, d)).copy_from(&(&bt * observations));
        (s, r)
    };

    let condition = condition_number(&system);
    if !(condition <= SINGULAR_CONDITION) {
        return Err(Error::SingularSystem { condition });
    }

    let solution = system
        .lu()
        .solve(&rhs)
        .ok_or(Error::SingularSystem { condition })?;
    let coefficients = solution.rows(0, m + p).transpose();

    if p > 0 {
        let omega = solution.rows(0, m);
        let violation = (pt.transpose() * omega).norm();
        let scale = pt.norm() * coefficients.norm();
        if violation > SIDE_CONDITION_TOL * scale + f64::MIN_POSITIVE {
            return Err(Error::NumericalFailure(format!(
                "side conditions violated: ‖P_tᵀω‖ = {violation:.3e}"
            )));
        }
    }

    MappingModel::new(coefficients, config.clone())
}

fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.singular_values();
    let max = sv.max();
    let min = sv.min();
    if min <= 0.0 || !min.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Renders the mapping at a pose as an image, clamped to `[0, 1]`.
pub fn synthesize_view(
    model: &MappingModel,
    pose: &PoseAngles,
    image_shape: (usize, usize),
) -> Result<Image> {
    let (rows, cols) = image_shape;
    if rows * cols != model.feature_dim() {
        return Err(Error::ShapeMismatch {
            expected: image_shape,
            found: (model.feature_dim(), 1),
        });
    }
    if pose.case() != model.kernel.case() {
        return Err(Error::DimensionMismatch {
            what: "pose degrees of freedom",
            expected: model.kernel.embedding_dim(),
            found: pose.case().embedding_dim(),
        });
    }
    let values = evaluate_mapping(model, &embed(pose));
    let pixels = values.iter().map(|v| v.clamp(0.0, 1.0)).collect();
    Image::new(rows, cols, pixels)
}

/// Mean squared pixel difference, on whatever intensity scale the images use.
pub fn synthesis_mse(reference: &Image, synthesized: &Image) -> Result<f64> {
    if reference.shape() != synthesized.shape() {
        return Err(Error::ShapeMismatch {
            expected: reference.shape(),
            found: synthesized.shape(),
        });
    }
    let n = reference.pixels().len() as f64;
    let sum: f64 = reference
        .pixels()
        .iter()
        .zip(synthesized.pixels())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sum / n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::place_centers;
    use std::f64::consts::TAU;

    fn circle(n: usize) -> Vec<ConceptualPoint> {
        place_centers(n, ManifoldCase::OneD)
    }

    fn at(theta: f64) -> ConceptualPoint {
        embed(&PoseAngles::yaw_only(theta).unwrap())
    }

    fn harmonics(theta: f64) -> Vec<f64> {
        vec![theta.cos(), theta.sin(), (2.0 * theta).cos(), (2.0 * theta).sin()]
    }

    #[test]
    fn thin_plate_is_zero_at_center() {
        let cfg = KernelConfig::thin_plate(circle(5)).unwrap();
        let psi = kernel_map(&cfg.centers()[0].clone(), &cfg);
        assert_eq!(psi[0], 0.0);
        assert_eq!(BasisFunction::ThinPlateSpline.eval(1e-300), 0.0);
        assert!(BasisFunction::ThinPlateSpline.eval(1e-150).is_finite());
    }

    #[test]
    fn gaussian_at_one_width() {
        let width = 0.3;
        let center = at(0.0);
        let cfg = KernelConfig::gaussian_pure(width, vec![center], 0.0).unwrap();
        // chord 2 sin(t/2) = width
        let t = 2.0 * (width / 2.0).asin();
        let psi = kernel_map(&at(t), &cfg);
        assert_eq!(psi.len(), 1);
        assert!((psi[0] - (-0.5f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn three_center_kernel_map() {
        let cfg = KernelConfig::thin_plate(circle(3)).unwrap();
        let psi = kernel_map(&at(0.0), &cfg);
        let phi = 3.0 * 3f64.sqrt().ln();
        let expected = [0.0, phi, phi, 1.0, 1.0, 0.0];
        assert_eq!(psi.len(), 6);
        for (v, e) in psi.iter().zip(expected) {
            assert!((v - e).abs() < 1e-12, "{psi:?}");
        }
    }

    #[test]
    fn polynomial_tail_is_exact() {
        let cfg = KernelConfig::thin_plate(place_centers(9, ManifoldCase::TwoD)).unwrap();
        let x = embed(&PoseAngles::yaw_pitch(0.4, -0.2).unwrap());
        let psi = kernel_map(&x, &cfg);
        assert_eq!(psi[9], 1.0);
        assert_eq!(&psi.as_slice()[10..], x.coords());
    }

    #[test]
    fn config_validation() {
        assert!(KernelConfig::thin_plate(vec![]).is_err());
        assert!(KernelConfig::new(BasisFunction::ThinPlateSpline, circle(4), -1.0).is_err());
        assert!(KernelConfig::new(BasisFunction::Gaussian { width: 0.0 }, circle(4), 0.0).is_err());
        assert!(KernelConfig::from_parts(BasisFunction::ThinPlateSpline, circle(4), 0.0, false).is_err());
    }

    #[test]
    fn constant_observations_are_reproduced() {
        let y0 = [3.0, -1.5, 0.25];
        for (n, m) in [(8, 8), (30, 6)] {
            let xs: Vec<_> = (0..n).map(|i| at(TAU * i as f64 / n as f64 + 0.1)).collect();
            let obs = DMatrix::from_fn(n, 3, |_, j| y0[j]);
            for basis in [BasisFunction::ThinPlateSpline, BasisFunction::Multiquadric { shape: 0.5 }] {
                let cfg = KernelConfig::new(basis, circle(m), DEFAULT_RIDGE).unwrap();
                let model = fit_mapping(&xs, &obs, &cfg).unwrap();
                for t in [0.0, 1.0, 2.5, 4.0] {
                    let v = model.evaluate(&at(t));
                    for j in 0..3 {
                        assert!((v[j] - y0[j]).abs() < 1e-6);
                    }
                }
            }
        }
    }

    #[test]
    fn square_system_interpolates() {
        let xs = circle(8);
        let obs = DMatrix::from_fn(8, 2, |i, j| {
            let t = TAU * i as f64 / 8.0;
            if j == 0 {
                t.cos()
            } else {
                t.sin()
            }
        });
        let cfg = KernelConfig::thin_plate(xs.clone()).unwrap();
        let model = fit_mapping(&xs, &obs, &cfg).unwrap();
        for (i, x) in xs.iter().enumerate() {
            let diff = model.evaluate(x) - obs.row(i).transpose();
            assert!(diff.norm() < 1e-6);
        }
    }

    fn worst_dense_error(model: &MappingModel) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 0..3600 {
            let t = TAU * (k as f64 + 0.37) / 3600.0;
            let diff = model.evaluate(&at(t)) - DVector::from_vec(harmonics(t));
            worst = worst.max(diff.norm());
        }
        worst
    }

    #[test]
    fn least_squares_fit_generalizes() {
        let n = 72;
        let xs: Vec<_> = (0..n).map(|i| at(TAU * i as f64 / n as f64)).collect();
        let obs = DMatrix::from_fn(n, 4, |i, j| harmonics(TAU * i as f64 / n as f64)[j]);

        // Best achievable with 12 thin-plate centers, from an independent
        // null-space least-squares solve.
        let tps = fit_mapping(&xs, &obs, &KernelConfig::thin_plate(circle(12)).unwrap()).unwrap();
        let worst = worst_dense_error(&tps);
        assert!((worst - 9.623_125_66e-3).abs() < 1e-6, "thin-plate worst {worst}");

        let mq = KernelConfig::new(BasisFunction::Multiquadric { shape: 1.0 }, circle(12), DEFAULT_RIDGE)
            .unwrap();
        let worst = worst_dense_error(&fit_mapping(&xs, &obs, &mq).unwrap());
        assert!(worst < 1e-3, "multiquadric worst {worst}");
    }

    #[test]
    fn side_conditions_hold() {
        let n = 40;
        let xs: Vec<_> = (0..n).map(|i| at(TAU * i as f64 / n as f64)).collect();
        let obs = DMatrix::from_fn(n, 4, |i, j| harmonics(TAU * i as f64 / n as f64)[j] * 3.0);
        let cfg = KernelConfig::thin_plate(circle(10)).unwrap();
        let model = fit_mapping(&xs, &obs, &cfg).unwrap();
        let pt = DMatrix::from_fn(10, 3, |i, k| {
            if k == 0 {
                1.0
            } else {
                cfg.centers()[i].coords()[k - 1]
            }
        });
        let omega = model.rbf_block();
        let viol = (&omega * &pt).norm();
        assert!(viol < 1e-6 * omega.norm().max(1.0), "{viol}");
    }

    #[test]
    fn scaling_observations_scales_coefficients() {
        let n = 24;
        let xs: Vec<_> = (0..n).map(|i| at(TAU * i as f64 / n as f64)).collect();
        let obs = DMatrix::from_fn(n, 4, |i, j| harmonics(TAU * i as f64 / n as f64)[j]);
        let cfg = KernelConfig::thin_plate(circle(8)).unwrap();
        let base = fit_mapping(&xs, &obs, &cfg).unwrap();
        let doubled = fit_mapping(&xs, &(&obs * 2.0), &cfg).unwrap();
        assert_eq!(doubled.coefficients(), &(base.coefficients() * 2.0));
        let scaled = fit_mapping(&xs, &(&obs * 3.7), &cfg).unwrap();
        let diff = scaled.coefficients() - base.coefficients() * 3.7;
        assert!(diff.norm() <= 1e-12 * scaled.coefficients().norm());
    }

    #[test]
    fn evaluate_is_linear_in_coefficients() {
        let cfg = KernelConfig::thin_plate(circle(6)).unwrap();
        let zero = MappingModel::new(DMatrix::zeros(5, cfg.feature_len()), cfg.clone()).unwrap();
        assert!(zero.evaluate(&at(1.0)).iter().all(|v| *v == 0.0));
        let c = DMatrix::from_fn(5, cfg.feature_len(), |i, j| (i as f64 - j as f64) * 0.3);
        let one = MappingModel::new(c.clone(), cfg.clone()).unwrap();
        let two = MappingModel::new(c * 2.0, cfg).unwrap();
        assert_eq!(two.evaluate(&at(1.0)), one.evaluate(&at(1.0)) * 2.0);
    }

    #[test]
    fn mapping_is_continuous() {
        let n = 36;
        let xs: Vec<_> = (0..n).map(|i| at(TAU * i as f64 / n as f64)).collect();
        let obs = DMatrix::from_fn(n, 4, |i, j| harmonics(TAU * i as f64 / n as f64)[j]);
        let model = fit_mapping(&xs, &obs, &KernelConfig::thin_plate(circle(12)).unwrap()).unwrap();
        for k in 0..50 {
            let t = k as f64 * 0.13;
            let gap = (model.evaluate(&at(t)) - model.evaluate(&at(t + 1e-6))).norm();
            assert!(gap < 1e-3);
        }
    }

    #[test]
    fn duplicate_embeddings_are_singular() {
        let xs = vec![at(0.0), at(1.0), at(1.0), at(2.0)];
        let obs = DMatrix::from_element(4, 2, 1.0);
        let cfg = KernelConfig::thin_plate(circle(4)).unwrap();
        assert!(matches!(fit_mapping(&xs, &obs, &cfg), Err(Error::SingularSystem { .. })));
    }

    #[test]
    fn dimension_errors() {
        let xs = circle(4);
        let cfg = KernelConfig::thin_plate(circle(4)).unwrap();
        let obs = DMatrix::from_element(3, 2, 1.0);
        assert!(matches!(fit_mapping(&xs, &obs, &cfg), Err(Error::DimensionMismatch { .. })));
        let obs = DMatrix::from_element(1, 2, 1.0);
        assert!(fit_mapping(&xs[..1], &obs, &cfg).is_err());
    }

    #[test]
    fn gaussian_without_polynomial_interpolates() {
        let xs = circle(10);
        let obs = DMatrix::from_fn(10, 4, |i, j| harmonics(TAU * i as f64 / 10.0)[j]);
        let cfg = KernelConfig::gaussian_pure(0.8, xs.clone(), 0.0).unwrap();
        let model = fit_mapping(&xs, &obs, &cfg).unwrap();
        assert_eq!(model.coefficients().ncols(), 10);
        for (i, x) in xs.iter().enumerate() {
            assert!((model.evaluate(x) - obs.row(i).transpose()).norm() < 1e-6);
        }
    }

    #[test]
    fn synthesis_of_constant_white_image() {
        let xs = circle(6);
        let obs = DMatrix::from_element(6, 12, 1.0);
        let model = fit_mapping(&xs, &obs, &KernelConfig::thin_plate(xs.clone()).unwrap()).unwrap();
        for t in [0.0, 0.7, 3.0] {
            let img = synthesize_view(&model, &PoseAngles::yaw_only(t).unwrap(), (3, 4)).unwrap();
            assert!(img.pixels().iter().all(|p| (*p - 1.0).abs() < 1e-9));
        }
        assert!(matches!(
            synthesize_view(&model, &PoseAngles::yaw_only(0.0).unwrap(), (5, 5)),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn mse_examples() {
        let a = Image::new(2, 3, vec![0.0; 6]).unwrap();
        let b = Image::new(2, 3, vec![255.0; 6]).unwrap();
        assert_eq!(synthesis_mse(&a, &a).unwrap(), 0.0);
        assert_eq!(synthesis_mse(&a, &b).unwrap(), 65025.0);
        let c = Image::new(3, 2, vec![0.0; 6]).unwrap();
        assert!(synthesis_mse(&a, &c).is_err());
    }
}

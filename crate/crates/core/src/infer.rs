//! Joint style and viewpoint inference.
//!
//! The particle sampler keeps `K` style samples and `L` viewpoint samples and
//! scores every pair by the reconstruction error of the observed features.
//! Styles start at the learned style vectors, viewpoints uniformly on the
//! conceptual manifold, and both populations are resampled from their marginal
//! weights with shrinking Normal perturbations. The best pair seen so far is
//! carried into every new population.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factor::{StyleSpace, StyleVector};
use crate::grbf::kernel_map;
use crate::manifold::{embed, sample_uniform_pose, ConceptualPoint, ManifoldCase, PoseAngles};

const MAX_WIDENINGS: usize = 3;
const WIDEN_FACTOR: f64 = 10.0;

const STREAM_PARENTS: u64 = 0;
const STREAM_VIEWPOINTS: u64 = 1;
const STREAM_STYLES: u64 = 2;

/// How the likelihood bandwidth is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sigma {
    /// `σ²` is the median error of the initial particles.
    Auto,
    /// `σ²` is re-estimated as the median particle error at every iteration.
    Running,
    Fixed(f64),
}

impl fmt::Display for Sigma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sigma::Auto => f.write_str("auto"),
            Sigma::Running => f.write_str("running"),
            Sigma::Fixed(v) => write!(f, "{v}"),
        }
    }
}

impl FromStr for Sigma {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Sigma::Auto),
            "running" => Ok(Sigma::Running),
            _ => s
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite() && *v > 0.0)
                .map(Sigma::Fixed)
                .ok_or_else(|| {
                    Error::InvalidConfig(format!(
                        "sigma '{s}' is not 'auto', 'running' or a positive number"
                    ))
                }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InferenceConfig {
    pub iterations: usize,
    pub sigma: Sigma,
    pub viewpoint_count: usize,
    /// Style perturbation std as a fraction of the RMS style norm.
    pub resample_std_style: f64,
    /// Viewpoint perturbation std in radians.
    pub resample_std_angle: f64,
    pub decay: f64,
    pub seed: u64,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        InferenceConfig {
            iterations: 30,
            sigma: Sigma::Auto,
            viewpoint_count: 36,
            resample_std_style: 0.25,
            resample_std_angle: 20f64.to_radians(),
            decay: 0.85,
            seed: 0,
        }
    }
}

impl InferenceConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.iterations == 0 {
            return bad("iterations must be positive");
        }
        if self.viewpoint_count == 0 {
            return bad("viewpoint count must be positive");
        }
        if let Sigma::Fixed(v) = self.sigma {
            if !(v.is_finite() && v > 0.0) {
                return bad("sigma must be positive");
            }
        }
        if !(self.resample_std_style.is_finite() && self.resample_std_style > 0.0) {
            return bad("style resampling std must be positive");
        }
        if !(self.resample_std_angle.is_finite() && self.resample_std_angle > 0.0) {
            return bad("angle resampling std must be positive");
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return bad("decay must lie in (0, 1]");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InferenceResult {
    pub style: StyleVector,
    pub pose: PoseAngles,
    pub viewpoint: ConceptualPoint,
    pub reconstruction_error: f64,
    /// Best error after each iteration.
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultimodalResult {
    pub style_a: StyleVector,
    pub style_b: StyleVector,
    /// `[λ_a·s_a; λ_b·s_b]`
    pub combined_style: StyleVector,
    pub pose: PoseAngles,
    pub viewpoint: ConceptualPoint,
    pub fused_error: f64,
    pub trace: Vec<f64>,
}

/// Snapshot of the sampler after scoring one population.
///
/// `styles[c][k]` is style sample `k` in channel `c`; the likelihood matrix is
/// `K_p × L` with rows indexed by style sample.
#[derive(Debug, Clone)]
pub struct ParticleSet {
    pub iteration: usize,
    pub styles: Vec<Vec<StyleVector>>,
    pub viewpoints: Vec<ConceptualPoint>,
    pub likelihoods: DMatrix<f64>,
    pub style_weights: Vec<f64>,
    pub viewpoint_weights: Vec<f64>,
    pub best_error: f64,
    pub sigma: f64,
}

/// `‖y − C(s)·ψ(x)‖²`.
pub fn reconstruction_error(
    space: &StyleSpace,
    s: &StyleVector,
    x: &ConceptualPoint,
    y: &DVector<f64>,
) -> Result<f64> {
    check_observation(space, y)?;
    check_point(space, x)?;
    let c = space.coefficients_for(s)?;
    Ok(residual(&c, &kernel_map(x, space.kernel()), y))
}

/// `exp(−e / 2σ²)`.
pub fn particle_likelihood(error: f64, sigma: f64) -> f64 {
    (-error / (2.0 * sigma * sigma)).exp()
}

/// Row and column marginals of a likelihood matrix, each normalized to sum to one.
pub fn marginal_weights(likelihoods: &DMatrix<f64>) -> Result<(Vec<f64>, Vec<f64>)> {
    let total: f64 = likelihoods.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::AllZeroLikelihoods);
    }
    let rows = (0..likelihoods.nrows())
        .map(|k| likelihoods.row(k).sum() / total)
        .collect();
    let cols = (0..likelihoods.ncols())
        .map(|l| likelihoods.column(l).sum() / total)
        .collect();
    Ok((rows, cols))
}

/// Particle-sampling estimate of style and viewpoint for one observation.
pub fn infer(space: &StyleSpace, y: &DVector<f64>, config: &InferenceConfig) -> Result<InferenceResult> {
    infer_observed(space, y, config, |_| {})
}

/// [`infer`] with a callback receiving every scored population.
pub fn infer_observed(
    space: &StyleSpace,
    y: &DVector<f64>,
    config: &InferenceConfig,
    observer: impl FnMut(&ParticleSet),
) -> Result<InferenceResult> {
    let channels = [Channel { space, y, weight: 1.0 }];
    let run = run_sampler(&channels, config, observer)?;
    Ok(InferenceResult {
        style: run.styles.into_iter().next().expect("one channel"),
        pose: run.pose,
        viewpoint: run.viewpoint,
        reconstruction_error: run.error,
        trace: run.trace,
    })
}

/// Two-channel inference with a shared viewpoint and fused error
/// `λ_a·e_a + λ_b·e_b`.
#[allow(clippy::too_many_arguments)]
pub fn infer_multimodal(
    space_a: &StyleSpace,
    space_b: &StyleSpace,
    y_a: &DVector<f64>,
    y_b: &DVector<f64>,
    lambda_a: f64,
    lambda_b: f64,
    config: &InferenceConfig,
) -> Result<MultimodalResult> {
    for l in [lambda_a, lambda_b] {
        if !(l.is_finite() && l > 0.0) {
            return Err(Error::InvalidConfig("channel weights must be positive".into()));
        }
    }
    if space_a.case() != space_b.case() {
        return Err(Error::ConfigMismatch(format!(
            "channels use {} and {} conceptual manifolds",
            space_a.case(),
            space_b.case()
        )));
    }
    let channels = [
        Channel { space: space_a, y: y_a, weight: lambda_a },
        Channel { space: space_b, y: y_b, weight: lambda_b },
    ];
    let run = run_sampler(&channels, config, |_| {})?;
    let mut styles = run.styles.into_iter();
    let style_a = styles.next().expect("channel a");
    let style_b = styles.next().expect("channel b");
    let combined_style = DVector::from_iterator(
        style_a.len() + style_b.len(),
        style_a
            .iter()
            .map(|v| lambda_a * v)
            .chain(style_b.iter().map(|v| lambda_b * v)),
    );
    Ok(MultimodalResult {
        style_a,
        style_b,
        combined_style,
        pose: run.pose,
        viewpoint: run.viewpoint,
        fused_error: run.error,
        trace: run.trace,
    })
}

/// Exhaustive search over the learned styles and a regular angle grid.
///
/// Yaw steps evenly around the circle; pitch and roll, when present, step
/// from `−π/2` to `π/2`. Ties keep the first style, then the first grid point.
pub fn grid_oracle(
    space: &StyleSpace,
    y: &DVector<f64>,
    angular_resolution: f64,
) -> Result<InferenceResult> {
    check_observation(space, y)?;
    if !(angular_resolution.is_finite() && angular_resolution > 0.0) {
        return Err(Error::InvalidConfig("angular resolution must be positive".into()));
    }
    let poses = pose_grid(space.case(), angular_resolution);
    let psis: Vec<_> = poses
        .iter()
        .map(|p| kernel_map(&embed(p), space.kernel()))
        .collect();
    let mut best: Option<(f64, usize, usize)> = None;
    for k in 0..space.num_styles() {
        let c = space.coefficients_for(&space.style(k))?;
        for (i, psi) in psis.iter().enumerate() {
            let e = residual(&c, psi, y);
            if best.is_none_or(|(b, _, _)| e < b) {
                best = Some((e, k, i));
            }
        }
    }
    let (error, k, i) = best.ok_or(Error::EmptySupport)?;
    let pose = poses[i];
    Ok(InferenceResult {
        style: space.style(k),
        viewpoint: embed(&pose),
        pose,
        reconstruction_error: error,
        trace: vec![error],
    })
}

/// Viewpoint search on the circle for a known style.
///
/// A grid at `resolution` finds the best bracket, which golden-section search
/// then refines. The refined angle replaces the grid point only when strictly
/// better, so flat objectives return the lowest grid angle.
pub fn viewpoint_given_style(
    space: &StyleSpace,
    s: &StyleVector,
    y: &DVector<f64>,
    resolution: f64,
) -> Result<(PoseAngles, f64)> {
    check_observation(space, y)?;
    if space.case() != ManifoldCase::OneD {
        return Err(Error::InvalidConfig(
            "known-style viewpoint search needs a 1D conceptual manifold".into(),
        ));
    }
    if !(resolution.is_finite() && resolution > 0.0) {
        return Err(Error::InvalidConfig("angular resolution must be positive".into()));
    }
    let c = space.coefficients_for(s)?;
    let error_at = |theta: f64| {
        let x = ConceptualPoint::from_unit(vec![theta.cos(), theta.sin()]);
        residual(&c, &kernel_map(&x, space.kernel()), y)
    };
    let n = steps(TAU, resolution);
    let h = TAU / n as f64;
    let (mut best_theta, mut best_err) = (0.0, f64::INFINITY);
    for i in 0..n {
        let theta = i as f64 * h;
        let e = error_at(theta);
        if e < best_err {
            best_theta = theta;
            best_err = e;
        }
    }
    let (theta, e) = golden_section(&error_at, best_theta - h, best_theta + h);
    if e < best_err {
        best_theta = theta;
        best_err = e;
    }
    Ok((PoseAngles::yaw_only(best_theta)?, best_err))
}

fn golden_section(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() < 1e-12 {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc < fd { (c, fc) } else { (d, fd) }
}

fn steps(span: f64, resolution: f64) -> usize {
    ((span / resolution) - 1e-9).ceil().max(1.0) as usize
}

fn pose_grid(case: ManifoldCase, resolution: f64) -> Vec<PoseAngles> {
    use std::f64::consts::PI;
    let n = steps(TAU, resolution);
    let yaws: Vec<f64> = (0..n).map(|i| i as f64 * TAU / n as f64).collect();
    let m = steps(PI, resolution);
    let tilts: Vec<f64> = (0..=m).map(|i| -PI / 2.0 + i as f64 * PI / m as f64).collect();
    let mut out = Vec::new();
    match case {
        ManifoldCase::OneD => {
            out.extend(yaws.iter().map(|&y| PoseAngles::canonicalize(case, y, 0.0, 0.0)));
        }
        ManifoldCase::TwoD => {
            for &p in &tilts {
                for &y in &yaws {
                    out.push(PoseAngles::canonicalize(case, y, p, 0.0));
                }
            }
        }
        ManifoldCase::ThreeD => {
            for &r in &tilts {
                for &p in &tilts {
                    for &y in &yaws {
                        out.push(PoseAngles::canonicalize(case, y, p, r));
                    }
                }
            }
        }
    }
    out
}

fn residual(c: &DMatrix<f64>, psi: &DVector<f64>, y: &DVector<f64>) -> f64 {
    (y - c * psi).norm_squared()
}

fn check_observation(space: &StyleSpace, y: &DVector<f64>) -> Result<()> {
    if y.len() != space.feature_dim() {
        return Err(Error::DimensionMismatch {
            what: "observation",
            expected: space.feature_dim(),
            found: y.len(),
        });
    }
    Ok(())
}

fn check_point(space: &StyleSpace, x: &ConceptualPoint) -> Result<()> {
    if x.dim() != space.kernel().embedding_dim() {
        return Err(Error::DimensionMismatch {
            what: "conceptual point",
            expected: space.kernel().embedding_dim(),
            found: x.dim(),
        });
    }
    Ok(())
}

struct Channel<'a> {
    space: &'a StyleSpace,
    y: &'a DVector<f64>,
    weight: f64,
}

struct Run {
    styles: Vec<StyleVector>,
    pose: PoseAngles,
    viewpoint: ConceptualPoint,
    error: f64,
    trace: Vec<f64>,
}

fn stream(seed: u64, n: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(n);
    rng
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Bandwidth whose `σ²` equals the median error, with fallbacks for
/// populations that already fit exactly.
fn median_sigma(errors: &[f64]) -> f64 {
    let mut s2 = median(errors);
    if !(s2 > 0.0) {
        s2 = errors.iter().copied().fold(0.0, f64::max);
    }
    if !(s2 > 0.0) || !s2.is_finite() {
        s2 = 1.0;
    }
    s2.sqrt()
}

fn run_sampler(
    channels: &[Channel<'_>],
    config: &InferenceConfig,
    mut observer: impl FnMut(&ParticleSet),
) -> Result<Run> {
    config.validate()?;
    let case = channels[0].space.case();
    let kp = channels[0].space.num_styles();
    for ch in channels {
        check_observation(ch.space, ch.y)?;
        if ch.space.num_styles() != kp {
            return Err(Error::DimensionMismatch {
                what: "style sample count",
                expected: kp,
                found: ch.space.num_styles(),
            });
        }
    }
    if kp == 0 {
        return Err(Error::EmptySupport);
    }
    let l_count = config.viewpoint_count;

    let mut parent_rng = stream(config.seed, STREAM_PARENTS);
    let mut view_rng = stream(config.seed, STREAM_VIEWPOINTS);
    // Every channel draws from its own copy of the same stream, so duplicated
    // channels stay identical.
    let mut style_rngs: Vec<_> = channels
        .iter()
        .map(|_| stream(config.seed, STREAM_STYLES))
        .collect();
    let style_scale: Vec<f64> = channels
        .iter()
        .map(|ch| config.resample_std_style * ch.space.style_norm_rms())
        .collect();

    let mut styles: Vec<Vec<StyleVector>> = channels
        .iter()
        .map(|ch| (0..kp).map(|k| ch.space.style(k)).collect())
        .collect();
    let mut poses: Vec<PoseAngles> = (0..l_count)
        .map(|_| sample_uniform_pose(case, &mut view_rng))
        .collect();

    let mut best: Option<(f64, Vec<StyleVector>, PoseAngles)> = None;
    let mut trace = Vec::with_capacity(config.iterations);
    let mut sigma = match config.sigma {
        Sigma::Fixed(v) => Some(v),
        Sigma::Auto | Sigma::Running => None,
    };
    let mut widenings = 0;

    for iter in 0..config.iterations {
        let points: Vec<ConceptualPoint> = poses.iter().map(embed).collect();
        let errors = fused_errors(channels, &styles, &points)?;

        let mut current: Option<(f64, usize, usize)> = None;
        for k in 0..kp {
            for l in 0..l_count {
                let e = errors[(k, l)];
                if current.is_none_or(|(b, _, _)| e < b) {
                    current = Some((e, k, l));
                }
            }
        }
        let (e, k, l) = current.expect("non-empty population");
        if best.as_ref().is_none_or(|(b, _, _)| e < *b) {
            best = Some((e, styles.iter().map(|s| s[k].clone()).collect(), poses[l]));
        }
        let (best_err, best_styles, best_pose) = best.as_ref().expect("best recorded");
        trace.push(*best_err);

        if config.sigma == Sigma::Running || sigma.is_none() {
            sigma = Some(median_sigma(errors.as_slice()));
        }
        let (likelihoods, style_w, view_w) = loop {
            let s = sigma.expect("sigma set");
            let lik = errors.map(|e| particle_likelihood(e, s));
            match marginal_weights(&lik) {
                Ok((sw, vw)) => break (lik, sw, vw),
                Err(Error::AllZeroLikelihoods) if widenings < MAX_WIDENINGS => {
                    widenings += 1;
                    sigma = Some(s * WIDEN_FACTOR);
                }
                Err(err) => return Err(err),
            }
        };

        observer(&ParticleSet {
            iteration: iter,
            styles: styles.clone(),
            viewpoints: points,
            likelihoods,
            style_weights: style_w.clone(),
            viewpoint_weights: view_w.clone(),
            best_error: *best_err,
            sigma: sigma.expect("sigma set"),
        });

        if iter + 1 == config.iterations {
            break;
        }

        let cool = config.decay.powi(iter as i32);
        let style_pick = WeightedIndex::new(&style_w)
            .map_err(|e| Error::NumericalFailure(format!("style weights: {e}")))?;
        let view_pick = WeightedIndex::new(&view_w)
            .map_err(|e| Error::NumericalFailure(format!("viewpoint weights: {e}")))?;

        let style_parents: Vec<usize> = (1..kp).map(|_| style_pick.sample(&mut parent_rng)).collect();
        let view_parents: Vec<usize> = (1..l_count).map(|_| view_pick.sample(&mut parent_rng)).collect();

        let mut next_styles = Vec::with_capacity(channels.len());
        for (c, rng) in style_rngs.iter_mut().enumerate() {
            let std = style_scale[c] * cool;
            let mut pop = Vec::with_capacity(kp);
            pop.push(best_styles[c].clone());
            for &p in &style_parents {
                let parent = &styles[c][p];
                pop.push(DVector::from_fn(parent.len(), |i, _| parent[i] + std * normal(rng)));
            }
            next_styles.push(pop);
        }

        let angle_std = config.resample_std_angle * cool;
        let mut next_poses = Vec::with_capacity(l_count);
        next_poses.push(*best_pose);
        for &p in &view_parents {
            let parent = poses[p];
            let yaw = parent.yaw() + angle_std * normal(&mut view_rng);
            let pitch = parent
                .pitch()
                .map(|v| v + angle_std * normal(&mut view_rng))
                .unwrap_or(0.0);
            let roll = parent
                .roll()
                .map(|v| v + angle_std * normal(&mut view_rng))
                .unwrap_or(0.0);
            next_poses.push(PoseAngles::canonicalize(case, yaw, pitch, roll));
        }
        styles = next_styles;
        poses = next_poses;
    }

    let (error, styles, pose) = best.expect("at least one iteration");
    Ok(Run {
        styles,
        viewpoint: embed(&pose),
        pose,
        error,
        trace,
    })
}

fn fused_errors(
    channels: &[Channel<'_>],
    styles: &[Vec<StyleVector>],
    points: &[ConceptualPoint],
) -> Result<DMatrix<f64>> {
    let kp = styles[0].len();
    let mut fused: DMatrix<f64> = DMatrix::zeros(kp, points.len());
    for (ch, pop) in channels.iter().zip(styles) {
        let psis: Vec<_> = points.iter().map(|x| kernel_map(x, ch.space.kernel())).collect();
        for (k, s) in pop.iter().enumerate() {
            let c = ch.space.coefficients_for(s)?;
            for (l, psi) in psis.iter().enumerate() {
                fused[(k, l)] += ch.weight * residual(&c, psi, ch.y);
            }
        }
    }
    if fused.iter().any(|e| !e.is_finite()) {
        return Err(Error::NumericalFailure("non-finite reconstruction error".into()));
    }
    Ok(fused)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, Provenance, Split, SyntheticSpec};
    use crate::manifold::angular_error;
    use crate::pipeline::{train_model, CenterPlacement, TrainOptions};
    use proptest::prelude::*;

    fn space(noise: f64, centers: CenterPlacement) -> (StyleSpace, crate::data::DatasetManifest) {
        let spec = SyntheticSpec {
            noise_std: noise,
            views_per_object: 36,
            ..SyntheticSpec::default()
        };
        let m = generate_synthetic(&spec).unwrap();
        let opts = TrainOptions {
            centers,
            ..TrainOptions::default()
        };
        let trained = train_model(&m, &opts, Provenance::default()).unwrap();
        (trained.container.space, m)
    }

    fn render(space: &StyleSpace, k: usize, theta: f64) -> (DVector<f64>, ConceptualPoint) {
        let x = embed(&PoseAngles::yaw_only(theta).unwrap());
        let c = space.coefficients_for(&space.style(k)).unwrap();
        (c * kernel_map(&x, space.kernel()), x)
    }

    #[test]
    fn likelihood_values() {
        assert_eq!(particle_likelihood(0.0, 0.7), 1.0);
        let s: f64 = 0.7;
        assert!((particle_likelihood(2.0 * s * s, s) - (-1f64).exp()).abs() < 1e-15);
        assert!(particle_likelihood(1.0, 1.0) > particle_likelihood(1.1, 1.0));
    }

    #[test]
    fn worked_weight_example() {
        let w = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 2.0, 2.0]);
        let (s, v) = marginal_weights(&w).unwrap();
        assert_eq!(s, vec![1.0 / 3.0, 2.0 / 3.0]);
        assert_eq!(v, vec![0.5, 0.5]);
    }

    #[test]
    fn uniform_and_single_spike_weights() {
        let (s, v) = marginal_weights(&DMatrix::from_element(4, 5, 0.3)).unwrap();
        assert!(s.iter().all(|w| (w - 0.25).abs() < 1e-15));
        assert!(v.iter().all(|w| (w - 0.2).abs() < 1e-15));
        let mut spike = DMatrix::zeros(3, 4);
        spike[(1, 2)] = 1e-200;
        let (s, v) = marginal_weights(&spike).unwrap();
        assert_eq!(s, vec![0.0, 1.0, 0.0]);
        assert_eq!(v, vec![0.0, 0.0, 1.0, 0.0]);
        assert!(matches!(
            marginal_weights(&DMatrix::zeros(2, 2)),
            Err(Error::AllZeroLikelihoods)
        ));
    }

    proptest! {
        #[test]
        fn weights_are_normalized_and_scale_free(
            values in prop::collection::vec(0.0..10.0f64, 12),
            scale in 1e-3..1e3f64,
        ) {
            prop_assume!(values.iter().any(|v| *v > 0.0));
            let w = DMatrix::from_row_slice(3, 4, &values);
            let (s, v) = marginal_weights(&w).unwrap();
            prop_assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let (s2, v2) = marginal_weights(&(w * scale)).unwrap();
            for (a, b) in s.iter().zip(&s2).chain(v.iter().zip(&v2)) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn argmin_error_is_argmax_likelihood(
            errors in prop::collection::vec(0.0..50.0f64, 1..30),
            sigma in 0.5..20.0f64,
        ) {
            let argmin = (0..errors.len()).min_by(|&a, &b| errors[a].total_cmp(&errors[b]).then(a.cmp(&b))).unwrap();
            let lik: Vec<f64> = errors.iter().map(|e| particle_likelihood(*e, sigma)).collect();
            let best = lik.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let argmax = lik.iter().position(|l| *l == best).unwrap();
            prop_assert_eq!(errors[argmax], errors[argmin]);
        }
    }

    #[test]
    fn reconstruction_error_cases() {
        let (space, m) = space(0.0, CenterPlacement::TrainingViews);
        let (y, x) = render(&space, 2, 1.3);
        let e = reconstruction_error(&space, &space.style(2), &x, &y).unwrap();
        assert!(e <= 1e-18 * y.norm_squared().max(1.0), "{e}");
        let zero = DVector::zeros(space.style_dim());
        let e0 = reconstruction_error(&space, &zero, &x, &y).unwrap();
        assert!((e0 - y.norm_squared()).abs() <= 1e-12 * y.norm_squared());

        let (i, rec) = m.split(Split::Train).nth(40).unwrap();
        let y = m.features(i).unwrap();
        let k: usize = rec.object_id[3..].parse().unwrap();
        let x = embed(&rec.pose().unwrap());
        let e = reconstruction_error(&space, &space.style(k), &x, &y).unwrap();
        assert!(e < 1e-10 * y.norm_squared(), "{e}");
        assert!(matches!(
            reconstruction_error(&space, &space.style(0), &x, &DVector::zeros(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn oracle_on_exact_render() {
        let (space, _) = space(0.0, CenterPlacement::Uniform(12));
        let theta = 200.5f64.to_radians();
        let (y, _) = render(&space, 3, theta);
        let r = grid_oracle(&space, &y, 1f64.to_radians()).unwrap();
        assert!(angular_error(r.pose.yaw(), theta) <= 0.5f64.to_radians() + 1e-9);
        assert_eq!(r.style, space.style(3));
        let exact = 200f64.to_radians();
        let (y, _) = render(&space, 1, exact);
        let r = grid_oracle(&space, &y, 1f64.to_radians()).unwrap();
        assert!(r.reconstruction_error < 1e-10 * y.norm_squared());
        assert!(angular_error(r.pose.yaw(), exact) < 1e-9);
    }

    #[test]
    fn oracle_recovers_cardinal_pose() {
        let (space, _) = space(0.0, CenterPlacement::Uniform(8));
        for q in 0..4 {
            let theta = q as f64 * std::f64::consts::FRAC_PI_2;
            let (y, _) = render(&space, q, theta);
            let r = grid_oracle(&space, &y, std::f64::consts::FRAC_PI_2).unwrap();
            assert!(angular_error(r.pose.yaw(), theta) < 1e-12);
            assert_eq!(r.style, space.style(q));
        }
    }

    #[test]
    fn known_style_search() {
        let (space, m) = space(0.0, CenterPlacement::TrainingViews);
        let (i, rec) = m.split(Split::Train).nth(30).unwrap();
        let k: usize = rec.object_id[3..].parse().unwrap();
        let y = m.features(i).unwrap();
        let res = 2f64.to_radians();
        let (pose, e) = viewpoint_given_style(&space, &space.style(k), &y, res).unwrap();
        assert!(angular_error(pose.yaw(), rec.yaw_deg.to_radians()) < 0.5f64.to_radians());
        let n = steps(TAU, res);
        let grid_min = (0..n)
            .map(|j| {
                let x = embed(&PoseAngles::yaw_only(j as f64 * TAU / n as f64).unwrap());
                reconstruction_error(&space, &space.style(k), &x, &y).unwrap()
            })
            .fold(f64::INFINITY, f64::min);
        assert!(e <= grid_min);
    }

    #[test]
    fn flat_objective_returns_lowest_angle() {
        let (space, _) = space(0.0, CenterPlacement::Uniform(8));
        let zero = DVector::zeros(space.style_dim());
        let y = DVector::from_element(space.feature_dim(), 1.0);
        let (pose, e) = viewpoint_given_style(&space, &zero, &y, 0.1).unwrap();
        assert_eq!(pose.yaw(), 0.0);
        assert_eq!(e, y.norm_squared());
    }

    #[test]
    fn sampler_invariants_hold_every_iteration() {
        let (space, m) = space(0.01, CenterPlacement::Uniform(12));
        let (i, _) = m.split(Split::Test).nth(5).unwrap();
        let y = m.features(i).unwrap();
        let cfg = InferenceConfig::default().with_seed(11);
        let mut seen = 0;
        let r = infer_observed(&space, &y, &cfg, |p| {
            seen += 1;
            assert!((p.style_weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!((p.viewpoint_weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert_eq!(p.styles[0].len(), space.num_styles());
            assert_eq!(p.viewpoints.len(), cfg.viewpoint_count);
            for x in &p.viewpoints {
                let n: f64 = x.coords().iter().map(|v| v * v).sum();
                assert!((n.sqrt() - 1.0).abs() < 1e-12);
            }
        })
        .unwrap();
        assert_eq!(seen, cfg.iterations);
        assert_eq!(r.trace.len(), cfg.iterations);
        assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(*r.trace.last().unwrap(), r.reconstruction_error);
        assert_eq!(infer(&space, &y, &cfg).unwrap(), r);
        assert_ne!(infer(&space, &y, &cfg.with_seed(12)).unwrap().trace, r.trace);
    }

    #[test]
    fn single_object_reduces_to_viewpoint_search() {
        let spec = SyntheticSpec {
            object_count: 1,
            noise_std: 0.0,
            ..SyntheticSpec::default()
        };
        let m = generate_synthetic(&spec).unwrap();
        let space = train_model(&m, &TrainOptions::default(), Provenance::default())
            .unwrap()
            .container
            .space;
        let (i, _) = m.split(Split::Test).nth(7).unwrap();
        let y = m.features(i).unwrap();
        let oracle = grid_oracle(&space, &y, 1f64.to_radians()).unwrap();
        let r = infer(&space, &y, &InferenceConfig::default().with_seed(3)).unwrap();
        assert!(angular_error(r.pose.yaw(), oracle.pose.yaw()) <= 1f64.to_radians());
        assert_eq!(r.style, space.style(0));
    }

    #[test]
    fn tiny_fixed_sigma_exhausts_widening() {
        let (space, m) = space(0.01, CenterPlacement::Uniform(12));
        let y = m.features(3).unwrap();
        let cfg = InferenceConfig {
            sigma: Sigma::Fixed(1e-12),
            ..InferenceConfig::default()
        };
        assert!(matches!(infer(&space, &y, &cfg), Err(Error::AllZeroLikelihoods)));
        let cfg = InferenceConfig {
            sigma: Sigma::Fixed(1e-2),
            ..InferenceConfig::default()
        };
        assert!(infer(&space, &y, &cfg).is_ok());
    }

    #[test]
    fn duplicated_channels_match_single_channel_bitwise() {
        let (space, m) = space(0.01, CenterPlacement::Uniform(12));
        let y = m.features(7).unwrap();
        let cfg = InferenceConfig::default().with_seed(5);
        let single = infer(&space, &y, &cfg).unwrap();
        let fused = infer_multimodal(&space, &space, &y, &y, 0.5, 0.5, &cfg).unwrap();
        assert_eq!(fused.trace, single.trace);
        assert_eq!(fused.pose, single.pose);
        assert_eq!(fused.style_a, single.style);
        assert_eq!(fused.style_b, single.style);
        assert_eq!(fused.fused_error, single.reconstruction_error);
        assert_eq!(fused.combined_style.len(), 2 * space.style_dim());
        assert_eq!(fused.combined_style[0], 0.5 * single.style[0]);
    }

    #[test]
    fn config_and_sigma_parsing() {
        assert_eq!("auto".parse::<Sigma>().unwrap(), Sigma::Auto);
        assert_eq!("0.5".parse::<Sigma>().unwrap(), Sigma::Fixed(0.5));
        assert!("-1".parse::<Sigma>().is_err());
        let bad = InferenceConfig {
            decay: 1.5,
            ..InferenceConfig::default()
        };
        assert!(matches!(bad.validate(), Err(Error::InvalidConfig(_))));
    }
}

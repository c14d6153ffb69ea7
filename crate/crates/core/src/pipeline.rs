//! End-to-end training, prediction, evaluation and cross-validation over
//! dataset manifests.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{evaluate, knn_classify, EvalReport, LabeledStyleSet, Prediction, Target};
use crate::data::{DatasetManifest, Media, ModelContainer, Provenance, Split};
use crate::error::{Error, Result};
use crate::factor::{degeneracy_rank, reconstruct_coefficients, StyleDim, StyleSpace, StyleVector, DEFAULT_DEGENERACY_TOL};
use crate::features::{extract, FeatureConfig, FeatureKind, Image};
use crate::grbf::{fit_mapping, synthesis_mse, synthesize_view, BasisFunction, KernelConfig, MappingModel, DEFAULT_RIDGE};
use crate::infer::{grid_oracle, infer, InferenceConfig};
use crate::manifold::{embed, place_centers, ConceptualPoint, PoseAngles};

/// Where the mapping centers go on the conceptual manifold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CenterPlacement {
    /// `M` evenly spread points.
    Uniform(usize),
    /// The training poses of the first training object; with every object
    /// sharing those poses the mappings interpolate.
    TrainingViews,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    pub basis: BasisFunction,
    pub centers: CenterPlacement,
    pub ridge: f64,
    pub polynomial: bool,
    pub style_dim: StyleDim,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            basis: BasisFunction::ThinPlateSpline,
            centers: CenterPlacement::Uniform(12),
            ridge: DEFAULT_RIDGE,
            polynomial: true,
            style_dim: StyleDim::Full,
        }
    }
}

/// Training summary of one object.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObjectFit {
    pub object_id: String,
    pub category_id: String,
    pub views: usize,
    /// Root mean square of the per-element training residual.
    pub rms_residual: f64,
    pub rank: usize,
    pub degenerate: bool,
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub container: ModelContainer,
    pub models: Vec<MappingModel>,
    pub fits: Vec<ObjectFit>,
}

/// The shared kernel for a manifest's training split.
pub fn kernel_for(manifest: &DatasetManifest, options: &TrainOptions) -> Result<KernelConfig> {
    let objects = manifest.train_objects();
    let first = objects
        .first()
        .ok_or_else(|| Error::EmptyTrainingSplit(manifest.base_dir.clone()))?;
    let centers = match options.centers {
        CenterPlacement::Uniform(m) => {
            if m == 0 {
                return Err(Error::InvalidConfig("at least one mapping center is needed".into()));
            }
            place_centers(m, manifest.manifold_case)
        }
        CenterPlacement::TrainingViews => first
            .2
            .iter()
            .map(|&i| Ok(embed(&manifest.records[i].pose()?)))
            .collect::<Result<Vec<_>>>()?,
    };
    let basis = options.basis;
    let ridge = options.ridge;
    if options.polynomial {
        KernelConfig::new(basis, centers, ridge)
    } else {
        match basis {
            BasisFunction::Gaussian { width } => KernelConfig::gaussian_pure(width, centers, ridge),
            _ => Err(Error::InvalidConfig(
                "only the gaussian basis may omit the polynomial part".into(),
            )),
        }
    }
}

/// Fits one mapping per training object and factorizes them into a style space.
///
/// Per-object fits run on the current rayon pool.
pub fn train_model(
    manifest: &DatasetManifest,
    options: &TrainOptions,
    provenance: Provenance,
) -> Result<TrainedModel> {
    let objects = manifest.train_objects();
    if objects.is_empty() {
        return Err(Error::EmptyTrainingSplit(manifest.base_dir.clone()));
    }
    let kernel = kernel_for(manifest, options)?;
    let m = kernel.num_centers();
    if let Some((id, _, views)) = objects.iter().find(|(_, _, v)| v.len() < m) {
        return Err(Error::IllPosed {
            object_id: id.clone(),
            centers: m,
            views: views.len(),
        });
    }
    let fitted: Vec<(MappingModel, ObjectFit)> = objects
        .par_iter()
        .map(|(id, category, views)| {
            fit_object(manifest, &kernel, views)
                .map(|(model, rms)| {
                    let (rank, degenerate) = degeneracy_rank(&model, DEFAULT_DEGENERACY_TOL);
                    let fit = ObjectFit {
                        object_id: id.clone(),
                        category_id: category.clone(),
                        views: views.len(),
                        rms_residual: rms,
                        rank,
                        degenerate,
                    };
                    (model, fit)
                })
                .map_err(|e| e.for_object(id))
        })
        .collect::<Result<_>>()?;
    let (models, fits): (Vec<_>, Vec<_>) = fitted.into_iter().unzip();
    let space = StyleSpace::learn(&models, options.style_dim)?;
    let container = ModelContainer::new(
        space,
        objects.iter().map(|o| o.0.clone()).collect(),
        objects.iter().map(|o| o.1.clone()).collect(),
        manifest.feature_config,
        provenance,
    )?;
    Ok(TrainedModel {
        container,
        models,
        fits,
    })
}

fn fit_object(
    manifest: &DatasetManifest,
    kernel: &KernelConfig,
    views: &[usize],
) -> Result<(MappingModel, f64)> {
    let xs: Vec<ConceptualPoint> = views
        .iter()
        .map(|&i| Ok(embed(&manifest.records[i].pose()?)))
        .collect::<Result<_>>()?;
    let ys: Vec<DVector<f64>> = views.iter().map(|&i| manifest.features(i)).collect::<Result<_>>()?;
    let d = ys[0].len();
    if let Some(bad) = ys.iter().find(|y| y.len() != d) {
        return Err(Error::DimensionMismatch {
            what: "feature vector",
            expected: d,
            found: bad.len(),
        });
    }
    let obs = DMatrix::from_fn(ys.len(), d, |i, j| ys[i][j]);
    let model = fit_mapping(&xs, &obs, kernel)?;
    let sq: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - model.evaluate(x)).norm_squared())
        .sum();
    let rms = (sq / (ys.len() * d) as f64).sqrt();
    Ok((model, rms))
}

/// How pose and style are searched for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Search {
    Particles(InferenceConfig),
    /// Exhaustive grid at the given resolution in radians.
    Grid(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictOptions {
    pub search: Search,
    /// Neighbors for the category and instance votes.
    pub k: usize,
}

impl Default for PredictOptions {
    fn default() -> Self {
        PredictOptions {
            search: Search::Particles(InferenceConfig::default()),
            k: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub pose: PoseAngles,
    pub style: StyleVector,
    pub reconstruction_error: f64,
    pub trace: Vec<f64>,
    pub object_id: String,
    pub category_id: String,
}

/// Pose, style and labels for one feature vector.
pub fn predict(
    container: &ModelContainer,
    support: &LabeledStyleSet,
    y: &DVector<f64>,
    options: &PredictOptions,
    seed: u64,
) -> Result<Estimate> {
    let result = match options.search {
        Search::Particles(cfg) => infer(&container.space, y, &cfg.with_seed(seed))?,
        Search::Grid(resolution) => grid_oracle(&container.space, y, resolution)?,
    };
    let object_id = knn_classify(support, &result.style, options.k, Target::Instance)?;
    let category_id = knn_classify(support, &result.style, options.k, Target::Category)?;
    Ok(Estimate {
        pose: result.pose,
        style: result.style,
        reconstruction_error: result.reconstruction_error,
        trace: result.trace,
        object_id,
        category_id,
    })
}

/// Features of a manifest record as the model expects them.
pub fn record_features(
    container: &ModelContainer,
    manifest: &DatasetManifest,
    index: usize,
) -> Result<DVector<f64>> {
    let y = manifest.features_with(index, &container.feature_config)?;
    if y.len() != container.space.feature_dim() {
        return Err(Error::DimensionMismatch {
            what: "record features",
            expected: container.space.feature_dim(),
            found: y.len(),
        });
    }
    Ok(y)
}

/// Renders a learned object at a pose as an image with intensities in 0–1.
pub fn synthesize_object(container: &ModelContainer, object: usize, pose: &PoseAngles) -> Result<Image> {
    let cfg = &container.feature_config;
    if cfg.kind != FeatureKind::Raw {
        return Err(Error::RawFeaturesRequired);
    }
    let model = reconstruct_coefficients(&container.space, &container.space.style(object))?;
    synthesize_view(&model, pose, cfg.resize_to)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecordOutcome {
    pub index: usize,
    pub seed: u64,
    pub truth: Prediction,
    pub estimate: Prediction,
    pub reconstruction_error: f64,
    pub synthesis_mse: Option<f64>,
}

/// Runs prediction on every record of a split.
///
/// Record `i` uses seed `base_seed + i`, so outcomes do not depend on the
/// order or parallelism of evaluation.
pub fn evaluate_split(
    container: &ModelContainer,
    manifest: &DatasetManifest,
    split: Split,
    options: &PredictOptions,
    base_seed: u64,
) -> Result<(Vec<RecordOutcome>, EvalReport)> {
    let support = container.support()?;
    let indices: Vec<usize> = manifest.split(split).map(|(i, _)| i).collect();
    if indices.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "manifest has no {} records",
            split.as_str()
        )));
    }
    let outcomes: Vec<RecordOutcome> = indices
        .par_iter()
        .map(|&i| evaluate_record(container, &support, manifest, i, options, base_seed))
        .collect::<Result<_>>()?;
    let preds: Vec<Prediction> = outcomes.iter().map(|o| o.estimate.clone()).collect();
    let truth: Vec<Prediction> = outcomes.iter().map(|o| o.truth.clone()).collect();
    let mses: Vec<f64> = outcomes.iter().filter_map(|o| o.synthesis_mse).collect();
    let mean_mse = (!mses.is_empty()).then(|| mses.iter().sum::<f64>() / mses.len() as f64);
    let report = evaluate(&preds, &truth, mean_mse)?;
    Ok((outcomes, report))
}

fn evaluate_record(
    container: &ModelContainer,
    support: &LabeledStyleSet,
    manifest: &DatasetManifest,
    index: usize,
    options: &PredictOptions,
    base_seed: u64,
) -> Result<RecordOutcome> {
    let record = &manifest.records[index];
    let seed = base_seed.wrapping_add(index as u64);
    let y = record_features(container, manifest, index)?;
    let est = predict(container, support, &y, options, seed)?;
    let synthesis = match (&record.media, container.object_index(&record.object_id)) {
        (Media::Path(p), Some(k)) if container.feature_config.kind == FeatureKind::Raw => {
            let synthesized = synthesize_object(container, k, &record.pose()?)?;
            let reference = reference_image(&manifest.base_dir.join(p), &container.feature_config)?;
            Some(synthesis_mse(&reference, &synthesized)?)
        }
        _ => None,
    };
    Ok(RecordOutcome {
        index,
        seed,
        truth: Prediction {
            yaw_deg: record.yaw_deg,
            category_id: record.category_id.clone(),
            object_id: record.object_id.clone(),
        },
        estimate: Prediction {
            yaw_deg: est.pose.yaw().to_degrees(),
            category_id: est.category_id,
            object_id: est.object_id,
        },
        reconstruction_error: est.reconstruction_error,
        synthesis_mse: synthesis,
    })
}

/// An image resized and scaled to 0–1 the way raw features see it.
pub fn reference_image(path: &std::path::Path, cfg: &FeatureConfig) -> Result<Image> {
    let img = Image::open(path)?;
    let (rows, cols) = cfg.resize_to;
    Image::new(rows, cols, extract(&img, &FeatureConfig::raw(rows, cols))?.values)
}

/// One `(M, n)` cell of a cross-validation sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvCell {
    pub centers: usize,
    /// HOG grid size, when the sweep varies it.
    pub hog_grid: Option<usize>,
    pub report: EvalReport,
}

/// Object-level cross-validation over the training split.
///
/// Each fold holds out whole objects and scores pose on their training views;
/// `folds = None` holds out one object at a time. Returns every cell and the
/// index of the lowest-MAE cell, ties going to fewer centers and then the
/// smaller grid.
pub fn cross_validate(
    manifest: &DatasetManifest,
    base: &TrainOptions,
    centers_grid: &[usize],
    hog_grid: &[usize],
    folds: Option<usize>,
    options: &PredictOptions,
    seed: u64,
) -> Result<(Vec<CvCell>, usize)> {
    let objects: Vec<String> = manifest.train_objects().into_iter().map(|o| o.0).collect();
    if objects.len() < 2 {
        return Err(Error::InvalidConfig("cross-validation needs at least two training objects".into()));
    }
    let fold_count = folds.unwrap_or(objects.len());
    if fold_count < 2 || fold_count > objects.len() {
        return Err(Error::InvalidConfig(format!(
            "fold count {fold_count} must lie in 2..={}",
            objects.len()
        )));
    }
    if centers_grid.is_empty() {
        return Err(Error::InvalidConfig("no center counts to sweep".into()));
    }
    let grids: Vec<Option<usize>> = if hog_grid.is_empty() {
        vec![None]
    } else {
        if manifest.feature_config.kind != FeatureKind::Hog || manifest.has_inline_records() {
            return Err(Error::InvalidConfig(
                "a HOG grid sweep needs an image manifest with HOG features".into(),
            ));
        }
        hog_grid.iter().map(|&n| Some(n)).collect()
    };

    let mut cells = Vec::new();
    for &m in centers_grid {
        for &n in &grids {
            let mut variant = manifest.clone();
            if let Some(n) = n {
                variant.feature_config.hog_grid = n;
                variant.feature_config.validate()?;
            }
            let mut preds = Vec::new();
            let mut truth = Vec::new();
            for fold in 0..fold_count {
                let held: Vec<&str> = objects
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| i % fold_count == fold)
                    .map(|(_, o)| o.as_str())
                    .collect();
                let fold_manifest = fold_split(&variant, &held);
                let opts = TrainOptions {
                    centers: CenterPlacement::Uniform(m),
                    ..*base
                };
                let trained = train_model(&fold_manifest, &opts, Provenance::default())?;
                let (outcomes, _) =
                    evaluate_split(&trained.container, &fold_manifest, Split::Test, options, seed)?;
                for o in outcomes {
                    preds.push(o.estimate);
                    truth.push(o.truth);
                }
            }
            cells.push(CvCell {
                centers: m,
                hog_grid: n,
                report: evaluate(&preds, &truth, None)?,
            });
        }
    }
    let best = (0..cells.len())
        .min_by(|&a, &b| {
            let (ca, cb) = (&cells[a], &cells[b]);
            ca.report
                .mae_degrees
                .total_cmp(&cb.report.mae_degrees)
                .then(ca.centers.cmp(&cb.centers))
                .then(ca.hog_grid.cmp(&cb.hog_grid))
        })
        .expect("at least one cell");
    Ok((cells, best))
}

/// Training records of `held` become the test split; other test records drop out.
fn fold_split(manifest: &DatasetManifest, held: &[&str]) -> DatasetManifest {
    let records = manifest
        .records
        .iter()
        .filter(|r| r.split == Split::Train)
        .map(|r| {
            let mut r = r.clone();
            if held.contains(&r.object_id.as_str()) {
                r.split = Split::Test;
            }
            r
        })
        .collect();
    DatasetManifest {
        records,
        ..manifest.clone()
    }
}

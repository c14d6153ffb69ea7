//! Command-line surface. Every command writes its results to the given sink so
//! output can be captured and compared byte for byte.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use serde::Serialize;
use serde_json::{json, Value};

use crate::classify::EvalReport;
use crate::data::{
    generate_synthetic, load_manifest, load_model, save_model, write_rotating_bar_dataset, Provenance, Split,
    SyntheticSpec,
};
use crate::error::{Error, Result};
use crate::factor::StyleDim;
use crate::features::{extract, Image};
use crate::grbf::{synthesis_mse, BasisFunction, DEFAULT_RIDGE};
use crate::infer::{InferenceConfig, Sigma};
use crate::manifold::PoseAngles;
use crate::pipeline::{
    cross_validate, predict, record_features, reference_image, synthesize_object, train_model, CenterPlacement,
    PredictOptions, Search, TrainOptions,
};

#[derive(Debug, Parser, Serialize)]
#[command(name = "hma", version, about = "Joint object category, instance and pose estimation")]
pub struct Cli {
    /// Base random seed.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for per-object training and per-record evaluation.
    #[arg(long, global = true, env = "HMA_THREADS")]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Text)]
    pub output_format: OutputFormat,
    /// Append one JSON run record per invocation to this file.
    #[arg(long, global = true)]
    pub run_log: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    /// Aligned tables.
    Text,
    /// One JSON object per line.
    Records,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Fit per-object mappings, factorize them and save a model.
    Train(TrainArgs),
    /// Estimate pose, category and instance for one input.
    Infer(InferArgs),
    /// Render a learned object at a pose.
    Synthesize(SynthesizeArgs),
    /// Score a model on a manifest split.
    Evaluate(EvaluateArgs),
    /// Sweep center counts and HOG grids with object-level folds.
    CrossValidate(CrossValidateArgs),
    /// Write a synthetic turntable dataset.
    GenSynthetic(GenSyntheticArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Train(_) => "train",
            Command::Infer(_) => "infer",
            Command::Synthesize(_) => "synthesize",
            Command::Evaluate(_) => "evaluate",
            Command::CrossValidate(_) => "cross-validate",
            Command::GenSynthetic(_) => "gen-synthetic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisArg {
    ThinPlate,
    Gaussian,
    Multiquadric,
}

#[derive(Debug, Args, Serialize)]
pub struct KernelArgs {
    #[arg(long, value_enum, default_value_t = BasisArg::ThinPlate)]
    pub basis: BasisArg,
    /// Gaussian width or multiquadric shape.
    #[arg(long, default_value_t = 1.0)]
    pub shape: f64,
    #[arg(long, default_value_t = DEFAULT_RIDGE)]
    pub ridge: f64,
    /// Drop the linear polynomial part (gaussian basis only).
    #[arg(long)]
    pub no_polynomial: bool,
    /// Place the centers at the first object's training poses.
    #[arg(long)]
    pub centers_at_views: bool,
    /// Style dimensionality: `full` or a positive integer.
    #[arg(long, default_value = "full")]
    pub style_dim: String,
}

impl KernelArgs {
    fn options(&self, centers: usize) -> Result<TrainOptions> {
        let basis = match self.basis {
            BasisArg::ThinPlate => BasisFunction::ThinPlateSpline,
            BasisArg::Gaussian => BasisFunction::Gaussian { width: self.shape },
            BasisArg::Multiquadric => BasisFunction::Multiquadric { shape: self.shape },
        };
        Ok(TrainOptions {
            basis,
            centers: if self.centers_at_views {
                CenterPlacement::TrainingViews
            } else {
                CenterPlacement::Uniform(centers)
            },
            ridge: self.ridge,
            polynomial: !self.no_polynomial,
            style_dim: self.style_dim.parse::<StyleDim>()?,
        })
    }
}

#[derive(Debug, Args, Serialize)]
pub struct InferenceArgs {
    #[arg(long, default_value_t = 30)]
    pub iterations: usize,
    /// `auto`, `running` or a fixed positive value.
    #[arg(long, default_value = "auto")]
    pub sigma: String,
    #[arg(long, default_value_t = 36)]
    pub viewpoints: usize,
    #[arg(long, default_value_t = 0.25)]
    pub style_std: f64,
    #[arg(long, default_value_t = 20.0)]
    pub angle_std_deg: f64,
    #[arg(long, default_value_t = 0.85)]
    pub decay: f64,
    /// Exhaustive grid search over the learned styles instead of sampling.
    #[arg(long)]
    pub oracle: bool,
    /// Grid resolution for `--oracle`, in degrees.
    #[arg(long, default_value_t = 1.0)]
    pub resolution_deg: f64,
    /// Neighbors for the category and instance votes.
    #[arg(long, default_value_t = 1)]
    pub k: usize,
}

impl InferenceArgs {
    fn options(&self) -> Result<PredictOptions> {
        let search = if self.oracle {
            if !(self.resolution_deg > 0.0) {
                return Err(Error::InvalidConfig("resolution must be positive".into()));
            }
            Search::Grid(self.resolution_deg.to_radians())
        } else {
            let cfg = InferenceConfig {
                iterations: self.iterations,
                sigma: self.sigma.parse::<Sigma>()?,
                viewpoint_count: self.viewpoints,
                resample_std_style: self.style_std,
                resample_std_angle: self.angle_std_deg.to_radians(),
                decay: self.decay,
                seed: 0,
            };
            cfg.validate()?;
            Search::Particles(cfg)
        };
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be positive".into()));
        }
        Ok(PredictOptions { search, k: self.k })
    }
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Number of mapping centers M.
    #[arg(long, default_value_t = 12)]
    pub centers: usize,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[arg(long, short)]
    pub output: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct InferArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Grayscale or color image, featurized with the model's settings.
    #[arg(long, conflicts_with_all = ["features", "manifest"])]
    pub image: Option<PathBuf>,
    /// Comma-separated feature vector.
    #[arg(long, conflicts_with = "manifest", allow_hyphen_values = true)]
    pub features: Option<String>,
    /// Take the input from a manifest record (with `--record`).
    #[arg(long, requires = "record")]
    pub manifest: Option<PathBuf>,
    /// Zero-based record index in `--manifest`.
    #[arg(long)]
    pub record: Option<usize>,
    #[command(flatten)]
    pub inference: InferenceArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthesizeArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Object id of a training object.
    #[arg(long)]
    pub object: String,
    #[arg(long, allow_hyphen_values = true)]
    pub yaw_deg: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub pitch_deg: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub roll_deg: Option<f64>,
    /// Output image; `.pgm` or `.png`.
    #[arg(long, short)]
    pub output: PathBuf,
    /// Ground-truth image to compare against.
    #[arg(long)]
    pub reference: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitArg {
    Train,
    Test,
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, value_enum, default_value_t = SplitArg::Test)]
    pub split: SplitArg,
    #[command(flatten)]
    pub inference: InferenceArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct CrossValidateArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Center counts to try, comma-separated.
    #[arg(long, value_delimiter = ',', default_value = "12")]
    pub centers_grid: Vec<usize>,
    /// HOG grid sizes to try, comma-separated; omit to keep the manifest's.
    #[arg(long, value_delimiter = ',')]
    pub hog_grid: Vec<usize>,
    /// Number of object folds; leave-one-object-out when omitted.
    #[arg(long)]
    pub folds: Option<usize>,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[command(flatten)]
    pub inference: InferenceArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticKind {
    /// Inline Fourier-curve feature vectors.
    Fourier,
    /// PGM frames of a rotating bar.
    Bar,
}

#[derive(Debug, Args, Serialize)]
pub struct GenSyntheticArgs {
    #[arg(long, value_enum, default_value_t = SyntheticKind::Fourier)]
    pub kind: SyntheticKind,
    #[arg(long, default_value_t = 5)]
    pub objects: usize,
    #[arg(long, default_value_t = 72)]
    pub views: usize,
    #[arg(long, default_value_t = 40)]
    pub dim: usize,
    #[arg(long, default_value_t = 3)]
    pub harmonics: usize,
    #[arg(long, default_value_t = 0.01)]
    pub noise: f64,
    /// Every n-th view goes to the test split; 0 for none.
    #[arg(long, default_value_t = 4)]
    pub heldout_every: usize,
    /// Category count; defaults to one category per object.
    #[arg(long)]
    pub categories: Option<usize>,
    /// Frame size for `--kind bar`.
    #[arg(long, default_value_t = 32)]
    pub size: usize,
    #[arg(long, short)]
    pub output: PathBuf,
}

/// One invocation, as appended to the run log.
#[derive(Debug, Serialize)]
pub struct RunRecord<'a> {
    pub command: &'a str,
    pub argv: &'a [String],
    pub config: &'a Cli,
    pub seed: u64,
    pub wall_time_s: f64,
    pub metrics: Value,
}

/// Runs a parsed command line, writing results to `out`.
pub fn run(cli: &Cli, argv: &[String], out: &mut (dyn Write + Send)) -> Result<()> {
    let started = Instant::now();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::InvalidConfig("--threads must be positive".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let mut sink = Sink::new(cli.output_format, out);
    let metrics = pool.install(|| match &cli.command {
        Command::Train(a) => cmd_train(a, cli.seed, &mut sink),
        Command::Infer(a) => cmd_infer(a, cli.seed, &mut sink),
        Command::Synthesize(a) => cmd_synthesize(a, &mut sink),
        Command::Evaluate(a) => cmd_evaluate(a, cli.seed, &mut sink),
        Command::CrossValidate(a) => cmd_cross_validate(a, cli.seed, &mut sink),
        Command::GenSynthetic(a) => cmd_gen_synthetic(a, cli.seed, &mut sink),
    })?;
    if let Some(log) = &cli.run_log {
        let record = RunRecord {
            command: cli.command.name(),
            argv,
            config: cli,
            seed: cli.seed,
            wall_time_s: started.elapsed().as_secs_f64(),
            metrics,
        };
        let mut file = std::fs::OpenOptions::new().create(true).append(true).open(log)?;
        writeln!(file, "{}", serde_json::to_string(&record).expect("serializable"))?;
    }
    Ok(())
}

/// Destination of command output in the selected format.
pub struct Sink<'a> {
    format: OutputFormat,
    out: &'a mut (dyn Write + Send),
}

impl<'a> Sink<'a> {
    pub fn new(format: OutputFormat, out: &'a mut (dyn Write + Send)) -> Self {
        Sink { format, out }
    }

    fn record(&mut self, kind: &str, mut fields: Value) -> Result<()> {
        if self.format == OutputFormat::Records {
            if let Value::Object(map) = &mut fields {
                map.insert("record".into(), Value::String(kind.into()));
            }
            writeln!(self.out, "{}", serde_json::to_string(&fields).expect("serializable"))?;
        }
        Ok(())
    }

    fn text(&mut self, text: &str) -> Result<()> {
        if self.format == OutputFormat::Text {
            self.out.write_all(text.as_bytes())?;
        }
        Ok(())
    }
}

/// Left-aligned columns separated by two spaces.
fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |cells: Vec<&str>| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        out.push_str(padded.join("  ").trim_end());
        out.push('\n');
    };
    line(header.to_vec());
    for row in rows {
        line(row.iter().map(String::as_str).collect());
    }
    out
}

fn key_values(pairs: &[(&str, String)]) -> String {
    let rows: Vec<Vec<String>> = pairs.iter().map(|(k, v)| vec![k.to_string(), v.clone()]).collect();
    table(&["metric", "value"], &rows)
}

fn pose_json(pose: &PoseAngles) -> Value {
    json!({
        "yaw_deg": pose.yaw().to_degrees(),
        "pitch_deg": pose.pitch().map(f64::to_degrees),
        "roll_deg": pose.roll().map(f64::to_degrees),
    })
}

fn pose_text(pose: &PoseAngles) -> String {
    pose.to_degrees()
        .iter()
        .map(|d| format!("{d:.3}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn report_json(report: &EvalReport) -> Value {
    serde_json::to_value(report).expect("serializable")
}

pub fn cmd_train(args: &TrainArgs, seed: u64, sink: &mut Sink<'_>) -> Result<Value> {
    let manifest = load_manifest(&args.manifest)?;
    let options = args.kernel.options(args.centers)?;
    let mut provenance = Provenance {
        seed,
        ..Provenance::default()
    };
    provenance
        .parameters
        .insert("manifest".into(), args.manifest.display().to_string());
    provenance.parameters.insert(
        "train_options".into(),
        serde_json::to_string(&options).expect("serializable"),
    );
    let trained = match train_model(&manifest, &options, provenance) {
        Err(Error::EmptyTrainingSplit(_)) => return Err(Error::EmptyTrainingSplit(args.manifest.clone())),
        Err(e @ Error::IllPosed { .. }) => {
            eprintln!("warning: more mapping centers than training views makes the fit ill-posed");
            return Err(e);
        }
        other => other?,
    };
    save_model(&trained.container, &args.output)?;

    let sv = trained.container.space.singular_values().to_vec();
    let mut rows = Vec::new();
    for fit in &trained.fits {
        sink.record("object_fit", serde_json::to_value(fit).expect("serializable"))?;
        rows.push(vec![
            fit.object_id.clone(),
            fit.category_id.clone(),
            fit.views.to_string(),
            format!("{:.6e}", fit.rms_residual),
            fit.rank.to_string(),
            fit.degenerate.to_string(),
        ]);
    }
    let summary = json!({
        "model": args.output.display().to_string(),
        "objects": trained.fits.len(),
        "style_dim": trained.container.space.style_dim(),
        "centers": trained.container.space.kernel().num_centers(),
        "singular_values": sv,
    });
    sink.record("model", summary.clone())?;
    let spectrum: Vec<String> = sv.iter().map(|s| format!("{s:.6e}")).collect();
    sink.text(&format!(
        "{}\nsingular values: {}\nstyle dimension: {}\nmodel written to {}\n",
        table(&["object", "category", "views", "rms_residual", "rank", "degenerate"], &rows),
        spectrum.join(" "),
        trained.container.space.style_dim(),
        args.output.display()
    ))?;
    Ok(summary)
}

fn parse_features(text: &str) -> Result<DVector<f64>> {
    let values = text
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|_| Error::InvalidConfig("--features must be comma-separated numbers".into()))?;
    Ok(DVector::from_vec(values))
}

pub fn cmd_infer(args: &InferArgs, seed: u64, sink: &mut Sink<'_>) -> Result<Value> {
    let container = load_model(&args.model)?;
    let options = args.inference.options()?;
    let y = match (&args.image, &args.features, &args.manifest, args.record) {
        (Some(path), _, _, _) => {
            let img = Image::open(path)?;
            DVector::from_vec(extract(&img, &container.feature_config)?.values)
        }
        (_, Some(text), _, _) => parse_features(text)?,
        (_, _, Some(path), Some(index)) => {
            let manifest = load_manifest(path)?;
            if index >= manifest.records.len() {
                return Err(Error::InvalidConfig(format!(
                    "record {index} out of range ({} records)",
                    manifest.records.len()
                )));
            }
            record_features(&container, &manifest, index)?
        }
        _ => {
            return Err(Error::InvalidConfig(
                "give one of --image, --features or --manifest with --record".into(),
            ))
        }
    };
    let support = container.support()?;
    let est = predict(&container, &support, &y, &options, seed)?;
    let result = json!({
        "pose": pose_json(&est.pose),
        "category_id": est.category_id,
        "object_id": est.object_id,
        "reconstruction_error": est.reconstruction_error,
        "trace": est.trace,
    });
    sink.record("inference", result.clone())?;
    let trace: Vec<String> = est.trace.iter().map(|e| format!("{e:.6e}")).collect();
    sink.text(&key_values(&[
        ("pose_deg", pose_text(&est.pose)),
        ("category", est.category_id.clone()),
        ("instance", est.object_id.clone()),
        ("reconstruction_error", format!("{:.6e}", est.reconstruction_error)),
        ("trace", trace.join(" ")),
    ]))?;
    Ok(result)
}

pub fn cmd_synthesize(args: &SynthesizeArgs, sink: &mut Sink<'_>) -> Result<Value> {
    let container = load_model(&args.model)?;
    let object = container
        .object_index(&args.object)
        .ok_or_else(|| Error::InvalidConfig(format!("model has no object '{}'", args.object)))?;
    let pose = PoseAngles::new(
        args.yaw_deg.to_radians(),
        args.pitch_deg.map(f64::to_radians),
        args.roll_deg.map(f64::to_radians),
    )?;
    let img = synthesize_object(&container, object, &pose)?;
    img.scaled(255.0).save_8bit(&args.output)?;
    let mse = match &args.reference {
        Some(path) => Some(synthesis_mse(&reference_image(path, &container.feature_config)?, &img)?),
        None => None,
    };
    let result = json!({
        "output": args.output.display().to_string(),
        "object_id": args.object,
        "pose": pose_json(&pose),
        "mse": mse,
        "mse_255": mse.map(|m| m * 255.0 * 255.0),
    });
    sink.record("synthesis", result.clone())?;
    let mut pairs = vec![
        ("output", args.output.display().to_string()),
        ("object", args.object.clone()),
        ("pose_deg", pose_text(&pose)),
    ];
    if let Some(m) = mse {
        pairs.push(("mse", format!("{m:.6e}")));
        pairs.push(("mse_255", format!("{:.3}", m * 255.0 * 255.0)));
    }
    sink.text(&key_values(&pairs))?;
    Ok(result)
}

pub fn cmd_evaluate(args: &EvaluateArgs, seed: u64, sink: &mut Sink<'_>) -> Result<Value> {
    let container = load_model(&args.model)?;
    let manifest = load_manifest(&args.manifest)?;
    let options = args.inference.options()?;
    let split = match args.split {
        SplitArg::Train => Split::Train,
        SplitArg::Test => Split::Test,
    };
    let (outcomes, report) = crate::pipeline::evaluate_split(&container, &manifest, split, &options, seed)?;
    let mut rows = Vec::new();
    for o in &outcomes {
        sink.record("prediction", serde_json::to_value(o).expect("serializable"))?;
        rows.push(vec![
            o.index.to_string(),
            o.truth.object_id.clone(),
            format!("{:.3}", o.truth.yaw_deg),
            format!("{:.3}", o.estimate.yaw_deg),
            o.estimate.category_id.clone(),
            o.estimate.object_id.clone(),
            format!("{:.6e}", o.reconstruction_error),
        ]);
    }
    let value = report_json(&report);
    sink.record("report", value.clone())?;
    sink.text(&table(
        &["record", "object", "yaw_true", "yaw_est", "category", "instance", "error"],
        &rows,
    ))?;
    sink.text("\n")?;
    sink.text(&key_values(&report.fields()))?;
    Ok(value)
}

pub fn cmd_cross_validate(args: &CrossValidateArgs, seed: u64, sink: &mut Sink<'_>) -> Result<Value> {
    let manifest = load_manifest(&args.manifest)?;
    let base = args.kernel.options(args.centers_grid.first().copied().unwrap_or(12))?;
    let options = args.inference.options()?;
    let (cells, best) = cross_validate(
        &manifest,
        &base,
        &args.centers_grid,
        &args.hog_grid,
        args.folds,
        &options,
        seed,
    )?;
    let mut rows = Vec::new();
    for (i, cell) in cells.iter().enumerate() {
        sink.record(
            "cv_cell",
            json!({
                "centers": cell.centers,
                "hog_grid": cell.hog_grid,
                "mae_degrees": cell.report.mae_degrees,
                "pct_ae_under_22_5": cell.report.pct_ae_under_22_5,
                "pct_ae_under_45": cell.report.pct_ae_under_45,
                "selected": i == best,
            }),
        )?;
        rows.push(vec![
            cell.centers.to_string(),
            cell.hog_grid.map_or("-".into(), |n| n.to_string()),
            format!("{:.4}", cell.report.mae_degrees),
            format!("{:.2}", cell.report.pct_ae_under_22_5),
            format!("{:.2}", cell.report.pct_ae_under_45),
            if i == best { "*".into() } else { String::new() },
        ]);
    }
    let chosen = &cells[best];
    let summary = json!({
        "folds": args.folds,
        "best_centers": chosen.centers,
        "best_hog_grid": chosen.hog_grid,
        "best_mae_degrees": chosen.report.mae_degrees,
    });
    sink.record("cv_selection", summary.clone())?;
    sink.text(&table(&["centers", "hog_grid", "mae", "ae<22.5", "ae<45", "best"], &rows))?;
    Ok(summary)
}

pub fn cmd_gen_synthetic(args: &GenSyntheticArgs, seed: u64, sink: &mut Sink<'_>) -> Result<Value> {
    let records = match args.kind {
        SyntheticKind::Fourier => {
            let spec = SyntheticSpec {
                object_count: args.objects,
                views_per_object: args.views,
                feature_dim: args.dim,
                harmonic_order: args.harmonics,
                noise_std: args.noise,
                seed,
                heldout_every: args.heldout_every,
                category_count: args.categories.unwrap_or(args.objects),
            };
            let manifest = generate_synthetic(&spec)?;
            if let Some(dir) = args.output.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(&args.output, manifest.to_text())?;
            manifest.records.len()
        }
        SyntheticKind::Bar => {
            if args.size < 4 {
                return Err(Error::InvalidConfig("--size must be at least 4".into()));
            }
            write_rotating_bar_dataset(&args.output, args.size, args.views, args.heldout_every)?
                .records
                .len()
        }
    };
    let result = json!({
        "manifest": args.output.display().to_string(),
        "records": records,
    });
    sink.record("dataset", result.clone())?;
    sink.text(&format!("wrote {records} records to {}\n", args.output.display()))?;
    Ok(result)
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn main_with_args(argv: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let mut stdout = std::io::stdout();
    match run(&cli, &argv, &mut stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = stdout.flush();
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

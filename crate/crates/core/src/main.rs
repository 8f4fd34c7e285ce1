use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use log::info;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use weldnet::baselines::{train_hdp, train_time_input, BaselineConfig, HdpModel, TimeInputModel};
use weldnet::eval::{emit_report_csv, error_table, operator_error_vs_time, projection_error_vs_time, ErrorReport, Predictor};
use weldnet::id::{dataset_id_report, write_id_csv, IdMethod, DEFAULT_MLE_K, DEFAULT_SUBSAMPLE};
use weldnet::pde::{gen_dataset, Family, GenConfig, TrajectoryDataset};
use weldnet::reduction::CoderKind;
use weldnet::weldnet::{model_kind, train_weldnet, Parallelism, TrainConfig, Variant, WeldModel};
use weldnet::{Result, WeldError};

#[derive(Parser)]
#[command(
    name = "weldnet",
    version,
    about = "Windowed latent-dynamics model reduction for 1-D evolution equations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a trajectory dataset.
    GenData(GenArgs),
    /// Train a WeldNet model or a baseline.
    Train(TrainArgs),
    /// Evaluate a trained model on a dataset.
    Eval(EvalArgs),
    /// Estimate intrinsic dimension of a dataset.
    Id(IdArgs),
    /// Tabulate operator errors of several models at chosen times.
    Report(ReportArgs),
}

fn parse_family(s: &str) -> std::result::Result<Family, String> {
    s.parse().map_err(|e: WeldError| e.to_string())
}

fn parse_coder(s: &str) -> std::result::Result<CoderKind, String> {
    match s {
        "ff" | "neural" => Ok(CoderKind::Neural),
        "pca" => Ok(CoderKind::Pca),
        _ => Err(format!("unknown coder {s:?}; expected ff or pca")),
    }
}

fn parse_variant(s: &str) -> std::result::Result<Variant, String> {
    s.parse().map_err(|e: WeldError| e.to_string())
}

fn parse_method(s: &str) -> std::result::Result<IdMethod, String> {
    s.parse().map_err(|e: WeldError| e.to_string())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
enum BaselineKind {
    Hdp,
    TimeInput,
}

/// Reads `path` into `T`, missing keys taking their defaults.
fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => Ok(serde_json::from_str(&fs::read_to_string(p)?)?),
    }
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    fs::write(path, serde_json::to_string_pretty(v)? + "\n")?;
    Ok(())
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".config.json");
    PathBuf::from(s)
}

fn require<T>(v: Option<T>, flag: &str) -> Result<T> {
    v.ok_or_else(|| WeldError::invalid(format!("{flag} is required (as a flag or in --config)")))
}

fn parse_times(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse().map_err(|_| WeldError::invalid(format!("bad time index {p:?}"))))
        .collect()
}

// ---------------------------------------------------------------- gen-data

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = parse_family)]
    family: Option<Family>,
    /// Number of trajectories.
    #[arg(long)]
    n: Option<usize>,
    /// Number of stored time steps.
    #[arg(long)]
    steps: Option<usize>,
    /// Spatial grid points.
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    substeps: Option<usize>,
    #[arg(long)]
    refine: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
struct GenRun {
    family: Option<Family>,
    n_samples: usize,
    n_steps: usize,
    n_points: usize,
    t_end: Option<f64>,
    seed: u64,
    substeps: usize,
    refine: usize,
    out: Option<PathBuf>,
}

impl Default for GenRun {
    fn default() -> Self {
        let g = GenConfig::new(Family::Tscale);
        GenRun {
            family: None,
            n_samples: g.n_samples,
            n_steps: g.n_steps,
            n_points: g.n_points,
            t_end: None,
            seed: g.seed,
            substeps: g.substeps,
            refine: g.refine,
            out: None,
        }
    }
}

fn cmd_gen_data(a: GenArgs) -> Result<()> {
    let mut r: GenRun = load_config(a.config.as_deref())?;
    r.family = a.family.or(r.family);
    r.n_samples = a.n.unwrap_or(r.n_samples);
    r.n_steps = a.steps.unwrap_or(r.n_steps);
    r.n_points = a.points.unwrap_or(r.n_points);
    r.t_end = a.t_end.or(r.t_end);
    r.seed = a.seed.unwrap_or(r.seed);
    r.substeps = a.substeps.unwrap_or(r.substeps);
    r.refine = a.refine.unwrap_or(r.refine);
    r.out = a.out.or(r.out);
    let family = require(r.family, "--family")?;
    let out = require(r.out.clone(), "--out")?;
    write_json(&sidecar(&out), &r)?;
    let cfg = GenConfig {
        family,
        n_samples: r.n_samples,
        n_steps: r.n_steps,
        n_points: r.n_points,
        t_end: r.t_end,
        seed: r.seed,
        substeps: r.substeps,
        refine: r.refine,
    };
    let t0 = Instant::now();
    let ds = gen_dataset(&cfg)?;
    ds.write(&out)?;
    info!(
        "wrote {} ({} x {} x {}) in {:.1?}",
        out.display(),
        ds.n_samples(),
        ds.n_steps(),
        ds.dim(),
        t0.elapsed()
    );
    Ok(())
}

// ------------------------------------------------------------------- train

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    /// Output model directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    windows: Option<usize>,
    #[arg(long)]
    latent_dim: Option<usize>,
    /// ff or pca.
    #[arg(long, value_parser = parse_coder)]
    coder: Option<CoderKind>,
    /// Train a baseline instead of WeldNet.
    #[arg(long, value_enum)]
    baseline: Option<BaselineKind>,
    /// Propagator training variant: i, ii, iii or iv.
    #[arg(long, value_parser = parse_variant)]
    ablation: Option<Variant>,
    /// Train windows concurrently (results are identical to serial runs).
    #[arg(long)]
    parallel_windows: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    epochs_joint: Option<usize>,
    #[arg(long)]
    epochs_finetune: Option<usize>,
    #[arg(long)]
    epochs_transcoder: Option<usize>,
    #[arg(long)]
    coder_width: Option<usize>,
    #[arg(long)]
    propagator_width: Option<usize>,
    #[arg(long)]
    baseline_width: Option<usize>,
    #[arg(long)]
    baseline_epochs: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
struct TrainRun {
    data: Option<PathBuf>,
    out: Option<PathBuf>,
    windows: usize,
    latent_dim: usize,
    coder: CoderKind,
    baseline: Option<BaselineKind>,
    parallel_windows: bool,
    train: TrainConfig,
    baseline_config: BaselineConfig,
}

impl Default for TrainRun {
    fn default() -> Self {
        TrainRun {
            data: None,
            out: None,
            windows: 4,
            latent_dim: 4,
            coder: CoderKind::Neural,
            baseline: None,
            parallel_windows: false,
            train: TrainConfig::default(),
            baseline_config: BaselineConfig::default(),
        }
    }
}

const RUN_CONFIG_FILE: &str = "run_config.json";

fn weld_threads() -> usize {
    std::env::var("WELD_THREADS").ok().and_then(|v| v.parse().ok()).unwrap_or(0)
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let mut r: TrainRun = load_config(a.config.as_deref())?;
    r.data = a.data.or(r.data);
    r.out = a.out.or(r.out);
    r.windows = a.windows.unwrap_or(r.windows);
    r.latent_dim = a.latent_dim.unwrap_or(r.latent_dim);
    r.coder = a.coder.unwrap_or(r.coder);
    r.baseline = a.baseline.or(r.baseline);
    r.parallel_windows |= a.parallel_windows;
    let t = &mut r.train;
    t.variant = a.ablation.unwrap_or(t.variant);
    t.seed = a.seed.unwrap_or(t.seed);
    t.lr = a.lr.unwrap_or(t.lr);
    t.batch_size = a.batch_size.unwrap_or(t.batch_size);
    t.lambda = a.lambda.unwrap_or(t.lambda);
    t.epochs_joint = a.epochs_joint.unwrap_or(t.epochs_joint);
    t.epochs_finetune = a.epochs_finetune.unwrap_or(t.epochs_finetune);
    t.epochs_transcoder = a.epochs_transcoder.unwrap_or(t.epochs_transcoder);
    t.arch.coder_width = a.coder_width.unwrap_or(t.arch.coder_width);
    t.arch.propagator_width = a.propagator_width.unwrap_or(t.arch.propagator_width);
    r.baseline_config.width = a.baseline_width.unwrap_or(r.baseline_config.width);
    r.baseline_config.epochs = a.baseline_epochs.unwrap_or(r.baseline_config.epochs);
    r.train.validate()?;

    let data = require(r.data.clone(), "--data")?;
    let out = require(r.out.clone(), "--out")?;
    write_json(&out.join(RUN_CONFIG_FILE), &r)?;
    let ds = TrajectoryDataset::read(&data)?;
    let t0 = Instant::now();
    match r.baseline {
        Some(BaselineKind::Hdp) => train_hdp(&ds, &r.train, &r.baseline_config)?.save(&out)?,
        Some(BaselineKind::TimeInput) => train_time_input(&ds, &r.train, &r.baseline_config)?.save(&out)?,
        None => {
            let par = Parallelism {
                parallel_windows: r.parallel_windows,
                max_threads: weld_threads(),
            };
            train_weldnet(&ds, r.coder, r.windows, r.latent_dim, &r.train, par)?.save(&out)?
        }
    }
    info!("trained model in {} ({:.1?})", out.display(), t0.elapsed());
    Ok(())
}

// -------------------------------------------------------------------- eval

enum LoadedModel {
    Weld(WeldModel),
    Hdp(HdpModel),
    TimeInput(TimeInputModel),
}

impl LoadedModel {
    fn load(dir: &Path) -> Result<Self> {
        match model_kind(dir)?.as_str() {
            "weldnet" => Ok(LoadedModel::Weld(WeldModel::load(dir)?)),
            "hdp" => Ok(LoadedModel::Hdp(HdpModel::load(dir)?)),
            "time-input" => Ok(LoadedModel::TimeInput(TimeInputModel::load(dir)?)),
            k => Err(WeldError::invalid(format!("unknown model kind {k:?} in {}", dir.display()))),
        }
    }

    fn predictor(&self) -> &dyn Predictor {
        match self {
            LoadedModel::Weld(m) => m,
            LoadedModel::Hdp(m) => m,
            LoadedModel::TimeInput(m) => m,
        }
    }

    fn tag(&self) -> String {
        match self {
            LoadedModel::Weld(m) => {
                let c = if m.coder_kind() == CoderKind::Pca { "pca" } else { "ff" };
                format!("{c}-weldnet-w{}", m.layout.n_windows())
            }
            LoadedModel::Hdp(_) => "hdp".into(),
            LoadedModel::TimeInput(_) => "time-input".into(),
        }
    }

    fn test_split(&self) -> &[usize] {
        match self {
            LoadedModel::Weld(m) => &m.split.test,
            LoadedModel::Hdp(m) => &m.info.split.test,
            LoadedModel::TimeInput(m) => &m.info.split.test,
        }
    }
}

fn eval_samples(model: &LoadedModel, ds: &TrajectoryDataset, all: bool) -> Result<Vec<usize>> {
    let s: Vec<usize> = if all {
        (0..ds.n_samples()).collect()
    } else {
        model.test_split().to_vec()
    };
    if let Some(&bad) = s.iter().find(|&&n| n >= ds.n_samples()) {
        return Err(WeldError::invalid(format!(
            "held-out sample {bad} does not exist in a dataset of {} trajectories; pass --all-samples",
            ds.n_samples()
        )));
    }
    Ok(s)
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    /// Directory for the CSV reports.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated time indices for the summary table.
    #[arg(long)]
    times: Option<String>,
    /// Evaluate every trajectory instead of the model's held-out split.
    #[arg(long)]
    all_samples: bool,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default)]
struct EvalRun {
    model: Option<PathBuf>,
    data: Option<PathBuf>,
    out: Option<PathBuf>,
    times: Vec<usize>,
    all_samples: bool,
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    let mut r: EvalRun = load_config(a.config.as_deref())?;
    r.model = a.model.or(r.model);
    r.data = a.data.or(r.data);
    r.out = a.out.or(r.out);
    if let Some(t) = a.times {
        r.times = parse_times(&t)?;
    }
    r.all_samples |= a.all_samples;
    let out = require(r.out.clone(), "--out")?;
    write_json(&out.join("eval_config.json"), &r)?;
    let model = LoadedModel::load(&require(r.model.clone(), "--model")?)?;
    let ds = TrajectoryDataset::read(&require(r.data.clone(), "--data")?)?;
    let samples = eval_samples(&model, &ds, r.all_samples)?;
    let tag = model.tag();
    let mut reports = vec![operator_error_vs_time(model.predictor(), &ds, &samples, &tag)?];
    if let LoadedModel::Weld(m) = &model {
        reports.push(projection_error_vs_time(m, &ds, &samples, &tag)?);
    }
    emit_report_csv(&reports, &out)?;
    if !r.times.is_empty() {
        fs::write(out.join(format!("{tag}_table.csv")), error_table(&reports, &r.times)?)?;
    }
    println!("{tag}: final-time mean relative operator error {}", reports[0].final_error());
    Ok(())
}

// ---------------------------------------------------------------------- id

#[derive(Args)]
struct IdArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    /// Output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// mle or twonn.
    #[arg(long, value_parser = parse_method)]
    method: Option<IdMethod>,
    /// Neighbors for the MLE estimator.
    #[arg(long)]
    k: Option<usize>,
    /// Comma-separated time indices for per-time estimates.
    #[arg(long)]
    times: Option<String>,
    /// Also estimate over a random subsample of all snapshots.
    #[arg(long)]
    all_times: bool,
    #[arg(long)]
    subsample: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
struct IdRun {
    data: Option<PathBuf>,
    out: Option<PathBuf>,
    method: IdMethod,
    k: usize,
    times: Vec<usize>,
    all_times: bool,
    subsample: usize,
    seed: u64,
}

impl Default for IdRun {
    fn default() -> Self {
        IdRun {
            data: None,
            out: None,
            method: IdMethod::Mle,
            k: DEFAULT_MLE_K,
            times: Vec::new(),
            all_times: false,
            subsample: DEFAULT_SUBSAMPLE,
            seed: 0,
        }
    }
}

fn cmd_id(a: IdArgs) -> Result<()> {
    let mut r: IdRun = load_config(a.config.as_deref())?;
    r.data = a.data.or(r.data);
    r.out = a.out.or(r.out);
    r.method = a.method.unwrap_or(r.method);
    r.k = a.k.unwrap_or(r.k);
    if let Some(t) = a.times {
        r.times = parse_times(&t)?;
    }
    r.all_times |= a.all_times;
    r.subsample = a.subsample.unwrap_or(r.subsample);
    r.seed = a.seed.unwrap_or(r.seed);
    let out = require(r.out.clone(), "--out")?;
    if r.times.is_empty() && !r.all_times {
        return Err(WeldError::invalid("nothing to estimate: pass --times and/or --all-times"));
    }
    write_json(&sidecar(&out), &r)?;
    let ds = TrajectoryDataset::read(&require(r.data.clone(), "--data")?)?;
    let sub = if r.all_times { r.subsample } else { 0 };
    let rows = dataset_id_report(&ds, r.method, r.k, &r.times, sub, r.seed)?;
    write_id_csv(&rows, &out)?;
    for row in &rows {
        println!("{} {}: {}", row.estimate.method, row.slice, row.estimate.value);
    }
    Ok(())
}

// ------------------------------------------------------------------ report

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    data: PathBuf,
    /// Model directories.
    #[arg(long, num_args = 1.., required = true)]
    models: Vec<PathBuf>,
    #[arg(long, default_value = "30,60,90,120,150,180,210,240,270,300")]
    times: String,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    all_samples: bool,
}

fn cmd_report(a: ReportArgs) -> Result<()> {
    let times = parse_times(&a.times)?;
    let ds = TrajectoryDataset::read(&a.data)?;
    let mut reports: Vec<ErrorReport> = Vec::with_capacity(a.models.len());
    for dir in &a.models {
        let model = LoadedModel::load(dir)?;
        let samples = eval_samples(&model, &ds, a.all_samples)?;
        reports.push(operator_error_vs_time(model.predictor(), &ds, &samples, &model.tag())?);
    }
    let table = error_table(&reports, &times)?;
    if let Some(dir) = a.out.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    fs::write(&a.out, &table)?;
    print!("{table}");
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let threads = weld_threads();
    if threads > 0 {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    let res = match cli.command {
        Command::GenData(a) => cmd_gen_data(a),
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Id(a) => cmd_id(a),
        Command::Report(a) => cmd_report(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

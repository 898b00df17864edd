//! Command-line front end.

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::engine::{ensemble, ensemble_uniform, finetune, register, EngineConfig};
use crate::error::RegError;
use crate::evaluation::{evaluate, njd_count};
use crate::fields::{jacobian_determinant, warp_landmarks, warp_volume};
use crate::grids::{crop_pad, minmax_normalize, LandmarkSet, Volume, BRATS_REGION};
use crate::io::synth::{synth_pair, SynthSpec};
use crate::io::{
    read_field, read_landmarks, read_volume, write_field, write_landmarks, write_volume, Report,
};
use crate::objectives::Mode;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<RegError> for CliError {
    fn from(e: RegError) -> Self {
        let code = match e {
            RegError::MissingLandmarks | RegError::WeightSum(_) => EXIT_USAGE,
            _ => EXIT_DATA,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "c2freg", version, about = "Coarse-to-fine deformable registration of 3D volumes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic pair with a known smooth deformation.
    Synth(SynthArgs),
    /// Register a moving volume onto a fixed one.
    Register(RegisterArgs),
    /// Landmark errors before and after a field.
    Evaluate(EvaluateArgs),
    /// Resample a volume (and optionally landmarks) through a field.
    Warp(WarpArgs),
    /// Weighted average of displacement fields.
    Ensemble(EnsembleArgs),
    /// Jacobian determinant map of a field.
    Jacobian(JacobianArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Grid size as `nx,ny,nz`.
    #[arg(long, value_parser = parse_triple::<usize>, default_value = "36,48,40")]
    pub dims: [usize; 3],
    /// Largest displacement magnitude in voxels.
    #[arg(long, default_value_t = 5.0)]
    pub max_disp: f64,
    #[arg(long, default_value_t = 20)]
    pub landmarks: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Preprocess {
    /// Crop to the fixed brain region and min-max normalize.
    Brats,
}

#[derive(Debug, Args)]
pub struct RegisterArgs {
    #[arg(long)]
    pub fixed: PathBuf,
    #[arg(long)]
    pub moving: PathBuf,
    #[arg(long)]
    pub fixed_landmarks: Option<PathBuf>,
    #[arg(long)]
    pub moving_landmarks: Option<PathBuf>,
    /// pretrain, train or finetune; overrides the config file.
    #[arg(long)]
    pub mode: Option<Mode>,
    #[arg(long)]
    pub out_field: PathBuf,
    #[arg(long)]
    pub out_warped: Option<PathBuf>,
    /// TOML engine configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub preprocess: Option<Preprocess>,
    /// key=value report file.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// JSON copy of the report.
    #[arg(long)]
    pub report_json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub fixed_landmarks: PathBuf,
    #[arg(long)]
    pub moving_landmarks: PathBuf,
    /// Field applied to the fixed landmarks; identity when omitted.
    #[arg(long)]
    pub field: Option<PathBuf>,
    /// Voxel spacing `sx,sy,sz` for a millimetre MAE.
    #[arg(long, value_parser = parse_triple::<f64>)]
    pub spacing: Option<[f64; 3]>,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub report_json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WarpArgs {
    #[arg(long)]
    pub moving: PathBuf,
    #[arg(long)]
    pub field: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Fixed-space landmarks to push through the field.
    #[arg(long, requires = "out_landmarks")]
    pub landmarks: Option<PathBuf>,
    #[arg(long, requires = "landmarks")]
    pub out_landmarks: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EnsembleArgs {
    #[arg(long, num_args = 1.., required = true)]
    pub fields: Vec<PathBuf>,
    /// Comma-separated weights summing to 1; uniform when omitted.
    #[arg(long, value_delimiter = ',')]
    pub weights: Option<Vec<f64>>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct JacobianArgs {
    #[arg(long)]
    pub field: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

fn parse_triple<T: std::str::FromStr + Copy>(s: &str) -> std::result::Result<[T; 3], String> {
    let parts: Vec<T> = s
        .split(',')
        .map(|p| p.trim().parse::<T>().map_err(|_| format!("bad value {p:?}")))
        .collect::<std::result::Result<_, _>>()?;
    match parts[..] {
        [a, b, c] => Ok([a, b, c]),
        _ => Err(format!("expected three comma-separated values, got {s:?}")),
    }
}

fn emit(report: &Report, text: Option<&Path>, json: Option<&Path>) -> CliResult<()> {
    print!("{}", report.to_text());
    if let Some(p) = text {
        report.write(p)?;
    }
    if let Some(p) = json {
        report.write_json(p)?;
    }
    Ok(())
}

fn load_config(args: &RegisterArgs) -> CliResult<EngineConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| RegError::io(path, e))?;
            EngineConfig::from_toml(&text).map_err(|e| RegError::format(path, e.to_string()))?
        }
        None => EngineConfig::default(),
    };
    if let Some(mode) = args.mode {
        cfg.objective.mode = mode;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn load_landmark_pair(args: &RegisterArgs, mode: Mode) -> CliResult<Option<(LandmarkSet, LandmarkSet)>> {
    match (&args.fixed_landmarks, &args.moving_landmarks) {
        (Some(f), Some(m)) => Ok(Some((read_landmarks(f)?, read_landmarks(m)?))),
        (None, None) if mode == Mode::Train => Err(CliError::usage(
            "--mode train requires --fixed-landmarks and --moving-landmarks",
        )),
        (None, None) => Ok(None),
        (Some(_), None) => Err(CliError::usage("--fixed-landmarks given without --moving-landmarks")),
        (None, Some(_)) => Err(CliError::usage("--moving-landmarks given without --fixed-landmarks")),
    }
}

fn preprocess(v: Volume) -> CliResult<Volume> {
    Ok(minmax_normalize(&crop_pad(&v, BRATS_REGION)?))
}

fn run_register(args: &RegisterArgs) -> CliResult<()> {
    let cfg = load_config(args)?;
    let landmarks = load_landmark_pair(args, cfg.objective.mode)?;
    let mut fixed = read_volume(&args.fixed)?;
    let mut moving = read_volume(&args.moving)?;
    let mut landmarks = landmarks;
    if args.preprocess == Some(Preprocess::Brats) {
        fixed = preprocess(fixed)?;
        moving = preprocess(moving)?;
        let offset = BRATS_REGION.clone().map(|r| -(r.start as f64));
        landmarks = landmarks.map(|(f, m)| (f.translated(offset), m.translated(offset)));
    }
    let start = Instant::now();
    let pair = landmarks.as_ref().map(|(f, m)| (f, m));
    let mut result = register(&fixed, &moving, pair, &cfg)?;
    if cfg.finetune_iters > 0 {
        result = finetune(&result, &fixed, &moving, pair, &cfg)?;
    }
    write_field(&args.out_field, &result.final_field, fixed.spacing())?;
    if let Some(p) = &args.out_warped {
        write_volume(p, &result.warped)?;
    }
    let mut report = Report::new();
    report.text("registration_mode", cfg.objective.mode.to_string());
    report.add_registration(&result.report);
    if result.report.evaluation.is_none() {
        report.integer("njd", njd_count(&result.final_field) as i64);
    }
    emit(&report, args.report.as_deref(), args.report_json.as_deref())?;
    println!("# elapsed {:.2}s", start.elapsed().as_secs_f64());
    Ok(())
}

fn run_synth(args: &SynthArgs) -> CliResult<()> {
    if !(args.max_disp.is_finite() && args.max_disp >= 0.0) {
        return Err(CliError::usage(format!("--max-disp must be >= 0, got {}", args.max_disp)));
    }
    let pair = synth_pair(&SynthSpec {
        dims: args.dims,
        max_disp: args.max_disp,
        landmarks: args.landmarks,
        seed: args.seed,
    })?;
    let dir = &args.out_dir;
    std::fs::create_dir_all(dir).map_err(|e| RegError::io(dir, e))?;
    write_volume(&dir.join("fixed.vhdr"), &pair.fixed)?;
    write_volume(&dir.join("moving.vhdr"), &pair.moving)?;
    write_field(&dir.join("true_field.vhdr"), &pair.true_field, [1.0; 3])?;
    write_landmarks(&dir.join("fixed_landmarks.txt"), &pair.fixed_landmarks)?;
    write_landmarks(&dir.join("moving_landmarks.txt"), &pair.moving_landmarks)?;
    let e = evaluate(None, &pair.fixed_landmarks, &pair.moving_landmarks, None)?;
    let mut report = Report::new();
    report
        .number("max_displacement", pair.true_field.max_norm())
        .integer("true_field_njd", njd_count(&pair.true_field) as i64)
        .number("mae_before", e.mae_before);
    emit(&report, Some(&dir.join("synth_report.txt")), None)
}

fn run_evaluate(args: &EvaluateArgs) -> CliResult<()> {
    let fixed = read_landmarks(&args.fixed_landmarks)?;
    let moving = read_landmarks(&args.moving_landmarks)?;
    let field = args.field.as_deref().map(read_field).transpose()?;
    let spacing = args.spacing;
    let e = evaluate(field.as_ref(), &fixed, &moving, spacing)?;
    let mut report = Report::new();
    report.add_evaluation(&e);
    emit(&report, args.report.as_deref(), args.report_json.as_deref())
}

fn run_warp(args: &WarpArgs) -> CliResult<()> {
    let moving = read_volume(&args.moving)?;
    let field = read_field(&args.field)?;
    write_volume(&args.out, &warp_volume(&moving, &field)?)?;
    if let (Some(src), Some(dst)) = (&args.landmarks, &args.out_landmarks) {
        write_landmarks(dst, &warp_landmarks(&field, &read_landmarks(src)?))?;
    }
    Ok(())
}

fn run_ensemble(args: &EnsembleArgs) -> CliResult<()> {
    let fields = args
        .fields
        .iter()
        .map(|p| read_field(p))
        .collect::<Result<Vec<_>, _>>()?;
    let spacing = crate::io::volume_file::read_header(&args.fields[0])?.spacing;
    let combined = match &args.weights {
        Some(w) if w.len() != fields.len() => {
            return Err(CliError::usage(format!(
                "{} weights given for {} fields",
                w.len(),
                fields.len()
            )))
        }
        Some(w) => ensemble(&fields, w)?,
        None => ensemble_uniform(&fields)?,
    };
    write_field(&args.out, &combined, spacing)?;
    let mut report = Report::new();
    report.integer("members", fields.len() as i64).integer("njd", njd_count(&combined) as i64);
    emit(&report, None, None)
}

fn run_jacobian(args: &JacobianArgs) -> CliResult<()> {
    let field = read_field(&args.field)?;
    let spacing = crate::io::volume_file::read_header(&args.field)?.spacing;
    let det = jacobian_determinant(&field).with_spacing(spacing);
    write_volume(&args.out, &det)?;
    let (lo, hi) = det.min_max();
    let mut report = Report::new();
    report
        .integer("njd", det.data().iter().filter(|&&d| d <= 0.0).count() as i64)
        .number("det_min", lo)
        .number("det_max", hi);
    emit(&report, args.report.as_deref(), None)
}

pub fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Synth(a) => run_synth(a),
        Command::Register(a) => run_register(a),
        Command::Evaluate(a) => run_evaluate(a),
        Command::Warp(a) => run_warp(a),
        Command::Ensemble(a) => run_ensemble(a),
        Command::Jacobian(a) => run_jacobian(a),
    }
}

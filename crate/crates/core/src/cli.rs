//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 for usage errors, 3 for invalid input
//! (validation, malformed files or manifests, dangling paths) and 4 for I/O
//! failures. Failures also print one JSON line on stderr:
//! `{"error":"<kind>","exit_code":N,"message":"..."}`.

use std::ffi::OsString;
use std::fmt;
use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::camera_geometry::{AdjustMode, CameraIntrinsics};
use crate::depth_io::{load_manifest, parse_manifest, MANIFEST_HEADER};
use crate::error::{Error, Result};
use crate::local_motion::MotionMaskConfig;
use crate::metrics::{EvalCrop, DEFAULT_ABSREL_NORM_THRESHOLD, DEFAULT_MIN_DEPTH};
use crate::pipeline::{
    read_fit_slope, run_apply, run_evaluate, run_fit, run_fov_adjust, run_motion_masks, run_synth, to_json,
    write_json, Convention, EvaluateConfig, FitConfig,
};
use crate::presets::{preset, preset_names};
use crate::scale_regression::{FitMethod, FitOptions, DEFAULT_MAX_PAIRS, DEFAULT_PIXELS_PER_IMAGE};
use crate::synth::TwoDomainConfig;

pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "depthscale", version, about = "Transfer metric depth scale between camera domains")]
pub struct Cli {
    /// Worker threads for per-image work; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0, value_name = "N")]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Map source images, depth and masks onto a target camera.
    FovAdjust(FovAdjustArgs),
    /// Fit the global depth scale G_dscale on a split with ground truth.
    FitScale(FitScaleArgs),
    /// Multiply up-to-scale predictions by G_dscale.
    ApplyScale(ApplyScaleArgs),
    /// Score predictions against ground truth.
    Evaluate(EvaluateArgs),
    /// Build local-motion masks of moving vehicles.
    MotionMask(MotionMaskArgs),
    /// Generate a synthetic two-domain dataset with exact ground truth.
    Synth(SynthArgs),
    /// Print the version.
    Version,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    /// FOV-matched crop or pad, then resize.
    Fov,
    /// Center on the target frame and crop or pad without resizing.
    #[value(alias = "naive-center-crop")]
    NaiveA,
    /// Resize to the target width, then crop or pad the height.
    #[value(alias = "naive-resize-crop")]
    NaiveB,
}

impl From<ModeArg> for AdjustMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Fov => AdjustMode::Fov,
            ModeArg::NaiveA => AdjustMode::NaiveCenterCrop,
            ModeArg::NaiveB => AdjustMode::NaiveResizeCrop,
        }
    }
}

#[derive(Debug, Args)]
struct FovAdjustArgs {
    #[arg(long, value_name = "PATH")]
    source_manifest: PathBuf,
    /// Preset name (kitti, ddad-front, nuscenes-front, vkitti2), a manifest
    /// whose camera to use, or a JSON file with focal_x, focal_y, center_x,
    /// center_y (pixels), width and height.
    #[arg(long, value_name = "NAME|FILE")]
    target_intrinsics: String,
    #[arg(long, value_enum, default_value = "fov")]
    mode: ModeArg,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    /// Median of gt / pred; zero intercept.
    Origin,
    /// Median of pairwise slopes.
    Pairwise,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CropArg {
    Garg,
    None,
}

impl From<CropArg> for EvalCrop {
    fn from(c: CropArg) -> Self {
        match c {
            CropArg::Garg => EvalCrop::Garg,
            CropArg::None => EvalCrop::None,
        }
    }
}

#[derive(Debug, Args)]
struct FitScaleArgs {
    #[arg(long, value_name = "PATH")]
    manifest: PathBuf,
    #[arg(long, value_enum, default_value = "origin")]
    method: MethodArg,
    /// AbsRel_norm threshold (unitless fraction) of the filtered fit, or "off".
    #[arg(
        long,
        value_name = "T|off",
        value_parser = parse_threshold,
        default_value_t = Threshold(Some(DEFAULT_ABSREL_NORM_THRESHOLD))
    )]
    filter_absrel_norm: Threshold,
    /// Transfer the filtered fit instead of the fit over all samples.
    #[arg(long)]
    transfer_filtered: bool,
    /// Random pixels sampled per image, or "all".
    #[arg(
        long,
        value_name = "N|all",
        value_parser = parse_budget,
        default_value_t = Budget(Some(DEFAULT_PIXELS_PER_IMAGE))
    )]
    budget: Budget,
    /// Seed for pixel and pair sampling (integer).
    #[arg(long, env = "DEPTHSCALE_SEED", default_value_t = 0)]
    seed: u64,
    /// Pairs above which the pairwise method samples pairs (count).
    #[arg(long, value_name = "N", default_value_t = DEFAULT_MAX_PAIRS)]
    max_pairs: u64,
    /// Ground truth deeper than this is ignored, meters [default: manifest depth_cap].
    #[arg(long, value_name = "METERS")]
    cap: Option<f64>,
    /// Evaluation crop [default: manifest eval_crop].
    #[arg(long, value_enum)]
    crop: Option<CropArg>,
    /// Report path; stdout when absent.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("scale_source").required(true).args(["scale", "fit"])))]
struct ApplyScaleArgs {
    #[arg(long, value_name = "PATH")]
    manifest: PathBuf,
    /// G_dscale in meters per prediction unit.
    #[arg(long, value_name = "G")]
    scale: Option<f64>,
    /// Fit report whose g_dscale to apply.
    #[arg(long, value_name = "FILE")]
    fit: Option<PathBuf>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ConventionArg {
    /// Mean over images of per-image means.
    PerImage,
    /// One mean over all pixels.
    Pooled,
    Both,
}

impl From<ConventionArg> for Convention {
    fn from(c: ConventionArg) -> Self {
        match c {
            ConventionArg::PerImage => Convention::PerImage,
            ConventionArg::Pooled => Convention::Pooled,
            ConventionArg::Both => Convention::Both,
        }
    }
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long, value_name = "PATH")]
    manifest: PathBuf,
    /// Depth cap in meters [default: manifest depth_cap, usually 80].
    #[arg(long, value_name = "METERS")]
    cap: Option<f64>,
    /// Evaluation crop [default: manifest eval_crop].
    #[arg(long, value_enum)]
    crop: Option<CropArg>,
    #[arg(long, value_enum, default_value = "per-image")]
    convention: ConventionArg,
    /// Floor applied to predictions, meters.
    #[arg(long, value_name = "METERS", default_value_t = DEFAULT_MIN_DEPTH)]
    min_depth: f64,
    /// JSON report path; stdout when absent.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Also write a CSV table row per convention.
    #[arg(long, value_name = "FILE")]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MotionMaskArgs {
    /// Split with self-supervised predictions and instance masks.
    #[arg(long, value_name = "PATH")]
    manifest: PathBuf,
    /// Same frames, in the same order, with supervised predictions.
    #[arg(long, value_name = "PATH")]
    supervised_manifest: PathBuf,
    /// Cutoff C on the road-normalized depth difference (unitless).
    #[arg(long, value_name = "C", default_value_t = 1.5)]
    cutoff: f64,
    /// Percentage R of a vehicle's pixels that must exceed the cutoff.
    #[arg(long, value_name = "PERCENT", default_value_t = 10.0)]
    fraction: f64,
    /// Frames with fewer valid road pixels are skipped (pixel count).
    #[arg(long, value_name = "N", default_value_t = 100)]
    min_road_pixels: usize,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SynthPreset {
    TwoDomain,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, value_enum, default_value = "two-domain")]
    preset: SynthPreset,
    /// Camera preset of the source domain.
    #[arg(long, value_name = "NAME", default_value = "kitti")]
    source: String,
    /// Camera preset of the target domain.
    #[arg(long, value_name = "NAME", default_value = "ddad-front")]
    target: String,
    /// Image size relative to the presets' network input sizes.
    #[arg(long, value_name = "FACTOR", default_value_t = 0.25)]
    resolution_factor: f64,
    /// Seed of the scenes and simulated predictions (integer).
    #[arg(long, env = "DEPTHSCALE_SEED", default_value_t = 0)]
    seed: u64,
    /// Injected global scale G, meters per prediction unit.
    #[arg(long, value_name = "G", default_value_t = 100.0)]
    scale: f64,
    /// Std of the per-image relative scale jitter (unitless).
    #[arg(long, value_name = "STD", default_value_t = 0.05)]
    jitter: f64,
    /// Fraction of valid pixels replaced by outliers, in [0, 1].
    #[arg(long, value_name = "FRACTION", default_value_t = 0.1)]
    outliers: f64,
    /// Std of the per-pixel relative noise (unitless).
    #[arg(long, value_name = "STD", default_value_t = 0.1)]
    noise: f64,
    /// Images per domain (count).
    #[arg(long, value_name = "N", default_value_t = 50)]
    images: usize,
    /// Probability that a vehicle moves with the camera, in [0, 1].
    #[arg(long, value_name = "P", default_value_t = 0.0)]
    moving_fraction: f64,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            if code != 0 {
                report_failure("usage", code, &e.kind().to_string());
            }
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            report_failure(e.kind(), e.exit_code(), &e.to_string());
            e.exit_code()
        }
    }
}

fn report_failure(kind: &str, code: i32, message: &str) {
    let line = json!({ "error": kind, "exit_code": code, "message": message });
    let _ = writeln!(io::stderr(), "{line}");
}

fn execute(cli: Cli) -> Result<()> {
    if cli.jobs > 0 {
        // Fails only when a pool already exists, e.g. when called twice in one process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build_global();
    }
    match cli.command {
        Command::FovAdjust(a) => fov_adjust(a),
        Command::FitScale(a) => fit_scale(a),
        Command::ApplyScale(a) => apply_scale(a),
        Command::Evaluate(a) => evaluate(a),
        Command::MotionMask(a) => motion_mask(a),
        Command::Synth(a) => synth(a),
        Command::Version => {
            println!("depthscale {}", env!("CARGO_PKG_VERSION"));
            Ok(())
        }
    }
}

fn fov_adjust(a: FovAdjustArgs) -> Result<()> {
    let source = load_manifest(&a.source_manifest)?;
    let target = target_intrinsics(&a.target_intrinsics)?;
    let out = run_fov_adjust(&source, &target, a.mode.into(), &a.out)?;
    println!("{}", out.manifest_path.display());
    Ok(())
}

fn target_intrinsics(arg: &str) -> Result<CameraIntrinsics> {
    if let Some(p) = preset(arg) {
        return Ok(p.intrinsics());
    }
    let path = Path::new(arg);
    if !path.exists() {
        return Err(Error::validation(format!(
            "target intrinsics {arg:?} is neither a preset ({}) nor an existing file",
            preset_names().join(", ")
        )));
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if text.starts_with(MANIFEST_HEADER) {
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        return Ok(parse_manifest(&text, path, base)?.intrinsics);
    }
    let k: CameraIntrinsics = serde_json::from_str(&text).map_err(|e| Error::Format {
        what: "intrinsics",
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    k.validate()?;
    Ok(k)
}

#[derive(Debug, Clone, Copy)]
struct Threshold(Option<f64>);

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(t) => write!(f, "{t}"),
            None => f.write_str("off"),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Budget(Option<usize>);

impl fmt::Display for Budget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(n) => write!(f, "{n}"),
            None => f.write_str("all"),
        }
    }
}

fn parse_threshold(s: &str) -> std::result::Result<Threshold, String> {
    if s.eq_ignore_ascii_case("off") {
        return Ok(Threshold(None));
    }
    match s.parse::<f64>() {
        Ok(t) if t.is_finite() && t > 0.0 => Ok(Threshold(Some(t))),
        _ => Err(format!("{s:?} is neither a positive number nor \"off\"")),
    }
}

fn parse_budget(s: &str) -> std::result::Result<Budget, String> {
    if s.eq_ignore_ascii_case("all") {
        return Ok(Budget(None));
    }
    match s.parse::<usize>() {
        Ok(n) if n > 0 => Ok(Budget(Some(n))),
        _ => Err(format!("{s:?} is neither a positive count nor \"all\"")),
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            fs::write(path, text).map_err(|e| Error::io(path, e))
        }
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

fn fit_scale(a: FitScaleArgs) -> Result<()> {
    let manifest = load_manifest(&a.manifest)?;
    let config = FitConfig {
        fit: FitOptions {
            method: match a.method {
                MethodArg::Origin => FitMethod::TheilSenThroughOrigin,
                MethodArg::Pairwise => FitMethod::TheilSenPairwise,
            },
            max_pairs: a.max_pairs,
            seed: a.seed,
        },
        cap: a.cap,
        crop: a.crop.map(Into::into),
        pixels_per_image: a.budget.0,
        sample_seed: a.seed,
        filter_threshold: a.filter_absrel_norm.0,
        transfer_filtered: a.transfer_filtered,
    };
    let report = run_fit(&manifest, &config)?;
    emit(&to_json(&report), a.out.as_deref())
}

fn apply_scale(a: ApplyScaleArgs) -> Result<()> {
    let g = match (a.scale, &a.fit) {
        (Some(g), _) => g,
        (None, Some(path)) => read_fit_slope(path)?,
        (None, None) => unreachable!("clap requires --scale or --fit"),
    };
    let manifest = load_manifest(&a.manifest)?;
    let (path, _) = run_apply(&manifest, g, &a.out)?;
    println!("{}", path.display());
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let manifest = load_manifest(&a.manifest)?;
    let config = EvaluateConfig {
        cap: a.cap,
        crop: a.crop.map(Into::into),
        convention: a.convention.into(),
        min_depth: a.min_depth,
    };
    let report = run_evaluate(&manifest, &config)?;
    if let Some(path) = &a.csv {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        report
            .write_csv(file)
            .map_err(|e| Error::io(path, io::Error::other(e)))?;
    }
    emit(&to_json(&report), a.out.as_deref())
}

fn motion_mask(a: MotionMaskArgs) -> Result<()> {
    let manifest = load_manifest(&a.manifest)?;
    let supervised = load_manifest(&a.supervised_manifest)?;
    let config = MotionMaskConfig {
        cutoff_c: a.cutoff,
        fraction_r: a.fraction,
        min_road_pixels: a.min_road_pixels,
    };
    let out = run_motion_masks(&manifest, &supervised, &config, &a.out)?;
    write_json(&out.frames, a.out.join("summary.json"))?;
    let skipped = out.frames.iter().filter(|f| f.skipped.is_some()).count();
    println!(
        "{}: {} moving instances, {} of {} frames skipped",
        out.manifest_path.display(),
        out.moving_instances(),
        skipped,
        out.frames.len()
    );
    Ok(())
}

fn synth(a: SynthArgs) -> Result<()> {
    let SynthPreset::TwoDomain = a.preset;
    let lookup = |name: &str| {
        preset(name).ok_or_else(|| {
            Error::validation(format!("unknown camera preset {name:?}; expected one of {}", preset_names().join(", ")))
        })
    };
    let mut config = TwoDomainConfig::from_presets(&lookup(&a.source)?, &lookup(&a.target)?, a.resolution_factor, a.seed)?;
    config.images_per_domain = a.images;
    config.prediction.global_scale = a.scale;
    config.prediction.jitter_std = a.jitter;
    config.prediction.outlier_fraction = a.outliers;
    config.prediction.noise_std = a.noise;
    config.moving_fraction = a.moving_fraction;
    let out = run_synth(&config, &a.out)?;
    println!("{}", out.source_manifest.display());
    println!("{}", out.target_manifest.display());
    println!("{}", out.target_supervised_manifest.display());
    Ok(())
}

//! Command-line front end shared by the `monodist` binary.
//!
//! Exit status: `0` success, `1` usage error, `2` data error.
//!
//! `predict` and `evaluate` take settings from the config file named by
//! `--config` (or the `MONODIST_CONFIG` environment variable); individual
//! flags override the corresponding config fields.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::calib::{fit_quadratic, read_samples_file};
use crate::error::{Error, Result};
use crate::eval::{build_report, match_objects, GroundTruth, Matching, DEFAULT_THRESHOLD};
use crate::maps::{to_pfm_bytes, DepthRange};
use crate::pipeline::{predict_image, PipelineConfig, CONFIG_ENV};
use crate::roi::DistanceReport;
use crate::svg::render_overlay;
use crate::synth::{render_scene, SceneSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "monodist",
    version,
    about = "Per-object distances from monocular depth and detections"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit the quadratic calibration from (relative, absolute) samples.
    Calibrate {
        /// CSV with header `x_m,y_abs_m`.
        #[arg(long)]
        samples: PathBuf,
        /// Camera height in meters.
        #[arg(long)]
        camera_height: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Predict object distances for one image.
    Predict(PredictArgs),
    /// Score predictions against ground truth.
    Evaluate {
        #[arg(long, num_args = 1.., required = true)]
        pred: Vec<PathBuf>,
        #[arg(long, num_args = 1.., required = true)]
        gt: Vec<PathBuf>,
        /// Accuracy threshold in meters [default: config value or 0.2].
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a synthetic scene to `<prefix>.pfm`, `.det.json` and `.gt.json`.
    Synth {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        out_prefix: PathBuf,
    },
    /// Draw predicted distances as an SVG overlay.
    Annotate {
        #[arg(long)]
        distances: PathBuf,
        /// Image size as `WxH`.
        #[arg(long, value_parser = parse_size)]
        image_size: (u32, u32),
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
struct PredictArgs {
    /// Pipeline config [default: $MONODIST_CONFIG].
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    image_id: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    min_conf: Option<f64>,
    #[arg(long)]
    iou_threshold: Option<f64>,
    /// Calibration model (`.calib.json`).
    #[arg(long)]
    calibration: Option<PathBuf>,
    #[arg(long)]
    min_depth: Option<f64>,
    #[arg(long)]
    max_depth: Option<f64>,
}

fn parse_size(s: &str) -> std::result::Result<(u32, u32), String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WxH, got `{s}`"))?;
    let w: u32 = w
        .trim()
        .parse()
        .map_err(|_| format!("bad width in `{s}`"))?;
    let h: u32 = h
        .trim()
        .parse()
        .map_err(|_| format!("bad height in `{s}`"))?;
    if w == 0 || h == 0 {
        return Err(format!("image size `{s}` is empty"));
    }
    Ok((w, h))
}

enum Failure {
    Usage(String),
    Data(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Data(e)
    }
}

/// Parses `argv` (including the program name) and runs the subcommand.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_OK
            };
        }
    };
    match run(cli.command) {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!(
                "{}",
                <Cli as clap::CommandFactory>::command().render_usage()
            );
            EXIT_USAGE
        }
        Err(Failure::Data(err)) => {
            eprintln!("error: {err}");
            EXIT_DATA
        }
    }
}

fn write_out(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::from(e).in_file(path))
}

fn run(command: Command) -> std::result::Result<(), Failure> {
    match command {
        Command::Calibrate {
            samples,
            camera_height,
            out,
        } => {
            let samples = read_samples_file(&samples)?;
            let model = fit_quadratic(&samples, camera_height)?;
            write_out(&out, &model.to_json())?;
            println!(
                "Y = ({} + {}*X + {}*X^2) * {}  (n = {}, rmse = {} m)",
                model.c0, model.c1, model.c2, model.h, model.n_samples, model.fit_rmse
            );
        }
        Command::Predict(args) => predict(args)?,
        Command::Evaluate {
            pred,
            gt,
            threshold,
            config,
            out,
        } => {
            let config_threshold = match config.or_else(env_config) {
                Some(path) => Some(PipelineConfig::load(path)?.eval_threshold),
                None => None,
            };
            let threshold = threshold.or(config_threshold).unwrap_or(DEFAULT_THRESHOLD);
            let matching = evaluate_files(&pred, &gt)?;
            let report = build_report(matching, threshold)?;
            write_out(&out, &report.to_json())?;
            print!("{}", report.render_table());
        }
        Command::Synth { scene, out_prefix } => {
            let mut spec = SceneSpec::read_file(&scene)?;
            if spec.image.is_none() {
                spec.image = out_prefix
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned());
            }
            let rendered = render_scene(&spec)?;
            let with_ext = |ext: &str| {
                let mut p = out_prefix.clone().into_os_string();
                p.push(ext);
                PathBuf::from(p)
            };
            write_out(&with_ext(".pfm"), &to_pfm_bytes(&rendered.disparity))?;
            write_out(&with_ext(".det.json"), &rendered.detections.to_json())?;
            write_out(&with_ext(".gt.json"), &rendered.truth.to_json())?;
        }
        Command::Annotate {
            distances,
            image_size: (w, h),
            out,
        } => {
            let report = DistanceReport::read_file(&distances)?;
            warn_negative(&report);
            write_out(&out, render_overlay(&report, w, h).as_bytes())?;
        }
    }
    Ok(())
}

fn env_config() -> Option<PathBuf> {
    std::env::var_os(CONFIG_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
}

fn predict(args: PredictArgs) -> std::result::Result<(), Failure> {
    let path = args
        .config
        .or_else(env_config)
        .ok_or_else(|| Failure::Usage(format!("predict needs --config or ${CONFIG_ENV}")))?;
    let mut cfg = PipelineConfig::load(path)?;
    if let Some(v) = args.min_conf {
        cfg.min_conf = v;
    }
    if let Some(v) = args.iou_threshold {
        cfg.iou_threshold = v;
    }
    if let Some(p) = args.calibration {
        // flags are relative to the working directory, not the config
        cfg.calibration_model_path = Some(std::path::absolute(&p).map_err(Error::from)?);
    }
    if args.min_depth.is_some() || args.max_depth.is_some() {
        cfg.depth_range = DepthRange::new(
            args.min_depth.unwrap_or(cfg.depth_range.min_depth()),
            args.max_depth.unwrap_or(cfg.depth_range.max_depth()),
        )?;
    }

    let report = predict_image(&cfg, &args.image_id)?;
    warn_negative(&report);
    for f in &report.failures {
        eprintln!(
            "warning: {}: detection {} ({}) skipped: {}",
            report.image_id, f.index, f.detection.class_name, f.reason
        );
    }
    write_out(&args.out, &report.to_json())?;
    Ok(())
}

fn warn_negative(report: &DistanceReport) {
    for o in &report.objects {
        if let Some(abs) = o.abs.filter(|a| *a < 0.0) {
            eprintln!(
                "warning: {}: {} has negative calibrated distance {abs} m (rev {} m is outside the calibrated span)",
                report.image_id, o.detection.class_name, o.rev
            );
        }
    }
}

/// Matches every prediction file with the ground truth of the same image id
/// and folds the results in sorted image-id order.
pub fn evaluate_files(preds: &[PathBuf], gts: &[PathBuf]) -> Result<Matching> {
    let mut by_id: BTreeMap<String, (Option<DistanceReport>, Option<GroundTruth>)> =
        BTreeMap::new();
    for path in preds {
        let report = DistanceReport::read_file(path)?;
        let slot = by_id.entry(report.image_id.clone()).or_default();
        if slot.0.is_some() {
            return Err(duplicate(path, &report.image_id));
        }
        slot.0 = Some(report);
    }
    for path in gts {
        let truth = GroundTruth::read_file(path)?;
        let slot = by_id.entry(truth.image_id.clone()).or_default();
        if slot.1.is_some() {
            return Err(duplicate(path, &truth.image_id));
        }
        slot.1 = Some(truth);
    }
    Ok(by_id
        .into_values()
        .map(|(pred, truth)| {
            let objects = pred.map(|p| p.objects).unwrap_or_default();
            let truths = truth.map(|t| t.objects).unwrap_or_default();
            match_objects(&objects, &truths)
        })
        .fold(Matching::default(), Matching::merge))
}

fn duplicate(path: &Path, image_id: &str) -> Error {
    Error::InvalidField {
        field: "image",
        reason: format!("image id `{image_id}` appears twice"),
    }
    .in_file(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes() {
        assert_eq!(parse_size("640x480"), Ok((640, 480)));
        assert!(parse_size("640").is_err());
        assert!(parse_size("0x4").is_err());
    }
}

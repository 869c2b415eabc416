//! End-to-end prediction for one image.
//!
//! Depth and detections come from a [`Backend`]. The two built-in backends read
//! precomputed files or run external commands; both exchange the same PFM and
//! `.det.json` bytes, so any exported depth network or detector can be plugged
//! in without touching this crate.

use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use serde::{Deserialize, Serialize};

use crate::calib::CalibrationModel;
use crate::detect::{self, filter_confidence, nms, parse_detections, DetectionSet};
use crate::error::{Error, Result};
use crate::eval;
use crate::maps::{self, disparity_to_depth, DepthRange, MapKind, ScalarMap};
use crate::roi::{measure_objects, DistanceReport};

/// Environment variable naming the default config file.
pub const CONFIG_ENV: &str = "MONODIST_CONFIG";

fn default_kind() -> MapKind {
    MapKind::Disparity
}

/// Where depth maps and detections come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum BackendConfig {
    /// `<depth_dir>/<image_id>.pfm` and `<det_dir>/<image_id>.det.json`.
    Files {
        depth_dir: PathBuf,
        det_dir: PathBuf,
        #[serde(default = "default_kind")]
        depth_kind: MapKind,
    },
    /// Shell command templates run through `sh -c`.
    ///
    /// `{image_id}` is replaced by the shell-quoted image id. If the template
    /// contains `{out}`, it is replaced by a fresh file path that the command
    /// must write; otherwise the output is read from stdout.
    Process {
        depth_command: String,
        det_command: String,
        #[serde(default = "default_kind")]
        depth_kind: MapKind,
    },
}

impl BackendConfig {
    pub fn depth_kind(&self) -> MapKind {
        match self {
            BackendConfig::Files { depth_kind, .. } | BackendConfig::Process { depth_kind, .. } => {
                *depth_kind
            }
        }
    }
}

fn default_min_conf() -> f64 {
    detect::DEFAULT_MIN_CONF
}

fn default_iou() -> f64 {
    detect::DEFAULT_IOU_THRESHOLD
}

fn default_eval_threshold() -> f64 {
    eval::DEFAULT_THRESHOLD
}

/// Contents of a pipeline config file.
///
/// Relative paths are resolved against the directory of the config file when
/// it is loaded with [`PipelineConfig::load`]; process commands also run
/// there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub backend: BackendConfig,
    #[serde(default)]
    pub depth_range: DepthRange,
    #[serde(default = "default_min_conf")]
    pub min_conf: f64,
    #[serde(default = "default_iou")]
    pub iou_threshold: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration_model_path: Option<PathBuf>,
    #[serde(default = "default_eval_threshold")]
    pub eval_threshold: f64,
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl PipelineConfig {
    pub fn new(backend: BackendConfig) -> Self {
        PipelineConfig {
            backend,
            depth_range: DepthRange::default(),
            min_conf: default_min_conf(),
            iou_threshold: default_iou(),
            calibration_model_path: None,
            eval_threshold: default_eval_threshold(),
            base_dir: None,
        }
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let cfg: PipelineConfig = serde_json::from_slice(bytes)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg = std::fs::read(path)
            .map_err(Error::from)
            .and_then(|bytes| Self::from_json(&bytes))
            .map_err(|e| e.in_file(path))?;
        cfg.base_dir = Some(path.parent().unwrap_or(Path::new(".")).to_path_buf());
        Ok(cfg)
    }

    pub fn to_json(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("config serializes");
        out.push(b'\n');
        out
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.min_conf) {
            return Err(Error::InvalidField {
                field: "min_conf",
                reason: format!("{} is outside [0, 1]", self.min_conf),
            });
        }
        if !(self.iou_threshold > 0.0 && self.iou_threshold < 1.0) {
            return Err(Error::InvalidField {
                field: "iou_threshold",
                reason: format!("{} is outside (0, 1)", self.iou_threshold),
            });
        }
        if !(self.eval_threshold.is_finite() && self.eval_threshold > 0.0) {
            return Err(Error::InvalidThreshold(self.eval_threshold));
        }
        if let BackendConfig::Process {
            depth_command,
            det_command,
            ..
        } = &self.backend
        {
            if depth_command.trim().is_empty() || det_command.trim().is_empty() {
                return Err(Error::InvalidField {
                    field: "backend",
                    reason: "empty command template".into(),
                });
            }
        }
        Ok(())
    }

    /// `path` joined onto the config directory when relative.
    pub fn resolve(&self, path: &Path) -> PathBuf {
        match &self.base_dir {
            Some(base) if path.is_relative() => base.join(path),
            _ => path.to_path_buf(),
        }
    }

    pub fn load_calibration(&self) -> Result<Option<CalibrationModel>> {
        self.calibration_model_path
            .as_deref()
            .map(|p| CalibrationModel::read_file(self.resolve(p)))
            .transpose()
    }

    /// Instantiates the configured backend. Each call yields an independent
    /// backend, so concurrent predictions never share one.
    pub fn backend(&self) -> Result<Box<dyn Backend + Send + Sync>> {
        match &self.backend {
            BackendConfig::Files {
                depth_dir,
                det_dir,
                depth_kind,
            } => {
                let backend = FilesBackend {
                    depth_dir: self.resolve(depth_dir),
                    det_dir: self.resolve(det_dir),
                    depth_kind: *depth_kind,
                };
                for dir in [&backend.depth_dir, &backend.det_dir] {
                    if !dir.is_dir() {
                        return Err(Error::Backend {
                            image_id: String::new(),
                            reason: format!("{} is not a directory", dir.display()),
                        });
                    }
                }
                Ok(Box::new(backend))
            }
            BackendConfig::Process {
                depth_command,
                det_command,
                depth_kind,
            } => Ok(Box::new(ProcessBackend {
                depth_command: depth_command.clone(),
                det_command: det_command.clone(),
                depth_kind: *depth_kind,
                workdir: self.base_dir.clone(),
            })),
        }
    }
}

/// A producer of depth maps and detections.
pub trait Backend {
    fn depth_map(&self, image_id: &str) -> Result<ScalarMap>;
    fn detections(&self, image_id: &str) -> Result<DetectionSet>;
}

fn check_image_id(image_id: &str) -> Result<()> {
    if image_id.is_empty() || image_id.contains(['/', '\\']) || image_id == ".." {
        return Err(Error::Backend {
            image_id: image_id.into(),
            reason: "image id must be a plain file stem".into(),
        });
    }
    Ok(())
}

/// Reads `<image_id>.pfm` and `<image_id>.det.json` from two directories.
#[derive(Debug, Clone)]
pub struct FilesBackend {
    pub depth_dir: PathBuf,
    pub det_dir: PathBuf,
    pub depth_kind: MapKind,
}

impl Backend for FilesBackend {
    fn depth_map(&self, image_id: &str) -> Result<ScalarMap> {
        check_image_id(image_id)?;
        let path = self.depth_dir.join(format!("{image_id}.pfm"));
        maps::read_pfm_file(&path, self.depth_kind)
    }

    fn detections(&self, image_id: &str) -> Result<DetectionSet> {
        check_image_id(image_id)?;
        DetectionSet::read_file(self.det_dir.join(format!("{image_id}.det.json")))
    }
}

/// Runs external commands that emit the standard formats.
#[derive(Debug, Clone)]
pub struct ProcessBackend {
    pub depth_command: String,
    pub det_command: String,
    pub depth_kind: MapKind,
    pub workdir: Option<PathBuf>,
}

fn shell_quote(s: &str) -> String {
    format!("'{}'", s.replace('\'', r"'\''"))
}

impl ProcessBackend {
    fn run(&self, template: &str, image_id: &str, extension: &str) -> Result<Vec<u8>> {
        let fail = |reason: String| Error::Backend {
            image_id: image_id.into(),
            reason,
        };
        let scratch = tempfile::tempdir()?;
        let out_path = scratch.path().join(format!("out.{extension}"));
        let writes_file = template.contains("{out}");
        let command = template
            .replace("{image_id}", &shell_quote(image_id))
            .replace("{out}", &shell_quote(&out_path.to_string_lossy()));

        let mut cmd = Command::new("sh");
        cmd.arg("-c")
            .arg(&command)
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped());
        if let Some(dir) = &self.workdir {
            cmd.current_dir(dir);
        }
        let output = cmd
            .output()
            .map_err(|e| fail(format!("cannot start `{command}`: {e}")))?;
        if !output.status.success() {
            let stderr = String::from_utf8_lossy(&output.stderr);
            return Err(fail(format!(
                "`{command}` exited with {}: {}",
                output.status,
                stderr.trim()
            )));
        }
        if writes_file {
            std::fs::read(&out_path).map_err(|e| {
                fail(format!(
                    "`{command}` did not write {}: {e}",
                    out_path.display()
                ))
            })
        } else {
            Ok(output.stdout)
        }
    }
}

impl Backend for ProcessBackend {
    fn depth_map(&self, image_id: &str) -> Result<ScalarMap> {
        let bytes = self.run(&self.depth_command, image_id, "pfm")?;
        maps::read_pfm_as(&bytes[..], self.depth_kind).map_err(|e| Error::Backend {
            image_id: image_id.into(),
            reason: format!("depth output: {e}"),
        })
    }

    fn detections(&self, image_id: &str) -> Result<DetectionSet> {
        let bytes = self.run(&self.det_command, image_id, "det.json")?;
        parse_detections(&bytes).map_err(|e| Error::Backend {
            image_id: image_id.into(),
            reason: format!("detection output: {e}"),
        })
    }
}

/// Runs the fusion stages on backend outputs.
///
/// Confidence filter, NMS, disparity to depth (skipped for depth maps),
/// median pooling, then calibration when a model is given.
pub fn predict_with(
    backend: &dyn Backend,
    cfg: &PipelineConfig,
    model: Option<&CalibrationModel>,
    image_id: &str,
) -> Result<DistanceReport> {
    let raw = backend.detections(image_id)?;
    let dets = nms(&filter_confidence(&raw, cfg.min_conf), cfg.iou_threshold);

    let map = backend.depth_map(image_id)?;
    let depth = match map.kind() {
        MapKind::Disparity => disparity_to_depth(&map, &cfg.depth_range)?,
        MapKind::Depth => map,
    };

    let mut measured = measure_objects(&depth, &dets)?;
    if let Some(model) = model {
        for object in &mut measured.objects {
            object.abs = Some(model.apply(object.rev));
        }
    }
    Ok(DistanceReport::new(image_id, measured))
}

/// Predicts distances for `image_id` with the configured backend and model.
pub fn predict_image(cfg: &PipelineConfig, image_id: &str) -> Result<DistanceReport> {
    cfg.validate()?;
    let backend = cfg.backend()?;
    let model = cfg.load_calibration()?;
    predict_with(backend.as_ref(), cfg, model.as_ref(), image_id)
}

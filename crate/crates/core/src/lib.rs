//! Per-object absolute distances from a single camera.
//!
//! A monocular depth network and an object detector run side by side on the
//! same image. This crate consumes their outputs (a disparity or depth map and
//! a set of boxes), pools the depth inside every box into a relative distance,
//! and maps that distance to meters with a quadratic calibration
//! `Y = (c0 + c1*X + c2*X^2) * h` fitted by least squares.
//!
//! The stages, in pipeline order:
//!
//! 1. [`maps`]: scalar maps, PFM I/O, disparity to depth.
//! 2. [`detect`]: detection model, JSON I/O, confidence filter, IoU, NMS.
//! 3. [`roi`]: box to grid projection and median depth pooling.
//! 4. [`calib`]: quadratic calibration fit and evaluation.
//! 5. [`eval`]: matching against ground truth, RMSE, threshold accuracy.
//!
//! [`synth`] renders synthetic scenes with known answers, and [`pipeline`]
//! wires the stages to file- or process-backed model outputs. The
//! `monodist` binary exposes all of it on the command line.
//!
//! Runnable walkthroughs live in `examples/`, e.g.
//! `cargo run --example fuse_distances`.

pub mod calib;
pub mod cli;
pub mod detect;
pub mod error;
pub mod eval;
pub mod maps;
pub mod pipeline;
pub mod roi;
pub mod svg;
pub mod synth;

pub use calib::{fit_quadratic, CalibrationModel, CalibrationSample};
pub use detect::{filter_confidence, iou, nms, BoundingBox, Detection, DetectionSet};
pub use error::{Error, Result};
pub use eval::{
    build_report, match_objects, rmse, threshold_accuracy, GroundTruthObject, MatchedPair,
    MetricsReport,
};
pub use maps::{disparity_to_depth, read_pfm, write_pfm, DepthRange, MapKind, ScalarMap};
pub use pipeline::{predict_image, BackendConfig, PipelineConfig};
pub use roi::{measure_objects, median_depth, project_bbox, IndexRect, ObjectDistance};
pub use synth::{render_scene, SceneSpec};

//! Runs the pipeline against model outputs produced by external commands.
//!
//! A scene is rendered into a scratch directory, then a process-backed config
//! reads it back through `cat` and `cp`, the way a wrapper script around a
//! real depth network or detector would hand over its results.

use monodist::maps::write_pfm_file;
use monodist::{predict_image, render_scene, BoundingBox, PipelineConfig, SceneSpec};

fn main() -> monodist::Result<()> {
    let dir = tempfile::tempdir()?;
    let mut spec = SceneSpec::new(128, 64, 45.0)
        .with_object("car", 9.0, BoundingBox::new(10.0, 20.0, 60.0, 56.0)?)
        .with_object("bicycle", 17.5, BoundingBox::new(80.0, 16.0, 110.0, 50.0)?);
    spec.image = Some("frame 0001".into());
    let scene = render_scene(&spec)?;
    write_pfm_file(&scene.disparity, dir.path().join("frame 0001.pfm"))?;
    scene
        .detections
        .write_file(dir.path().join("frame 0001.det.json"))?;

    let config = dir.path().join("pipeline.json");
    std::fs::write(
        &config,
        r#"{
  "backend": {
    "mode": "process",
    "depth_command": "cat {image_id}.pfm",
    "det_command": "cp {image_id}.det.json {out}"
  },
  "min_conf": 0.3
}
"#,
    )?;

    let cfg = PipelineConfig::load(&config)?;
    let report = predict_image(&cfg, "frame 0001")?;
    print!("{}", String::from_utf8_lossy(&report.to_json()));
    Ok(())
}

mod common;

use std::path::Path;
use std::process::Command;

use monodist::calib::CalibrationModel;
use monodist::detect::BoundingBox;
use monodist::maps::MapKind;
use monodist::pipeline::{predict_image, BackendConfig, PipelineConfig};
use monodist::synth::{render_scene, SceneSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn write_scene(dir: &Path, id: &str, spec: &SceneSpec) {
    let mut spec = spec.clone();
    spec.image = Some(id.into());
    let scene = render_scene(&spec).unwrap();
    monodist::maps::write_pfm_file(&scene.disparity, dir.join(format!("{id}.pfm"))).unwrap();
    scene
        .detections
        .write_file(dir.join(format!("{id}.det.json")))
        .unwrap();
}

fn files(dir: &Path) -> PipelineConfig {
    PipelineConfig::new(BackendConfig::Files {
        depth_dir: dir.into(),
        det_dir: dir.into(),
        depth_kind: MapKind::Disparity,
    })
}

fn process(dir: &Path, depth_command: &str, det_command: &str) -> PipelineConfig {
    let mut cfg = PipelineConfig::new(BackendConfig::Process {
        depth_command: depth_command.into(),
        det_command: det_command.into(),
        depth_kind: MapKind::Disparity,
    });
    cfg.base_dir = Some(dir.into());
    cfg
}

#[test]
fn files_and_process_backends_agree() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let ids: Vec<String> = (0..6).map(|i| format!("img {i}")).collect();
    for id in &ids {
        write_scene(dir.path(), id, &common::random_scene(&mut rng, 160, 96));
    }
    let model = dir.path().join("m.calib.json");
    CalibrationModel::from_coefficients(1.5, 0.9, 0.001, 1.2)
        .unwrap()
        .write_file(&model)
        .unwrap();

    let mut stdout = process(dir.path(), "cat {image_id}.pfm", "cat {image_id}.det.json");
    let mut scratch = process(
        dir.path(),
        "cp {image_id}.pfm {out}",
        "cp {image_id}.det.json {out}",
    );
    let mut direct = files(dir.path());
    for cfg in [&mut stdout, &mut scratch, &mut direct] {
        cfg.calibration_model_path = Some(model.clone());
    }

    for id in &ids {
        let expected = predict_image(&direct, id).unwrap().to_json();
        assert_eq!(
            predict_image(&stdout, id).unwrap().to_json(),
            expected,
            "{id}"
        );
        assert_eq!(
            predict_image(&scratch, id).unwrap().to_json(),
            expected,
            "{id}"
        );
    }
}

#[test]
fn failing_command_is_a_backend_error() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SceneSpec::new(32, 16, 40.0).with_object(
        "car",
        8.0,
        BoundingBox::new(4.0, 4.0, 20.0, 12.0).unwrap(),
    );
    write_scene(dir.path(), "a", &spec);

    let cfg = process(
        dir.path(),
        "echo boom >&2; exit 3",
        "cat {image_id}.det.json",
    );
    let err = predict_image(&cfg, "a").unwrap_err().to_string();
    assert!(err.contains("boom"), "{err}");

    let cfg = process(dir.path(), "cat {image_id}.pfm", "echo 'not json'");
    assert!(predict_image(&cfg, "a").is_err());

    // same failure through the binary
    let cfg_path = dir.path().join("proc.json");
    std::fs::write(
        &cfg_path,
        r#"{"backend": {"mode": "process", "depth_command": "exit 1", "det_command": "cat {image_id}.det.json"}}"#,
    )
    .unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_monodist"))
        .args(["predict", "--image-id", "a", "--out"])
        .arg(dir.path().join("a.dist.json"))
        .env("MONODIST_CONFIG", &cfg_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("a.dist.json").exists());
}

#[test]
fn process_config_runs_relative_to_config_dir() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SceneSpec::new(32, 16, 40.0).with_object(
        "car",
        8.0,
        BoundingBox::new(4.0, 4.0, 20.0, 12.0).unwrap(),
    );
    write_scene(dir.path(), "a", &spec);
    let cfg_path = dir.path().join("proc.json");
    std::fs::write(
        &cfg_path,
        r#"{"backend": {"mode": "process", "depth_command": "cat {image_id}.pfm", "det_command": "cat {image_id}.det.json"}}"#,
    )
    .unwrap();
    let cfg = PipelineConfig::load(&cfg_path).unwrap();
    let report = predict_image(&cfg, "a").unwrap();
    assert_eq!(report.objects.len(), 1);
    assert!((report.objects[0].rev - 8.0).abs() < 1e-4);
}

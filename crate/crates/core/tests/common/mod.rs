#![allow(dead_code)]

use std::path::Path;

use monodist::detect::{BoundingBox, Detection};
use monodist::eval::{GroundTruth, GroundTruthObject};
use monodist::roi::{DistanceReport, ObjectDistance};
use monodist::synth::SceneSpec;
use rand::Rng;

/// Golden result rows as (image, class, absolute m, predicted m, printed error m),
/// objects of each image listed left to right.
pub const REFERENCE_ROWS: [(&str, &str, f64, f64, f64); 9] = [
    ("row1", "car", 53.9, 53.21, 0.69),
    ("row1", "person", 21.5, 21.35, 0.15),
    ("row1", "bus", 48.7, 48.13, 0.57),
    ("row2", "chair", 3.5, 3.45, 0.05),
    ("row2", "person", 8.0, 8.09, 0.09),
    ("row3", "car", 10.1, 9.83, 0.27),
    ("row4", "person", 8.0, 8.13, 0.13),
    ("row4", "person", 12.0, 11.69, 0.31),
    ("row4", "person", 4.0, 3.88, 0.12),
];

/// Predictions and box-less ground truth per reference image. Prediction boxes
/// are placed left to right in table order but listed right to left, so the
/// matcher has to sort them.
pub fn reference_images() -> Vec<(DistanceReport, GroundTruth)> {
    let mut images: Vec<(DistanceReport, GroundTruth)> = Vec::new();
    for (slot, &(image, class, truth, predicted, _)) in REFERENCE_ROWS.iter().enumerate() {
        if images.last().map(|(r, _)| r.image_id.as_str()) != Some(image) {
            images.push((
                DistanceReport {
                    image_id: image.into(),
                    objects: vec![],
                    failures: vec![],
                },
                GroundTruth {
                    image_id: image.into(),
                    objects: vec![],
                },
            ));
        }
        let (report, gt) = images.last_mut().unwrap();
        let x0 = 100.0 * slot as f64;
        let bbox = BoundingBox::new(x0, 50.0, x0 + 60.0, 200.0).unwrap();
        report.objects.insert(
            0,
            ObjectDistance {
                detection: Detection::new(0, class, 0.9, bbox).unwrap(),
                rev: predicted,
                abs: Some(predicted),
            },
        );
        gt.objects.push(GroundTruthObject {
            class_name: class.into(),
            abs_distance: truth,
            bbox: None,
        });
    }
    images
}

pub fn write_reference(dir: &Path) -> (Vec<std::path::PathBuf>, Vec<std::path::PathBuf>) {
    let mut preds = Vec::new();
    let mut gts = Vec::new();
    for (report, gt) in reference_images() {
        let p = dir.join(format!("{}.dist.json", report.image_id));
        let g = dir.join(format!("{}.gt.json", gt.image_id));
        report.write_file(&p).unwrap();
        gt.write_file(&g).unwrap();
        preds.push(p);
        gts.push(g);
    }
    (preds, gts)
}

/// 1 to 5 non-overlapping integer boxes with depths uniform in [1, 90] m.
pub fn random_scene<R: Rng>(rng: &mut R, width: usize, height: usize) -> SceneSpec {
    let mut spec = SceneSpec::new(width, height, rng.random_range(1.0..=100.0));
    let classes = ["car", "person", "bus", "chair", "bicycle"];
    let count = rng.random_range(1..=5);
    let mut placed: Vec<[usize; 4]> = Vec::new();
    while placed.len() < count {
        let w = rng.random_range(8..=(width / 4).max(9));
        let h = rng.random_range(8..=(height / 2).max(9));
        let x0 = rng.random_range(0..=width - w);
        let y0 = rng.random_range(0..=height - h);
        let cand = [x0, y0, x0 + w, y0 + h];
        let overlaps = placed
            .iter()
            .any(|p| cand[0] < p[2] && p[0] < cand[2] && cand[1] < p[3] && p[1] < cand[3]);
        if overlaps {
            continue;
        }
        placed.push(cand);
        let bbox = BoundingBox::new(
            cand[0] as f64,
            cand[1] as f64,
            cand[2] as f64,
            cand[3] as f64,
        )
        .unwrap();
        let class = classes[rng.random_range(0..classes.len())];
        spec = spec.with_object(class, rng.random_range(1.0..=90.0), bbox);
    }
    spec
}

/// A files-backend config reading everything from `dir`.
pub fn files_config(dir: &Path, calibration: Option<&Path>) -> String {
    let calib = calibration
        .map(|p| format!(",\n  \"calibration_model_path\": {:?}", p.to_str().unwrap()))
        .unwrap_or_default();
    format!(
        "{{\n  \"backend\": {{\"mode\": \"files\", \"depth_dir\": {d:?}, \"det_dir\": {d:?}}}{calib}\n}}\n",
        d = dir.to_str().unwrap()
    )
}

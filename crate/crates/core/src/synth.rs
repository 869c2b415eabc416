//! Synthetic scenes with known per-object distances.
//!
//! Objects are fronto-parallel rectangles at constant depth in front of a
//! constant background. Each pixel stores the disparity that
//! [`DepthRange::depth_from_disparity`] maps back to the pixel's depth, so the
//! median inside every unoccluded box is exactly the object's depth up to
//! `f32` rounding.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::detect::{BoundingBox, Detection, DetectionSet};
use crate::error::{Error, Result};
use crate::eval::{GroundTruth, GroundTruthObject};
use crate::maps::{DepthRange, MapKind, ScalarMap};
use crate::roi::project_bbox;

/// Image id used when a scene does not name one.
pub const DEFAULT_SCENE_ID: &str = "scene";

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub class_name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_id: Option<u32>,
    /// Meters.
    pub depth: f64,
    /// Map pixel coordinates.
    pub bbox: BoundingBox,
}

/// Description of a `.scene.json` file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<String>,
    pub map_width: usize,
    pub map_height: usize,
    pub background_depth: f64,
    #[serde(default)]
    pub depth_range: DepthRange,
    pub objects: Vec<SceneObject>,
    /// Half-width of additive uniform disparity noise.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub noise_amplitude: f64,
    #[serde(default)]
    pub seed: u64,
}

impl SceneSpec {
    pub fn new(map_width: usize, map_height: usize, background_depth: f64) -> Self {
        SceneSpec {
            image: None,
            map_width,
            map_height,
            background_depth,
            depth_range: DepthRange::default(),
            objects: Vec::new(),
            noise_amplitude: 0.0,
            seed: 0,
        }
    }

    pub fn with_object(mut self, class_name: &str, depth: f64, bbox: BoundingBox) -> Self {
        self.objects.push(SceneObject {
            class_name: class_name.into(),
            class_id: None,
            depth,
            bbox,
        });
        self
    }

    pub fn from_json(bytes: &[u8]) -> Result<SceneSpec> {
        Ok(serde_json::from_slice(bytes)?)
    }

    pub fn to_json(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("scene serializes");
        out.push(b'\n');
        out
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<SceneSpec> {
        let path = path.as_ref();
        std::fs::read(path)
            .map_err(Error::from)
            .and_then(|bytes| Self::from_json(&bytes))
            .map_err(|e| e.in_file(path))
    }

    fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(Error::InvalidScene(msg));
        if self.map_width == 0 || self.map_height == 0 {
            return invalid(format!(
                "{}x{} map is empty",
                self.map_width, self.map_height
            ));
        }
        if !self.depth_range.contains(self.background_depth) {
            return invalid(format!(
                "background depth {} outside [{}, {}]",
                self.background_depth,
                self.depth_range.min_depth(),
                self.depth_range.max_depth()
            ));
        }
        if !(self.noise_amplitude.is_finite() && self.noise_amplitude >= 0.0) {
            return invalid(format!("noise amplitude {}", self.noise_amplitude));
        }
        for (i, o) in self.objects.iter().enumerate() {
            if o.class_name.is_empty() {
                return invalid(format!("object {i} has an empty class name"));
            }
            if !self.depth_range.contains(o.depth) {
                return invalid(format!(
                    "object {i} depth {} outside the depth range",
                    o.depth
                ));
            }
            if !o.bbox.within(self.map_width as f64, self.map_height as f64) {
                return invalid(format!(
                    "object {i} box {:?} leaves the map",
                    o.bbox.to_array()
                ));
            }
        }
        Ok(())
    }
}

/// Everything [`render_scene`] produces for one scene.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedScene {
    pub disparity: ScalarMap,
    pub detections: DetectionSet,
    pub truth: GroundTruth,
}

pub fn render_scene(spec: &SceneSpec) -> Result<RenderedScene> {
    spec.validate()?;
    let (w, h) = (spec.map_width, spec.map_height);
    let range = &spec.depth_range;

    let mut depth = vec![spec.background_depth; w * h];
    // far to near, so nearer objects overwrite farther ones and the background
    let mut order: Vec<usize> = (0..spec.objects.len()).collect();
    order.sort_by(|&a, &b| spec.objects[b].depth.total_cmp(&spec.objects[a].depth));
    for idx in order {
        let o = &spec.objects[idx];
        let rect = project_bbox(&o.bbox, (w, h), (w, h))
            .map_err(|_| Error::InvalidScene(format!("object {idx} covers no pixel")))?;
        for row in rect.row0..rect.row1 {
            for cell in &mut depth[row * w + rect.col0..row * w + rect.col1] {
                *cell = o.depth;
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let values: Vec<f32> = depth
        .iter()
        .map(|&d| {
            let mut v = range.disparity_from_depth(d);
            if spec.noise_amplitude > 0.0 {
                v += rng.random_range(-spec.noise_amplitude..=spec.noise_amplitude);
            }
            v.clamp(0.0, 1.0) as f32
        })
        .collect();
    let disparity = ScalarMap::new(w, h, MapKind::Disparity, values)?;

    let image_id = spec.image.as_deref().unwrap_or(DEFAULT_SCENE_ID);
    let mut class_ids: Vec<&str> = Vec::new();
    let mut detections = DetectionSet::new(image_id, w as u32, h as u32);
    let mut truth = GroundTruth {
        image_id: image_id.into(),
        objects: Vec::new(),
    };
    for o in &spec.objects {
        let class_id = o.class_id.unwrap_or_else(|| {
            let pos = class_ids.iter().position(|c| *c == o.class_name);
            pos.unwrap_or_else(|| {
                class_ids.push(&o.class_name);
                class_ids.len() - 1
            }) as u32
        });
        detections
            .detections
            .push(Detection::new(class_id, o.class_name.clone(), 1.0, o.bbox)?);
        truth.objects.push(GroundTruthObject {
            class_name: o.class_name.clone(),
            abs_distance: o.depth,
            bbox: Some(o.bbox),
        });
    }

    Ok(RenderedScene {
        disparity,
        detections,
        truth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::disparity_to_depth;
    use crate::roi::measure_objects;

    fn bx(x0: f64, y0: f64, x1: f64, y1: f64) -> BoundingBox {
        BoundingBox::new(x0, y0, x1, y1).unwrap()
    }

    #[test]
    fn object_disparity_inverts_conversion() {
        let spec = SceneSpec::new(20, 10, 100.0).with_object("car", 10.0, bx(2.0, 2.0, 6.0, 6.0));
        let scene = render_scene(&spec).unwrap();
        let expected = ((0.1 - 0.01) / (10.0 - 0.01)) as f32;
        assert_eq!(scene.disparity.get(3, 3), Some(expected));
        assert!((expected as f64 - 0.009009).abs() < 1e-6);
        assert_eq!(scene.disparity.get(0, 0), Some(0.0));
        assert_eq!(scene.detections.detections[0].confidence, 1.0);
        assert_eq!(scene.truth.objects[0].abs_distance, 10.0);
    }

    #[test]
    fn empty_scene_is_uniform() {
        let scene = render_scene(&SceneSpec::new(8, 4, 25.0)).unwrap();
        let first = scene.disparity.values()[0];
        assert!(scene.disparity.values().iter().all(|&v| v == first));
        assert!(scene.detections.is_empty());
        assert!(scene.truth.objects.is_empty());
    }

    #[test]
    fn nearest_object_wins() {
        let spec = SceneSpec::new(20, 10, 50.0)
            .with_object("near", 5.0, bx(0.0, 0.0, 10.0, 10.0))
            .with_object("far", 20.0, bx(5.0, 0.0, 15.0, 10.0));
        let scene = render_scene(&spec).unwrap();
        let depth = disparity_to_depth(&scene.disparity, &spec.depth_range).unwrap();
        let at = |c| depth.get(c, 5).unwrap() as f64;
        assert!((at(7) - 5.0).abs() < 1e-4);
        assert!((at(12) - 20.0).abs() < 1e-3);
        assert!((at(2) - 5.0).abs() < 1e-4);
    }

    #[test]
    fn half_planes_give_separate_revs() {
        let spec = SceneSpec::new(40, 20, 5.0).with_object("wall", 20.0, bx(20.0, 0.0, 40.0, 20.0));
        let scene = render_scene(&spec).unwrap();
        let depth = disparity_to_depth(&scene.disparity, &spec.depth_range).unwrap();
        let mut dets = DetectionSet::new("h", 40, 20);
        dets.detections
            .push(Detection::new(0, "l", 0.9, bx(2.0, 2.0, 15.0, 18.0)).unwrap());
        dets.detections
            .push(Detection::new(0, "r", 0.9, bx(25.0, 2.0, 38.0, 18.0)).unwrap());
        let m = measure_objects(&depth, &dets).unwrap();
        assert!((m.objects[0].rev - 5.0).abs() < 1e-4);
        assert!((m.objects[1].rev - 20.0).abs() < 1e-4);
    }

    #[test]
    fn class_ids_follow_first_appearance() {
        let spec = SceneSpec::new(20, 10, 50.0)
            .with_object("person", 5.0, bx(0.0, 0.0, 2.0, 2.0))
            .with_object("car", 6.0, bx(4.0, 0.0, 6.0, 2.0))
            .with_object("person", 7.0, bx(8.0, 0.0, 10.0, 2.0));
        let ids: Vec<u32> = render_scene(&spec)
            .unwrap()
            .detections
            .detections
            .iter()
            .map(|d| d.class_id)
            .collect();
        assert_eq!(ids, vec![0, 1, 0]);
    }

    #[test]
    fn invalid_scenes() {
        let out_of_range = SceneSpec::new(10, 10, 150.0);
        assert!(matches!(
            render_scene(&out_of_range),
            Err(Error::InvalidScene(_))
        ));
        let deep = SceneSpec::new(10, 10, 50.0).with_object("o", 0.01, bx(0.0, 0.0, 1.0, 1.0));
        assert!(matches!(render_scene(&deep), Err(Error::InvalidScene(_))));
        let outside = SceneSpec::new(10, 10, 50.0).with_object("o", 5.0, bx(5.0, 5.0, 11.0, 6.0));
        assert!(matches!(
            render_scene(&outside),
            Err(Error::InvalidScene(_))
        ));
    }

    #[test]
    fn noise_is_seeded() {
        let mut spec = SceneSpec::new(16, 8, 10.0);
        spec.noise_amplitude = 0.01;
        spec.seed = 7;
        let a = render_scene(&spec).unwrap();
        assert_eq!(a, render_scene(&spec).unwrap());
        assert!(a
            .disparity
            .values()
            .iter()
            .any(|&v| v != a.disparity.values()[0]));
    }

    #[test]
    fn scene_json_round_trip() {
        let doc = br#"{"map_width":8,"map_height":4,"background_depth":30,
            "objects":[{"class_name":"car","depth":12.5,"bbox":[1,1,3,3]}]}"#;
        let spec = SceneSpec::from_json(doc).unwrap();
        assert_eq!(spec.image, None);
        assert_eq!(spec.depth_range, DepthRange::default());
        assert_eq!(SceneSpec::from_json(&spec.to_json()).unwrap(), spec);
    }
}

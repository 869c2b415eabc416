//! Detections: data model, the `.det.json` format, and detector postprocessing.
//!
//! A detector backend hands over one [`DetectionSet`] per image. Before the
//! boxes are fused with depth they go through [`filter_confidence`] and a
//! per-class greedy [`nms`].

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default minimum confidence kept by the pipeline.
pub const DEFAULT_MIN_CONF: f64 = 0.25;
/// Default IoU above which NMS suppresses a box.
pub const DEFAULT_IOU_THRESHOLD: f64 = 0.45;

/// Axis-aligned box in pixel coordinates, origin top-left.
///
/// Always satisfies `0 <= x0 < x1` and `0 <= y0 < y1` with finite corners.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    x0: f64,
    y0: f64,
    x1: f64,
    y1: f64,
}

impl BoundingBox {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        let corners = [x0, y0, x1, y1];
        if corners.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidBox(corners, "non-finite coordinate"));
        }
        if x0 >= x1 || y0 >= y1 {
            return Err(Error::InvalidBox(corners, "inverted or empty box"));
        }
        if x0 < 0.0 || y0 < 0.0 {
            return Err(Error::InvalidBox(corners, "negative coordinate"));
        }
        Ok(BoundingBox { x0, y0, x1, y1 })
    }

    pub fn from_array(corners: [f64; 4]) -> Result<Self> {
        let [x0, y0, x1, y1] = corners;
        Self::new(x0, y0, x1, y1)
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn y0(&self) -> f64 {
        self.y0
    }

    pub fn x1(&self) -> f64 {
        self.x1
    }

    pub fn y1(&self) -> f64 {
        self.y1
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.x0, self.y0, self.x1, self.y1]
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center_x(&self) -> f64 {
        0.5 * (self.x0 + self.x1)
    }

    /// Whether the box lies inside `[0, width] x [0, height]`.
    pub fn within(&self, width: f64, height: f64) -> bool {
        self.x1 <= width && self.y1 <= height
    }
}

impl Serialize for BoundingBox {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_array().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for BoundingBox {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let corners = <[f64; 4]>::deserialize(deserializer)?;
        BoundingBox::from_array(corners).map_err(serde::de::Error::custom)
    }
}

/// Clamps raw corners into the image, rejecting inverted input boxes.
pub fn clamp_box(corners: [f64; 4], width: f64, height: f64) -> Result<BoundingBox> {
    let [x0, y0, x1, y1] = corners;
    if corners.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidBox(corners, "non-finite coordinate"));
    }
    if x0 >= x1 || y0 >= y1 {
        return Err(Error::InvalidBox(corners, "inverted or empty box"));
    }
    BoundingBox::new(
        x0.clamp(0.0, width),
        y0.clamp(0.0, height),
        x1.clamp(0.0, width),
        y1.clamp(0.0, height),
    )
    .map_err(|_| Error::InvalidBox(corners, "box lies outside the image"))
}

/// One classified, scored box.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Detection {
    pub class_id: u32,
    pub class_name: String,
    pub confidence: f64,
    pub bbox: BoundingBox,
}

impl Detection {
    pub fn new(
        class_id: u32,
        class_name: impl Into<String>,
        confidence: f64,
        bbox: BoundingBox,
    ) -> Result<Self> {
        let class_name = class_name.into();
        if class_name.is_empty() {
            return Err(Error::InvalidField {
                field: "class_name",
                reason: "empty".into(),
            });
        }
        if !(0.0..=1.0).contains(&confidence) {
            return Err(Error::InvalidConfidence(confidence));
        }
        Ok(Detection {
            class_id,
            class_name,
            confidence,
            bbox,
        })
    }
}

/// All detections for one image.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionSet {
    pub image_id: String,
    pub image_width: u32,
    pub image_height: u32,
    pub detections: Vec<Detection>,
}

#[derive(Serialize, Deserialize)]
struct RawDetection {
    class_id: u32,
    class_name: String,
    confidence: f64,
    bbox: [f64; 4],
}

#[derive(Serialize, Deserialize)]
struct RawDetectionSet {
    image: String,
    width: u32,
    height: u32,
    detections: Vec<RawDetection>,
}

impl DetectionSet {
    pub fn new(image_id: impl Into<String>, image_width: u32, image_height: u32) -> Self {
        DetectionSet {
            image_id: image_id.into(),
            image_width,
            image_height,
            detections: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.detections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detections.is_empty()
    }

    fn with_detections(&self, detections: Vec<Detection>) -> DetectionSet {
        DetectionSet {
            image_id: self.image_id.clone(),
            image_width: self.image_width,
            image_height: self.image_height,
            detections,
        }
    }

    /// Canonical `.det.json` bytes.
    pub fn to_json(&self) -> Vec<u8> {
        let raw = RawDetectionSet {
            image: self.image_id.clone(),
            width: self.image_width,
            height: self.image_height,
            detections: self
                .detections
                .iter()
                .map(|d| RawDetection {
                    class_id: d.class_id,
                    class_name: d.class_name.clone(),
                    confidence: d.confidence,
                    bbox: d.bbox.to_array(),
                })
                .collect(),
        };
        let mut out = serde_json::to_vec_pretty(&raw).expect("detection set serializes");
        out.push(b'\n');
        out
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::from(e).in_file(path))
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<DetectionSet> {
        let path = path.as_ref();
        std::fs::read(path)
            .map_err(Error::from)
            .and_then(|bytes| parse_detections(&bytes))
            .map_err(|e| e.in_file(path))
    }
}

/// Parses a `.det.json` document, clamping boxes to the image bounds.
pub fn parse_detections(bytes: &[u8]) -> Result<DetectionSet> {
    let raw: RawDetectionSet = serde_json::from_slice(bytes)?;
    if raw.width == 0 || raw.height == 0 {
        return Err(Error::InvalidField {
            field: "width/height",
            reason: format!("{}x{} image is empty", raw.width, raw.height),
        });
    }
    let (w, h) = (raw.width as f64, raw.height as f64);
    let detections = raw
        .detections
        .into_iter()
        .map(|d| {
            let bbox = clamp_box(d.bbox, w, h)?;
            Detection::new(d.class_id, d.class_name, d.confidence, bbox)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DetectionSet {
        image_id: raw.image,
        image_width: raw.width,
        image_height: raw.height,
        detections,
    })
}

/// Intersection over union; `0` for disjoint boxes.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let iw = (a.x1.min(b.x1) - a.x0.max(b.x0)).max(0.0);
    let ih = (a.y1.min(b.y1) - a.y0.max(b.y0)).max(0.0);
    let inter = iw * ih;
    if inter <= 0.0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    (inter / union).clamp(0.0, 1.0)
}

/// Keeps detections with `confidence >= min_conf`, in order.
pub fn filter_confidence(set: &DetectionSet, min_conf: f64) -> DetectionSet {
    set.with_detections(
        set.detections
            .iter()
            .filter(|d| d.confidence >= min_conf)
            .cloned()
            .collect(),
    )
}

/// Greedy per-class non-maximum suppression.
///
/// Detections are visited by descending confidence (ties in input order). A
/// detection is dropped when its IoU with an already kept detection of the
/// same `class_id` exceeds `iou_threshold`. The output keeps the visiting
/// order.
pub fn nms(set: &DetectionSet, iou_threshold: f64) -> DetectionSet {
    let mut order: Vec<usize> = (0..set.detections.len()).collect();
    order.sort_by(|&a, &b| {
        set.detections[b]
            .confidence
            .total_cmp(&set.detections[a].confidence)
    });

    let mut kept: Vec<&Detection> = Vec::new();
    for idx in order {
        let cand = &set.detections[idx];
        let suppressed = kept
            .iter()
            .any(|k| k.class_id == cand.class_id && iou(&k.bbox, &cand.bbox) > iou_threshold);
        if !suppressed {
            kept.push(cand);
        }
    }
    set.with_detections(kept.into_iter().cloned().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bx(x0: f64, y0: f64, x1: f64, y1: f64) -> BoundingBox {
        BoundingBox::new(x0, y0, x1, y1).unwrap()
    }

    fn det(class_id: u32, conf: f64, b: BoundingBox) -> Detection {
        Detection::new(class_id, format!("c{class_id}"), conf, b).unwrap()
    }

    fn set_of(dets: Vec<Detection>) -> DetectionSet {
        DetectionSet {
            detections: dets,
            ..DetectionSet::new("img", 640, 480)
        }
    }

    #[test]
    fn parses_single_detection() {
        let doc = br#"{"image":"a","width":640,"height":480,"detections":[
            {"class_id":0,"class_name":"person","confidence":0.9,"bbox":[10,20,50,120]}]}"#;
        let set = parse_detections(doc).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.detections[0].bbox.to_array(), [10.0, 20.0, 50.0, 120.0]);
        assert_eq!(set.detections[0].class_name, "person");
    }

    #[test]
    fn parse_errors() {
        let inverted = br#"{"image":"a","width":640,"height":480,"detections":[
            {"class_id":0,"class_name":"person","confidence":0.9,"bbox":[50,20,10,120]}]}"#;
        assert!(matches!(
            parse_detections(inverted),
            Err(Error::InvalidBox(..))
        ));
        let conf = br#"{"image":"a","width":640,"height":480,"detections":[
            {"class_id":0,"class_name":"person","confidence":1.5,"bbox":[1,2,3,4]}]}"#;
        assert!(matches!(
            parse_detections(conf),
            Err(Error::InvalidConfidence(_))
        ));
        let missing = br#"{"image":"a","width":640,"detections":[]}"#;
        assert!(matches!(parse_detections(missing), Err(Error::Json(_))));
        assert!(matches!(
            parse_detections(b"{not json"),
            Err(Error::Json(_))
        ));
        let outside = br#"{"image":"a","width":640,"height":480,"detections":[
            {"class_id":0,"class_name":"person","confidence":0.5,"bbox":[700,0,800,10]}]}"#;
        assert!(matches!(
            parse_detections(outside),
            Err(Error::InvalidBox(..))
        ));
    }

    #[test]
    fn clamps_to_image() {
        let doc = br#"{"image":"a","width":640,"height":480,"detections":[
            {"class_id":0,"class_name":"car","confidence":0.5,"bbox":[-5,0,650,480]}]}"#;
        let set = parse_detections(doc).unwrap();
        assert_eq!(set.detections[0].bbox.to_array(), [0.0, 0.0, 640.0, 480.0]);
    }

    #[test]
    fn iou_examples() {
        let a = bx(0.0, 0.0, 2.0, 2.0);
        assert_eq!(iou(&a, &a), 1.0);
        assert_eq!(iou(&a, &bx(5.0, 5.0, 6.0, 6.0)), 0.0);
        // touching edges share no area
        assert_eq!(iou(&a, &bx(2.0, 0.0, 3.0, 2.0)), 0.0);
        assert!((iou(&a, &bx(1.0, 1.0, 3.0, 3.0)) - 1.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn confidence_filter() {
        let b = bx(0.0, 0.0, 1.0, 1.0);
        let set = set_of(vec![det(0, 0.9, b), det(0, 0.1, b)]);
        let kept = filter_confidence(&set, 0.25);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept.detections[0].confidence, 0.9);
        assert_eq!(filter_confidence(&set, 0.0), set);
        assert!(filter_confidence(&set, 1.0).is_empty());
    }

    #[test]
    fn nms_examples() {
        let b = bx(10.0, 10.0, 50.0, 50.0);
        let out = nms(&set_of(vec![det(0, 0.8, b), det(0, 0.9, b)]), 0.45);
        assert_eq!(out.len(), 1);
        assert_eq!(out.detections[0].confidence, 0.9);

        let out = nms(
            &set_of(vec![
                det(0, 0.8, b),
                det(0, 0.9, bx(100.0, 100.0, 120.0, 120.0)),
            ]),
            0.45,
        );
        assert_eq!(out.len(), 2);
        assert_eq!(out.detections[0].confidence, 0.9);

        // different classes never suppress each other
        let out = nms(&set_of(vec![det(0, 0.9, b), det(1, 0.8, b)]), 0.45);
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn nms_ties_follow_input_order() {
        let b = bx(10.0, 10.0, 50.0, 50.0);
        let first = Detection::new(0, "first", 0.5, b).unwrap();
        let second = Detection::new(0, "second", 0.5, b).unwrap();
        let out = nms(&set_of(vec![first, second]), 0.45);
        assert_eq!(out.len(), 1);
        assert_eq!(out.detections[0].class_name, "first");
    }

    fn arb_box() -> impl Strategy<Value = BoundingBox> {
        (0.0f64..600.0, 0.0f64..440.0, 1.0f64..40.0, 1.0f64..40.0)
            .prop_map(|(x, y, w, h)| bx(x, y, x + w, y + h))
    }

    fn arb_set() -> impl Strategy<Value = DetectionSet> {
        proptest::collection::vec((0u32..3, 0.0f64..=1.0, arb_box()), 0..12)
            .prop_map(|v| set_of(v.into_iter().map(|(c, p, b)| det(c, p, b)).collect()))
    }

    proptest! {
        #[test]
        fn iou_symmetric_and_bounded(a in arb_box(), b in arb_box()) {
            let ab = iou(&a, &b);
            prop_assert_eq!(ab, iou(&b, &a));
            prop_assert!((0.0..=1.0).contains(&ab));
            prop_assert_eq!(iou(&a, &a), 1.0);
        }

        #[test]
        fn nms_invariants(set in arb_set(), thr in 0.05f64..0.95) {
            let out = nms(&set, thr);
            for d in &out.detections {
                prop_assert!(set.detections.contains(d));
            }
            for (i, a) in out.detections.iter().enumerate() {
                for b in &out.detections[i + 1..] {
                    prop_assert!(a.confidence >= b.confidence);
                    if a.class_id == b.class_id {
                        prop_assert!(iou(&a.bbox, &b.bbox) <= thr);
                    }
                }
            }
            prop_assert_eq!(nms(&out, thr), out);
        }

        #[test]
        fn filter_is_monotone(set in arb_set(), lo in 0.0f64..=1.0, hi in 0.0f64..=1.0) {
            let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
            let strict = filter_confidence(&set, hi);
            let loose = filter_confidence(&set, lo);
            prop_assert!(strict.len() <= loose.len());
            for d in &strict.detections {
                prop_assert!(loose.detections.contains(d));
            }
        }

        #[test]
        fn json_round_trip(set in arb_set()) {
            let bytes = set.to_json();
            let back = parse_detections(&bytes).unwrap();
            prop_assert_eq!(&back, &set);
            prop_assert_eq!(back.to_json(), bytes);
        }
    }
}

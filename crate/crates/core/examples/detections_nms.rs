//! Confidence filtering and per-class NMS on a detection file.

use monodist::detect::{parse_detections, DEFAULT_IOU_THRESHOLD, DEFAULT_MIN_CONF};
use monodist::{filter_confidence, iou, nms};

const DETECTIONS: &str = r#"{
  "image": "street",
  "width": 640,
  "height": 480,
  "detections": [
    {"class_id": 2, "class_name": "car", "confidence": 0.91, "bbox": [100, 200, 300, 320]},
    {"class_id": 2, "class_name": "car", "confidence": 0.74, "bbox": [110, 205, 310, 330]},
    {"class_id": 0, "class_name": "person", "confidence": 0.66, "bbox": [120, 190, 170, 330]},
    {"class_id": 2, "class_name": "car", "confidence": 0.12, "bbox": [400, 220, 520, 300]},
    {"class_id": 0, "class_name": "person", "confidence": 0.58, "bbox": [500, 180, 540, 310]}
  ]
}"#;

fn main() -> monodist::Result<()> {
    let set = parse_detections(DETECTIONS.as_bytes())?;
    let kept = filter_confidence(&set, DEFAULT_MIN_CONF);
    println!(
        "{} detections, {} above {}",
        set.len(),
        kept.len(),
        DEFAULT_MIN_CONF
    );

    let a = &set.detections[0].bbox;
    let b = &set.detections[1].bbox;
    println!("IoU of the two car boxes: {:.3}", iou(a, b));

    let out = nms(&kept, DEFAULT_IOU_THRESHOLD);
    println!("after NMS at {}:", DEFAULT_IOU_THRESHOLD);
    for d in &out.detections {
        println!(
            "  {:<7} {:.2} {:?}",
            d.class_name,
            d.confidence,
            d.bbox.to_array()
        );
    }
    Ok(())
}

//! Draws predicted distances over an image as an SVG overlay.

use monodist::roi::{DistanceReport, ObjectDistance};
use monodist::svg::render_overlay;
use monodist::{BoundingBox, Detection};

fn main() -> monodist::Result<()> {
    let objects = vec![
        ObjectDistance {
            detection: Detection::new(2, "car", 0.9, BoundingBox::new(40.0, 120.0, 260.0, 300.0)?)?,
            rev: 18.2,
            abs: Some(12.41),
        },
        ObjectDistance {
            detection: Detection::new(
                0,
                "person",
                0.8,
                BoundingBox::new(330.0, 90.0, 380.0, 310.0)?,
            )?,
            rev: 7.9,
            abs: None,
        },
    ];
    let report = DistanceReport {
        image_id: "overlay".into(),
        objects,
        failures: vec![],
    };
    print!("{}", render_overlay(&report, 640, 360));
    Ok(())
}

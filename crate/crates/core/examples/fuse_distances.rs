//! Pools a depth map inside detection boxes to get one relative distance per
//! object, then applies a calibration model.

use monodist::roi::DistanceReport;
use monodist::{
    disparity_to_depth, measure_objects, project_bbox, BoundingBox, CalibrationModel, DepthRange,
    Detection, DetectionSet, MapKind, ScalarMap,
};

fn main() -> monodist::Result<()> {
    // 64x48 disparity map at a quarter of the 256x192 image resolution
    let range = DepthRange::default();
    let (mw, mh) = (64, 48);
    let mut values = vec![range.disparity_from_depth(60.0) as f32; mw * mh];
    for row in 10..40 {
        for col in 4..24 {
            values[row * mw + col] = range.disparity_from_depth(12.0) as f32;
        }
        for col in 40..52 {
            values[row * mw + col] = range.disparity_from_depth(5.5) as f32;
        }
    }
    let disparity = ScalarMap::new(mw, mh, MapKind::Disparity, values)?;
    let depth = disparity_to_depth(&disparity, &range)?;

    let mut dets = DetectionSet::new("demo", 256, 192);
    dets.detections.push(Detection::new(
        2,
        "car",
        0.88,
        BoundingBox::new(16.0, 40.0, 96.0, 160.0)?,
    )?);
    dets.detections.push(Detection::new(
        0,
        "person",
        0.71,
        BoundingBox::new(160.0, 40.0, 208.0, 160.0)?,
    )?);

    for d in &dets.detections {
        let rect = project_bbox(&d.bbox, (256, 192), (mw, mh))?;
        println!(
            "{} box {:?} covers {} map cells",
            d.class_name,
            d.bbox.to_array(),
            rect.cell_count()
        );
    }

    let mut measured = measure_objects(&depth, &dets)?;
    let model = CalibrationModel::from_coefficients(0.4, 1.1, 0.002, 1.0)?;
    for o in &mut measured.objects {
        o.abs = Some(model.apply(o.rev));
    }
    let report = DistanceReport::new("demo", measured);
    print!("{}", String::from_utf8_lossy(&report.to_json()));
    Ok(())
}

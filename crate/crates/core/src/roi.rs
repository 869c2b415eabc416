//! Depth pooling inside detection boxes.
//!
//! Each box is scaled from image pixels onto the depth grid and the relative
//! distance of the object is the median depth of the covered cells.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::detect::{BoundingBox, Detection, DetectionSet};
use crate::error::{Error, Result};
use crate::maps::{MapKind, ScalarMap};

/// Half-open cell rectangle `[col0, col1) x [row0, row1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct IndexRect {
    pub col0: usize,
    pub row0: usize,
    pub col1: usize,
    pub row1: usize,
}

impl IndexRect {
    pub fn width(&self) -> usize {
        self.col1 - self.col0
    }

    pub fn height(&self) -> usize {
        self.row1 - self.row0
    }

    pub fn cell_count(&self) -> usize {
        self.width() * self.height()
    }

    fn check(&self, map: &ScalarMap) -> Result<()> {
        if self.col0 < self.col1
            && self.row0 < self.row1
            && self.col1 <= map.width()
            && self.row1 <= map.height()
        {
            Ok(())
        } else {
            Err(Error::InvalidRect {
                rect: [self.col0, self.row0, self.col1, self.row1],
                width: map.width(),
                height: map.height(),
            })
        }
    }
}

/// Maps an image-space box onto a `map_dims` grid.
///
/// Corners are scaled by `map / image`, then the start corner is floored and
/// the end corner ceiled so every partially covered cell is included.
pub fn project_bbox(
    bbox: &BoundingBox,
    image_dims: (usize, usize),
    map_dims: (usize, usize),
) -> Result<IndexRect> {
    let (iw, ih) = image_dims;
    let (mw, mh) = map_dims;
    if iw == 0 || ih == 0 || mw == 0 || mh == 0 {
        return Err(Error::DegenerateRoi(bbox.to_array()));
    }
    let sx = |x: f64| x * mw as f64 / iw as f64;
    let sy = |y: f64| y * mh as f64 / ih as f64;
    let to_cell = |v: f64, limit: usize| (v.max(0.0) as usize).min(limit);

    let rect = IndexRect {
        col0: to_cell(sx(bbox.x0()).floor(), mw),
        row0: to_cell(sy(bbox.y0()).floor(), mh),
        col1: to_cell(sx(bbox.x1()).ceil(), mw),
        row1: to_cell(sy(bbox.y1()).ceil(), mh),
    };
    if rect.col0 >= rect.col1 || rect.row0 >= rect.row1 {
        return Err(Error::DegenerateRoi(bbox.to_array()));
    }
    Ok(rect)
}

/// Exact median of the depth values inside `rect`.
///
/// For an even cell count this is the mean of the two middle values.
pub fn median_depth(map: &ScalarMap, rect: &IndexRect) -> Result<f64> {
    if map.kind() != MapKind::Depth {
        return Err(Error::WrongKind {
            expected: MapKind::Depth.name(),
            actual: map.kind().name(),
        });
    }
    rect.check(map)?;

    let mut cells: Vec<f32> = Vec::with_capacity(rect.cell_count());
    for row in rect.row0..rect.row1 {
        cells.extend_from_slice(&map.row(row)[rect.col0..rect.col1]);
    }
    Ok(median_of(&mut cells))
}

fn median_of(values: &mut [f32]) -> f64 {
    let n = values.len();
    let mid = n / 2;
    let (lower, upper, _) = values.select_nth_unstable_by(mid, f32::total_cmp);
    let upper = *upper as f64;
    if n % 2 == 1 {
        upper
    } else {
        // largest element of the lower half
        let below = lower.iter().copied().fold(f32::NEG_INFINITY, f32::max) as f64;
        (below + upper) / 2.0
    }
}

/// A detection paired with its relative (and optionally absolute) distance.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectDistance {
    pub detection: Detection,
    /// Median depth inside the box, meters.
    pub rev: f64,
    /// Calibrated distance, meters.
    pub abs: Option<f64>,
}

impl ObjectDistance {
    /// The calibrated distance when available, otherwise the relative one.
    pub fn distance(&self) -> f64 {
        self.abs.unwrap_or(self.rev)
    }
}

/// A detection whose box could not be pooled.
#[derive(Debug, Clone, PartialEq)]
pub struct RoiFailure {
    /// Position of the detection in the input set.
    pub index: usize,
    pub detection: Detection,
    pub reason: String,
}

/// Per-object results for one image.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Measurements {
    pub objects: Vec<ObjectDistance>,
    pub failures: Vec<RoiFailure>,
}

/// Pools `depth` under every detection of `dets`.
///
/// Boxes that collapse on the grid are recorded as failures; the remaining
/// objects keep the input order.
pub fn measure_objects(depth: &ScalarMap, dets: &DetectionSet) -> Result<Measurements> {
    if depth.kind() != MapKind::Depth {
        return Err(Error::WrongKind {
            expected: MapKind::Depth.name(),
            actual: depth.kind().name(),
        });
    }
    let image_dims = (dets.image_width as usize, dets.image_height as usize);
    let map_dims = (depth.width(), depth.height());

    let mut out = Measurements::default();
    for (index, detection) in dets.detections.iter().enumerate() {
        let pooled = project_bbox(&detection.bbox, image_dims, map_dims)
            .and_then(|rect| median_depth(depth, &rect));
        match pooled {
            Ok(rev) => out.objects.push(ObjectDistance {
                detection: detection.clone(),
                rev,
                abs: None,
            }),
            Err(err) => out.failures.push(RoiFailure {
                index,
                detection: detection.clone(),
                reason: err.to_string(),
            }),
        }
    }
    Ok(out)
}

/// Contents of a `.dist.json` file.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceReport {
    pub image_id: String,
    pub objects: Vec<ObjectDistance>,
    pub failures: Vec<RoiFailure>,
}

#[derive(Serialize, Deserialize)]
struct RawObject {
    class_id: u32,
    class_name: String,
    confidence: f64,
    bbox: [f64; 4],
    rev_m: f64,
    abs_m: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawFailure {
    index: usize,
    class_id: u32,
    class_name: String,
    confidence: f64,
    bbox: [f64; 4],
    reason: String,
}

#[derive(Serialize, Deserialize)]
struct RawReport {
    image: String,
    objects: Vec<RawObject>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    failures: Vec<RawFailure>,
}

impl DistanceReport {
    pub fn new(image_id: impl Into<String>, measurements: Measurements) -> Self {
        DistanceReport {
            image_id: image_id.into(),
            objects: measurements.objects,
            failures: measurements.failures,
        }
    }

    pub fn to_json(&self) -> Vec<u8> {
        let raw = RawReport {
            image: self.image_id.clone(),
            objects: self
                .objects
                .iter()
                .map(|o| RawObject {
                    class_id: o.detection.class_id,
                    class_name: o.detection.class_name.clone(),
                    confidence: o.detection.confidence,
                    bbox: o.detection.bbox.to_array(),
                    rev_m: o.rev,
                    abs_m: o.abs,
                })
                .collect(),
            failures: self
                .failures
                .iter()
                .map(|f| RawFailure {
                    index: f.index,
                    class_id: f.detection.class_id,
                    class_name: f.detection.class_name.clone(),
                    confidence: f.detection.confidence,
                    bbox: f.detection.bbox.to_array(),
                    reason: f.reason.clone(),
                })
                .collect(),
        };
        let mut out = serde_json::to_vec_pretty(&raw).expect("distance report serializes");
        out.push(b'\n');
        out
    }

    pub fn from_json(bytes: &[u8]) -> Result<DistanceReport> {
        let raw: RawReport = serde_json::from_slice(bytes)?;
        let objects = raw
            .objects
            .into_iter()
            .map(|o| {
                if !(o.rev_m.is_finite() && o.rev_m > 0.0) {
                    return Err(Error::InvalidField {
                        field: "rev_m",
                        reason: format!("{} is not a positive distance", o.rev_m),
                    });
                }
                let bbox = BoundingBox::from_array(o.bbox)?;
                Ok(ObjectDistance {
                    detection: Detection::new(o.class_id, o.class_name, o.confidence, bbox)?,
                    rev: o.rev_m,
                    abs: o.abs_m,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let failures = raw
            .failures
            .into_iter()
            .map(|f| {
                let bbox = BoundingBox::from_array(f.bbox)?;
                Ok(RoiFailure {
                    index: f.index,
                    detection: Detection::new(f.class_id, f.class_name, f.confidence, bbox)?,
                    reason: f.reason,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DistanceReport {
            image_id: raw.image,
            objects,
            failures,
        })
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::from(e).in_file(path))
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<DistanceReport> {
        let path = path.as_ref();
        std::fs::read(path)
            .map_err(Error::from)
            .and_then(|bytes| Self::from_json(&bytes))
            .map_err(|e| e.in_file(path))
    }
}

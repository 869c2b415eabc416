//! Matching predictions to ground truth and the distance metrics.
//!
//! Accuracy is the fraction of matched objects whose absolute error is
//! strictly below a threshold `T` (0.2 m by default), and RMSE is taken over
//! the same matched pairs. Unmatched objects are counted, never scored.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::detect::{iou, BoundingBox};
use crate::error::{Error, Result};
use crate::roi::ObjectDistance;

/// Default accuracy threshold in meters.
pub const DEFAULT_THRESHOLD: f64 = 0.2;

/// Minimum IoU for a box-based match.
pub const MATCH_IOU: f64 = 0.5;

/// A manually measured object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthObject {
    pub class_name: String,
    #[serde(rename = "abs_m")]
    pub abs_distance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bbox: Option<BoundingBox>,
}

/// Contents of a `.gt.json` file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    #[serde(rename = "image")]
    pub image_id: String,
    pub objects: Vec<GroundTruthObject>,
}

impl GroundTruth {
    pub fn to_json(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("ground truth serializes");
        out.push(b'\n');
        out
    }

    pub fn from_json(bytes: &[u8]) -> Result<GroundTruth> {
        let gt: GroundTruth = serde_json::from_slice(bytes)?;
        for o in &gt.objects {
            if !(o.abs_distance.is_finite() && o.abs_distance > 0.0) {
                return Err(Error::InvalidField {
                    field: "abs_m",
                    reason: format!("{} is not a positive distance", o.abs_distance),
                });
            }
        }
        Ok(gt)
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::from(e).in_file(path))
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<GroundTruth> {
        let path = path.as_ref();
        std::fs::read(path)
            .map_err(Error::from)
            .and_then(|bytes| Self::from_json(&bytes))
            .map_err(|e| e.in_file(path))
    }
}

/// A prediction matched to a ground-truth object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub class_name: String,
    #[serde(rename = "predicted_m")]
    pub predicted: f64,
    #[serde(rename = "truth_m")]
    pub truth: f64,
    #[serde(rename = "error_m")]
    pub error: f64,
}

impl MatchedPair {
    pub fn new(class_name: impl Into<String>, predicted: f64, truth: f64) -> Self {
        MatchedPair {
            class_name: class_name.into(),
            predicted,
            truth,
            error: (predicted - truth).abs(),
        }
    }
}

/// Result of matching one or more images.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Matching {
    pub pairs: Vec<MatchedPair>,
    pub unmatched_predictions: usize,
    pub unmatched_truths: usize,
}

impl Matching {
    /// Appends another image's matches.
    pub fn merge(mut self, other: Matching) -> Matching {
        self.pairs.extend(other.pairs);
        self.unmatched_predictions += other.unmatched_predictions;
        self.unmatched_truths += other.unmatched_truths;
        self
    }
}

/// Pairs predictions with ground truth of the same class.
///
/// When every ground-truth object carries a box, pairs are formed greedily by
/// descending IoU among candidates with IoU above [`MATCH_IOU`]. Otherwise the
/// predictions of each class are ordered left to right by box center and
/// zipped with that class's ground truth in list order. The predicted value is
/// the calibrated distance, or the relative one when no calibration was
/// applied. Pairs come out in ground-truth order.
pub fn match_objects(preds: &[ObjectDistance], gts: &[GroundTruthObject]) -> Matching {
    let mut assigned: Vec<Option<usize>> = vec![None; gts.len()];
    let mut used = vec![false; preds.len()];

    if !gts.is_empty() && gts.iter().all(|g| g.bbox.is_some()) {
        let mut candidates = Vec::new();
        for (pi, p) in preds.iter().enumerate() {
            for (gi, g) in gts.iter().enumerate() {
                if p.detection.class_name != g.class_name {
                    continue;
                }
                let overlap = iou(&p.detection.bbox, g.bbox.as_ref().expect("checked above"));
                if overlap > MATCH_IOU {
                    candidates.push((overlap, pi, gi));
                }
            }
        }
        // descending IoU; ties by prediction then truth index
        candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then((a.1, a.2).cmp(&(b.1, b.2))));
        for (_, pi, gi) in candidates {
            if !used[pi] && assigned[gi].is_none() {
                used[pi] = true;
                assigned[gi] = Some(pi);
            }
        }
    } else {
        let mut classes: Vec<&str> = gts.iter().map(|g| g.class_name.as_str()).collect();
        classes.sort_unstable();
        classes.dedup();
        for class in classes {
            let mut left_to_right: Vec<usize> = (0..preds.len())
                .filter(|&i| preds[i].detection.class_name == class)
                .collect();
            left_to_right.sort_by(|&a, &b| {
                preds[a]
                    .detection
                    .bbox
                    .center_x()
                    .total_cmp(&preds[b].detection.bbox.center_x())
            });
            let truths = (0..gts.len()).filter(|&i| gts[i].class_name == class);
            for (gi, pi) in truths.zip(left_to_right) {
                used[pi] = true;
                assigned[gi] = Some(pi);
            }
        }
    }

    let pairs: Vec<MatchedPair> = assigned
        .iter()
        .enumerate()
        .filter_map(|(gi, pi)| {
            pi.map(|pi| {
                MatchedPair::new(
                    gts[gi].class_name.clone(),
                    preds[pi].distance(),
                    gts[gi].abs_distance,
                )
            })
        })
        .collect();
    Matching {
        unmatched_predictions: preds.len() - pairs.len(),
        unmatched_truths: gts.len() - pairs.len(),
        pairs,
    }
}

/// Root mean square of the per-pair errors.
pub fn rmse(pairs: &[MatchedPair]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::EmptyPairs);
    }
    let sum: f64 = pairs.iter().map(|p| p.error * p.error).sum();
    Ok((sum / pairs.len() as f64).sqrt())
}

/// Fraction of pairs whose error is strictly below `t`.
pub fn threshold_accuracy(pairs: &[MatchedPair], t: f64) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::EmptyPairs);
    }
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidThreshold(t));
    }
    let hits = pairs.iter().filter(|p| p.error < t).count();
    Ok(hits as f64 / pairs.len() as f64)
}

/// Aggregate metrics with the per-object rows they came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    #[serde(rename = "threshold_m")]
    pub threshold: f64,
    #[serde(rename = "rmse_m")]
    pub rmse: f64,
    pub accuracy: f64,
    pub n_pairs: usize,
    pub unmatched_predictions: usize,
    pub unmatched_truths: usize,
    pub pairs: Vec<MatchedPair>,
}

pub fn build_report(matching: Matching, t: f64) -> Result<MetricsReport> {
    let rmse = rmse(&matching.pairs)?;
    let accuracy = threshold_accuracy(&matching.pairs, t)?;
    Ok(MetricsReport {
        threshold: t,
        rmse,
        accuracy,
        n_pairs: matching.pairs.len(),
        unmatched_predictions: matching.unmatched_predictions,
        unmatched_truths: matching.unmatched_truths,
        pairs: matching.pairs,
    })
}

impl MetricsReport {
    pub fn to_json(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("report serializes");
        out.push(b'\n');
        out
    }

    pub fn from_json(bytes: &[u8]) -> Result<MetricsReport> {
        Ok(serde_json::from_slice(bytes)?)
    }

    /// Plain-text table, one row per matched object, distances to 2 decimals.
    pub fn render_table(&self) -> String {
        const HEADERS: [&str; 4] = [
            "Object",
            "Absolute distance (m)",
            "Predicted distance (m)",
            "Error (m)",
        ];
        let name_width = self
            .pairs
            .iter()
            .map(|p| p.class_name.chars().count())
            .chain([HEADERS[0].len()])
            .max()
            .unwrap_or(0);

        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<name_width$}  {}  {}  {}",
            HEADERS[0], HEADERS[1], HEADERS[2], HEADERS[3]
        );
        for p in &self.pairs {
            let _ = writeln!(
                out,
                "{:<name_width$}  {:>w1$.2}  {:>w2$.2}  {:>w3$.2}",
                p.class_name,
                p.truth,
                p.predicted,
                p.error,
                w1 = HEADERS[1].len(),
                w2 = HEADERS[2].len(),
                w3 = HEADERS[3].len(),
            );
        }
        let hits = self
            .pairs
            .iter()
            .filter(|p| p.error < self.threshold)
            .count();
        let _ = writeln!(out);
        let _ = writeln!(out, "RMSE (m): {:.4}", self.rmse);
        let _ = writeln!(
            out,
            "Accuracy (error < {} m): {:.2}% ({}/{})",
            self.threshold,
            100.0 * self.accuracy,
            hits,
            self.n_pairs
        );
        let _ = writeln!(
            out,
            "Unmatched predictions: {}, unmatched ground truth: {}",
            self.unmatched_predictions, self.unmatched_truths
        );
        out
    }
}

//! Quadratic calibration from relative to absolute distance.
//!
//! The model is `Y = (c0 + c1*X + c2*X^2) * h`, where `X` is the relative
//! distance of an object (median depth inside its box), `Y` the metric
//! distance and `h` the camera mounting height. `h` is a known input; only
//! the three coefficients are fitted.
//!
//! The fit is an ordinary least-squares problem on the targets `Y / h`. It is
//! solved through the 3x3 normal equations of the Vandermonde system built on
//! the standardized abscissa `t = (X - mean) / std`, then mapped back to
//! coefficients in `X`. Standardizing keeps the Gram matrix well conditioned
//! for distances spanning tens of meters.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One observed (relative, absolute) distance pair, both in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSample {
    #[serde(rename = "x_m")]
    pub x: f64,
    #[serde(rename = "y_abs_m")]
    pub y_abs: f64,
}

impl CalibrationSample {
    pub fn new(x: f64, y_abs: f64) -> Self {
        CalibrationSample { x, y_abs }
    }
}

/// Fitted (or hand-specified) calibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationModel {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    #[serde(rename = "h_m")]
    pub h: f64,
    #[serde(rename = "fit_rmse_m")]
    pub fit_rmse: f64,
    /// `0` for models that were not fitted from data.
    pub n_samples: usize,
}

impl CalibrationModel {
    /// A model given directly by its coefficients.
    pub fn from_coefficients(c0: f64, c1: f64, c2: f64, h: f64) -> Result<Self> {
        let model = CalibrationModel {
            c0,
            c1,
            c2,
            h,
            fit_rmse: 0.0,
            n_samples: 0,
        };
        model.validate()?;
        Ok(model)
    }

    /// `Y = X`.
    pub fn identity() -> Self {
        CalibrationModel {
            c0: 0.0,
            c1: 1.0,
            c2: 0.0,
            h: 1.0,
            fit_rmse: 0.0,
            n_samples: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h.is_finite() && self.h > 0.0) {
            return Err(Error::InvalidModel(format!(
                "camera height must be positive, got {}",
                self.h
            )));
        }
        if ![self.c0, self.c1, self.c2].iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidModel("non-finite coefficient".into()));
        }
        if !(self.fit_rmse.is_finite() && self.fit_rmse >= 0.0) {
            return Err(Error::InvalidModel(format!(
                "fit rmse must be non-negative, got {}",
                self.fit_rmse
            )));
        }
        if matches!(self.n_samples, 1 | 2) {
            return Err(Error::InvalidModel(format!(
                "a fitted model needs at least 3 samples, got {}",
                self.n_samples
            )));
        }
        Ok(())
    }

    /// Absolute distance for relative distance `x`.
    ///
    /// Outside the calibrated span the quadratic may go negative; such values
    /// are returned as is.
    pub fn apply(&self, x: f64) -> f64 {
        self.h * (self.c0 + x * (self.c1 + x * self.c2))
    }

    pub fn residual_sum_of_squares(&self, samples: &[CalibrationSample]) -> f64 {
        samples
            .iter()
            .map(|s| {
                let r = self.apply(s.x) - s.y_abs;
                r * r
            })
            .sum()
    }

    /// Canonical `.calib.json` bytes.
    pub fn to_json(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("model serializes");
        out.push(b'\n');
        out
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let model: CalibrationModel = serde_json::from_slice(bytes)?;
        model.validate()?;
        Ok(model)
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::from(e).in_file(path))
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        std::fs::read(path)
            .map_err(Error::from)
            .and_then(|bytes| Self::from_json(&bytes))
            .map_err(|e| e.in_file(path))
    }
}

/// Least-squares fit of `(c0, c1, c2)` for a known camera height `h`.
pub fn fit_quadratic(samples: &[CalibrationSample], h: f64) -> Result<CalibrationModel> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidCameraHeight(h));
    }
    for s in samples {
        if !(s.x.is_finite() && s.x >= 0.0 && s.y_abs.is_finite() && s.y_abs > 0.0) {
            return Err(Error::InvalidField {
                field: "sample",
                reason: format!("({}, {}) is not a valid distance pair", s.x, s.y_abs),
            });
        }
    }
    let distinct = {
        let mut xs: Vec<f64> = samples.iter().map(|s| s.x).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        xs.len()
    };
    if distinct < 3 {
        return Err(Error::SingularSystem(distinct));
    }

    let n = samples.len() as f64;
    let mean = samples.iter().map(|s| s.x).sum::<f64>() / n;
    let std = (samples.iter().map(|s| (s.x - mean).powi(2)).sum::<f64>() / n).sqrt();

    // Gram matrix and right-hand side in the standardized basis [1, t, t^2].
    let mut gram = [[0.0f64; 3]; 3];
    let mut rhs = [0.0f64; 3];
    for s in samples {
        let t = (s.x - mean) / std;
        let row = [1.0, t, t * t];
        let target = s.y_abs / h;
        for i in 0..3 {
            for j in 0..3 {
                gram[i][j] += row[i] * row[j];
            }
            rhs[i] += row[i] * target;
        }
    }
    let [a0, a1, a2] = solve3(gram, rhs).ok_or(Error::SingularSystem(distinct))?;

    // a0 + a1*t + a2*t^2 with t = (x - mean) / std, expanded in x.
    let u = mean / std;
    let c2 = a2 / (std * std);
    let c1 = (a1 - 2.0 * a2 * u) / std;
    let c0 = a0 - a1 * u + a2 * u * u;

    let mut model = CalibrationModel {
        c0,
        c1,
        c2,
        h,
        fit_rmse: 0.0,
        n_samples: samples.len(),
    };
    model.fit_rmse = (model.residual_sum_of_squares(samples) / n).sqrt();
    Ok(model)
}

/// Gaussian elimination with partial pivoting. `None` when singular.
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() <= scale * 1e-13 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            let pivot_row = a[col];
            for (cell, p) in a[row].iter_mut().zip(pivot_row).skip(col) {
                *cell -= f * p;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let tail: f64 = (row + 1..3).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Some(x)
}

/// Reads samples from CSV with header `x_m,y_abs_m`.
pub fn read_samples<R: Read>(reader: R) -> Result<Vec<CalibrationSample>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["x_m", "y_abs_m"] {
        return Err(Error::InvalidField {
            field: "csv header",
            reason: format!(
                "expected `x_m,y_abs_m`, got `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}

pub fn read_samples_file(path: impl AsRef<Path>) -> Result<Vec<CalibrationSample>> {
    let path = path.as_ref();
    std::fs::File::open(path)
        .map_err(Error::from)
        .and_then(read_samples)
        .map_err(|e| e.in_file(path))
}

pub fn write_samples<W: std::io::Write>(samples: &[CalibrationSample], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for s in samples {
        wtr.serialize(s)?;
    }
    wtr.flush()?;
    Ok(())
}

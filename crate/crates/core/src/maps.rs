//! Dense scalar maps (disparity or depth), their PFM encoding, and the
//! disparity to depth transform.
//!
//! Values are held as `f32`, the precision of the PFM interchange format, in
//! row-major order with the top row first. PFM files store the bottom row
//! first; [`read_pfm`] and [`write_pfm`] reorder rows on the way through.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// What the values of a [`ScalarMap`] mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapKind {
    /// Normalized disparity in `[0, 1]`.
    Disparity,
    /// Metric depth in meters.
    Depth,
}

impl MapKind {
    pub fn name(self) -> &'static str {
        match self {
            MapKind::Disparity => "disparity",
            MapKind::Depth => "depth",
        }
    }
}

impl fmt::Display for MapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A `width x height` grid of finite values.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarMap {
    width: usize,
    height: usize,
    kind: MapKind,
    values: Vec<f32>,
}

impl ScalarMap {
    /// Builds a map from row-major, top-row-first values.
    ///
    /// Disparity values must lie in `[0, 1]`; depth values must be positive.
    pub fn new(width: usize, height: usize, kind: MapKind, values: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidField {
                field: "dimensions",
                reason: format!("{width}x{height} map is empty"),
            });
        }
        let expected = width
            .checked_mul(height)
            .ok_or_else(|| Error::InvalidField {
                field: "dimensions",
                reason: format!("{width}x{height} overflows"),
            })?;
        if values.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: values.len(),
            });
        }
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFinite(index));
            }
            match kind {
                MapKind::Disparity if !(0.0..=1.0).contains(&value) => {
                    return Err(Error::DisparityOutOfRange { index, value });
                }
                MapKind::Depth if value <= 0.0 => {
                    return Err(Error::InvalidField {
                        field: "depth",
                        reason: format!("value {value} at index {index} is not positive"),
                    });
                }
                _ => {}
            }
        }
        Ok(ScalarMap {
            width,
            height,
            kind,
            values,
        })
    }

    /// A map holding `value` everywhere.
    pub fn filled(width: usize, height: usize, kind: MapKind, value: f32) -> Result<Self> {
        Self::new(
            width,
            height,
            kind,
            vec![value; width.saturating_mul(height)],
        )
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn kind(&self) -> MapKind {
        self.kind
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f32> {
        self.values
    }

    pub fn get(&self, col: usize, row: usize) -> Option<f32> {
        (col < self.width && row < self.height).then(|| self.values[row * self.width + col])
    }

    pub fn row(&self, row: usize) -> &[f32] {
        &self.values[row * self.width..(row + 1) * self.width]
    }
}

/// Closed depth interval `[min_depth, max_depth]` in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRange", into = "RawRange")]
pub struct DepthRange {
    min_depth: f64,
    max_depth: f64,
}

#[derive(Serialize, Deserialize)]
struct RawRange {
    min_depth: f64,
    max_depth: f64,
}

impl TryFrom<RawRange> for DepthRange {
    type Error = Error;

    fn try_from(raw: RawRange) -> Result<Self> {
        DepthRange::new(raw.min_depth, raw.max_depth)
    }
}

impl From<DepthRange> for RawRange {
    fn from(range: DepthRange) -> Self {
        RawRange {
            min_depth: range.min_depth,
            max_depth: range.max_depth,
        }
    }
}

impl Default for DepthRange {
    /// `(0.1, 100.0)` meters. A zero minimum would make the transform singular.
    fn default() -> Self {
        DepthRange {
            min_depth: 0.1,
            max_depth: 100.0,
        }
    }
}

impl DepthRange {
    pub fn new(min_depth: f64, max_depth: f64) -> Result<Self> {
        if !(min_depth.is_finite()
            && max_depth.is_finite()
            && 0.0 < min_depth
            && min_depth < max_depth)
        {
            return Err(Error::InvalidRange {
                min: min_depth,
                max: max_depth,
            });
        }
        Ok(DepthRange {
            min_depth,
            max_depth,
        })
    }

    pub fn min_depth(&self) -> f64 {
        self.min_depth
    }

    pub fn max_depth(&self) -> f64 {
        self.max_depth
    }

    pub fn contains(&self, depth: f64) -> bool {
        (self.min_depth..=self.max_depth).contains(&depth)
    }

    /// Depth for a normalized disparity `v`: the reciprocal of
    /// `1/max + (1/min - 1/max) * v`, clamped to the range.
    ///
    /// `v = 0` maps to `max_depth` and `v = 1` to `min_depth`.
    pub fn depth_from_disparity(&self, v: f64) -> f64 {
        let inv_max = 1.0 / self.max_depth;
        let inv_min = 1.0 / self.min_depth;
        let scaled = inv_max + (inv_min - inv_max) * v;
        (1.0 / scaled).clamp(self.min_depth, self.max_depth)
    }

    /// Inverse of [`depth_from_disparity`](Self::depth_from_disparity).
    pub fn disparity_from_depth(&self, depth: f64) -> f64 {
        let inv_max = 1.0 / self.max_depth;
        let inv_min = 1.0 / self.min_depth;
        ((1.0 / depth - inv_max) / (inv_min - inv_max)).clamp(0.0, 1.0)
    }

    /// The range endpoints rounded inward to `f32`.
    fn f32_bounds(&self) -> (f32, f32) {
        let mut lo = self.min_depth as f32;
        if (lo as f64) < self.min_depth {
            lo = lo.next_up();
        }
        let mut hi = self.max_depth as f32;
        if (hi as f64) > self.max_depth {
            hi = hi.next_down();
        }
        (lo, hi)
    }
}

/// Converts a disparity map to metric depth, pixel by pixel.
pub fn disparity_to_depth(map: &ScalarMap, range: &DepthRange) -> Result<ScalarMap> {
    if map.kind != MapKind::Disparity {
        return Err(Error::WrongKind {
            expected: MapKind::Disparity.name(),
            actual: map.kind.name(),
        });
    }
    let (lo, hi) = range.f32_bounds();
    let mut values = Vec::with_capacity(map.values.len());
    for (index, &v) in map.values.iter().enumerate() {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::DisparityOutOfRange { index, value: v });
        }
        let depth = range.depth_from_disparity(v as f64) as f32;
        values.push(depth.clamp(lo, hi));
    }
    Ok(ScalarMap {
        width: map.width,
        height: map.height,
        kind: MapKind::Depth,
        values,
    })
}

/// Decodes a grayscale PFM stream as a disparity map.
pub fn read_pfm<R: Read>(reader: R) -> Result<ScalarMap> {
    read_pfm_as(reader, MapKind::Disparity)
}

/// Decodes a grayscale PFM stream, tagging the result with `kind`.
///
/// Positive scale means big-endian samples, negative little-endian. The
/// magnitude of the scale is not applied to the values.
pub fn read_pfm_as<R: Read>(mut reader: R, kind: MapKind) -> Result<ScalarMap> {
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    decode_pfm(&bytes, kind)
}

pub fn read_pfm_file(path: impl AsRef<Path>, kind: MapKind) -> Result<ScalarMap> {
    let path = path.as_ref();
    std::fs::read(path)
        .map_err(Error::from)
        .and_then(|bytes| decode_pfm(&bytes, kind))
        .map_err(|e| e.in_file(path))
}

fn header_line<'a>(bytes: &'a [u8], pos: &mut usize, what: &str) -> Result<&'a str> {
    let rest = &bytes[*pos..];
    let end = rest
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::MalformedHeader(format!("missing {what} line")))?;
    *pos += end + 1;
    std::str::from_utf8(&rest[..end])
        .map(str::trim)
        .map_err(|_| Error::MalformedHeader(format!("{what} line is not text")))
}

fn decode_pfm(bytes: &[u8], kind: MapKind) -> Result<ScalarMap> {
    let mut pos = 0;
    match header_line(bytes, &mut pos, "magic")? {
        "Pf" => {}
        "PF" => return Err(Error::ColorPfm),
        other => return Err(Error::MalformedHeader(format!("bad magic {other:?}"))),
    }

    let dims = header_line(bytes, &mut pos, "dimensions")?;
    let parsed: Vec<usize> = dims
        .split_whitespace()
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::MalformedHeader(format!("bad dimensions {dims:?}")))?;
    let [width, height] = parsed[..] else {
        return Err(Error::MalformedHeader(format!("bad dimensions {dims:?}")));
    };
    if width == 0 || height == 0 {
        return Err(Error::MalformedHeader(format!(
            "zero dimension in {dims:?}"
        )));
    }

    let scale_text = header_line(bytes, &mut pos, "scale")?;
    let scale: f64 = scale_text
        .parse()
        .map_err(|_| Error::MalformedHeader(format!("bad scale {scale_text:?}")))?;
    if !scale.is_finite() || scale == 0.0 {
        return Err(Error::MalformedHeader(format!("bad scale {scale_text:?}")));
    }
    let little_endian = scale < 0.0;

    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::MalformedHeader(format!("dimensions {dims:?} overflow")))?;
    let payload = &bytes[pos..];
    if payload.len() != expected {
        return Err(Error::TruncatedPayload {
            expected,
            actual: payload.len(),
        });
    }

    let mut values = vec![0f32; width * height];
    // File rows run bottom to top.
    for (file_row, chunk) in payload.chunks_exact(width * 4).enumerate() {
        let row = height - 1 - file_row;
        let dst = &mut values[row * width..(row + 1) * width];
        for (out, sample) in dst.iter_mut().zip(chunk.chunks_exact(4)) {
            let sample = [sample[0], sample[1], sample[2], sample[3]];
            *out = if little_endian {
                f32::from_le_bytes(sample)
            } else {
                f32::from_be_bytes(sample)
            };
        }
    }
    ScalarMap::new(width, height, kind, values)
}

/// Encodes a map as little-endian grayscale PFM (scale `-1.0`).
pub fn write_pfm<W: Write>(map: &ScalarMap, mut writer: W) -> std::io::Result<()> {
    writer.write_all(&to_pfm_bytes(map))
}

pub fn to_pfm_bytes(map: &ScalarMap) -> Vec<u8> {
    let header = format!("Pf\n{} {}\n-1.0\n", map.width, map.height);
    let mut out = Vec::with_capacity(header.len() + map.values.len() * 4);
    out.extend_from_slice(header.as_bytes());
    for row in (0..map.height).rev() {
        for value in map.row(row) {
            out.extend_from_slice(&value.to_le_bytes());
        }
    }
    out
}

pub fn write_pfm_file(map: &ScalarMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_pfm_bytes(map)).map_err(|e| Error::from(e).in_file(path))
}

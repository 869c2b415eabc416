use std::path::PathBuf;

/// Errors produced by the distance pipeline.
///
/// Every variant describes bad input data or a failing backend; command-line
/// usage mistakes are reported separately by the binary.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("malformed PFM header: {0}")]
    MalformedHeader(String),
    #[error("color PFM (`PF`) is not supported, expected grayscale `Pf`")]
    ColorPfm,
    #[error("truncated PFM payload: expected {expected} bytes, got {actual}")]
    TruncatedPayload { expected: usize, actual: usize },
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("map has {actual} values, expected {expected}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("expected a {expected} map, got {actual}")]
    WrongKind {
        expected: &'static str,
        actual: &'static str,
    },
    #[error("disparity value {value} at index {index} is outside [0, 1]")]
    DisparityOutOfRange { index: usize, value: f32 },
    #[error("invalid depth range: need 0 < min ({min}) < max ({max})")]
    InvalidRange { min: f64, max: f64 },

    #[error("invalid detection document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid bounding box {0:?}: {1}")]
    InvalidBox([f64; 4], &'static str),
    #[error("confidence {0} is outside [0, 1]")]
    InvalidConfidence(f64),
    #[error("invalid field `{field}`: {reason}")]
    InvalidField { field: &'static str, reason: String },

    #[error("degenerate region of interest for box {0:?}")]
    DegenerateRoi([f64; 4]),
    #[error("rectangle {rect:?} is not valid for a {width}x{height} map")]
    InvalidRect {
        rect: [usize; 4],
        width: usize,
        height: usize,
    },

    #[error("singular system: need at least 3 distinct x values, got {0}")]
    SingularSystem(usize),
    #[error("camera height must be positive, got {0}")]
    InvalidCameraHeight(f64),
    #[error("invalid calibration model: {0}")]
    InvalidModel(String),
    #[error("calibration samples: {0}")]
    Csv(#[from] csv::Error),

    #[error("no matched pairs to evaluate")]
    EmptyPairs,
    #[error("threshold must be positive, got {0}")]
    InvalidThreshold(f64),

    #[error("invalid scene: {0}")]
    InvalidScene(String),

    #[error("backend failed for `{image_id}`: {reason}")]
    Backend { image_id: String, reason: String },
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn in_file(self, path: impl Into<PathBuf>) -> Error {
        Error::File {
            path: path.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

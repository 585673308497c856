use thiserror::Error;

use crate::caldata::Finding;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: pixel depth {pixel_depth} != R - r = {expected}")]
    Consistency {
        line: usize,
        pixel_depth: i64,
        expected: i64,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("insufficient degrees of freedom: {n} observations for {p} parameters")]
    InsufficientDof { n: usize, p: usize },

    #[error("rank-deficient design: {0}")]
    RankDeficient(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("no sample above threshold {threshold}: object not found")]
    ObjectNotFound { threshold: u32 },

    #[error("distance {distance} is nearer than the closest sight distance {x0}")]
    OutOfView { distance: f64, x0: f64 },

    #[error("pixel depth {pixel_depth} is at or beyond the horizon row {horizon}")]
    Horizon { pixel_depth: f64, horizon: f64 },

    #[error("blur {blur} is out of range for the far branch")]
    OutOfRangeBlur { blur: f64 },

    #[error("calibration set failed validation: {}", summarize(.0))]
    Validation(Vec<Finding>),

    #[error("format error: {0}")]
    Format(String),

    #[error("image format error: {0}")]
    Image(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn summarize(findings: &[Finding]) -> String {
    findings
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

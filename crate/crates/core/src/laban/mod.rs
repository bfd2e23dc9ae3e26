//! Labanotation gesture scores: symbols, document format, and a decoder
//! from scores to joint-angle timelines for any described robot.

mod decode;
mod document;
mod geometry;
mod robot;
mod score;
mod symbols;

pub use decode::{decode, decode_with_warnings, sample, ClampWarning, JointKeyframe, JointTimeline};
pub use document::{parse_document, parse_score, serialize_document, serialize_score, GestureDocument};
pub use geometry::{direction_to_vector, Vector3};
pub use robot::{JointSpec, RobotModel};
pub use score::{LabanKeyframe, LabanScore};
pub use symbols::{legal_symbols, BodyColumn, Direction, LabanCell, Level, UnknownToken};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabanError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("schema error in {field}: {message}")]
    Schema { field: String, message: String },
    #[error("illegal cell ({direction}, {level})")]
    IllegalCell { direction: Direction, level: Level },
    #[error("model mismatch on column {column}: {message}")]
    ModelMismatch { column: BodyColumn, message: String },
    #[error("invalid robot model: {0}")]
    InvalidModel(String),
    #[error("time {t} outside timeline [0, {duration}]")]
    OutOfRange { t: f64, duration: f64 },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl LabanError {
    pub(crate) fn schema(field: impl Into<String>, message: impl Into<String>) -> Self {
        LabanError::Schema { field: field.into(), message: message.into() }
    }

    pub(crate) fn within(self, prefix: &str) -> Self {
        match self {
            LabanError::Schema { field, message } => {
                LabanError::Schema { field: format!("{prefix}.{field}"), message }
            }
            other => other,
        }
    }
}

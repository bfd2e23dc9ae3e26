//! Gesture document format.
//!
//! ```text
//! { "id": "wave",
//!   "concepts": ["greeting"],
//!   "duration": 1.5,
//!   "keyframes": [
//!     { "time": 0.0,
//!       "cells": { "rightUpperArm": {"direction": "forward", "level": "middle"}, ... } } ] }
//! ```
//!
//! Times are written with the shortest decimal form that reads back to the
//! same `f64`, so documents round-trip exactly.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::score::{LabanKeyframe, LabanScore};
use super::symbols::{BodyColumn, Direction, LabanCell, Level};
use super::LabanError;

/// A parsed gesture document: the score plus its library metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct GestureDocument {
    pub id: String,
    pub concepts: Vec<String>,
    pub score: LabanScore,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    #[serde(default, skip_serializing_if = "String::is_empty")]
    id: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    concepts: Vec<String>,
    duration: f64,
    keyframes: Vec<RawKeyframe>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKeyframe {
    time: f64,
    cells: BTreeMap<String, RawCell>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCell {
    direction: String,
    level: String,
}

pub fn parse_document(text: &str) -> Result<GestureDocument, LabanError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let raw: RawDocument = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        match inner.classify() {
            serde_json::error::Category::Data => LabanError::schema(
                if path == "." { "document".to_string() } else { path },
                strip_position(&inner.to_string()),
            ),
            _ => LabanError::Syntax {
                line: inner.line(),
                column: inner.column(),
                message: strip_position(&inner.to_string()),
            },
        }
    })?;
    de.end().map_err(|e| LabanError::Syntax {
        line: e.line(),
        column: e.column(),
        message: strip_position(&e.to_string()),
    })?;

    let mut keyframes = Vec::with_capacity(raw.keyframes.len());
    for (i, kf) in raw.keyframes.into_iter().enumerate() {
        let mut cells = Vec::with_capacity(kf.cells.len());
        for (column_token, cell) in &kf.cells {
            let at = |leaf: &str| format!("keyframes[{i}].cells.{column_token}{leaf}");
            let column: BodyColumn = column_token.parse().map_err(|_| {
                LabanError::schema(at(""), format!("unknown column \"{column_token}\""))
            })?;
            let direction: Direction = cell.direction.parse().map_err(|_| {
                LabanError::schema(
                    at(".direction"),
                    format!("unknown direction \"{}\"", cell.direction),
                )
            })?;
            let level: Level = cell.level.parse().map_err(|_| {
                LabanError::schema(at(".level"), format!("unknown level \"{}\"", cell.level))
            })?;
            let cell = LabanCell::new(column, direction, level).ok_or_else(|| {
                LabanError::schema(at(""), "illegal cell (place, middle)")
            })?;
            cells.push(cell);
        }
        let keyframe = LabanKeyframe::new(kf.time, cells).map_err(|e| e.within(&format!("keyframes[{i}]")))?;
        keyframes.push(keyframe);
    }
    let score = LabanScore::new(keyframes, raw.duration)?;
    Ok(GestureDocument { id: raw.id, concepts: raw.concepts, score })
}

/// Parse a gesture document, keeping only its score.
pub fn parse_score(text: &str) -> Result<LabanScore, LabanError> {
    parse_document(text).map(|doc| doc.score)
}

pub fn serialize_document(doc: &GestureDocument) -> String {
    to_text(doc.id.clone(), doc.concepts.clone(), &doc.score)
}

/// Serialize a bare score (no id or concept metadata).
pub fn serialize_score(score: &LabanScore) -> String {
    to_text(String::new(), Vec::new(), score)
}

fn to_text(id: String, concepts: Vec<String>, score: &LabanScore) -> String {
    let raw = RawDocument {
        id,
        concepts,
        duration: score.duration(),
        keyframes: score
            .keyframes()
            .iter()
            .map(|kf| RawKeyframe {
                time: kf.time(),
                cells: kf
                    .cells()
                    .values()
                    .map(|c| {
                        (
                            c.column().token().to_string(),
                            RawCell {
                                direction: c.direction().token().to_string(),
                                level: c.level().token().to_string(),
                            },
                        )
                    })
                    .collect(),
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&raw).expect("document serialization is infallible");
    text.push('\n');
    text
}

// serde_json appends " at line X column Y"; the position is reported separately.
fn strip_position(message: &str) -> String {
    match message.rfind(" at line ") {
        Some(idx) => message[..idx].to_string(),
        None => message.to_string(),
    }
}

//! Append-only transcript files: one JSON record per line,
//! `{"role": ..., "text": ..., "ts": ...}` plus `"error"` on failed turns.

use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use crate::chat::Turn;

#[derive(Debug, Clone)]
pub struct TranscriptLog {
    path: PathBuf,
}

impl TranscriptLog {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self { path: path.into() }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&self, turns: &[Turn]) -> std::io::Result<()> {
        if turns.is_empty() {
            return Ok(());
        }
        let mut buf = Vec::new();
        for turn in turns {
            serde_json::to_writer(&mut buf, turn)?;
            buf.push(b'\n');
        }
        let mut file = OpenOptions::new().create(true).append(true).open(&self.path)?;
        file.write_all(&buf)?;
        file.flush()
    }

    /// Read every record; a missing file is an empty transcript.
    pub fn read(&self) -> std::io::Result<Vec<Turn>> {
        read_transcript(&self.path)
    }
}

pub fn read_transcript(path: &Path) -> std::io::Result<Vec<Turn>> {
    let file = match std::fs::File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e),
    };
    let mut turns = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let turn = serde_json::from_str(&line).map_err(|e| {
            std::io::Error::new(std::io::ErrorKind::InvalidData, format!("line {}: {e}", i + 1))
        })?;
        turns.push(turn);
    }
    Ok(turns)
}

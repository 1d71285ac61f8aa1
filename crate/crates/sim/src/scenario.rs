use std::path::Path;

use leraat_core::telemetry::{parse_telemetry_message, EcamMessage, FlightState};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("cannot read scenario {path}: {reason}")]
    Io { path: String, reason: String },
    #[error("malformed scenario metadata on line 1: {0}")]
    MalformedMetadata(String),
    #[error("malformed frame on line {line}: {reason}")]
    MalformedFrame { line: usize, reason: String },
    #[error("offset_ms must start at 0 and strictly increase; line {line} has {offset_ms} after {previous}")]
    NonMonotonicOffsets { line: usize, previous: u64, offset_ms: u64 },
    #[error("scenario has no frames")]
    NoFrames,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioMetadata {
    pub name: String,
    #[serde(default)]
    pub aircraft: String,
    #[serde(default)]
    pub description: String,
    /// Documentation of the chosen values and anything else the author adds.
    #[serde(flatten)]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioFrame {
    pub offset_ms: u64,
    pub state: FlightState,
    pub ecam: Vec<EcamMessage>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioFile {
    pub metadata: ScenarioMetadata,
    pub frames: Vec<ScenarioFrame>,
}

impl ScenarioFile {
    /// Offset of the last frame.
    pub fn duration_ms(&self) -> u64 {
        self.frames.last().map_or(0, |f| f.offset_ms)
    }
}

pub fn load_scenario(path: &Path) -> Result<ScenarioFile, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    parse_scenario(&text)
}

/// First non-blank line is metadata; every following non-blank line is a
/// telemetry wire object with an extra `offset_ms`. Line numbers are 1-based
/// file lines.
pub fn parse_scenario(text: &str) -> Result<ScenarioFile, ScenarioError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let metadata = match lines.next() {
        Some((_, first)) => serde_json::from_str::<ScenarioMetadata>(first)
            .map_err(|e| ScenarioError::MalformedMetadata(e.to_string()))?,
        None => return Err(ScenarioError::MalformedMetadata("empty file".into())),
    };

    let mut frames: Vec<ScenarioFrame> = Vec::new();
    for (line, raw) in lines {
        let malformed = |reason: String| ScenarioError::MalformedFrame { line, reason };
        let mut object: serde_json::Map<String, serde_json::Value> =
            serde_json::from_str(raw).map_err(|e| malformed(e.to_string()))?;
        let offset_ms = object
            .remove("offset_ms")
            .ok_or_else(|| malformed("missing offset_ms".into()))?
            .as_u64()
            .ok_or_else(|| malformed("offset_ms must be a non-negative integer".into()))?;
        let wire = serde_json::to_vec(&object).map_err(|e| malformed(e.to_string()))?;
        let (state, ecam) = parse_telemetry_message(&wire).map_err(|e| malformed(e.to_string()))?;

        let monotonic = match frames.last() {
            Some(prev) => offset_ms > prev.offset_ms,
            None => offset_ms == 0,
        };
        if !monotonic {
            return Err(ScenarioError::NonMonotonicOffsets {
                line,
                previous: frames.last().map_or(0, |f| f.offset_ms),
                offset_ms,
            });
        }
        frames.push(ScenarioFrame { offset_ms, state, ecam });
    }
    if frames.is_empty() {
        return Err(ScenarioError::NoFrames);
    }
    Ok(ScenarioFile { metadata, frames })
}

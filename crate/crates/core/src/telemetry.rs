//! Flight-data model, wire parsing and master warning/caution edge detection.
//!
//! A telemetry message is one JSON object carrying the aircraft snapshot plus
//! the ECAM messages currently displayed. Keys that are not part of the
//! [`FlightState`] contract are kept in [`FlightState::extras`] so richer
//! simulators can send more data without being rejected.

use std::collections::BTreeMap;
use std::sync::RwLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TelemetryError {
    #[error("malformed telemetry message: {0}")]
    MalformedMessage(String),
    #[error("invalid value for field `{field}`: {reason}")]
    InvalidField { field: String, reason: String },
    #[error("stale snapshot: timestamp {got} is not after stored timestamp {stored}")]
    StaleTimestamp { stored: u64, got: u64 },
}

impl TelemetryError {
    fn invalid(field: &str, reason: impl Into<String>) -> Self {
        TelemetryError::InvalidField {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}

/// One snapshot of aircraft telemetry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlightState {
    pub timestamp_ms: u64,
    pub latitude_deg: f64,
    pub longitude_deg: f64,
    pub altitude_ft: f64,
    pub indicated_airspeed_kt: f64,
    pub heading_deg: f64,
    pub vertical_speed_fpm: f64,
    pub fuel_left_kg: f64,
    pub fuel_right_kg: f64,
    pub autopilot_mode: String,
    pub autothrottle_mode: String,
    pub master_warning: bool,
    pub master_caution: bool,
    /// Unknown wire keys, carried through untouched.
    #[serde(flatten)]
    pub extras: BTreeMap<String, serde_json::Value>,
}

impl FlightState {
    pub fn validate(&self) -> Result<(), TelemetryError> {
        let finite = [
            ("latitude_deg", self.latitude_deg),
            ("longitude_deg", self.longitude_deg),
            ("altitude_ft", self.altitude_ft),
            ("indicated_airspeed_kt", self.indicated_airspeed_kt),
            ("heading_deg", self.heading_deg),
            ("vertical_speed_fpm", self.vertical_speed_fpm),
            ("fuel_left_kg", self.fuel_left_kg),
            ("fuel_right_kg", self.fuel_right_kg),
        ];
        for (name, value) in finite {
            if !value.is_finite() {
                return Err(TelemetryError::invalid(name, "not a finite number"));
            }
        }
        if !(-90.0..=90.0).contains(&self.latitude_deg) {
            return Err(TelemetryError::invalid(
                "latitude_deg",
                format!("{} outside [-90, 90]", self.latitude_deg),
            ));
        }
        if !(-180.0..=180.0).contains(&self.longitude_deg) {
            return Err(TelemetryError::invalid(
                "longitude_deg",
                format!("{} outside [-180, 180]", self.longitude_deg),
            ));
        }
        if !(0.0..360.0).contains(&self.heading_deg) {
            return Err(TelemetryError::invalid(
                "heading_deg",
                format!("{} outside [0, 360)", self.heading_deg),
            ));
        }
        if self.fuel_left_kg < 0.0 {
            return Err(TelemetryError::invalid("fuel_left_kg", "negative fuel quantity"));
        }
        if self.fuel_right_kg < 0.0 {
            return Err(TelemetryError::invalid("fuel_right_kg", "negative fuel quantity"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Severity {
    Warning,
    Caution,
    Memo,
}

/// A crew-alerting message as displayed on the ECAM.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EcamMessage {
    pub severity: Severity,
    pub text: String,
    pub timestamp_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TriggerKind {
    MasterWarning,
    MasterCaution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriggerEvent {
    pub kind: TriggerKind,
    pub at: u64,
    pub snapshot: FlightState,
    pub ecam: Vec<EcamMessage>,
}

#[derive(Serialize, Deserialize)]
struct WireMessage {
    #[serde(flatten)]
    state: FlightState,
    ecam: Vec<EcamMessage>,
}

#[derive(Serialize)]
struct WireMessageRef<'a> {
    #[serde(flatten)]
    state: &'a FlightState,
    ecam: &'a [EcamMessage],
}

/// Parses one wire record into a validated snapshot and its ECAM list.
pub fn parse_telemetry_message(
    raw: &[u8],
) -> Result<(FlightState, Vec<EcamMessage>), TelemetryError> {
    let text = std::str::from_utf8(raw)
        .map_err(|e| TelemetryError::MalformedMessage(format!("not UTF-8: {e}")))?;
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| TelemetryError::MalformedMessage(e.to_string()))?;
    if !value.is_object() {
        return Err(TelemetryError::MalformedMessage(
            "expected a JSON object".to_string(),
        ));
    }
    let wire: WireMessage = serde_json::from_value(value)
        .map_err(|e| TelemetryError::MalformedMessage(e.to_string()))?;
    wire.state.validate()?;
    for msg in &wire.ecam {
        if msg.text.trim().is_empty() {
            return Err(TelemetryError::invalid("ecam.text", "empty ECAM message text"));
        }
    }
    Ok((wire.state, wire.ecam))
}

/// Serializes a snapshot back into the wire format.
pub fn serialize_telemetry_message(state: &FlightState, ecam: &[EcamMessage]) -> String {
    serde_json::to_string(&WireMessageRef { state, ecam })
        .expect("telemetry serialization is infallible for validated values")
}

/// Rising-edge detection on the master warning and master caution flags.
///
/// An absent previous snapshot counts as both flags off. When both flags rise
/// in the same snapshot only the warning is reported.
pub fn detect_trigger(
    prev: Option<&FlightState>,
    curr: &FlightState,
    ecam: &[EcamMessage],
) -> Option<TriggerEvent> {
    let (was_warning, was_caution) = prev
        .map(|p| (p.master_warning, p.master_caution))
        .unwrap_or((false, false));
    let kind = if curr.master_warning && !was_warning {
        TriggerKind::MasterWarning
    } else if curr.master_caution && !was_caution {
        TriggerKind::MasterCaution
    } else {
        return None;
    };
    Some(TriggerEvent {
        kind,
        at: curr.timestamp_ms,
        snapshot: curr.clone(),
        ecam: ecam.to_vec(),
    })
}

/// Last-write-wins cache of the most recent snapshot.
///
/// One writer, many readers; the state and its ECAM list are swapped together
/// under one lock so readers never see a torn pair.
#[derive(Debug, Default)]
pub struct TelemetryStore {
    latest: RwLock<Option<(FlightState, Vec<EcamMessage>)>>,
}

impl TelemetryStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Stores a snapshot if it is newer than the current one and reports any
    /// master warning/caution rising edge relative to the replaced snapshot.
    pub fn ingest(
        &self,
        state: FlightState,
        ecam: Vec<EcamMessage>,
    ) -> Result<Option<TriggerEvent>, TelemetryError> {
        let mut slot = self.latest.write().unwrap_or_else(|e| e.into_inner());
        let prev = slot.as_ref().map(|(s, _)| s);
        if let Some(prev) = prev {
            if state.timestamp_ms <= prev.timestamp_ms {
                return Err(TelemetryError::StaleTimestamp {
                    stored: prev.timestamp_ms,
                    got: state.timestamp_ms,
                });
            }
        }
        let trigger = detect_trigger(prev, &state, &ecam);
        *slot = Some((state, ecam));
        Ok(trigger)
    }

    pub fn latest_state(&self) -> Option<(FlightState, Vec<EcamMessage>)> {
        self.latest
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .clone()
    }
}

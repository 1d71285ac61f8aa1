use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use leraat_core::telemetry::serialize_telemetry_message;
use thiserror::Error;
use tracing::{debug, warn};

use crate::scenario::ScenarioFile;

const TELEMETRY_PATH: &str = "/api/v1/telemetry";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlaySummary {
    /// Frames the target answered, accepted or not.
    pub frames_sent: usize,
    pub rejections: usize,
    pub iterations: u32,
    pub elapsed: Duration,
}

#[derive(Debug, Error, PartialEq)]
pub enum PlayError {
    #[error("rate must be a positive finite multiplier, got {0}")]
    InvalidRate(f64),
    #[error("invalid target URL `{0}`")]
    InvalidTarget(String),
    #[error("target unreachable after {} frame(s): {reason}", summary.frames_sent)]
    TargetUnreachable { summary: PlaySummary, reason: String },
}

fn telemetry_url(target: &str) -> Result<reqwest::Url, PlayError> {
    let base = target.trim_end_matches('/');
    let full = if base.ends_with(TELEMETRY_PATH) {
        base.to_string()
    } else {
        format!("{base}{TELEMETRY_PATH}")
    };
    reqwest::Url::parse(&full).map_err(|_| PlayError::InvalidTarget(target.to_string()))
}

fn wall_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

/// Plays the scenario once, or forever when `looped`.
pub async fn play(
    scenario: &ScenarioFile,
    target: &str,
    rate: f64,
    looped: bool,
) -> Result<PlaySummary, PlayError> {
    play_iterations(scenario, target, rate, if looped { None } else { Some(1) }).await
}

/// Posts every frame at `offset_ms / rate` after the start, in file order,
/// `iterations` times (unbounded when `None`).
///
/// Timestamps are rebased so the stream is strictly increasing and tracks the
/// wall clock: frame time = start + scheduled send offset. ECAM timestamps
/// shift with their frame.
pub async fn play_iterations(
    scenario: &ScenarioFile,
    target: &str,
    rate: f64,
    iterations: Option<u32>,
) -> Result<PlaySummary, PlayError> {
    if !(rate.is_finite() && rate > 0.0) {
        return Err(PlayError::InvalidRate(rate));
    }
    let url = telemetry_url(target)?;
    let http = reqwest::Client::builder()
        .connect_timeout(Duration::from_secs(2))
        .timeout(Duration::from_secs(10))
        .build()
        .map_err(|e| PlayError::TargetUnreachable { summary: PlaySummary::default(), reason: e.to_string() })?;

    let frames = &scenario.frames;
    let tail_gap = match frames.len() {
        0 | 1 => 1000,
        n => frames[n - 1].offset_ms - frames[n - 2].offset_ms,
    };
    let cycle_ms = scenario.duration_ms() + tail_gap;

    let start = Instant::now();
    let start_ms = wall_ms();
    let mut summary = PlaySummary::default();
    let mut last_ts = 0u64;
    let mut iteration = 0u32;
    while iterations.is_none_or(|n| iteration < n) {
        for frame in frames {
            let scenario_ms = u64::from(iteration) * cycle_ms + frame.offset_ms;
            let send_after = Duration::from_secs_f64(scenario_ms as f64 / rate / 1000.0);
            tokio::time::sleep_until((start + send_after).into()).await;

            let ts = (start_ms + send_after.as_millis() as u64).max(last_ts + 1);
            last_ts = ts;
            let shift = ts as i128 - frame.state.timestamp_ms as i128;
            let mut state = frame.state.clone();
            state.timestamp_ms = ts;
            let mut ecam = frame.ecam.clone();
            for m in &mut ecam {
                m.timestamp_ms = (m.timestamp_ms as i128 + shift).clamp(0, u64::MAX as i128) as u64;
            }

            let body = serialize_telemetry_message(&state, &ecam);
            let response = http
                .post(url.clone())
                .header("content-type", "application/json")
                .body(body)
                .send()
                .await;
            match response {
                Ok(resp) => {
                    summary.frames_sent += 1;
                    let status = resp.status();
                    if !status.is_success() {
                        summary.rejections += 1;
                        let reason = resp.text().await.unwrap_or_default();
                        warn!(offset_ms = frame.offset_ms, %status, %reason, "frame rejected");
                    } else {
                        debug!(offset_ms = frame.offset_ms, "frame accepted");
                    }
                }
                Err(e) => {
                    summary.elapsed = start.elapsed();
                    summary.iterations = iteration;
                    return Err(PlayError::TargetUnreachable { summary, reason: e.to_string() });
                }
            }
        }
        iteration += 1;
        summary.iterations = iteration;
    }
    summary.elapsed = start.elapsed();
    Ok(summary)
}

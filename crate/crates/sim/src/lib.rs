//! Scenario replay: loads newline-delimited telemetry scripts and posts them
//! to a relay on their recorded schedule.

mod player;
mod scenario;

pub use player::{play, play_iterations, PlayError, PlaySummary};
pub use scenario::{load_scenario, parse_scenario, ScenarioError, ScenarioFile, ScenarioFrame, ScenarioMetadata};

//! Core logic for the LeRAAT pilot-advisory relay: telemetry ingestion,
//! manual retrieval, alternate airports with weather, and the advisory
//! session model that turns all of it into prompts for a chat backend.

pub mod advisor;
pub mod airports;
pub mod backoff;
pub mod retrieval;
pub mod telemetry;

use crate::airports::AlternateCandidate;
use crate::retrieval::ScoredChunk;
use crate::telemetry::{EcamMessage, FlightState, Severity};

use super::context::{estimate_tokens, ChatMessage, ConversationContext};
use super::AdvisorError;

pub const DEFAULT_SYSTEM_PROMPT: &str = "\
You are a flight-deck advisory assistant for an airline crew. \
Keep every answer concise: short numbered items, most urgent first, no preamble. \
The pilots retain full authority; offer recommendations, never commands, and say \
when information is missing or uncertain. Base procedures on the manual excerpts \
provided and cite them as [doc_id#chunk]. When a diversion may be needed, rank the \
listed alternate airports using runway length, weather and distance.";

pub const FLIGHT_HEADER: &str = "=== FLIGHT DATA ===";
pub const ECAM_HEADER: &str = "=== ECAM ===";
pub const EXCERPTS_HEADER: &str = "=== MANUAL EXCERPTS ===";
pub const ALTERNATES_HEADER: &str = "=== ALTERNATE AIRPORTS ===";
pub const QUERY_HEADER: &str = "=== PILOT QUERY ===";

/// Imbalance ratio |L - R| / total above which the retrieval query mentions it.
pub const FUEL_IMBALANCE_RATIO: f64 = 0.1;

const FALLBACK_QUERY: &str = "general flight status";

fn whole(x: f64) -> i64 {
    x.round() as i64
}

pub fn format_flight_data(state: &FlightState) -> String {
    format!(
        "POSITION: {:.4}, {:.4}\nALTITUDE: {} ft\nIAS: {} kt\nHDG: {}\nV/S: {} fpm\nFUEL L/R: {}/{} kg\nAP: {}\nA/THR: {}",
        state.latitude_deg,
        state.longitude_deg,
        whole(state.altitude_ft),
        whole(state.indicated_airspeed_kt),
        whole(state.heading_deg),
        whole(state.vertical_speed_fpm),
        whole(state.fuel_left_kg),
        whole(state.fuel_right_kg),
        state.autopilot_mode,
        state.autothrottle_mode,
    )
}

fn by_severity(ecam: &[EcamMessage]) -> Vec<&EcamMessage> {
    let mut sorted: Vec<&EcamMessage> = ecam.iter().collect();
    sorted.sort_by_key(|m| m.severity);
    sorted
}

pub fn format_ecam(ecam: &[EcamMessage]) -> String {
    if ecam.is_empty() {
        return "NONE".to_string();
    }
    by_severity(ecam)
        .iter()
        .map(|m| {
            let label = match m.severity {
                Severity::Warning => "WARNING",
                Severity::Caution => "CAUTION",
                Severity::Memo => "MEMO",
            };
            format!("{label}: {}", m.text)
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn fuel_imbalance(state: &FlightState) -> Option<String> {
    let total = state.fuel_left_kg + state.fuel_right_kg;
    let diff = (state.fuel_left_kg - state.fuel_right_kg).abs();
    (diff / total.max(1.0) > FUEL_IMBALANCE_RATIO).then(|| {
        format!(
            "fuel imbalance between left and right wing tanks ({}/{} kg)",
            whole(state.fuel_left_kg),
            whole(state.fuel_right_kg)
        )
    })
}

/// Text used to search the manuals: ECAM messages (warnings, cautions, memos),
/// then anomalies derived from the flight data, then the pilot's question.
pub fn build_retrieval_query(
    flight: Option<&FlightState>,
    ecam: &[EcamMessage],
    user_text: Option<&str>,
) -> String {
    let mut parts: Vec<String> = by_severity(ecam).iter().map(|m| m.text.clone()).collect();
    if let Some(note) = flight.and_then(fuel_imbalance) {
        parts.push(note);
    }
    if let Some(text) = user_text.map(str::trim).filter(|t| !t.is_empty()) {
        parts.push(text.to_string());
    }
    if parts.is_empty() {
        FALLBACK_QUERY.to_string()
    } else {
        parts.join("\n")
    }
}

pub fn format_alternates(alternates: &[AlternateCandidate]) -> String {
    alternates
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let mut line = format!(
                "{}. {} {}: {:.0} nm, bearing {:03.0}, longest runway {:.0} ft, elevation {:.0} ft",
                i + 1,
                c.airport.ident,
                c.airport.name,
                c.distance_nm,
                c.bearing_deg,
                c.longest_runway_ft,
                c.airport.elevation_ft,
            );
            match &c.metar {
                Some(m) => line.push_str(&format!("\n   METAR: {}\n   decoded: {}", m.raw, m.summary())),
                None => line.push_str("\n   METAR: not available"),
            }
            line
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn format_excerpt(rank: usize, hit: &ScoredChunk) -> String {
    format!(
        "[{}] [{}#{}] (score {:.4})\n{}",
        rank + 1,
        hit.chunk.doc_id,
        hit.chunk.chunk_index,
        hit.score,
        hit.chunk.text.trim()
    )
}

/// The pieces of one request, kept separate so the render order is fixed in
/// one place.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptBundle {
    pub system_text: String,
    pub flight_block: String,
    pub ecam_block: String,
    /// Highest score first.
    pub retrieved_block: Vec<ScoredChunk>,
    pub alternates_block: String,
    pub user_text: Option<String>,
}

impl PromptBundle {
    /// The USER turn: section headers in fixed order, empty optional
    /// sections omitted.
    pub fn render_user_turn(&self) -> String {
        let mut sections = vec![
            format!("{FLIGHT_HEADER}\n{}", self.flight_block),
            format!("{ECAM_HEADER}\n{}", self.ecam_block),
        ];
        if !self.retrieved_block.is_empty() {
            let excerpts = self
                .retrieved_block
                .iter()
                .enumerate()
                .map(|(i, h)| format_excerpt(i, h))
                .collect::<Vec<_>>()
                .join("\n\n");
            sections.push(format!("{EXCERPTS_HEADER}\n{excerpts}"));
        }
        if !self.alternates_block.is_empty() {
            sections.push(format!("{ALTERNATES_HEADER}\n{}", self.alternates_block));
        }
        if let Some(text) = &self.user_text {
            sections.push(format!("{QUERY_HEADER}\n{text}"));
        }
        sections.join("\n\n")
    }
}

/// Builds the request for the chat backend.
///
/// Returns the bundle and the full message list: the SYSTEM turn, the prior
/// turns that still fit once the new USER turn is added, and that USER turn.
/// Manual excerpts are dropped lowest score first while the SYSTEM and USER
/// turns alone exceed the budget.
pub fn assemble_prompt(
    flight: Option<&FlightState>,
    ecam: &[EcamMessage],
    retrieved: &[ScoredChunk],
    alternates: &[AlternateCandidate],
    context: &ConversationContext,
    user_text: Option<&str>,
) -> Result<(PromptBundle, Vec<ChatMessage>), AdvisorError> {
    let mut retrieved_block = retrieved.to_vec();
    retrieved_block.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.chunk.doc_id.cmp(&b.chunk.doc_id))
            .then_with(|| a.chunk.chunk_index.cmp(&b.chunk.chunk_index))
    });
    let mut bundle = PromptBundle {
        system_text: context.system_text().to_string(),
        flight_block: flight
            .map(format_flight_data)
            .unwrap_or_else(|| "NO TELEMETRY RECEIVED".to_string()),
        ecam_block: format_ecam(ecam),
        retrieved_block,
        alternates_block: format_alternates(alternates),
        user_text: user_text
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(str::to_string),
    };

    let available = context.available_for_turns();
    let mut rendered = bundle.render_user_turn();
    while estimate_tokens(&rendered) > available {
        if bundle.retrieved_block.pop().is_none() {
            return Err(AdvisorError::BudgetExceeded {
                tokens: estimate_tokens(&rendered) + context.token_budget() - available,
                budget: context.token_budget(),
            });
        }
        rendered = bundle.render_user_turn();
    }

    let mut staged = context.clone();
    staged.manage_context(ChatMessage::user(rendered))?;
    Ok((bundle, staged.turns().to_vec()))
}

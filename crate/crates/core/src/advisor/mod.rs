//! Advisory logic: the three-state session model, prompt assembly,
//! conversation context and the pluggable chat backend.

mod client;
mod context;
mod prompt;
mod state;

use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::warn;

pub use client::{
    BackendError, ChatClient, ChatReply, MockChatClient, RemoteChatClient, RemoteChatConfig,
};
pub use context::{estimate_tokens, ChatMessage, ConversationContext, Role, DEFAULT_TOKEN_BUDGET};
pub use prompt::{
    assemble_prompt, build_retrieval_query, format_alternates, format_ecam, format_flight_data,
    PromptBundle, ALTERNATES_HEADER, DEFAULT_SYSTEM_PROMPT, ECAM_HEADER, EXCERPTS_HEADER,
    FLIGHT_HEADER, FUEL_IMBALANCE_RATIO, QUERY_HEADER,
};
pub use state::{
    transition, Action, AdvisorySession, AdvisoryState, TransitionConfig, UiEvent, UiEventKind,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdvisorError {
    #[error("prompt needs {tokens} estimated tokens even without manual excerpts; budget is {budget}")]
    BudgetExceeded { tokens: usize, budget: usize },
    #[error("turn of {tokens} estimated tokens cannot fit; {available} available beside the system turn")]
    TurnTooLarge { tokens: usize, available: usize },
    #[error("only the initial turn may have the system role")]
    SystemTurnAppend,
    #[error("message list must end with a user turn")]
    MissingUserTurn,
    #[error(transparent)]
    Backend(#[from] BackendError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdvisoryResponse {
    pub text: String,
    pub created_at: u64,
    pub source_state: AdvisoryState,
    pub attempts: u32,
}

pub fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

/// Sends an assembled message list and records the exchange in `context`.
///
/// The last message must be the USER turn produced by [`assemble_prompt`]. A
/// reply too long to keep in the context is stored truncated; the returned
/// response always carries the full text.
pub async fn generate(
    messages: &[ChatMessage],
    client: &dyn ChatClient,
    context: &mut ConversationContext,
    source_state: AdvisoryState,
) -> Result<AdvisoryResponse, AdvisorError> {
    let user_turn = match messages.last() {
        Some(m) if m.role == Role::User => m.clone(),
        _ => return Err(AdvisorError::MissingUserTurn),
    };
    let reply = client.complete(messages).await?;
    if reply.text.trim().is_empty() {
        return Err(BackendError::InvalidResponse("empty completion".into()).into());
    }
    context.manage_context(user_turn)?;
    let available_chars = context.available_for_turns() * 4;
    let stored = if reply.text.chars().count() > available_chars {
        warn!(available_chars, "reply exceeds context budget; storing a truncated copy");
        reply.text.chars().take(available_chars).collect()
    } else {
        reply.text.clone()
    };
    context.manage_context(ChatMessage::assistant(stored))?;
    Ok(AdvisoryResponse {
        text: reply.text,
        created_at: now_ms(),
        source_state,
        attempts: reply.attempts,
    })
}

use serde::{Deserialize, Serialize};

use super::AdvisorError;

pub const DEFAULT_TOKEN_BUDGET: usize = 6000;

/// Tokenizer-independent estimate: one token per four characters, rounded up.
pub fn estimate_tokens(text: &str) -> usize {
    text.chars().count().div_ceil(4)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self { role: Role::System, content: content.into() }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self { role: Role::User, content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self { role: Role::Assistant, content: content.into() }
    }

    pub fn estimated_tokens(&self) -> usize {
        estimate_tokens(&self.content)
    }
}

/// Conversation history sent with every request: one leading SYSTEM turn
/// followed by user/assistant turns, kept within a token budget.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConversationContext {
    turns: Vec<ChatMessage>,
    token_budget: usize,
}

impl ConversationContext {
    pub fn new(system_text: impl Into<String>, token_budget: usize) -> Result<Self, AdvisorError> {
        let system = ChatMessage::system(system_text);
        let tokens = system.estimated_tokens();
        if tokens > token_budget {
            return Err(AdvisorError::TurnTooLarge { tokens, available: token_budget });
        }
        Ok(Self { turns: vec![system], token_budget })
    }

    pub fn turns(&self) -> &[ChatMessage] {
        &self.turns
    }

    pub fn system_text(&self) -> &str {
        &self.turns[0].content
    }

    pub fn token_budget(&self) -> usize {
        self.token_budget
    }

    pub fn estimated_tokens(&self) -> usize {
        self.turns.iter().map(ChatMessage::estimated_tokens).sum()
    }

    /// Tokens left for non-system turns.
    pub fn available_for_turns(&self) -> usize {
        self.token_budget - self.turns[0].estimated_tokens()
    }

    /// Drops everything but the SYSTEM turn.
    pub fn clear(&mut self) {
        self.turns.truncate(1);
    }

    /// Appends a user or assistant turn, then evicts the oldest exchanges
    /// (a user turn together with the assistant reply that follows it) until
    /// the estimate is back within budget. The SYSTEM turn and the new turn
    /// are never evicted.
    pub fn manage_context(&mut self, turn: ChatMessage) -> Result<(), AdvisorError> {
        if turn.role == Role::System {
            return Err(AdvisorError::SystemTurnAppend);
        }
        let tokens = turn.estimated_tokens();
        let available = self.available_for_turns();
        if tokens > available {
            return Err(AdvisorError::TurnTooLarge { tokens, available });
        }
        self.turns.push(turn);
        while self.estimated_tokens() > self.token_budget {
            // Index 1 is the oldest non-system turn; the last turn is the new one.
            let last = self.turns.len() - 1;
            debug_assert!(last > 1);
            let pair = self.turns[1].role == Role::User
                && last > 2
                && self.turns[2].role == Role::Assistant;
            self.turns.drain(1..if pair { 3 } else { 2 });
        }
        Ok(())
    }
}

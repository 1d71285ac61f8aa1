use serde::{Deserialize, Serialize};
use tracing::info;

use crate::telemetry::TriggerEvent;

use super::context::ConversationContext;
use super::AdvisoryResponse;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum AdvisoryState {
    Armed,
    Active,
    Interactive,
}

impl AdvisoryState {
    pub const ALL: [AdvisoryState; 3] = [Self::Armed, Self::Active, Self::Interactive];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Armed => "ARMED",
            Self::Active => "ACTIVE",
            Self::Interactive => "INTERACTIVE",
        }
    }
}

impl std::fmt::Display for AdvisoryState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum UiEvent {
    QueryButton,
    ArmButton,
    SubmitText(String),
    MasterAlert(Box<TriggerEvent>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum UiEventKind {
    QueryButton,
    ArmButton,
    SubmitText,
    MasterAlert,
}

impl UiEventKind {
    pub const ALL: [UiEventKind; 4] = [Self::QueryButton, Self::ArmButton, Self::SubmitText, Self::MasterAlert];
}

impl UiEvent {
    /// A submit event; `None` when the text is blank.
    pub fn submit(text: impl Into<String>) -> Option<Self> {
        let text = text.into();
        (!text.trim().is_empty()).then_some(UiEvent::SubmitText(text))
    }

    pub fn kind(&self) -> UiEventKind {
        match self {
            UiEvent::QueryButton => UiEventKind::QueryButton,
            UiEvent::ArmButton => UiEventKind::ArmButton,
            UiEvent::SubmitText(_) => UiEventKind::SubmitText,
            UiEvent::MasterAlert(_) => UiEventKind::MasterAlert,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Action {
    None,
    GenerateAdvisory,
    GenerateReply,
    ClearContext,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionConfig {
    /// Stay INTERACTIVE on submit instead of the drawn INTERACTIVE -> ARMED edge.
    pub interactive_sticky: bool,
    /// Let a master alert force ACTIVE from ACTIVE or INTERACTIVE.
    pub alert_preempts: bool,
}

impl Default for TransitionConfig {
    fn default() -> Self {
        Self {
            interactive_sticky: true,
            alert_preempts: false,
        }
    }
}

/// The advisory state table. Total over all state/event pairs; pairs with no
/// edge leave the state unchanged with [`Action::None`].
pub fn transition(state: AdvisoryState, event: UiEventKind, cfg: TransitionConfig) -> (AdvisoryState, Action) {
    use AdvisoryState::*;
    use UiEventKind::*;
    match (state, event) {
        (Armed, QueryButton) | (Armed, MasterAlert) => (Active, Action::GenerateAdvisory),
        (Armed, SubmitText) => (Interactive, Action::GenerateReply),
        (Active, ArmButton) => (Armed, Action::ClearContext),
        (Active, QueryButton) => (Active, Action::GenerateAdvisory),
        (Active, SubmitText) => (Interactive, Action::GenerateReply),
        (Interactive, QueryButton) => (Active, Action::GenerateAdvisory),
        (Interactive, SubmitText) if cfg.interactive_sticky => (Interactive, Action::GenerateReply),
        (Interactive, SubmitText) => (Armed, Action::GenerateReply),
        (Active | Interactive, MasterAlert) if cfg.alert_preempts => (Active, Action::GenerateAdvisory),
        (s, _) => (s, Action::None),
    }
}

/// One cockpit's advisory session: current state, conversation and the last
/// response shown.
#[derive(Debug, Clone)]
pub struct AdvisorySession {
    pub state: AdvisoryState,
    pub context: ConversationContext,
    pub last_response: Option<AdvisoryResponse>,
    pub config: TransitionConfig,
}

impl AdvisorySession {
    pub fn new(context: ConversationContext, config: TransitionConfig) -> Self {
        Self {
            state: AdvisoryState::Armed,
            context,
            last_response: None,
            config,
        }
    }

    /// Applies an event. Context clearing is performed here; generation
    /// actions are returned for the caller to run.
    pub fn apply(&mut self, event: &UiEvent) -> Action {
        let (next, action) = transition(self.state, event.kind(), self.config);
        if let UiEvent::MasterAlert(alert) = event {
            if action == Action::None {
                info!(state = %self.state, kind = ?alert.kind, "master alert ignored outside ARMED");
            }
        }
        if action == Action::ClearContext {
            self.context.clear();
            self.last_response = None;
        }
        self.state = next;
        action
    }
}

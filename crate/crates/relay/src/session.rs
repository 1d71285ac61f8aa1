//! The single advisory session, run as an actor: events are applied strictly
//! in arrival order, at most one generation is in flight, and every state
//! change is fanned out to subscribers as numbered push frames.

use std::sync::Arc;

use leraat_core::advisor::{
    assemble_prompt, generate, Action, AdvisoryResponse, AdvisorySession, AdvisoryState,
    ChatClient, ConversationContext, UiEvent,
};
use leraat_core::telemetry::{EcamMessage, FlightState, TelemetryStore};
use serde::{Deserialize, Serialize};
use tokio::sync::{mpsc, oneshot};
use tokio::task::JoinHandle;
use tracing::{debug, info, warn};

use crate::resources::SharedResources;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FrameKind {
    StateChanged,
    Advisory,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PushFrame {
    pub kind: FrameKind,
    pub state: AdvisoryState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    pub seq: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EventOutcome {
    pub state: AdvisoryState,
    /// A generation is running after this event.
    pub pending: bool,
    #[serde(skip)]
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SessionSnapshot {
    pub state: AdvisoryState,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub last_advisory: Option<String>,
    pub seq: u64,
    #[serde(skip)]
    pub pending: bool,
    #[serde(skip)]
    pub context: ConversationContext,
}

type GenerationResult = Result<(AdvisoryResponse, ConversationContext), String>;

enum Command {
    Event(UiEvent, oneshot::Sender<EventOutcome>),
    Subscribe(oneshot::Sender<mpsc::UnboundedReceiver<PushFrame>>),
    Snapshot(oneshot::Sender<SessionSnapshot>),
    GenerationDone(u64, GenerationResult),
}

#[derive(Debug, thiserror::Error)]
#[error("advisory session has stopped")]
pub struct SessionClosed;

/// Cloneable handle to the session actor.
#[derive(Clone)]
pub struct SessionHandle {
    tx: mpsc::UnboundedSender<Command>,
}

impl SessionHandle {
    pub async fn event(&self, event: UiEvent) -> Result<EventOutcome, SessionClosed> {
        let (tx, rx) = oneshot::channel();
        self.tx.send(Command::Event(event, tx)).map_err(|_| SessionClosed)?;
        rx.await.map_err(|_| SessionClosed)
    }

    /// Enqueues an event without waiting for it to be applied.
    pub fn post(&self, event: UiEvent) -> Result<(), SessionClosed> {
        let (tx, _rx) = oneshot::channel();
        self.tx.send(Command::Event(event, tx)).map_err(|_| SessionClosed)
    }

    /// A frame stream starting with a STATE_CHANGED snapshot of the current
    /// state.
    pub async fn subscribe(&self) -> Result<mpsc::UnboundedReceiver<PushFrame>, SessionClosed> {
        let (tx, rx) = oneshot::channel();
        self.tx.send(Command::Subscribe(tx)).map_err(|_| SessionClosed)?;
        rx.await.map_err(|_| SessionClosed)
    }

    pub async fn snapshot(&self) -> Result<SessionSnapshot, SessionClosed> {
        let (tx, rx) = oneshot::channel();
        self.tx.send(Command::Snapshot(tx)).map_err(|_| SessionClosed)?;
        rx.await.map_err(|_| SessionClosed)
    }
}

struct Actor {
    session: AdvisorySession,
    seq: u64,
    subscribers: Vec<mpsc::UnboundedSender<PushFrame>>,
    inflight: Option<(u64, JoinHandle<()>)>,
    next_generation: u64,
    telemetry: Arc<TelemetryStore>,
    resources: SharedResources,
    client: Arc<dyn ChatClient>,
    tx: mpsc::WeakUnboundedSender<Command>,
}

/// Starts the actor on the current runtime.
pub fn spawn_session(
    session: AdvisorySession,
    telemetry: Arc<TelemetryStore>,
    resources: SharedResources,
    client: Arc<dyn ChatClient>,
) -> SessionHandle {
    let (tx, mut rx) = mpsc::unbounded_channel();
    let mut actor = Actor {
        session,
        seq: 0,
        subscribers: Vec::new(),
        inflight: None,
        next_generation: 0,
        telemetry,
        resources,
        client,
        tx: tx.downgrade(),
    };
    tokio::spawn(async move {
        while let Some(cmd) = rx.recv().await {
            actor.handle(cmd);
        }
        actor.cancel_generation();
    });
    SessionHandle { tx }
}

impl Actor {
    fn handle(&mut self, cmd: Command) {
        match cmd {
            Command::Event(event, reply) => {
                let outcome = self.on_event(event);
                let _ = reply.send(outcome);
            }
            Command::Subscribe(reply) => {
                let (tx, rx) = mpsc::unbounded_channel();
                let hello = PushFrame {
                    kind: FrameKind::StateChanged,
                    state: self.session.state,
                    text: None,
                    seq: self.seq,
                };
                if tx.send(hello).is_ok() && reply.send(rx).is_ok() {
                    self.subscribers.push(tx);
                }
            }
            Command::Snapshot(reply) => {
                let _ = reply.send(SessionSnapshot {
                    state: self.session.state,
                    last_advisory: self.session.last_response.as_ref().map(|r| r.text.clone()),
                    seq: self.seq,
                    pending: self.inflight.is_some(),
                    context: self.session.context.clone(),
                });
            }
            Command::GenerationDone(id, result) => self.on_generation_done(id, result),
        }
    }

    fn emit(&mut self, kind: FrameKind, text: Option<String>) {
        self.seq += 1;
        let frame = PushFrame { kind, state: self.session.state, text, seq: self.seq };
        self.subscribers.retain(|s| s.send(frame.clone()).is_ok());
    }

    fn on_event(&mut self, event: UiEvent) -> EventOutcome {
        let before = self.session.state;
        let action = self.session.apply(&event);
        debug!(from = %before, to = %self.session.state, ?action, "event applied");
        if action == Action::ClearContext {
            self.cancel_generation();
        }
        if self.session.state != before {
            self.emit(FrameKind::StateChanged, None);
        }
        if matches!(action, Action::GenerateAdvisory | Action::GenerateReply) {
            self.start_generation(event);
        }
        EventOutcome {
            state: self.session.state,
            pending: self.inflight.is_some(),
            action,
        }
    }

    fn cancel_generation(&mut self) {
        if let Some((id, handle)) = self.inflight.take() {
            debug!(id, "generation superseded");
            handle.abort();
        }
    }

    fn start_generation(&mut self, event: UiEvent) {
        self.cancel_generation();
        self.next_generation += 1;
        let id = self.next_generation;
        let (flight, ecam, user_text) = match event {
            UiEvent::MasterAlert(trigger) => (Some(trigger.snapshot), trigger.ecam, None),
            other => {
                let (flight, ecam) = match self.telemetry.latest_state() {
                    Some((f, e)) => (Some(f), e),
                    None => (None, Vec::new()),
                };
                let text = match other {
                    UiEvent::SubmitText(t) => Some(t),
                    _ => None,
                };
                (flight, ecam, text)
            }
        };
        let job = Generation {
            resources: self.resources.clone(),
            client: self.client.clone(),
            context: self.session.context.clone(),
            source_state: self.session.state,
            flight,
            ecam,
            user_text,
        };
        let done = self.tx.clone();
        let handle = tokio::spawn(async move {
            let result = job.run().await;
            if let Some(tx) = done.upgrade() {
                let _ = tx.send(Command::GenerationDone(id, result));
            }
        });
        self.inflight = Some((id, handle));
    }

    fn on_generation_done(&mut self, id: u64, result: GenerationResult) {
        match &self.inflight {
            Some((current, _)) if *current == id => self.inflight = None,
            _ => {
                debug!(id, "stale generation result dropped");
                return;
            }
        }
        match result {
            Ok((response, context)) => {
                info!(attempts = response.attempts, chars = response.text.len(), "advisory ready");
                self.session.context = context;
                let text = response.text.clone();
                self.session.last_response = Some(response);
                self.emit(FrameKind::Advisory, Some(text));
            }
            Err(reason) => {
                warn!(%reason, "generation failed");
                self.emit(FrameKind::Error, Some(reason));
            }
        }
    }
}

struct Generation {
    resources: SharedResources,
    client: Arc<dyn ChatClient>,
    context: ConversationContext,
    source_state: AdvisoryState,
    flight: Option<FlightState>,
    ecam: Vec<EcamMessage>,
    user_text: Option<String>,
}

impl Generation {
    async fn run(mut self) -> GenerationResult {
        let resources = self.resources.clone();
        let (flight, ecam, text) = (self.flight.clone(), self.ecam.clone(), self.user_text.clone());
        let gathered = tokio::task::spawn_blocking(move || {
            resources.gather(flight.as_ref(), &ecam, text.as_deref())
        })
        .await
        .map_err(|e| format!("retrieval task failed: {e}"))?;
        let (_bundle, messages) = assemble_prompt(
            self.flight.as_ref(),
            &self.ecam,
            &gathered.retrieved,
            &gathered.alternates,
            &self.context,
            self.user_text.as_deref(),
        )
        .map_err(|e| e.to_string())?;
        let response = generate(&messages, self.client.as_ref(), &mut self.context, self.source_state)
            .await
            .map_err(|e| e.to_string())?;
        Ok((response, self.context))
    }
}

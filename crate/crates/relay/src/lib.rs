//! The relay service: telemetry ingestion, the advisory session and the push
//! stream behind one HTTP listener.

pub mod config;
pub mod index_cli;
pub mod resources;
pub mod server;
pub mod session;

use std::net::SocketAddr;
use std::sync::Arc;

use leraat_core::advisor::{
    AdvisorError, AdvisorySession, BackendError, ChatClient, ConversationContext, MockChatClient,
    RemoteChatClient, RemoteChatConfig,
};
use leraat_core::airports::AirportDbError;
use leraat_core::retrieval::RetrievalError;
use leraat_core::telemetry::TelemetryStore;
use thiserror::Error;
use tokio::net::TcpListener;
use tokio::sync::{oneshot, watch};
use tokio::task::JoinHandle;
use tracing::info;

pub use config::{ConfigError, EmbedderKind, LlmBackend, ServerConfig};
pub use resources::{Gathered, Resources};
pub use server::{router, AppState, VERSION};
pub use session::{spawn_session, EventOutcome, FrameKind, PushFrame, SessionHandle, SessionSnapshot};

#[derive(Debug, Error)]
pub enum RelayError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error(transparent)]
    Airports(#[from] AirportDbError),
    #[error("weather source: {0}")]
    Weather(String),
    #[error(transparent)]
    Advisor(#[from] AdvisorError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("port in use: {0}")]
    PortInUse(SocketAddr),
    #[error("cannot listen on {addr}: {reason}")]
    Bind { addr: SocketAddr, reason: String },
}

/// Chat backend selected by `llm.backend`.
pub fn chat_client_for(config: &ServerConfig) -> Result<Arc<dyn ChatClient>, RelayError> {
    Ok(match config.llm.backend {
        LlmBackend::Mock => Arc::new(MockChatClient::new()),
        LlmBackend::Remote => Arc::new(RemoteChatClient::new(RemoteChatConfig {
            base_url: config.llm.base_url.clone().unwrap_or_default(),
            model: config.llm.model.clone().unwrap_or_default(),
            api_key: config.llm.api_key.clone(),
            timeout_secs: config.llm.timeout_secs,
            retry: config.retry_policy(),
        })?),
    })
}

/// A relay accepting connections on [`RunningRelay::addr`].
pub struct RunningRelay {
    pub addr: SocketAddr,
    pub session: SessionHandle,
    pub telemetry: Arc<TelemetryStore>,
    shutdown: Option<oneshot::Sender<()>>,
    task: JoinHandle<std::io::Result<()>>,
}

impl RunningRelay {
    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Stops accepting connections and waits for the server task.
    pub async fn shutdown(mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        let _ = (&mut self.task).await;
    }

    /// Runs until the server task ends.
    pub async fn wait(self) -> std::io::Result<()> {
        let _keep = self.shutdown;
        self.task.await.unwrap_or_else(|e| Err(std::io::Error::other(e)))
    }
}

/// Binds the configured address and starts the session actor and HTTP server
/// on the current runtime. `resources` come from [`Resources::prepare`].
pub async fn start(
    config: &ServerConfig,
    resources: Arc<Resources>,
    client: Arc<dyn ChatClient>,
) -> Result<RunningRelay, RelayError> {
    let addr = config.listen_addr()?;
    let listener = TcpListener::bind(addr).await.map_err(|e| match e.kind() {
        std::io::ErrorKind::AddrInUse => RelayError::PortInUse(addr),
        _ => RelayError::Bind { addr, reason: e.to_string() },
    })?;
    let addr = listener.local_addr().map_err(|e| RelayError::Bind { addr, reason: e.to_string() })?;

    let context = ConversationContext::new(config.advisor.system_prompt.clone(), config.advisor.token_budget)?;
    let telemetry = Arc::new(TelemetryStore::new());
    let session = spawn_session(
        AdvisorySession::new(context, config.transition_config()),
        telemetry.clone(),
        resources,
        client,
    );
    let (close_tx, close_rx) = watch::channel(false);
    let app = router(
        AppState { telemetry: telemetry.clone(), session: session.clone(), closing: close_rx },
        config.server.ui_dir.clone(),
    );
    let (tx, rx) = oneshot::channel::<()>();
    let task = tokio::spawn(async move {
        axum::serve(listener, app)
            .with_graceful_shutdown(async move {
                let _ = rx.await;
                let _ = close_tx.send(true);
            })
            .await
    });
    info!(%addr, version = VERSION, "relay listening");
    Ok(RunningRelay { addr, session, telemetry, shutdown: Some(tx), task })
}

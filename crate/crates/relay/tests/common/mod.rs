#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use futures::StreamExt;
use leraat_core::advisor::{ChatClient, MockChatClient};
use leraat_relay::{start, PushFrame, Resources, RunningRelay, ServerConfig};
use tempfile::TempDir;

pub fn data(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(rel)
}

/// Config over the bundled data with a private index file and an ephemeral
/// port.
pub fn test_config(dir: &TempDir) -> ServerConfig {
    let mut cfg = ServerConfig::default();
    cfg.server.listen = "127.0.0.1:0".into();
    cfg.retrieval.corpus_dir = data("corpus");
    cfg.retrieval.index_path = dir.path().join("index.json");
    cfg.airports.db_path = data("airports.csv");
    cfg.weather.metar_file = Some(data("metar.txt"));
    cfg
}

pub struct Harness {
    pub relay: RunningRelay,
    pub mock: MockChatClient,
    pub http: reqwest::Client,
    pub config: ServerConfig,
    _dir: TempDir,
}

impl Harness {
    pub async fn start() -> Self {
        Self::with(|_| {}).await
    }

    pub async fn with(adjust: impl FnOnce(&mut ServerConfig)) -> Self {
        let mock = MockChatClient::new();
        Self::with_client(adjust, Arc::new(mock.clone()), mock).await
    }

    pub async fn with_client(
        adjust: impl FnOnce(&mut ServerConfig),
        client: Arc<dyn ChatClient>,
        mock: MockChatClient,
    ) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let mut config = test_config(&dir);
        adjust(&mut config);
        config.validate().unwrap();
        let resources = Arc::new(Resources::prepare(&config, false).unwrap());
        let relay = start(&config, resources, client).await.unwrap();
        Harness { relay, mock, http: reqwest::Client::new(), config, _dir: dir }
    }

    pub fn url(&self, path: &str) -> String {
        format!("{}{path}", self.relay.base_url())
    }

    pub async fn post_telemetry(&self, body: String) -> reqwest::StatusCode {
        self.http
            .post(self.url("/api/v1/telemetry"))
            .header("content-type", "application/json")
            .body(body)
            .send()
            .await
            .unwrap()
            .status()
    }

    pub async fn event(&self, body: serde_json::Value) -> (reqwest::StatusCode, serde_json::Value) {
        let resp = self.http.post(self.url("/api/v1/event")).json(&body).send().await.unwrap();
        let status = resp.status();
        (status, resp.json().await.unwrap_or(serde_json::Value::Null))
    }

    pub async fn state(&self) -> serde_json::Value {
        self.http.get(self.url("/api/v1/state")).send().await.unwrap().json().await.unwrap()
    }

    pub async fn subscribe(&self) -> FrameStream {
        let resp = self.http.get(self.url("/api/v1/stream")).send().await.unwrap();
        assert_eq!(resp.status(), 200);
        assert!(resp.headers()["content-type"].to_str().unwrap().starts_with("text/event-stream"));
        FrameStream::from_response(resp)
    }
}

/// Minimal SSE reader yielding decoded push frames.
pub struct FrameStream {
    inner: std::pin::Pin<Box<dyn futures::Stream<Item = reqwest::Result<bytes::Bytes>> + Send>>,
    buf: String,
}

impl FrameStream {
    pub fn from_response(resp: reqwest::Response) -> Self {
        FrameStream { inner: Box::pin(resp.bytes_stream()), buf: String::new() }
    }

    pub async fn next(&mut self, within: Duration) -> Option<PushFrame> {
        tokio::time::timeout(within, self.next_frame()).await.ok().flatten()
    }

    async fn next_frame(&mut self) -> Option<PushFrame> {
        loop {
            while let Some(end) = self.buf.find("\n\n") {
                let block: String = self.buf.drain(..end + 2).collect();
                let data: Vec<&str> = block
                    .lines()
                    .filter_map(|l| l.strip_prefix("data:"))
                    .map(|d| d.strip_prefix(' ').unwrap_or(d))
                    .collect();
                if !data.is_empty() {
                    return Some(serde_json::from_str(&data.join("\n")).unwrap());
                }
            }
            let chunk = self.inner.next().await?.ok()?;
            self.buf.push_str(&String::from_utf8_lossy(&chunk));
        }
    }

    /// Frames until `within` passes without a new one.
    pub async fn drain(&mut self, within: Duration) -> Vec<PushFrame> {
        let mut out = Vec::new();
        while let Some(f) = self.next(within).await {
            out.push(f);
        }
        out
    }
}

pub fn snapshot_json(ts: u64, warning: bool, caution: bool, ecam: &[(&str, &str)]) -> String {
    let ecam: Vec<serde_json::Value> = ecam
        .iter()
        .map(|(sev, text)| serde_json::json!({"severity": sev, "text": text, "timestamp_ms": ts}))
        .collect();
    serde_json::json!({
        "timestamp_ms": ts,
        "latitude_deg": 47.62,
        "longitude_deg": -122.30,
        "altitude_ft": 3500.0,
        "indicated_airspeed_kt": 155.0,
        "heading_deg": 163.0,
        "vertical_speed_fpm": -800.0,
        "fuel_left_kg": 3000.0,
        "fuel_right_kg": 3000.0,
        "autopilot_mode": "AP1 APPR",
        "autothrottle_mode": "SPEED",
        "master_warning": warning,
        "master_caution": caution,
        "ecam": ecam,
    })
    .to_string()
}

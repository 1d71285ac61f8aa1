use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;
use tracing::warn;

use super::RetrievalError;
use crate::backoff::RetryPolicy;

pub const DEFAULT_LOCAL_DIM: usize = 256;

const LOCAL_ID_PREFIX: &str = "local-hash-v1/";
const HASH_SEED: u64 = 0x4c65_5241_4154_0001;
const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector {
    pub values: Vec<f32>,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f32>) -> Self {
        Self { values }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        self.values
            .iter()
            .map(|&v| f64::from(v) * f64::from(v))
            .sum::<f64>()
            .sqrt()
    }
}

pub fn cosine_similarity(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, RetrievalError> {
    if a.dim() != b.dim() {
        return Err(RetrievalError::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    let mut dot = 0.0f64;
    let mut norm_a = 0.0f64;
    let mut norm_b = 0.0f64;
    for (&x, &y) in a.values.iter().zip(&b.values) {
        let (x, y) = (f64::from(x), f64::from(y));
        dot += x * y;
        norm_a += x * x;
        norm_b += y * y;
    }
    if norm_a == 0.0 || norm_b == 0.0 {
        return Err(RetrievalError::ZeroVector);
    }
    Ok(dot / (norm_a.sqrt() * norm_b.sqrt()))
}

/// Source of embedding vectors for chunks and queries.
pub trait EmbeddingProvider: Send + Sync {
    /// Stable identifier recorded in an index; queries must use a provider
    /// with the same identifier.
    fn embedder_id(&self) -> String;

    fn embed(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, RetrievalError>;
}

/// Deterministic offline embedder: bag of lowercase alphanumeric tokens,
/// each hashed into one of `dim` buckets, L2-normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalHashEmbedder {
    dim: usize,
}

impl Default for LocalHashEmbedder {
    fn default() -> Self {
        Self { dim: DEFAULT_LOCAL_DIM }
    }
}

impl LocalHashEmbedder {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        Self { dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Recovers the embedder that produced an index, if it was a local one.
    pub fn from_embedder_id(id: &str) -> Option<Self> {
        let dim: usize = id.strip_prefix(LOCAL_ID_PREFIX)?.parse().ok()?;
        (dim > 0).then_some(Self { dim })
    }

    fn bucket(&self, token: &str) -> usize {
        let mut h = FNV_OFFSET ^ HASH_SEED;
        for b in token.bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(FNV_PRIME);
        }
        (h % self.dim as u64) as usize
    }

    fn embed_one(&self, text: &str) -> EmbeddingVector {
        let mut counts = vec![0.0f64; self.dim];
        let lower = text.to_lowercase();
        let mut any = false;
        for token in tokenize(&lower) {
            counts[self.bucket(token)] += 1.0;
            any = true;
        }
        if !any {
            // Token-free text (punctuation only) maps to the empty-token bucket
            // so every vector stays normalizable.
            counts[self.bucket("")] = 1.0;
        }
        let norm = counts.iter().map(|c| c * c).sum::<f64>().sqrt();
        EmbeddingVector::new(counts.iter().map(|c| (c / norm) as f32).collect())
    }
}

pub(crate) fn tokenize(lowercased: &str) -> impl Iterator<Item = &str> {
    lowercased
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
}

impl EmbeddingProvider for LocalHashEmbedder {
    fn embedder_id(&self) -> String {
        format!("{LOCAL_ID_PREFIX}{}", self.dim)
    }

    fn embed(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, RetrievalError> {
        if texts.is_empty() || texts.iter().any(|t| t.is_empty()) {
            return Err(RetrievalError::EmptyInput);
        }
        Ok(texts.iter().map(|t| self.embed_one(t)).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RemoteEmbedderConfig {
    pub base_url: String,
    pub model: String,
    #[serde(default)]
    pub api_key: Option<String>,
}

/// Client for a hosted embeddings endpoint:
/// `POST {"model", "input": [..]}` → `{"data": [{"embedding": [..]}, ..]}`.
pub struct RemoteEmbedder {
    config: RemoteEmbedderConfig,
    http: reqwest::blocking::Client,
    retry: RetryPolicy,
    batch_size: usize,
}

#[derive(Deserialize)]
struct EmbeddingsResponse {
    data: Vec<EmbeddingDatum>,
}

#[derive(Deserialize)]
struct EmbeddingDatum {
    embedding: Vec<f32>,
}

impl RemoteEmbedder {
    pub fn new(config: RemoteEmbedderConfig) -> Result<Self, RetrievalError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(60))
            .build()
            .map_err(|e| RetrievalError::ProviderUnavailable(e.to_string()))?;
        Ok(Self {
            config,
            http,
            retry: RetryPolicy::default(),
            batch_size: 64,
        })
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    fn url(&self) -> String {
        let base = self.config.base_url.trim_end_matches('/');
        if base.ends_with("/embeddings") {
            base.to_string()
        } else {
            format!("{base}/embeddings")
        }
    }

    fn embed_batch(&self, batch: &[&str]) -> Result<Vec<EmbeddingVector>, RetrievalError> {
        let body = json!({ "model": self.config.model, "input": batch });
        let mut attempt = 0;
        loop {
            attempt += 1;
            let mut req = self.http.post(self.url()).json(&body);
            if let Some(key) = &self.config.api_key {
                req = req.bearer_auth(key);
            }
            let outcome = match req.send() {
                Ok(resp) if resp.status().is_success() => {
                    let parsed: EmbeddingsResponse = resp
                        .json()
                        .map_err(|e| RetrievalError::ProviderUnavailable(format!("bad response body: {e}")))?;
                    if parsed.data.len() != batch.len() {
                        return Err(RetrievalError::ProviderUnavailable(format!(
                            "expected {} embeddings, got {}",
                            batch.len(),
                            parsed.data.len()
                        )));
                    }
                    return Ok(parsed
                        .data
                        .into_iter()
                        .map(|d| EmbeddingVector::new(d.embedding))
                        .collect());
                }
                Ok(resp) => format!("status {}", resp.status()),
                Err(e) => e.to_string(),
            };
            if attempt >= self.retry.max_attempts {
                return Err(RetrievalError::ProviderUnavailable(format!(
                    "{outcome} after {attempt} attempts"
                )));
            }
            warn!(attempt, error = %outcome, "embedding request failed, retrying");
            std::thread::sleep(self.retry.delay_for(attempt));
        }
    }
}

impl EmbeddingProvider for RemoteEmbedder {
    fn embedder_id(&self) -> String {
        format!("remote/{}", self.config.model)
    }

    fn embed(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, RetrievalError> {
        if texts.is_empty() || texts.iter().any(|t| t.is_empty()) {
            return Err(RetrievalError::EmptyInput);
        }
        let mut out = Vec::with_capacity(texts.len());
        for batch in texts.chunks(self.batch_size) {
            out.extend(self.embed_batch(batch)?);
        }
        if let Some(first) = out.first() {
            let dim = first.dim();
            if dim == 0 || out.iter().any(|v| v.dim() != dim) {
                return Err(RetrievalError::ProviderUnavailable(
                    "provider returned inconsistent embedding dimensions".to_string(),
                ));
            }
        }
        Ok(out)
    }
}

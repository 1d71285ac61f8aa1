//! Retrieval substrate: overlapping character chunking, pluggable embedding
//! providers, and an exact (flat) cosine-similarity index with JSON
//! persistence.

mod chunk;
mod embed;
mod index;

use std::path::PathBuf;

use thiserror::Error;

pub use chunk::{chunk_document, reassemble, ChunkParams, DocumentChunk, DEFAULT_CHUNK_SIZE, DEFAULT_OVERLAP};
pub use embed::{
    cosine_similarity, EmbeddingProvider, EmbeddingVector, LocalHashEmbedder, RemoteEmbedder,
    RemoteEmbedderConfig, DEFAULT_LOCAL_DIM,
};
pub use index::{
    build_index, load_index, query_top_k, save_index, IndexBuilder, IndexEntry, ScoredChunk,
    VectorIndex, DEFAULT_TOP_K, INDEX_FORMAT_VERSION,
};

#[derive(Debug, Error, PartialEq)]
pub enum RetrievalError {
    #[error("invalid chunk parameters: chunk_size={chunk_size}, overlap={overlap} (need chunk_size > overlap >= 0)")]
    InvalidChunkParams { chunk_size: usize, overlap: usize },
    #[error("vector dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("cosine similarity is undefined for a zero vector")]
    ZeroVector,
    #[error("embedding input is empty")]
    EmptyInput,
    #[error("embedding provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("corpus {0} contains no .txt or .md files")]
    EmptyCorpus(PathBuf),
    #[error("unreadable corpus files: {}", .0.iter().map(|(p, e)| format!("{} ({e})", p.display())).collect::<Vec<_>>().join(", "))]
    UnreadableFiles(Vec<(PathBuf, String)>),
    #[error("index was built with embedder `{index}` but the query provider is `{provider}`")]
    EmbedderMismatch { index: String, provider: String },
    #[error("k must be at least 1")]
    InvalidK,
    #[error("unsupported index file version {0}")]
    UnsupportedVersion(u64),
    #[error("corrupt index file: {0}")]
    CorruptIndex(String),
    #[error("index I/O error: {0}")]
    Io(String),
}

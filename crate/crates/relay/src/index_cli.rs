//! `leraat-index`: build a manual index from a corpus directory and query it.

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use leraat_core::retrieval::{
    build_index, load_index, query_top_k, save_index, ChunkParams, EmbeddingProvider,
    LocalHashEmbedder, RemoteEmbedder, RemoteEmbedderConfig, RetrievalError, ScoredChunk,
    DEFAULT_CHUNK_SIZE, DEFAULT_LOCAL_DIM, DEFAULT_OVERLAP, DEFAULT_TOP_K,
};

#[derive(Debug, Parser)]
#[command(name = "leraat-index", version, about = "Build and query the manual excerpt index")]
pub struct IndexCli {
    #[command(subcommand)]
    pub command: IndexCommand,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EmbedderArg {
    Local,
    Remote,
}

#[derive(Debug, clap::Args)]
pub struct RemoteArgs {
    /// Embeddings endpoint base URL (remote embedder only).
    #[arg(long, env = "LERAAT_RETRIEVAL_REMOTE_BASE_URL")]
    pub remote_url: Option<String>,
    #[arg(long, env = "LERAAT_RETRIEVAL_REMOTE_MODEL")]
    pub remote_model: Option<String>,
    #[arg(long, env = "LERAAT_RETRIEVAL_REMOTE_API_KEY", hide_env_values = true)]
    pub remote_api_key: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum IndexCommand {
    /// Chunk and embed every .txt/.md file below a directory.
    Ingest {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        index: PathBuf,
        #[arg(long, default_value_t = DEFAULT_CHUNK_SIZE)]
        chunk_size: usize,
        #[arg(long, default_value_t = DEFAULT_OVERLAP)]
        overlap: usize,
        #[arg(long, value_enum, default_value_t = EmbedderArg::Local)]
        embedder: EmbedderArg,
        /// Dimension of the local embedder.
        #[arg(long, default_value_t = DEFAULT_LOCAL_DIM)]
        dim: usize,
        #[command(flatten)]
        remote: RemoteArgs,
    },
    /// Print the best matching chunks for a query.
    Search {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        query: String,
        #[arg(long, default_value_t = DEFAULT_TOP_K)]
        k: usize,
        #[command(flatten)]
        remote: RemoteArgs,
    },
}

fn remote_embedder(remote: &RemoteArgs, model_hint: Option<&str>) -> Result<RemoteEmbedder, RetrievalError> {
    let base_url = remote.remote_url.clone().ok_or_else(|| {
        RetrievalError::ProviderUnavailable("--remote-url is required for the remote embedder".into())
    })?;
    let model = remote
        .remote_model
        .clone()
        .or_else(|| model_hint.map(str::to_string))
        .ok_or_else(|| RetrievalError::ProviderUnavailable("--remote-model is required".into()))?;
    RemoteEmbedder::new(RemoteEmbedderConfig { base_url, model, api_key: remote.remote_api_key.clone() })
}

/// Tab-separated rank, score (4 decimals), doc_id and chunk_index.
pub fn format_hits(hits: &[ScoredChunk]) -> Vec<String> {
    hits.iter()
        .enumerate()
        .map(|(i, h)| format!("{}\t{:.4}\t{}\t{}", i + 1, h.score, h.chunk.doc_id, h.chunk.chunk_index))
        .collect()
}

/// Runs a parsed command and returns the lines to print.
pub fn run(cli: IndexCli) -> Result<Vec<String>, RetrievalError> {
    match cli.command {
        IndexCommand::Ingest { corpus, index, chunk_size, overlap, embedder, dim, remote } => {
            let params = ChunkParams::new(chunk_size, overlap)?;
            let provider: Box<dyn EmbeddingProvider> = match embedder {
                EmbedderArg::Local => {
                    if dim == 0 {
                        return Err(RetrievalError::DimensionMismatch { expected: 1, got: 0 });
                    }
                    Box::new(LocalHashEmbedder::new(dim))
                }
                EmbedderArg::Remote => Box::new(remote_embedder(&remote, None)?),
            };
            let built = build_index(&corpus, params, provider.as_ref())?;
            save_index(&built, &index)?;
            let docs: std::collections::BTreeSet<&str> =
                built.entries().iter().map(|e| e.chunk.doc_id.as_str()).collect();
            Ok(vec![format!(
                "indexed {} chunks from {} documents into {} ({}, dim {})",
                built.len(),
                docs.len(),
                index.display(),
                built.embedder_id(),
                built.dim()
            )])
        }
        IndexCommand::Search { index, query, k, remote } => {
            let loaded = load_index(&index)?;
            let id = loaded.embedder_id().to_string();
            let provider: Box<dyn EmbeddingProvider> = match LocalHashEmbedder::from_embedder_id(&id) {
                Some(local) => Box::new(local),
                None => Box::new(remote_embedder(&remote, id.strip_prefix("remote/"))?),
            };
            let hits = query_top_k(&loaded, &query, k, provider.as_ref())?;
            Ok(format_hits(&hits))
        }
    }
}

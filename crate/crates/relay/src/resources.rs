//! Everything a generation needs besides the conversation: the manual index,
//! the airport database and the weather source.

use std::sync::Arc;

use leraat_core::advisor::build_retrieval_query;
use leraat_core::airports::{
    attach_weather, load_airport_db, nearby_airports, AirportDb, AlternateCandidate,
    AlternateParams, FileMetarSource, LatLon, MetarSource, RemoteMetarSource,
};
use leraat_core::retrieval::{
    build_index, load_index, query_top_k, save_index, EmbeddingProvider, LocalHashEmbedder,
    RemoteEmbedder, RemoteEmbedderConfig, RetrievalError, ScoredChunk, VectorIndex,
};
use leraat_core::telemetry::{EcamMessage, FlightState};
use tracing::{info, warn};

use crate::config::{EmbedderKind, ServerConfig};
use crate::RelayError;

pub struct Resources {
    pub index: VectorIndex,
    pub embedder: Box<dyn EmbeddingProvider>,
    pub airports: AirportDb,
    pub metar: Option<Box<dyn MetarSource>>,
    pub alternates: AlternateParams,
    pub k: usize,
}

/// Inputs gathered for one prompt.
#[derive(Debug, Clone, Default)]
pub struct Gathered {
    pub query: String,
    pub retrieved: Vec<ScoredChunk>,
    pub alternates: Vec<AlternateCandidate>,
}

pub fn embedder_for(config: &ServerConfig) -> Result<Box<dyn EmbeddingProvider>, RelayError> {
    let r = &config.retrieval;
    Ok(match r.embedder {
        EmbedderKind::Local => Box::new(LocalHashEmbedder::new(r.local_dim)),
        EmbedderKind::Remote => Box::new(RemoteEmbedder::new(RemoteEmbedderConfig {
            base_url: r.remote_base_url.clone().unwrap_or_default(),
            model: r.remote_model.clone().unwrap_or_default(),
            api_key: r.remote_api_key.clone(),
        })?),
    })
}

impl Resources {
    /// Loads (or builds) the index and the airport/weather data named by a
    /// validated config. Blocking; call outside the async runtime or from
    /// `spawn_blocking`.
    pub fn prepare(config: &ServerConfig, rebuild_index: bool) -> Result<Self, RelayError> {
        let embedder = embedder_for(config)?;
        let r = &config.retrieval;
        let index = if !rebuild_index && r.index_path.is_file() {
            let index = load_index(&r.index_path)?;
            info!(path = %r.index_path.display(), entries = index.len(), "index loaded");
            index
        } else {
            let index = build_index(&r.corpus_dir, config.chunk_params()?, embedder.as_ref())?;
            save_index(&index, &r.index_path)?;
            info!(path = %r.index_path.display(), entries = index.len(), "index built");
            index
        };
        let provider = embedder.embedder_id();
        if provider != index.embedder_id() {
            return Err(RetrievalError::EmbedderMismatch {
                index: index.embedder_id().to_string(),
                provider,
            }
            .into());
        }

        let airports = load_airport_db(&config.airports.db_path)?;
        let metar: Option<Box<dyn MetarSource>> = match (&config.weather.metar_file, &config.weather.metar_url) {
            (Some(path), _) => Some(Box::new(FileMetarSource::load(path).map_err(|e| {
                RelayError::Weather(format!("{}: {e}", path.display()))
            })?)),
            (None, Some(url)) => Some(Box::new(
                RemoteMetarSource::new(url.clone()).map_err(|e| RelayError::Weather(e.to_string()))?,
            )),
            (None, None) => None,
        };
        Ok(Self {
            index,
            embedder,
            airports,
            metar,
            alternates: config.alternate_params(),
            k: r.k,
        })
    }

    /// Retrieval and alternate selection for one prompt. Failures degrade to
    /// empty sections.
    pub fn gather(
        &self,
        flight: Option<&FlightState>,
        ecam: &[EcamMessage],
        user_text: Option<&str>,
    ) -> Gathered {
        let query = build_retrieval_query(flight, ecam, user_text);
        let retrieved = match query_top_k(&self.index, &query, self.k, self.embedder.as_ref()) {
            Ok(hits) => hits,
            Err(e) => {
                warn!(error = %e, "retrieval failed; prompt goes out without manual excerpts");
                Vec::new()
            }
        };
        let alternates = match flight {
            Some(f) => {
                let p = self.alternates;
                let found = nearby_airports(
                    &self.airports,
                    LatLon::new(f.latitude_deg, f.longitude_deg),
                    p.radius_nm,
                    p.min_runway_ft,
                    p.max_results,
                );
                match &self.metar {
                    Some(src) => attach_weather(found, src.as_ref()),
                    None => found,
                }
            }
            None => Vec::new(),
        };
        Gathered { query, retrieved, alternates }
    }
}

pub type SharedResources = Arc<Resources>;

//! Declarative relay configuration: one TOML file, overridable per key with
//! `LERAAT_<SECTION>_<KEY>` environment variables (env > file > defaults).

use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use leraat_core::advisor::{TransitionConfig, DEFAULT_SYSTEM_PROMPT, DEFAULT_TOKEN_BUDGET};
use leraat_core::airports::AlternateParams;
use leraat_core::backoff::RetryPolicy;
use leraat_core::retrieval::{
    ChunkParams, DEFAULT_CHUNK_SIZE, DEFAULT_LOCAL_DIM, DEFAULT_OVERLAP, DEFAULT_TOP_K,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const ENV_PREFIX: &str = "LERAAT_";

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {reason}")]
    Read { path: PathBuf, reason: String },
    #[error("invalid configuration: {0}")]
    Parse(String),
    #[error("environment override {var}: {reason}")]
    Env { var: String, reason: String },
    #[error("{key}: file not found: {path}")]
    MissingFile { key: &'static str, path: PathBuf },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbedderKind {
    Local,
    Remote,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LlmBackend {
    Mock,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerSection {
    pub listen: String,
    /// Directory of static UI assets served under `/ui/`.
    pub ui_dir: Option<PathBuf>,
}

impl Default for ServerSection {
    fn default() -> Self {
        Self { listen: "127.0.0.1:8080".into(), ui_dir: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetrievalSection {
    pub corpus_dir: PathBuf,
    /// Loaded when present, otherwise built from `corpus_dir` and saved here.
    pub index_path: PathBuf,
    pub k: usize,
    pub chunk_size: usize,
    pub overlap: usize,
    pub embedder: EmbedderKind,
    pub local_dim: usize,
    pub remote_base_url: Option<String>,
    pub remote_model: Option<String>,
    pub remote_api_key: Option<String>,
}

impl Default for RetrievalSection {
    fn default() -> Self {
        Self {
            corpus_dir: "data/corpus".into(),
            index_path: "data/index.json".into(),
            k: DEFAULT_TOP_K,
            chunk_size: DEFAULT_CHUNK_SIZE,
            overlap: DEFAULT_OVERLAP,
            embedder: EmbedderKind::Local,
            local_dim: DEFAULT_LOCAL_DIM,
            remote_base_url: None,
            remote_model: None,
            remote_api_key: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AirportsSection {
    pub db_path: PathBuf,
    pub radius_nm: f64,
    pub min_runway_ft: f64,
    pub max_results: usize,
}

impl Default for AirportsSection {
    fn default() -> Self {
        let p = AlternateParams::default();
        Self {
            db_path: "data/airports.csv".into(),
            radius_nm: p.radius_nm,
            min_runway_ft: p.min_runway_ft,
            max_results: p.max_results,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeatherSection {
    pub metar_file: Option<PathBuf>,
    pub metar_url: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmSection {
    pub backend: LlmBackend,
    pub base_url: Option<String>,
    pub model: Option<String>,
    pub api_key: Option<String>,
    pub timeout_secs: u64,
    pub max_attempts: u32,
    pub initial_delay_ms: u64,
    pub max_delay_ms: u64,
}

impl Default for LlmSection {
    fn default() -> Self {
        let retry = RetryPolicy::default();
        Self {
            backend: LlmBackend::Mock,
            base_url: None,
            model: None,
            api_key: None,
            timeout_secs: 60,
            max_attempts: retry.max_attempts,
            initial_delay_ms: retry.initial_delay_ms,
            max_delay_ms: retry.max_delay_ms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdvisorSection {
    pub token_budget: usize,
    pub interactive_sticky: bool,
    pub alert_preempts: bool,
    pub system_prompt: String,
}

impl Default for AdvisorSection {
    fn default() -> Self {
        let t = TransitionConfig::default();
        Self {
            token_budget: DEFAULT_TOKEN_BUDGET,
            interactive_sticky: t.interactive_sticky,
            alert_preempts: t.alert_preempts,
            system_prompt: DEFAULT_SYSTEM_PROMPT.into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerConfig {
    pub server: ServerSection,
    pub retrieval: RetrievalSection,
    pub airports: AirportsSection,
    pub weather: WeatherSection,
    pub llm: LlmSection,
    pub advisor: AdvisorSection,
}

const SECTIONS: [&str; 6] = ["server", "retrieval", "airports", "weather", "llm", "advisor"];

impl ServerConfig {
    /// Reads `path`, applies process environment overrides and validates.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        let cfg = Self::from_sources(Some(&text), std::env::vars())?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Merges defaults, the optional TOML text and `LERAAT_*` variables from
    /// `env`. Does not touch the filesystem.
    pub fn from_sources(
        file: Option<&str>,
        env: impl IntoIterator<Item = (String, String)>,
    ) -> Result<Self, ConfigError> {
        let mut table: toml::Table = match file {
            Some(text) => text.parse().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?,
            None => toml::Table::new(),
        };
        let defaults = toml::Table::try_from(ServerConfig::default())
            .map_err(|e| ConfigError::Parse(e.to_string()))?;

        let mut overrides: Vec<(String, String)> = env
            .into_iter()
            .filter(|(k, _)| k.starts_with(ENV_PREFIX))
            .collect();
        overrides.sort();
        for (var, raw) in overrides {
            let rest = var[ENV_PREFIX.len()..].to_ascii_lowercase();
            let Some((section, key)) = rest.split_once('_') else { continue };
            if !SECTIONS.contains(&section) {
                continue;
            }
            let typed = typed_value(defaults.get(section).and_then(|s| s.get(key)), &raw)
                .map_err(|reason| ConfigError::Env { var: var.clone(), reason })?;
            let slot = table
                .entry(section.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            match slot {
                toml::Value::Table(t) => {
                    t.insert(key.to_string(), typed);
                }
                _ => {
                    return Err(ConfigError::Env {
                        var,
                        reason: format!("[{section}] is not a table in the config file"),
                    })
                }
            }
        }
        toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))
    }

    /// Checks ranges and that every referenced file exists.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.listen_addr()?;
        let r = &self.retrieval;
        if r.k < 1 {
            return Err(ConfigError::Invalid("retrieval.k must be at least 1".into()));
        }
        self.chunk_params()?;
        if r.local_dim == 0 {
            return Err(ConfigError::Invalid("retrieval.local_dim must be positive".into()));
        }
        if r.embedder == EmbedderKind::Remote && (r.remote_base_url.is_none() || r.remote_model.is_none()) {
            return Err(ConfigError::Invalid(
                "retrieval.embedder = \"remote\" needs remote_base_url and remote_model".into(),
            ));
        }
        if !r.index_path.is_file() && !r.corpus_dir.is_dir() {
            return Err(ConfigError::MissingFile { key: "retrieval.corpus_dir", path: r.corpus_dir.clone() });
        }
        if !self.airports.db_path.is_file() {
            return Err(ConfigError::MissingFile { key: "airports.db_path", path: self.airports.db_path.clone() });
        }
        let a = &self.airports;
        if a.radius_nm.is_nan() || a.radius_nm <= 0.0 || a.max_results < 1 || !a.min_runway_ft.is_finite() {
            return Err(ConfigError::Invalid(
                "airports needs radius_nm > 0, max_results >= 1 and a finite min_runway_ft".into(),
            ));
        }
        match (&self.weather.metar_file, &self.weather.metar_url) {
            (Some(_), Some(_)) => {
                return Err(ConfigError::Invalid("set only one of weather.metar_file and weather.metar_url".into()))
            }
            (Some(path), None) if !path.is_file() => {
                return Err(ConfigError::MissingFile { key: "weather.metar_file", path: path.clone() })
            }
            _ => {}
        }
        if let Some(dir) = &self.server.ui_dir {
            if !dir.is_dir() {
                return Err(ConfigError::MissingFile { key: "server.ui_dir", path: dir.clone() });
            }
        }
        if self.llm.backend == LlmBackend::Remote && (self.llm.base_url.is_none() || self.llm.model.is_none()) {
            return Err(ConfigError::Invalid("llm.backend = \"remote\" needs base_url and model".into()));
        }
        if self.advisor.token_budget == 0 {
            return Err(ConfigError::Invalid("advisor.token_budget must be positive".into()));
        }
        Ok(())
    }

    pub fn listen_addr(&self) -> Result<SocketAddr, ConfigError> {
        self.server
            .listen
            .parse()
            .map_err(|e| ConfigError::Invalid(format!("server.listen `{}`: {e}", self.server.listen)))
    }

    pub fn chunk_params(&self) -> Result<ChunkParams, ConfigError> {
        ChunkParams::new(self.retrieval.chunk_size, self.retrieval.overlap)
            .map_err(|e| ConfigError::Invalid(format!("retrieval: {e}")))
    }

    pub fn alternate_params(&self) -> AlternateParams {
        AlternateParams {
            radius_nm: self.airports.radius_nm,
            min_runway_ft: self.airports.min_runway_ft,
            max_results: self.airports.max_results,
        }
    }

    pub fn transition_config(&self) -> TransitionConfig {
        TransitionConfig {
            interactive_sticky: self.advisor.interactive_sticky,
            alert_preempts: self.advisor.alert_preempts,
        }
    }

    pub fn retry_policy(&self) -> RetryPolicy {
        RetryPolicy {
            max_attempts: self.llm.max_attempts,
            initial_delay_ms: self.llm.initial_delay_ms,
            max_delay_ms: self.llm.max_delay_ms,
        }
    }
}

/// Parses an override using the type of the key's default; keys whose default
/// is absent are strings.
fn typed_value(default: Option<&toml::Value>, raw: &str) -> Result<toml::Value, String> {
    let raw = raw.trim();
    match default {
        Some(toml::Value::Integer(_)) => raw
            .parse::<i64>()
            .map(toml::Value::Integer)
            .map_err(|_| format!("expected an integer, got `{raw}`")),
        Some(toml::Value::Float(_)) => raw
            .parse::<f64>()
            .map(toml::Value::Float)
            .map_err(|_| format!("expected a number, got `{raw}`")),
        Some(toml::Value::Boolean(_)) => match raw.to_ascii_lowercase().as_str() {
            "true" | "1" | "yes" => Ok(toml::Value::Boolean(true)),
            "false" | "0" | "no" => Ok(toml::Value::Boolean(false)),
            _ => Err(format!("expected true or false, got `{raw}`")),
        },
        _ => Ok(toml::Value::String(raw.to_string())),
    }
}

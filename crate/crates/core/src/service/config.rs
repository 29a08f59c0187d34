use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ingest::FeedSource;

use super::ServiceError;

pub const ENV_PREFIX: &str = "NEWSAGENT_";

fn default_listen() -> String {
    "127.0.0.1:8080".into()
}
fn default_language() -> String {
    "en".into()
}
fn default_page_size() -> usize {
    crate::dialogue::DEFAULT_PAGE_SIZE
}
fn default_max_results() -> usize {
    30
}
fn default_idle() -> u64 {
    1800
}
fn default_true() -> bool {
    true
}
fn default_fetch_timeout() -> u64 {
    10
}
fn default_lock_timeout() -> u64 {
    5000
}
fn default_pause() -> u32 {
    crate::response::DEFAULT_PAUSE_MS
}
fn default_min_confidence() -> f64 {
    crate::linking::DEFAULT_MIN_CONFIDENCE
}

/// Service configuration, read from TOML.
///
/// Scalar keys can be overridden with `NEWSAGENT_<KEY>` (upper-cased key
/// name, e.g. `NEWSAGENT_PAGE_SIZE=5`). Values are parsed as TOML and fall
/// back to plain strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    #[serde(default = "default_listen")]
    pub listen: String,
    #[serde(default)]
    pub sources: Vec<FeedSource>,
    pub gazetteer: Option<PathBuf>,
    /// Language → intent config file; built-in configs are used otherwise.
    #[serde(default)]
    pub intents: BTreeMap<String, PathBuf>,
    /// Language → response template file.
    #[serde(default)]
    pub responses: BTreeMap<String, PathBuf>,
    /// Query template file replacing the built-in set.
    pub templates: Option<PathBuf>,
    #[serde(default = "default_language")]
    pub default_language: String,
    #[serde(default = "default_page_size")]
    pub page_size: usize,
    #[serde(default = "default_max_results")]
    pub max_results: usize,
    #[serde(default = "default_idle")]
    pub session_idle_s: u64,
    #[serde(default = "default_true")]
    pub auto_create_sessions: bool,
    #[serde(default = "default_true")]
    pub debug: bool,
    pub snapshot: Option<PathBuf>,
    /// Remote linker endpoint; the gazetteer is used when unset or failing.
    pub remote_linker: Option<String>,
    #[serde(default = "default_min_confidence")]
    pub min_confidence: f64,
    #[serde(default = "default_fetch_timeout")]
    pub fetch_timeout_s: u64,
    #[serde(default = "default_lock_timeout")]
    pub lock_timeout_ms: u64,
    #[serde(default = "default_pause")]
    pub pause_ms: u32,
    /// Run the feed scheduler while serving.
    #[serde(default = "default_true")]
    pub schedule: bool,
    /// Directory served under `/app`.
    pub static_dir: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        toml::from_str("").expect("all fields have defaults")
    }
}

fn env_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

impl ServiceConfig {
    /// Parses `text` and applies overrides from `env` (`(name, value)` pairs).
    pub fn from_toml(text: &str, env: impl IntoIterator<Item = (String, String)>) -> Result<Self, ServiceError> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| ServiceError::Config(e.to_string()))?;
        for (name, value) in env {
            let Some(key) = name.strip_prefix(ENV_PREFIX) else { continue };
            let key = key.to_ascii_lowercase();
            if key.is_empty() {
                continue;
            }
            let mut value = env_value(&value);
            // Path-like and string keys keep the raw text even if it parses as TOML.
            if matches!(
                key.as_str(),
                "listen" | "gazetteer" | "templates" | "default_language" | "snapshot" | "remote_linker" | "static_dir"
            ) {
                if let Some(s) = value.as_integer().map(|i| i.to_string()) {
                    value = toml::Value::String(s);
                }
            }
            table.insert(key, value);
        }
        let config: Self = table.try_into().map_err(|e: toml::de::Error| ServiceError::Config(e.to_string()))?;
        config.check_values()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ServiceError> {
        let text = std::fs::read_to_string(path).map_err(|e| ServiceError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text, std::env::vars())
    }

    fn check_values(&self) -> Result<(), ServiceError> {
        if self.page_size < 1 {
            return Err(ServiceError::Config("page_size must be >= 1".into()));
        }
        if self.max_results < self.page_size {
            return Err(ServiceError::Config("max_results must be >= page_size".into()));
        }
        for source in &self.sources {
            source.validate().map_err(ServiceError::Config)?;
        }
        Ok(())
    }

    /// Checks that every configured path exists.
    pub fn validate_paths(&self) -> Result<(), ServiceError> {
        let mut paths: Vec<&Path> = Vec::new();
        paths.extend(self.gazetteer.as_deref());
        paths.extend(self.templates.as_deref());
        paths.extend(self.static_dir.as_deref());
        paths.extend(self.intents.values().map(PathBuf::as_path));
        paths.extend(self.responses.values().map(PathBuf::as_path));
        match paths.into_iter().find(|p| !p.exists()) {
            Some(p) => Err(ServiceError::Config(format!("{} does not exist", p.display()))),
            None => Ok(()),
        }
    }
}

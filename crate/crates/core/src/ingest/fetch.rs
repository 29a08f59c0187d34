use std::time::Duration;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_INTERVAL_S: u64 = 3600;

fn default_interval() -> u64 {
    DEFAULT_INTERVAL_S
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceKind {
    Http,
    File,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedSource {
    pub id: String,
    pub kind: SourceKind,
    pub location: String,
    #[serde(default = "default_interval", rename = "interval_s")]
    pub interval_s: u64,
}

impl FeedSource {
    pub fn file(id: &str, path: impl Into<String>) -> Self {
        Self { id: id.into(), kind: SourceKind::File, location: path.into(), interval_s: DEFAULT_INTERVAL_S }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.id.trim().is_empty() {
            return Err("source id is empty".into());
        }
        if self.location.trim().is_empty() {
            return Err(format!("source {}: location is empty", self.id));
        }
        if self.interval_s < 1 {
            return Err(format!("source {}: interval_s must be >= 1", self.id));
        }
        if self.kind == SourceKind::Http {
            url::Url::parse(&self.location).map_err(|e| format!("source {}: {e}", self.id))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RawFeed {
    pub bytes: Vec<u8>,
    pub retrieved_at: DateTime<Utc>,
}

#[derive(Debug, Error)]
pub enum FetchError {
    #[error("network error: {0}")]
    Network(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("timed out after {0:?}")]
    Timeout(Duration),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl FetchError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, FetchError::Network(_) | FetchError::Timeout(_))
    }
}

/// Retrieves the raw feed document. Never touches the graph.
pub async fn fetch_feed(source: &FeedSource, timeout: Duration) -> Result<RawFeed, FetchError> {
    let bytes = match source.kind {
        SourceKind::File => tokio::fs::read(&source.location).await?,
        SourceKind::Http => {
            let client = reqwest::Client::builder()
                .timeout(timeout)
                .build()
                .map_err(|e| FetchError::Network(e.to_string()))?;
            let classify = |e: reqwest::Error| {
                if e.is_timeout() {
                    FetchError::Timeout(timeout)
                } else {
                    FetchError::Network(e.to_string())
                }
            };
            let resp = client.get(&source.location).send().await.map_err(classify)?;
            match resp.status() {
                s if s == reqwest::StatusCode::NOT_FOUND => return Err(FetchError::NotFound(source.location.clone())),
                s if s != reqwest::StatusCode::OK => return Err(FetchError::Network(format!("status {s}"))),
                _ => {}
            }
            resp.bytes().await.map_err(classify)?.to_vec()
        }
    };
    Ok(RawFeed { bytes, retrieved_at: Utc::now() })
}

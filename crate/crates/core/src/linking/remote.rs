//! Client for a remote annotation service.
//!
//! Wire contract: `POST {endpoint}` (conventionally `/annotate`) with
//! `{"text": ...}`; the reply is `{"mentions": [{surface, start, end, id,
//! name, url, class, confidence}]}` using character offsets.

use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{EntityLinker, GazetteerEntry, GazetteerLinker, Mention, DEFAULT_MIN_CONFIDENCE};
use crate::text::char_slice;

#[derive(Debug, Error)]
pub enum LinkError {
    #[error("network error: {0}")]
    Network(String),
    #[error("protocol error: {0}")]
    Protocol(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireMention {
    pub surface: String,
    pub start: usize,
    pub end: usize,
    pub id: String,
    pub name: String,
    pub url: String,
    pub class: String,
    pub confidence: f64,
}

impl From<&Mention> for WireMention {
    fn from(m: &Mention) -> Self {
        WireMention {
            surface: m.surface.clone(),
            start: m.start,
            end: m.end,
            id: m.entry.wiki_data_item_id.clone(),
            name: m.entry.name.clone(),
            url: m.entry.url.clone(),
            class: m.entry.entity_class.clone(),
            confidence: m.confidence,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AnnotateRequest {
    pub text: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AnnotateResponse {
    pub mentions: Vec<WireMention>,
}

/// Checks a decoded reply against the mention invariants for `text` and
/// converts it, dropping mentions under `min_confidence`.
pub fn decode_mentions(text: &str, body: &[u8], min_confidence: f64) -> Result<Vec<Mention>, LinkError> {
    let reply: AnnotateResponse = serde_json::from_slice(body).map_err(|e| LinkError::Protocol(e.to_string()))?;
    let len = text.chars().count();
    let mut out: Vec<Mention> = Vec::with_capacity(reply.mentions.len());
    for (i, w) in reply.mentions.into_iter().enumerate() {
        let bad = |what: &str| LinkError::Protocol(format!("mention {i}: {what}"));
        if w.start >= w.end || w.end > len {
            return Err(bad("offsets out of range"));
        }
        if char_slice(text, w.start, w.end).to_lowercase() != w.surface.to_lowercase() {
            return Err(bad("surface does not match text"));
        }
        if !(0.0..=1.0).contains(&w.confidence) {
            return Err(bad("confidence outside [0, 1]"));
        }
        let digits = w.id.strip_prefix('Q').unwrap_or("");
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad("id must match Q[0-9]+"));
        }
        if w.confidence < min_confidence {
            continue;
        }
        out.push(Mention {
            surface: w.surface,
            start: w.start,
            end: w.end,
            entry: GazetteerEntry {
                wiki_data_item_id: w.id,
                name: w.name,
                aliases: Vec::new(),
                url: w.url,
                entity_class: w.class,
            },
            confidence: w.confidence,
        });
    }
    out.sort_by_key(|m| m.start);
    if out.windows(2).any(|w| w[0].end > w[1].start) {
        return Err(LinkError::Protocol("overlapping mentions".into()));
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct RemoteLinker {
    client: reqwest::Client,
    endpoint: url::Url,
    pub min_confidence: f64,
}

impl RemoteLinker {
    pub fn new(endpoint: url::Url, timeout: Duration) -> Result<Self, LinkError> {
        let client = reqwest::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| LinkError::Network(e.to_string()))?;
        Ok(Self { client, endpoint, min_confidence: DEFAULT_MIN_CONFIDENCE })
    }

    pub async fn annotate_remote(&self, text: &str) -> Result<Vec<Mention>, LinkError> {
        let resp = self
            .client
            .post(self.endpoint.clone())
            .json(&AnnotateRequest { text: text.to_string() })
            .send()
            .await
            .map_err(|e| LinkError::Network(e.to_string()))?;
        if !resp.status().is_success() {
            return Err(LinkError::Network(format!("status {}", resp.status())));
        }
        let body = resp.bytes().await.map_err(|e| LinkError::Network(e.to_string()))?;
        decode_mentions(text, &body, self.min_confidence)
    }
}

/// Tries the remote service and falls back to the local gazetteer on any error.
#[derive(Debug, Clone)]
pub struct FallbackLinker {
    pub remote: RemoteLinker,
    pub local: GazetteerLinker,
}

#[async_trait]
impl EntityLinker for FallbackLinker {
    async fn annotate(&self, text: &str) -> Vec<Mention> {
        match self.remote.annotate_remote(text).await {
            Ok(mentions) => mentions,
            Err(e) => {
                tracing::warn!(error = %e, "remote linker failed, using gazetteer");
                self.local.annotate(text).await
            }
        }
    }
}

//! Named-entity recognition and linking against a gazetteer of
//! Wikidata-style entries, plus a client for a remote annotation service.

mod gazetteer;
mod remote;

use serde::{Deserialize, Serialize};

pub use gazetteer::{load_gazetteer, Ambiguity, Gazetteer, GazetteerError};
pub use remote::{decode_mentions, AnnotateRequest, AnnotateResponse, FallbackLinker, LinkError, RemoteLinker, WireMention};

/// Default minimum confidence for a mention to be kept.
pub const DEFAULT_MIN_CONFIDENCE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GazetteerEntry {
    #[serde(rename = "id")]
    pub wiki_data_item_id: String,
    pub name: String,
    #[serde(default)]
    pub aliases: Vec<String>,
    pub url: String,
    #[serde(rename = "class")]
    pub entity_class: String,
}

/// A linked span of text. Offsets count characters, `end` exclusive.
#[derive(Debug, Clone, PartialEq)]
pub struct Mention {
    pub surface: String,
    pub start: usize,
    pub end: usize,
    pub entry: GazetteerEntry,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityRecord {
    pub id: String,
    pub name: String,
    pub url: String,
    pub class: String,
}

pub fn entity_record(mention: &Mention) -> EntityRecord {
    let e = &mention.entry;
    EntityRecord {
        id: e.wiki_data_item_id.clone(),
        name: e.name.clone(),
        url: e.url.clone(),
        class: crate::text::fold_key(&e.entity_class),
    }
}

/// Anything that can find entity mentions in article text.
#[async_trait::async_trait]
pub trait EntityLinker: Send + Sync {
    async fn annotate(&self, text: &str) -> Vec<Mention>;
}

/// Local, deterministic linker over a loaded gazetteer.
#[derive(Debug, Clone)]
pub struct GazetteerLinker {
    pub gazetteer: std::sync::Arc<Gazetteer>,
    pub min_confidence: f64,
}

impl GazetteerLinker {
    pub fn new(gazetteer: std::sync::Arc<Gazetteer>) -> Self {
        Self { gazetteer, min_confidence: DEFAULT_MIN_CONFIDENCE }
    }
}

#[async_trait::async_trait]
impl EntityLinker for GazetteerLinker {
    async fn annotate(&self, text: &str) -> Vec<Mention> {
        self.gazetteer.annotate(text, self.min_confidence)
    }
}

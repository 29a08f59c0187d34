//! News feed ingestion: fetch, normalize, and commit articles to the graph.
//!
//! Feed format (UTF-8 JSON):
//!
//! ```json
//! {"feed_version": 1, "items": [{"id": "...", "date": "2023-03-01T10:00:00Z",
//!   "title": "...", "first_sentence": "...", "text": "...",
//!   "resort": "...", "tags": ["..."]}]}
//! ```
//!
//! Article keys are namespaced by source: `{source_id}:{id}`.

mod fetch;
mod scheduler;

use std::collections::BTreeSet;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::graph::{canonical_date, normalize_key, EdgeType, GraphError, GraphStore, NodeLabel, Properties, SharedGraph};
use crate::linking::{entity_record, EntityLinker, Mention};

pub use fetch::{fetch_feed, FeedSource, FetchError, RawFeed, SourceKind, DEFAULT_INTERVAL_S};
pub use scheduler::{run_scheduler, Clock, SimulatedClock, SystemClock, TickOutcome};

pub const FEED_VERSION: u64 = 1;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error(transparent)]
    Fetch(#[from] FetchError),
    #[error("malformed feed: {0}")]
    MalformedFeed(String),
    #[error(transparent)]
    Store(#[from] GraphError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArticleRecord {
    pub external_id: String,
    /// Canonical UTC, e.g. `2023-03-01T10:00:00Z`.
    pub date: String,
    pub title: String,
    pub opening_paragraph: String,
    pub body: String,
    pub resort_name: String,
    pub tag_names: Vec<String>,
    pub source_id: String,
}

impl ArticleRecord {
    pub fn node_key(&self) -> String {
        format!("{}:{}", self.source_id, self.external_id)
    }

    /// Text handed to the entity linker.
    pub fn linkable_text(&self) -> String {
        [self.title.as_str(), &self.opening_paragraph, &self.body]
            .iter()
            .filter(|s| !s.is_empty())
            .copied()
            .collect::<Vec<_>>()
            .join("\n")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub index: usize,
    pub reason: String,
}

/// Output of [`normalize`]: accepted records with their item index, plus rejects.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NormalizedFeed {
    pub source_id: String,
    pub fetched: usize,
    pub records: Vec<(usize, ArticleRecord)>,
    pub rejects: Vec<Rejection>,
}

impl NormalizedFeed {
    pub fn from_records(source_id: &str, records: Vec<ArticleRecord>) -> Self {
        Self {
            source_id: source_id.to_string(),
            fetched: records.len(),
            records: records.into_iter().enumerate().collect(),
            rejects: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub source_id: String,
    pub fetched: usize,
    pub created: usize,
    pub merged: usize,
    pub rejected: Vec<Rejection>,
    pub entities_linked: usize,
    pub started: DateTime<Utc>,
    pub finished: DateTime<Utc>,
}

impl IngestReport {
    pub fn is_conserved(&self) -> bool {
        self.fetched == self.created + self.merged + self.rejected.len()
    }
}

fn field<'a>(item: &'a serde_json::Map<String, Value>, name: &str) -> Result<Option<&'a str>, String> {
    match item.get(name) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) if s.trim().is_empty() => Ok(None),
        Some(Value::String(s)) => Ok(Some(s)),
        Some(_) => Err(format!("bad:{name}")),
    }
}

fn required<'a>(item: &'a serde_json::Map<String, Value>, name: &str) -> Result<&'a str, String> {
    field(item, name)?.ok_or_else(|| format!("missing:{name}"))
}

fn normalize_item(value: &Value, source_id: &str) -> Result<ArticleRecord, String> {
    let item = value.as_object().ok_or_else(|| "bad:item".to_string())?;
    let external_id = required(item, "id")?.trim().to_string();
    let date = canonical_date(required(item, "date")?).ok_or_else(|| "bad:date".to_string())?;
    let title = required(item, "title")?.trim().to_string();
    let opening_paragraph = field(item, "first_sentence")?.unwrap_or_default().trim().to_string();
    let body = field(item, "text")?.unwrap_or_default().trim().to_string();
    let resort_name = required(item, "resort")?.trim().to_string();
    let tag_names = match item.get("tags") {
        None | Some(Value::Null) => Vec::new(),
        Some(Value::Array(tags)) => {
            let mut names = Vec::with_capacity(tags.len());
            for t in tags {
                match t {
                    Value::String(s) if !s.trim().is_empty() => names.push(s.trim().to_string()),
                    Value::String(_) => {}
                    _ => return Err("bad:tags".into()),
                }
            }
            names
        }
        Some(_) => return Err("bad:tags".into()),
    };
    Ok(ArticleRecord {
        external_id,
        date,
        title,
        opening_paragraph,
        body,
        resort_name,
        tag_names,
        source_id: source_id.to_string(),
    })
}

/// Maps a raw feed document to article records. Bad items are rejected
/// individually; only a document-level problem fails the whole call.
pub fn normalize(raw: &[u8], source_id: &str) -> Result<NormalizedFeed, IngestError> {
    let doc: Value = serde_json::from_slice(raw).map_err(|e| IngestError::MalformedFeed(e.to_string()))?;
    let obj = doc
        .as_object()
        .ok_or_else(|| IngestError::MalformedFeed("document is not an object".into()))?;
    match obj.get("feed_version").and_then(Value::as_u64) {
        Some(FEED_VERSION) => {}
        other => return Err(IngestError::MalformedFeed(format!("unsupported feed_version {other:?}"))),
    }
    let items = obj
        .get("items")
        .and_then(Value::as_array)
        .ok_or_else(|| IngestError::MalformedFeed("items must be an array".into()))?;
    let mut feed = NormalizedFeed { source_id: source_id.to_string(), fetched: items.len(), ..Default::default() };
    for (index, item) in items.iter().enumerate() {
        match normalize_item(item, source_id) {
            Ok(record) => feed.records.push((index, record)),
            Err(reason) => feed.rejects.push(Rejection { index, reason }),
        }
    }
    Ok(feed)
}

fn usable(mention: &Mention) -> bool {
    normalize_key(NodeLabel::Entity, &mention.entry.wiki_data_item_id).is_ok()
        && url::Url::parse(&mention.entry.url).is_ok()
        && !mention.entry.name.trim().is_empty()
        && !mention.entry.entity_class.trim().is_empty()
}

/// Writes one article with its resort, tags and entities. Returns whether
/// the article node is new and how many distinct entities it mentions.
pub fn commit_article(g: &mut GraphStore, record: &ArticleRecord, mentions: &[Mention]) -> Result<(bool, usize), GraphError> {
    let key = record.node_key();
    let created = g.find(NodeLabel::Article, &key).is_none();
    let props = Properties::from([
        ("date".to_string(), record.date.clone()),
        ("title".to_string(), record.title.clone()),
        ("opening_paragraph".to_string(), record.opening_paragraph.clone()),
        ("body".to_string(), record.body.clone()),
        ("source_id".to_string(), record.source_id.clone()),
    ]);
    let article = g.merge_node(NodeLabel::Article, &key, props)?;

    let display = |name: &str| Properties::from([("display_name".to_string(), name.to_string())]);
    let resort = g.merge_node(NodeLabel::Resort, &record.resort_name, display(&record.resort_name))?;
    g.merge_edge(article, EdgeType::PartOf, resort)?;
    for tag in &record.tag_names {
        let t = g.merge_node(NodeLabel::Tag, tag, display(tag))?;
        g.merge_edge(article, EdgeType::HasTag, t)?;
    }

    let mut linked = BTreeSet::new();
    for mention in mentions {
        if !usable(mention) {
            tracing::warn!(id = %mention.entry.wiki_data_item_id, article = %key, "skipping invalid mention");
            continue;
        }
        let record = entity_record(mention);
        let props = Properties::from([("name".to_string(), record.name), ("url".to_string(), record.url)]);
        let entity = g.merge_node(NodeLabel::Entity, &record.id, props)?;
        let class = g.merge_node(NodeLabel::EntityClass, &record.class, Properties::new())?;
        g.merge_edge(entity, EdgeType::InstanceOf, class)?;
        g.merge_edge(article, EdgeType::Mentions, entity)?;
        linked.insert(record.id);
    }
    Ok((created, linked.len()))
}

/// Commits every record, one write transaction per article.
pub async fn ingest(feed: &NormalizedFeed, linker: &dyn EntityLinker, graph: &SharedGraph) -> Result<IngestReport, IngestError> {
    let started = Utc::now();
    let mut report = IngestReport {
        source_id: feed.source_id.clone(),
        fetched: feed.fetched,
        created: 0,
        merged: 0,
        rejected: feed.rejects.clone(),
        entities_linked: 0,
        started,
        finished: started,
    };
    for (index, record) in &feed.records {
        let mentions = linker.annotate(&record.linkable_text()).await;
        let outcome = graph.write()?.transaction(|g| commit_article(g, record, &mentions));
        match outcome {
            Ok((true, linked)) => {
                report.created += 1;
                report.entities_linked += linked;
            }
            Ok((false, linked)) => {
                report.merged += 1;
                report.entities_linked += linked;
            }
            Err(GraphError::StoreUnavailable) => return Err(GraphError::StoreUnavailable.into()),
            Err(e) => report.rejected.push(Rejection { index: *index, reason: format!("graph:{e}") }),
        }
    }
    report.rejected.sort_by_key(|r| r.index);
    report.finished = Utc::now();
    tracing::info!(
        source = %report.source_id,
        fetched = report.fetched,
        created = report.created,
        merged = report.merged,
        rejected = report.rejected.len(),
        "ingest finished"
    );
    Ok(report)
}

//! Request handling: NLU → dialogue → query → response, plus ingestion and
//! the HTTP API.

mod config;
mod http;
mod sessions;

use std::path::Path;
use std::sync::Arc;
use std::time::Duration as StdDuration;

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dialogue::{
    self, ArticleRef, DialogueConfig, DialogueContext, DialogueError, DialogueSession, DialogueState, Prosody,
};
use crate::graph::{snapshot, GraphError, GraphStore, SharedGraph};
use crate::ingest::{self, fetch_feed, FeedSource, IngestError, IngestReport};
use crate::linking::{load_gazetteer, EntityLinker, FallbackLinker, Gazetteer, GazetteerLinker, RemoteLinker};
use crate::nlu::{IntentConfig, Nlu, NluContext, NluError};
use crate::query::{QueryError, RelatedWeights, TemplateRegistry};
use crate::response::{self, AgentResponse, RenderOptions, ResponseError, ResponseTemplateSet, ResponseTemplates};

pub use config::{ServiceConfig, ENV_PREFIX};
pub use http::{router, serve};
pub use sessions::{SessionEntry, SessionHandle, SessionStore, TranscriptEntry};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("session {0:?} not found")]
    SessionNotFound(String),
    #[error("unsupported language {0:?}")]
    UnsupportedLanguage(String),
    #[error("unknown source {0:?}")]
    UnknownSource(String),
    #[error("graph store unavailable")]
    StoreUnavailable,
    #[error("invalid request: {0}")]
    BadRequest(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Ingest(IngestError),
    #[error(transparent)]
    Graph(GraphError),
    #[error(transparent)]
    Render(#[from] ResponseError),
}

impl From<GraphError> for ServiceError {
    fn from(e: GraphError) -> Self {
        match e {
            GraphError::StoreUnavailable => ServiceError::StoreUnavailable,
            e => ServiceError::Graph(e),
        }
    }
}

impl From<IngestError> for ServiceError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::Store(GraphError::StoreUnavailable) => ServiceError::StoreUnavailable,
            e => ServiceError::Ingest(e),
        }
    }
}

impl From<DialogueError> for ServiceError {
    fn from(e: DialogueError) -> Self {
        match e {
            DialogueError::UnsupportedLanguage(l) => ServiceError::UnsupportedLanguage(l),
            e => ServiceError::BadRequest(e.to_string()),
        }
    }
}

impl ServiceError {
    /// Stable machine-readable name.
    pub fn kind(&self) -> &'static str {
        match self {
            ServiceError::SessionNotFound(_) => "SessionNotFound",
            ServiceError::UnsupportedLanguage(_) => "UnsupportedLanguage",
            ServiceError::UnknownSource(_) => "UnknownSource",
            ServiceError::StoreUnavailable => "StoreUnavailable",
            ServiceError::BadRequest(_) => "BadRequest",
            ServiceError::Config(_) => "ConfigError",
            ServiceError::Ingest(IngestError::Fetch(ingest::FetchError::Io(_))) => "IoError",
            ServiceError::Ingest(IngestError::Fetch(ingest::FetchError::NotFound(_))) => "NotFound",
            ServiceError::Ingest(IngestError::Fetch(ingest::FetchError::Timeout(_))) => "Timeout",
            ServiceError::Ingest(IngestError::Fetch(ingest::FetchError::Network(_))) => "NetworkError",
            ServiceError::Ingest(IngestError::MalformedFeed(_)) => "MalformedFeed",
            ServiceError::Ingest(IngestError::Store(_)) | ServiceError::Graph(_) => "GraphError",
            ServiceError::Render(_) => "RenderError",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DebugInfo {
    pub intent: String,
    pub confidence: f64,
    pub session_state: DialogueState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtteranceResponse {
    #[serde(flatten)]
    pub response: AgentResponse,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub debug: Option<DebugInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub session_id: String,
    pub language: String,
    pub state: DialogueState,
    pub suggestions: Vec<ArticleRef>,
    pub page_offset: usize,
    pub current_article: Option<String>,
    pub prosody: Prosody,
    pub turns: usize,
    pub created: DateTime<Utc>,
    pub last_active: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentSettings {
    pub default_language: String,
    pub dialogue: DialogueConfig,
    pub render: RenderOptions,
    pub session_idle: Duration,
    pub auto_create_sessions: bool,
    pub debug: bool,
    pub fetch_timeout: StdDuration,
    pub snapshot: Option<std::path::PathBuf>,
}

impl Default for AgentSettings {
    fn default() -> Self {
        Self {
            default_language: "en".into(),
            dialogue: DialogueConfig::default(),
            render: RenderOptions::default(),
            session_idle: Duration::minutes(30),
            auto_create_sessions: true,
            debug: true,
            fetch_timeout: StdDuration::from_secs(10),
            snapshot: None,
        }
    }
}

/// The assembled pipeline. Shared read-only across requests, except for
/// the graph and the session store which handle their own locking.
pub struct Agent {
    pub graph: SharedGraph,
    pub templates: TemplateRegistry,
    pub nlu: Nlu,
    pub responses: ResponseTemplates,
    pub gazetteer: Arc<Gazetteer>,
    pub linker: Arc<dyn EntityLinker>,
    pub sources: Vec<FeedSource>,
    pub settings: AgentSettings,
    sessions: SessionStore,
}

impl Agent {
    /// Built-in intents, templates and responses with a gazetteer linker.
    pub fn new(graph: SharedGraph, gazetteer: Arc<Gazetteer>, settings: AgentSettings) -> Self {
        Self {
            graph,
            templates: TemplateRegistry::builtin(),
            nlu: Nlu::builtin(),
            responses: ResponseTemplates::builtin(),
            linker: Arc::new(GazetteerLinker::new(gazetteer.clone())),
            gazetteer,
            sources: Vec::new(),
            sessions: SessionStore::new(settings.session_idle),
            settings,
        }
    }

    pub fn from_config(config: &ServiceConfig) -> Result<Self, ServiceError> {
        config.validate_paths()?;
        let cfg_err = |e: &dyn std::fmt::Display| ServiceError::Config(e.to_string());

        let gazetteer = Arc::new(match &config.gazetteer {
            Some(p) => load_gazetteer(p).map_err(|e| cfg_err(&e))?,
            None => Gazetteer::default(),
        });
        let store = match &config.snapshot {
            Some(p) if p.exists() => snapshot::load(p)?,
            _ => GraphStore::new(),
        };
        let graph = SharedGraph::new(store).with_timeout(StdDuration::from_millis(config.lock_timeout_ms));
        let settings = AgentSettings {
            default_language: config.default_language.clone(),
            dialogue: DialogueConfig {
                page_size: config.page_size,
                max_results: config.max_results,
                related: RelatedWeights::default(),
            },
            render: RenderOptions { pause_ms: config.pause_ms },
            session_idle: Duration::seconds(i64::try_from(config.session_idle_s).unwrap_or(i64::MAX)),
            auto_create_sessions: config.auto_create_sessions,
            debug: config.debug,
            fetch_timeout: StdDuration::from_secs(config.fetch_timeout_s),
            snapshot: config.snapshot.clone(),
        };
        let mut agent = Agent::new(graph, gazetteer.clone(), settings);
        let local = GazetteerLinker { gazetteer, min_confidence: config.min_confidence };
        agent.linker = match &config.remote_linker {
            Some(endpoint) => {
                let url = url::Url::parse(endpoint).map_err(|e| cfg_err(&e))?;
                let mut remote = RemoteLinker::new(url, agent.settings.fetch_timeout).map_err(|e| cfg_err(&e))?;
                remote.min_confidence = config.min_confidence;
                Arc::new(FallbackLinker { remote, local })
            }
            None => Arc::new(local),
        };
        if let Some(p) = &config.templates {
            let text = std::fs::read_to_string(p).map_err(|e| cfg_err(&e))?;
            agent.templates = TemplateRegistry::from_json(&text).map_err(|e| cfg_err(&e))?;
        }
        for p in config.intents.values() {
            let text = std::fs::read_to_string(p).map_err(|e| cfg_err(&e))?;
            agent.nlu.insert(IntentConfig::from_json(&text).map_err(|e| cfg_err(&e))?);
        }
        for (lang, p) in &config.responses {
            let text = std::fs::read_to_string(p).map_err(|e| cfg_err(&e))?;
            agent.responses.insert(ResponseTemplateSet::from_json(lang, &text)?);
        }
        agent.sources = config.sources.clone();
        agent.check_languages()?;
        Ok(agent)
    }

    /// Every intent language needs response templates.
    pub fn check_languages(&self) -> Result<(), ServiceError> {
        for lang in self.languages() {
            if self.responses.get(lang).is_none() {
                return Err(ServiceError::Config(format!("no response templates for {lang:?}")));
            }
        }
        if !self.languages().any(|l| l == self.settings.default_language) {
            return Err(ServiceError::UnsupportedLanguage(self.settings.default_language.clone()));
        }
        Ok(())
    }

    pub fn languages(&self) -> impl Iterator<Item = &str> {
        self.nlu.languages()
    }

    pub fn sessions(&self) -> &SessionStore {
        &self.sessions
    }

    fn render_for(&self, session: &DialogueSession, actions: &[dialogue::DialogueAction]) -> Result<AgentResponse, ServiceError> {
        let set = self
            .responses
            .get(&session.language)
            .ok_or_else(|| ServiceError::UnsupportedLanguage(session.language.clone()))?;
        Ok(response::render(actions, set, &session.prosody, self.settings.render)?)
    }

    /// Fresh session without registering it; returns the greeting.
    pub fn open_session(
        &self,
        session_id: &str,
        language: Option<&str>,
        now: DateTime<Utc>,
    ) -> Result<(DialogueSession, AgentResponse), ServiceError> {
        let language = language.unwrap_or(&self.settings.default_language);
        let supported: Vec<&str> = self.languages().collect();
        let (session, actions) = dialogue::new_session(session_id, language, &supported, now)?;
        let response = self.render_for(&session, &actions)?;
        Ok((session, response))
    }

    /// One complete turn on `session`: recognize, decide, render.
    pub fn turn(&self, session: &mut DialogueSession, text: &str, now: DateTime<Utc>) -> Result<UtteranceResponse, ServiceError> {
        let nlu = self.nlu.get(&session.language).ok_or_else(|| ServiceError::UnsupportedLanguage(session.language.clone()))?;
        let intent = nlu.recognize(text, &NluContext { suggestions: session.suggestion_titles() });
        let actions = {
            let store = self.graph.read()?;
            let ctx = DialogueContext {
                store: &store,
                templates: &self.templates,
                gazetteer: &self.gazetteer,
                nlu,
                config: self.settings.dialogue,
            };
            dialogue::handle(session, &intent, &ctx)
        };
        session.last_active = now;
        let response = self.render_for(session, &actions)?;
        let debug = self.settings.debug.then(|| DebugInfo {
            intent: intent.intent.as_str().to_string(),
            confidence: intent.confidence,
            session_state: session.state,
        });
        tracing::debug!(session = %session.session_id, intent = intent.intent.as_str(), "turn");
        Ok(UtteranceResponse { response, debug })
    }

    pub fn create_session(&self, language: Option<&str>) -> Result<(String, AgentResponse), ServiceError> {
        let id = uuid::Uuid::new_v4().to_string();
        let (session, response) = self.open_session(&id, language, Utc::now())?;
        self.sessions.insert(session);
        Ok((id, response))
    }

    pub async fn handle_utterance(&self, session_id: &str, text: &str) -> Result<UtteranceResponse, ServiceError> {
        let now = Utc::now();
        let handle = match self.sessions.get(session_id, now) {
            Some(h) => h,
            None if self.settings.auto_create_sessions => {
                let (session, _) = self.open_session(session_id, None, now)?;
                self.sessions.insert(session)
            }
            None => return Err(ServiceError::SessionNotFound(session_id.to_string())),
        };
        let mut entry = handle.lock().await;
        let out = self.turn(&mut entry.session, text, now)?;
        entry.transcript.push(TranscriptEntry {
            at: now,
            user: text.to_string(),
            intent: out.debug.as_ref().map(|d| d.intent.clone()).unwrap_or_default(),
            confidence: out.debug.as_ref().map_or(0.0, |d| d.confidence),
            text: out.response.text.clone(),
        });
        Ok(out)
    }

    async fn entry(&self, session_id: &str) -> Result<SessionHandle, ServiceError> {
        self.sessions
            .get(session_id, Utc::now())
            .ok_or_else(|| ServiceError::SessionNotFound(session_id.to_string()))
    }

    pub async fn session_summary(&self, session_id: &str) -> Result<SessionSummary, ServiceError> {
        let handle = self.entry(session_id).await?;
        let entry = handle.lock().await;
        let s = &entry.session;
        Ok(SessionSummary {
            session_id: s.session_id.clone(),
            language: s.language.clone(),
            state: s.state,
            suggestions: s.suggestions.clone(),
            page_offset: s.page_offset,
            current_article: s.current_article.clone(),
            prosody: s.prosody.clone(),
            turns: entry.transcript.len(),
            created: s.created,
            last_active: s.last_active,
        })
    }

    pub async fn transcript(&self, session_id: &str) -> Result<Vec<TranscriptEntry>, ServiceError> {
        let handle = self.entry(session_id).await?;
        let entry = handle.lock().await;
        Ok(entry.transcript.clone())
    }

    pub async fn set_prosody(&self, session_id: &str, prosody: Prosody) -> Result<SessionSummary, ServiceError> {
        {
            let handle = self.entry(session_id).await?;
            let mut entry = handle.lock().await;
            entry.session.set_prosody(prosody)?;
        }
        self.session_summary(session_id).await
    }

    /// One-shot fetch and ingest of a configured source.
    pub async fn trigger_ingest(&self, source_id: &str) -> Result<IngestReport, ServiceError> {
        let source = self
            .sources
            .iter()
            .find(|s| s.id == source_id)
            .ok_or_else(|| ServiceError::UnknownSource(source_id.to_string()))?;
        self.ingest_source(source).await
    }

    pub async fn ingest_source(&self, source: &FeedSource) -> Result<IngestReport, ServiceError> {
        let raw = fetch_feed(source, self.settings.fetch_timeout).await.map_err(IngestError::from)?;
        let feed = ingest::normalize(&raw.bytes, &source.id)?;
        Ok(ingest::ingest(&feed, self.linker.as_ref(), &self.graph).await?)
    }

    /// Ingests a local feed file under the source id derived from its stem.
    pub async fn ingest_file(&self, path: &Path) -> Result<IngestReport, ServiceError> {
        let id = path.file_stem().and_then(|s| s.to_str()).unwrap_or("file");
        self.ingest_source(&FeedSource::file(id, path.to_string_lossy())).await
    }

    pub fn save_snapshot(&self, path: &Path) -> Result<(), ServiceError> {
        let store = self.graph.read()?;
        Ok(snapshot::save(&store, path)?)
    }

    pub fn load_snapshot(&self, path: &Path) -> Result<(), ServiceError> {
        let store = snapshot::load(path)?;
        self.graph.replace(store)?;
        Ok(())
    }
}

impl From<NluError> for ServiceError {
    fn from(e: NluError) -> Self {
        ServiceError::Config(e.to_string())
    }
}

impl From<QueryError> for ServiceError {
    fn from(e: QueryError) -> Self {
        match e {
            QueryError::Graph(g) => g.into(),
            e => ServiceError::BadRequest(e.to_string()),
        }
    }
}

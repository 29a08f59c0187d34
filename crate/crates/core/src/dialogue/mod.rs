//! Session-scoped dialogue state machine.
//!
//! States: `Idle` → `Browsing` (suggestions on offer) → `Reading` (an
//! article is open). Every `(state, intent)` pair has a transition; see
//! `docs/transitions.md` for the matrix. Failures never escape as errors:
//! they become a `Say` with an explanatory text key.

use std::collections::BTreeMap;
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{GraphStore, Node, NodeLabel};
use crate::linking::Gazetteer;
use crate::nlu::{IntentConfig, IntentName, IntentResult};
use crate::query::{related_articles, Params, RelatedWeights, ResultRow, TemplateRegistry};
use crate::text::fold_key;

pub const DEFAULT_PAGE_SIZE: usize = 3;
pub const MIN_RATE: f64 = 0.5;
pub const MAX_RATE: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DialogueState {
    Idle,
    Browsing,
    Reading,
}

impl DialogueState {
    pub const ALL: [DialogueState; 3] = [DialogueState::Idle, DialogueState::Browsing, DialogueState::Reading];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prosody {
    pub rate: f64,
    #[serde(default)]
    pub voice: String,
}

impl Default for Prosody {
    fn default() -> Self {
        Self { rate: 1.0, voice: String::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArticleRef {
    pub key: String,
    pub title: String,
    pub date: String,
}

impl ArticleRef {
    fn from_node(node: &Node) -> Self {
        let prop = |k: &str| node.props.get(k).cloned().unwrap_or_default();
        Self { key: node.key.clone(), title: prop("title"), date: prop("date") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DialogueSession {
    pub session_id: String,
    pub language: String,
    pub state: DialogueState,
    /// Current page, at most `page_size` entries.
    pub suggestions: Vec<ArticleRef>,
    /// Full ranked result list behind the pages.
    pub results: Vec<ArticleRef>,
    pub page_offset: usize,
    pub current_article: Option<String>,
    pub prosody: Prosody,
    pub created: DateTime<Utc>,
    pub last_active: DateTime<Utc>,
}

impl DialogueSession {
    pub fn suggestion_titles(&self) -> Vec<String> {
        self.suggestions.iter().map(|a| a.title.clone()).collect()
    }

    fn clear_results(&mut self) {
        self.results.clear();
        self.suggestions.clear();
        self.page_offset = 0;
    }

    pub fn set_prosody(&mut self, prosody: Prosody) -> Result<(), DialogueError> {
        if !(MIN_RATE..=MAX_RATE).contains(&prosody.rate) {
            return Err(DialogueError::InvalidRate(prosody.rate));
        }
        self.prosody = prosody;
        Ok(())
    }
}

/// Keys into the per-language response templates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TextKey {
    Greeting,
    OverviewIntro,
    ResortList,
    ResortIntro,
    EntityIntro,
    RelatedIntro,
    MoreIntro,
    NoArticles,
    NoResorts,
    UnknownResort,
    NoArticlesResort,
    NoArticlesEntity,
    NoSuggestions,
    NoMore,
    OutOfRange,
    ClarifySelection,
    NothingToRead,
    FallbackHint,
    Help,
    Goodbye,
    SearchFailed,
}

impl TextKey {
    pub const ALL: [TextKey; 21] = [
        TextKey::Greeting,
        TextKey::OverviewIntro,
        TextKey::ResortList,
        TextKey::ResortIntro,
        TextKey::EntityIntro,
        TextKey::RelatedIntro,
        TextKey::MoreIntro,
        TextKey::NoArticles,
        TextKey::NoResorts,
        TextKey::UnknownResort,
        TextKey::NoArticlesResort,
        TextKey::NoArticlesEntity,
        TextKey::NoSuggestions,
        TextKey::NoMore,
        TextKey::OutOfRange,
        TextKey::ClarifySelection,
        TextKey::NothingToRead,
        TextKey::FallbackHint,
        TextKey::Help,
        TextKey::Goodbye,
        TextKey::SearchFailed,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TextKey::Greeting => "greeting",
            TextKey::OverviewIntro => "overview_intro",
            TextKey::ResortList => "resort_list",
            TextKey::ResortIntro => "resort_intro",
            TextKey::EntityIntro => "entity_intro",
            TextKey::RelatedIntro => "related_intro",
            TextKey::MoreIntro => "more_intro",
            TextKey::NoArticles => "no_articles",
            TextKey::NoResorts => "no_resorts",
            TextKey::UnknownResort => "unknown_resort",
            TextKey::NoArticlesResort => "no_articles_resort",
            TextKey::NoArticlesEntity => "no_articles_entity",
            TextKey::NoSuggestions => "no_suggestions",
            TextKey::NoMore => "no_more",
            TextKey::OutOfRange => "out_of_range",
            TextKey::ClarifySelection => "clarify_selection",
            TextKey::NothingToRead => "nothing_to_read",
            TextKey::FallbackHint => "fallback_hint",
            TextKey::Help => "help",
            TextKey::Goodbye => "goodbye",
            TextKey::SearchFailed => "search_failed",
        }
    }
}

impl fmt::Display for TextKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Directive {
    Next,
    Again,
    Pause,
    Play,
}

impl Directive {
    pub fn as_str(self) -> &'static str {
        match self {
            Directive::Next => "next",
            Directive::Again => "again",
            Directive::Pause => "pause",
            Directive::Play => "play",
        }
    }
}

pub type TextParams = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DialogueAction {
    Say { key: TextKey, params: TextParams },
    SuggestArticles { intro: TextKey, params: TextParams, articles: Vec<ArticleRef> },
    ReadArticle { article: String, title: String, text: String, full: bool },
    PlaybackDirective { directive: Directive },
    Help,
    Goodbye,
}

impl DialogueAction {
    pub fn say(key: TextKey) -> Self {
        DialogueAction::Say { key, params: TextParams::new() }
    }

    fn say_with(key: TextKey, params: &[(&str, String)]) -> Self {
        DialogueAction::Say { key, params: params.iter().map(|(k, v)| (k.to_string(), v.clone())).collect() }
    }
}

#[derive(Debug, Error)]
pub enum DialogueError {
    #[error("unsupported language {0:?}")]
    UnsupportedLanguage(String),
    #[error("speaking rate {0} outside [0.5, 2.0]")]
    InvalidRate(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DialogueConfig {
    pub page_size: usize,
    /// Upper bound on results fetched per search (pages are cut from these).
    pub max_results: usize,
    pub related: RelatedWeights,
}

impl Default for DialogueConfig {
    fn default() -> Self {
        Self { page_size: DEFAULT_PAGE_SIZE, max_results: 30, related: RelatedWeights::default() }
    }
}

/// Read-only collaborators for one turn.
pub struct DialogueContext<'a> {
    pub store: &'a GraphStore,
    pub templates: &'a TemplateRegistry,
    pub gazetteer: &'a Gazetteer,
    pub nlu: &'a IntentConfig,
    pub config: DialogueConfig,
}

pub fn new_session(
    session_id: &str,
    language: &str,
    supported: &[&str],
    now: DateTime<Utc>,
) -> Result<(DialogueSession, Vec<DialogueAction>), DialogueError> {
    if !supported.contains(&language) {
        return Err(DialogueError::UnsupportedLanguage(language.to_string()));
    }
    let session = DialogueSession {
        session_id: session_id.to_string(),
        language: language.to_string(),
        state: DialogueState::Idle,
        suggestions: Vec::new(),
        results: Vec::new(),
        page_offset: 0,
        current_article: None,
        prosody: Prosody::default(),
        created: now,
        last_active: now,
    };
    Ok((session, vec![DialogueAction::say(TextKey::Greeting)]))
}

fn article_refs(rows: &[ResultRow], var: &str) -> Vec<ArticleRef> {
    rows.iter()
        .filter_map(|r| r.get(var))
        .filter(|n| n.label == NodeLabel::Article)
        .map(ArticleRef::from_node)
        .collect()
}

impl DialogueContext<'_> {
    fn run(&self, template: &str, params: &[(&str, &str)]) -> Option<Vec<ArticleRef>> {
        let params: Params = params.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        let t = self.templates.get(template)?;
        match t.run(&params, self.store) {
            Ok(rows) => Some(article_refs(&rows, &t.plan.return_var)),
            Err(e) => {
                tracing::warn!(template, error = %e, "template failed");
                None
            }
        }
    }

    fn max(&self) -> String {
        self.config.max_results.to_string()
    }

    /// Gazetteer alias, then graph entity name, then tag name.
    fn entity_articles(&self, spoken: &str) -> Option<(String, Vec<ArticleRef>)> {
        let max = self.max();
        if let Some(entry) = self.gazetteer.lookup(spoken) {
            let found = self.run("articles_by_entity", &[("id", &entry.wiki_data_item_id), ("n", &max)])?;
            if !found.is_empty() {
                return Some((entry.name.clone(), found));
            }
        }
        let entities = self.templates.get("entity_by_name").and_then(|t| {
            let params = Params::from([("name".to_string(), spoken.to_string())]);
            t.run(&params, self.store).ok().map(|rows| (rows, t.plan.return_var.clone()))
        });
        if let Some((rows, var)) = entities {
            for entity in rows.iter().filter_map(|r| r.get(&var)) {
                let found = self.run("articles_by_entity", &[("id", &entity.key), ("n", &max)])?;
                if !found.is_empty() {
                    let name = entity.props.get("name").cloned().unwrap_or_else(|| entity.key.clone());
                    return Some((name, found));
                }
            }
        }
        let found = self.run("articles_by_tag", &[("name", spoken), ("n", &max)])?;
        if !found.is_empty() {
            let display = self
                .store
                .find(NodeLabel::Tag, spoken)
                .and_then(|id| self.store.node(id))
                .and_then(|n| n.props.get("display_name").cloned())
                .unwrap_or_else(|| spoken.to_string());
            return Some((display, found));
        }
        None
    }
}

fn show_results(
    session: &mut DialogueSession,
    results: Vec<ArticleRef>,
    page_size: usize,
    intro: TextKey,
    params: TextParams,
) -> DialogueAction {
    session.results = results;
    session.page_offset = 0;
    session.suggestions = session.results.iter().take(page_size).cloned().collect();
    session.state = DialogueState::Browsing;
    session.current_article = None;
    DialogueAction::SuggestArticles { intro, params, articles: session.suggestions.clone() }
}

fn read_article(session: &mut DialogueSession, article: &ArticleRef, ctx: &DialogueContext<'_>) -> Vec<DialogueAction> {
    let Some(node) = ctx.store.find(NodeLabel::Article, &article.key).and_then(|id| ctx.store.node(id)) else {
        return vec![DialogueAction::say(TextKey::NoArticles)];
    };
    let opening = node.props.get("opening_paragraph").cloned().unwrap_or_default();
    let text = if opening.is_empty() { node.props.get("body").cloned().unwrap_or_default() } else { opening };
    session.state = DialogueState::Reading;
    session.current_article = Some(node.key.clone());
    let mut actions = vec![DialogueAction::ReadArticle {
        article: node.key.clone(),
        title: node.props.get("title").cloned().unwrap_or_default(),
        text,
        full: false,
    }];

    let related = related_articles(&node.key, ctx.config.max_results, ctx.store, ctx.config.related).unwrap_or_default();
    let refs: Vec<ArticleRef> = related
        .iter()
        .filter_map(|r| ctx.store.node(r.id))
        .map(ArticleRef::from_node)
        .collect();
    if !refs.is_empty() {
        session.results = refs;
        session.page_offset = 0;
        session.suggestions = session.results.iter().take(ctx.config.page_size).cloned().collect();
        actions.push(DialogueAction::SuggestArticles {
            intro: TextKey::RelatedIntro,
            params: TextParams::new(),
            articles: session.suggestions.clone(),
        });
    }
    actions
}

/// Advances `session` by one recognized intent and returns what to say/do.
pub fn handle(session: &mut DialogueSession, intent: &IntentResult, ctx: &DialogueContext<'_>) -> Vec<DialogueAction> {
    let page = ctx.config.page_size.max(1);
    let max = ctx.max();
    match intent.intent {
        IntentName::Greeting => vec![DialogueAction::say(TextKey::Greeting)],

        IntentName::Overview => match ctx.run("overview", &[]) {
            None => vec![DialogueAction::say(TextKey::SearchFailed)],
            Some(found) if found.is_empty() => vec![DialogueAction::say(TextKey::NoArticles)],
            Some(found) => vec![show_results(session, found, page, TextKey::OverviewIntro, TextParams::new())],
        },

        IntentName::ListResorts => {
            let names: Vec<String> = ctx
                .store
                .nodes_with_label(NodeLabel::Resort)
                .into_iter()
                .filter_map(|id| ctx.store.node(id))
                .map(|n| n.props.get("display_name").cloned().unwrap_or_else(|| n.key.clone()))
                .collect();
            if names.is_empty() {
                vec![DialogueAction::say(TextKey::NoResorts)]
            } else {
                vec![DialogueAction::say_with(TextKey::ResortList, &[("resorts", names.join(", "))])]
            }
        }

        IntentName::ResortSearch => {
            let Some(spoken) = intent.slot("resort") else {
                return vec![DialogueAction::say(TextKey::FallbackHint)];
            };
            let canonical = ctx.nlu.resort(spoken).map(str::to_string).unwrap_or_else(|| fold_key(spoken));
            let Some(node) = ctx.store.find(NodeLabel::Resort, &canonical).and_then(|id| ctx.store.node(id)) else {
                return vec![DialogueAction::say_with(TextKey::UnknownResort, &[("resort", spoken.to_string())])];
            };
            let display = node.props.get("display_name").cloned().unwrap_or_else(|| node.key.clone());
            match ctx.run("articles_by_resort", &[("name", &node.key), ("n", &max)]) {
                None => vec![DialogueAction::say(TextKey::SearchFailed)],
                Some(found) if found.is_empty() => {
                    vec![DialogueAction::say_with(TextKey::NoArticlesResort, &[("resort", display)])]
                }
                Some(found) => {
                    let params = TextParams::from([("resort".to_string(), display)]);
                    vec![show_results(session, found, page, TextKey::ResortIntro, params)]
                }
            }
        }

        IntentName::EntitySearch => {
            let Some(spoken) = intent.slot("entity_text") else {
                return vec![DialogueAction::say(TextKey::FallbackHint)];
            };
            match ctx.entity_articles(spoken) {
                Some((name, found)) => {
                    let params = TextParams::from([("entity".to_string(), name)]);
                    vec![show_results(session, found, page, TextKey::EntityIntro, params)]
                }
                None => vec![DialogueAction::say_with(TextKey::NoArticlesEntity, &[("entity", spoken.to_string())])],
            }
        }

        IntentName::SelectSuggestion => {
            if session.suggestions.is_empty() {
                return vec![DialogueAction::say(TextKey::NoSuggestions)];
            }
            let index = if let Some(n) = intent.slot("ordinal").and_then(|s| s.parse::<usize>().ok()) {
                if n == 0 || n > session.suggestions.len() {
                    return vec![DialogueAction::say_with(
                        TextKey::OutOfRange,
                        &[("count", session.suggestions.len().to_string())],
                    )];
                }
                n - 1
            } else if let Some(keyword) = intent.slot("keyword") {
                match ctx.nlu.match_headline_keyword(keyword, &session.suggestion_titles()) {
                    Some(i) => i,
                    None => return vec![DialogueAction::say(TextKey::ClarifySelection)],
                }
            } else {
                return vec![DialogueAction::say(TextKey::ClarifySelection)];
            };
            let chosen = session.suggestions[index].clone();
            read_article(session, &chosen, ctx)
        }

        IntentName::ReadFull => {
            let node = match (&session.state, &session.current_article) {
                (DialogueState::Reading, Some(key)) => {
                    ctx.store.find(NodeLabel::Article, key).and_then(|id| ctx.store.node(id))
                }
                _ => None,
            };
            match node {
                None => vec![DialogueAction::say(TextKey::NothingToRead)],
                Some(node) => {
                    let prop = |k: &str| node.props.get(k).cloned().unwrap_or_default();
                    let body = prop("body");
                    let text = if body.is_empty() { prop("opening_paragraph") } else { body };
                    vec![DialogueAction::ReadArticle { article: node.key.clone(), title: prop("title"), text, full: true }]
                }
            }
        }

        IntentName::MoreSuggestions => {
            if session.results.is_empty() {
                return vec![DialogueAction::say(TextKey::NoSuggestions)];
            }
            let next = session.page_offset + page;
            if next >= session.results.len() {
                return vec![DialogueAction::say(TextKey::NoMore)];
            }
            session.page_offset = next;
            session.suggestions = session.results.iter().skip(next).take(page).cloned().collect();
            session.state = DialogueState::Browsing;
            session.current_article = None;
            vec![DialogueAction::SuggestArticles {
                intro: TextKey::MoreIntro,
                params: TextParams::new(),
                articles: session.suggestions.clone(),
            }]
        }

        IntentName::ControlNext => vec![DialogueAction::PlaybackDirective { directive: Directive::Next }],
        IntentName::ControlAgain => vec![DialogueAction::PlaybackDirective { directive: Directive::Again }],
        IntentName::ControlPause => vec![DialogueAction::PlaybackDirective { directive: Directive::Pause }],
        IntentName::ControlPlay => vec![DialogueAction::PlaybackDirective { directive: Directive::Play }],

        IntentName::Help => vec![DialogueAction::Help],
        IntentName::Fallback => vec![DialogueAction::say(TextKey::FallbackHint)],
        IntentName::Goodbye => {
            session.clear_results();
            session.state = DialogueState::Idle;
            session.current_article = None;
            vec![DialogueAction::Goodbye]
        }
    }
}

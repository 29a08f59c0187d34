//! Turns dialogue actions into what the client shows and speaks.

mod ssml;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dialogue::{DialogueAction, Directive, Prosody, TextKey, TextParams};

pub use ssml::{build_ssml, normalize_whitespace, sanitize, split_sentences, strip_markup, Emphasis, Pause, Segments};

pub const BUILTIN_EN: &str = include_str!("../../assets/responses.en.json");
pub const BUILTIN_DE: &str = include_str!("../../assets/responses.de.json");
pub const DEFAULT_PAUSE_MS: u32 = 300;

#[derive(Debug, Error, PartialEq)]
pub enum ResponseError {
    #[error("no template for {key:?} in language {language:?}")]
    MissingTemplate { language: String, key: String },
    #[error("template {key:?} needs a value for {{{placeholder}}}")]
    MissingPlaceholder { key: String, placeholder: String },
    #[error("malformed template {key:?}: {reason}")]
    MalformedTemplate { key: String, reason: String },
    #[error("speaking rate {0} outside [0.5, 2.0]")]
    InvalidRate(f64),
    #[error("response templates: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq)]
enum Piece {
    Lit(String),
    Hole(String),
}

/// Per-language response templates with `{placeholder}` holes.
#[derive(Debug, Clone)]
pub struct ResponseTemplateSet {
    pub language: String,
    templates: BTreeMap<String, Vec<Piece>>,
}

fn compile(key: &str, template: &str) -> Result<Vec<Piece>, ResponseError> {
    let malformed = |reason: &str| ResponseError::MalformedTemplate { key: key.to_string(), reason: reason.to_string() };
    let mut pieces = Vec::new();
    let mut lit = String::new();
    let mut chars = template.chars();
    while let Some(c) = chars.next() {
        match c {
            '{' => {
                let mut name = String::new();
                loop {
                    match chars.next() {
                        Some('}') => break,
                        Some(c) if c.is_ascii_alphanumeric() || c == '_' => name.push(c),
                        Some(_) => return Err(malformed("bad placeholder name")),
                        None => return Err(malformed("unclosed placeholder")),
                    }
                }
                if name.is_empty() {
                    return Err(malformed("empty placeholder"));
                }
                if !lit.is_empty() {
                    pieces.push(Piece::Lit(std::mem::take(&mut lit)));
                }
                pieces.push(Piece::Hole(name));
            }
            '}' => return Err(malformed("stray '}'")),
            c => lit.push(c),
        }
    }
    if !lit.is_empty() {
        pieces.push(Piece::Lit(lit));
    }
    Ok(pieces)
}

impl ResponseTemplateSet {
    pub fn new(language: &str, templates: BTreeMap<String, String>) -> Result<Self, ResponseError> {
        let templates = templates
            .iter()
            .map(|(k, v)| compile(k, v).map(|p| (k.clone(), p)))
            .collect::<Result<_, _>>()?;
        Ok(Self { language: language.to_string(), templates })
    }

    pub fn from_json(language: &str, text: &str) -> Result<Self, ResponseError> {
        let map: BTreeMap<String, String> =
            serde_json::from_str(text).map_err(|e| ResponseError::Config(e.to_string()))?;
        Self::new(language, map)
    }

    pub fn builtin(language: &str) -> Option<Self> {
        let text = match language {
            "en" => BUILTIN_EN,
            "de" => BUILTIN_DE,
            _ => return None,
        };
        Some(Self::from_json(language, text).expect("builtin response templates are valid"))
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.templates.keys().map(String::as_str)
    }

    pub fn fill(&self, key: &str, params: &TextParams) -> Result<String, ResponseError> {
        let pieces = self.templates.get(key).ok_or_else(|| ResponseError::MissingTemplate {
            language: self.language.clone(),
            key: key.to_string(),
        })?;
        let mut out = String::new();
        for piece in pieces {
            match piece {
                Piece::Lit(s) => out.push_str(s),
                Piece::Hole(name) => match params.get(name) {
                    Some(v) => out.push_str(v),
                    None => {
                        return Err(ResponseError::MissingPlaceholder { key: key.to_string(), placeholder: name.clone() })
                    }
                },
            }
        }
        Ok(out)
    }
}

/// Template sets by language.
#[derive(Debug, Clone, Default)]
pub struct ResponseTemplates {
    sets: BTreeMap<String, ResponseTemplateSet>,
}

impl ResponseTemplates {
    pub fn builtin() -> Self {
        let mut t = Self::default();
        for lang in ["en", "de"] {
            t.insert(ResponseTemplateSet::builtin(lang).expect("builtin language"));
        }
        t
    }

    pub fn insert(&mut self, set: ResponseTemplateSet) {
        self.sets.insert(set.language.clone(), set);
    }

    pub fn get(&self, language: &str) -> Option<&ResponseTemplateSet> {
        self.sets.get(language)
    }

    pub fn languages(&self) -> impl Iterator<Item = &str> {
        self.sets.keys().map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NumberedSuggestion {
    pub number: usize,
    pub key: String,
    pub title: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentResponse {
    pub text: String,
    pub ssml: String,
    pub suggestions: Vec<NumberedSuggestion>,
    pub directives: Vec<Directive>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RenderOptions {
    /// Break inserted after every enumerated suggestion.
    pub pause_ms: u32,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self { pause_ms: DEFAULT_PAUSE_MS }
    }
}

fn with_stop(s: &str) -> String {
    let s = s.trim_end();
    match s.chars().last() {
        Some('.' | '!' | '?' | '…') => s.to_string(),
        _ => format!("{s}."),
    }
}

fn spoken(text: &str) -> Vec<String> {
    split_sentences(&sanitize(text))
}

/// Renders one turn's actions.
///
/// Every non-directive action becomes one or more paragraphs. The
/// suggestion list of the response is the last enumeration in `actions`.
pub fn render(
    actions: &[DialogueAction],
    templates: &ResponseTemplateSet,
    prosody: &Prosody,
    options: RenderOptions,
) -> Result<AgentResponse, ResponseError> {
    let mut segments: Segments = Vec::new();
    let mut emphases = Vec::new();
    let mut pauses = Vec::new();
    let mut suggestions = Vec::new();
    let mut directives = Vec::new();

    let push_text = |segments: &mut Segments, text: String| {
        let sentences = spoken(&text);
        if !sentences.is_empty() {
            segments.push(sentences);
        }
    };

    for action in actions {
        match action {
            DialogueAction::Say { key, params } => push_text(&mut segments, templates.fill(key.as_str(), params)?),
            DialogueAction::Help => push_text(&mut segments, templates.fill(TextKey::Help.as_str(), &TextParams::new())?),
            DialogueAction::Goodbye => {
                push_text(&mut segments, templates.fill(TextKey::Goodbye.as_str(), &TextParams::new())?)
            }
            DialogueAction::PlaybackDirective { directive } => directives.push(*directive),
            DialogueAction::SuggestArticles { intro, params, articles } => {
                push_text(&mut segments, templates.fill(intro.as_str(), params)?);
                let paragraph = segments.len();
                let items: Vec<String> = articles
                    .iter()
                    .enumerate()
                    .map(|(i, a)| format!("{}. {}", i + 1, with_stop(&normalize_whitespace(&sanitize(&a.title)))))
                    .collect();
                pauses.extend((0..items.len()).map(|sentence| Pause { paragraph, sentence, ms: options.pause_ms }));
                if !items.is_empty() {
                    segments.push(items);
                }
                suggestions = articles
                    .iter()
                    .enumerate()
                    .map(|(i, a)| NumberedSuggestion { number: i + 1, key: a.key.clone(), title: a.title.clone() })
                    .collect();
            }
            DialogueAction::ReadArticle { title, text, .. } => {
                let title = normalize_whitespace(&sanitize(title));
                if !title.is_empty() {
                    let heading = with_stop(&title);
                    emphases.push(Emphasis {
                        paragraph: segments.len(),
                        sentence: 0,
                        start: 0,
                        end: title.chars().count(),
                    });
                    segments.push(vec![heading]);
                }
                push_text(&mut segments, text.clone());
            }
        }
    }

    let ssml = build_ssml(&segments, prosody, &emphases, &pauses)?;
    let text = segments.iter().map(|p| p.join(" ")).collect::<Vec<_>>().join("\n");
    Ok(AgentResponse { text, ssml, suggestions, directives })
}

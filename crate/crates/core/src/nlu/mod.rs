//! Rule-based intent recognition with slot filling.
//!
//! Recognition runs three stages over the normalized utterance:
//!
//! 1. exact match against a training phrase, capturing `{slot}` spans
//!    (confidence 1.0);
//! 2. token overlap (Jaccard over non-stopwords) against slot-free phrases,
//!    accepted at or above the configured threshold;
//! 3. with suggestions on screen, an ordinal or a headline keyword selects
//!    one of them.
//!
//! Anything else is `fallback` with confidence 0.

mod ordinal;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::fold_german;

pub use ordinal::{ordinal_value, parse_ordinal, render_ordinal};

pub const BUILTIN_EN: &str = include_str!("../../assets/intents.en.json");
pub const BUILTIN_DE: &str = include_str!("../../assets/intents.de.json");

const ORDINAL_CONFIDENCE: f64 = 0.8;
const KEYWORD_CONFIDENCE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntentName {
    Greeting,
    Overview,
    ListResorts,
    ResortSearch,
    EntitySearch,
    SelectSuggestion,
    MoreSuggestions,
    ReadFull,
    ControlNext,
    ControlAgain,
    ControlPause,
    ControlPlay,
    Help,
    Goodbye,
    Fallback,
}

impl IntentName {
    pub const ALL: [IntentName; 15] = [
        IntentName::Greeting,
        IntentName::Overview,
        IntentName::ListResorts,
        IntentName::ResortSearch,
        IntentName::EntitySearch,
        IntentName::SelectSuggestion,
        IntentName::MoreSuggestions,
        IntentName::ReadFull,
        IntentName::ControlNext,
        IntentName::ControlAgain,
        IntentName::ControlPause,
        IntentName::ControlPlay,
        IntentName::Help,
        IntentName::Goodbye,
        IntentName::Fallback,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            IntentName::Greeting => "greeting",
            IntentName::Overview => "overview",
            IntentName::ListResorts => "list_resorts",
            IntentName::ResortSearch => "resort_search",
            IntentName::EntitySearch => "entity_search",
            IntentName::SelectSuggestion => "select_suggestion",
            IntentName::MoreSuggestions => "more_suggestions",
            IntentName::ReadFull => "read_full",
            IntentName::ControlNext => "control_next",
            IntentName::ControlAgain => "control_again",
            IntentName::ControlPause => "control_pause",
            IntentName::ControlPlay => "control_play",
            IntentName::Help => "help",
            IntentName::Goodbye => "goodbye",
            IntentName::Fallback => "fallback",
        }
    }
}

impl fmt::Display for IntentName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for IntentName {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        IntentName::ALL.into_iter().find(|i| i.as_str() == s).ok_or(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlotKind {
    Resort,
    EntityText,
    Ordinal,
    Keyword,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotDef {
    pub name: String,
    pub kind: SlotKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntentDef {
    pub name: IntentName,
    #[serde(default)]
    pub phrases: Vec<String>,
    #[serde(default)]
    pub slots: Vec<SlotDef>,
}

fn default_threshold() -> f64 {
    0.6
}

/// On-disk intent configuration for one language.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntentConfigFile {
    pub language: String,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub stopwords: Vec<String>,
    /// Leading words stripped from free-text slots ("the world cup" → "world cup").
    #[serde(default)]
    pub determiners: Vec<String>,
    /// Canonical resort name → spoken synonyms.
    #[serde(default)]
    pub resorts: BTreeMap<String, Vec<String>>,
    pub intents: Vec<IntentDef>,
}

#[derive(Debug, Error)]
pub enum NluError {
    #[error("intent config error: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntentResult {
    pub intent: IntentName,
    pub slots: BTreeMap<String, String>,
    pub confidence: f64,
}

impl IntentResult {
    pub fn fallback() -> Self {
        Self { intent: IntentName::Fallback, slots: BTreeMap::new(), confidence: 0.0 }
    }

    pub fn new(intent: IntentName, slots: &[(&str, &str)], confidence: f64) -> Self {
        let slots = slots.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        Self { intent, slots, confidence }
    }

    pub fn slot(&self, name: &str) -> Option<&str> {
        self.slots.get(name).map(String::as_str)
    }
}

/// What the recognizer needs to know about the session.
#[derive(Debug, Clone, Default)]
pub struct NluContext {
    /// Titles of the suggestions currently offered, in order.
    pub suggestions: Vec<String>,
}

#[derive(Debug, Clone)]
enum Part {
    Word(String),
    Slot(String, SlotKind),
}

#[derive(Debug, Clone)]
struct Phrase {
    intent: IntentName,
    parts: Vec<Part>,
    literals: usize,
    constrained: usize,
    order: usize,
}

/// Loaded, validated intent configuration.
#[derive(Debug, Clone)]
pub struct IntentConfig {
    pub language: String,
    pub threshold: f64,
    stopwords: HashSet<String>,
    determiners: Vec<String>,
    /// Normalized synonym → canonical resort.
    resorts: HashMap<String, String>,
    phrases: Vec<Phrase>,
}

/// Lower-cases, strips punctuation, collapses whitespace; German input
/// also folds umlauts and ß.
pub fn normalize_utterance(text: &str, lang: &str) -> String {
    let lowered = text.to_lowercase();
    let folded = if lang == "de" { fold_german(&lowered) } else { lowered };
    let mut cleaned = String::with_capacity(folded.len());
    for c in folded.chars() {
        if c.is_alphanumeric() || c.is_whitespace() {
            cleaned.push(c);
        } else if matches!(c, '-' | '/' | '_') {
            cleaned.push(' ');
        }
    }
    cleaned.split_whitespace().collect::<Vec<_>>().join(" ")
}

impl IntentConfig {
    pub fn from_json(text: &str) -> Result<Self, NluError> {
        let file: IntentConfigFile = serde_json::from_str(text).map_err(|e| NluError::Config(e.to_string()))?;
        Self::new(file)
    }

    pub fn builtin(lang: &str) -> Option<Self> {
        let text = match lang {
            "en" => BUILTIN_EN,
            "de" => BUILTIN_DE,
            _ => return None,
        };
        Some(Self::from_json(text).expect("built-in intent config is valid"))
    }

    pub fn new(file: IntentConfigFile) -> Result<Self, NluError> {
        let lang = file.language.clone();
        let norm = |s: &str| normalize_utterance(s, &lang);
        if !(0.0..=1.0).contains(&file.threshold) {
            return Err(NluError::Config(format!("threshold {} outside [0, 1]", file.threshold)));
        }
        let mut names = HashSet::new();
        let mut phrases = Vec::new();
        for def in &file.intents {
            if !names.insert(def.name) {
                return Err(NluError::Config(format!("intent {} defined twice", def.name)));
            }
            if def.name == IntentName::Fallback && !def.phrases.is_empty() {
                return Err(NluError::Config("fallback must not have phrases".into()));
            }
            let slots: HashMap<&str, SlotKind> = def.slots.iter().map(|s| (s.name.as_str(), s.kind)).collect();
            for raw in &def.phrases {
                let mut parts = Vec::new();
                for word in raw.split_whitespace() {
                    if let Some(name) = word.strip_prefix('{').and_then(|w| w.strip_suffix('}')) {
                        let kind = slots.get(name).ok_or_else(|| {
                            NluError::Config(format!("intent {}: undeclared slot {{{name}}} in {raw:?}", def.name))
                        })?;
                        parts.push(Part::Slot(name.to_string(), *kind));
                    } else {
                        parts.extend(norm(word).split_whitespace().map(|w| Part::Word(w.to_string())));
                    }
                }
                if parts.is_empty() {
                    return Err(NluError::Config(format!("intent {}: empty phrase", def.name)));
                }
                let literals = parts.iter().filter(|p| matches!(p, Part::Word(_))).count();
                let constrained = parts
                    .iter()
                    .filter(|p| matches!(p, Part::Slot(_, SlotKind::Resort | SlotKind::Ordinal)))
                    .count();
                let order = phrases.len();
                phrases.push(Phrase { intent: def.name, parts, literals, constrained, order });
            }
        }
        let mut resorts = HashMap::new();
        for (canonical, synonyms) in &file.resorts {
            for s in std::iter::once(canonical).chain(synonyms) {
                resorts.insert(norm(s), crate::text::fold_key(canonical));
            }
        }
        Ok(Self {
            language: lang.clone(),
            threshold: file.threshold,
            stopwords: file.stopwords.iter().map(|s| norm(s)).collect(),
            determiners: file.determiners.iter().map(|s| norm(s)).collect(),
            resorts,
            phrases,
        })
    }

    pub fn is_stopword(&self, token: &str) -> bool {
        self.stopwords.contains(token)
    }

    /// Canonical resort for a spoken name, if known.
    pub fn resort(&self, spoken: &str) -> Option<&str> {
        self.resorts.get(&normalize_utterance(spoken, &self.language)).map(String::as_str)
    }

    pub fn intents(&self) -> BTreeSet<IntentName> {
        self.phrases.iter().map(|p| p.intent).collect()
    }

    fn content_tokens(&self, text: &str) -> BTreeSet<String> {
        normalize_utterance(text, &self.language)
            .split(' ')
            .filter(|t| !t.is_empty() && !self.is_stopword(t))
            .map(str::to_string)
            .collect()
    }

    fn slot_value(&self, kind: SlotKind, tokens: &[&str]) -> Option<String> {
        match kind {
            SlotKind::Resort => self.resorts.get(&tokens.join(" ")).cloned(),
            SlotKind::Ordinal => match tokens {
                [one] => ordinal_value(one, &self.language).map(|n| n.to_string()),
                _ => None,
            },
            SlotKind::EntityText | SlotKind::Keyword => {
                let start = tokens.iter().take_while(|t| self.determiners.iter().any(|d| d == *t)).count();
                let rest = &tokens[start..];
                (!rest.is_empty()).then(|| rest.join(" "))
            }
        }
    }

    fn match_parts(&self, parts: &[Part], tokens: &[&str], slots: &mut BTreeMap<String, String>) -> bool {
        match parts.split_first() {
            None => tokens.is_empty(),
            Some((Part::Word(w), rest)) => {
                tokens.first().is_some_and(|t| t == w) && self.match_parts(rest, &tokens[1..], slots)
            }
            Some((Part::Slot(name, kind), rest)) => {
                for take in 1..=tokens.len() {
                    let Some(value) = self.slot_value(*kind, &tokens[..take]) else { continue };
                    if self.match_parts(rest, &tokens[take..], slots) {
                        slots.insert(name.clone(), value);
                        return true;
                    }
                }
                false
            }
        }
    }

    fn exact_match(&self, normalized: &str) -> Option<IntentResult> {
        let tokens: Vec<&str> = normalized.split(' ').filter(|t| !t.is_empty()).collect();
        if tokens.is_empty() {
            return None;
        }
        self.phrases
            .iter()
            .filter_map(|p| {
                let mut slots = BTreeMap::new();
                self.match_parts(&p.parts, &tokens, &mut slots).then_some((p, slots))
            })
            .max_by(|(a, _), (b, _)| {
                (a.literals, a.constrained)
                    .cmp(&(b.literals, b.constrained))
                    .then_with(|| b.order.cmp(&a.order))
            })
            .map(|(p, slots)| IntentResult { intent: p.intent, slots, confidence: 1.0 })
    }

    fn overlap_match(&self, normalized: &str) -> Option<IntentResult> {
        let utterance = self.content_tokens(normalized);
        if utterance.is_empty() {
            return None;
        }
        let mut best: Option<(f64, &Phrase)> = None;
        for p in self.phrases.iter().filter(|p| p.parts.iter().all(|x| matches!(x, Part::Word(_)))) {
            let words: BTreeSet<String> = p
                .parts
                .iter()
                .filter_map(|x| match x {
                    Part::Word(w) if !self.is_stopword(w) => Some(w.clone()),
                    _ => None,
                })
                .collect();
            if words.is_empty() {
                continue;
            }
            let inter = utterance.intersection(&words).count() as f64;
            let union = utterance.union(&words).count() as f64;
            let score = inter / union;
            if best.is_none_or(|(s, _)| score > s) {
                best = Some((score, p));
            }
        }
        best.filter(|(s, _)| *s >= self.threshold)
            .map(|(s, p)| IntentResult { intent: p.intent, slots: BTreeMap::new(), confidence: s })
    }

    /// Index of the suggestion title sharing the most content words with
    /// `text`; `None` on zero overlap or a tie.
    pub fn match_headline_keyword(&self, text: &str, suggestions: &[String]) -> Option<usize> {
        let wanted = self.content_tokens(text);
        let overlaps: Vec<usize> = suggestions
            .iter()
            .map(|title| self.content_tokens(title).intersection(&wanted).count())
            .collect();
        let max = *overlaps.iter().max()?;
        if max == 0 || overlaps.iter().filter(|&&o| o == max).count() > 1 {
            return None;
        }
        overlaps.iter().position(|&o| o == max)
    }

    /// Classifies `text`. Total: always yields exactly one result.
    pub fn recognize(&self, text: &str, context: &NluContext) -> IntentResult {
        let normalized = normalize_utterance(text, &self.language);
        if let Some(hit) = self.exact_match(&normalized) {
            return hit;
        }
        if let Some(hit) = self.overlap_match(&normalized) {
            return hit;
        }
        if !context.suggestions.is_empty() {
            if let Some(n) = parse_ordinal(&normalized, &self.language) {
                return IntentResult::new(IntentName::SelectSuggestion, &[("ordinal", &n.to_string())], ORDINAL_CONFIDENCE);
            }
            let wanted = self.content_tokens(&normalized);
            let touches_any =
                context.suggestions.iter().any(|t| self.content_tokens(t).intersection(&wanted).next().is_some());
            if touches_any {
                return IntentResult::new(IntentName::SelectSuggestion, &[("keyword", &normalized)], KEYWORD_CONFIDENCE);
            }
        }
        IntentResult::fallback()
    }
}

/// Intent configs by language code.
#[derive(Debug, Clone, Default)]
pub struct Nlu {
    configs: BTreeMap<String, IntentConfig>,
}

impl Nlu {
    pub fn builtin() -> Self {
        let mut nlu = Self::default();
        for lang in ["en", "de"] {
            nlu.insert(IntentConfig::builtin(lang).expect("built-in language"));
        }
        nlu
    }

    pub fn insert(&mut self, config: IntentConfig) {
        self.configs.insert(config.language.clone(), config);
    }

    pub fn get(&self, lang: &str) -> Option<&IntentConfig> {
        self.configs.get(lang)
    }

    pub fn languages(&self) -> impl Iterator<Item = &str> {
        self.configs.keys().map(String::as_str)
    }

    pub fn recognize(&self, text: &str, lang: &str, context: &NluContext) -> Result<IntentResult, NluError> {
        let config = self
            .get(lang)
            .ok_or_else(|| NluError::Config(format!("no intent config loaded for {lang:?}")))?;
        Ok(config.recognize(text, context))
    }
}

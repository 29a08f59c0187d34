use std::collections::{HashMap, HashSet};
use std::path::Path;

use thiserror::Error;

use super::{GazetteerEntry, Mention};
use crate::text::{char_slice, word_tokens};

#[derive(Debug, Error)]
pub enum GazetteerError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed gazetteer: {0}")]
    Malformed(String),
    #[error("duplicate entity id {0}")]
    DuplicateId(String),
}

/// An alias claimed by more than one entry; `winner` has the lowest Q number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ambiguity {
    pub alias: String,
    pub winner: String,
    pub loser: String,
}

#[derive(Debug, Clone, Copy)]
struct AliasHit {
    entry: usize,
    alias_chars: usize,
}

#[derive(Debug, Clone, Default)]
pub struct Gazetteer {
    entries: Vec<GazetteerEntry>,
    index: HashMap<Vec<String>, AliasHit>,
    max_tokens: usize,
    ambiguities: Vec<Ambiguity>,
}

fn q_number(id: &str) -> Option<u64> {
    id.strip_prefix('Q').filter(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))?.parse().ok()
}

fn alias_key(alias: &str) -> Vec<String> {
    word_tokens(alias).into_iter().map(|t| t.text).collect()
}

pub fn load_gazetteer(path: impl AsRef<Path>) -> Result<Gazetteer, GazetteerError> {
    Gazetteer::from_json(&std::fs::read_to_string(path)?)
}

impl Gazetteer {
    /// Parses a JSON array of entries. Blank input is an empty gazetteer.
    pub fn from_json(text: &str) -> Result<Self, GazetteerError> {
        if text.trim().is_empty() {
            return Ok(Self::default());
        }
        let entries: Vec<GazetteerEntry> =
            serde_json::from_str(text).map_err(|e| GazetteerError::Malformed(e.to_string()))?;
        Self::new(entries)
    }

    pub fn new(entries: Vec<GazetteerEntry>) -> Result<Self, GazetteerError> {
        let mut ids = HashSet::new();
        let mut g = Gazetteer::default();
        for (i, entry) in entries.iter().enumerate() {
            let malformed = |what: &str| GazetteerError::Malformed(format!("entry {i} ({}): {what}", entry.wiki_data_item_id));
            let q = q_number(&entry.wiki_data_item_id).ok_or_else(|| malformed("id must match Q[0-9]+"))?;
            if !ids.insert(q) {
                return Err(GazetteerError::DuplicateId(entry.wiki_data_item_id.clone()));
            }
            if entry.entity_class.trim().is_empty() {
                return Err(malformed("empty class"));
            }
            for alias in std::iter::once(&entry.name).chain(&entry.aliases) {
                let key = alias_key(alias);
                if key.is_empty() {
                    return Err(malformed(&format!("alias {alias:?} has no word characters")));
                }
                let hit = AliasHit { entry: i, alias_chars: alias.trim().chars().count() };
                g.max_tokens = g.max_tokens.max(key.len());
                match g.index.get(&key).copied() {
                    None => {
                        g.index.insert(key, hit);
                    }
                    Some(prev) if prev.entry == i => {
                        if hit.alias_chars > prev.alias_chars {
                            g.index.insert(key, hit);
                        }
                    }
                    Some(prev) => {
                        let prev_id = &entries[prev.entry].wiki_data_item_id;
                        let prev_q = q_number(prev_id).unwrap_or(u64::MAX);
                        let (winner, loser) = if q < prev_q {
                            g.index.insert(key, hit);
                            (entry.wiki_data_item_id.clone(), prev_id.clone())
                        } else {
                            (prev_id.clone(), entry.wiki_data_item_id.clone())
                        };
                        tracing::warn!(alias = %alias, %winner, %loser, "ambiguous gazetteer alias");
                        g.ambiguities.push(Ambiguity { alias: alias.clone(), winner, loser });
                    }
                }
            }
        }
        g.entries = entries;
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[GazetteerEntry] {
        &self.entries
    }

    pub fn ambiguities(&self) -> &[Ambiguity] {
        &self.ambiguities
    }

    pub fn alias_count(&self) -> usize {
        self.index.len()
    }

    /// The entry whose name or alias matches all of `text`, ignoring case
    /// and punctuation.
    pub fn lookup(&self, text: &str) -> Option<&GazetteerEntry> {
        self.index.get(&alias_key(text)).map(|hit| &self.entries[hit.entry])
    }

    /// Longest-match, left-to-right, non-overlapping mentions on word
    /// boundaries. Confidence is matched alias length over canonical name
    /// length, capped at 1; mentions below `min_confidence` are dropped
    /// after selection.
    pub fn annotate(&self, text: &str, min_confidence: f64) -> Vec<Mention> {
        let tokens = word_tokens(text);
        let mut mentions = Vec::new();
        let mut i = 0;
        let mut key: Vec<String> = Vec::with_capacity(self.max_tokens);
        while i < tokens.len() {
            let longest = self.max_tokens.min(tokens.len() - i);
            let found = (1..=longest).rev().find_map(|len| {
                key.clear();
                key.extend(tokens[i..i + len].iter().map(|t| t.text.clone()));
                self.index.get(&key).map(|hit| (len, *hit))
            });
            let Some((len, hit)) = found else {
                i += 1;
                continue;
            };
            let entry = &self.entries[hit.entry];
            let canonical = entry.name.trim().chars().count().max(1);
            let confidence = (hit.alias_chars as f64 / canonical as f64).min(1.0);
            let (start, end) = (tokens[i].start, tokens[i + len - 1].end);
            if confidence >= min_confidence {
                mentions.push(Mention {
                    surface: char_slice(text, start, end).to_string(),
                    start,
                    end,
                    entry: entry.clone(),
                    confidence,
                });
            }
            i += len;
        }
        mentions
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(id: &str, name: &str, aliases: &[&str], class: &str) -> GazetteerEntry {
        GazetteerEntry {
            wiki_data_item_id: id.into(),
            name: name.into(),
            aliases: aliases.iter().map(|s| s.to_string()).collect(),
            url: format!("https://www.wikidata.org/wiki/{id}"),
            entity_class: class.into(),
        }
    }

    fn fixture() -> Gazetteer {
        Gazetteer::new(vec![
            entry("Q22686", "Donald Trump", &["Donald J. Trump", "Trump"], "person"),
            entry("Q1384", "New York", &[], "state"),
            entry("Q9684", "The New York Times", &["New York Times"], "company"),
        ])
        .unwrap()
    }

    #[test]
    fn loads_and_indexes_aliases() {
        let g = fixture();
        assert_eq!(g.len(), 3);
        assert_eq!(g.alias_count(), 6);
        assert_eq!(g.lookup("donald   TRUMP").unwrap().wiki_data_item_id, "Q22686");
    }

    #[test]
    fn duplicate_id_rejected() {
        let err = Gazetteer::new(vec![entry("Q1", "A", &[], "c"), entry("Q1", "B", &[], "c")]).unwrap_err();
        assert!(matches!(err, GazetteerError::DuplicateId(id) if id == "Q1"));
    }

    #[test]
    fn empty_file_is_empty_gazetteer() {
        assert!(Gazetteer::from_json("").unwrap().is_empty());
        assert!(Gazetteer::from_json("[]").unwrap().is_empty());
        assert!(matches!(Gazetteer::from_json("{"), Err(GazetteerError::Malformed(_))));
    }

    #[test]
    fn malformed_entries() {
        assert!(matches!(Gazetteer::new(vec![entry("X1", "A", &[], "c")]), Err(GazetteerError::Malformed(_))));
        assert!(matches!(Gazetteer::new(vec![entry("Q1", "A", &["--"], "c")]), Err(GazetteerError::Malformed(_))));
        assert!(matches!(Gazetteer::new(vec![entry("Q1", "A", &[], " ")]), Err(GazetteerError::Malformed(_))));
    }

    #[test]
    fn ambiguous_alias_goes_to_lowest_q() {
        let g = Gazetteer::new(vec![entry("Q200", "Paris", &[], "city"), entry("Q90", "Paris", &[], "city")]).unwrap();
        assert_eq!(g.lookup("paris").unwrap().wiki_data_item_id, "Q90");
        assert_eq!(g.ambiguities().len(), 1);
        assert_eq!(g.ambiguities()[0].winner, "Q90");
    }

    #[test]
    fn trump_mention() {
        let m = fixture().annotate("Donald Trump visited Ohio.", 0.5);
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].entry.wiki_data_item_id, "Q22686");
        assert_eq!(m[0].confidence, 1.0);
        assert_eq!((m[0].start, m[0].end), (0, 12));
    }

    #[test]
    fn empty_text() {
        assert!(fixture().annotate("", 0.0).is_empty());
    }

    #[test]
    fn longest_match_wins() {
        let m = fixture().annotate("I read the New York Times today", 0.0);
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].surface, "the New York Times");
        let m = fixture().annotate("New York Times editors in New York", 0.0);
        assert_eq!(m.iter().map(|m| m.entry.wiki_data_item_id.as_str()).collect::<Vec<_>>(), ["Q9684", "Q1384"]);
        assert_eq!(m[0].entry.wiki_data_item_id, "Q9684");
    }

    #[test]
    fn short_alias_below_threshold_is_dropped() {
        let g = fixture();
        assert!(g.annotate("Trump said", 0.5).is_empty());
        let low = g.annotate("Trump said", 0.0);
        assert_eq!(low.len(), 1);
        assert!((low[0].confidence - 5.0 / 12.0).abs() < 1e-12);
    }

    #[test]
    fn alias_longer_than_name_caps_at_one() {
        let m = fixture().annotate("Donald J. Trump", 0.5);
        assert_eq!(m[0].confidence, 1.0);
        assert_eq!(m[0].surface, "Donald J. Trump");
    }

    #[test]
    fn matches_respect_word_boundaries() {
        assert!(fixture().annotate("Trumpet players", 0.0).is_empty());
    }
}

mod common;

use std::sync::Arc;

use chrono::{TimeZone, Utc};
use newsagent::dialogue::{
    handle, new_session, DialogueAction, DialogueConfig, DialogueContext, DialogueSession, DialogueState, TextKey,
};
use newsagent::graph::{snapshot, GraphStore};
use newsagent::linking::Gazetteer;
use newsagent::nlu::{IntentConfig, IntentName, IntentResult, NluContext};
use newsagent::query::TemplateRegistry;
use proptest::prelude::*;

struct Desk {
    store: GraphStore,
    templates: TemplateRegistry,
    gazetteer: Arc<Gazetteer>,
    nlu: IntentConfig,
}

impl Desk {
    fn load() -> Self {
        let rt = tokio::runtime::Builder::new_current_thread().build().unwrap();
        let graph = rt.block_on(common::fixture_graph("desk10.json", "desk"));
        let store = snapshot::from_bytes(&snapshot::to_bytes(&graph.read().unwrap())).unwrap();
        Self {
            store,
            templates: TemplateRegistry::builtin(),
            gazetteer: common::gazetteer(),
            nlu: IntentConfig::builtin("en").unwrap(),
        }
    }

    fn ctx(&self) -> DialogueContext<'_> {
        DialogueContext {
            store: &self.store,
            templates: &self.templates,
            gazetteer: &self.gazetteer,
            nlu: &self.nlu,
            config: DialogueConfig::default(),
        }
    }

    fn session(&self) -> DialogueSession {
        let now = Utc.with_ymd_and_hms(2023, 3, 10, 12, 0, 0).unwrap();
        new_session("s", "en", &["en", "de"], now).unwrap().0
    }

    fn intent(&self, s: &mut DialogueSession, intent: IntentResult) -> Vec<DialogueAction> {
        handle(s, &intent, &self.ctx())
    }

    fn say(&self, s: &mut DialogueSession, text: &str) -> Vec<DialogueAction> {
        let intent = self.nlu.recognize(text, &NluContext { suggestions: s.suggestion_titles() });
        handle(s, &intent, &self.ctx())
    }
}

fn keys(s: &DialogueSession) -> Vec<&str> {
    s.suggestions.iter().map(|a| a.key.as_str()).collect()
}

fn said(actions: &[DialogueAction]) -> Option<TextKey> {
    actions.iter().find_map(|a| match a {
        DialogueAction::Say { key, .. } => Some(*key),
        _ => None,
    })
}

fn read(actions: &[DialogueAction]) -> Option<(&str, bool)> {
    actions.iter().find_map(|a| match a {
        DialogueAction::ReadArticle { article, full, .. } => Some((article.as_str(), *full)),
        _ => None,
    })
}

#[test]
fn overview_offers_three_resorts() {
    let d = Desk::load();
    let mut s = d.session();
    let actions = d.say(&mut s, "Play the news.");
    assert!(matches!(actions.as_slice(), [DialogueAction::SuggestArticles { intro: TextKey::OverviewIntro, .. }]));
    assert_eq!(keys(&s), ["desk:p1", "desk:e1", "desk:s1"]);
    assert_eq!(s.state, DialogueState::Browsing);
}

#[test]
fn resort_pages_through_five_articles() {
    let d = Desk::load();
    let mut s = d.session();
    d.say(&mut s, "Tell me the politics news.");
    assert_eq!(keys(&s), ["desk:p1", "desk:p2", "desk:p3"]);
    assert_eq!(s.results.len(), 5);
    d.say(&mut s, "More articles.");
    assert_eq!(keys(&s), ["desk:p4", "desk:p5"]);
    assert_eq!(said(&d.say(&mut s, "More articles.")), Some(TextKey::NoMore));
    assert_eq!(keys(&s), ["desk:p4", "desk:p5"], "exhausted paging keeps the last page");
}

#[test]
fn ordinal_selection_and_range_check() {
    let d = Desk::load();
    let mut s = d.session();
    d.say(&mut s, "Tell me the politics news.");
    let actions = d.say(&mut s, "The second article.");
    assert_eq!(read(&actions), Some(("desk:p2", false)));
    assert_eq!(s.state, DialogueState::Reading);
    assert_eq!(s.current_article.as_deref(), Some("desk:p2"));

    let mut s = d.session();
    d.say(&mut s, "Tell me the politics news.");
    let before = s.clone();
    let actions = d.intent(&mut s, IntentResult::new(IntentName::SelectSuggestion, &[("ordinal", "7")], 1.0));
    assert_eq!(said(&actions), Some(TextKey::OutOfRange));
    assert_eq!(s, before, "out-of-range selection leaves the session alone");
}

#[test]
fn entity_search_by_alias_and_tag() {
    let d = Desk::load();
    let mut s = d.session();
    let actions = d.say(&mut s, "What is new about Credit Suisse?");
    assert!(matches!(&actions[0], DialogueAction::SuggestArticles { params, .. } if params["entity"] == "Credit Suisse"));
    assert_eq!(keys(&s), ["desk:e1"]);

    d.say(&mut s, "What is new about Donald Trump?");
    assert_eq!(keys(&s), ["desk:p1", "desk:p2", "desk:p5"]);

    // No gazetteer entry or entity node; the tag still matches.
    d.say(&mut s, "Tell me something about energy.");
    assert_eq!(keys(&s), ["desk:p4"]);

    let actions = d.say(&mut s, "Tell me something about volcanoes.");
    assert_eq!(said(&actions), Some(TextKey::NoArticlesEntity));
}

#[test]
fn keyword_selection_unique_and_ambiguous() {
    let d = Desk::load();
    let mut s = d.session();
    d.say(&mut s, "Play the news.");
    let actions = d.say(&mut s, "The one about credit suisse.");
    assert_eq!(read(&actions), Some(("desk:e1", false)));

    let mut s = d.session();
    d.say(&mut s, "Tell me the politics news.");
    let actions = d.intent(&mut s, IntentResult::new(IntentName::SelectSuggestion, &[("keyword", "trump")], 0.5));
    assert_eq!(said(&actions), Some(TextKey::ClarifySelection), "p1 and p2 both mention trump");
}

#[test]
fn reading_offers_related_articles() {
    let d = Desk::load();
    let mut s = d.session();
    d.say(&mut s, "Tell me the politics news.");
    let actions = d.say(&mut s, "The first.");
    assert_eq!(read(&actions), Some(("desk:p1", false)));
    assert!(matches!(actions.last(), Some(DialogueAction::SuggestArticles { intro: TextKey::RelatedIntro, .. })));
    // p2 and p5 share the entity and a tag with p1; p2 is newer.
    assert_eq!(keys(&s)[..2], ["desk:p2", "desk:p5"]);

    let full = d.say(&mut s, "Read the whole article.");
    assert_eq!(read(&full), Some(("desk:p1", true)));
}

#[test]
fn read_full_outside_reading_is_refused() {
    let d = Desk::load();
    let mut s = d.session();
    assert_eq!(said(&d.say(&mut s, "Read the whole article.")), Some(TextKey::NothingToRead));
    d.say(&mut s, "Play the news.");
    assert_eq!(said(&d.say(&mut s, "Read the whole article.")), Some(TextKey::NothingToRead));
}

#[test]
fn fallback_in_every_state_changes_nothing() {
    let d = Desk::load();
    let mut idle = d.session();
    let mut browsing = d.session();
    d.say(&mut browsing, "Play the news.");
    let mut reading = browsing.clone();
    d.say(&mut reading, "The first.");
    for s in [&mut idle, &mut browsing, &mut reading] {
        let before = s.clone();
        let actions = d.say(s, "blorp fizzle wug");
        assert_eq!(said(&actions), Some(TextKey::FallbackHint));
        assert_eq!(*s, before);
    }
}

#[test]
fn goodbye_resets_to_idle() {
    let d = Desk::load();
    let mut s = d.session();
    d.say(&mut s, "Play the news.");
    d.say(&mut s, "The first.");
    assert_eq!(d.say(&mut s, "Goodbye."), [DialogueAction::Goodbye]);
    assert_eq!(s.state, DialogueState::Idle);
    assert!(s.suggestions.is_empty() && s.results.is_empty() && s.current_article.is_none());
}

fn arb_intent() -> impl Strategy<Value = IntentResult> {
    let slot_value = prop::sample::select(vec![
        "politics", "sports", "local", "weather", "donald trump", "credit suisse", "energy", "nothing here", "",
    ]);
    let ordinal = (0usize..8).prop_map(|n| n.to_string());
    let keyword = prop::sample::select(vec!["trump", "meta", "cup", "zzz", ""]);
    (prop::sample::select(IntentName::ALL.to_vec()), slot_value, ordinal, keyword, any::<bool>()).prop_map(
        |(intent, value, ordinal, keyword, use_ordinal)| {
            let slots: Vec<(&str, String)> = match intent {
                IntentName::ResortSearch => vec![("resort", value.to_string())],
                IntentName::EntitySearch => vec![("entity_text", value.to_string())],
                IntentName::SelectSuggestion if use_ordinal => vec![("ordinal", ordinal)],
                IntentName::SelectSuggestion => vec![("keyword", keyword.to_string())],
                _ => vec![],
            };
            let slots: Vec<(&str, &str)> = slots.iter().map(|(k, v)| (*k, v.as_str())).collect();
            IntentResult::new(intent, &slots, 1.0)
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn every_state_intent_pair_is_handled(intents in prop::collection::vec(arb_intent(), 1..14)) {
        let d = Desk::load();
        let before = snapshot::to_bytes(&d.store);
        let mut s = d.session();
        let mut replay = d.session();
        for intent in &intents {
            let actions = d.intent(&mut s, intent.clone());
            prop_assert!(!actions.is_empty(), "{:?} produced no action", intent.intent);
            prop_assert!(s.suggestions.len() <= DialogueConfig::default().page_size);
            prop_assert_eq!(s.state == DialogueState::Reading, s.current_article.is_some());
            if intent.intent == IntentName::Goodbye {
                prop_assert_eq!(s.state, DialogueState::Idle);
                prop_assert!(s.suggestions.is_empty() && s.results.is_empty());
            }
            for a in &actions {
                if let DialogueAction::SuggestArticles { articles, .. } = a {
                    prop_assert_eq!(articles, &s.suggestions);
                    prop_assert!(!articles.is_empty());
                }
            }
            // Same inputs give the same outputs.
            prop_assert_eq!(d.intent(&mut replay, intent.clone()), actions);
            prop_assert_eq!(&replay, &s);
        }
        prop_assert_eq!(snapshot::to_bytes(&d.store), before, "handle is read-only on the store");
    }
}

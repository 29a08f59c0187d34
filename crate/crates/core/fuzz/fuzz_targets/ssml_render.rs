#![no_main]

use libfuzzer_sys::fuzz_target;
use newsagent::dialogue::{ArticleRef, DialogueAction, Prosody, TextKey};
use newsagent::response::{normalize_whitespace, render, strip_markup, RenderOptions, ResponseTemplateSet};

fuzz_target!(|input: (String, String, Vec<String>)| {
    let (title, text, titles) = input;
    let articles = titles
        .into_iter()
        .take(5)
        .enumerate()
        .map(|(i, title)| ArticleRef { key: format!("k{i}"), title, date: String::new() })
        .collect();
    let actions = [
        DialogueAction::ReadArticle { article: "k".into(), title, text, full: false },
        DialogueAction::SuggestArticles { intro: TextKey::RelatedIntro, params: Default::default(), articles },
    ];
    let set = ResponseTemplateSet::builtin("en").unwrap();
    let r = render(&actions, &set, &Prosody::default(), RenderOptions::default()).unwrap();
    assert_eq!(strip_markup(&r.ssml), normalize_whitespace(&r.text));
});

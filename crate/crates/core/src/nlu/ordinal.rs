use super::normalize_utterance;

const EN: [&str; 9] = ["first", "second", "third", "fourth", "fifth", "sixth", "seventh", "eighth", "ninth"];
const EN_SHORT: [&str; 9] = ["1st", "2nd", "3rd", "4th", "5th", "6th", "7th", "8th", "9th"];
// German stems after umlaut folding; inflected with -e/-en/-er/-es/-em.
const DE_STEMS: [(&str, usize); 10] = [
    ("erst", 1),
    ("zweit", 2),
    ("dritt", 3),
    ("viert", 4),
    ("fuenft", 5),
    ("sechst", 6),
    ("siebt", 7),
    ("siebent", 7),
    ("acht", 8),
    ("neunt", 9),
];
const DE_SUFFIXES: [&str; 5] = ["e", "en", "er", "es", "em"];

/// Ordinal value of a single normalized token.
pub fn ordinal_value(token: &str, lang: &str) -> Option<usize> {
    if !token.is_empty() && token.bytes().all(|b| b.is_ascii_digit()) {
        return token.parse::<usize>().ok().filter(|&n| n >= 1);
    }
    match lang {
        "de" => DE_STEMS
            .iter()
            .find(|(stem, _)| token.strip_prefix(stem).is_some_and(|rest| DE_SUFFIXES.contains(&rest)))
            .map(|&(_, n)| n),
        _ => EN
            .iter()
            .position(|w| *w == token)
            .or_else(|| EN_SHORT.iter().position(|w| *w == token))
            .map(|i| i + 1),
    }
}

/// First ordinal word or number in `text`, 1-based.
pub fn parse_ordinal(text: &str, lang: &str) -> Option<usize> {
    normalize_utterance(text, lang)
        .split(' ')
        .find_map(|t| ordinal_value(t, lang))
}

/// Canonical word for `i` in 1..=9.
pub fn render_ordinal(i: usize, lang: &str) -> Option<String> {
    let idx = i.checked_sub(1).filter(|&x| x < 9)?;
    Some(match lang {
        "de" => format!("{}e", DE_STEMS.iter().find(|&&(_, n)| n == i).expect("1..=9").0),
        _ => EN[idx].to_string(),
    })
}

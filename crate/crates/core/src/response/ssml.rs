use std::fmt::Write as _;

use crate::dialogue::{Prosody, MAX_RATE, MIN_RATE};

use super::ResponseError;

/// Paragraphs, each a list of sentences.
pub type Segments = Vec<Vec<String>>;

/// Character range inside one sentence to wrap in `<emphasis>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Emphasis {
    pub paragraph: usize,
    pub sentence: usize,
    pub start: usize,
    pub end: usize,
}

/// A `<break>` emitted right after the given sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pause {
    pub paragraph: usize,
    pub sentence: usize,
    pub ms: u32,
}

pub fn is_xml_char(c: char) -> bool {
    matches!(c, '\t' | '\n' | '\r' | '\u{20}'..='\u{D7FF}' | '\u{E000}'..='\u{FFFD}' | '\u{10000}'..)
}

/// Drops characters that cannot appear in an XML document.
pub fn sanitize(text: &str) -> String {
    text.chars().filter(|&c| is_xml_char(c)).collect()
}

fn escape_into(out: &mut String, text: &str) {
    for c in text.chars().filter(|&c| is_xml_char(c)) {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
}

fn rate_percent(rate: f64) -> i64 {
    (rate * 100.0).round() as i64
}

fn sentence_into(out: &mut String, sentence: &str, emphases: &[(usize, usize)]) {
    let chars: Vec<char> = sentence.chars().collect();
    let mut spans: Vec<(usize, usize)> = emphases
        .iter()
        .map(|&(s, e)| (s.min(chars.len()), e.min(chars.len())))
        .filter(|&(s, e)| s < e)
        .collect();
    spans.sort_unstable();
    out.push_str("<s>");
    let mut pos = 0;
    for (start, end) in spans {
        if start < pos {
            continue;
        }
        escape_into(out, &chars[pos..start].iter().collect::<String>());
        out.push_str("<emphasis>");
        escape_into(out, &chars[start..end].iter().collect::<String>());
        out.push_str("</emphasis>");
        pos = end;
    }
    escape_into(out, &chars[pos..].iter().collect::<String>());
    out.push_str("</s>");
}

pub fn build_ssml(
    segments: &[Vec<String>],
    prosody: &Prosody,
    emphases: &[Emphasis],
    pauses: &[Pause],
) -> Result<String, ResponseError> {
    if !(MIN_RATE..=MAX_RATE).contains(&prosody.rate) {
        return Err(ResponseError::InvalidRate(prosody.rate));
    }
    if segments.iter().all(|p| p.is_empty()) {
        return Ok("<speak/>".to_string());
    }

    let mut out = String::from("<speak>");
    let wrap = rate_percent(prosody.rate) != 100 || !prosody.voice.is_empty();
    if wrap {
        write!(out, "<prosody rate=\"{}%\"", rate_percent(prosody.rate)).expect("write to String");
        if !prosody.voice.is_empty() {
            out.push_str(" voice=\"");
            escape_into(&mut out, &prosody.voice);
            out.push('"');
        }
        out.push('>');
    }
    for (pi, paragraph) in segments.iter().enumerate() {
        if paragraph.is_empty() {
            continue;
        }
        out.push_str("<p>");
        for (si, sentence) in paragraph.iter().enumerate() {
            let spans: Vec<(usize, usize)> = emphases
                .iter()
                .filter(|e| e.paragraph == pi && e.sentence == si)
                .map(|e| (e.start, e.end))
                .collect();
            sentence_into(&mut out, sentence, &spans);
            for pause in pauses.iter().filter(|p| p.paragraph == pi && p.sentence == si) {
                write!(out, "<break time=\"{}ms\"/>", pause.ms).expect("write to String");
            }
        }
        out.push_str("</p>");
    }
    if wrap {
        out.push_str("</prosody>");
    }
    out.push_str("</speak>");
    Ok(out)
}

fn unescape(entity: &str) -> Option<char> {
    match entity {
        "amp" => Some('&'),
        "lt" => Some('<'),
        "gt" => Some('>'),
        "quot" => Some('"'),
        "apos" => Some('\''),
        e => {
            let code = e.strip_prefix("#x").map(|h| u32::from_str_radix(h, 16)).or_else(|| e.strip_prefix('#').map(str::parse))?;
            code.ok().and_then(char::from_u32)
        }
    }
}

/// Plain text of an SSML document produced by [`build_ssml`].
///
/// Sentence, paragraph and break boundaries become a single space; the
/// result is whitespace-normalized.
pub fn strip_markup(ssml: &str) -> String {
    let mut raw = String::with_capacity(ssml.len());
    let mut rest = ssml;
    while let Some(c) = rest.chars().next() {
        match c {
            '<' => {
                let end = rest.find('>').map_or(rest.len(), |i| i + 1);
                let tag = rest[1..end.saturating_sub(1).max(1)].trim_start_matches('/');
                let name: String = tag.chars().take_while(|c| c.is_ascii_alphanumeric()).collect();
                if matches!(name.as_str(), "s" | "p" | "break" | "speak") {
                    raw.push(' ');
                }
                rest = &rest[end..];
            }
            '&' => match rest.find(';').and_then(|i| unescape(&rest[1..i]).map(|c| (c, i))) {
                Some((c, i)) => {
                    raw.push(c);
                    rest = &rest[i + 1..];
                }
                None => {
                    raw.push('&');
                    rest = &rest[1..];
                }
            },
            c => {
                raw.push(c);
                rest = &rest[c.len_utf8()..];
            }
        }
    }
    normalize_whitespace(&raw)
}

pub fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn ends_sentence(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

/// Splits on `.`, `!` or `?` followed by whitespace and an uppercase letter.
///
/// Approximate: abbreviations such as "Dr. Smith" are split too.
pub fn split_sentences(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < chars.len() {
        if ends_sentence(chars[i]) {
            let mut j = i + 1;
            while j < chars.len() && chars[j].is_whitespace() {
                j += 1;
            }
            if j > i + 1 && j < chars.len() && chars[j].is_uppercase() {
                out.push(chars[start..=i].iter().collect::<String>());
                start = j;
                i = j;
                continue;
            }
        }
        i += 1;
    }
    let tail: String = chars[start..].iter().collect();
    if !tail.trim().is_empty() {
        out.push(tail);
    }
    out.into_iter().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
}

//! Small string helpers shared by the graph keys, the linker and the NLU.

/// Case-folds a lookup key: trimmed, lower-cased, inner whitespace collapsed.
pub fn fold_key(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for word in s.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.extend(word.chars().flat_map(char::to_lowercase));
    }
    out
}

/// Folds German umlauts and sharp s into their ASCII transliterations.
/// Expects lower-case input.
pub fn fold_german(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 4);
    for c in s.chars() {
        match c {
            'ä' => out.push_str("ae"),
            'ö' => out.push_str("oe"),
            'ü' => out.push_str("ue"),
            'ß' => out.push_str("ss"),
            _ => out.push(c),
        }
    }
    out
}

/// A word token with character (not byte) offsets into its source string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

/// Splits on anything that is not alphanumeric. Token text is lower-cased.
pub fn word_tokens(s: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut start = 0;
    let mut count = 0;
    for (i, c) in s.chars().enumerate() {
        if c.is_alphanumeric() {
            if current.is_empty() {
                start = i;
            }
            current.extend(c.to_lowercase());
        } else if !current.is_empty() {
            tokens.push(Token { text: std::mem::take(&mut current), start, end: i });
        }
        count = i + 1;
    }
    if !current.is_empty() {
        tokens.push(Token { text: current, start, end: count });
    }
    tokens
}

/// Character-indexed substring.
pub fn char_slice(s: &str, start: usize, end: usize) -> &str {
    let mut indices = s.char_indices().map(|(b, _)| b).chain(std::iter::once(s.len()));
    let from = indices.nth(start).unwrap_or(s.len());
    let to = if end > start {
        indices.nth(end - start - 1).unwrap_or(s.len())
    } else {
        from
    };
    &s[from..to]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fold_key_collapses_and_lowers() {
        assert_eq!(fold_key("  Sport  News "), "sport news");
        assert_eq!(fold_key(""), "");
    }

    #[test]
    fn tokens_use_char_offsets() {
        let t = word_tokens("Größe, München!");
        assert_eq!(t.len(), 2);
        assert_eq!(t[1].text, "münchen");
        assert_eq!((t[1].start, t[1].end), (7, 14));
        assert_eq!(char_slice("Größe, München!", 7, 14), "München");
    }

    #[test]
    fn german_folding() {
        assert_eq!(fold_german("nächste straße"), "naechste strasse");
    }
}

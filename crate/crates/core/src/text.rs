//! Shared text normalization.
//!
//! One tokenizer is used by every analyzer: lowercase, split on whitespace,
//! strip leading and trailing punctuation, drop tokens that were only
//! punctuation.

/// Tokenizes `text` with the registry-wide rules.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .filter_map(|raw| {
            let t = raw.trim_matches(|c: char| !c.is_alphanumeric());
            if t.is_empty() {
                None
            } else {
                Some(t.to_lowercase())
            }
        })
        .collect()
}

/// Lowercases and collapses runs of whitespace to a single space.
pub fn collapse_ws_lower(text: &str) -> String {
    text.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// A sentence together with its terminating character, if any.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence<'a> {
    pub text: &'a str,
    pub terminator: Option<char>,
}

/// Splits on `.`, `!` and `?`. Runs of terminators end one sentence; the last
/// character of the run is reported as the terminator. Blank fragments are
/// dropped.
pub fn sentences(text: &str) -> Vec<Sentence<'_>> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if matches!(c, '.' | '!' | '?') {
            let mut term = c;
            let mut end = i + c.len_utf8();
            while let Some(&(j, d)) = chars.peek() {
                if matches!(d, '.' | '!' | '?') {
                    term = d;
                    end = j + d.len_utf8();
                    chars.next();
                } else {
                    break;
                }
            }
            let body = text[start..i].trim();
            if !body.is_empty() {
                out.push(Sentence {
                    text: body,
                    terminator: Some(term),
                });
            }
            start = end;
        }
    }
    let tail = text[start..].trim();
    if !tail.is_empty() {
        out.push(Sentence {
            text: tail,
            terminator: None,
        });
    }
    out
}

/// True if `needle` occurs as a contiguous run inside `haystack`.
pub fn contains_run<T: PartialEq>(haystack: &[T], needle: &[T]) -> bool {
    if needle.is_empty() {
        return true;
    }
    haystack.windows(needle.len()).any(|w| w == needle)
}

const STOPWORDS: &[&str] = &[
    "a", "about", "am", "an", "and", "are", "as", "at", "be", "been", "but", "by", "can", "could",
    "did", "do", "does", "for", "from", "had", "has", "have", "he", "her", "him", "his", "how",
    "i", "i'm", "in", "is", "it", "it's", "me", "my", "of", "on", "or", "our", "she", "so",
    "that", "the", "their", "them", "then", "there", "they", "this", "to", "was", "we", "were",
    "what", "when", "where", "which", "who", "why", "will", "with", "would", "you", "your",
];

/// Crude suffix stripping so that inflections such as "studied"/"study" meet.
pub fn stem(token: &str) -> String {
    let t = token;
    let n = t.chars().count();
    if n > 4 {
        if let Some(base) = t.strip_suffix("ied").or_else(|| t.strip_suffix("ies")) {
            return format!("{base}y");
        }
        if let Some(base) = t.strip_suffix("ing") {
            return base.to_string();
        }
        if let Some(base) = t.strip_suffix("ed") {
            return base.to_string();
        }
    }
    if n > 3 && t.ends_with('s') && !t.ends_with("ss") {
        return t[..t.len() - 1].to_string();
    }
    t.to_string()
}

/// Stemmed tokens with stopwords removed.
pub fn content_tokens(text: &str) -> Vec<String> {
    tokenize(text)
        .into_iter()
        .filter(|t| !STOPWORDS.contains(&t.as_str()))
        .map(|t| stem(&t))
        .collect()
}

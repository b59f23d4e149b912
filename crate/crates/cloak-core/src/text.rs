//! Shared text utilities: casefolding, tokenization, character-offset
//! handling and word-bounded case-insensitive search.
//!
//! All span offsets in this crate are character offsets, not byte
//! offsets, so that multi-byte text behaves predictably.

/// Casefold and collapse runs of whitespace to a single space.
/// This is the normal form used for entity identity.
pub fn normalize(s: &str) -> String {
    s.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// Word character for boundary purposes: alphanumeric or underscore.
/// Underscore counts so that placeholder tags like `<name_1>` never
/// offer a word boundary around their stem.
pub fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Lowercase tokens split on non-alphanumeric characters.
pub fn tokenize(s: &str) -> Vec<String> {
    s.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// Case-insensitive character equality via full lowercase expansion.
fn chars_eq_ci(a: char, b: char) -> bool {
    a == b || a.to_lowercase().eq(b.to_lowercase())
}

/// Slice a string by character offsets. Returns `None` when the offsets
/// run past the end or are inverted.
pub fn char_slice(s: &str, start: usize, end: usize) -> Option<String> {
    if end < start {
        return None;
    }
    let chars: Vec<char> = s.chars().collect();
    if end > chars.len() {
        return None;
    }
    Some(chars[start..end].iter().collect())
}

/// All word-bounded occurrences of `needle` in `haystack`, compared
/// case-insensitively, as `(start, end)` character offsets. Matches may
/// overlap each other; callers resolve overlaps.
pub fn word_bounded_matches(haystack: &[char], needle: &[char]) -> Vec<(usize, usize)> {
    let n = needle.len();
    let mut out = Vec::new();
    if n == 0 || haystack.len() < n {
        return out;
    }
    for start in 0..=haystack.len() - n {
        if !(0..n).all(|j| chars_eq_ci(haystack[start + j], needle[j])) {
            continue;
        }
        if start > 0 && is_word_char(haystack[start - 1]) {
            continue;
        }
        let end = start + n;
        if end < haystack.len() && is_word_char(haystack[end]) {
            continue;
        }
        out.push((start, end));
    }
    out
}

/// First case-insensitive occurrence of `needle` in `haystack` at or
/// after character offset `from`, without boundary requirements.
pub fn find_casefold(haystack: &[char], needle: &[char], from: usize) -> Option<(usize, usize)> {
    let n = needle.len();
    if n == 0 || haystack.len() < n {
        return None;
    }
    for start in from..=haystack.len() - n {
        if (0..n).all(|j| chars_eq_ci(haystack[start + j], needle[j])) {
            return Some((start, start + n));
        }
    }
    None
}

/// Word-bounded, case-insensitive containment test.
pub fn contains_word_bounded(haystack: &str, needle: &str) -> bool {
    let h: Vec<char> = haystack.chars().collect();
    let n: Vec<char> = needle.chars().collect();
    !word_bounded_matches(&h, &n).is_empty()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_collapses_and_casefolds() {
        assert_eq!(normalize("  John   COFFIN\tTalbot "), "john coffin talbot");
    }

    #[test]
    fn tokenize_splits_on_non_alphanumerics() {
        assert_eq!(tokenize("He said: don't, twice!"), vec!["he", "said", "don", "t", "twice"]);
        assert!(tokenize("--- ...").is_empty());
    }

    #[test]
    fn word_bounded_matching_respects_boundaries() {
        let h: Vec<char> = "below low. Low-key allow LOW".chars().collect();
        let n: Vec<char> = "low".chars().collect();
        let m = word_bounded_matches(&h, &n);
        // "below" and "allow" do not match; "low.", "Low-key", trailing "LOW" do.
        assert_eq!(m.len(), 3);
        assert_eq!(m[0], (6, 9));
    }

    #[test]
    fn underscore_blocks_boundaries() {
        assert!(!contains_word_bounded("<name_1>", "name"));
        assert!(contains_word_bounded("name: x", "name"));
    }

    #[test]
    fn casefold_match_spans_original_text() {
        let h: Vec<char> = "met JOHN SMITH today".chars().collect();
        let n: Vec<char> = "John Smith".chars().collect();
        assert_eq!(word_bounded_matches(&h, &n), vec![(4, 14)]);
    }

    #[test]
    fn char_slice_by_char_offsets() {
        assert_eq!(char_slice("héllo wörld", 6, 11).as_deref(), Some("wörld"));
        assert_eq!(char_slice("ab", 1, 5), None);
    }

    #[test]
    fn find_casefold_from_offset() {
        let h: Vec<char> = "ab AB ab".chars().collect();
        let n: Vec<char> = "ab".chars().collect();
        assert_eq!(find_casefold(&h, &n, 1), Some((3, 5)));
    }
}

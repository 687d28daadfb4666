//! Whole-word matching and replacement helpers shared across the crate.
//!
//! All matching is case-insensitive (ASCII folding) over NFC-normalized
//! text, with word boundaries defined by ASCII alphanumerics. Spans are
//! byte offsets into the normalized text.

use unicode_normalization::{is_nfc, UnicodeNormalization};

/// Normalize to NFC, reusing the input when it is already normalized.
pub fn nfc(text: &str) -> String {
    if is_nfc(text) {
        text.to_string()
    } else {
        text.nfc().collect()
    }
}

fn is_word_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric()
}

/// True when `pos` sits on a word boundary: the preceding byte (if any)
/// is not an ASCII alphanumeric.
fn boundary_before(text: &str, pos: usize) -> bool {
    pos == 0 || !is_word_byte(text.as_bytes()[pos - 1])
}

fn boundary_after(text: &str, pos: usize) -> bool {
    pos >= text.len() || !is_word_byte(text.as_bytes()[pos])
}

/// Byte span of a whole-word match.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

/// All non-overlapping whole-word occurrences of `word` in `text`,
/// case-insensitively. `text` is expected to be NFC already.
pub fn find_word(text: &str, word: &str) -> Vec<Span> {
    let mut spans = Vec::new();
    if word.is_empty() {
        return spans;
    }
    let mut pos = 0;
    while pos + word.len() <= text.len() {
        if !text.is_char_boundary(pos) {
            pos += 1;
            continue;
        }
        let end = pos + word.len();
        if text.is_char_boundary(end)
            && boundary_before(text, pos)
            && boundary_after(text, end)
            && text[pos..end].eq_ignore_ascii_case(word)
        {
            spans.push(Span { start: pos, end });
            pos = end;
        } else {
            pos += 1;
        }
    }
    spans
}

/// Whether `word` occurs in `text` as a whole word (case-insensitive).
pub fn contains_word(text: &str, word: &str) -> bool {
    !find_word(text, word).is_empty()
}

/// Replace every whole-word occurrence of `word` with `replacement`,
/// verbatim (no case mirroring). Used for masking.
pub fn replace_word(text: &str, word: &str, replacement: &str) -> String {
    splice(text, &find_word(text, word), |_| replacement.to_string())
}

/// Mirror the first-letter case of `original` onto `replacement`.
/// Only the first character is adjusted; no all-caps handling.
pub fn mirror_case(original: &str, replacement: &str) -> String {
    let cap = original.chars().next().is_some_and(|c| c.is_uppercase());
    let mut chars = replacement.chars();
    match chars.next() {
        None => String::new(),
        Some(first) => {
            let head: String = if cap {
                first.to_uppercase().collect()
            } else {
                first.to_lowercase().collect()
            };
            head + chars.as_str()
        }
    }
}

/// Rebuild `text` with each span replaced by `f(matched_text)`.
/// Spans must be sorted and non-overlapping.
pub fn splice<F: Fn(&str) -> String>(text: &str, spans: &[Span], f: F) -> String {
    let mut out = String::with_capacity(text.len());
    let mut cursor = 0;
    for span in spans {
        out.push_str(&text[cursor..span.start]);
        out.push_str(&f(&text[span.start..span.end]));
        cursor = span.end;
    }
    out.push_str(&text[cursor..]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn whole_word_only() {
        assert_eq!(find_word("Iraq causes war", "Iraq").len(), 1);
        assert!(find_word("Iraqis protest", "Iraq").is_empty());
        assert!(find_word("preIraq era", "Iraq").is_empty());
    }

    #[test]
    fn case_insensitive() {
        assert_eq!(find_word("iraq and IRAQ", "Iraq").len(), 2);
    }

    #[test]
    fn multiword_match() {
        let spans = find_word("an Asian American speaks", "Asian American");
        assert_eq!(spans, vec![Span { start: 3, end: 17 }]);
    }

    #[test]
    fn replace_all_occurrences() {
        assert_eq!(
            replace_word("woman helps woman", "woman", "[MASK]"),
            "[MASK] helps [MASK]"
        );
    }

    #[test]
    fn mirror_first_letter() {
        assert_eq!(mirror_case("Afghanistan", "Asian"), "Asian");
        assert_eq!(mirror_case("afghanistan", "Asian"), "asian");
        assert_eq!(mirror_case("She", "woman"), "Woman");
        assert_eq!(mirror_case("she", "Woman"), "woman");
    }

    #[test]
    fn nfc_normalizes_decomposed() {
        let decomposed = "cafe\u{0301}";
        assert_eq!(nfc(decomposed), "caf\u{e9}");
    }
}

use std::sync::LazyLock;

use regex::Regex;
use unicode_normalization::UnicodeNormalization;

static URL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\b(?:https?://|ftp://|www\.)\S+").unwrap());

/// NFC, URLs to the `URL` token, whitespace runs collapsed, ends trimmed.
/// `@USER` placeholders pass through untouched.
pub fn normalize_text(raw: &str) -> String {
    let nfc: String = raw.nfc().collect();
    let replaced = URL.replace_all(&nfc, "URL");
    replaced.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Token-level oracle: a whitespace token is a URL iff it starts with a
    /// scheme or `www.` (case-insensitive).
    fn oracle(raw: &str) -> String {
        raw.split_whitespace()
            .map(|tok| {
                let lower = tok.to_lowercase();
                if ["http://", "https://", "ftp://", "www."]
                    .iter()
                    .any(|p| lower.starts_with(p))
                {
                    "URL"
                } else {
                    tok
                }
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    #[test]
    fn collapses_whitespace() {
        assert_eq!(normalize_text("  hello   world "), "hello world");
        assert_eq!(normalize_text("a\t\tb\nc"), "a b c");
    }

    #[test]
    fn keeps_user_placeholder() {
        assert_eq!(normalize_text("@USER you are ok"), "@USER you are ok");
    }

    #[test]
    fn replaces_urls() {
        assert_eq!(normalize_text("see https://x.co/ab now"), "see URL now");
        for raw in [
            "see https://x.co/ab now",
            "http://example.com",
            "go to www.site.org/a?b=c ok",
            "HTTPS://UPPER.CASE/path done",
            "two http://a.b http://c.d links",
            "ftp://files.host/x.tar.gz",
            "no link here",
        ] {
            assert_eq!(normalize_text(raw), oracle(raw), "input {raw:?}");
        }
    }

    #[test]
    fn composes_to_nfc() {
        let decomposed = "cafe\u{301}";
        assert_eq!(normalize_text(decomposed), "caf\u{e9}");
    }

    #[test]
    fn whitespace_only_becomes_empty() {
        assert_eq!(normalize_text(" \t \n"), "");
    }
}

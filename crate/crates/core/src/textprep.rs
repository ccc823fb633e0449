//! Chat markup stripping and word tokenization.

use std::sync::OnceLock;

use regex::Regex;
use unicode_segmentation::UnicodeSegmentation;

/// Word stream of one message plus the surface counts lexical components use.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenizedMessage {
    pub tokens: Vec<String>,
    pub word_count: usize,
    /// Tokens with more than six alphabetic characters.
    pub long_word_count: usize,
    /// Straight and curly double quotes in the raw text.
    pub quote_char_count: usize,
}

impl TokenizedMessage {
    /// Counts quotes on `raw`, then strips markup and tokenizes.
    pub fn from_raw(raw: &str) -> Self {
        let mut tm = tokenize(&normalize_markup(raw));
        tm.quote_char_count = count_quote_chars(raw);
        tm
    }
}

struct Patterns {
    fenced: Regex,
    inline_code: Regex,
    angle: Regex,
    bare_url: Regex,
    emoji: Regex,
}

fn patterns() -> &'static Patterns {
    static P: OnceLock<Patterns> = OnceLock::new();
    P.get_or_init(|| Patterns {
        fenced: Regex::new(r"(?s)```.*?```").unwrap(),
        inline_code: Regex::new(r"`[^`\n]*`").unwrap(),
        // <@U..>, <#C..>, <!here>, <http..|label>, <mailto:..>
        angle: Regex::new(r"<(?:[@#!]|https?:|mailto:)[^>]*>").unwrap(),
        bare_url: Regex::new(r"(?i)\b(?:https?://|www\.)\S+").unwrap(),
        emoji: Regex::new(r"(^|[^\w:]):[a-z0-9_+\-']+:").unwrap(),
    })
}

/// Removes mentions, channel links, URLs, code spans and `:emoji:` codes.
/// Everything else is left untouched, including surrounding whitespace.
pub fn normalize_markup(text: &str) -> String {
    let p = patterns();
    let mut s = p.fenced.replace_all(text, "").into_owned();
    s = p.inline_code.replace_all(&s, "").into_owned();
    s = p.angle.replace_all(&s, "").into_owned();
    s = p.bare_url.replace_all(&s, "").into_owned();
    // adjacent codes (":a::b:") share a colon boundary, so repeat to a fixpoint
    loop {
        let next = p.emoji.replace_all(&s, "$1");
        if next == s {
            break;
        }
        s = next.into_owned();
    }
    s
}

pub fn count_quote_chars(raw: &str) -> usize {
    raw.chars()
        .filter(|c| matches!(c, '"' | '\u{201C}' | '\u{201D}'))
        .count()
}

pub fn letter_count(token: &str) -> usize {
    token.chars().filter(|c| c.is_alphabetic()).count()
}

/// Unicode word segmentation, lowercased. Apostrophes inside words are kept
/// and curly apostrophes are folded to `'`.
pub fn tokenize(cleaned: &str) -> TokenizedMessage {
    let tokens: Vec<String> = cleaned
        .unicode_words()
        .map(|w| w.to_lowercase().replace('\u{2019}', "'"))
        .collect();
    let long_word_count = tokens.iter().filter(|t| letter_count(t) > 6).count();
    TokenizedMessage {
        word_count: tokens.len(),
        long_word_count,
        quote_char_count: 0,
        tokens,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn strips_mentions_and_links() {
        assert_eq!(
            normalize_markup("ping <@U123> see <https://x.y>"),
            "ping  see "
        );
    }

    #[test]
    fn strips_emoji_codes() {
        assert_eq!(normalize_markup("done :tada:"), "done ");
        assert_eq!(normalize_markup(":a::b: ok"), " ok");
        assert_eq!(normalize_markup("at 10:30:00"), "at 10:30:00");
    }

    #[test]
    fn strips_code_channels_and_bare_urls() {
        assert_eq!(normalize_markup("run `cargo test` now"), "run  now");
        assert_eq!(normalize_markup("a ```x\ny``` b"), "a  b");
        assert_eq!(normalize_markup("in <#C42|dev> go"), "in  go");
        assert_eq!(normalize_markup("see https://a.b/c?d=1 ok"), "see  ok");
    }

    #[test]
    fn plain_text_is_unchanged() {
        let s = "Nothing to strip here, friend.";
        assert_eq!(normalize_markup(s), s);
    }

    #[test]
    fn apostrophes_stay_inside_words() {
        let t = tokenize("Don't stop, we can't.");
        assert_eq!(t.tokens, vec!["don't", "stop", "we", "can't"]);
        assert_eq!(t.word_count, 4);
        assert_eq!(tokenize("don\u{2019}t").tokens, vec!["don't"]);
    }

    #[test]
    fn long_words_count_letters_only() {
        assert_eq!(tokenize("refactoring complete").long_word_count, 2);
        assert_eq!(tokenize("shouldn't").long_word_count, 1);
        assert_eq!(tokenize("doesn't").long_word_count, 0);
    }

    #[test]
    fn digits_are_tokens_punctuation_is_not() {
        let t = tokenize("ship 42 items!!! ... ok");
        assert_eq!(t.tokens, vec!["ship", "42", "items", "ok"]);
    }

    #[test]
    fn quotes_counted_on_raw_text() {
        assert_eq!(
            TokenizedMessage::from_raw(r#"she said "done""#).quote_char_count,
            2
        );
        assert_eq!(count_quote_chars("\u{201C}hi\u{201D}"), 2);
    }

    #[test]
    fn empty_text_has_no_tokens() {
        assert_eq!(TokenizedMessage::from_raw("").word_count, 0);
    }

    proptest! {
        #[test]
        fn tokenizing_own_output_is_idempotent(s in "[a-zA-Z' ,.!?0-9]{0,60}") {
            let once = tokenize(&s);
            let twice = tokenize(&once.tokens.join(" "));
            prop_assert_eq!(once.tokens, twice.tokens);
        }

        #[test]
        fn markup_never_changes_tokens(
            words in proptest::collection::vec("[a-z]{1,8}", 1..10),
            at in 0usize..10,
            which in 0usize..4,
        ) {
            let markup = ["<@U0123>", "<https://example.com/x|link>", ":thumbsup:", "`code`"][which];
            let at = at.min(words.len());
            let plain = words.join(" ");
            let mut with = words.clone();
            with.insert(at, markup.to_string());
            let marked = with.join(" ");
            prop_assert_eq!(
                TokenizedMessage::from_raw(&plain).tokens,
                TokenizedMessage::from_raw(&marked).tokens
            );
        }
    }
}

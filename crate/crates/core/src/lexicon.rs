//! Dictionary-based word-category counting.
//!
//! A [`Lexicon`] maps category names to literal or prefix patterns. Counting
//! is done on raw integers per message ([`TextCounts`]) so that window
//! aggregates are exact sums; frequencies per 100 words are derived last.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::ops::AddAssign;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textprep::TokenizedMessage;

/// Bundled open demonstration dictionary.
pub const DEMO_LEXICON: &str = include_str!("../data/demo_lexicon.txt");

macro_rules! categories {
    ($($variant:ident => $name:literal),+ $(,)?) => {
        /// Word categories the indicators require.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(rename_all = "snake_case")]
        pub enum Category { $($variant),+ }

        impl Category {
            pub const ALL: &'static [Category] = &[$(Category::$variant),+];

            pub fn name(self) -> &'static str {
                match self { $(Category::$variant => $name),+ }
            }

            pub fn from_name(name: &str) -> Option<Category> {
                match name { $($name => Some(Category::$variant),)+ _ => None }
            }
        }
    };
}

categories! {
    PersonalPronoun => "personal_pronoun",
    IPronoun => "i_pronoun",
    WePronoun => "we_pronoun",
    YouPronoun => "you_pronoun",
    Article => "article",
    DefiniteArticle => "definite_article",
    Verb => "verb",
    AuxiliaryVerb => "auxiliary_verb",
    PresentTenseVerb => "present_tense_verb",
    Negation => "negation",
    Insight => "insight",
    Causation => "causation",
    Differentiation => "differentiation",
    Assent => "assent",
    Certainty => "certainty",
    Tentative => "tentative",
    Discrepancy => "discrepancy",
    Exclusive => "exclusive",
    Inhibition => "inhibition",
    PositiveEmotion => "positive_emotion",
    NegativeEmotion => "negative_emotion",
    Anger => "anger",
    Affiliation => "affiliation",
    TimeWords => "time_words",
    Filler => "filler",
    Number => "number",
}

pub const N_CATEGORIES: usize = 26;

impl Category {
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Pattern {
    Literal(String),
    /// Stored without the trailing `*`.
    Prefix(String),
}

impl Pattern {
    pub fn matches(&self, token: &str) -> bool {
        match self {
            Pattern::Literal(w) => token == w,
            Pattern::Prefix(stem) => token.starts_with(stem.as_str()),
        }
    }

    /// A token that this pattern matches.
    pub fn example(&self) -> &str {
        match self {
            Pattern::Literal(w) | Pattern::Prefix(w) => w,
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pattern::Literal(w) => f.write_str(w),
            Pattern::Prefix(s) => write!(f, "{s}*"),
        }
    }
}

/// Bitset over [`Category`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CategorySet(u32);

impl CategorySet {
    pub fn insert(&mut self, c: Category) {
        self.0 |= 1 << c.index();
    }

    pub fn contains(self, c: Category) -> bool {
        self.0 & (1 << c.index()) != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Category> {
        Category::ALL
            .iter()
            .copied()
            .filter(move |c| self.contains(*c))
    }
}

#[derive(Debug, Clone)]
pub struct Lexicon {
    pub categories: BTreeMap<String, Vec<Pattern>>,
    literals: HashMap<String, CategorySet>,
    prefixes: Vec<(String, Category)>,
}

impl Lexicon {
    pub fn demo() -> Self {
        Self::parse(DEMO_LEXICON, Path::new("<bundled demo lexicon>"))
            .expect("bundled lexicon is valid")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Parses the `[category]` / one-pattern-per-line format. `origin` is
    /// only used in error messages.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut categories: BTreeMap<String, Vec<Pattern>> = BTreeMap::new();
        let mut current: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let at = || format!("line {}", i + 1);
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .map(str::trim)
                    .filter(|n| !n.is_empty())
                    .ok_or_else(|| {
                        Error::malformed(origin, at(), format!("bad header {line:?}"))
                    })?;
                categories.entry(name.to_owned()).or_default();
                current = Some(name.to_owned());
                continue;
            }
            let Some(cat) = current.as_ref() else {
                return Err(Error::malformed(
                    origin,
                    at(),
                    "pattern before any [category] header",
                ));
            };
            if line.chars().any(char::is_uppercase) {
                return Err(Error::malformed(
                    origin,
                    at(),
                    format!("pattern {line:?} is not lowercase"),
                ));
            }
            let pattern = match line.strip_suffix('*') {
                Some(stem) if !stem.is_empty() && !stem.contains('*') => {
                    Pattern::Prefix(stem.to_owned())
                }
                None if !line.contains('*') => Pattern::Literal(line.to_owned()),
                _ => {
                    return Err(Error::malformed(
                        origin,
                        at(),
                        format!("`*` is only allowed as the last character: {line:?}"),
                    ))
                }
            };
            let list = categories.get_mut(cat).expect("header inserted");
            if list.contains(&pattern) {
                log::warn!(
                    "{}: duplicate pattern {pattern} in [{cat}]",
                    origin.display()
                );
            } else {
                list.push(pattern);
            }
        }
        for c in Category::ALL {
            if !categories.contains_key(c.name()) {
                return Err(Error::MissingCategory(c.name().to_owned()));
            }
        }

        let mut literals: HashMap<String, CategorySet> = HashMap::new();
        let mut prefixes = Vec::new();
        for c in Category::ALL {
            for p in &categories[c.name()] {
                match p {
                    Pattern::Literal(w) => literals.entry(w.clone()).or_default().insert(*c),
                    Pattern::Prefix(s) => prefixes.push((s.clone(), *c)),
                }
            }
        }
        Ok(Lexicon {
            categories,
            literals,
            prefixes,
        })
    }

    pub fn patterns(&self, c: Category) -> &[Pattern] {
        &self.categories[c.name()]
    }

    /// Categories matched by `token`; each at most once. Digit-only tokens
    /// always count as numbers.
    pub fn classify(&self, token: &str) -> CategorySet {
        let mut set = self.literals.get(token).copied().unwrap_or_default();
        for (stem, c) in &self.prefixes {
            if token.starts_with(stem.as_str()) {
                set.insert(*c);
            }
        }
        if !token.is_empty() && token.chars().all(|ch| ch.is_ascii_digit()) {
            set.insert(Category::Number);
        }
        set
    }

    pub fn count(&self, msg: &TokenizedMessage) -> TextCounts {
        let mut counts = TextCounts {
            word_count: msg.word_count as u64,
            long_words: msg.long_word_count as u64,
            quotes: msg.quote_char_count as u64,
            ..TextCounts::default()
        };
        for token in &msg.tokens {
            for c in self.classify(token).iter() {
                counts.categories[c.index()] += 1;
            }
        }
        counts
    }
}

/// Raw additive counts for a message or any pooled text unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TextCounts {
    pub word_count: u64,
    pub long_words: u64,
    pub quotes: u64,
    pub categories: [u64; N_CATEGORIES],
}

impl AddAssign<&TextCounts> for TextCounts {
    fn add_assign(&mut self, rhs: &TextCounts) {
        self.word_count += rhs.word_count;
        self.long_words += rhs.long_words;
        self.quotes += rhs.quotes;
        for (a, b) in self.categories.iter_mut().zip(rhs.categories.iter()) {
            *a += b;
        }
    }
}

/// Per-100-word rates of one text unit.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryProfile {
    pub word_count: u64,
    pub frequencies: BTreeMap<Category, f64>,
    pub long_word_freq: f64,
    pub quote_freq: f64,
    pub tone: f64,
}

impl CategoryProfile {
    pub fn freq(&self, c: Category) -> f64 {
        self.frequencies[&c]
    }
}

/// Frequencies per 100 words; `None` when the unit has no words.
pub fn category_frequency(counts: &TextCounts) -> Option<CategoryProfile> {
    if counts.word_count == 0 {
        return None;
    }
    let per100 = |n: u64| 100.0 * n as f64 / counts.word_count as f64;
    let frequencies: BTreeMap<Category, f64> = Category::ALL
        .iter()
        .map(|c| (*c, per100(counts.categories[c.index()])))
        .collect();
    let mut profile = CategoryProfile {
        word_count: counts.word_count,
        long_word_freq: per100(counts.long_words),
        quote_freq: per100(counts.quotes),
        tone: 0.0,
        frequencies,
    };
    profile.tone = tone(&profile);
    Some(profile)
}

/// Positive minus negative emotion frequency.
pub fn tone(profile: &CategoryProfile) -> f64 {
    profile.freq(Category::PositiveEmotion) - profile.freq(Category::NegativeEmotion)
}

/// Convenience: counts a token list as one unit.
pub fn count_tokens(lexicon: &Lexicon, tokens: &[&str]) -> TextCounts {
    let msg = TokenizedMessage {
        tokens: tokens.iter().map(|t| t.to_string()).collect(),
        word_count: tokens.len(),
        long_word_count: tokens
            .iter()
            .filter(|t| crate::textprep::letter_count(t) > 6)
            .count(),
        quote_char_count: 0,
    };
    lexicon.count(&msg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn minimal(extra: &str) -> String {
        let mut s = String::new();
        for c in Category::ALL {
            s.push_str(&format!("[{}]\n", c.name()));
        }
        s.push_str(extra);
        s
    }

    #[test]
    fn demo_lexicon_loads_with_all_categories() {
        let lex = Lexicon::demo();
        assert_eq!(Category::ALL.len(), N_CATEGORIES);
        for c in Category::ALL {
            assert!(lex.categories.contains_key(c.name()));
        }
        assert_eq!(
            lex.patterns(Category::DefiniteArticle),
            &[Pattern::Literal("the".into())]
        );
    }

    #[test]
    fn missing_category_is_named() {
        let text = minimal("").replace("[assent]\n", "");
        let err = Lexicon::parse(&text, Path::new("x")).unwrap_err();
        assert_eq!(err.to_string(), "missing category: assent");
    }

    #[test]
    fn prefix_patterns_match_stems() {
        let lex = Lexicon::parse(&minimal("[certainty]\ncertain*\n"), Path::new("x")).unwrap();
        assert!(lex.classify("certainly").contains(Category::Certainty));
        assert!(lex.classify("certain").contains(Category::Certainty));
        assert!(!lex.classify("uncertain").contains(Category::Certainty));
    }

    #[test]
    fn star_in_middle_is_rejected() {
        assert!(Lexicon::parse(&minimal("[filler]\nu*m\n"), Path::new("x")).is_err());
        assert!(Lexicon::parse(&minimal("[filler]\n*\n"), Path::new("x")).is_err());
    }

    #[test]
    fn duplicate_pattern_is_kept_once() {
        let lex = Lexicon::parse(&minimal("[filler]\num\num\n"), Path::new("x")).unwrap();
        assert_eq!(lex.patterns(Category::Filler).len(), 1);
    }

    #[test]
    fn digits_count_as_numbers() {
        let lex = Lexicon::demo();
        assert!(lex.classify("42").contains(Category::Number));
        assert!(lex.classify("three").contains(Category::Number));
        assert!(!lex.classify("4x").contains(Category::Number));
    }

    #[test]
    fn we_pronoun_rate() {
        let lex = Lexicon::parse(&minimal("[we_pronoun]\nwe\nus\nour\n"), Path::new("x")).unwrap();
        let p = category_frequency(&count_tokens(&lex, &["we", "will", "fix", "it"])).unwrap();
        assert_eq!(p.freq(Category::WePronoun), 25.0);
    }

    #[test]
    fn empty_pattern_list_gives_zero() {
        let lex = Lexicon::parse(&minimal(""), Path::new("x")).unwrap();
        let p = category_frequency(&count_tokens(&lex, &["anything"])).unwrap();
        assert_eq!(p.freq(Category::Anger), 0.0);
    }

    #[test]
    fn repeated_tokens_each_count() {
        let lex = Lexicon::parse(&minimal("[positive_emotion]\ngreat\n"), Path::new("x")).unwrap();
        let p = category_frequency(&count_tokens(&lex, &["great", "great"])).unwrap();
        assert_eq!(p.freq(Category::PositiveEmotion), 100.0);
    }

    #[test]
    fn token_matches_a_category_once_even_via_two_patterns() {
        let lex = Lexicon::parse(&minimal("[anger]\nmad\nma*\n"), Path::new("x")).unwrap();
        let p = category_frequency(&count_tokens(&lex, &["mad"])).unwrap();
        assert_eq!(p.freq(Category::Anger), 100.0);
    }

    #[test]
    fn tone_is_pos_minus_neg() {
        let lex = Lexicon::parse(
            &minimal("[positive_emotion]\ngood\n[negative_emotion]\nbad\n"),
            Path::new("x"),
        )
        .unwrap();
        let mut toks = vec!["good", "good", "good", "bad"];
        toks.extend(std::iter::repeat_n("meh", 96));
        let p = category_frequency(&count_tokens(&lex, &toks)).unwrap();
        assert_eq!(p.tone, 2.0);
        let p = category_frequency(&count_tokens(&lex, &["good", "bad"])).unwrap();
        assert_eq!(p.tone, 0.0);
        let p = category_frequency(&count_tokens(&lex, &["meh"])).unwrap();
        assert_eq!(p.tone, 0.0);
    }

    #[test]
    fn zero_words_has_no_profile() {
        assert!(category_frequency(&TextCounts::default()).is_none());
    }

    proptest! {
        #[test]
        fn frequencies_are_scale_invariant(
            idx in proptest::collection::vec(0usize..12, 1..30),
            k in 2usize..5,
        ) {
            let vocab = ["we", "the", "great", "stop", "maybe", "but", "zorp", "fix", "42", "because", "um", "sad"];
            let lex = Lexicon::demo();
            let toks: Vec<&str> = idx.iter().map(|&i| vocab[i]).collect();
            let rep: Vec<&str> = toks.iter().cycle().take(toks.len() * k).copied().collect();
            let a = category_frequency(&count_tokens(&lex, &toks)).unwrap();
            let b = category_frequency(&count_tokens(&lex, &rep)).unwrap();
            for c in Category::ALL {
                prop_assert!((a.freq(*c) - b.freq(*c)).abs() < 1e-9);
            }
        }

        #[test]
        fn appending_a_matching_token_raises_rate_below_100(
            idx in proptest::collection::vec(0usize..4, 1..20),
        ) {
            let lex = Lexicon::parse(&minimal("[filler]\num\n"), Path::new("x")).unwrap();
            let vocab = ["um", "zap", "zip", "zop"];
            let mut toks: Vec<&str> = idx.iter().map(|&i| vocab[i]).collect();
            let before = category_frequency(&count_tokens(&lex, &toks)).unwrap().freq(Category::Filler);
            toks.push("um");
            let after = category_frequency(&count_tokens(&lex, &toks)).unwrap().freq(Category::Filler);
            prop_assert_eq!(after > before, before < 100.0);
        }
    }
}

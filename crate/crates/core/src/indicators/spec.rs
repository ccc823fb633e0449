use std::fmt;

use serde::{Deserialize, Serialize, Serializer};

use crate::lexicon::Category;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Facet {
    Communication,
    Cooperation,
    Culture,
    Leadership,
    Learning,
}

impl Facet {
    pub const ALL: [Facet; 5] = [
        Facet::Communication,
        Facet::Cooperation,
        Facet::Culture,
        Facet::Leadership,
        Facet::Learning,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Facet::Communication => "Communication",
            Facet::Cooperation => "Cooperation",
            Facet::Culture => "Culture",
            Facet::Leadership => "Leadership",
            Facet::Learning => "Learning",
        }
    }
}

impl fmt::Display for Facet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Facet {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Facet::ALL
            .into_iter()
            .find(|f| f.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown facet {s:?}"))
    }
}

/// Whether the underlying construct is safety-promoting or -eroding.
/// Scores are always emitted with higher = safer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Positive,
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    /// Composite of team-window z-scores.
    Team,
    /// Negated SD of per-person composites.
    PerPersonDispersion,
    /// Non-PM group composite minus PM group composite.
    GroupGap,
    /// Bounded score used without standardization.
    Direct,
}

/// A raw per-window measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Component {
    Lexical(Category),
    WordCount,
    LongWordFreq,
    QuoteFreq,
    Tone,
    Mimicry,
    ForwardFlow,
    TimeToFirstReply,
    ThreadCount,
    ReplyCount,
    MessageGini,
    WordGini,
}

impl Component {
    pub fn name(self) -> &'static str {
        match self {
            Component::Lexical(c) => c.name(),
            Component::WordCount => "word_count",
            Component::LongWordFreq => "long_word_freq",
            Component::QuoteFreq => "quote_freq",
            Component::Tone => "tone",
            Component::Mimicry => "mimicry",
            Component::ForwardFlow => "forward_flow",
            Component::TimeToFirstReply => "mean_time_to_first_reply",
            Component::ThreadCount => "thread_count",
            Component::ReplyCount => "reply_count",
            Component::MessageGini => "message_gini",
            Component::WordGini => "word_gini",
        }
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for Component {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ComponentRef {
    pub source: Component,
    pub reversed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IndicatorSpec {
    pub name: &'static str,
    pub facet: Facet,
    pub orientation: Orientation,
    pub level: Level,
    pub components: &'static [ComponentRef],
}

const fn pos(source: Component) -> ComponentRef {
    ComponentRef {
        source,
        reversed: false,
    }
}

const fn neg(source: Component) -> ComponentRef {
    ComponentRef {
        source,
        reversed: true,
    }
}

const fn lex(c: Category) -> Component {
    Component::Lexical(c)
}

use Category as C;
use Component::*;
use Facet::*;
use Level::*;
use Orientation::*;

pub const NO_LOW_EFFORT: &[ComponentRef] = &[
    neg(lex(C::PersonalPronoun)),
    pos(lex(C::Assent)),
    pos(lex(C::DefiniteArticle)),
];

const SPECS: [IndicatorSpec; 15] = [
    IndicatorSpec {
        name: "no_delay_and_discreetness",
        facet: Communication,
        orientation: Negative,
        level: Team,
        components: &[neg(TimeToFirstReply), pos(ThreadCount), pos(ReplyCount)],
    },
    IndicatorSpec {
        name: "collective_decision_making",
        facet: Communication,
        orientation: Positive,
        level: Team,
        components: &[
            pos(lex(C::Causation)),
            pos(lex(C::Negation)),
            pos(lex(C::Insight)),
            pos(lex(C::AuxiliaryVerb)),
            pos(lex(C::Article)),
            pos(lex(C::Differentiation)),
            pos(lex(C::PersonalPronoun)),
        ],
    },
    IndicatorSpec {
        name: "turn_taking",
        facet: Communication,
        orientation: Positive,
        level: Direct,
        components: &[neg(MessageGini), neg(WordGini)],
    },
    IndicatorSpec {
        name: "initiative",
        facet: Cooperation,
        orientation: Positive,
        level: Team,
        components: &[pos(lex(C::Verb)), neg(WordCount), neg(lex(C::TimeWords))],
    },
    IndicatorSpec {
        name: "no_low_effort",
        facet: Cooperation,
        orientation: Negative,
        level: Team,
        components: NO_LOW_EFFORT,
    },
    IndicatorSpec {
        name: "dedication",
        facet: Cooperation,
        orientation: Positive,
        level: Team,
        components: &[pos(lex(C::PositiveEmotion)), neg(lex(C::Inhibition))],
    },
    IndicatorSpec {
        name: "community",
        facet: Culture,
        orientation: Positive,
        level: Team,
        components: &[pos(Mimicry), pos(WordCount), neg(lex(C::WePronoun))],
    },
    IndicatorSpec {
        name: "no_blame",
        facet: Culture,
        orientation: Positive,
        level: Team,
        components: &[pos(lex(C::PositiveEmotion)), pos(lex(C::Causation))],
    },
    IndicatorSpec {
        name: "no_fear",
        facet: Culture,
        orientation: Negative,
        level: Team,
        components: &[
            pos(WordCount),
            pos(lex(C::WePronoun)),
            pos(lex(C::YouPronoun)),
            pos(lex(C::Certainty)),
            neg(lex(C::IPronoun)),
        ],
    },
    IndicatorSpec {
        name: "no_overwhelmed_leaders",
        facet: Leadership,
        orientation: Negative,
        level: GroupGap,
        components: NO_LOW_EFFORT,
    },
    IndicatorSpec {
        name: "shared_leadership",
        facet: Leadership,
        orientation: Positive,
        level: PerPersonDispersion,
        components: &[
            neg(lex(C::AuxiliaryVerb)),
            pos(lex(C::Number)),
            pos(lex(C::Affiliation)),
            neg(QuoteFreq),
        ],
    },
    IndicatorSpec {
        name: "no_social_hierarchy",
        facet: Leadership,
        orientation: Negative,
        level: PerPersonDispersion,
        components: &[
            pos(WordCount),
            pos(Tone),
            neg(lex(C::Anger)),
            neg(lex(C::Tentative)),
            neg(lex(C::Filler)),
        ],
    },
    IndicatorSpec {
        name: "embrace_critiques",
        facet: Learning,
        orientation: Positive,
        level: Team,
        components: &[pos(WordCount), pos(lex(C::Exclusive))],
    },
    IndicatorSpec {
        name: "adapt_and_improve",
        facet: Learning,
        orientation: Positive,
        level: Direct,
        components: &[pos(ForwardFlow)],
    },
    IndicatorSpec {
        name: "embrace_mistakes",
        facet: Learning,
        orientation: Positive,
        level: Team,
        components: &[
            neg(LongWordFreq),
            pos(lex(C::PresentTenseVerb)),
            pos(lex(C::Discrepancy)),
            pos(lex(C::IPronoun)),
            neg(lex(C::Article)),
        ],
    },
];

/// The 15 indicators, grouped by facet.
pub fn specs() -> &'static [IndicatorSpec] {
    &SPECS
}

pub fn spec(name: &str) -> Option<&'static IndicatorSpec> {
    SPECS.iter().find(|s| s.name == name)
}

/// Machine-readable dump of the indicator table.
pub fn specs_json() -> String {
    serde_json::to_string_pretty(&SPECS[..]).expect("spec table serializes")
}

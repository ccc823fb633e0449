use std::collections::HashMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::spec::{specs, Component, ComponentRef, IndicatorSpec, Level};
use super::{
    dispersion_score, mean_time_to_first_reply, turn_taking_from_ginis, IndicatorScore,
    IndicatorSeries, ThreadIndex,
};
use crate::error::{Error, Result};
use crate::ingest::{Role, TeamCorpus};
use crate::lexicon::{category_frequency, CategoryProfile, Lexicon, TextCounts};
use crate::par::{self, Execution};
use crate::reporting::DEFAULT_FLAG_QUANTILE;
use crate::stats::{self, ComponentMatrix, ZMatrix, DEFAULT_WINDOW_DAYS};
use crate::textprep::TokenizedMessage;
use crate::vectorspace::{
    forward_flow, mimicry_score, MessageVector, TermFrequency, VectorProvider,
};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub window_days: u32,
    pub flag_quantile: f64,
    pub execution: Execution,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            window_days: DEFAULT_WINDOW_DAYS,
            flag_quantile: DEFAULT_FLAG_QUANTILE,
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TeamDay {
    pub team: usize,
    pub day: NaiveDate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PersonDay {
    pub team: usize,
    pub day: NaiveDate,
    /// Index into the team's roster.
    pub person: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroupDay {
    pub team: usize,
    pub day: NaiveDate,
    pub pm: bool,
}

/// Raw measurements of one team-day window.
#[derive(Debug, Clone)]
pub struct WindowRaw {
    pub key: TeamDay,
    pub n_messages: usize,
    pub team: TextCounts,
    pub time_to_first_reply: Option<f64>,
    pub thread_count: usize,
    pub reply_count: usize,
    pub message_gini: Option<f64>,
    pub word_gini: Option<f64>,
    pub mimicry: Option<f64>,
    pub forward_flow: Option<f64>,
    /// (roster index, counts) for members with at least one word.
    pub persons: Vec<(usize, TextCounts)>,
    /// PM group, then non-PM group; `None` when the group has no words.
    pub groups: [Option<TextCounts>; 2],
}

/// Phase-1 output: raw matrices for the three unit types.
#[derive(Debug, Clone)]
pub struct Extraction {
    pub team_ids: Vec<String>,
    pub windows: Vec<WindowRaw>,
    pub team: ComponentMatrix<TeamDay>,
    pub person: ComponentMatrix<PersonDay>,
    pub group: ComponentMatrix<GroupDay>,
}

/// Phase-2 output.
#[derive(Debug, Clone)]
pub struct Pooled {
    pub team: ZMatrix<TeamDay>,
    pub person: ZMatrix<PersonDay>,
    pub group: ZMatrix<GroupDay>,
}

struct MessageFeature {
    author: Option<usize>,
    counts: TextCounts,
    vector: MessageVector,
    is_reply: bool,
}

struct TeamFeatures {
    features: Vec<MessageFeature>,
    threads: ThreadIndex,
    /// Indices of consented roster members.
    active: Vec<usize>,
}

fn team_features(
    corpus: &TeamCorpus,
    lexicon: &Lexicon,
    provider: &dyn VectorProvider,
    mode: Execution,
) -> TeamFeatures {
    let index: HashMap<&str, usize> = corpus
        .roster
        .iter()
        .enumerate()
        .map(|(i, t)| (t.user_id.as_str(), i))
        .collect();
    let features = par::map(mode, &corpus.messages, |m| {
        let tm = TokenizedMessage::from_raw(&m.text);
        MessageFeature {
            author: index.get(m.author.as_str()).copied(),
            counts: lexicon.count(&tm),
            vector: provider.embed(&tm.tokens),
            is_reply: m.is_reply(),
        }
    });
    TeamFeatures {
        features,
        threads: ThreadIndex::build(&corpus.messages),
        active: corpus
            .roster
            .iter()
            .enumerate()
            .filter(|(_, t)| t.consented)
            .map(|(i, _)| i)
            .collect(),
    }
}

fn window_raw(
    key: TeamDay,
    corpus: &TeamCorpus,
    tf: &TeamFeatures,
    range: std::ops::Range<usize>,
) -> WindowRaw {
    let feats = &tf.features[range.clone()];
    let roster_len = corpus.roster.len();
    let mut team = TextCounts::default();
    let mut per_person = vec![TextCounts::default(); roster_len];
    let mut msgs_per_person = vec![0usize; roster_len];
    let mut groups = [TextCounts::default(), TextCounts::default()];
    let mut reply_count = 0;
    let mut threads: Vec<u32> = Vec::new();
    for (f, thread) in feats.iter().zip(&tf.threads.thread_of[range.clone()]) {
        team += &f.counts;
        if f.is_reply {
            reply_count += 1;
        }
        if let Some(t) = thread {
            threads.push(*t);
        }
        if let Some(a) = f.author {
            per_person[a] += &f.counts;
            msgs_per_person[a] += 1;
            let g = usize::from(corpus.roster[a].role != Role::Pm);
            groups[g] += &f.counts;
        }
    }
    threads.sort_unstable();
    threads.dedup();

    let (message_gini, word_gini) = if feats.is_empty() {
        (None, None)
    } else {
        let mc: Vec<f64> = tf
            .active
            .iter()
            .map(|&i| msgs_per_person[i] as f64)
            .collect();
        let wc: Vec<f64> = tf
            .active
            .iter()
            .map(|&i| per_person[i].word_count as f64)
            .collect();
        (stats::gini(&mc), stats::gini(&wc))
    };

    let persons = tf
        .active
        .iter()
        .filter(|&&i| per_person[i].word_count > 0)
        .map(|&i| (i, per_person[i]))
        .collect();
    let has_pm = tf.active.iter().any(|&i| corpus.roster[i].role == Role::Pm);
    let group_or_none = |c: TextCounts, present: bool| (present && c.word_count > 0).then_some(c);

    WindowRaw {
        key,
        n_messages: feats.len(),
        team,
        time_to_first_reply: mean_time_to_first_reply(&tf.threads, range),
        thread_count: threads.len(),
        reply_count,
        message_gini,
        word_gini,
        mimicry: mimicry_score(feats.iter().map(|f| (f.author, &f.vector))),
        forward_flow: forward_flow(feats.iter().map(|f| &f.vector)),
        persons,
        groups: [
            group_or_none(groups[0], has_pm),
            group_or_none(groups[1], true),
        ],
    }
}

/// Value of a lexical-type component for a text unit.
fn text_component(
    c: Component,
    counts: &TextCounts,
    profile: Option<&CategoryProfile>,
) -> Option<f64> {
    match c {
        Component::WordCount => Some(counts.word_count as f64),
        Component::Lexical(cat) => profile.map(|p| p.freq(cat)),
        Component::LongWordFreq => profile.map(|p| p.long_word_freq),
        Component::QuoteFreq => profile.map(|p| p.quote_freq),
        Component::Tone => profile.map(|p| p.tone),
        other => panic!("{other} is not a text component"),
    }
}

fn team_component(c: Component, w: &WindowRaw, profile: Option<&CategoryProfile>) -> Option<f64> {
    if w.n_messages == 0 {
        return None;
    }
    match c {
        Component::TimeToFirstReply => w.time_to_first_reply,
        Component::ThreadCount => Some(w.thread_count as f64),
        Component::ReplyCount => Some(w.reply_count as f64),
        Component::Mimicry => w.mimicry,
        Component::ForwardFlow => w.forward_flow,
        Component::MessageGini => w.message_gini,
        Component::WordGini => w.word_gini,
        _ => text_component(c, &w.team, profile),
    }
}

fn components_at(level: Level) -> Vec<Component> {
    let mut out: Vec<Component> = specs()
        .iter()
        .filter(|s| s.level == level)
        .flat_map(|s| s.components.iter().map(|r| r.source))
        .collect();
    out.sort();
    out.dedup();
    out
}

/// Phase 1: raw per-window components for every team-day from day `w`.
pub fn extract(
    corpora: &[TeamCorpus],
    lexicon: &Lexicon,
    provider: &dyn VectorProvider,
    config: &PipelineConfig,
) -> Result<Extraction> {
    if corpora.is_empty() {
        return Err(Error::Config("no team corpora given".into()));
    }
    let mode = config.execution;
    let mut slices = Vec::new();
    for (t, corpus) in corpora.iter().enumerate() {
        let (first, last) = stats::emitted_days(corpus, config.window_days)?;
        for s in stats::window_slices(corpus, first, last, config.window_days) {
            slices.push((t, s.day, s.range));
        }
    }
    let features: Vec<TeamFeatures> = corpora
        .iter()
        .map(|c| team_features(c, lexicon, provider, mode))
        .collect();
    let windows: Vec<WindowRaw> = par::map(mode, &slices, |(t, day, range)| {
        window_raw(
            TeamDay {
                team: *t,
                day: *day,
            },
            &corpora[*t],
            &features[*t],
            range.clone(),
        )
    });

    let profiles: Vec<Option<CategoryProfile>> =
        par::map(mode, &windows, |w| category_frequency(&w.team));
    let mut team = ComponentMatrix::new(windows.iter().map(|w| w.key).collect());
    for c in components_at(Level::Team) {
        let col = windows
            .iter()
            .zip(&profiles)
            .map(|(w, p)| team_component(c, w, p.as_ref()))
            .collect();
        team.insert(c.name(), col);
    }

    let person_rows: Vec<(PersonDay, &TextCounts)> = windows
        .iter()
        .flat_map(|w| {
            w.persons.iter().map(move |(p, counts)| {
                (
                    PersonDay {
                        team: w.key.team,
                        day: w.key.day,
                        person: *p,
                    },
                    counts,
                )
            })
        })
        .collect();
    let mut person = ComponentMatrix::new(person_rows.iter().map(|(k, _)| *k).collect());
    fill_text_columns(&mut person, &person_rows, Level::PerPersonDispersion, mode);

    let group_rows: Vec<(GroupDay, &TextCounts)> = windows
        .iter()
        .flat_map(|w| {
            w.groups.iter().enumerate().filter_map(move |(g, c)| {
                c.as_ref().map(|c| {
                    (
                        GroupDay {
                            team: w.key.team,
                            day: w.key.day,
                            pm: g == 0,
                        },
                        c,
                    )
                })
            })
        })
        .collect();
    let mut group = ComponentMatrix::new(group_rows.iter().map(|(k, _)| *k).collect());
    fill_text_columns(&mut group, &group_rows, Level::GroupGap, mode);

    Ok(Extraction {
        team_ids: corpora.iter().map(|c| c.team_id.clone()).collect(),
        windows,
        team,
        person,
        group,
    })
}

fn fill_text_columns<K: Clone + Sync>(
    matrix: &mut ComponentMatrix<K>,
    rows: &[(K, &TextCounts)],
    level: Level,
    mode: Execution,
) {
    let profiles: Vec<Option<CategoryProfile>> =
        par::map(mode, rows, |(_, c)| category_frequency(c));
    for c in components_at(level) {
        let col = rows
            .iter()
            .zip(&profiles)
            .map(|((_, counts), p)| text_component(c, counts, p.as_ref()))
            .collect();
        matrix.insert(c.name(), col);
    }
}

/// Phase 2: run-wide standardization of each unit type. Components with no
/// observed value anywhere are zero-filled with a warning.
pub fn pool(extraction: &Extraction) -> Pooled {
    let warn = |level: &str, names: Vec<String>| {
        for n in names {
            log::warn!("{level} component {n} has no observed value in this run; using z = 0");
        }
    };
    let (team, e1) = extraction.team.pooled_z_lenient();
    let (person, e2) = extraction.person.pooled_z_lenient();
    let (group, e3) = extraction.group.pooled_z_lenient();
    warn("team", e1);
    warn("person", e2);
    warn("group", e3);
    Pooled {
        team,
        person,
        group,
    }
}

fn signed(z: &ZMatrix<impl Sized>, row: usize, refs: &[ComponentRef]) -> f64 {
    let pairs: Vec<(f64, bool)> = refs
        .iter()
        .map(|r| (z.get(r.source.name(), row), r.reversed))
        .collect();
    stats::composite(&pairs)
}

fn score_window(
    spec: &IndicatorSpec,
    row: usize,
    w: &WindowRaw,
    pooled: &Pooled,
    person_rows: &[usize],
    group_rows: &[Option<usize>; 2],
) -> Option<f64> {
    if w.n_messages == 0 {
        return None;
    }
    match spec.level {
        Level::Team => Some(signed(&pooled.team, row, spec.components)),
        Level::Direct => match spec.components[0].source {
            Component::ForwardFlow => w.forward_flow,
            _ => Some(turn_taking_from_ginis(w.message_gini?, w.word_gini?)),
        },
        Level::PerPersonDispersion => {
            let composites: Vec<f64> = person_rows
                .iter()
                .map(|&r| signed(&pooled.person, r, spec.components))
                .collect();
            dispersion_score(&composites)
        }
        Level::GroupGap => {
            let pm = signed(&pooled.group, group_rows[0]?, spec.components);
            let rest = signed(&pooled.group, group_rows[1]?, spec.components);
            Some(rest - pm)
        }
    }
}

/// Phase 3: composites per team-day and indicator, flagged at
/// `config.flag_quantile`.
pub fn assemble(
    extraction: &Extraction,
    pooled: &Pooled,
    config: &PipelineConfig,
) -> IndicatorSeries {
    let mut person_rows: HashMap<TeamDay, Vec<usize>> = HashMap::new();
    for (i, k) in extraction.person.keys.iter().enumerate() {
        person_rows
            .entry(TeamDay {
                team: k.team,
                day: k.day,
            })
            .or_default()
            .push(i);
    }
    let mut group_rows: HashMap<TeamDay, [Option<usize>; 2]> = HashMap::new();
    for (i, k) in extraction.group.keys.iter().enumerate() {
        group_rows
            .entry(TeamDay {
                team: k.team,
                day: k.day,
            })
            .or_default()[usize::from(!k.pm)] = Some(i);
    }
    let rows: Vec<usize> = (0..extraction.windows.len()).collect();
    let nested = par::map(config.execution, &rows, |&row| {
        let w = &extraction.windows[row];
        let persons = person_rows.get(&w.key).map(Vec::as_slice).unwrap_or(&[]);
        let groups = group_rows.get(&w.key).copied().unwrap_or_default();
        specs()
            .iter()
            .map(|spec| IndicatorScore {
                team_id: extraction.team_ids[w.key.team].clone(),
                date: w.key.day,
                facet: spec.facet,
                indicator: spec.name.to_owned(),
                value: score_window(spec, row, w, pooled, persons, &groups),
                n_messages: w.n_messages,
                flagged: false,
            })
            .collect::<Vec<_>>()
    });
    let mut series = IndicatorSeries::new(nested.into_iter().flatten().collect());
    series.apply_flags(config.flag_quantile);
    series
}

/// Extract, pool and assemble with term-frequency vectors.
pub fn compute_all(
    corpora: &[TeamCorpus],
    lexicon: &Lexicon,
    config: &PipelineConfig,
) -> Result<IndicatorSeries> {
    compute_all_with(corpora, lexicon, &TermFrequency, config)
}

pub fn compute_all_with(
    corpora: &[TeamCorpus],
    lexicon: &Lexicon,
    provider: &dyn VectorProvider,
    config: &PipelineConfig,
) -> Result<IndicatorSeries> {
    if !(0.0..=1.0).contains(&config.flag_quantile) {
        return Err(Error::Config(format!(
            "flag quantile {} outside [0, 1]",
            config.flag_quantile
        )));
    }
    let extraction = extract(corpora, lexicon, provider, config)?;
    let pooled = pool(&extraction);
    Ok(assemble(&extraction, &pooled, config))
}

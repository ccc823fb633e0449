//! The fifteen daily indicators.
//!
//! Computation runs in three phases: per-window raw extraction
//! ([`extract`]), run-wide pooled standardization ([`pool`]), and composite
//! assembly ([`assemble`]). Phases 1 and 3 are parallel over team-days;
//! phase 2 is a global barrier. [`compute_all`] chains them.

mod pipeline;
mod spec;

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::Serialize;

pub use pipeline::{
    assemble, compute_all, compute_all_with, extract, pool, Extraction, GroupDay, PersonDay,
    PipelineConfig, Pooled, TeamDay, WindowRaw,
};
pub use spec::{
    spec, specs, specs_json, Component, ComponentRef, Facet, IndicatorSpec, Level, Orientation,
    NO_LOW_EFFORT,
};

use crate::ingest::Message;
use crate::stats;

/// One indicator value for one team-day, higher = safer.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndicatorScore {
    pub team_id: String,
    pub date: NaiveDate,
    pub facet: Facet,
    pub indicator: String,
    pub value: Option<f64>,
    pub n_messages: usize,
    pub flagged: bool,
}

/// All scores of a run, sorted by (indicator, team_id, date).
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IndicatorSeries {
    pub scores: Vec<IndicatorScore>,
}

impl IndicatorSeries {
    pub fn new(mut scores: Vec<IndicatorScore>) -> Self {
        scores.sort_by(|a, b| {
            (&a.indicator, &a.team_id, a.date).cmp(&(&b.indicator, &b.team_id, b.date))
        });
        IndicatorSeries { scores }
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Indicator names in first-appearance order (sorted for a built series).
    pub fn indicators(&self) -> Vec<(String, Facet)> {
        let mut out: Vec<(String, Facet)> = Vec::new();
        for s in &self.scores {
            if out.last().map(|(n, _)| n != &s.indicator).unwrap_or(true)
                && !out.iter().any(|(n, _)| n == &s.indicator)
            {
                out.push((s.indicator.clone(), s.facet));
            }
        }
        out
    }

    pub fn for_indicator<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a IndicatorScore> {
        self.scores.iter().filter(move |s| s.indicator == name)
    }

    /// MISSING cells per indicator.
    pub fn missing_tallies(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        for s in &self.scores {
            *out.entry(s.indicator.clone()).or_insert(0) += usize::from(s.value.is_none());
        }
        out
    }

    /// Recomputes flags: the `ceil(q * N)` lowest values of each indicator.
    pub fn apply_flags(&mut self, q: f64) {
        let names: Vec<String> = self.indicators().into_iter().map(|(n, _)| n).collect();
        for s in &mut self.scores {
            s.flagged = false;
        }
        for name in names {
            let idx: Vec<usize> = (0..self.scores.len())
                .filter(|&i| self.scores[i].indicator == name)
                .collect();
            let cells: Vec<crate::reporting::FlagCell<'_>> = idx
                .iter()
                .map(|&i| {
                    let s = &self.scores[i];
                    crate::reporting::FlagCell {
                        team_id: &s.team_id,
                        date: s.date,
                        value: s.value,
                    }
                })
                .collect();
            let flagged = crate::reporting::flag_low_quantile(&cells, q);
            for j in flagged {
                self.scores[idx[j]].flagged = true;
            }
        }
    }
}

/// Per-message thread bookkeeping for one chronologically sorted stream.
#[derive(Debug, Clone)]
pub struct ThreadIndex {
    /// Dense thread id for each reply.
    pub thread_of: Vec<Option<u32>>,
    /// Seconds from thread root to this message, set only on the first reply.
    pub first_reply_latency: Vec<Option<f64>>,
}

impl ThreadIndex {
    pub fn build(messages: &[Message]) -> Self {
        let mut ids: BTreeMap<(&str, crate::ingest::Ts), u32> = BTreeMap::new();
        let mut thread_of = Vec::with_capacity(messages.len());
        let mut first_reply_latency = Vec::with_capacity(messages.len());
        for m in messages {
            match m.thread_root {
                Some(root) if m.is_reply() => {
                    let next = ids.len() as u32;
                    let mut fresh = false;
                    let id = *ids.entry((m.channel.as_str(), root)).or_insert_with(|| {
                        fresh = true;
                        next
                    });
                    thread_of.push(Some(id));
                    first_reply_latency.push(fresh.then(|| (m.ts.0 - root.0) as f64 / 1_000_000.0));
                }
                _ => {
                    thread_of.push(None);
                    first_reply_latency.push(None);
                }
            }
        }
        ThreadIndex {
            thread_of,
            first_reply_latency,
        }
    }
}

/// Mean first-reply delay over threads whose first reply lies in `range`.
pub fn mean_time_to_first_reply(index: &ThreadIndex, range: std::ops::Range<usize>) -> Option<f64> {
    let lat: Vec<f64> = index.first_reply_latency[range]
        .iter()
        .flatten()
        .copied()
        .collect();
    stats::mean(&lat)
}

/// `1 - mean(gini(messages), gini(words))` over every roster member,
/// including silent ones.
pub fn turn_taking(message_counts: &[f64], word_counts: &[f64]) -> Option<f64> {
    Some(turn_taking_from_ginis(
        stats::gini(message_counts)?,
        stats::gini(word_counts)?,
    ))
}

pub fn turn_taking_from_ginis(message_gini: f64, word_gini: f64) -> f64 {
    (1.0 - (message_gini + word_gini) / 2.0).clamp(0.0, 1.0)
}

/// Negated population SD of per-person composites; `None` below two persons.
pub fn dispersion_score(person_composites: &[f64]) -> Option<f64> {
    stats::dispersion_sd(person_composites).map(|sd| 0.0 - sd)
}

//! Rolling windows and the shared numeric machinery: pooled standardization,
//! reverse-scoring, composites, Gini and dispersion.

use std::collections::BTreeMap;
use std::ops::Range;

use chrono::{Days, NaiveDate};

use crate::error::{Error, Result};
use crate::ingest::{Message, TeamCorpus, Ts, SECS_PER_DAY};

pub const DEFAULT_WINDOW_DAYS: u32 = 7;

/// A team's messages in the half-open span `[day - (w-1), day + 1)` UTC.
#[derive(Debug, Clone)]
pub struct WindowSlice<'a> {
    pub team_id: &'a str,
    pub day: NaiveDate,
    pub start: Ts,
    pub end: Ts,
    pub messages: &'a [Message],
    /// Position of `messages` within the corpus.
    pub range: Range<usize>,
}

/// First and last labelled day for a corpus: the window must fit entirely
/// after the first message's day.
pub fn emitted_days(corpus: &TeamCorpus, window_days: u32) -> Result<(NaiveDate, NaiveDate)> {
    let (Some(first), Some(last)) = (corpus.first_day(), corpus.last_day()) else {
        return Err(Error::CorpusTooShort {
            team: corpus.team_id.clone(),
            span_days: 0,
            required: window_days,
        });
    };
    let span_days = (last - first).num_days() + 1;
    if window_days == 0 || span_days < i64::from(window_days) {
        return Err(Error::CorpusTooShort {
            team: corpus.team_id.clone(),
            span_days,
            required: window_days,
        });
    }
    Ok((first + Days::new(u64::from(window_days) - 1), last))
}

/// One slice per labelled day from `first` to `last` inclusive.
pub fn window_slices<'a>(
    corpus: &'a TeamCorpus,
    first: NaiveDate,
    last: NaiveDate,
    window_days: u32,
) -> Vec<WindowSlice<'a>> {
    let msgs = &corpus.messages;
    let span = i64::from(window_days) * SECS_PER_DAY;
    let mut out = Vec::new();
    let mut day = first;
    while day <= last {
        let end = Ts::day_start(day + Days::new(1));
        let start = Ts(end.0 - span * 1_000_000);
        let lo = msgs.partition_point(|m| m.ts < start);
        let hi = msgs.partition_point(|m| m.ts < end);
        out.push(WindowSlice {
            team_id: &corpus.team_id,
            day,
            start,
            end,
            messages: &msgs[lo..hi],
            range: lo..hi,
        });
        day = day + Days::new(1);
    }
    out
}

pub fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Population (divide-by-N) standard deviation.
pub fn population_sd(xs: &[f64]) -> Option<f64> {
    let m = mean(xs)?;
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64;
    Some(var.sqrt())
}

/// Standardizes one component over every non-missing value. Missing values
/// come back as 0 (the pooled mean). A constant column standardizes to 0.
pub fn pooled_z(name: &str, values: &[Option<f64>]) -> Result<Vec<f64>> {
    let present: Vec<f64> = values.iter().flatten().copied().collect();
    let Some(mu) = mean(&present) else {
        return Err(Error::ComponentMissing(name.to_owned()));
    };
    let sigma = population_sd(&present).unwrap_or(0.0);
    Ok(values
        .iter()
        .map(|v| match v {
            Some(x) if sigma > 0.0 => (x - mu) / sigma,
            _ => 0.0,
        })
        .collect())
}

/// Raw component values for a homogeneous set of analysis units.
#[derive(Debug, Clone)]
pub struct ComponentMatrix<K> {
    pub keys: Vec<K>,
    pub columns: BTreeMap<String, Vec<Option<f64>>>,
}

/// Standardized twin of [`ComponentMatrix`], aligned with the same keys.
#[derive(Debug, Clone)]
pub struct ZMatrix<K> {
    pub keys: Vec<K>,
    pub columns: BTreeMap<String, Vec<f64>>,
}

impl<K: Clone> ComponentMatrix<K> {
    pub fn new(keys: Vec<K>) -> Self {
        ComponentMatrix {
            keys,
            columns: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, name: impl Into<String>, values: Vec<Option<f64>>) {
        assert_eq!(values.len(), self.keys.len(), "column length mismatch");
        self.columns.insert(name.into(), values);
    }

    /// Pools every column. Fails on the first entirely-missing component.
    pub fn pooled_z(&self) -> Result<ZMatrix<K>> {
        let mut columns = BTreeMap::new();
        for (name, values) in &self.columns {
            columns.insert(name.clone(), pooled_z(name, values)?);
        }
        Ok(ZMatrix {
            keys: self.keys.clone(),
            columns,
        })
    }

    /// Like [`Self::pooled_z`], but an entirely-missing component becomes
    /// all zeros. Returns the names of such components.
    pub fn pooled_z_lenient(&self) -> (ZMatrix<K>, Vec<String>) {
        let mut columns = BTreeMap::new();
        let mut empty = Vec::new();
        for (name, values) in &self.columns {
            let z = pooled_z(name, values).unwrap_or_else(|_| {
                empty.push(name.clone());
                vec![0.0; values.len()]
            });
            columns.insert(name.clone(), z);
        }
        (
            ZMatrix {
                keys: self.keys.clone(),
                columns,
            },
            empty,
        )
    }
}

impl<K> ZMatrix<K> {
    pub fn get(&self, component: &str, row: usize) -> f64 {
        self.columns[component][row]
    }
}

pub fn reverse(z: f64, reversed: bool) -> f64 {
    if reversed {
        -z
    } else {
        z
    }
}

/// Mean of `(z, reversed)` pairs after reverse-scoring.
pub fn composite(signed: &[(f64, bool)]) -> f64 {
    assert!(!signed.is_empty(), "composite of zero components");
    signed.iter().map(|&(z, r)| reverse(z, r)).sum::<f64>() / signed.len() as f64
}

/// Gini coefficient `sum_ij |x_i - x_j| / (2 n^2 mean)`, computed from the
/// sorted values in O(n log n). `None` for fewer than two members or a zero
/// mean.
pub fn gini(counts: &[f64]) -> Option<f64> {
    let n = counts.len();
    if n < 2 {
        return None;
    }
    let total: f64 = counts.iter().sum();
    if total <= 0.0 {
        return None;
    }
    let mut sorted = counts.to_vec();
    sorted.sort_by(f64::total_cmp);
    let nf = n as f64;
    let weighted: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, x)| (2.0 * (i as f64 + 1.0) - nf - 1.0) * x)
        .sum();
    Some((weighted / (nf * total)).max(0.0))
}

/// Population SD of per-person scores; `None` with fewer than two persons.
pub fn dispersion_sd(scores: &[f64]) -> Option<f64> {
    if scores.len() < 2 {
        return None;
    }
    population_sd(scores)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{Role, Teammate};
    use proptest::prelude::*;

    fn brute_gini(xs: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let mut s = 0.0;
        for a in xs {
            for b in xs {
                s += (a - b).abs();
            }
        }
        s / (2.0 * n * n * m)
    }

    #[test]
    fn z_of_one_two_three() {
        let z = pooled_z("c", &[Some(1.0), Some(2.0), Some(3.0)]).unwrap();
        let expected = 1.0 / (2.0f64 / 3.0).sqrt();
        assert!((z[0] + expected).abs() < 1e-12);
        assert_eq!(z[1], 0.0);
        assert!((z[2] - expected).abs() < 1e-12);
        assert!((expected - 1.224744871391589).abs() < 1e-12);
    }

    #[test]
    fn constant_column_is_zero() {
        assert_eq!(pooled_z("c", &[Some(5.0); 3]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn missing_imputes_zero_and_all_missing_errors() {
        let z = pooled_z("c", &[Some(1.0), None, Some(3.0)]).unwrap();
        assert_eq!(z, vec![-1.0, 0.0, 1.0]);
        let err = pooled_z("time_to_first_reply", &[None, None]).unwrap_err();
        assert!(err.to_string().contains("time_to_first_reply"));
    }

    #[test]
    fn reverse_and_composite() {
        assert_eq!(reverse(0.7, true), -0.7);
        assert_eq!(reverse(0.7, false), 0.7);
        assert_eq!(reverse(reverse(0.7, true), true), 0.7);
        assert!((composite(&[(0.5, false), (0.3, false)]) - 0.4).abs() < 1e-15);
        assert_eq!(composite(&[(1.5, false)]), 1.5);
        assert_eq!(composite(&[(0.0, true), (0.0, false)]), 0.0);
        assert!((composite(&[(0.6, false), (0.2, true)]) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn gini_anchors() {
        assert_eq!(gini(&[10.0; 4]), Some(0.0));
        assert_eq!(brute_gini(&[4.0, 0.0, 0.0, 0.0]), 0.75);
        assert_eq!(gini(&[4.0, 0.0, 0.0, 0.0]), Some(0.75));
        assert_eq!(gini(&[0.0, 0.0]), None);
        assert_eq!(gini(&[3.0]), None);
    }

    #[test]
    fn dispersion_anchors() {
        assert_eq!(dispersion_sd(&[1.0, 1.0, 1.0]), Some(0.0));
        assert_eq!(dispersion_sd(&[0.0, 2.0]), Some(1.0));
        assert_eq!(dispersion_sd(&[2.0, 0.0]), Some(1.0));
        assert_eq!(dispersion_sd(&[2.0]), None);
    }

    fn corpus_at(secs: &[i64]) -> TeamCorpus {
        TeamCorpus {
            team_id: "t".into(),
            roster: vec![Teammate {
                user_id: "a".into(),
                role: Role::Member,
                consented: true,
            }],
            messages: secs
                .iter()
                .map(|&s| Message {
                    ts: Ts::from_secs(s),
                    author: "a".into(),
                    channel: "c".into(),
                    text: "x".into(),
                    thread_root: None,
                    reaction_count: 0,
                })
                .collect(),
        }
    }

    #[test]
    fn window_is_half_open() {
        let d0 = NaiveDate::from_ymd_opt(2024, 1, 1).unwrap();
        let day = d0 + Days::new(6);
        let span_start = Ts::day_start(d0).0 / 1_000_000;
        let span_end = Ts::day_start(day + Days::new(1)).0 / 1_000_000;
        let c = corpus_at(&[span_start - 1, span_start, span_end - 1, span_end]);
        let w = window_slices(&c, day, day, 7);
        let got: Vec<i64> = w[0].messages.iter().map(|m| m.ts.0 / 1_000_000).collect();
        assert_eq!(got, vec![span_start, span_end - 1]);
        assert_eq!(w[0].end.0 - w[0].start.0, 7 * 86_400 * 1_000_000);
    }

    #[test]
    fn eighty_day_corpus_emits_day_seven_to_eighty() {
        let d0 = NaiveDate::from_ymd_opt(2024, 3, 1).unwrap();
        let base = Ts::day_start(d0).0 / 1_000_000;
        let c = corpus_at(&[base + 10, base + 79 * 86_400 + 10]);
        let (first, last) = emitted_days(&c, 7).unwrap();
        assert_eq!((first - d0).num_days() + 1, 7);
        assert_eq!((last - d0).num_days() + 1, 80);
        assert_eq!(window_slices(&c, first, last, 7).len(), 74);
    }

    #[test]
    fn short_corpus_is_rejected() {
        let c = corpus_at(&[86_400 * 100, 86_400 * 105]);
        assert!(emitted_days(&c, 7).is_err());
        assert!(emitted_days(&corpus_at(&[]), 7).is_err());
    }

    #[test]
    fn consecutive_windows_overlap_by_six_days() {
        let base = Ts::day_start(NaiveDate::from_ymd_opt(2024, 1, 1).unwrap()).0 / 1_000_000;
        let secs: Vec<i64> = (0..20).map(|d| base + d * 86_400 + 3600).collect();
        let c = corpus_at(&secs);
        let (first, last) = emitted_days(&c, 7).unwrap();
        let w = window_slices(&c, first, last, 7);
        for pair in w.windows(2) {
            assert_eq!(pair[0].messages.len(), 7);
            assert_eq!(pair[0].messages[1..], pair[1].messages[..6]);
        }
    }

    proptest! {
        #[test]
        fn gini_matches_brute_force(xs in proptest::collection::vec(0u32..=20, 2..=8)) {
            let xs: Vec<f64> = xs.into_iter().map(f64::from).collect();
            match gini(&xs) {
                None => prop_assert_eq!(xs.iter().sum::<f64>(), 0.0),
                Some(g) => {
                    prop_assert!((g - brute_gini(&xs)).abs() < 1e-12);
                    prop_assert!(g < 1.0 - 1.0 / xs.len() as f64 + 1e-12);
                }
            }
        }

        #[test]
        fn gini_scale_and_permutation_invariant(
            xs in proptest::collection::vec(1u32..50, 2..10),
            k in 1u32..7,
        ) {
            let a: Vec<f64> = xs.iter().map(|&x| f64::from(x)).collect();
            let mut b: Vec<f64> = a.iter().map(|x| x * f64::from(k)).collect();
            b.reverse();
            prop_assert!((gini(&a).unwrap() - gini(&b).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn pooled_z_has_zero_mean_unit_sd(
            xs in proptest::collection::vec(proptest::option::weighted(0.8, -1e3f64..1e3), 2..60)
        ) {
            let present: Vec<f64> = xs.iter().flatten().copied().collect();
            prop_assume!(present.len() >= 2);
            prop_assume!(population_sd(&present).unwrap() > 1e-6);
            let z = pooled_z("c", &xs).unwrap();
            let zp: Vec<f64> = z.iter().zip(&xs).filter(|(_, x)| x.is_some()).map(|(z, _)| *z).collect();
            prop_assert!(mean(&zp).unwrap().abs() < 1e-9);
            prop_assert!((population_sd(&zp).unwrap() - 1.0).abs() < 1e-9);
        }

        #[test]
        fn dispersion_is_permutation_invariant(mut xs in proptest::collection::vec(-5.0f64..5.0, 2..10)) {
            let a = dispersion_sd(&xs).unwrap();
            xs.reverse();
            prop_assert!((a - dispersion_sd(&xs).unwrap()).abs() < 1e-12);
        }
    }
}

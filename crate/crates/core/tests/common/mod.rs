#![allow(dead_code)]

use std::collections::BTreeMap;

use psind_core::ingest::TeamCorpus;
use psind_core::synth::{self, SynthProfile};
use psind_core::{IndicatorSeries, Lexicon};

pub fn corpora(profile: &SynthProfile) -> Vec<TeamCorpus> {
    let lex = Lexicon::demo();
    synth::generate(profile, &lex)
        .unwrap()
        .into_iter()
        .map(|t| t.into_corpus().unwrap())
        .collect()
}

/// Mean non-missing value per team for one indicator, in team order.
pub fn team_means(series: &IndicatorSeries, indicator: &str) -> Vec<f64> {
    let mut acc: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for s in series.for_indicator(indicator) {
        if let Some(v) = s.value {
            let e = acc.entry(s.team_id.as_str()).or_insert((0.0, 0));
            e.0 += v;
            e.1 += 1;
        }
    }
    acc.values().map(|(s, n)| s / *n as f64).collect()
}

fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut r = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            r[idx[k]] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation (Pearson on average ranks).
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (ranks(x), ranks(y));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx) * (a - mx)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my) * (b - my)).sum();
    cov / (vx * vy).sqrt()
}

//! Message embeddings and the two similarity measures built on them:
//! mimicry (style matching with the previous speaker) and forward flow
//! (distance of each message from everything said before it).

use std::collections::HashMap;

/// Sparse non-negative vector, terms sorted ascending.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MessageVector {
    entries: Vec<(String, f64)>,
}

impl MessageVector {
    /// Builds from arbitrary entries; duplicate terms are summed and
    /// non-positive weights dropped.
    pub fn from_entries(entries: impl IntoIterator<Item = (String, f64)>) -> Self {
        let mut v: Vec<(String, f64)> = entries.into_iter().filter(|(_, w)| *w > 0.0).collect();
        v.sort_by(|a, b| a.0.cmp(&b.0));
        let mut merged: Vec<(String, f64)> = Vec::with_capacity(v.len());
        for (t, w) in v {
            match merged.last_mut() {
                Some((last, acc)) if *last == t => *acc += w,
                _ => merged.push((t, w)),
            }
        }
        MessageVector { entries: merged }
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm_sq(&self) -> f64 {
        self.entries.iter().map(|(_, w)| w * w).sum()
    }

    pub fn weight(&self, term: &str) -> f64 {
        self.entries
            .binary_search_by(|(t, _)| t.as_str().cmp(term))
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }

    pub fn dot(&self, other: &MessageVector) -> f64 {
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        let (a, b) = (&self.entries, &other.entries);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }
}

/// Turns a token list into a vector. Implementations must be deterministic.
pub trait VectorProvider: Sync {
    fn embed(&self, tokens: &[String]) -> MessageVector;
}

/// Raw term-frequency bag of words.
#[derive(Debug, Clone, Copy, Default)]
pub struct TermFrequency;

impl VectorProvider for TermFrequency {
    fn embed(&self, tokens: &[String]) -> MessageVector {
        embed(tokens)
    }
}

pub fn embed(tokens: &[String]) -> MessageVector {
    MessageVector::from_entries(tokens.iter().map(|t| (t.clone(), 1.0)))
}

/// Cosine similarity clamped to [0, 1]; zero vectors give 0.
pub fn cosine(a: &MessageVector, b: &MessageVector) -> f64 {
    let denom = (a.norm_sq() * b.norm_sq()).sqrt();
    if denom == 0.0 {
        return 0.0;
    }
    (a.dot(b) / denom).clamp(0.0, 1.0)
}

/// Mean cosine between each message and its immediate predecessor, counted
/// only when the two authors differ. Empty vectors are skipped before
/// pairing. `None` when no pair qualifies.
pub fn mimicry_score<'a, A: PartialEq + 'a>(
    stream: impl IntoIterator<Item = (A, &'a MessageVector)>,
) -> Option<f64> {
    let mut prev: Option<(A, &MessageVector)> = None;
    let (mut sum, mut n) = (0.0, 0usize);
    for (author, v) in stream {
        if v.is_zero() {
            continue;
        }
        if let Some((pa, pv)) = &prev {
            if *pa != author {
                sum += cosine(v, pv);
                n += 1;
            }
        }
        prev = Some((author, v));
    }
    (n > 0).then(|| sum / n as f64)
}

/// Mean over messages 2..n of `1 - cos(message, centroid of all earlier
/// messages)`. Empty vectors are skipped. `None` with fewer than two usable
/// messages.
pub fn forward_flow<'a>(stream: impl IntoIterator<Item = &'a MessageVector>) -> Option<f64> {
    // The centroid is proportional to the running sum, and cosine ignores scale.
    let mut sum: HashMap<&'a str, f64> = HashMap::new();
    let mut sum_norm_sq = 0.0f64;
    let (mut acc, mut n, mut seen) = (0.0, 0usize, 0usize);
    for v in stream {
        if v.is_zero() {
            continue;
        }
        if seen > 0 {
            let dot: f64 = v
                .entries()
                .iter()
                .map(|(t, w)| w * sum.get(t.as_str()).copied().unwrap_or(0.0))
                .sum();
            let denom = (v.norm_sq() * sum_norm_sq.max(0.0)).sqrt();
            let cos = if denom > 0.0 {
                (dot / denom).clamp(0.0, 1.0)
            } else {
                0.0
            };
            acc += 1.0 - cos;
            n += 1;
        }
        for (t, w) in v.entries() {
            let slot = sum.entry(t.as_str()).or_insert(0.0);
            sum_norm_sq += (*slot + w) * (*slot + w) - *slot * *slot;
            *slot += w;
        }
        seen += 1;
    }
    (n > 0).then(|| acc / n as f64)
}

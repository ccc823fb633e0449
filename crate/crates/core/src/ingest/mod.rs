//! Chat ingestion: export parsing, consent filtering, and corpus assembly.
//!
//! Two input formats are accepted. A Slack-style export directory
//! (`users.json` plus one directory of daily message arrays per channel) and
//! a normalized JSON-lines file with one message per line. Both produce plain
//! [`Message`] values which [`build_corpus`] turns into a sorted,
//! deduplicated [`TeamCorpus`].

mod export;
mod normalized;
mod roster;

use std::collections::BTreeSet;
use std::fmt;

use chrono::{DateTime, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use export::{parse_export, parse_export_with, ExportUser, RawExport};
pub use normalized::{read_messages, read_messages_from, write_messages};
pub use roster::{parse_exclusions, parse_roles, read_exclusions, read_roles};

pub const MICROS_PER_SEC: i64 = 1_000_000;
pub const SECS_PER_DAY: i64 = 86_400;

/// Message timestamp in microseconds since the Unix epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Ts(pub i64);

impl Ts {
    pub fn from_secs(secs: i64) -> Self {
        Ts(secs * MICROS_PER_SEC)
    }

    /// Rounds to the nearest microsecond.
    pub fn from_secs_f64(secs: f64) -> Option<Self> {
        if !secs.is_finite() {
            return None;
        }
        let micros = (secs * MICROS_PER_SEC as f64).round();
        if micros.abs() >= i64::MAX as f64 {
            return None;
        }
        Some(Ts(micros as i64))
    }

    /// Parses the export form `"<epoch seconds>.<fraction>"`. Fractions
    /// longer than six digits are truncated.
    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        let (whole, frac) = match s.split_once('.') {
            Some((w, f)) => (w, f),
            None => (s, ""),
        };
        if whole.is_empty() || !whole.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        if !frac.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let secs: i64 = whole.parse().ok()?;
        let mut micros = 0i64;
        for (i, b) in frac.bytes().take(6).enumerate() {
            micros += i64::from(b - b'0') * 10i64.pow(5 - i as u32);
        }
        secs.checked_mul(MICROS_PER_SEC)?
            .checked_add(micros)
            .map(Ts)
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / MICROS_PER_SEC as f64
    }

    /// UTC calendar day containing this instant.
    pub fn day(self) -> NaiveDate {
        let secs = self.0.div_euclid(MICROS_PER_SEC);
        DateTime::from_timestamp(secs, 0)
            .map(|dt| dt.date_naive())
            .unwrap_or(NaiveDate::MIN)
    }

    /// Start of the given UTC day.
    pub fn day_start(day: NaiveDate) -> Self {
        let secs = day
            .and_hms_opt(0, 0, 0)
            .expect("midnight exists")
            .and_utc()
            .timestamp();
        Ts::from_secs(secs)
    }
}

impl fmt::Display for Ts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let secs = self.0.div_euclid(MICROS_PER_SEC);
        let micros = self.0.rem_euclid(MICROS_PER_SEC);
        write!(f, "{secs}.{micros:06}")
    }
}

/// One chat utterance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub ts: Ts,
    pub author: String,
    pub channel: String,
    pub text: String,
    /// Timestamp of the thread parent; equals `ts` on the parent itself.
    pub thread_root: Option<Ts>,
    pub reaction_count: u32,
}

impl Message {
    pub fn is_reply(&self) -> bool {
        matches!(self.thread_root, Some(root) if root != self.ts)
    }

    fn sort_key(&self) -> (Ts, &str, &str, &str, Option<Ts>, u32) {
        (
            self.ts,
            &self.channel,
            &self.author,
            &self.text,
            self.thread_root,
            self.reaction_count,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Role {
    #[serde(rename = "PM")]
    Pm,
    #[serde(rename = "HRM")]
    Hrm,
    #[serde(rename = "MEMBER")]
    Member,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Pm => "PM",
            Role::Hrm => "HRM",
            Role::Member => "MEMBER",
        }
    }
}

impl std::str::FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "PM" => Ok(Role::Pm),
            "HRM" => Ok(Role::Hrm),
            "MEMBER" => Ok(Role::Member),
            other => Err(format!(
                "unknown role {other:?} (expected PM, HRM or MEMBER)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Teammate {
    pub user_id: String,
    pub role: Role,
    pub consented: bool,
}

/// Consent-filtered, chronologically ordered messages of one team.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TeamCorpus {
    pub team_id: String,
    pub roster: Vec<Teammate>,
    pub messages: Vec<Message>,
}

impl TeamCorpus {
    /// Roster members whose data may be analysed.
    pub fn active_roster(&self) -> impl Iterator<Item = &Teammate> {
        self.roster.iter().filter(|t| t.consented)
    }

    pub fn first_day(&self) -> Option<NaiveDate> {
        self.messages.first().map(|m| m.ts.day())
    }

    pub fn last_day(&self) -> Option<NaiveDate> {
        self.messages.last().map(|m| m.ts.day())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Exclusion {
    pub kept: Vec<Message>,
    pub removed: usize,
}

/// Drops every message written by an excluded user.
pub fn apply_exclusions(messages: Vec<Message>, excluded: &BTreeSet<String>) -> Exclusion {
    let before = messages.len();
    let kept: Vec<Message> = messages
        .into_iter()
        .filter(|m| !excluded.contains(&m.author))
        .collect();
    let removed = before - kept.len();
    if before > 0 && kept.is_empty() {
        log::warn!("exclusions removed all {before} messages; corpus is empty");
    }
    Exclusion { kept, removed }
}

/// Sorts and deduplicates messages into a corpus. Fails when an author is
/// absent from the roster or has not consented.
pub fn build_corpus(
    messages: Vec<Message>,
    roster: Vec<Teammate>,
    team_id: impl Into<String>,
) -> Result<TeamCorpus> {
    build_corpus_counted(messages, roster, team_id).map(|(corpus, _)| corpus)
}

/// [`build_corpus`], also returning how many exact duplicates were dropped.
pub fn build_corpus_counted(
    mut messages: Vec<Message>,
    roster: Vec<Teammate>,
    team_id: impl Into<String>,
) -> Result<(TeamCorpus, usize)> {
    let mut ids = BTreeSet::new();
    for mate in &roster {
        if !ids.insert(mate.user_id.as_str()) {
            return Err(Error::Config(format!(
                "duplicate roster entry {}",
                mate.user_id
            )));
        }
    }
    let missing: BTreeSet<&str> = messages
        .iter()
        .map(|m| m.author.as_str())
        .filter(|a| !ids.contains(a))
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingFromRoster(
            missing.into_iter().map(str::to_owned).collect(),
        ));
    }
    let refused: BTreeSet<&str> = roster
        .iter()
        .filter(|t| !t.consented)
        .map(|t| t.user_id.as_str())
        .collect();
    if let Some(m) = messages
        .iter()
        .find(|m| refused.contains(m.author.as_str()))
    {
        return Err(Error::Config(format!(
            "message from non-consenting user {} survived exclusion",
            m.author
        )));
    }
    if let Some(m) = messages
        .iter()
        .find(|m| matches!(m.thread_root, Some(root) if root > m.ts))
    {
        return Err(Error::Config(format!(
            "reply at {} in {} points to later thread root",
            m.ts, m.channel
        )));
    }

    messages.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    let before = messages.len();
    messages.dedup_by(|a, b| {
        a.ts == b.ts && a.author == b.author && a.channel == b.channel && a.text == b.text
    });
    let duplicates = before - messages.len();

    Ok((
        TeamCorpus {
            team_id: team_id.into(),
            roster,
            messages,
        },
        duplicates,
    ))
}

/// Where one team's messages come from.
#[derive(Debug, Clone)]
pub enum Source {
    Export(std::path::PathBuf),
    Messages(std::path::PathBuf),
}

/// Per-team drop accounting: `kept = raw - system - excluded - duplicates`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    pub raw: usize,
    pub system: usize,
    pub excluded: usize,
    pub duplicates: usize,
    pub kept: usize,
}

/// Full ingest of one team: read, filter by consent, assemble the corpus.
/// Roster members on the exclusion list are kept with `consented = false`.
pub fn ingest_team(
    source: &Source,
    mut roster: Vec<Teammate>,
    excluded: &BTreeSet<String>,
    team_id: impl Into<String>,
) -> Result<(TeamCorpus, IngestReport)> {
    let (messages, raw, system) = match source {
        Source::Export(dir) => {
            let export = parse_export(dir)?;
            (export.messages, export.raw_count, export.system_count)
        }
        Source::Messages(path) => {
            let messages = read_messages(path)?;
            let n = messages.len();
            (messages, n, 0)
        }
    };
    for mate in &mut roster {
        if excluded.contains(&mate.user_id) {
            mate.consented = false;
        }
    }
    let Exclusion { kept, removed } = apply_exclusions(messages, excluded);
    let (corpus, duplicates) = build_corpus_counted(kept, roster, team_id)?;
    let report = IngestReport {
        raw,
        system,
        excluded: removed,
        duplicates,
        kept: corpus.messages.len(),
    };
    Ok((corpus, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn msg(ts: i64, author: &str, text: &str) -> Message {
        Message {
            ts: Ts::from_secs(ts),
            author: author.into(),
            channel: "general".into(),
            text: text.into(),
            thread_root: None,
            reaction_count: 0,
        }
    }

    fn mate(id: &str) -> Teammate {
        Teammate {
            user_id: id.into(),
            role: Role::Member,
            consented: true,
        }
    }

    #[test]
    fn ts_parse_and_display() {
        let ts = Ts::parse("1700000000.000100").unwrap();
        assert_eq!(ts.0, 1_700_000_000_000_100);
        assert_eq!(ts.to_string(), "1700000000.000100");
        assert_eq!(Ts::parse("12").unwrap(), Ts::from_secs(12));
        assert_eq!(Ts::parse("1.5").unwrap().0, 1_500_000);
        assert!(Ts::parse("abc").is_none());
        assert!(Ts::parse("-1.0").is_none());
        assert!(Ts::parse("1.2x").is_none());
    }

    #[test]
    fn f64_round_trip_is_exact_at_micro_precision() {
        let ts = Ts::parse("1700000000.000100").unwrap();
        assert_eq!(Ts::from_secs_f64(ts.as_secs_f64()), Some(ts));
    }

    #[test]
    fn reply_linkage() {
        let parent_ts = Ts::parse("1700000000.000100").unwrap();
        let mut parent = msg(0, "a", "q");
        parent.ts = parent_ts;
        parent.thread_root = Some(parent_ts);
        let mut reply = msg(1_700_000_100, "b", "r");
        reply.thread_root = Some(parent_ts);
        assert!(!parent.is_reply());
        assert!(reply.is_reply());
        assert!(!msg(5, "a", "x").is_reply());
    }

    #[test]
    fn empty_exclusion_list_is_identity() {
        let msgs = vec![msg(2, "a", "x"), msg(1, "b", "y")];
        let out = apply_exclusions(msgs.clone(), &BTreeSet::new());
        assert_eq!(out.kept, msgs);
        assert_eq!(out.removed, 0);
    }

    #[test]
    fn excluding_everyone_leaves_empty_corpus() {
        let msgs = vec![msg(2, "a", "x"), msg(1, "b", "y")];
        let ex: BTreeSet<String> = ["a", "b"].iter().map(|s| s.to_string()).collect();
        let out = apply_exclusions(msgs, &ex);
        assert!(out.kept.is_empty());
        assert_eq!(out.removed, 2);
    }

    #[test]
    fn build_sorts_and_dedups() {
        let msgs = vec![
            msg(30, "a", "late"),
            msg(10, "b", "early"),
            msg(20, "a", "mid"),
            msg(10, "b", "early"),
        ];
        let (c, dups) = build_corpus_counted(msgs, vec![mate("a"), mate("b")], "t1").unwrap();
        assert_eq!(dups, 1);
        let ts: Vec<i64> = c.messages.iter().map(|m| m.ts.0).collect();
        assert!(ts.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(c.messages.len(), 3);
    }

    #[test]
    fn ties_break_by_channel_then_author() {
        let mut a = msg(10, "zed", "x");
        a.channel = "b".into();
        let mut b = msg(10, "amy", "x");
        b.channel = "b".into();
        let c = msg(10, "zed", "x");
        let corpus = build_corpus(vec![a, b, c], vec![mate("zed"), mate("amy")], "t").unwrap();
        let order: Vec<(&str, &str)> = corpus
            .messages
            .iter()
            .map(|m| (m.channel.as_str(), m.author.as_str()))
            .collect();
        assert_eq!(order, vec![("b", "amy"), ("b", "zed"), ("general", "zed")]);
    }

    #[test]
    fn missing_roster_author_is_named() {
        let err = build_corpus(vec![msg(1, "ghost", "boo")], vec![mate("a")], "t").unwrap_err();
        match err {
            Error::MissingFromRoster(ids) => assert_eq!(ids, vec!["ghost".to_string()]),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn reply_pointing_forward_is_rejected() {
        let mut m = msg(10, "a", "x");
        m.thread_root = Some(Ts::from_secs(20));
        assert!(build_corpus(vec![m], vec![mate("a")], "t").is_err());
    }
}

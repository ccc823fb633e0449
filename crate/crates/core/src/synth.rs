//! Seeded multi-team chat corpora with controllable, planted properties.
//!
//! Text is bag-of-category gibberish: each token is drawn from a lexicon
//! category with that category's configured rate, or else from a neutral
//! nonce vocabulary that matches no category.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{self, Message, Role, TeamCorpus, Teammate, Ts, MICROS_PER_SEC, SECS_PER_DAY};
use crate::lexicon::{Category, Lexicon};
use crate::par::{self, Execution};

/// Per-team overrides of the profile-wide knobs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TeamKnobs {
    pub participation_skew: Option<f64>,
    pub reply_latency_mean: Option<f64>,
    pub thread_probability: Option<f64>,
    pub msgs_per_member_per_week: Option<f64>,
    pub dominant_word_factor: Option<f64>,
    /// Merged over the profile-wide rates.
    pub category_rates: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthProfile {
    pub seed: u64,
    pub teams: usize,
    pub members_per_team: usize,
    pub pms_per_team: usize,
    pub hrms_per_team: usize,
    pub days: u32,
    pub start_date: NaiveDate,
    pub msgs_per_member_per_week: f64,
    pub words_per_message: usize,
    /// 0 = uniform; towards 1 message volume concentrates geometrically on
    /// the first members.
    pub participation_skew: f64,
    /// Mean seconds between a thread parent and each reply.
    pub reply_latency_mean: f64,
    pub thread_probability: f64,
    /// Per-token probability of drawing from each category.
    pub category_rates: BTreeMap<String, f64>,
    /// Message-length multiplier for the first plain member.
    pub dominant_word_factor: f64,
    /// The last N members of each roster are written to the exclusion file.
    pub non_consenting_members: usize,
    pub channels: Vec<String>,
    /// Entry `i` overrides knobs for team `i`.
    pub team_overrides: Vec<TeamKnobs>,
}

pub const DEFAULT_CATEGORY_RATE: f64 = 0.012;

impl Default for SynthProfile {
    fn default() -> Self {
        SynthProfile {
            seed: 1,
            teams: 6,
            members_per_team: 12,
            pms_per_team: 2,
            hrms_per_team: 2,
            days: 84,
            start_date: NaiveDate::from_ymd_opt(2024, 1, 8).expect("valid date"),
            msgs_per_member_per_week: 33.0,
            words_per_message: 12,
            participation_skew: 0.0,
            reply_latency_mean: 1800.0,
            thread_probability: 0.2,
            category_rates: Category::ALL
                .iter()
                .map(|c| (c.name().to_owned(), DEFAULT_CATEGORY_RATE))
                .collect(),
            dominant_word_factor: 1.0,
            non_consenting_members: 0,
            channels: vec!["dev".into(), "general".into(), "random".into()],
            team_overrides: Vec::new(),
        }
    }
}

/// Effective knobs for one team.
#[derive(Debug, Clone)]
struct Knobs {
    skew: f64,
    latency: f64,
    thread_p: f64,
    weekly: f64,
    dominant: f64,
    rates: Vec<(Category, f64)>,
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::Config(format!("{name} = {v} outside [0, 1]")));
    }
    Ok(())
}

impl SynthProfile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let profile: SynthProfile = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        profile.validate()?;
        Ok(profile)
    }

    pub fn validate(&self) -> Result<()> {
        for t in 0..self.teams {
            self.knobs(t)?;
        }
        if self.teams == 0 || self.days == 0 {
            return Err(Error::Config("teams and days must be positive".into()));
        }
        if self.members_per_team < 2 {
            return Err(Error::Config("members_per_team must be at least 2".into()));
        }
        if self.pms_per_team + self.hrms_per_team > self.members_per_team {
            return Err(Error::Config("more PMs and HRMs than members".into()));
        }
        if self.non_consenting_members >= self.members_per_team {
            return Err(Error::Config("at least one member must consent".into()));
        }
        if self.words_per_message == 0 || self.channels.is_empty() {
            return Err(Error::Config(
                "words_per_message and channels must be non-empty".into(),
            ));
        }
        if self.team_overrides.len() > self.teams {
            return Err(Error::Config("more team_overrides than teams".into()));
        }
        Ok(())
    }

    fn knobs(&self, team: usize) -> Result<Knobs> {
        let o = self.team_overrides.get(team).cloned().unwrap_or_default();
        let mut rates = self.category_rates.clone();
        rates.extend(o.category_rates);
        let mut resolved = Vec::new();
        for (name, r) in &rates {
            let cat = Category::from_name(name)
                .ok_or_else(|| Error::Config(format!("unknown category {name:?}")))?;
            check_unit(&format!("category_rates.{name}"), *r)?;
            resolved.push((cat, *r));
        }
        let total: f64 = resolved.iter().map(|(_, r)| r).sum();
        if total > 1.0 + 1e-12 {
            return Err(Error::Config(format!("category rates sum to {total} > 1")));
        }
        let k = Knobs {
            skew: o.participation_skew.unwrap_or(self.participation_skew),
            latency: o.reply_latency_mean.unwrap_or(self.reply_latency_mean),
            thread_p: o.thread_probability.unwrap_or(self.thread_probability),
            weekly: o
                .msgs_per_member_per_week
                .unwrap_or(self.msgs_per_member_per_week),
            dominant: o.dominant_word_factor.unwrap_or(self.dominant_word_factor),
            rates: resolved,
        };
        check_unit("participation_skew", k.skew)?;
        check_unit("thread_probability", k.thread_p)?;
        if !(k.latency >= 0.0 && k.weekly >= 0.0 && k.dominant > 0.0) {
            return Err(Error::Config(
                "reply_latency_mean and msgs_per_member_per_week must be >= 0, dominant_word_factor > 0"
                    .into(),
            ));
        }
        Ok(k)
    }
}

/// One generated team before consent filtering.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthTeam {
    pub team_id: String,
    pub roster: Vec<Teammate>,
    pub messages: Vec<Message>,
    pub excluded: Vec<String>,
}

impl SynthTeam {
    /// Applies the team's exclusion list and builds the corpus.
    pub fn into_corpus(self) -> Result<TeamCorpus> {
        let excluded: std::collections::BTreeSet<String> = self.excluded.into_iter().collect();
        let mut roster = self.roster;
        for m in &mut roster {
            m.consented = !excluded.contains(&m.user_id);
        }
        let kept = ingest::apply_exclusions(self.messages, &excluded).kept;
        ingest::build_corpus(kept, roster, self.team_id)
    }
}

/// Nonce words that match no category of `lexicon`.
pub fn neutral_vocabulary(lexicon: &Lexicon) -> Vec<String> {
    const ONSETS: [&str; 12] = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "v", "z"];
    const VOWELS: [&str; 4] = ["a", "o", "u", "e"];
    let mut out = Vec::new();
    for a in ONSETS {
        for v in VOWELS {
            for b in ONSETS {
                let w = format!("{a}{v}{b}ix");
                if lexicon.classify(&w).is_empty() {
                    out.push(w);
                }
            }
        }
    }
    out
}

pub fn generate(profile: &SynthProfile, lexicon: &Lexicon) -> Result<Vec<SynthTeam>> {
    generate_with(profile, lexicon, Execution::default())
}

pub fn generate_with(
    profile: &SynthProfile,
    lexicon: &Lexicon,
    mode: Execution,
) -> Result<Vec<SynthTeam>> {
    profile.validate()?;
    let neutral = neutral_vocabulary(lexicon);
    let words: BTreeMap<Category, Vec<String>> = Category::ALL
        .iter()
        .map(|c| {
            let mut ws: Vec<String> = lexicon
                .patterns(*c)
                .iter()
                .map(|p| p.example().to_owned())
                .collect();
            ws.sort();
            (*c, ws)
        })
        .collect();
    let teams: Vec<usize> = (0..profile.teams).collect();
    par::try_map(mode, &teams, |&t| {
        let knobs = profile.knobs(t)?;
        Ok(generate_team(profile, &knobs, t, &words, &neutral))
    })
}

fn team_rng(seed: u64, team: usize) -> ChaCha8Rng {
    let mix = (team as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    ChaCha8Rng::seed_from_u64(seed ^ mix)
}

fn generate_team(
    p: &SynthProfile,
    k: &Knobs,
    team: usize,
    words: &BTreeMap<Category, Vec<String>>,
    neutral: &[String],
) -> SynthTeam {
    let mut rng = team_rng(p.seed, team);
    let team_id = format!("team{:02}", team + 1);
    let n = p.members_per_team;
    let roster: Vec<Teammate> = (0..n)
        .map(|i| Teammate {
            user_id: format!("{team_id}_u{:02}", i + 1),
            role: if i < p.pms_per_team {
                Role::Pm
            } else if i < p.pms_per_team + p.hrms_per_team {
                Role::Hrm
            } else {
                Role::Member
            },
            consented: true,
        })
        .collect();
    let dominant = if p.pms_per_team + p.hrms_per_team < n {
        p.pms_per_team + p.hrms_per_team
    } else {
        0
    };

    // geometric allocation, normalized to mean weight 1
    let ratio = 1.0 - k.skew;
    let raw: Vec<f64> = (0..n).map(|i| ratio.powi(i as i32)).collect();
    let total_w: f64 = raw.iter().sum();
    let per_member_total = k.weekly * f64::from(p.days) / 7.0;
    let counts: Vec<usize> = raw
        .iter()
        .map(|w| (per_member_total * w * n as f64 / total_w).round() as usize)
        .collect();

    let mut per_day: Vec<Vec<usize>> = vec![Vec::new(); p.days as usize];
    for (m, &c) in counts.iter().enumerate() {
        for j in 0..c {
            per_day[j * p.days as usize / c].push(m);
        }
    }

    let draw_text = |rng: &mut ChaCha8Rng, len: usize| -> String {
        let mut toks: Vec<&str> = Vec::with_capacity(len);
        for _ in 0..len {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut picked = None;
            for (c, r) in &k.rates {
                acc += r;
                if u < acc {
                    picked = words[c].choose(rng).map(String::as_str);
                    break;
                }
            }
            toks.push(match picked {
                Some(w) => w,
                None => neutral.choose(rng).map(String::as_str).unwrap_or("zix"),
            });
        }
        toks.join(" ")
    };

    let day0 = Ts::day_start(p.start_date).0;
    let day_us = SECS_PER_DAY * MICROS_PER_SEC;
    let mut messages: Vec<Message> = Vec::new();
    for (d, senders) in per_day.iter().enumerate() {
        let start = day0 + d as i64 * day_us;
        let end = start + day_us;
        let mut plain: Vec<usize> = Vec::new();
        let mut replies: Vec<usize> = Vec::new();
        for &m in senders {
            if rng.gen::<f64>() < k.thread_p {
                replies.push(m);
            } else {
                plain.push(m);
            }
        }
        let first_plain = messages.len();
        for &m in &plain {
            let len = message_len(p.words_per_message, m == dominant, k.dominant);
            messages.push(Message {
                ts: Ts(start + rng.gen_range(0..day_us)),
                author: roster[m].user_id.clone(),
                channel: p.channels.choose(&mut rng).cloned().unwrap_or_default(),
                text: draw_text(&mut rng, len),
                thread_root: None,
                reaction_count: rng.gen_range(0..3),
            });
        }
        let parents: Vec<usize> = (first_plain..messages.len()).collect();
        for &m in &replies {
            let len = message_len(p.words_per_message, m == dominant, k.dominant);
            let text = draw_text(&mut rng, len);
            let author = roster[m].user_id.clone();
            let eligible: Vec<usize> = parents
                .iter()
                .copied()
                .filter(|&i| messages[i].author != author && messages[i].ts.0 < end - 1)
                .collect();
            let Some(&parent) = eligible.choose(&mut rng) else {
                messages.push(Message {
                    ts: Ts(start + rng.gen_range(0..day_us)),
                    author,
                    channel: p.channels.choose(&mut rng).cloned().unwrap_or_default(),
                    text,
                    thread_root: None,
                    reaction_count: 0,
                });
                continue;
            };
            let root = messages[parent].ts;
            let u: f64 = rng.gen();
            let delay_us = ((-k.latency * (1.0 - u).ln()).max(1.0) * MICROS_PER_SEC as f64) as i64;
            let ts = (root.0 + delay_us).min(end - 1).max(root.0 + 1);
            messages[parent].thread_root = Some(root);
            let channel = messages[parent].channel.clone();
            messages.push(Message {
                ts: Ts(ts),
                author,
                channel,
                text,
                thread_root: Some(root),
                reaction_count: 0,
            });
        }
    }
    messages.sort_by(|a, b| (a.ts, &a.channel, &a.author).cmp(&(b.ts, &b.channel, &b.author)));

    let excluded = roster[n - p.non_consenting_members..]
        .iter()
        .map(|t| t.user_id.clone())
        .collect();
    SynthTeam {
        team_id,
        roster,
        messages,
        excluded,
    }
}

fn message_len(base: usize, dominant: bool, factor: f64) -> usize {
    if dominant {
        ((base as f64 * factor).round() as usize).max(1)
    } else {
        base
    }
}

/// Writes `<out>/<team_id>/{messages.jsonl, roles.csv, exclude.txt}` and
/// returns the team directories.
pub fn write_teams(teams: &[SynthTeam], out_dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    let mut dirs = Vec::new();
    for team in teams {
        let dir = out_dir.join(&team.team_id);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;

        let path = dir.join("messages.jsonl");
        let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = BufWriter::new(file);
        ingest::write_messages(&team.messages, &mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(&path, e))?;

        let path = dir.join("roles.csv");
        let mut roles = String::from("user_id,role\n");
        for m in &team.roster {
            roles.push_str(&format!("{},{}\n", m.user_id, m.role.as_str()));
        }
        fs::write(&path, roles).map_err(|e| Error::io(&path, e))?;

        let path = dir.join("exclude.txt");
        let mut ex = String::from("# user ids whose messages must be excluded\n");
        for id in &team.excluded {
            ex.push_str(id);
            ex.push('\n');
        }
        fs::write(&path, ex).map_err(|e| Error::io(&path, e))?;
        dirs.push(dir);
    }
    Ok(dirs)
}

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::{Message, Ts};
use crate::error::{Error, Result};
use crate::par::{self, Execution};

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct ExportUser {
    pub id: String,
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub is_bot: bool,
}

#[derive(Debug, Deserialize)]
pub(super) struct RawReaction {
    #[allow(dead_code)]
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub users: Vec<String>,
    pub count: Option<u32>,
}

impl RawReaction {
    pub(super) fn tally(&self) -> u32 {
        self.count.unwrap_or(self.users.len() as u32)
    }
}

#[derive(Debug, Deserialize)]
struct RawMessage {
    ts: String,
    user: Option<String>,
    #[serde(default)]
    text: String,
    thread_ts: Option<String>,
    subtype: Option<String>,
    #[serde(default)]
    reactions: Vec<RawReaction>,
}

/// Result of reading an export directory, before consent filtering.
#[derive(Debug, Clone)]
pub struct RawExport {
    pub users: Vec<ExportUser>,
    pub messages: Vec<Message>,
    /// Message objects found on disk.
    pub raw_count: usize,
    /// Dropped as system or bot traffic.
    pub system_count: usize,
}

pub fn parse_export(root: &Path) -> Result<RawExport> {
    parse_export_with(root, Execution::default())
}

/// Reads `<root>/users.json` and every `<root>/<channel>/*.json` file.
pub fn parse_export_with(root: &Path, mode: Execution) -> Result<RawExport> {
    let users_path = root.join("users.json");
    let bytes = fs::read(&users_path).map_err(|e| Error::io(&users_path, e))?;
    let users: Vec<ExportUser> =
        serde_json::from_slice(&bytes).map_err(|e| Error::from_json(&users_path, &e))?;
    let known: HashMap<&str, bool> = users.iter().map(|u| (u.id.as_str(), u.is_bot)).collect();

    let mut channels: Vec<(String, PathBuf)> = Vec::new();
    for entry in fs::read_dir(root).map_err(|e| Error::io(root, e))? {
        let entry = entry.map_err(|e| Error::io(root, e))?;
        let path = entry.path();
        if path.is_dir() {
            let name = entry.file_name().to_string_lossy().into_owned();
            channels.push((name, path));
        }
    }
    channels.sort();

    let parsed = par::try_map(mode, &channels, |(name, dir)| {
        parse_channel(name, dir, &known)
    })?;

    let mut messages = Vec::new();
    let mut raw_count = 0;
    let mut system_count = 0;
    let mut unknown = BTreeSet::new();
    for chan in parsed {
        raw_count += chan.raw;
        system_count += chan.system;
        unknown.extend(chan.unknown);
        messages.extend(chan.messages);
    }
    if !unknown.is_empty() {
        return Err(Error::UnknownAuthors(unknown.into_iter().collect()));
    }
    Ok(RawExport {
        users,
        messages,
        raw_count,
        system_count,
    })
}

struct ChannelParse {
    messages: Vec<Message>,
    raw: usize,
    system: usize,
    unknown: BTreeSet<String>,
}

fn parse_channel(name: &str, dir: &Path, known: &HashMap<&str, bool>) -> Result<ChannelParse> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();

    let mut out = ChannelParse {
        messages: Vec::new(),
        raw: 0,
        system: 0,
        unknown: BTreeSet::new(),
    };
    for file in files {
        let bytes = fs::read(&file).map_err(|e| Error::io(&file, e))?;
        let raw: Vec<RawMessage> =
            serde_json::from_slice(&bytes).map_err(|e| Error::from_json(&file, &e))?;
        for (idx, m) in raw.into_iter().enumerate() {
            out.raw += 1;
            if m.subtype.is_some() {
                out.system += 1;
                continue;
            }
            let Some(user) = m.user else {
                out.system += 1;
                continue;
            };
            match known.get(user.as_str()) {
                Some(true) => {
                    out.system += 1;
                    continue;
                }
                Some(false) => {}
                None => {
                    out.unknown.insert(user);
                    continue;
                }
            }
            let ts = Ts::parse(&m.ts).ok_or_else(|| {
                Error::malformed(
                    &file,
                    format!("message {idx}"),
                    format!("bad ts {:?}", m.ts),
                )
            })?;
            let thread_root = match m.thread_ts.as_deref() {
                Some(s) => Some(Ts::parse(s).ok_or_else(|| {
                    Error::malformed(
                        &file,
                        format!("message {idx}"),
                        format!("bad thread_ts {s:?}"),
                    )
                })?),
                None => None,
            };
            out.messages.push(Message {
                ts,
                author: user,
                channel: name.to_owned(),
                text: m.text,
                thread_root,
                reaction_count: m.reactions.iter().map(RawReaction::tally).sum(),
            });
        }
    }
    Ok(out)
}

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::export::RawReaction;
use super::{Message, Ts};
use crate::error::{Error, Result};

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Reactions {
    Count(u32),
    List(Vec<RawReaction>),
}

#[derive(Debug, Deserialize)]
struct LineIn {
    ts: f64,
    user: String,
    channel: String,
    #[serde(default)]
    text: String,
    thread_root: Option<f64>,
    reactions: Option<Reactions>,
}

#[derive(Serialize)]
struct LineOut<'a> {
    ts: f64,
    user: &'a str,
    channel: &'a str,
    text: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    thread_root: Option<f64>,
    #[serde(skip_serializing_if = "is_zero")]
    reactions: u32,
}

fn is_zero(n: &u32) -> bool {
    *n == 0
}

pub fn read_messages(path: &Path) -> Result<Vec<Message>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_messages_from(BufReader::new(file), path)
}

/// Parses one JSON message object per line; blank lines are skipped.
pub fn read_messages_from(reader: impl BufRead, path: &Path) -> Result<Vec<Message>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = i + 1;
        let rec: LineIn = serde_json::from_str(&line).map_err(|e| {
            Error::malformed(
                path,
                format!("line {lineno}, column {}", e.column()),
                e.to_string(),
            )
        })?;
        let ts = Ts::from_secs_f64(rec.ts)
            .filter(|t| t.0 > 0)
            .ok_or_else(|| {
                Error::malformed(path, format!("line {lineno}"), "ts must be positive")
            })?;
        let thread_root = match rec.thread_root {
            Some(r) => Some(Ts::from_secs_f64(r).ok_or_else(|| {
                Error::malformed(path, format!("line {lineno}"), "bad thread_root")
            })?),
            None => None,
        };
        let reaction_count = match rec.reactions {
            None => 0,
            Some(Reactions::Count(n)) => n,
            Some(Reactions::List(list)) => list.iter().map(RawReaction::tally).sum(),
        };
        out.push(Message {
            ts,
            author: rec.user,
            channel: rec.channel,
            text: rec.text,
            thread_root,
            reaction_count,
        });
    }
    Ok(out)
}

/// Writes messages in the normalized line format, in the given order.
pub fn write_messages<W: Write>(messages: &[Message], mut out: W) -> std::io::Result<()> {
    for m in messages {
        let line = LineOut {
            ts: m.ts.as_secs_f64(),
            user: &m.author,
            channel: &m.channel,
            text: &m.text,
            thread_root: m.thread_root.map(Ts::as_secs_f64),
            reactions: m.reaction_count,
        };
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

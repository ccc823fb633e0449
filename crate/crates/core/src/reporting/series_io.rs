use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indicators::{Facet, IndicatorScore, IndicatorSeries};

pub const CSV_HEADER: [&str; 7] = [
    "team_id",
    "date",
    "facet",
    "indicator",
    "value",
    "n_messages",
    "flagged",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SeriesFormat {
    #[default]
    Csv,
    Jsonl,
}

impl SeriesFormat {
    /// `.jsonl` and `.json` are JSON lines, anything else is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") => SeriesFormat::Jsonl,
            _ => SeriesFormat::Csv,
        }
    }
}

impl std::str::FromStr for SeriesFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "csv" => Ok(SeriesFormat::Csv),
            "jsonl" => Ok(SeriesFormat::Jsonl),
            other => Err(format!("unknown format {other:?} (expected csv or jsonl)")),
        }
    }
}

/// Shortest round-trip decimal; negative zero prints as `0`.
pub fn format_value(v: f64) -> String {
    if v == 0.0 {
        "0".to_owned()
    } else {
        v.to_string()
    }
}

pub fn write_series(series: &IndicatorSeries, path: &Path, format: SeriesFormat) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    match format {
        SeriesFormat::Csv => write_series_csv(series, &mut out),
        SeriesFormat::Jsonl => write_series_jsonl(series, &mut out),
    }
    .and_then(|_| out.flush())
    .map_err(|e| Error::io(path, e))
}

pub fn write_series_csv<W: Write>(series: &IndicatorSeries, out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for s in &series.scores {
        w.write_record([
            s.team_id.as_str(),
            &s.date.to_string(),
            s.facet.as_str(),
            &s.indicator,
            &s.value.map(format_value).unwrap_or_default(),
            &s.n_messages.to_string(),
            if s.flagged { "true" } else { "false" },
        ])?;
    }
    w.flush()
}

#[derive(Serialize, Deserialize)]
struct JsonRow {
    team_id: String,
    date: NaiveDate,
    facet: Facet,
    indicator: String,
    value: Option<f64>,
    n_messages: usize,
    flagged: bool,
}

pub fn write_series_jsonl<W: Write>(series: &IndicatorSeries, mut out: W) -> std::io::Result<()> {
    for s in &series.scores {
        let row = JsonRow {
            team_id: s.team_id.clone(),
            date: s.date,
            facet: s.facet,
            indicator: s.indicator.clone(),
            value: s.value.map(|v| if v == 0.0 { 0.0 } else { v }),
            n_messages: s.n_messages,
            flagged: s.flagged,
        };
        serde_json::to_writer(&mut out, &row)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_series(path: &Path) -> Result<IndicatorSeries> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    match SeriesFormat::from_path(path) {
        SeriesFormat::Csv => read_series_csv(file, path),
        SeriesFormat::Jsonl => read_series_jsonl(BufReader::new(file), path),
    }
}

/// Reads a series CSV. Columns are located by header name, so extra
/// columns are tolerated; any missing required column is an error.
pub fn read_series_csv<R: Read>(input: R, path: &Path) -> Result<IndicatorSeries> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r
        .headers()
        .map_err(|e| Error::malformed(path, "header", e.to_string()))?
        .clone();
    let mut col = [0usize; 7];
    for (slot, name) in col.iter_mut().zip(CSV_HEADER) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::malformed(path, "header", format!("missing column {name}")))?;
    }
    let mut scores = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::malformed(path, "record", e.to_string()))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let at = || format!("line {line}");
        let field = |i: usize| rec.get(col[i]).unwrap_or("");
        let bad = |what: &str, v: &str| Error::malformed(path, at(), format!("bad {what} {v:?}"));
        let value = match field(4) {
            "" => None,
            v => Some(v.parse::<f64>().map_err(|_| bad("value", v))?),
        };
        scores.push(IndicatorScore {
            team_id: field(0).to_owned(),
            date: field(1).parse().map_err(|_| bad("date", field(1)))?,
            facet: field(2).parse().map_err(|_| bad("facet", field(2)))?,
            indicator: field(3).to_owned(),
            value,
            n_messages: field(5).parse().map_err(|_| bad("n_messages", field(5)))?,
            flagged: field(6).parse().map_err(|_| bad("flagged", field(6)))?,
        });
    }
    Ok(IndicatorSeries::new(scores))
}

pub fn read_series_jsonl<R: BufRead>(input: R, path: &Path) -> Result<IndicatorSeries> {
    let mut scores = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: JsonRow = serde_json::from_str(&line).map_err(|e| {
            Error::malformed(
                path,
                format!("line {}, column {}", i + 1, e.column()),
                e.to_string(),
            )
        })?;
        scores.push(IndicatorScore {
            team_id: row.team_id,
            date: row.date,
            facet: row.facet,
            indicator: row.indicator,
            value: row.value,
            n_messages: row.n_messages,
            flagged: row.flagged,
        });
    }
    Ok(IndicatorSeries::new(scores))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> IndicatorSeries {
        let d = NaiveDate::from_ymd_opt(2024, 1, 7).unwrap();
        IndicatorSeries::new(vec![
            IndicatorScore {
                team_id: "b".into(),
                date: d,
                facet: Facet::Learning,
                indicator: "adapt_and_improve".into(),
                value: None,
                n_messages: 0,
                flagged: false,
            },
            IndicatorScore {
                team_id: "a".into(),
                date: d,
                facet: Facet::Learning,
                indicator: "adapt_and_improve".into(),
                value: Some(0.125),
                n_messages: 12,
                flagged: true,
            },
        ])
    }

    #[test]
    fn csv_layout_is_exact() {
        let mut buf = Vec::new();
        write_series_csv(&sample(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "team_id,date,facet,indicator,value,n_messages,flagged\n\
             a,2024-01-07,Learning,adapt_and_improve,0.125,12,true\n\
             b,2024-01-07,Learning,adapt_and_improve,,0,false\n"
        );
    }

    #[test]
    fn csv_and_jsonl_read_back_identically() {
        let s = sample();
        let mut csv_buf = Vec::new();
        write_series_csv(&s, &mut csv_buf).unwrap();
        let mut json_buf = Vec::new();
        write_series_jsonl(&s, &mut json_buf).unwrap();
        let p = Path::new("x");
        assert_eq!(read_series_csv(&csv_buf[..], p).unwrap(), s);
        assert_eq!(read_series_jsonl(&json_buf[..], p).unwrap(), s);
    }

    #[test]
    fn missing_column_is_malformed() {
        let text = "team_id,date,facet,indicator,value,flagged\n";
        let err = read_series_csv(text.as_bytes(), Path::new("s.csv")).unwrap_err();
        assert!(err.is_malformed_input());
        assert!(err.to_string().contains("n_messages"));
    }

    #[test]
    fn negative_zero_prints_plain() {
        assert_eq!(format_value(-0.0), "0");
        assert_eq!(format_value(-1.5), "-1.5");
    }
}

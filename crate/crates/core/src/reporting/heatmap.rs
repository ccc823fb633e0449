use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{Days, NaiveDate};

use super::{flag_low_quantile, FlagCell, DEFAULT_FLAG_QUANTILE};
use crate::error::{Error, Result};
use crate::indicators::{spec, Facet, IndicatorSeries, Orientation};
use crate::par::{self, Execution};

#[derive(Debug, Clone)]
pub struct HeatmapOptions {
    pub flag_quantile: f64,
    /// Label of the first column ("Day 7" for seven-day windows).
    pub first_day_number: u32,
    pub execution: Execution,
}

impl Default for HeatmapOptions {
    fn default() -> Self {
        HeatmapOptions {
            flag_quantile: DEFAULT_FLAG_QUANTILE,
            first_day_number: 7,
            execution: Execution::default(),
        }
    }
}

/// One indicator's team-by-day grid.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapPanel {
    pub indicator: String,
    pub facet: Facet,
    pub teams: Vec<String>,
    pub dates: Vec<NaiveDate>,
    /// `grid[team][day]`.
    pub grid: Vec<Vec<Option<f64>>>,
    pub flagged: BTreeSet<(usize, usize)>,
    pub min: Option<f64>,
    pub max: Option<f64>,
}

impl HeatmapPanel {
    pub fn file_name(&self) -> String {
        format!(
            "{}__{}.svg",
            self.facet.as_str().to_lowercase(),
            self.indicator
        )
    }
}

/// Builds one panel per indicator on a shared calendar axis. Flags are
/// recomputed from the values at `flag_quantile`.
pub fn build_panels(series: &IndicatorSeries, flag_quantile: f64) -> Vec<HeatmapPanel> {
    let teams: Vec<String> = series
        .scores
        .iter()
        .map(|s| s.team_id.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let (Some(lo), Some(hi)) = (
        series.scores.iter().map(|s| s.date).min(),
        series.scores.iter().map(|s| s.date).max(),
    ) else {
        return Vec::new();
    };
    let mut dates = Vec::new();
    let mut d = lo;
    while d <= hi {
        dates.push(d);
        d = d + Days::new(1);
    }
    let team_ix: BTreeMap<&str, usize> = teams
        .iter()
        .enumerate()
        .map(|(i, t)| (t.as_str(), i))
        .collect();

    let mut order: Vec<(String, Facet)> = series.indicators();
    order.sort_by(|a, b| (a.1, &a.0).cmp(&(b.1, &b.0)));
    order
        .into_iter()
        .map(|(name, facet)| {
            let scores: Vec<_> = series.for_indicator(&name).collect();
            let mut grid = vec![vec![None; dates.len()]; teams.len()];
            for s in &scores {
                let col = (s.date - lo).num_days() as usize;
                grid[team_ix[s.team_id.as_str()]][col] = s.value;
            }
            let cells: Vec<FlagCell<'_>> = scores
                .iter()
                .map(|s| FlagCell {
                    team_id: &s.team_id,
                    date: s.date,
                    value: s.value,
                })
                .collect();
            let flagged = flag_low_quantile(&cells, flag_quantile)
                .into_iter()
                .map(|i| {
                    let s = scores[i];
                    (
                        team_ix[s.team_id.as_str()],
                        (s.date - lo).num_days() as usize,
                    )
                })
                .collect();
            let values = scores.iter().filter_map(|s| s.value);
            let min = values.clone().reduce(f64::min);
            let max = values.reduce(f64::max);
            HeatmapPanel {
                indicator: name,
                facet,
                teams: teams.clone(),
                dates: dates.clone(),
                grid,
                flagged,
                min,
                max,
            }
        })
        .collect()
}

const CELL_W: usize = 10;
const CELL_H: usize = 22;
const LEFT: usize = 90;
const TOP: usize = 48;
const LIGHT: (f64, f64, f64) = (247.0, 251.0, 255.0);
const DARK: (f64, f64, f64) = (8.0, 48.0, 107.0);

fn shade(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let mix = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        mix(LIGHT.0, DARK.0),
        mix(LIGHT.1, DARK.1),
        mix(LIGHT.2, DARK.2)
    )
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn fmt_num(v: f64) -> String {
    let s = format!("{v:.3}");
    if s == "-0.000" {
        "0.000".to_owned()
    } else {
        s
    }
}

impl HeatmapPanel {
    /// SVG 1.1 document. Darker cells are safer; circles mark flagged
    /// cells; hatched cells have no value.
    pub fn to_svg(&self, flag_quantile: f64, first_day_number: u32) -> String {
        let cols = self.dates.len();
        let rows = self.teams.len();
        let grid_w = cols * CELL_W;
        let grid_h = rows * CELL_H;
        let legend_x = LEFT + grid_w + 24;
        let width = legend_x + 90;
        let height = (TOP + grid_h + 40).max(TOP + 170);
        let negative = spec(&self.indicator)
            .map(|s| s.orientation == Orientation::Negative)
            .unwrap_or(false);
        let title = format!(
            "{}: {}{}",
            self.facet,
            self.indicator,
            if negative { " *" } else { "" }
        );

        let mut s = String::new();
        let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif">"#
        );
        let _ = writeln!(s, "<title>{}</title>", escape(&title));
        let _ = writeln!(
            s,
            "<desc>Flagged cells: lowest {} of all non-missing team-day values of this indicator (ceil(q*N), ties by team then date).</desc>",
            flag_quantile
        );
        let _ = writeln!(
            s,
            r##"<defs><pattern id="gap" width="4" height="4" patternUnits="userSpaceOnUse"><rect width="4" height="4" fill="#ffffff"/><path d="M0,4 L4,0" stroke="#b0b0b0" stroke-width="1"/></pattern><linearGradient id="scale" x1="0" y1="1" x2="0" y2="0"><stop offset="0" stop-color="{}"/><stop offset="1" stop-color="{}"/></linearGradient></defs>"##,
            shade(0.0),
            shade(1.0)
        );
        let _ = writeln!(
            s,
            r#"<text x="{LEFT}" y="20" font-size="14" font-weight="bold">{}</text>"#,
            escape(&title)
        );

        for (r, team) in self.teams.iter().enumerate() {
            let y = TOP + r * CELL_H;
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" font-size="11" text-anchor="end">{}</text>"#,
                LEFT - 6,
                y + CELL_H / 2 + 4,
                escape(team)
            );
        }
        for (c, _) in self.dates.iter().enumerate().step_by(7) {
            let x = LEFT + c * CELL_W;
            let _ = writeln!(
                s,
                r#"<text x="{x}" y="{}" font-size="9">Day {}</text>"#,
                TOP - 6,
                c as u32 + first_day_number
            );
        }

        let span = match (self.min, self.max) {
            (Some(lo), Some(hi)) => Some((lo, hi)),
            _ => None,
        };
        let _ = writeln!(s, r#"<g id="cells" stroke="none">"#);
        for (r, row) in self.grid.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                let (x, y) = (LEFT + c * CELL_W, TOP + r * CELL_H);
                let fill = match (v, span) {
                    (Some(v), Some((lo, hi))) => {
                        let t = if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
                        shade(t)
                    }
                    _ => "url(#gap)".to_owned(),
                };
                let _ = writeln!(
                    s,
                    r#"<rect x="{x}" y="{y}" width="{CELL_W}" height="{CELL_H}" fill="{fill}"/>"#
                );
            }
        }
        let _ = writeln!(s, "</g>");
        let _ = writeln!(
            s,
            r##"<g id="flags" fill="none" stroke="#d62728" stroke-width="1.5">"##
        );
        for &(r, c) in &self.flagged {
            let _ = writeln!(
                s,
                r#"<circle cx="{}" cy="{}" r="4"/>"#,
                LEFT + c * CELL_W + CELL_W / 2,
                TOP + r * CELL_H + CELL_H / 2
            );
        }
        let _ = writeln!(s, "</g>");

        let bar_h = 120;
        let _ = writeln!(
            s,
            r##"<rect x="{legend_x}" y="{TOP}" width="14" height="{bar_h}" fill="url(#scale)" stroke="#888888"/>"##
        );
        let (lo_label, hi_label) = match span {
            Some((lo, hi)) => (fmt_num(lo), fmt_num(hi)),
            None => ("n/a".to_owned(), "n/a".to_owned()),
        };
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="10">max {hi_label}</text>"#,
            legend_x + 18,
            TOP + 8
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="10">min {lo_label}</text>"#,
            legend_x + 18,
            TOP + bar_h
        );
        let _ = writeln!(s, "</svg>");
        s
    }
}

/// Writes one `<facet>__<indicator>.svg` per indicator into `out_dir`.
pub fn render_heatmaps(
    series: &IndicatorSeries,
    out_dir: &Path,
    options: &HeatmapOptions,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let panels = build_panels(series, options.flag_quantile);
    let docs = par::map(options.execution, &panels, |p| {
        (
            p.file_name(),
            p.to_svg(options.flag_quantile, options.first_day_number),
        )
    });
    let mut written = Vec::with_capacity(docs.len());
    for (name, svg) in docs {
        let path = out_dir.join(name);
        fs::write(&path, svg).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::indicators::IndicatorScore;

    fn series(values: &[Option<f64>]) -> IndicatorSeries {
        let d0 = NaiveDate::from_ymd_opt(2024, 1, 7).unwrap();
        IndicatorSeries::new(
            values
                .iter()
                .enumerate()
                .map(|(i, v)| IndicatorScore {
                    team_id: format!("team{}", i % 2),
                    date: d0 + Days::new((i / 2) as u64),
                    facet: Facet::Culture,
                    indicator: "no_blame".into(),
                    value: *v,
                    n_messages: 3,
                    flagged: false,
                })
                .collect(),
        )
    }

    #[test]
    fn constant_indicator_has_one_colour_and_equal_legend() {
        let p = &build_panels(&series(&[Some(2.0); 6]), 0.025)[0];
        assert_eq!(p.min, p.max);
        let svg = p.to_svg(0.025, 7);
        let fills: BTreeSet<&str> = svg
            .lines()
            .filter(|l| l.starts_with("<rect x=") && l.contains("height=\"22\""))
            .map(|l| {
                l.split("fill=\"")
                    .nth(1)
                    .unwrap()
                    .split('"')
                    .next()
                    .unwrap()
            })
            .collect();
        assert_eq!(fills.len(), 1);
        assert!(svg.contains("max 2.000") && svg.contains("min 2.000"));
    }

    #[test]
    fn gaps_render_hatched_and_unflagged() {
        let p = &build_panels(&series(&[Some(1.0), None, Some(3.0), Some(0.5)]), 0.5)[0];
        let svg = p.to_svg(0.5, 7);
        assert_eq!(svg.matches("url(#gap)").count(), 1);
        assert_eq!(p.flagged.len(), 2);
        assert!(!p.flagged.contains(&(1, 0)));
        assert_eq!(svg.matches("<circle").count(), 2);
    }

    #[test]
    fn title_names_facet_and_day_seven() {
        let p = &build_panels(&series(&[Some(1.0), Some(2.0)]), 0.0)[0];
        let svg = p.to_svg(0.0, 7);
        assert!(svg.contains("Culture: no_blame"));
        assert!(svg.contains("Day 7"));
        assert_eq!(svg.matches("<circle").count(), 0);
        assert_eq!(p.file_name(), "culture__no_blame.svg");
    }
}

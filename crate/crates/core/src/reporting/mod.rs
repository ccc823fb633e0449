//! Series serialization, low-quantile flagging, and heatmap rendering.

mod heatmap;
mod series_io;

use chrono::NaiveDate;

pub use heatmap::{build_panels, render_heatmaps, HeatmapOptions, HeatmapPanel};
pub use series_io::{
    format_value, read_series, read_series_csv, read_series_jsonl, write_series, write_series_csv,
    write_series_jsonl, SeriesFormat, CSV_HEADER,
};

pub const DEFAULT_FLAG_QUANTILE: f64 = 0.025;

#[derive(Debug, Clone, Copy)]
pub struct FlagCell<'a> {
    pub team_id: &'a str,
    pub date: NaiveDate,
    pub value: Option<f64>,
}

/// Number of cells flagged out of `n` non-missing values: `ceil(q * n)`.
/// A tiny slack absorbs binary rounding (`0.025 * 480` is not exactly 12).
pub fn flag_count(n: usize, q: f64) -> usize {
    if n == 0 || q <= 0.0 {
        return 0;
    }
    let k = (q * n as f64 - 1e-9).ceil().max(0.0) as usize;
    k.min(n)
}

/// Indices of the `ceil(q * N)` lowest non-missing cells, ties broken by
/// (team, date). Missing cells are never flagged.
pub fn flag_low_quantile(cells: &[FlagCell<'_>], q: f64) -> Vec<usize> {
    let mut present: Vec<(usize, f64)> = cells
        .iter()
        .enumerate()
        .filter_map(|(i, c)| c.value.map(|v| (i, v)))
        .collect();
    present.sort_by(|(i, a), (j, b)| {
        a.total_cmp(b)
            .then_with(|| cells[*i].team_id.cmp(cells[*j].team_id))
            .then_with(|| cells[*i].date.cmp(&cells[*j].date))
    });
    let k = flag_count(present.len(), q);
    let mut out: Vec<usize> = present[..k].iter().map(|(i, _)| *i).collect();
    out.sort_unstable();
    out
}

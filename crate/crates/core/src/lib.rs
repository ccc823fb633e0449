//! Daily psychological-safety indicators computed from team chat.
//!
//! Pipeline: [`ingest`] chat exports into consent-filtered corpora,
//! [`textprep`] and [`lexicon`] turn text into category counts,
//! [`vectorspace`] supplies mimicry and forward flow, [`stats`] provides
//! windows and pooled standardization, [`indicators`] assembles the fifteen
//! daily scores, and [`reporting`] writes series files and SVG heatmaps.
//! [`synth`] generates corpora with planted properties for validation.
//!
//! With the default `parallel` feature, per-message and per-window work runs
//! on rayon; [`Execution::Sequential`] or building without the feature gives
//! the same output on one thread.

pub mod error;
pub mod indicators;
pub mod ingest;
pub mod lexicon;
mod par;
pub mod reporting;
pub mod stats;
pub mod synth;
pub mod textprep;
pub mod vectorspace;

pub use error::{Error, Result};
pub use indicators::{compute_all, IndicatorScore, IndicatorSeries, PipelineConfig};
pub use lexicon::Lexicon;
pub use par::Execution;

//! Semantic neighborhood density (SND), term frequency and eye-gaze analyses
//! for words in C and Java source corpora.
//!
//! The numerical modules are generic over [`Scalar`] (`f32` or `f64`). File
//! loaders and the pipeline work in `f64`; the aliases below name the
//! concrete types used there.

pub mod corpus;
pub mod embeddings;
pub mod gaze;
pub mod glm;
pub mod partition;
pub mod report;
pub mod scalar;
pub mod snd;
pub mod stats;
pub mod synth;
mod word;

pub use scalar::Scalar;
pub use word::Word;

pub use corpus::{Language, Token, TokenKind, Vocabulary};
pub use gaze::Metric;

pub type EmbeddingTable = embeddings::EmbeddingTable<f64>;
pub type EmbeddingTable32 = embeddings::EmbeddingTable<f32>;
pub type ThresholdEstimate = snd::ThresholdEstimate<f64>;
pub type SndScore = snd::SndScore<f64>;
pub type SndReport = snd::SndReport<f64>;
pub type FixationEvent = gaze::FixationEvent<f64>;
pub type WordGazeRecord = gaze::WordGazeRecord<f64>;
pub type GroupAssignment = partition::GroupAssignment<f64>;
pub type ComparisonResult = stats::ComparisonResult<f64>;
pub type GlmFit = glm::GlmFit<f64>;
pub type GlmFit32 = glm::GlmFit<f32>;
pub type EvalReport = glm::EvalReport;

/// CSV writer with LF record terminators.
pub(crate) fn csv_writer<W: std::io::Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

/// Formats an optional float for CSV, empty when absent.
pub(crate) fn fmt_opt(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

//! Pipeline orchestration and result tables.

mod config;
mod pipeline;
mod tables;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use config::{ConfigError, RunConfig, TableFormat};
pub use pipeline::{output_dir, run_pipeline, PipelineError, Stage};
pub use tables::{
    annotation_rows, emit_tables, read_tables_json, render_markdown, write_annotations_csv, AnnotationRow,
    ModelFreeTable, Tables,
};

use crate::corpus::Vocabulary;
use crate::gaze::WordGazeRecord;
use crate::glm::ModelBasedResult;
use crate::partition::GroupAssignment;
use crate::snd::{SndMetadata, SndReport};
use crate::stats::ComparisonResult;
use crate::Word;

/// Results for one embedding source.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSection {
    pub model: String,
    pub snd: SndReport<f64>,
    pub model_free: Vec<ComparisonResult<f64>>,
    /// SND median, TF median and joint groups; empty if the model-free
    /// analysis was skipped.
    pub assignments: Vec<GroupAssignment<f64>>,
    pub domain_size: usize,
}

/// Everything one pipeline run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportBundle {
    pub seed: u64,
    pub vocabulary: Vocabulary,
    pub tf: BTreeMap<Word, f64>,
    pub gaze: BTreeMap<Word, WordGazeRecord<f64>>,
    pub models: Vec<ModelSection>,
    pub model_based: Vec<ModelBasedResult>,
    /// Analyses that could not be run, with reasons.
    pub skipped: Vec<String>,
}

impl ReportBundle {
    pub fn tables(&self) -> Tables {
        Tables {
            seed: self.seed,
            model_free: self
                .models
                .iter()
                .map(|m| ModelFreeTable {
                    model: m.model.clone(),
                    rows: m.model_free.clone(),
                })
                .collect(),
            model_based: self.model_based.clone(),
        }
    }
}

/// Written last as `manifest.json`. Contains no timestamps, so identical
/// runs give identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub config: RunConfig,
    pub inputs: InputSummary,
    pub models: Vec<ModelSummary>,
    pub skipped: Vec<String>,
    /// Each output file and the stage that produced it.
    pub outputs: Vec<OutputRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSummary {
    pub vocabulary_words: usize,
    pub total_tokens: u64,
    pub fixation_events: usize,
    pub participants: usize,
    pub trials: usize,
    pub gaze_words: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub model: String,
    pub dimension: usize,
    pub snd: SndMetadata,
    pub analysis_domain: usize,
    pub group_sizes: BTreeMap<String, [usize; 2]>,
    pub model_free_rows: usize,
    pub model_based_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub file: String,
    pub stage: String,
}

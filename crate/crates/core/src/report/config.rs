use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize};

use crate::corpus::{FilterConfig, Language};
use crate::gaze::RpdAggregate;
use crate::glm::ModelBasedConfig;
use crate::partition::SplitKind;
use crate::snd::{SigmaConvention, DEFAULT_PAIRS};
use crate::stats::{ModelFreeConfig, WinsorTails, DEFAULT_PERMUTATIONS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableFormat {
    Csv,
    Json,
    Markdown,
}

impl TableFormat {
    pub const ALL: [TableFormat; 3] = [TableFormat::Csv, TableFormat::Json, TableFormat::Markdown];
}

impl fmt::Display for TableFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TableFormat::Csv => "csv",
            TableFormat::Json => "json",
            TableFormat::Markdown => "markdown",
        })
    }
}

impl FromStr for TableFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(TableFormat::Csv),
            "json" => Ok(TableFormat::Json),
            "markdown" | "md" => Ok(TableFormat::Markdown),
            _ => Err(format!("unknown table format {s:?}")),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{0}")]
    Invalid(String),
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<PathBuf>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(PathBuf),
        Many(Vec<PathBuf>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(p) => vec![p],
        OneOrMany::Many(v) => v,
    })
}

/// Everything a pipeline run needs. Relative paths are taken relative to
/// the directory of the config file (see [`RunConfig::load`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Source tree to tokenize. Exactly one of `corpus_dir` and
    /// `vocabulary` must be set.
    pub corpus_dir: Option<PathBuf>,
    /// Precomputed `word,count,tf` CSV.
    pub vocabulary: Option<PathBuf>,
    /// One JSONL table per embedding source.
    #[serde(deserialize_with = "one_or_many")]
    pub embeddings: Vec<PathBuf>,
    pub expected_dimension: Option<usize>,
    pub fixations: PathBuf,
    pub language: Language,
    pub filter: FilterConfig,
    pub n_pairs: usize,
    pub exhaustive_pairs: bool,
    pub sigma: SigmaConvention,
    pub n_perm: usize,
    pub seed: u64,
    pub splits: Vec<SplitKind>,
    pub rpd_aggregate: RpdAggregate,
    pub winsor_tails: WinsorTails,
    pub g_on_raw: bool,
    pub two_sided: bool,
    pub model_based: ModelBasedConfig,
    pub formats: Vec<TableFormat>,
    pub out_dir: PathBuf,
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            corpus_dir: None,
            vocabulary: None,
            embeddings: Vec::new(),
            expected_dimension: None,
            fixations: PathBuf::new(),
            language: Language::C,
            filter: FilterConfig::default(),
            n_pairs: DEFAULT_PAIRS,
            exhaustive_pairs: false,
            sigma: SigmaConvention::Population,
            n_perm: DEFAULT_PERMUTATIONS,
            seed: 0,
            splits: SplitKind::ALL.to_vec(),
            rpd_aggregate: RpdAggregate::Mean,
            winsor_tails: WinsorTails::Both,
            g_on_raw: false,
            two_sided: false,
            model_based: ModelBasedConfig::default(),
            formats: TableFormat::ALL.to_vec(),
            out_dir: PathBuf::from("results"),
            base_dir: None,
        }
    }
}

impl RunConfig {
    /// Reads a JSON config and records its directory as the base for
    /// relative paths.
    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config: RunConfig = serde_json::from_str(&text).map_err(|source| ConfigError::Json {
            path: path.to_path_buf(),
            source,
        })?;
        config.base_dir = Some(
            path.parent()
                .filter(|p| !p.as_os_str().is_empty())
                .map(Path::to_path_buf)
                .unwrap_or_else(|| PathBuf::from(".")),
        );
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: &str| Err(ConfigError::Invalid(m.to_owned()));
        match (&self.corpus_dir, &self.vocabulary) {
            (Some(_), Some(_)) => return invalid("set only one of corpus_dir and vocabulary"),
            (None, None) => return invalid("one of corpus_dir and vocabulary is required"),
            _ => {}
        }
        if self.embeddings.is_empty() {
            return invalid("at least one embeddings file is required");
        }
        if self.fixations.as_os_str().is_empty() {
            return invalid("fixations is required");
        }
        if self.out_dir.as_os_str().is_empty() {
            return invalid("out_dir must not be empty");
        }
        if self.n_perm == 0 || (!self.exhaustive_pairs && self.n_pairs == 0) {
            return invalid("n_perm and n_pairs must be positive");
        }
        if self.splits.is_empty() || self.formats.is_empty() {
            return invalid("splits and formats must not be empty");
        }
        let t = self.model_based.threshold;
        if !(t > 0.0 && t < 1.0) {
            return invalid("model_based.threshold must lie in (0, 1)");
        }
        Ok(())
    }

    /// `path` joined onto the config directory unless it is absolute.
    pub fn resolve(&self, path: &Path) -> PathBuf {
        match &self.base_dir {
            Some(base) if path.is_relative() => base.join(path),
            _ => path.to_path_buf(),
        }
    }

    pub fn model_free_config(&self) -> ModelFreeConfig {
        ModelFreeConfig {
            n_perm: self.n_perm,
            seed: self.seed,
            tails: self.winsor_tails,
            g_on_raw: self.g_on_raw,
            two_sided: self.two_sided,
            ..ModelFreeConfig::default()
        }
    }
}

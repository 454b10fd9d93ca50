use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::tables::{annotation_rows, emit_tables, file_label, write_annotations_csv};
use super::{InputSummary, Manifest, ModelSection, ModelSummary, OutputRecord, ReportBundle, RunConfig};
use crate::corpus::{self, Vocabulary};
use crate::embeddings::{self, EmbeddingTable};
use crate::gaze::{self, Metric};
use crate::glm::{self, GlmError};
use crate::partition::PartitionError;
use crate::snd::{self, SndConfig};
use crate::stats::{self, StatsError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Corpus,
    Snd,
    Gaze,
    ModelFree,
    ModelBased,
    Output,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Config => "config",
            Stage::Corpus => "corpus",
            Stage::Snd => "snd",
            Stage::Gaze => "gaze",
            Stage::ModelFree => "model-free",
            Stage::ModelBased => "model-based",
            Stage::Output => "output",
        })
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{stage} stage failed: {source}")]
pub struct PipelineError {
    pub stage: Stage,
    #[source]
    pub source: Box<dyn std::error::Error + Send + Sync>,
}

fn at<E: std::error::Error + Send + Sync + 'static>(stage: Stage) -> impl FnOnce(E) -> PipelineError {
    move |e| PipelineError {
        stage,
        source: Box::new(e),
    }
}

/// Runs every stage and writes the bundle to `config.out_dir`.
///
/// Files are written to a sibling staging directory that replaces
/// `out_dir` only once everything succeeded; on failure the staging
/// directory is removed and `out_dir` is left untouched.
pub fn run_pipeline(config: &RunConfig) -> Result<ReportBundle, PipelineError> {
    config.validate().map_err(at(Stage::Config))?;
    let out_dir = config.resolve(&config.out_dir);
    let name = out_dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "results".into());
    let staging = out_dir.with_file_name(format!(".{name}.partial"));
    if staging.exists() {
        fs::remove_dir_all(&staging).map_err(at(Stage::Output))?;
    }
    fs::create_dir_all(&staging).map_err(at(Stage::Output))?;

    let result = run_into(config, &staging);
    match result {
        Ok(bundle) => {
            let publish = || -> std::io::Result<()> {
                if out_dir.exists() {
                    fs::remove_dir_all(&out_dir)?;
                }
                fs::rename(&staging, &out_dir)
            };
            publish().map_err(at(Stage::Output))?;
            Ok(bundle)
        }
        Err(e) => {
            let _ = fs::remove_dir_all(&staging);
            Err(e)
        }
    }
}

struct Writer<'a> {
    dir: &'a Path,
    outputs: Vec<OutputRecord>,
}

impl Writer<'_> {
    fn file(&mut self, name: &str, stage: Stage) -> Result<std::io::BufWriter<fs::File>, PipelineError> {
        self.outputs.push(OutputRecord {
            file: name.to_owned(),
            stage: stage.to_string(),
        });
        fs::File::create(self.dir.join(name))
            .map(std::io::BufWriter::new)
            .map_err(at(Stage::Output))
    }

    fn json<T: serde::Serialize>(&mut self, name: &str, stage: Stage, value: &T) -> Result<(), PipelineError> {
        let mut f = self.file(name, stage)?;
        serde_json::to_writer_pretty(&mut f, value).map_err(at(Stage::Output))?;
        f.write_all(b"\n").map_err(at(Stage::Output))?;
        f.flush().map_err(at(Stage::Output))
    }
}

fn flush(mut f: std::io::BufWriter<fs::File>) -> Result<(), PipelineError> {
    f.flush().map_err(at(Stage::Output))
}

fn load_vocabulary(config: &RunConfig) -> Result<Vocabulary, PipelineError> {
    let stage = at::<corpus::CorpusError>(Stage::Corpus);
    if let Some(dir) = &config.corpus_dir {
        let tokens = corpus::tokenize_dir(&config.resolve(dir), config.language).map_err(at(Stage::Corpus))?;
        corpus::build_vocabulary(&tokens, config.language, &config.filter).map_err(stage)
    } else {
        let path = config.resolve(config.vocabulary.as_ref().expect("validated"));
        let rows = corpus::read_vocabulary_csv(&path).map_err(at(Stage::Corpus))?;
        Vocabulary::from_counts(config.language, rows.into_iter().map(|r| (r.word, r.count))).map_err(stage)
    }
}

/// Analyses that hit a degenerate split or a one-class task are skipped
/// with a note instead of failing the run.
fn skippable_stats(e: &StatsError) -> bool {
    matches!(e, StatsError::Partition(_) | StatsError::EmptyDomain)
}

fn skippable_glm(e: &GlmError) -> bool {
    matches!(
        e,
        GlmError::Partition(PartitionError::Degenerate { .. } | PartitionError::TooFewWords { .. })
            | GlmError::SingleClass
            | GlmError::TooFewRows { .. }
            | GlmError::Empty
    )
}

fn run_into(config: &RunConfig, dir: &Path) -> Result<ReportBundle, PipelineError> {
    let mut w = Writer {
        dir,
        outputs: Vec::new(),
    };
    let mut skipped = Vec::new();

    // corpus -> TF
    let vocabulary = load_vocabulary(config)?;
    let tf = corpus::term_frequency::<f64>(&vocabulary).map_err(at(Stage::Corpus))?;
    let f = w.file("tf.csv", Stage::Corpus)?;
    corpus::write_vocabulary_csv(f, &vocabulary).map_err(at(Stage::Corpus))?;

    // embeddings -> SND
    let snd_config = SndConfig {
        n_pairs: config.n_pairs,
        seed: config.seed,
        exhaustive: config.exhaustive_pairs,
        sigma: config.sigma,
    };
    let mut tables: Vec<EmbeddingTable<f64>> = Vec::new();
    for path in &config.embeddings {
        let table = embeddings::load_embedding_table::<f64>(&config.resolve(path), config.expected_dimension)
            .map_err(at(Stage::Snd))?;
        tables.push(table);
    }
    let labels: BTreeSet<&str> = tables.iter().map(|t| t.source_label()).collect();
    if labels.len() != tables.len() {
        return Err(PipelineError {
            stage: Stage::Snd,
            source: "embedding sources must have distinct labels".into(),
        });
    }
    let mut snd_reports = Vec::new();
    for table in &tables {
        let report = snd::compute_all_snd(vocabulary.words(), table, &snd_config).map_err(at(Stage::Snd))?;
        let label = file_label(table.source_label());
        let name = format!("snd.{label}.csv");
        let f = w.file(&name, Stage::Snd)?;
        snd::write_snd_csv(f, &report).map_err(at(Stage::Snd))?;
        w.json(&format!("snd.{label}.meta.json"), Stage::Snd, &report.metadata())?;
        snd_reports.push(report);
    }

    // fixations -> gaze metrics
    let events = gaze::ingest_fixations(&config.resolve(&config.fixations)).map_err(at(Stage::Gaze))?;
    let gaze_records = gaze::compute_word_gaze(&events, config.rpd_aggregate);
    let mut f = w.file("gaze.csv", Stage::Gaze)?;
    gaze::write_gaze_csv(&mut f, &gaze_records).map_err(at(Stage::Gaze))?;
    flush(f)?;

    // model-free
    let mf_config = config.model_free_config();
    let mut models = Vec::new();
    for (table, report) in tables.iter().zip(snd_reports) {
        let model = table.source_label().to_owned();
        let effective = report.effective();
        let (model_free, assignments, domain_size) =
            match stats::run_model_free(&gaze_records, &effective, &tf, &mf_config) {
                Ok(r) => {
                    skipped.extend(r.notes.iter().map(|n| format!("{model}: {n}")));
                    (r.results, r.assignments, r.domain_size)
                }
                Err(e) if skippable_stats(&e) => {
                    skipped.push(format!("{model}: model-free analysis skipped: {e}"));
                    (Vec::new(), Vec::new(), 0)
                }
                Err(e) => return Err(at(Stage::ModelFree)(e)),
            };
        let label = file_label(&model);
        for a in &assignments {
            let scheme = a.scheme.to_string();
            w.json(&format!("groups.{label}.{scheme}.json"), Stage::ModelFree, a)?;
        }
        models.push(ModelSection {
            model,
            snd: report,
            model_free,
            assignments,
            domain_size,
        });
    }

    // model-based
    let mut model_based = Vec::new();
    for section in &models {
        let effective = section.snd.effective();
        for metric in Metric::ALL {
            for &split in &config.splits {
                match glm::run_model_based(
                    &effective,
                    &tf,
                    &gaze_records,
                    metric,
                    split,
                    &section.model,
                    &config.model_based,
                ) {
                    Ok(r) => {
                        if r.skipped_folds > 0 {
                            skipped.push(format!(
                                "{} {metric} {split}: {} single-class LOO folds skipped",
                                section.model, r.skipped_folds
                            ));
                        }
                        model_based.push(r);
                    }
                    Err(e) if skippable_glm(&e) => {
                        skipped.push(format!("{} {metric} {split}: model-based task skipped: {e}", section.model));
                    }
                    Err(e) => return Err(at(Stage::ModelBased)(e)),
                }
            }
        }
    }

    let bundle = ReportBundle {
        seed: config.seed,
        vocabulary,
        tf,
        gaze: gaze_records,
        models,
        model_based,
        skipped,
    };

    // tables, annotations, manifest
    let mut formats = config.formats.clone();
    formats.sort();
    formats.dedup();
    for format in formats {
        for name in emit_tables(&bundle, format, dir).map_err(at(Stage::Output))? {
            let stage = if name.starts_with("model_based") {
                Stage::ModelBased
            } else if name.starts_with("model_free") {
                Stage::ModelFree
            } else {
                Stage::Output
            };
            w.outputs.push(OutputRecord {
                file: name,
                stage: stage.to_string(),
            });
        }
    }
    for section in &bundle.models {
        let rows = annotation_rows(section, &bundle.tf, &bundle.gaze);
        let f = w.file(&format!("annotations.{}.csv", file_label(&section.model)), Stage::Output)?;
        write_annotations_csv(f, &rows).map_err(at(Stage::Output))?;
    }

    let manifest = manifest(config, &bundle, &tables, &events, w.outputs.clone());
    w.json("manifest.json", Stage::Output, &manifest)?;
    Ok(bundle)
}

fn manifest(
    config: &RunConfig,
    bundle: &ReportBundle,
    tables: &[EmbeddingTable<f64>],
    events: &[gaze::FixationEvent<f64>],
    mut outputs: Vec<OutputRecord>,
) -> Manifest {
    let participants: BTreeSet<&str> = events.iter().map(|e| e.participant.as_str()).collect();
    let trials: BTreeSet<(&str, &str)> = events
        .iter()
        .map(|e| (e.participant.as_str(), e.trial.as_str()))
        .collect();
    let models = bundle
        .models
        .iter()
        .zip(tables)
        .map(|(m, t)| ModelSummary {
            model: m.model.clone(),
            dimension: t.dimension(),
            snd: m.snd.metadata(),
            analysis_domain: m.domain_size,
            group_sizes: m
                .assignments
                .iter()
                .map(|a| (a.scheme.to_string(), [a.group1.len(), a.group2.len()]))
                .collect::<BTreeMap<_, _>>(),
            model_free_rows: m.model_free.len(),
            model_based_rows: bundle.model_based.iter().filter(|r| r.model == m.model).count(),
        })
        .collect();
    outputs.push(OutputRecord {
        file: "manifest.json".into(),
        stage: Stage::Output.to_string(),
    });
    outputs.sort_by(|a, b| a.file.cmp(&b.file));
    Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed: config.seed,
        config: config.clone(),
        inputs: InputSummary {
            vocabulary_words: bundle.vocabulary.len(),
            total_tokens: bundle.vocabulary.total_tokens(),
            fixation_events: events.len(),
            participants: participants.len(),
            trials: trials.len(),
            gaze_words: bundle.gaze.len(),
        },
        models,
        skipped: bundle.skipped.clone(),
        outputs,
    }
}

/// The directory a finished run wrote to.
pub fn output_dir(config: &RunConfig) -> PathBuf {
    config.resolve(&config.out_dir)
}

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use snd_gaze_core::corpus::{self, FilterConfig, Language};
use snd_gaze_core::embeddings::{self, EmbeddingTable};
use snd_gaze_core::gaze::{self, Metric, RpdAggregate};
use snd_gaze_core::glm::{self, ModelBasedConfig, Predictors, TfTransform};
use snd_gaze_core::partition::SplitKind;
use snd_gaze_core::report::{run_pipeline, RunConfig};
use snd_gaze_core::snd::{self, SigmaConvention, SndConfig, DEFAULT_PAIRS};
use snd_gaze_core::stats::{self, ModelFreeConfig, WinsorTails, DEFAULT_PERMUTATIONS};
use snd_gaze_core::synth::{self, SynthSpec};
use snd_gaze_core::Word;

#[derive(Parser)]
#[command(name = "snd-gaze", version, about = "Semantic neighborhood density and eye-gaze analysis for source code")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tokenize a source tree and write `word,count,tf`.
    Tokenize {
        #[arg(long = "lang")]
        language: Language,
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        include_operators: bool,
        #[arg(long)]
        include_punctuation: bool,
    },
    /// Validate an embedding table and report vocabulary coverage.
    EmbedCheck {
        #[arg(long)]
        table: PathBuf,
        #[arg(long)]
        dim: Option<usize>,
        /// Vocabulary CSV to measure coverage against.
        #[arg(long)]
        vocab: Option<PathBuf>,
    },
    /// Compute ARC SND for every vocabulary word.
    Snd {
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long)]
        table: PathBuf,
        #[arg(long, default_value_t = DEFAULT_PAIRS)]
        pairs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        exhaustive: bool,
        /// Use the n - 1 standard deviation for the threshold.
        #[arg(long)]
        sample_sigma: bool,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Word-level gaze metrics from a fixation log.
    Gaze {
        #[arg(long)]
        fixations: PathBuf,
        #[arg(long, default_value = "mean")]
        rpd_aggregate: RpdAggregate,
        #[arg(long)]
        out: PathBuf,
    },
    Analyze {
        #[command(subcommand)]
        kind: Analyze,
    },
    /// Write a synthetic dataset with a planted effect.
    Simulate {
        /// JSON spec; fields left out take their defaults.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Run every stage from a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Args)]
struct Inputs {
    #[arg(long)]
    gaze: PathBuf,
    #[arg(long)]
    snd: PathBuf,
    /// Vocabulary CSV with a `tf` column.
    #[arg(long)]
    tf: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Analyze {
    /// Permutation tests, Hedges' g and BH-FDR for the SND, TF and joint groups.
    ModelFree {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, default_value_t = DEFAULT_PERMUTATIONS)]
        perms: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Enumerate every assignment instead of sampling.
        #[arg(long)]
        exhaustive: bool,
        /// Clamp only the upper tail.
        #[arg(long)]
        upper_only: bool,
        #[arg(long)]
        g_on_raw: bool,
        #[arg(long)]
        two_sided: bool,
    },
    /// LOO logistic regression predicting high/low gaze groups.
    ModelBased {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, default_value = "median")]
        split: SplitKind,
        /// Model label for the output; defaults to the SND file stem.
        #[arg(long)]
        model: Option<String>,
        /// Use raw TF instead of log10 TF.
        #[arg(long)]
        tf_raw: bool,
        /// Predict from the gaze value itself.
        #[arg(long)]
        literal: bool,
        /// Form labels by splitting on SND instead of the gaze metric.
        #[arg(long)]
        label_by_snd: bool,
    },
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn read_tf(path: &Path) -> Result<BTreeMap<Word, f64>> {
    Ok(corpus::read_vocabulary_csv(path)?
        .into_iter()
        .map(|r| (r.word, r.tf))
        .collect())
}

fn read_effective_snd(path: &Path) -> Result<BTreeMap<Word, f64>> {
    Ok(snd::read_snd_csv(path)?
        .into_iter()
        .map(|(w, s)| (w, s.effective_value))
        .collect())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Tokenize {
            language,
            src,
            out,
            include_operators,
            include_punctuation,
        } => {
            let filter = FilterConfig {
                operators: include_operators,
                punctuation: include_punctuation,
                ..FilterConfig::default()
            };
            let tokens = corpus::tokenize_dir(&src, language)?;
            let vocab = corpus::build_vocabulary(&tokens, language, &filter)?;
            let mut f = create(&out)?;
            corpus::write_vocabulary_csv(&mut f, &vocab)?;
            f.flush()?;
            println!("{} words, {} tokens", vocab.len(), vocab.total_tokens());
        }
        Command::EmbedCheck { table, dim, vocab } => {
            let t: EmbeddingTable<f64> = embeddings::load_embedding_table(&table, dim)?;
            println!("{}: {} words, dimension {}", t.source_label(), t.len(), t.dimension());
            if let Some(vocab) = vocab {
                let rows = corpus::read_vocabulary_csv(&vocab)?;
                let c = t.coverage(rows.iter().map(|r| &r.word));
                println!(
                    "coverage: {}/{} ({:.1}%), {} missing",
                    c.covered,
                    c.vocabulary_words,
                    100.0 * c.fraction(),
                    c.missing.len()
                );
            }
        }
        Command::Snd {
            vocab,
            table,
            pairs,
            seed,
            exhaustive,
            sample_sigma,
            dim,
            out,
        } => {
            let rows = corpus::read_vocabulary_csv(&vocab)?;
            let t: EmbeddingTable<f64> = embeddings::load_embedding_table(&table, dim)?;
            let config = SndConfig {
                n_pairs: pairs,
                seed,
                exhaustive,
                sigma: if sample_sigma {
                    SigmaConvention::Sample
                } else {
                    SigmaConvention::Population
                },
            };
            let report = snd::compute_all_snd(rows.iter().map(|r| &r.word), &t, &config)?;
            let mut f = create(&out)?;
            snd::write_snd_csv(&mut f, &report)?;
            f.flush()?;
            let meta = report.metadata();
            let mut m = create(&snd::metadata_path(&out))?;
            serde_json::to_writer_pretty(&mut m, &meta)?;
            m.write_all(b"\n")?;
            m.flush()?;
            println!(
                "tau = {:.6} (mu {:.6}, sigma {:.6}, {} pairs); {}/{} words covered",
                meta.tau, meta.mu_d, meta.sigma_d, meta.n_pairs, meta.coverage.covered, meta.coverage.vocabulary_words
            );
        }
        Command::Gaze {
            fixations,
            rpd_aggregate,
            out,
        } => {
            let events = gaze::ingest_fixations(&fixations)?;
            let records = gaze::compute_word_gaze(&events, rpd_aggregate);
            let mut f = create(&out)?;
            gaze::write_gaze_csv(&mut f, &records)?;
            f.flush()?;
            println!("{} events, {} words", events.len(), records.len());
        }
        Command::Analyze { kind } => analyze(kind)?,
        Command::Simulate { spec, out_dir } => {
            let spec: SynthSpec = match spec {
                Some(p) => {
                    let text = std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
                    serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
                }
                None => SynthSpec::default(),
            };
            let data = synth::write_synth(&spec, &out_dir)?;
            println!(
                "{} words ({} dense, {} planted), {} fixations written to {}",
                data.vocabulary.len(),
                data.dense.len(),
                data.planted.len(),
                data.fixations.len(),
                out_dir.display()
            );
        }
        Command::Run { config, seed } => {
            let mut c = RunConfig::load(&config).map_err(|e| anyhow::anyhow!("config stage failed: {e}"))?;
            if let Some(seed) = seed {
                c.seed = seed;
            }
            let bundle = run_pipeline(&c)?;
            for note in &bundle.skipped {
                log::warn!("{note}");
            }
            println!(
                "{} models, {} model-free rows, {} model-based rows written to {}",
                bundle.models.len(),
                bundle.models.iter().map(|m| m.model_free.len()).sum::<usize>(),
                bundle.model_based.len(),
                c.resolve(&c.out_dir).display()
            );
        }
    }
    Ok(())
}

fn analyze(kind: Analyze) -> Result<()> {
    match kind {
        Analyze::ModelFree {
            inputs,
            perms,
            seed,
            exhaustive,
            upper_only,
            g_on_raw,
            two_sided,
        } => {
            let gaze = gaze::read_gaze_csv(&inputs.gaze)?;
            let snd = read_effective_snd(&inputs.snd)?;
            let tf = read_tf(&inputs.tf)?;
            let config = ModelFreeConfig {
                n_perm: perms,
                seed,
                exhaustive,
                tails: if upper_only { WinsorTails::Upper } else { WinsorTails::Both },
                g_on_raw,
                two_sided,
                ..ModelFreeConfig::default()
            };
            let report = stats::run_model_free(&gaze, &snd, &tf, &config)?;
            for note in &report.notes {
                log::warn!("{note}");
            }
            let mut f = create(&inputs.out)?;
            stats::write_comparisons_csv(&mut f, &report.results, true)?;
            f.flush()?;
            println!("{} words in the analysis domain, {} rows", report.domain_size, report.results.len());
        }
        Analyze::ModelBased {
            inputs,
            split,
            model,
            tf_raw,
            literal,
            label_by_snd,
        } => {
            let gaze = gaze::read_gaze_csv(&inputs.gaze)?;
            let snd = read_effective_snd(&inputs.snd)?;
            let tf = read_tf(&inputs.tf)?;
            let model = match model {
                Some(m) => m,
                None => inputs
                    .snd
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "model".into()),
            };
            let config = ModelBasedConfig {
                tf_transform: if tf_raw { TfTransform::Raw } else { TfTransform::Log10 },
                predictors: if literal { Predictors::GazeValue } else { Predictors::SndTf },
                label_on_snd: label_by_snd,
                ..ModelBasedConfig::default()
            };
            let mut results = Vec::new();
            for metric in Metric::ALL {
                match glm::run_model_based(&snd, &tf, &gaze, metric, split, &model, &config) {
                    Ok(r) => results.push(r),
                    Err(e @ (glm::GlmError::SingleClass | glm::GlmError::Partition(_))) => {
                        log::warn!("{metric}: skipped: {e}");
                    }
                    Err(e) => return Err(e).with_context(|| format!("{metric} task")),
                }
            }
            if results.is_empty() {
                bail!("no model-based task could be run");
            }
            let mut f = create(&inputs.out)?;
            glm::write_model_based_csv(&mut f, &results)?;
            f.flush()?;
            println!("{} tasks written", results.len());
        }
    }
    Ok(())
}

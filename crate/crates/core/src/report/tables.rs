use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ModelSection, ReportBundle, TableFormat};
use crate::gaze::{Metric, WordGazeRecord};
use crate::glm::{write_model_based_csv, ModelBasedResult};
use crate::partition::Scheme;
use crate::stats::{write_comparisons_csv, ComparisonResult};
use crate::Word;

const SIGNIFICANCE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFreeTable {
    pub model: String,
    pub rows: Vec<ComparisonResult<f64>>,
}

/// The published result tables of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tables {
    pub seed: u64,
    pub model_free: Vec<ModelFreeTable>,
    pub model_based: Vec<ModelBasedResult>,
}

/// Keeps file names portable whatever the embedding label is.
pub(crate) fn file_label(model: &str) -> String {
    let s: String = model
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    if s.is_empty() {
        "model".into()
    } else {
        s
    }
}

/// Writes the tables of `bundle` in one format into `dir`; returns the file
/// names written.
///
/// CSV gives one `model_free.<model>.csv` per embedding source plus a single
/// `model_based.csv`; JSON gives `tables.json`; markdown gives `tables.md`.
pub fn emit_tables(bundle: &ReportBundle, format: TableFormat, dir: &Path) -> io::Result<Vec<String>> {
    let tables = bundle.tables();
    let mut written = Vec::new();
    let mut put = |name: String, bytes: Vec<u8>| -> io::Result<()> {
        std::fs::write(dir.join(&name), bytes)?;
        written.push(name);
        Ok(())
    };
    match format {
        TableFormat::Csv => {
            for t in &tables.model_free {
                let mut buf = Vec::new();
                write_comparisons_csv(&mut buf, &t.rows, false)?;
                put(format!("model_free.{}.csv", file_label(&t.model)), buf)?;
            }
            let mut buf = Vec::new();
            write_model_based_csv(&mut buf, &tables.model_based)?;
            put("model_based.csv".into(), buf)?;
        }
        TableFormat::Json => {
            let mut buf = serde_json::to_vec_pretty(&tables)?;
            buf.push(b'\n');
            put("tables.json".into(), buf)?;
        }
        TableFormat::Markdown => put("tables.md".into(), render_markdown(&tables).into_bytes())?,
    }
    Ok(written)
}

pub fn read_tables_json(path: &Path) -> io::Result<Tables> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(io::Error::from)
}

fn bold_if(value: f64, significant: bool) -> String {
    if significant {
        format!("**{value:.3}**")
    } else {
        format!("{value:.3}")
    }
}

/// Markdown tables at 3 decimals. Model-free p and p (fdr) cells are bold
/// when p (fdr) < 0.05.
pub fn render_markdown(tables: &Tables) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# Results (seed {})\n", tables.seed);
    s.push_str("## Model-free comparisons\n");
    for t in &tables.model_free {
        let _ = writeln!(s, "\n### {}\n", t.model);
        s.push_str("| metric | comparison | n1 | n2 | mu1 | mu2 | hedges_g | p | p_fdr |\n");
        s.push_str("|---|---|---:|---:|---:|---:|---:|---:|---:|\n");
        for r in &t.rows {
            let sig = r.p_fdr < SIGNIFICANCE;
            let _ = writeln!(
                s,
                "| {} | {} | {} | {} | {:.3} | {:.3} | {:.3} | {} | {} |",
                r.metric,
                r.comparison,
                r.n1,
                r.n2,
                r.mu1,
                r.mu2,
                r.hedges_g,
                bold_if(r.p, sig),
                bold_if(r.p_fdr, sig)
            );
        }
    }
    s.push_str("\n## Model-based prediction\n\n");
    s.push_str("| category | model | split | accuracy | precision | recall | f1 | roc_auc | tn | fp | fn | tp |\n");
    s.push_str("|---|---|---|---:|---:|---:|---:|---:|---:|---:|---:|---:|\n");
    for r in &tables.model_based {
        let e = &r.report;
        let _ = writeln!(
            s,
            "| {} | {} | {} | {:.3} | {:.3} | {:.3} | {:.3} | {:.3} | {} | {} | {} | {} |",
            r.category, r.model, r.split, e.accuracy, e.precision, e.recall, e.f1, e.roc_auc, e.tn, e.fp, e.fn_, e.tp
        );
    }
    s
}

/// One line of the per-word annotation export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRow {
    pub word: Word,
    pub arc: Option<f64>,
    pub tf: Option<f64>,
    /// `|`-separated group names (HSND or LSND, HF or LF, HSND_LF).
    pub group_flags: String,
    pub mean_ffd: Option<f64>,
}

pub fn annotation_rows(
    section: &ModelSection,
    tf: &BTreeMap<Word, f64>,
    gaze: &BTreeMap<Word, WordGazeRecord<f64>>,
) -> Vec<AnnotationRow> {
    let find = |scheme: Scheme| section.assignments.iter().find(|a| a.scheme == scheme);
    let snd = find(Scheme::SndMedian);
    let tfs = find(Scheme::TfMedian);
    let joint = find(Scheme::JointHsndLf);
    section
        .snd
        .scores
        .values()
        .map(|score| {
            let w = &score.word;
            let mut flags = Vec::new();
            if let Some(a) = snd {
                if a.group1.contains(w) {
                    flags.push("HSND");
                } else if a.group2.contains(w) {
                    flags.push("LSND");
                }
            }
            if let Some(a) = tfs {
                if a.group1.contains(w) {
                    flags.push("HF");
                } else if a.group2.contains(w) {
                    flags.push("LF");
                }
            }
            if joint.is_some_and(|a| a.group1.contains(w)) {
                flags.push("HSND_LF");
            }
            AnnotationRow {
                word: w.clone(),
                arc: score.arc,
                tf: tf.get(w).copied(),
                group_flags: flags.join("|"),
                mean_ffd: gaze.get(w).and_then(|r| r.get(Metric::Ffd)),
            }
        })
        .collect()
}

/// Writes `word,arc,tf,group_flags,mean_ffd`; absent values are empty.
pub fn write_annotations_csv<W: Write>(out: W, rows: &[AnnotationRow]) -> io::Result<()> {
    let mut wtr = crate::csv_writer(out);
    wtr.write_record(["word", "arc", "tf", "group_flags", "mean_ffd"])?;
    for r in rows {
        wtr.write_record([
            r.word.surface(),
            &crate::fmt_opt(r.arc),
            &crate::fmt_opt(r.tf),
            &r.group_flags,
            &crate::fmt_opt(r.mean_ffd),
        ])?;
    }
    wtr.flush()
}

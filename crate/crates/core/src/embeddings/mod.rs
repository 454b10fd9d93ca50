//! Word-embedding tables and the vector operations SND is built from.
//!
//! Tables are exchanged as JSON Lines: an optional header record
//! `{"dimension": d, "source": "<label>"}` followed by one
//! `{"word": "<surface>", "vector": [..]}` record per word.

mod vector;

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;
use crate::Word;

pub use vector::{cosine_similarity, euclidean_distance, VectorError};
pub(crate) use vector::{cosine_with_norms, distance_unchecked, norm};

/// Expected dimensionality of the 350M GPT-2 exports.
pub const GPT2_DIMENSION: usize = 1024;
/// Expected dimensionality of the 7B CodeLLaMA exports.
pub const CODELLAMA_DIMENSION: usize = 4096;

#[derive(Debug, thiserror::Error)]
pub enum EmbeddingError {
    #[error("embedding file not found: {0}")]
    MissingFile(PathBuf),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: vector for {word:?} has {found} components, expected {expected}")]
    DimensionMismatch {
        line: usize,
        word: String,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: vector for {word:?} has a non-finite component")]
    NonFinite { line: usize, word: String },
    #[error("line {line}: duplicate word {word:?}")]
    DuplicateWord { line: usize, word: String },
    #[error("table has dimension {found}, expected {expected}")]
    UnexpectedDimension { expected: usize, found: usize },
    #[error("embedding vectors must have at least one component")]
    ZeroDimension,
    #[error("embedding table has no rows")]
    EmptyTable,
}

/// Immutable word -> vector map with a fixed dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable<T> {
    dimension: usize,
    source_label: String,
    words: Vec<Word>,
    index: HashMap<Word, usize>,
    // row-major, words.len() * dimension
    data: Vec<T>,
}

impl<T: Scalar> EmbeddingTable<T> {
    pub fn new(dimension: usize, source_label: impl Into<String>) -> Result<Self, EmbeddingError> {
        if dimension == 0 {
            return Err(EmbeddingError::ZeroDimension);
        }
        Ok(EmbeddingTable {
            dimension,
            source_label: source_label.into(),
            words: Vec::new(),
            index: HashMap::new(),
            data: Vec::new(),
        })
    }

    /// Builds a table from rows; the first row fixes the dimension.
    pub fn from_rows<I, V>(source_label: impl Into<String>, rows: I) -> Result<Self, EmbeddingError>
    where
        I: IntoIterator<Item = (Word, V)>,
        V: AsRef<[T]>,
    {
        let mut rows = rows.into_iter().peekable();
        let dimension = rows
            .peek()
            .map(|(_, v)| v.as_ref().len())
            .ok_or(EmbeddingError::EmptyTable)?;
        let mut table = Self::new(dimension, source_label)?;
        for (i, (word, v)) in rows.enumerate() {
            table.insert_at(i + 1, word, v.as_ref())?;
        }
        Ok(table)
    }

    fn insert_at(&mut self, line: usize, word: Word, vector: &[T]) -> Result<(), EmbeddingError> {
        if vector.len() != self.dimension {
            return Err(EmbeddingError::DimensionMismatch {
                line,
                word: word.into_string(),
                expected: self.dimension,
                found: vector.len(),
            });
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(EmbeddingError::NonFinite {
                line,
                word: word.into_string(),
            });
        }
        if self.index.contains_key(&word) {
            return Err(EmbeddingError::DuplicateWord {
                line,
                word: word.into_string(),
            });
        }
        self.index.insert(word.clone(), self.words.len());
        self.words.push(word);
        self.data.extend_from_slice(vector);
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn source_label(&self) -> &str {
        &self.source_label
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn get(&self, word: &str) -> Option<&[T]> {
        self.index.get(word).map(|&i| self.row(i))
    }

    pub(crate) fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.dimension..(i + 1) * self.dimension]
    }

    /// Words in insertion order.
    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Word, &[T])> {
        self.words.iter().enumerate().map(|(i, w)| (w, self.row(i)))
    }

    /// Returns a copy with every component multiplied by `factor`.
    pub fn scaled(&self, factor: T) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|x| *x *= factor);
        out
    }

    /// Converts the component type.
    pub fn cast<U: Scalar>(&self) -> EmbeddingTable<U> {
        EmbeddingTable {
            dimension: self.dimension,
            source_label: self.source_label.clone(),
            words: self.words.clone(),
            index: self.index.clone(),
            data: self.data.iter().map(|x| U::lit(x.to_f64_lossless())).collect(),
        }
    }

    pub fn coverage<'a>(&self, vocab: impl IntoIterator<Item = &'a Word>) -> Coverage {
        let mut total = 0;
        let mut missing = Vec::new();
        for w in vocab {
            total += 1;
            if !self.contains(w.surface()) {
                missing.push(w.clone());
            }
        }
        Coverage {
            vocabulary_words: total,
            covered: total - missing.len(),
            missing,
        }
    }
}

/// How much of a vocabulary an embedding table covers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coverage {
    pub vocabulary_words: usize,
    pub covered: usize,
    pub missing: Vec<Word>,
}

impl Coverage {
    pub fn fraction(&self) -> f64 {
        if self.vocabulary_words == 0 {
            0.0
        } else {
            self.covered as f64 / self.vocabulary_words as f64
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Record {
    Row {
        word: String,
        vector: Vec<f64>,
    },
    Header {
        dimension: usize,
        #[serde(default)]
        source: Option<String>,
    },
}

#[derive(Serialize)]
struct HeaderOut<'a> {
    dimension: usize,
    source: &'a str,
}

#[derive(Serialize)]
struct RowOut<'a> {
    word: &'a str,
    vector: Vec<f64>,
}

/// Loads a JSONL embedding table. When `expected_dim` is given the table's
/// dimension must equal it.
pub fn load_embedding_table<T: Scalar>(
    path: &Path,
    expected_dim: Option<usize>,
) -> Result<EmbeddingTable<T>, EmbeddingError> {
    let file = File::open(path).map_err(|source| {
        if source.kind() == io::ErrorKind::NotFound {
            EmbeddingError::MissingFile(path.to_path_buf())
        } else {
            EmbeddingError::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    })?;
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let table = read_embedding_table(BufReader::new(file), &label).map_err(|e| match e {
        EmbeddingError::Io { source, .. } => EmbeddingError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    })?;
    if let Some(expected) = expected_dim {
        if table.dimension != expected {
            return Err(EmbeddingError::UnexpectedDimension {
                expected,
                found: table.dimension,
            });
        }
    }
    Ok(table)
}

/// Reads JSONL records; `default_label` is used when no header names a source.
pub fn read_embedding_table<T: Scalar, R: BufRead>(
    reader: R,
    default_label: &str,
) -> Result<EmbeddingTable<T>, EmbeddingError> {
    let mut table: Option<EmbeddingTable<T>> = None;
    let mut header: Option<(usize, String)> = None;
    let mut seen_record = false;
    let mut buf: Vec<T> = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|source| EmbeddingError::Io {
            path: PathBuf::new(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record = serde_json::from_str(&line).map_err(|e| EmbeddingError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        match record {
            Record::Header { dimension, source } => {
                if seen_record {
                    return Err(EmbeddingError::Parse {
                        line: line_no,
                        message: "header record must come first".into(),
                    });
                }
                if dimension == 0 {
                    return Err(EmbeddingError::ZeroDimension);
                }
                header = Some((dimension, source.unwrap_or_else(|| default_label.to_owned())));
            }
            Record::Row { word, vector } => {
                let table = match table.as_mut() {
                    Some(t) => t,
                    None => {
                        let (dim, label) = header
                            .clone()
                            .unwrap_or_else(|| (vector.len(), default_label.to_owned()));
                        table.insert(EmbeddingTable::new(dim, label)?)
                    }
                };
                buf.clear();
                buf.extend(vector.iter().map(|&x| T::lit(x)));
                table.insert_at(line_no, Word::new(word), &buf)?;
            }
        }
        seen_record = true;
    }
    table.ok_or(EmbeddingError::EmptyTable)
}

/// Writes the table as JSONL, header first. Components are written at full
/// `f64` precision so that reading back is lossless.
pub fn write_embedding_table<T: Scalar, W: Write>(
    mut out: W,
    table: &EmbeddingTable<T>,
) -> io::Result<()> {
    let header = HeaderOut {
        dimension: table.dimension,
        source: &table.source_label,
    };
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n")?;
    for (word, v) in table.iter() {
        let row = RowOut {
            word: word.surface(),
            vector: v.iter().map(|x| x.to_f64_lossless()).collect(),
        };
        serde_json::to_writer(&mut out, &row)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

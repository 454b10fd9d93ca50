//! Source tokenization, word normalization, vocabularies and corpus-level
//! term frequency.

mod lexer;
mod split;

use std::collections::BTreeMap;
use std::fmt;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;
use crate::Word;

pub use lexer::{tokenize, tokenize_named, LexErrorKind, Token, TokenKind};
pub use split::{lowercase, split_identifier};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    C,
    Java,
}

impl Language {
    pub fn extensions(self) -> &'static [&'static str] {
        match self {
            Language::C => &["c", "h"],
            Language::Java => &["java"],
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Language::C => "c",
            Language::Java => "java",
        })
    }
}

impl FromStr for Language {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "c" => Ok(Language::C),
            "java" => Ok(Language::Java),
            _ => Err(CorpusError::UnknownLanguage(s.to_owned())),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{file}:{line}:{column}: {kind}")]
    Lex {
        file: String,
        line: usize,
        column: usize,
        kind: LexErrorKind,
    },
    #[error("empty corpus: no words were counted")]
    EmptyCorpus,
    #[error("empty vocabulary")]
    EmptyVocabulary,
    #[error("unknown language {0:?} (expected c or java)")]
    UnknownLanguage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path} is not valid UTF-8")]
    NotUtf8 { path: PathBuf },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: line {line}: {message}")]
    Format {
        path: PathBuf,
        line: u64,
        message: String,
    },
}

/// Which token classes enter the vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    pub identifiers: bool,
    pub keywords: bool,
    pub literals: bool,
    pub operators: bool,
    pub punctuation: bool,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            identifiers: true,
            keywords: true,
            literals: true,
            operators: false,
            punctuation: false,
        }
    }
}

impl FilterConfig {
    pub fn admits(&self, kind: TokenKind) -> bool {
        match kind {
            TokenKind::Identifier => self.identifiers,
            TokenKind::Keyword => self.keywords,
            TokenKind::Literal => self.literals,
            TokenKind::Operator => self.operators,
            TokenKind::Punctuation => self.punctuation,
        }
    }
}

/// Per-dataset word counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    language: Language,
    entries: BTreeMap<Word, u64>,
    total_tokens: u64,
}

impl Vocabulary {
    /// Builds a vocabulary from explicit counts. Zero counts are rejected.
    pub fn from_counts(
        language: Language,
        counts: impl IntoIterator<Item = (Word, u64)>,
    ) -> Result<Self, CorpusError> {
        let mut entries = BTreeMap::new();
        for (word, count) in counts {
            if count == 0 || word.surface().is_empty() {
                continue;
            }
            *entries.entry(word).or_insert(0) += count;
        }
        if entries.is_empty() {
            return Err(CorpusError::EmptyVocabulary);
        }
        let total_tokens = entries.values().sum();
        Ok(Vocabulary {
            language,
            entries,
            total_tokens,
        })
    }

    pub fn language(&self) -> Language {
        self.language
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn count(&self, word: &str) -> Option<u64> {
        self.entries.get(word).copied()
    }

    pub fn words(&self) -> impl Iterator<Item = &Word> {
        self.entries.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Word, u64)> {
        self.entries.iter().map(|(w, &c)| (w, c))
    }
}

/// Normalizes one token into the words it contributes.
///
/// C tokens are used as-is. Java identifiers are split and lowercased; other
/// Java tokens are lowercased and broken at underscores.
pub fn normalize_token(token: &Token, language: Language) -> Vec<String> {
    match language {
        Language::C => vec![token.text.clone()],
        Language::Java => match token.kind {
            TokenKind::Identifier => split_identifier(&token.text),
            _ => token
                .text
                .split('_')
                .filter(|s| !s.is_empty())
                .map(lowercase)
                .collect(),
        },
    }
}

pub fn build_vocabulary(
    tokens: &[Token],
    language: Language,
    filter: &FilterConfig,
) -> Result<Vocabulary, CorpusError> {
    if tokens.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    let mut entries: BTreeMap<Word, u64> = BTreeMap::new();
    for token in tokens.iter().filter(|t| filter.admits(t.kind)) {
        for surface in normalize_token(token, language) {
            *entries.entry(Word::new(surface)).or_insert(0) += 1;
        }
    }
    if entries.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    let total_tokens = entries.values().sum();
    Ok(Vocabulary {
        language,
        entries,
        total_tokens,
    })
}

/// Corpus-level term frequency `f(w) / sum f`.
pub fn term_frequency<T: Scalar>(vocab: &Vocabulary) -> Result<BTreeMap<Word, T>, CorpusError> {
    if vocab.is_empty() || vocab.total_tokens == 0 {
        return Err(CorpusError::EmptyVocabulary);
    }
    let total = vocab.total_tokens as f64;
    Ok(vocab
        .entries
        .iter()
        .map(|(w, &c)| (w.clone(), T::lit(c as f64 / total)))
        .collect())
}

/// Collects the source files for `language` under `root`, sorted by path.
pub fn source_files(root: &Path, language: Language) -> Result<Vec<PathBuf>, CorpusError> {
    let exts = language.extensions();
    let mut files = Vec::new();
    for entry in walkdir::WalkDir::new(root) {
        let entry = entry.map_err(|e| CorpusError::Io {
            path: e.path().unwrap_or(root).to_path_buf(),
            source: e
                .into_io_error()
                .unwrap_or_else(|| io::Error::other("directory walk failed")),
        })?;
        let path = entry.path();
        if entry.file_type().is_file()
            && path
                .extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| exts.contains(&e))
        {
            files.push(path.to_path_buf());
        }
    }
    files.sort();
    Ok(files)
}

/// Tokenizes every source file under `root`. Files are lexed in parallel and
/// merged in path order, so the result does not depend on thread count.
pub fn tokenize_dir(root: &Path, language: Language) -> Result<Vec<Token>, CorpusError> {
    let files = source_files(root, language)?;
    let per_file: Vec<Vec<Token>> = files
        .par_iter()
        .map(|path| {
            let bytes = std::fs::read(path).map_err(|source| CorpusError::Io {
                path: path.clone(),
                source,
            })?;
            let text = String::from_utf8(bytes)
                .map_err(|_| CorpusError::NotUtf8 { path: path.clone() })?;
            let name = path
                .strip_prefix(root)
                .unwrap_or(path)
                .to_string_lossy()
                .replace('\\', "/");
            tokenize_named(&text, language, &name)
        })
        .collect::<Result<_, _>>()?;
    Ok(per_file.into_iter().flatten().collect())
}

/// One row of a vocabulary CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VocabularyRow {
    pub word: Word,
    pub count: u64,
    pub tf: f64,
}

pub fn vocabulary_rows(vocab: &Vocabulary) -> Result<Vec<VocabularyRow>, CorpusError> {
    let tf = term_frequency::<f64>(vocab)?;
    Ok(vocab
        .iter()
        .map(|(w, c)| VocabularyRow {
            word: w.clone(),
            count: c,
            tf: tf[w],
        })
        .collect())
}

/// Writes `word,count,tf` with LF line endings.
pub fn write_vocabulary_csv<W: io::Write>(
    out: W,
    vocab: &Vocabulary,
) -> Result<(), CorpusError> {
    let rows = vocabulary_rows(vocab)?;
    let mut wtr = crate::csv_writer(out);
    let csv_err = |source| CorpusError::Csv {
        path: PathBuf::from("<output>"),
        source,
    };
    wtr.write_record(["word", "count", "tf"]).map_err(csv_err)?;
    for row in rows {
        wtr.write_record([
            row.word.surface(),
            &row.count.to_string(),
            &row.tf.to_string(),
        ])
        .map_err(csv_err)?;
    }
    wtr.flush().map_err(|source| CorpusError::Io {
        path: PathBuf::from("<output>"),
        source,
    })
}

pub fn read_vocabulary_csv(path: &Path) -> Result<Vec<VocabularyRow>, CorpusError> {
    let csv_err = |source| CorpusError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut rdr = csv::Reader::from_path(path).map_err(csv_err)?;
    let headers = rdr.headers().map_err(csv_err)?.clone();
    for col in ["word", "count", "tf"] {
        if !headers.iter().any(|h| h == col) {
            return Err(CorpusError::Format {
                path: path.to_path_buf(),
                line: 1,
                message: format!("missing column {col:?}"),
            });
        }
    }
    let mut rows = Vec::new();
    for record in rdr.deserialize::<VocabularyRow>() {
        let row = record.map_err(csv_err)?;
        rows.push(row);
    }
    Ok(rows)
}

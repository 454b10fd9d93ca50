use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::GazeError;
use crate::scalar::Scalar;
use crate::Word;

const COLUMNS: [&str; 6] = ["participant", "trial", "index", "word", "aoi_order", "duration_ms"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixationEvent<T> {
    pub participant: String,
    pub trial: String,
    /// Position within the trial, 0-based.
    pub index: usize,
    pub word: Word,
    /// Reading-order position of the fixated AOI within the trial, 0-based.
    pub aoi_order: usize,
    pub duration_ms: T,
}

/// Reads and validates a fixation CSV
/// (`participant,trial,index,word,aoi_order,duration_ms`).
pub fn ingest_fixations(path: &Path) -> Result<Vec<FixationEvent<f64>>, GazeError> {
    let file = std::fs::File::open(path).map_err(|source| GazeError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_fixations(file).map_err(|e| match e {
        GazeError::Csv { source, .. } => GazeError::Csv {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    })
}

pub fn read_fixations<R: Read>(reader: R) -> Result<Vec<FixationEvent<f64>>, GazeError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let csv_err = |source| GazeError::Csv {
        path: "<input>".into(),
        source,
    };
    let headers = rdr.headers().map_err(csv_err)?.clone();
    let mut col = [0usize; 6];
    for (slot, name) in col.iter_mut().zip(COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| GazeError::MissingColumn(name.to_owned()))?;
    }
    let mut events = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| record.get(col[i]).unwrap_or("");
        let parse_err = |what: &str, raw: &str| GazeError::Parse {
            line,
            message: format!("invalid {what} {raw:?}"),
        };
        let index: usize = field(2).parse().map_err(|_| parse_err("index", field(2)))?;
        let aoi_order: usize = field(4).parse().map_err(|_| parse_err("aoi_order", field(4)))?;
        let duration_ms: f64 = field(5)
            .parse()
            .map_err(|_| parse_err("duration_ms", field(5)))?;
        if !(duration_ms.is_finite() && duration_ms > 0.0) {
            return Err(GazeError::NonPositiveDuration {
                line,
                value: duration_ms,
            });
        }
        if field(3).is_empty() {
            return Err(parse_err("word", field(3)));
        }
        events.push(FixationEvent {
            participant: field(0).to_owned(),
            trial: field(1).to_owned(),
            index,
            word: Word::from(field(3)),
            aoi_order,
            duration_ms,
        });
    }
    prepare_events(events)
}

/// Orders events by (participant, trial, index) and checks the log
/// invariants: consecutive indices from 0, positive durations and one word
/// per AOI within a trial.
pub fn prepare_events<T: Scalar>(
    mut events: Vec<FixationEvent<T>>,
) -> Result<Vec<FixationEvent<T>>, GazeError> {
    events.sort_by(|a, b| {
        (&a.participant, &a.trial, a.index).cmp(&(&b.participant, &b.trial, b.index))
    });
    for e in &events {
        if !(e.duration_ms.is_finite() && e.duration_ms > T::zero()) {
            return Err(GazeError::NonPositiveDuration {
                line: 0,
                value: e.duration_ms.to_f64_lossless(),
            });
        }
    }
    for trial in trials(&events) {
        let mut aoi_words: HashMap<usize, &Word> = HashMap::new();
        for (expected, e) in trial.iter().enumerate() {
            if e.index != expected {
                return Err(GazeError::NonConsecutiveIndices {
                    participant: e.participant.clone(),
                    trial: e.trial.clone(),
                    expected,
                    found: e.index,
                });
            }
            let known = aoi_words.entry(e.aoi_order).or_insert(&e.word);
            if *known != &e.word {
                return Err(GazeError::AoiWordConflict {
                    participant: e.participant.clone(),
                    trial: e.trial.clone(),
                    aoi_order: e.aoi_order,
                    first: known.to_string(),
                    second: e.word.to_string(),
                });
            }
        }
    }
    Ok(events)
}

/// Contiguous (participant, trial) runs of an ordered event list.
pub(crate) fn trials<T>(events: &[FixationEvent<T>]) -> Vec<&[FixationEvent<T>]> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=events.len() {
        if i == events.len()
            || events[i].participant != events[start].participant
            || events[i].trial != events[start].trial
        {
            if i > start {
                out.push(&events[start..i]);
            }
            start = i;
        }
    }
    out
}

pub fn write_fixations_csv<T: Scalar, W: Write>(
    out: W,
    events: &[FixationEvent<T>],
) -> std::io::Result<()> {
    let mut wtr = crate::csv_writer(out);
    wtr.write_record(COLUMNS)?;
    for e in events {
        wtr.write_record([
            e.participant.as_str(),
            e.trial.as_str(),
            &e.index.to_string(),
            e.word.surface(),
            &e.aoi_order.to_string(),
            &e.duration_ms.to_f64_lossless().to_string(),
        ])?;
    }
    wtr.flush()
}

//! Sentence records with aspect spans and their dependency parses.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::CorpusError;

use super::conllu::{parse_conllu, DependencyGraph};

/// Sentiment polarity of an aspect. Class indices are fixed as
/// negative = 0, neutral = 1, positive = 2 everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Negative,
    Neutral,
    Positive,
}

pub const NUM_CLASSES: usize = 3;

impl Label {
    pub const ALL: [Label; NUM_CLASSES] = [Label::Negative, Label::Neutral, Label::Positive];

    pub fn index(self) -> usize {
        match self {
            Label::Negative => 0,
            Label::Neutral => 1,
            Label::Positive => 2,
        }
    }

    pub fn from_index(index: usize) -> Option<Label> {
        Label::ALL.get(index).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Negative => "negative",
            Label::Neutral => "neutral",
            Label::Positive => "positive",
        }
    }
}

/// One line of the examples file: a tokenized sentence with a 1-based aspect
/// span and its gold label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceRecord {
    pub tokens: Vec<String>,
    pub aspect_start: usize,
    pub aspect_len: usize,
    pub label: Label,
}

/// A validated sentence with its dependency parse attached. The parse always
/// has exactly one node per token.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub tokens: Vec<String>,
    /// 1-based index of the first aspect token.
    pub aspect_start: usize,
    pub aspect_len: usize,
    pub label: Label,
    pub parse: DependencyGraph,
}

impl Example {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// 0-based token positions covered by the aspect span.
    pub fn aspect_range(&self) -> std::ops::Range<usize> {
        (self.aspect_start - 1)..(self.aspect_start - 1 + self.aspect_len)
    }

    pub fn record(&self) -> SentenceRecord {
        SentenceRecord {
            tokens: self.tokens.clone(),
            aspect_start: self.aspect_start,
            aspect_len: self.aspect_len,
            label: self.label,
        }
    }
}

fn record_from_line(path: &str, line_no: usize, line: &str) -> Result<SentenceRecord, CorpusError> {
    let value: serde_json::Value =
        serde_json::from_str(line).map_err(|e| CorpusError::MalformedRecord {
            path: path.to_string(),
            line: line_no,
            detail: e.to_string(),
        })?;
    let malformed = |detail: &str| CorpusError::MalformedRecord {
        path: path.to_string(),
        line: line_no,
        detail: detail.to_string(),
    };

    let tokens = value
        .get("tokens")
        .and_then(|t| t.as_array())
        .ok_or_else(|| malformed("missing `tokens` array"))?
        .iter()
        .map(|t| t.as_str().map(str::to_string).ok_or_else(|| malformed("non-string token")))
        .collect::<Result<Vec<_>, _>>()?;
    if tokens.is_empty() {
        return Err(malformed("`tokens` must be nonempty"));
    }
    let aspect_start = value
        .get("aspect_start")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| malformed("missing or non-integer `aspect_start`"))? as usize;
    let aspect_len = value
        .get("aspect_len")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| malformed("missing or non-integer `aspect_len`"))? as usize;
    let label_str = value
        .get("label")
        .and_then(|v| v.as_str())
        .ok_or_else(|| malformed("missing `label` string"))?;
    let label = match label_str {
        "positive" => Label::Positive,
        "neutral" => Label::Neutral,
        "negative" => Label::Negative,
        other => {
            return Err(CorpusError::UnknownLabel {
                path: path.to_string(),
                line: line_no,
                label: other.to_string(),
            })
        }
    };
    if aspect_start < 1 || aspect_len < 1 || aspect_start + aspect_len - 1 > tokens.len() {
        return Err(CorpusError::SpanOutOfRange {
            path: path.to_string(),
            line: line_no,
            start: aspect_start,
            len: aspect_len,
            tokens: tokens.len(),
        });
    }
    Ok(SentenceRecord { tokens, aspect_start, aspect_len, label })
}

/// Read a JSON-lines examples file. Each nonempty line is one record.
pub fn load_records(path: &Path) -> Result<Vec<SentenceRecord>, CorpusError> {
    let display = path.display().to_string();
    let file = File::open(path).map_err(|e| CorpusError::Io { path: display.clone(), source: e })?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CorpusError::Io { path: display.clone(), source: e })?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(record_from_line(&display, i + 1, &line)?);
    }
    if records.is_empty() {
        return Err(CorpusError::EmptyFile { path: display });
    }
    Ok(records)
}

/// Load examples and their parses; block `i` of the parse file belongs to
/// record `i` of the examples file, and node counts must line up.
pub fn load_examples(examples_path: &Path, parses_path: &Path) -> Result<Vec<Example>, CorpusError> {
    let records = load_records(examples_path)?;
    let graphs = parse_conllu(parses_path)?;
    let display = parses_path.display().to_string();
    if records.len() != graphs.len() {
        return Err(CorpusError::ParseCount {
            path: display,
            examples: records.len(),
            blocks: graphs.len(),
        });
    }
    records
        .into_iter()
        .zip(graphs)
        .enumerate()
        .map(|(i, (r, g))| {
            if g.n != r.tokens.len() {
                return Err(CorpusError::ParseAlignment {
                    path: display.clone(),
                    index: i + 1,
                    tokens: r.tokens.len(),
                    nodes: g.n,
                });
            }
            Ok(Example {
                tokens: r.tokens,
                aspect_start: r.aspect_start,
                aspect_len: r.aspect_len,
                label: r.label,
                parse: g,
            })
        })
        .collect()
}

/// Examples per class, indexed by `Label::index`.
pub fn label_counts(records: &[SentenceRecord]) -> [usize; NUM_CLASSES] {
    let mut counts = [0; NUM_CLASSES];
    for r in records {
        counts[r.label.index()] += 1;
    }
    counts
}

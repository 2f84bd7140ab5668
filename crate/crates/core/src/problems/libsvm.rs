//! Parser for the plain-text sparse example format used by LIBSVM-style
//! tools: one example per line, `label index:value ...`, indices 1-based
//! and strictly increasing within a line, `#` starting a comment.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One labeled example with sparse 1-based feature indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub label: f64,
    /// `(index, value)` pairs, indices 1-based and strictly increasing.
    pub features: Vec<(usize, f64)>,
}

/// A parsed sparse dataset.
///
/// `num_features` is the largest feature index seen anywhere in the data,
/// so every example fits in a dense row of that width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseExamples {
    examples: Vec<Example>,
    num_features: usize,
}

impl SparseExamples {
    #[must_use]
    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    #[must_use]
    pub fn num_examples(&self) -> usize {
        self.examples.len()
    }

    #[must_use]
    pub fn num_features(&self) -> usize {
        self.num_features
    }

    /// Densify into a feature matrix (one row per example, zero-filled)
    /// and a label vector.
    #[must_use]
    pub fn to_dense(&self) -> (DMatrix<f64>, DVector<f64>) {
        let m = self.examples.len();
        let mut f = DMatrix::zeros(m, self.num_features);
        let mut labels = DVector::zeros(m);
        for (row, ex) in self.examples.iter().enumerate() {
            labels[row] = ex.label;
            for &(idx, val) in &ex.features {
                f[(row, idx - 1)] = val;
            }
        }
        (f, labels)
    }
}

/// Tokens of one line together with their 1-based starting columns.
fn tokens_with_columns(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s + 1, &line[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &line[s..]));
    }
    out
}

/// Parse sparse example text, keeping at most `max_rows` examples when
/// given. Malformed input reports the 1-based line and column of the
/// offending token.
pub fn parse_libsvm(text: &str, max_rows: Option<usize>) -> Result<SparseExamples> {
    let mut examples = Vec::new();
    let mut num_features = 0;
    for (line_idx, raw_line) in text.lines().enumerate() {
        if let Some(cap) = max_rows {
            if examples.len() >= cap {
                break;
            }
        }
        let line_no = line_idx + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        };
        let toks = tokens_with_columns(line);
        if toks.is_empty() {
            continue;
        }
        let (label_col, label_tok) = toks[0];
        let label: f64 = label_tok.parse().map_err(|_| Error::Parse {
            line: line_no,
            column: label_col,
            reason: format!("expected a numeric label, got {label_tok:?}"),
        })?;
        let mut features = Vec::with_capacity(toks.len() - 1);
        let mut prev_idx = 0usize;
        for &(col, tok) in &toks[1..] {
            let (idx_str, val_str) = tok.split_once(':').ok_or_else(|| Error::Parse {
                line: line_no,
                column: col,
                reason: format!("expected index:value, got {tok:?}"),
            })?;
            let idx: usize = idx_str.parse().map_err(|_| Error::Parse {
                line: line_no,
                column: col,
                reason: format!("feature index is not an integer: {idx_str:?}"),
            })?;
            if idx == 0 {
                return Err(Error::Parse {
                    line: line_no,
                    column: col,
                    reason: "feature indices are 1-based".into(),
                });
            }
            if idx <= prev_idx {
                return Err(Error::Parse {
                    line: line_no,
                    column: col,
                    reason: format!(
                        "feature indices must strictly increase, {idx} follows {prev_idx}"
                    ),
                });
            }
            let val: f64 = val_str.parse().map_err(|_| Error::Parse {
                line: line_no,
                column: col,
                reason: format!("feature value is not a number: {val_str:?}"),
            })?;
            prev_idx = idx;
            num_features = num_features.max(idx);
            features.push((idx, val));
        }
        examples.push(Example { label, features });
    }
    Ok(SparseExamples {
        examples,
        num_features,
    })
}

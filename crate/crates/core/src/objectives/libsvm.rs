//! LIBSVM sparse text format: `label idx:val idx:val …` with 1-based,
//! strictly increasing feature indices.

use std::fmt::Write as _;
use std::io::BufRead;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{LocalFunction, LogisticL2, QuadraticBlock};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseRow {
    /// `(index, value)` with the file's 1-based indices.
    pub entries: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LibsvmData {
    pub rows: Vec<SparseRow>,
    /// Raw targets as written in the file.
    pub targets: Vec<f64>,
    /// Largest feature index seen.
    pub dim: usize,
}

impl LibsvmData {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Targets mapped onto `{−1, +1}`: positive labels to `+1`, `0` and
    /// negative labels to `−1`. Anything other than `{−1, 0, +1}` is
    /// rejected.
    pub fn labels(&self) -> Result<Vec<f64>> {
        self.targets
            .iter()
            .enumerate()
            .map(|(i, &t)| match t {
                1.0 => Ok(1.0),
                t if t == 0.0 || t == -1.0 => Ok(-1.0),
                other => Err(Error::Parse {
                    line: i + 1,
                    message: format!("label {other} is not a binary class label"),
                }),
            })
            .collect()
    }

    /// Dense `len(indices) × dim` block of the selected rows.
    pub fn dense_rows(&self, indices: &[usize]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(indices.len(), self.dim);
        for (r, &i) in indices.iter().enumerate() {
            for &(idx, v) in &self.rows[i].entries {
                m[(r, idx - 1)] = v;
            }
        }
        m
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_line(line_no: usize, line: &str) -> Result<Option<(f64, SparseRow)>> {
    let content = line.split('#').next().unwrap_or("").trim();
    if content.is_empty() {
        return Ok(None);
    }
    let mut tokens = content.split_whitespace();
    let label_tok = tokens.next().ok_or_else(|| parse_err(line_no, "empty label"))?;
    if label_tok.contains(':') {
        return Err(parse_err(line_no, format!("missing label before `{label_tok}`")));
    }
    let label: f64 = label_tok
        .parse()
        .map_err(|_| parse_err(line_no, format!("non-numeric label `{label_tok}`")))?;
    if !label.is_finite() {
        return Err(parse_err(line_no, format!("non-finite label `{label_tok}`")));
    }
    let mut entries = Vec::new();
    let mut prev = 0usize;
    for tok in tokens {
        let (idx_s, val_s) = tok
            .split_once(':')
            .ok_or_else(|| parse_err(line_no, format!("expected idx:val, found `{tok}`")))?;
        let idx: usize = idx_s
            .parse()
            .map_err(|_| parse_err(line_no, format!("non-numeric index `{idx_s}`")))?;
        if idx == 0 {
            return Err(parse_err(line_no, "feature indices are 1-based"));
        }
        if idx <= prev {
            return Err(parse_err(line_no, format!("index {idx} does not increase past {prev}")));
        }
        let val: f64 = val_s
            .parse()
            .map_err(|_| parse_err(line_no, format!("non-numeric value `{val_s}`")))?;
        if !val.is_finite() {
            return Err(parse_err(line_no, format!("non-finite value `{val_s}`")));
        }
        entries.push((idx, val));
        prev = idx;
    }
    Ok(Some((label, SparseRow { entries })))
}

/// Blank lines and `#` comments are skipped; errors carry 1-based line
/// numbers.
pub fn parse_libsvm<R: BufRead>(reader: R) -> Result<LibsvmData> {
    let mut data = LibsvmData::default();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| parse_err(i + 1, e.to_string()))?;
        if let Some((label, row)) = parse_line(i + 1, &line)? {
            if let Some(&(last, _)) = row.entries.last() {
                data.dim = data.dim.max(last);
            }
            data.targets.push(label);
            data.rows.push(row);
        }
    }
    Ok(data)
}

pub fn parse_libsvm_str(text: &str) -> Result<LibsvmData> {
    parse_libsvm(text.as_bytes())
}

/// Inverse of [`parse_libsvm`] for well-formed data.
pub fn write_libsvm(data: &LibsvmData) -> String {
    let mut out = String::new();
    for (target, row) in data.targets.iter().zip(&data.rows) {
        let _ = write!(out, "{target}");
        for (idx, v) in &row.entries {
            let _ = write!(out, " {idx}:{v}");
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionScheme {
    Contiguous,
    Shuffled { seed: u64 },
}

/// Splits `rows` row indices into `agents` blocks whose sizes differ by at
/// most one; the first `rows mod agents` blocks get the extra row.
pub fn partition_indices(rows: usize, agents: usize, scheme: PartitionScheme) -> Result<Vec<Vec<usize>>> {
    if agents == 0 || agents > rows {
        return Err(Error::TooFewRows { rows, agents });
    }
    let mut order: Vec<usize> = (0..rows).collect();
    if let PartitionScheme::Shuffled { seed } = scheme {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    let base = rows / agents;
    let extra = rows % agents;
    let mut blocks = Vec::with_capacity(agents);
    let mut start = 0;
    for a in 0..agents {
        let size = base + usize::from(a < extra);
        blocks.push(order[start..start + size].to_vec());
        start += size;
    }
    Ok(blocks)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LocalModel {
    /// Logistic loss with L2 penalty; targets must be binary.
    Logistic { theta: f64 },
    /// `½‖A_i x − b_i‖² + (θ/2)‖x‖²` on the raw targets.
    LeastSquares { theta: f64 },
}

pub fn partition_dataset(
    data: &LibsvmData,
    agents: usize,
    scheme: PartitionScheme,
    model: LocalModel,
) -> Result<Vec<LocalFunction>> {
    let blocks = partition_indices(data.len(), agents, scheme)?;
    let labels = match model {
        LocalModel::Logistic { .. } => data.labels()?,
        LocalModel::LeastSquares { .. } => data.targets.clone(),
    };
    blocks
        .iter()
        .map(|idx| {
            let a = data.dense_rows(idx);
            let b = DVector::from_iterator(idx.len(), idx.iter().map(|&i| labels[i]));
            Ok(match model {
                LocalModel::Logistic { theta } => LogisticL2::new(a, b, theta)?.into(),
                LocalModel::LeastSquares { theta } => QuadraticBlock::new(a, b, theta)?.into(),
            })
        })
        .collect()
}

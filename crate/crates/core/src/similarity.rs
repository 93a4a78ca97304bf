//! Cosine similarity and candidate-by-reference similarity matrices.
//!
//! Dot products and norms accumulate in `f64` in ascending index order, so
//! `cosine(a, b)` and `cosine(b, a)` are bit-identical and the parallel and
//! serial matrix paths agree exactly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{EmbeddingSet, EmbeddingVector};
use crate::error::{Error, Result};

/// A cosine score, clamped to `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SimilarityScore(f64);

impl SimilarityScore {
    /// Clamps `value` into `[-1, 1]`. Panics on NaN.
    pub fn new(value: f64) -> Self {
        assert!(!value.is_nan(), "similarity score is NaN");
        Self(value.clamp(-1.0, 1.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<SimilarityScore> for f64 {
    fn from(s: SimilarityScore) -> f64 {
        s.0
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0f64;
    for i in 0..a.len() {
        acc += a[i] * b[i];
    }
    acc
}

/// Cosine of the angle between `a` and `b`.
pub fn cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<SimilarityScore> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            actual: b.dim(),
            context: "cosine operands".into(),
        });
    }
    if a.is_zero() {
        return Err(Error::ZeroVector("left cosine operand".into()));
    }
    if b.is_zero() {
        return Err(Error::ZeroVector("right cosine operand".into()));
    }
    Ok(cosine_unchecked(a, b))
}

fn cosine_unchecked(a: &EmbeddingVector, b: &EmbeddingVector) -> SimilarityScore {
    SimilarityScore::new(dot(a.values(), b.values()) / (a.norm() * b.norm()))
}

/// Rows are candidates, columns references; scores stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    model_id: String,
    candidate_ids: Vec<String>,
    reference_ids: Vec<String>,
    scores: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    model_id: String,
    candidate_ids: Vec<String>,
    reference_ids: Vec<String>,
    scores: Vec<Vec<f64>>,
}

/// One cell of a matrix, with its labels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cell {
    pub candidate_id: String,
    pub reference_id: String,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Serial,
    #[default]
    Parallel,
}

impl SimilarityMatrix {
    /// Builds a matrix from raw row-major scores. Values are clamped into `[-1, 1]`.
    pub fn from_rows(
        model_id: impl Into<String>,
        candidate_ids: Vec<String>,
        reference_ids: Vec<String>,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if candidate_ids.is_empty() || reference_ids.is_empty() {
            return Err(Error::EmptySet);
        }
        if rows.len() != candidate_ids.len() {
            return Err(Error::DimensionMismatch {
                expected: candidate_ids.len(),
                actual: rows.len(),
                context: "matrix rows".into(),
            });
        }
        let mut scores = Vec::with_capacity(rows.len() * reference_ids.len());
        for row in rows {
            if row.len() != reference_ids.len() {
                return Err(Error::DimensionMismatch {
                    expected: reference_ids.len(),
                    actual: row.len(),
                    context: "matrix columns".into(),
                });
            }
            for v in row {
                if !v.is_finite() {
                    return Err(Error::NonFinite("matrix entry".into()));
                }
                scores.push(v.clamp(-1.0, 1.0));
            }
        }
        Ok(Self {
            model_id: model_id.into(),
            candidate_ids,
            reference_ids,
            scores,
        })
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn candidate_ids(&self) -> &[String] {
        &self.candidate_ids
    }

    pub fn reference_ids(&self) -> &[String] {
        &self.reference_ids
    }

    pub fn n_rows(&self) -> usize {
        self.candidate_ids.len()
    }

    pub fn n_cols(&self) -> usize {
        self.reference_ids.len()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.scores[row * self.n_cols() + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let n = self.n_cols();
        &self.scores[row * n..(row + 1) * n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.scores.chunks(self.n_cols())
    }

    pub fn candidate_index(&self, id: &str) -> Option<usize> {
        self.candidate_ids.iter().position(|c| c == id)
    }

    pub fn reference_index(&self, id: &str) -> Option<usize> {
        self.reference_ids.iter().position(|c| c == id)
    }

    /// Score by ids.
    pub fn score(&self, candidate_id: &str, reference_id: &str) -> Option<f64> {
        Some(self.get(
            self.candidate_index(candidate_id)?,
            self.reference_index(reference_id)?,
        ))
    }

    fn cell(&self, row: usize, col: usize) -> Cell {
        Cell {
            candidate_id: self.candidate_ids[row].clone(),
            reference_id: self.reference_ids[col].clone(),
            score: self.get(row, col),
        }
    }

    /// Lowest entry; the first in row-major order wins ties.
    pub fn min_cell(&self) -> Cell {
        let (idx, _) = self
            .scores
            .iter()
            .enumerate()
            .fold(
                (0, f64::INFINITY),
                |best, (i, &v)| if v < best.1 { (i, v) } else { best },
            );
        self.cell(idx / self.n_cols(), idx % self.n_cols())
    }

    /// Highest entry; the first in row-major order wins ties.
    pub fn max_cell(&self) -> Cell {
        let (idx, _) =
            self.scores
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (i, &v)| {
                    if v > best.1 {
                        (i, v)
                    } else {
                        best
                    }
                });
        self.cell(idx / self.n_cols(), idx % self.n_cols())
    }

    /// CSV with a header of reference ids and one row per candidate,
    /// scores to 6 decimals.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let mut header = vec!["candidate".to_string()];
        header.extend(self.reference_ids.iter().cloned());
        w.write_record(&header).map_err(csv_err)?;
        for (id, row) in self.candidate_ids.iter().zip(self.rows()) {
            let mut rec = vec![id.clone()];
            rec.extend(row.iter().map(|v| format!("{v:.6}")));
            w.write_record(&rec).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_json(&self) -> Result<String> {
        let repr = MatrixRepr {
            model_id: self.model_id.clone(),
            candidate_ids: self.candidate_ids.clone(),
            reference_ids: self.reference_ids.clone(),
            scores: self.rows().map(<[f64]>::to_vec).collect(),
        };
        Ok(serde_json::to_string_pretty(&repr)? + "\n")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let repr: MatrixRepr =
            serde_json::from_str(s).map_err(|e| Error::MalformedFile(e.to_string()))?;
        Self::from_rows(
            repr.model_id,
            repr.candidate_ids,
            repr.reference_ids,
            repr.scores,
        )
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn check_compatible(candidates: &EmbeddingSet, references: &EmbeddingSet) -> Result<()> {
    if candidates.is_empty() || references.is_empty() {
        return Err(Error::EmptySet);
    }
    if candidates.model_id() != references.model_id() {
        return Err(Error::ModelMismatch {
            left: candidates.model_id().to_string(),
            right: references.model_id().to_string(),
        });
    }
    if candidates.dim() != references.dim() {
        return Err(Error::DimensionMismatch {
            expected: candidates.dim(),
            actual: references.dim(),
            context: "candidate vs reference set".into(),
        });
    }
    for (id, v) in candidates.iter().chain(references.iter()) {
        if v.is_zero() {
            return Err(Error::ZeroVector(id.to_string()));
        }
    }
    Ok(())
}

/// Cosine of every candidate against every reference, rows computed in parallel.
pub fn matrix(candidates: &EmbeddingSet, references: &EmbeddingSet) -> Result<SimilarityMatrix> {
    matrix_with(candidates, references, Execution::Parallel)
}

pub fn matrix_with(
    candidates: &EmbeddingSet,
    references: &EmbeddingSet,
    execution: Execution,
) -> Result<SimilarityMatrix> {
    check_compatible(candidates, references)?;
    let refs: Vec<&EmbeddingVector> = references.iter().map(|(_, v)| v).collect();
    let cands: Vec<&EmbeddingVector> = candidates.iter().map(|(_, v)| v).collect();
    let row_of = |c: &&EmbeddingVector| -> Vec<f64> {
        refs.iter()
            .map(|r| cosine_unchecked(c, r).value())
            .collect()
    };
    let rows: Vec<Vec<f64>> = match execution {
        Execution::Serial => cands.iter().map(row_of).collect(),
        Execution::Parallel => cands.par_iter().map(row_of).collect(),
    };
    SimilarityMatrix::from_rows(
        candidates.model_id(),
        candidates.ids().map(str::to_owned).collect(),
        references.ids().map(str::to_owned).collect(),
        rows,
    )
}

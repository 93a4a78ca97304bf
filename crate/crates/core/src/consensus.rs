//! Consensus scoring: mean similarity of each candidate against a reference
//! corpus, deterministic ranking, pairwise tables, and admission of new
//! candidates into an evolving corpus.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Definition};
use crate::embedding::{Embedder, EmbeddingSet};
use crate::error::{Error, Result};
use crate::fixtures::{BASELINE_APPENDIX_ID, BASELINE_ID};
use crate::similarity::{matrix, matrix_with, Execution, SimilarityMatrix, SimilarityScore};

/// Default admission threshold for new candidates.
pub const DEFAULT_ADMISSION_THRESHOLD: f64 = 0.80;

/// Which reference columns count as "self" for a candidate.
///
/// With `enabled`, the column whose id equals the candidate id is dropped,
/// along with the columns of any alias of that id. Aliases are symmetric.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SelfExclusion {
    pub enabled: bool,
    aliases: BTreeMap<String, BTreeSet<String>>,
}

impl SelfExclusion {
    /// Keep every column.
    pub fn none() -> Self {
        Self::default()
    }

    /// Drop only the column with the candidate's own id.
    pub fn by_id() -> Self {
        Self {
            enabled: true,
            aliases: BTreeMap::new(),
        }
    }

    /// Exclusion by id plus the baseline's appendix listing (`base-0.1` and `ind-58`).
    pub fn with_baseline_alias() -> Self {
        Self::by_id().alias(BASELINE_ID, BASELINE_APPENDIX_ID)
    }

    pub fn alias(mut self, a: &str, b: &str) -> Self {
        self.aliases
            .entry(a.to_string())
            .or_default()
            .insert(b.to_string());
        self.aliases
            .entry(b.to_string())
            .or_default()
            .insert(a.to_string());
        self
    }

    pub fn enabled(mut self, enabled: bool) -> Self {
        self.enabled = enabled;
        self
    }

    pub fn is_self(&self, candidate_id: &str, reference_id: &str) -> bool {
        self.enabled
            && (candidate_id == reference_id
                || self
                    .aliases
                    .get(candidate_id)
                    .is_some_and(|a| a.contains(reference_id)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AverageScore {
    pub average: f64,
    pub n_used: usize,
    pub excluded_self: bool,
}

/// Arithmetic mean of the candidate's row, skipping self columns per `exclusion`.
pub fn average_similarity(
    m: &SimilarityMatrix,
    candidate_id: &str,
    exclusion: &SelfExclusion,
) -> Result<AverageScore> {
    let row = m
        .candidate_index(candidate_id)
        .ok_or_else(|| Error::UnknownCandidate(candidate_id.to_string()))?;
    let mut sum = 0.0f64;
    let mut n_used = 0usize;
    for (col, ref_id) in m.reference_ids().iter().enumerate() {
        if exclusion.is_self(candidate_id, ref_id) {
            continue;
        }
        sum += m.get(row, col);
        n_used += 1;
    }
    if n_used == 0 {
        return Err(Error::EmptyReferenceSet(candidate_id.to_string()));
    }
    Ok(AverageScore {
        average: sum / n_used as f64,
        n_used,
        excluded_self: n_used < m.n_cols(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsensusRow {
    pub candidate_id: String,
    pub average_score: f64,
    pub rank: usize,
    pub n_references_used: usize,
    pub excluded_self: bool,
}

/// Candidates ordered by mean similarity, highest first; equal scores fall
/// back to ascending candidate id. Ranks are dense and unshared.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsensusReport {
    pub model_id: String,
    pub reference_corpus: String,
    pub rows: Vec<ConsensusRow>,
}

/// Ordering used by reports: score descending, then id ascending.
pub fn consensus_order(a: (&str, f64), b: (&str, f64)) -> std::cmp::Ordering {
    b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0))
}

pub fn rank(
    m: &SimilarityMatrix,
    exclusion: &SelfExclusion,
    reference_corpus: &str,
) -> Result<ConsensusReport> {
    let mut rows = m
        .candidate_ids()
        .iter()
        .map(|id| {
            let avg = average_similarity(m, id, exclusion)?;
            Ok(ConsensusRow {
                candidate_id: id.clone(),
                average_score: avg.average,
                rank: 0,
                n_references_used: avg.n_used,
                excluded_self: avg.excluded_self,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| {
        consensus_order(
            (&a.candidate_id, a.average_score),
            (&b.candidate_id, b.average_score),
        )
    });
    for (i, row) in rows.iter_mut().enumerate() {
        row.rank = i + 1;
    }
    Ok(ConsensusReport {
        model_id: m.model_id().to_string(),
        reference_corpus: reference_corpus.to_string(),
        rows,
    })
}

impl ConsensusReport {
    pub fn top(&self, k: usize) -> &[ConsensusRow] {
        &self.rows[..k.min(self.rows.len())]
    }

    pub fn row(&self, candidate_id: &str) -> Option<&ConsensusRow> {
        self.rows.iter().find(|r| r.candidate_id == candidate_id)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Ranked table, scores to 3 decimals.
    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "Average cosine similarity vs `{}` (model `{}`)\n",
            self.reference_corpus, self.model_id
        );
        out.push_str("| Rank | Definition | Average cosine similarity | References used |\n");
        out.push_str("|---:|---|---:|---:|\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "| {} | {} | {:.3} | {}{} |",
                r.rank,
                r.candidate_id,
                r.average_score,
                r.n_references_used,
                if r.excluded_self {
                    " (self excluded)"
                } else {
                    ""
                }
            );
        }
        out
    }

    /// Plot-ready averages in candidate order of the report.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rank,candidate_id,average_score,n_references_used\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{:.6},{}",
                r.rank, r.candidate_id, r.average_score, r.n_references_used
            );
        }
        out
    }
}

/// Square similarity table over `ids`.
pub fn pairwise_table<S: AsRef<str>>(ids: &[S], set: &EmbeddingSet) -> Result<SimilarityMatrix> {
    if ids.len() < 2 {
        return Err(Error::TooFewIds {
            needed: 2,
            got: ids.len(),
        });
    }
    for id in ids {
        if set.get(id.as_ref()).is_none() {
            return Err(Error::UnknownId(id.as_ref().to_string()));
        }
    }
    let sub = set.select(ids)?;
    matrix_with(&sub, &sub, Execution::Serial)
}

/// Square table with 3-decimal scores; the header uses `label` on each id.
pub fn pairwise_markdown(m: &SimilarityMatrix, label: impl Fn(&str) -> String) -> String {
    let mut out = String::from("| Definition |");
    for id in m.reference_ids() {
        let _ = write!(out, " {} |", label(id));
    }
    out.push_str("\n|---|");
    out.push_str(&"---:|".repeat(m.n_cols()));
    out.push('\n');
    for (i, id) in m.candidate_ids().iter().enumerate() {
        let _ = write!(out, "| {} |", label(id));
        for j in 0..m.n_cols() {
            let _ = write!(out, " {:.3} |", m.get(i, j));
        }
        out.push('\n');
    }
    out
}

/// Parameters for judging a new candidate definition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSettings {
    pub threshold: f64,
    /// Anchor ids, looked up in the corpus and then in the anchor pool.
    pub anchors: Vec<String>,
    pub exclusion: SelfExclusion,
}

impl Default for EvaluationSettings {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_ADMISSION_THRESHOLD,
            anchors: Vec::new(),
            exclusion: SelfExclusion::by_id(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationResult {
    pub candidate_id: String,
    pub model_id: String,
    pub vs_corpus_average: f64,
    pub n_references_used: usize,
    pub vs_anchors: IndexMap<String, SimilarityScore>,
    pub verdict_threshold: f64,
    pub admitted: bool,
}

/// Scores `candidate` against every member of `corpus` and against each anchor.
/// `admitted` holds when the corpus average reaches the threshold.
pub fn evaluate_new(
    candidate: &Definition,
    corpus: &Corpus,
    anchor_pool: Option<&Corpus>,
    settings: &EvaluationSettings,
    embedder: &Embedder,
) -> Result<EvaluationResult> {
    if settings.threshold.is_nan() {
        return Err(Error::InvalidConfig("threshold is NaN".into()));
    }
    let anchor_defs = settings
        .anchors
        .iter()
        .map(|id| {
            corpus
                .get(id)
                .or_else(|| anchor_pool.and_then(|p| p.get(id)))
                .ok_or_else(|| Error::UnknownId(id.clone()))
        })
        .collect::<Result<Vec<&Definition>>>()?;

    let cand_set = embedder.embed_definitions(&[candidate])?;
    let corpus_set = embedder.embed_corpus(corpus)?;
    let m = matrix(&cand_set, &corpus_set)?;
    let avg = average_similarity(&m, &candidate.id, &settings.exclusion)?;

    let mut vs_anchors = IndexMap::new();
    if !anchor_defs.is_empty() {
        let anchor_set = embedder.embed_definitions(&anchor_defs)?;
        let am = matrix(&cand_set, &anchor_set)?;
        for (j, id) in am.reference_ids().iter().enumerate() {
            vs_anchors.insert(id.clone(), SimilarityScore::new(am.get(0, j)));
        }
    }

    Ok(EvaluationResult {
        candidate_id: candidate.id.clone(),
        model_id: cand_set.model_id().to_string(),
        vs_corpus_average: avg.average,
        n_references_used: avg.n_used,
        vs_anchors,
        verdict_threshold: settings.threshold,
        admitted: avg.average >= settings.threshold,
    })
}

/// Evaluates candidates in order, each against the corpus as grown by the
/// admissions before it. Returns the final corpus and one result per candidate.
pub fn evolve(
    corpus: &Corpus,
    candidates: &Corpus,
    anchor_pool: Option<&Corpus>,
    settings: &EvaluationSettings,
    embedder: &Embedder,
) -> Result<(Corpus, Vec<EvaluationResult>)> {
    let mut current = corpus.clone();
    let mut results = Vec::with_capacity(candidates.len());
    for cand in candidates {
        let res = evaluate_new(cand, &current, anchor_pool, settings, embedder)?;
        if res.admitted {
            current = current.with_definition(cand.clone())?;
        }
        results.push(res);
    }
    Ok((current, results))
}

/// Evaluation table, 3 decimals, one row per candidate.
pub fn evaluations_markdown(results: &[EvaluationResult]) -> String {
    let anchors: Vec<&String> = results
        .first()
        .map(|r| r.vs_anchors.keys().collect())
        .unwrap_or_default();
    let mut out = String::from("| Definition | Average cosine similarity |");
    for a in &anchors {
        let _ = write!(out, " vs {a} |");
    }
    out.push_str(" Admitted |\n|---|---:|");
    out.push_str(&"---:|".repeat(anchors.len()));
    out.push_str("---|\n");
    for r in results {
        let _ = write!(out, "| {} | {:.3} |", r.candidate_id, r.vs_corpus_average);
        for a in &anchors {
            match r.vs_anchors.get(*a) {
                Some(s) => {
                    let _ = write!(out, " {:.3} |", s.value());
                }
                None => out.push_str(" - |"),
            }
        }
        let _ = writeln!(
            out,
            " {} (threshold {:.3}) |",
            if r.admitted { "yes" } else { "no" },
            r.verdict_threshold
        );
    }
    out
}

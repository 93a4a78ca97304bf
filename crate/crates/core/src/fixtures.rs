//! Bundled smart-city definition corpora (see `data/` at the workspace root).
//!
//! Citation markers such as `[5]` are stripped from every text.

use crate::corpus::{parse_corpus_str, Corpus};

pub const INDIVIDUAL_60: &str = include_str!("../../../data/individual-60.jsonl");
pub const COMPOSITE_20: &str = include_str!("../../../data/composite-20.jsonl");
pub const BASELINE: &str = include_str!("../../../data/baseline.jsonl");
pub const EXTERNAL_CANDIDATES: &str = include_str!("../../../data/external-candidates.jsonl");

/// Id of the baseline definition.
pub const BASELINE_ID: &str = "base-0.1";
/// The appendix lists the baseline definition again under this id.
pub const BASELINE_APPENDIX_ID: &str = "ind-58";

/// Top composite definitions kept as comparison anchors for new candidates.
pub const ANCHOR_IDS: [&str; 3] = ["comp-19", "comp-14", "comp-12"];

fn bundled(name: &str, src: &str) -> Corpus {
    parse_corpus_str(name, src).expect("bundled fixture parses")
}

pub fn individual_60() -> Corpus {
    bundled("individual-60", INDIVIDUAL_60)
}

pub fn composite_20() -> Corpus {
    bundled("composite-20", COMPOSITE_20)
}

pub fn baseline() -> Corpus {
    bundled("baseline", BASELINE)
}

pub fn external_candidates() -> Corpus {
    bundled("external-candidates", EXTERNAL_CANDIDATES)
}

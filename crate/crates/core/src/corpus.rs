//! Definition corpora and their JSON-lines file format.
//!
//! One record per line: `{"id": ..., "text": ..., "kind": ..., "source": ...}`.
//! Texts are whitespace-normalized on ingest (internal runs collapsed to a
//! single space, ends trimmed). Blank lines are ignored.

use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Provenance class of a definition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DefinitionKind {
    /// Collected from the literature.
    Individual,
    /// Synthesized by summarizing a corpus.
    Composite,
    /// The reference definition the analysis starts from.
    Baseline,
    /// A candidate proposed outside the corpus.
    External,
}

impl fmt::Display for DefinitionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Individual => "individual",
            Self::Composite => "composite",
            Self::Baseline => "baseline",
            Self::External => "external",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Definition {
    pub id: String,
    pub text: String,
    pub kind: DefinitionKind,
    #[serde(default)]
    pub source: String,
}

impl Definition {
    /// Builds a definition, normalizing whitespace in `text`.
    pub fn new(
        id: impl Into<String>,
        text: &str,
        kind: DefinitionKind,
        source: impl Into<String>,
    ) -> Result<Self> {
        let def = Self {
            id: id.into(),
            text: normalize_whitespace(text),
            kind,
            source: source.into(),
        };
        def.check()
            .map_err(|reason| Error::MalformedRecord { line: 0, reason })?;
        Ok(def)
    }

    fn check(&self) -> std::result::Result<(), String> {
        if self.id.trim().is_empty() {
            return Err("empty id".into());
        }
        if self.text.trim().is_empty() {
            return Err(format!("empty text for id {:?}", self.id));
        }
        Ok(())
    }

    /// SHA-256 of the text, hex encoded.
    pub fn text_hash(&self) -> String {
        hex::encode(Sha256::digest(self.text.as_bytes()))
    }

    pub fn word_count(&self) -> usize {
        self.text.split_whitespace().count()
    }
}

/// Collapses internal whitespace runs to single spaces and trims both ends.
pub fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// An ordered, id-unique collection of definitions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Corpus {
    pub name: String,
    definitions: Vec<Definition>,
    pub created: DateTime<Utc>,
}

impl Corpus {
    pub fn new(name: impl Into<String>, definitions: Vec<Definition>) -> Result<Self> {
        if definitions.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut seen = HashSet::with_capacity(definitions.len());
        for (i, def) in definitions.iter().enumerate() {
            def.check().map_err(|reason| Error::MalformedRecord {
                line: i + 1,
                reason,
            })?;
            if !seen.insert(def.id.as_str()) {
                return Err(Error::DuplicateId(def.id.clone()));
            }
        }
        Ok(Self {
            name: name.into(),
            definitions,
            created: Utc::now(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let file = std::fs::File::open(path)?;
        parse_corpus(name, file)
    }

    pub fn definitions(&self) -> &[Definition] {
        &self.definitions
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Definition> {
        self.definitions.iter()
    }

    pub fn len(&self) -> usize {
        self.definitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.definitions.is_empty()
    }

    pub fn ids(&self) -> Vec<&str> {
        self.definitions.iter().map(|d| d.id.as_str()).collect()
    }

    pub fn get(&self, id: &str) -> Option<&Definition> {
        self.definitions.iter().find(|d| d.id == id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.get(id).is_some()
    }

    /// New corpus holding exactly `ids`, in the requested order.
    pub fn subset<S: AsRef<str>>(&self, ids: &[S]) -> Result<Corpus> {
        let picked = ids
            .iter()
            .map(|id| {
                let id = id.as_ref();
                self.get(id)
                    .cloned()
                    .ok_or_else(|| Error::UnknownId(id.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        Corpus::new(self.name.clone(), picked)
    }

    /// Every definition except `ids`. Unknown ids are an error.
    pub fn without<S: AsRef<str>>(&self, ids: &[S]) -> Result<Corpus> {
        for id in ids {
            if !self.contains(id.as_ref()) {
                return Err(Error::UnknownId(id.as_ref().to_string()));
            }
        }
        let keep: Vec<&str> = self
            .definitions
            .iter()
            .map(|d| d.id.as_str())
            .filter(|id| !ids.iter().any(|x| x.as_ref() == *id))
            .collect();
        self.subset(&keep)
    }

    /// Appends a definition, yielding the accumulated corpus.
    pub fn with_definition(&self, def: Definition) -> Result<Corpus> {
        let mut defs = self.definitions.clone();
        defs.push(def);
        Corpus::new(self.name.clone(), defs)
    }

    /// Concatenation of two corpora; ids must stay unique.
    pub fn merged(&self, other: &Corpus, name: impl Into<String>) -> Result<Corpus> {
        let mut defs = self.definitions.clone();
        defs.extend(other.definitions.iter().cloned());
        Corpus::new(name, defs)
    }

    /// Ids, texts and kinds equal, in the same order. Name, source and timestamp are ignored.
    pub fn same_content(&self, other: &Corpus) -> bool {
        self.len() == other.len()
            && self
                .iter()
                .zip(other.iter())
                .all(|(a, b)| a.id == b.id && a.text == b.text && a.kind == b.kind)
    }

    /// Serializes to the JSON-lines format, one record per line, LF terminated.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for def in &self.definitions {
            // Definition serialization cannot fail: plain strings and a unit enum.
            out.push_str(&serde_json::to_string(def).expect("definition serializes"));
            out.push('\n');
        }
        out
    }

    /// SHA-256 over the canonical JSON-lines serialization (hex).
    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_jsonl().as_bytes()))
    }
}

impl<'a> IntoIterator for &'a Corpus {
    type Item = &'a Definition;
    type IntoIter = std::slice::Iter<'a, Definition>;

    fn into_iter(self) -> Self::IntoIter {
        self.definitions.iter()
    }
}

/// Parses a JSON-lines corpus stream.
pub fn parse_corpus<R: Read>(name: impl Into<String>, input: R) -> Result<Corpus> {
    let reader = BufReader::new(input);
    let mut defs = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::MalformedRecord {
            line: lineno,
            reason: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let mut def: Definition =
            serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
                line: lineno,
                reason: e.to_string(),
            })?;
        def.text = normalize_whitespace(&def.text);
        def.check().map_err(|reason| Error::MalformedRecord {
            line: lineno,
            reason,
        })?;
        if !seen.insert(def.id.clone()) {
            return Err(Error::DuplicateId(def.id));
        }
        defs.push(def);
    }
    Corpus::new(name, defs)
}

pub fn parse_corpus_str(name: impl Into<String>, input: &str) -> Result<Corpus> {
    parse_corpus(name, input.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str, text: &str) -> String {
        format!(r#"{{"id":"{id}","text":"{text}","kind":"individual","source":"s"}}"#)
    }

    #[test]
    fn empty_stream_is_empty_corpus() {
        assert!(matches!(parse_corpus_str("c", ""), Err(Error::EmptyCorpus)));
        assert!(matches!(
            parse_corpus_str("c", "\n\n  \n"),
            Err(Error::EmptyCorpus)
        ));
    }

    #[test]
    fn duplicate_id_rejected() {
        let input = format!("{}\n{}\n", rec("ind-1", "a b"), rec("ind-1", "c d"));
        match parse_corpus_str("c", &input) {
            Err(Error::DuplicateId(id)) => assert_eq!(id, "ind-1"),
            other => panic!("expected DuplicateId, got {other:?}"),
        }
    }

    #[test]
    fn malformed_line_reports_index() {
        let input = format!("{}\nnot json\n", rec("a", "x"));
        match parse_corpus_str("c", &input) {
            Err(Error::MalformedRecord { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected MalformedRecord, got {other:?}"),
        }
    }

    #[test]
    fn whitespace_only_text_is_malformed() {
        let input = rec("a", "   \\t ");
        assert!(matches!(
            parse_corpus_str("c", &input),
            Err(Error::MalformedRecord { line: 1, .. })
        ));
    }

    #[test]
    fn unknown_kind_is_malformed() {
        let input = r#"{"id":"a","text":"x","kind":"mystery"}"#;
        assert!(matches!(
            parse_corpus_str("c", input),
            Err(Error::MalformedRecord { line: 1, .. })
        ));
    }

    #[test]
    fn text_whitespace_is_collapsed() {
        let c = parse_corpus_str("c", &rec("a", "  smart \\n\\n  city\\t ")).unwrap();
        assert_eq!(c.definitions()[0].text, "smart city");
    }

    #[test]
    fn missing_source_defaults_to_empty() {
        let c = parse_corpus_str("c", r#"{"id":"a","text":"x","kind":"baseline"}"#).unwrap();
        assert_eq!(c.definitions()[0].source, "");
        assert_eq!(c.definitions()[0].kind, DefinitionKind::Baseline);
    }

    #[test]
    fn subset_orders_and_validates() {
        let input = [rec("a", "1"), rec("b", "2"), rec("c", "3")].join("\n");
        let c = parse_corpus_str("c", &input).unwrap();
        let s = c.subset(&["c", "a"]).unwrap();
        assert_eq!(s.ids(), vec!["c", "a"]);
        assert!(matches!(c.subset::<&str>(&[]), Err(Error::EmptyCorpus)));
        assert!(matches!(c.subset(&["nope"]), Err(Error::UnknownId(id)) if id == "nope"));
        assert_eq!(c.without(&["b"]).unwrap().ids(), vec!["a", "c"]);
    }

    #[test]
    fn with_definition_rejects_collisions() {
        let c = parse_corpus_str("c", &rec("a", "1")).unwrap();
        let dup = Definition::new("a", "z", DefinitionKind::External, "").unwrap();
        assert!(matches!(c.with_definition(dup), Err(Error::DuplicateId(_))));
        let fresh = Definition::new("b", "z", DefinitionKind::External, "").unwrap();
        assert_eq!(c.with_definition(fresh).unwrap().len(), 2);
    }
}

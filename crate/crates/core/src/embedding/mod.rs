//! Embedding vectors and the providers that produce them.
//!
//! Three providers sit behind [`EmbeddingProvider`]:
//! - [`LocalHashEmbedder`]: hashed bag-of-words, deterministic and offline. It
//!   is not semantically meaningful; scores comparable to a sentence-embedding
//!   model need the remote or file provider.
//! - [`FileProvider`]: vectors exported earlier into the embedding file format.
//! - [`RemoteEmbedder`]: an HTTP embedding service.
//!
//! [`Embedder`] wraps a provider with a cache keyed by
//! `(model_id, definition id, text hash)`.

mod file;
mod local;
mod remote;

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Mutex;
use std::time::Duration;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Definition};
use crate::error::{Error, Result};

pub use file::{load_embeddings, load_embeddings_file, save_embeddings, FileProvider};
pub use local::{fnv1a_64, local_deterministic_embed, tokenize, LocalHashEmbedder};
pub use remote::{EmbedRequest, EmbedResponse, RemoteEmbedder, EMBED_TOKEN_ENV};

/// Sentence-embedding model used for reproduction runs.
pub const REFERENCE_MODEL_ID: &str = "all-mpnet-base-v2";

pub const DEFAULT_LOCAL_DIM: usize = 256;

/// A finite, non-empty real vector with its Euclidean norm cached.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector {
    values: Vec<f64>,
    norm: f64,
    model_id: String,
}

impl EmbeddingVector {
    /// `label` names the vector in error messages.
    pub fn new(values: Vec<f64>, model_id: impl Into<String>, label: &str) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: 1,
                actual: 0,
                context: format!("empty vector for {label:?}"),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(label.to_string()));
        }
        let norm = euclidean_norm(&values);
        Ok(Self {
            values,
            norm,
            model_id: model_id.into(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn is_zero(&self) -> bool {
        self.norm == 0.0
    }

    /// Copy scaled by `factor`, norm recomputed.
    pub fn scaled(&self, factor: f64, label: &str) -> Result<Self> {
        let values = self.values.iter().map(|v| v * factor).collect();
        Self::new(values, self.model_id.clone(), label)
    }
}

/// Square root of the ascending-index sum of squares.
pub fn euclidean_norm(values: &[f64]) -> f64 {
    let mut acc = 0.0f64;
    for v in values {
        acc += v * v;
    }
    acc.sqrt()
}

/// Vectors for a set of definition ids, all of one model and dimension.
/// Iteration follows insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    model_id: String,
    dim: usize,
    vectors: IndexMap<String, EmbeddingVector>,
}

impl EmbeddingSet {
    pub fn new(model_id: impl Into<String>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidConfig("dimension must be positive".into()));
        }
        Ok(Self {
            model_id: model_id.into(),
            dim,
            vectors: IndexMap::new(),
        })
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&EmbeddingVector> {
        self.vectors.get(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.vectors.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &EmbeddingVector)> {
        self.vectors.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Inserts raw values for `id`, replacing any previous vector.
    pub fn insert_values(&mut self, id: impl Into<String>, values: Vec<f64>) -> Result<()> {
        let id = id.into();
        let v = EmbeddingVector::new(values, self.model_id.clone(), &id)?;
        self.insert(id, v)
    }

    pub fn insert(&mut self, id: impl Into<String>, v: EmbeddingVector) -> Result<()> {
        let id = id.into();
        if v.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: v.dim(),
                context: format!("vector {id:?}"),
            });
        }
        if v.model_id() != self.model_id {
            return Err(Error::ModelMismatch {
                left: self.model_id.clone(),
                right: v.model_id().to_string(),
            });
        }
        self.vectors.insert(id, v);
        Ok(())
    }

    /// Set restricted to `ids`, in that order.
    pub fn select<S: AsRef<str>>(&self, ids: &[S]) -> Result<EmbeddingSet> {
        let mut out = EmbeddingSet::new(self.model_id.clone(), self.dim)?;
        for id in ids {
            let id = id.as_ref();
            let v = self
                .get(id)
                .ok_or_else(|| Error::MissingVector(id.to_string()))?;
            out.vectors.insert(id.to_string(), v.clone());
        }
        Ok(out)
    }

    /// Adds every vector of `other`; model and dimension must agree.
    pub fn extend_from(&mut self, other: &EmbeddingSet) -> Result<()> {
        if other.model_id != self.model_id {
            return Err(Error::ModelMismatch {
                left: self.model_id.clone(),
                right: other.model_id.clone(),
            });
        }
        for (id, v) in other.iter() {
            self.insert(id, v.clone())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    LocalDeterministic,
    File,
    Remote,
}

/// How to obtain embeddings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderConfig {
    pub kind: ProviderKind,
    pub model_id: String,
    /// Output dimension of the local embedder.
    pub dim: usize,
    /// Base URL of the embedding service (remote only).
    pub endpoint: Option<String>,
    /// Embedding files (file provider only); merged in order.
    pub paths: Vec<PathBuf>,
    pub batch_size: usize,
    pub max_retries: u32,
    pub timeout: Duration,
    /// First retry delay; doubles on every further attempt.
    pub retry_backoff: Duration,
    /// Concurrent remote batches.
    pub max_in_flight: usize,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self::local(DEFAULT_LOCAL_DIM)
    }
}

impl ProviderConfig {
    pub fn local(dim: usize) -> Self {
        Self {
            kind: ProviderKind::LocalDeterministic,
            model_id: LocalHashEmbedder::model_id_for(dim),
            dim,
            endpoint: None,
            paths: Vec::new(),
            batch_size: 32,
            max_retries: 3,
            timeout: Duration::from_secs(30),
            retry_backoff: Duration::from_millis(250),
            max_in_flight: 4,
        }
    }

    /// File provider; the model id is taken from the files.
    pub fn file(paths: Vec<PathBuf>) -> Self {
        Self {
            kind: ProviderKind::File,
            model_id: String::new(),
            paths,
            ..Self::local(DEFAULT_LOCAL_DIM)
        }
    }

    pub fn remote(endpoint: impl Into<String>, model_id: impl Into<String>) -> Self {
        Self {
            kind: ProviderKind::Remote,
            model_id: model_id.into(),
            endpoint: Some(endpoint.into()),
            ..Self::local(DEFAULT_LOCAL_DIM)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be at least 1".into()));
        }
        match self.kind {
            ProviderKind::LocalDeterministic if self.dim == 0 => {
                Err(Error::InvalidConfig("dim must be at least 1".into()))
            }
            ProviderKind::File if self.paths.is_empty() => Err(Error::InvalidConfig(
                "file provider requires at least one path".into(),
            )),
            ProviderKind::Remote if self.endpoint.as_deref().is_none_or(str::is_empty) => Err(
                Error::InvalidConfig("remote provider requires an endpoint".into()),
            ),
            ProviderKind::Remote if self.max_in_flight == 0 => Err(Error::InvalidConfig(
                "max_in_flight must be at least 1".into(),
            )),
            _ => Ok(()),
        }
    }

    pub fn build(&self) -> Result<Box<dyn EmbeddingProvider>> {
        self.validate()?;
        Ok(match self.kind {
            ProviderKind::LocalDeterministic => Box::new(LocalHashEmbedder::new(self.dim)?),
            ProviderKind::File => Box::new(FileProvider::open(&self.paths)?),
            ProviderKind::Remote => Box::new(RemoteEmbedder::from_config(self)?),
        })
    }
}

/// Source of raw embedding values.
pub trait EmbeddingProvider: Send + Sync {
    fn model_id(&self) -> &str;

    /// One vector per definition, aligned with the input order.
    fn embed(&self, defs: &[&Definition]) -> Result<Vec<Vec<f64>>>;
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct CacheKey {
    model_id: String,
    id: String,
    text_hash: String,
}

/// Provider plus an in-memory vector cache.
pub struct Embedder {
    provider: Box<dyn EmbeddingProvider>,
    cache: Mutex<HashMap<CacheKey, EmbeddingVector>>,
}

impl Embedder {
    pub fn new(provider: Box<dyn EmbeddingProvider>) -> Self {
        Self {
            provider,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn from_config(config: &ProviderConfig) -> Result<Self> {
        Ok(Self::new(config.build()?))
    }

    pub fn model_id(&self) -> &str {
        self.provider.model_id()
    }

    pub fn cached_len(&self) -> usize {
        self.cache.lock().expect("cache lock").len()
    }

    /// Embeds every definition of `corpus`, in corpus order.
    pub fn embed_corpus(&self, corpus: &Corpus) -> Result<EmbeddingSet> {
        let defs: Vec<&Definition> = corpus.iter().collect();
        self.embed_definitions(&defs)
    }

    pub fn embed_definitions(&self, defs: &[&Definition]) -> Result<EmbeddingSet> {
        if defs.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let model_id = self.provider.model_id().to_string();
        let keys: Vec<CacheKey> = defs
            .iter()
            .map(|d| CacheKey {
                model_id: model_id.clone(),
                id: d.id.clone(),
                text_hash: d.text_hash(),
            })
            .collect();

        let mut found: Vec<Option<EmbeddingVector>> = {
            let cache = self.cache.lock().expect("cache lock");
            keys.iter().map(|k| cache.get(k).cloned()).collect()
        };
        let missing: Vec<usize> = (0..defs.len()).filter(|&i| found[i].is_none()).collect();
        if !missing.is_empty() {
            let batch: Vec<&Definition> = missing.iter().map(|&i| defs[i]).collect();
            let raw = self.provider.embed(&batch)?;
            if raw.len() != batch.len() {
                return Err(Error::ProviderUnavailable(format!(
                    "provider returned {} vectors for {} texts",
                    raw.len(),
                    batch.len()
                )));
            }
            let mut cache = self.cache.lock().expect("cache lock");
            for (&i, values) in missing.iter().zip(raw) {
                let v = EmbeddingVector::new(values, model_id.clone(), &defs[i].id)?;
                if v.is_zero() {
                    return Err(Error::ZeroVector(defs[i].id.clone()));
                }
                cache.insert(keys[i].clone(), v.clone());
                found[i] = Some(v);
            }
        }

        let dim = found[0].as_ref().map(EmbeddingVector::dim).unwrap_or(0);
        let mut set = EmbeddingSet::new(model_id, dim)?;
        for (def, v) in defs.iter().zip(found) {
            let v = v.expect("every slot filled");
            if v.is_zero() {
                return Err(Error::ZeroVector(def.id.clone()));
            }
            set.insert(def.id.clone(), v)?;
        }
        Ok(set)
    }
}

/// Embeds a corpus with a freshly built provider.
pub fn embed_corpus(corpus: &Corpus, config: &ProviderConfig) -> Result<EmbeddingSet> {
    Embedder::from_config(config)?.embed_corpus(corpus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_corpus_str, DefinitionKind};
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    struct Fixed {
        out: Vec<f64>,
        calls: Arc<AtomicUsize>,
    }

    impl EmbeddingProvider for Fixed {
        fn model_id(&self) -> &str {
            "fixed"
        }
        fn embed(&self, defs: &[&Definition]) -> Result<Vec<Vec<f64>>> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            Ok(defs.iter().map(|_| self.out.clone()).collect())
        }
    }

    fn two_defs() -> Corpus {
        parse_corpus_str(
            "c",
            "{\"id\":\"a\",\"text\":\"smart city\",\"kind\":\"individual\"}\n\
             {\"id\":\"b\",\"text\":\"urban data\",\"kind\":\"individual\"}\n",
        )
        .unwrap()
    }

    #[test]
    fn vector_rejects_non_finite_and_empty() {
        assert!(matches!(
            EmbeddingVector::new(vec![1.0, f64::NAN], "m", "x"),
            Err(Error::NonFinite(_))
        ));
        assert!(matches!(
            EmbeddingVector::new(vec![f64::INFINITY], "m", "x"),
            Err(Error::NonFinite(_))
        ));
        assert!(EmbeddingVector::new(vec![], "m", "x").is_err());
    }

    #[test]
    fn cached_norm_matches() {
        let v = EmbeddingVector::new(vec![3.0, 4.0], "m", "x").unwrap();
        assert_eq!(v.norm(), 5.0);
        assert_eq!(v.dim(), 2);
    }

    #[test]
    fn set_enforces_dim() {
        let mut s = EmbeddingSet::new("m", 3).unwrap();
        assert!(matches!(
            s.insert_values("a", vec![1.0, 2.0]),
            Err(Error::DimensionMismatch {
                expected: 3,
                actual: 2,
                ..
            })
        ));
    }

    #[test]
    fn zero_vector_rejected_at_embedding_time() {
        let e = Embedder::new(Box::new(Fixed {
            out: vec![0.0, 0.0],
            calls: Arc::default(),
        }));
        assert!(matches!(e.embed_corpus(&two_defs()), Err(Error::ZeroVector(id)) if id == "a"));
    }

    #[test]
    fn cache_hits_skip_the_provider() {
        let calls = Arc::new(AtomicUsize::new(0));
        let e = Embedder::new(Box::new(Fixed {
            out: vec![1.0, 2.0],
            calls: calls.clone(),
        }));
        let c = two_defs();
        let first = e.embed_corpus(&c).unwrap();
        let second = e.embed_corpus(&c).unwrap();
        assert_eq!(first, second);
        assert_eq!(calls.load(Ordering::SeqCst), 1);
        assert_eq!(e.cached_len(), 2);

        // Edited text invalidates the entry.
        let edited = Definition::new("a", "changed", DefinitionKind::Individual, "").unwrap();
        e.embed_definitions(&[&edited]).unwrap();
        assert_eq!(calls.load(Ordering::SeqCst), 2);
    }

    #[test]
    fn config_validation() {
        let mut c = ProviderConfig::local(8);
        c.batch_size = 0;
        assert!(matches!(c.validate(), Err(Error::InvalidConfig(_))));
        let mut r = ProviderConfig::remote("", "m");
        assert!(r.validate().is_err());
        r.endpoint = None;
        assert!(r.validate().is_err());
        assert!(ProviderConfig::file(vec![]).validate().is_err());
        assert!(ProviderConfig::local(0).validate().is_err());
        assert!(ProviderConfig::remote("http://x", "m").validate().is_ok());
    }
}

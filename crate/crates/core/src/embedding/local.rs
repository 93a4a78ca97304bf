//! Hashed bag-of-words embedder.

use crate::corpus::Definition;
use crate::error::{Error, Result};

use super::{EmbeddingProvider, EmbeddingVector};

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a.
pub fn fnv1a_64(bytes: &[u8]) -> u64 {
    let mut hash = FNV_OFFSET;
    for b in bytes {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

/// Lowercased maximal runs of ASCII alphanumerics.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}

fn bucket_counts(text: &str, dim: usize) -> Vec<f64> {
    let mut counts = vec![0.0f64; dim];
    for token in tokenize(text) {
        let bucket = (fnv1a_64(token.as_bytes()) % dim as u64) as usize;
        counts[bucket] += 1.0;
    }
    counts
}

/// Unit-norm bucket-count vector of `text`. Fails with `ZeroVector` when the
/// text has no alphanumeric token.
pub fn local_deterministic_embed(text: &str, dim: usize) -> Result<EmbeddingVector> {
    embed_with_model(text, dim, &LocalHashEmbedder::model_id_for(dim), text)
}

fn embed_with_model(
    text: &str,
    dim: usize,
    model_id: &str,
    label: &str,
) -> Result<EmbeddingVector> {
    if dim == 0 {
        return Err(Error::InvalidConfig("dim must be at least 1".into()));
    }
    let counts = bucket_counts(text, dim);
    let norm = super::euclidean_norm(&counts);
    if norm == 0.0 {
        return Err(Error::ZeroVector(label.to_string()));
    }
    let unit = counts.into_iter().map(|c| c / norm).collect();
    EmbeddingVector::new(unit, model_id, label)
}

#[derive(Debug, Clone)]
pub struct LocalHashEmbedder {
    dim: usize,
    model_id: String,
}

impl LocalHashEmbedder {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidConfig("dim must be at least 1".into()));
        }
        Ok(Self {
            dim,
            model_id: Self::model_id_for(dim),
        })
    }

    pub fn model_id_for(dim: usize) -> String {
        format!("fnv1a-bow-{dim}")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

impl EmbeddingProvider for LocalHashEmbedder {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn embed(&self, defs: &[&Definition]) -> Result<Vec<Vec<f64>>> {
        defs.iter()
            .map(|d| {
                embed_with_model(&d.text, self.dim, &self.model_id, &d.id)
                    .map(|v| v.values().to_vec())
            })
            .collect()
    }
}

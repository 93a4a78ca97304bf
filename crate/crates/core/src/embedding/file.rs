//! Embedding file format: `{"model_id": ..., "dim": ..., "vectors": {id: [f64, ...]}}`.
//!
//! Floats are written in shortest round-trip form, so save followed by load
//! reproduces every value bit for bit.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::corpus::Definition;
use crate::error::{Error, Result};

use super::{EmbeddingProvider, EmbeddingSet};

#[derive(Serialize, Deserialize)]
struct FileRepr {
    model_id: String,
    dim: usize,
    vectors: IndexMap<String, Vec<f64>>,
}

pub fn load_embeddings<R: Read>(input: R) -> Result<EmbeddingSet> {
    let repr: FileRepr =
        serde_json::from_reader(input).map_err(|e| Error::MalformedFile(e.to_string()))?;
    if repr.dim == 0 {
        return Err(Error::MalformedFile("dim must be positive".into()));
    }
    let mut set = EmbeddingSet::new(repr.model_id, repr.dim)?;
    for (id, values) in repr.vectors {
        set.insert_values(id, values)?;
    }
    Ok(set)
}

pub fn load_embeddings_file(path: impl AsRef<Path>) -> Result<EmbeddingSet> {
    let file = std::fs::File::open(path.as_ref())?;
    load_embeddings(std::io::BufReader::new(file))
}

pub fn save_embeddings<W: Write>(set: &EmbeddingSet, mut out: W) -> Result<()> {
    let repr = FileRepr {
        model_id: set.model_id().to_string(),
        dim: set.dim(),
        vectors: set
            .iter()
            .map(|(id, v)| (id.to_string(), v.values().to_vec()))
            .collect(),
    };
    serde_json::to_writer(&mut out, &repr)?;
    out.write_all(b"\n")?;
    Ok(())
}

/// Serves vectors from one or more embedding files, looked up by definition id.
#[derive(Debug, Clone)]
pub struct FileProvider {
    set: EmbeddingSet,
    paths: Vec<PathBuf>,
}

impl FileProvider {
    pub fn open<P: AsRef<Path>>(paths: &[P]) -> Result<Self> {
        let mut iter = paths.iter();
        let first = iter
            .next()
            .ok_or_else(|| Error::InvalidConfig("no embedding file given".into()))?;
        let mut set = load_embeddings_file(first)?;
        for p in iter {
            let more = load_embeddings_file(p)?;
            if more.dim() != set.dim() {
                return Err(Error::DimensionMismatch {
                    expected: set.dim(),
                    actual: more.dim(),
                    context: format!("embedding file {}", p.as_ref().display()),
                });
            }
            set.extend_from(&more)?;
        }
        Ok(Self {
            set,
            paths: paths.iter().map(|p| p.as_ref().to_path_buf()).collect(),
        })
    }

    pub fn from_set(set: EmbeddingSet) -> Self {
        Self {
            set,
            paths: Vec::new(),
        }
    }

    pub fn set(&self) -> &EmbeddingSet {
        &self.set
    }

    pub fn paths(&self) -> &[PathBuf] {
        &self.paths
    }
}

impl EmbeddingProvider for FileProvider {
    fn model_id(&self) -> &str {
        self.set.model_id()
    }

    fn embed(&self, defs: &[&Definition]) -> Result<Vec<Vec<f64>>> {
        defs.iter()
            .map(|d| {
                self.set
                    .get(&d.id)
                    .map(|v| v.values().to_vec())
                    .ok_or_else(|| Error::MissingVector(d.id.clone()))
            })
            .collect()
    }
}

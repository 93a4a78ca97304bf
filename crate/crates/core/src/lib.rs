//! Consensus analysis of definition corpora over sentence embeddings.
//!
//! The pipeline: ingest JSON-lines corpora ([`corpus`]), embed each text
//! ([`embedding`]), score candidates against references by cosine similarity
//! ([`similarity`]), rank candidates by their mean score and judge new
//! proposals against the accumulated corpus ([`consensus`]). Candidate
//! composites can be produced by a chat-completion service ([`generation`]).

pub mod consensus;
pub mod corpus;
pub mod embedding;
pub mod error;
pub mod fixtures;
pub mod generation;
mod http;
pub mod similarity;

pub use consensus::{
    average_similarity, evaluate_new, evolve, pairwise_table, rank, ConsensusReport, ConsensusRow,
    EvaluationResult, EvaluationSettings, SelfExclusion,
};
pub use corpus::{parse_corpus, Corpus, Definition, DefinitionKind};
pub use embedding::{
    embed_corpus, load_embeddings, local_deterministic_embed, save_embeddings, Embedder,
    EmbeddingSet, EmbeddingVector, ProviderConfig, ProviderKind,
};
pub use error::{Error, Result};
pub use generation::{generate_composites, mock_generate, GenerationConfig, PromptBundle};
pub use similarity::{cosine, matrix, SimilarityMatrix, SimilarityScore};

//! Embedding arithmetic and set-diversity statistics.
//!
//! All reductions accumulate in `f64` whatever the storage scalar is.

mod diversity;
mod embedding;
pub mod embfile;
mod kmeans;

pub use diversity::{
    cluster_separation, cluster_separation_with, cosine_similarity, diversity_report,
    mean_embedding, mean_pairwise_cosine_distance, DiversityReport, DEFAULT_SEPARATION_CAP,
};
pub use embedding::{Embedding, EMBEDDING_DIM};
pub use kmeans::{kmeans2, kmeans2_with, lloyd_run, KMeans2, KMeansConfig, LloydRun};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VecMathError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("embedding contains a non-finite value at index {index}")]
    NonFinite { index: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),
    #[error("insufficient data: need at least {needed} embeddings, got {got}")]
    InsufficientData { needed: usize, got: usize },
}

pub type Result<T, E = VecMathError> = std::result::Result<T, E>;

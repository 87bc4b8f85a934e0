//! Embedding providers.
//!
//! Actual neural embedding computation is external; the harness only needs a
//! provider interface plus a deterministic mock (hash-seeded pseudo-embedding)
//! so the embedding-based similarity metric is testable offline.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed::stable_hash64;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("embedding provider unavailable: {0}")]
    Unavailable(String),
}

pub trait EmbeddingProvider: Send + Sync {
    fn id(&self) -> &str;
    fn dimension(&self) -> usize;
    fn embed(&self, text: &str) -> Result<Vec<f64>, EmbedError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EmbeddingConfig {
    Mock {
        #[serde(default = "default_dimension")]
        dimension: usize,
    },
}

fn default_dimension() -> usize {
    64
}

impl EmbeddingConfig {
    pub fn build(&self) -> Box<dyn EmbeddingProvider> {
        match self {
            EmbeddingConfig::Mock { dimension } => Box::new(MockEmbedder::new(*dimension)),
        }
    }
}

/// Unit-norm Gaussian vector seeded by the text hash. Identical texts map to
/// identical vectors; distinct texts are almost surely non-parallel.
pub struct MockEmbedder {
    dimension: usize,
}

impl MockEmbedder {
    pub fn new(dimension: usize) -> Self {
        MockEmbedder {
            dimension: dimension.max(2),
        }
    }
}

impl EmbeddingProvider for MockEmbedder {
    fn id(&self) -> &str {
        "mock-embedder"
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, EmbedError> {
        let mut rng = ChaCha8Rng::seed_from_u64(stable_hash64(text));
        let mut v: Vec<f64> = (0..self.dimension).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            for x in &mut v {
                *x /= norm;
            }
        }
        Ok(v)
    }
}

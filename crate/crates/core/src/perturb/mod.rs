//! Perturbation generation and management.
//!
//! Task-level perturbations come from predefined pools (roles, strategical
//! instructions, and the jabberwocky nonsense-text control). Query-level
//! perturbations are produced by thinker models: solution-idea collection in
//! Single/Dual/Diverse variants, question rephrasing, and back-translation.
//! Single vs Dual vs Diverse is configuration, not code paths: they differ
//! only in which backend handles are passed in.

mod ideas;
mod pool;
mod rephrase;

pub use ideas::{
    collect_ideas, collect_ideas_diverse, parse_idea_list, CollectOptions, CollectionStats, IdeaSet,
};
pub use pool::{
    bundled_instructions, bundled_jabberwocky, bundled_roles, resolve_pool, PerturbationPool,
    PoolKind,
};
pub use rephrase::{back_translate, rephrase, RephraseOptions};

use thiserror::Error;

use crate::backends::BackendError;

#[derive(Debug, Error)]
pub enum PerturbError {
    #[error("pool {pool}: {message}")]
    PoolFormat { pool: String, message: String },
    #[error("pool {pool}: entries must be non-empty and distinct (duplicate: {entry:?})")]
    PoolDuplicate { pool: String, entry: String },
    #[error("pool {pool}: no entries")]
    PoolEmpty { pool: String },
    #[error("idea collection aborted after {consecutive_failures} consecutive failed batches")]
    CollectionFailed { consecutive_failures: u32 },
    #[error("no ideas parseable from reply")]
    ParseFailed,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("rephrase failed: {0}")]
    RephraseFailed(String),
    #[error("back-translation hop {hop} failed: {message}")]
    BackTranslationFailed { hop: u8, message: String },
    #[error("back-translation pivot {0:?} equals the source language")]
    InvalidPivot(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Prompt asking a thinker for `num` solution ideas in bracketed-list format.
pub fn idea_prompt(task: &str, num: usize) -> String {
    include_str!("assets/idea_prompt.txt")
        .replace("{num}", &num.to_string())
        .replace("{task}", task)
}

pub fn rephrase_prompt(question: &str) -> String {
    include_str!("assets/rephrase_prompt.txt").replace("{question}", question)
}

pub fn translate_prompt(language: &str, text: &str) -> String {
    include_str!("assets/translate_prompt.txt")
        .replace("{language}", language)
        .replace("{text}", text)
}

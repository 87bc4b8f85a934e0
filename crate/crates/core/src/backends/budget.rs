//! Token budget accounting.
//!
//! The ledger totals must equal the sum over persisted attempt records
//! exactly (integer arithmetic); they feed token/performance trade-off
//! curves.

use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use super::CompletionReply;

#[derive(Debug, Default)]
pub struct BudgetLedger {
    prompt_tokens: AtomicU64,
    completion_tokens: AtomicU64,
    replies: AtomicU64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetTotals {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub replies: u64,
}

impl BudgetLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&self, reply: &CompletionReply) {
        self.prompt_tokens.fetch_add(reply.prompt_tokens, Ordering::Relaxed);
        self.completion_tokens
            .fetch_add(reply.completion_tokens, Ordering::Relaxed);
        self.replies.fetch_add(1, Ordering::Relaxed);
    }

    pub fn totals(&self) -> BudgetTotals {
        BudgetTotals {
            prompt_tokens: self.prompt_tokens.load(Ordering::Relaxed),
            completion_tokens: self.completion_tokens.load(Ordering::Relaxed),
            replies: self.replies.load(Ordering::Relaxed),
        }
    }
}

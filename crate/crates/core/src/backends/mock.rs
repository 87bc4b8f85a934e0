//! Deterministic mock solver.
//!
//! Emits the task's correct answer with a configured probability, optionally
//! shifted in log-odds by the attempt's perturbation kind. All randomness is
//! a pure function of (task id, request seed), so runs replay exactly.

use std::collections::BTreeMap;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::input::PerturbationKind;
use crate::mode::DecodingMode;
use crate::seed::{mix64, stable_hash64};

use super::{approx_token_count, Backend, BackendError, CompletionReply, CompletionRequest};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockTaskSpec {
    /// Question text, used to resolve which task a request is about.
    pub question: String,
    pub success_probability: f64,
    pub correct_answer: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockSolverSpec {
    pub tasks: BTreeMap<String, MockTaskSpec>,
    /// Additive log-odds shift applied when the mode carries a perturbation
    /// of the given kind.
    #[serde(default)]
    pub perturbation_sensitivity: BTreeMap<PerturbationKind, f64>,
    /// How many distinct wrong answers the incorrect-answer scheme draws from.
    #[serde(default = "default_wrong_variety")]
    pub wrong_answer_variety: u32,
}

fn default_wrong_variety() -> u32 {
    3
}

impl MockSolverSpec {
    pub fn uniform(tasks: impl IntoIterator<Item = (String, String, String)>, p: f64) -> Self {
        MockSolverSpec {
            tasks: tasks
                .into_iter()
                .map(|(id, question, answer)| {
                    (
                        id,
                        MockTaskSpec {
                            question,
                            success_probability: p,
                            correct_answer: answer,
                        },
                    )
                })
                .collect(),
            perturbation_sensitivity: BTreeMap::new(),
            wrong_answer_variety: default_wrong_variety(),
        }
    }
}

pub struct MockSolver {
    spec: MockSolverSpec,
}

impl MockSolver {
    pub fn new(spec: MockSolverSpec) -> Self {
        MockSolver { spec }
    }

    /// Resolve the task whose question appears in the rendered prompt; the
    /// longest match wins when questions nest.
    fn resolve_task(&self, rendered_prompt: &str) -> Option<(&str, &MockTaskSpec)> {
        self.spec
            .tasks
            .iter()
            .filter(|(_, t)| rendered_prompt.contains(&t.question))
            .max_by_key(|(_, t)| t.question.len())
            .map(|(id, t)| (id.as_str(), t))
    }

    fn shifted_probability(&self, p: f64, mode: &DecodingMode) -> f64 {
        let shift = mode
            .xi
            .as_ref()
            .and_then(|xi| self.spec.perturbation_sensitivity.get(&xi.kind))
            .copied()
            .unwrap_or(0.0);
        if shift == 0.0 {
            return p.clamp(0.0, 1.0);
        }
        // Degenerate probabilities are fixed points of any log-odds shift.
        if p <= 0.0 {
            return 0.0;
        }
        if p >= 1.0 {
            return 1.0;
        }
        let logit = (p / (1.0 - p)).ln() + shift;
        (1.0 / (1.0 + (-logit).exp())).clamp(0.0, 1.0)
    }

    pub fn mock_complete(
        &self,
        request: &CompletionRequest,
        mode: &DecodingMode,
    ) -> Result<CompletionReply, BackendError> {
        let (task_id, task) = self
            .resolve_task(&request.rendered_prompt)
            .ok_or(BackendError::TaskNotCovered)?;
        let p = self.shifted_probability(task.success_probability, mode);
        let mut rng = ChaCha8Rng::seed_from_u64(mix64(stable_hash64(task_id) ^ request.seed));
        let correct = rng.gen::<f64>() < p;
        let text = if correct {
            task.correct_answer.clone()
        } else {
            let variety = self.spec.wrong_answer_variety.max(1);
            let mut wrong = format!("wrong-{}", rng.gen_range(0..variety));
            if wrong == task.correct_answer {
                wrong.push_str("-x");
            }
            wrong
        };
        Ok(CompletionReply {
            prompt_tokens: approx_token_count(&request.rendered_prompt),
            completion_tokens: approx_token_count(&text),
            text,
            cached: false,
        })
    }
}

impl Backend for MockSolver {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionReply, BackendError> {
        let mode = DecodingMode::baseline(request.seed, request.temperature);
        self.mock_complete(request, &mode)
    }

    fn complete_with_mode(
        &self,
        request: &CompletionRequest,
        mode: &DecodingMode,
    ) -> Result<CompletionReply, BackendError> {
        self.mock_complete(request, mode)
    }
}

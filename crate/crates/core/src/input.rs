//! Combined inputs and perturbations.
//!
//! A combined input is the concatenation of instruction prompt and question,
//! optionally carrying one injected perturbation. The rendered string is a
//! pure function of the other fields, and the question always appears in it
//! verbatim as a contiguous substring.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Separator between prompt, perturbation, and question segments.
pub const SEGMENT_SEPARATOR: &str = "\n\n";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationKind {
    Role,
    Instruction,
    Jabberwocky,
    Idea,
    Rephrase,
    BackTranslation,
}

impl PerturbationKind {
    /// Task-level kinds are sampled from predefined pools.
    pub fn is_pool_kind(self) -> bool {
        matches!(
            self,
            PerturbationKind::Role | PerturbationKind::Instruction | PerturbationKind::Jabberwocky
        )
    }

    /// Rephrasing kinds replace the question instead of being injected.
    pub fn replaces_question(self) -> bool {
        matches!(
            self,
            PerturbationKind::Rephrase | PerturbationKind::BackTranslation
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PerturbationSource {
    Pool,
    Thinker { model_id: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Perturbation {
    pub kind: PerturbationKind,
    pub text: String,
    pub source: PerturbationSource,
    /// Position in the originating pool or idea set.
    pub index: usize,
}

impl Perturbation {
    pub fn validate(&self) -> Result<(), InputError> {
        if self.text.is_empty() {
            return Err(InputError::EmptyPerturbation);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    Prefix,
    Suffix,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum InputError {
    #[error("prompt must be non-empty")]
    EmptyPrompt,
    #[error("question must be non-empty")]
    EmptyQuestion,
    #[error("perturbation text must be non-empty")]
    EmptyPerturbation,
    #[error("input already carries a perturbation; one injection per attempt")]
    AlreadyPerturbed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CombinedInput {
    pub base_prompt: String,
    pub question: String,
    pub perturbation: Option<Perturbation>,
    /// Final string sent to the solver.
    pub rendered: String,
}

/// Build the unperturbed combined input `[prompt, question]`.
pub fn make_input(prompt: &str, question: &str) -> Result<CombinedInput, InputError> {
    if prompt.is_empty() {
        return Err(InputError::EmptyPrompt);
    }
    if question.is_empty() {
        return Err(InputError::EmptyQuestion);
    }
    Ok(CombinedInput {
        base_prompt: prompt.to_owned(),
        question: question.to_owned(),
        perturbation: None,
        rendered: format!("{prompt}{SEGMENT_SEPARATOR}{question}"),
    })
}

/// Inject a perturbation into an unperturbed input.
///
/// Prefix placement puts the perturbation before the prompt (personas and
/// instructions precede the task); suffix puts it after the question block
/// (solution ideas follow the task). The question segment is preserved
/// verbatim either way.
pub fn inject(
    input: &CombinedInput,
    pert: Perturbation,
    placement: Placement,
) -> Result<CombinedInput, InputError> {
    if input.perturbation.is_some() {
        return Err(InputError::AlreadyPerturbed);
    }
    pert.validate()?;
    let rendered = match placement {
        Placement::Prefix => format!(
            "{}{SEGMENT_SEPARATOR}{}{SEGMENT_SEPARATOR}{}",
            pert.text, input.base_prompt, input.question
        ),
        Placement::Suffix => format!(
            "{}{SEGMENT_SEPARATOR}{}{SEGMENT_SEPARATOR}{}",
            input.base_prompt, input.question, pert.text
        ),
    };
    Ok(CombinedInput {
        base_prompt: input.base_prompt.clone(),
        question: input.question.clone(),
        perturbation: Some(pert),
        rendered,
    })
}

/// Build an input whose question was replaced by a rephrasing perturbation
/// (the perturbation text *is* the new question).
pub fn make_rephrased(prompt: &str, pert: Perturbation) -> Result<CombinedInput, InputError> {
    pert.validate()?;
    debug_assert!(pert.kind.replaces_question());
    let mut input = make_input(prompt, &pert.text)?;
    input.perturbation = Some(pert);
    Ok(input)
}

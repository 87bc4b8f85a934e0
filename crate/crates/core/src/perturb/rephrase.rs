//! Question rephrasing and back-translation.
//!
//! Both strategies produce a modified question q' that replaces q downstream;
//! the instruction prompt p is left untouched.

use crate::backends::BackendHandle;
use crate::seed::derive_call_seed;

use super::{rephrase_prompt, translate_prompt, PerturbError};

#[derive(Debug, Clone)]
pub struct RephraseOptions {
    pub temperature: f64,
    pub max_tokens: u32,
    pub base_seed: u64,
    /// Language tag the original question is written in.
    pub source_language: String,
}

impl Default for RephraseOptions {
    fn default() -> Self {
        RephraseOptions {
            temperature: 0.6,
            max_tokens: 1024,
            base_seed: 0,
            source_language: "en".into(),
        }
    }
}

/// Restate the question via the rephraser backend.
pub fn rephrase(
    rephraser: &BackendHandle,
    question: &str,
    call_index: u64,
    opts: &RephraseOptions,
) -> Result<String, PerturbError> {
    if question.is_empty() {
        return Err(PerturbError::InvalidArgument("question must be non-empty".into()));
    }
    let seed = derive_call_seed(opts.base_seed, question, "rephrase", call_index);
    let request = rephraser.request(&rephrase_prompt(question), opts.temperature, seed, opts.max_tokens);
    let reply = rephraser
        .complete(&request)
        .map_err(|e| PerturbError::RephraseFailed(e.to_string()))?;
    let text = reply.text.trim().to_owned();
    if text.is_empty() {
        return Err(PerturbError::RephraseFailed("empty reply".into()));
    }
    Ok(text)
}

/// Two sequential translation hops: source → pivot → source.
pub fn back_translate(
    translator: &BackendHandle,
    question: &str,
    pivot_language: &str,
    call_index: u64,
    opts: &RephraseOptions,
) -> Result<String, PerturbError> {
    if pivot_language == opts.source_language {
        return Err(PerturbError::InvalidPivot(pivot_language.to_owned()));
    }
    let mut text = question.to_owned();
    for (hop, target) in [(1u8, pivot_language), (2u8, opts.source_language.as_str())] {
        let seed = derive_call_seed(opts.base_seed, question, "back_translate", call_index * 2 + u64::from(hop));
        let request = translator.request(&translate_prompt(target, &text), opts.temperature, seed, opts.max_tokens);
        let reply = translator
            .complete(&request)
            .map_err(|e| PerturbError::BackTranslationFailed {
                hop,
                message: e.to_string(),
            })?;
        text = reply.text.trim().to_owned();
        if text.is_empty() {
            return Err(PerturbError::BackTranslationFailed {
                hop,
                message: "empty reply".into(),
            });
        }
    }
    Ok(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::{BackendHandle, ScriptedBackend};
    use std::sync::Arc;

    fn handle(backend: ScriptedBackend) -> (BackendHandle, Arc<ScriptedBackend>) {
        let backend = Arc::new(backend);
        (
            BackendHandle::new("b", "m", backend.clone() as Arc<_>),
            backend,
        )
    }

    #[test]
    fn fixed_rephraser_returns_fixed_string() {
        let (h, _) = handle(ScriptedBackend::fixed("the restated question"));
        let out = rephrase(&h, "original", 0, &RephraseOptions::default()).unwrap();
        assert_eq!(out, "the restated question");
    }

    #[test]
    fn backend_error_surfaces_as_rephrase_failed() {
        let (h, _) = handle(ScriptedBackend::sequence(vec![Err("down".into())]));
        let err = rephrase(&h, "q", 0, &RephraseOptions::default()).unwrap_err();
        assert!(matches!(err, PerturbError::RephraseFailed(_)));
    }

    #[test]
    fn empty_reply_is_rephrase_failed() {
        let (h, _) = handle(ScriptedBackend::fixed(""));
        assert!(matches!(
            rephrase(&h, "q", 0, &RephraseOptions::default()),
            Err(PerturbError::RephraseFailed(_))
        ));
    }

    #[test]
    fn back_translation_makes_exactly_two_calls() {
        let (h, backend) = handle(ScriptedBackend::fixed("text"));
        back_translate(&h, "q", "zh", 0, &RephraseOptions::default()).unwrap();
        assert_eq!(backend.call_count(), 2);
    }

    #[test]
    fn involution_mock_round_trips() {
        // A translator that echoes its input: two hops return the question.
        let (h, _) = handle(ScriptedBackend::sequence(vec![Ok("q zh".into()), Ok("q".into())]));
        let out = back_translate(&h, "q", "zh", 0, &RephraseOptions::default()).unwrap();
        assert_eq!(out, "q");
    }

    #[test]
    fn second_hop_failure_carries_hop_index() {
        let (h, _) = handle(ScriptedBackend::sequence(vec![Ok("pivot text".into()), Err("down".into())]));
        let err = back_translate(&h, "q", "zh", 0, &RephraseOptions::default()).unwrap_err();
        assert!(matches!(err, PerturbError::BackTranslationFailed { hop: 2, .. }));
    }

    #[test]
    fn pivot_equal_to_source_rejected() {
        let (h, _) = handle(ScriptedBackend::fixed("x"));
        assert!(matches!(
            back_translate(&h, "q", "en", 0, &RephraseOptions::default()),
            Err(PerturbError::InvalidPivot(_))
        ));
    }
}

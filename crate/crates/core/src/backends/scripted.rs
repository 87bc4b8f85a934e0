//! Canned-reply backend for offline scenarios and tests.

use std::collections::VecDeque;
use std::sync::Mutex;

use crate::seed::mix64;

use super::{approx_token_count, Backend, BackendError, CompletionReply, CompletionRequest};

enum Script {
    /// Consume replies in order; an exhausted script is unavailable.
    /// Single-threaded test use only.
    Sequence(Mutex<VecDeque<Result<String, String>>>),
    /// Reply chosen by request seed: a pure function of the request, safe
    /// under concurrency and exact on resume.
    ByRequest(Vec<String>),
}

pub struct ScriptedBackend {
    script: Script,
    calls: Mutex<Vec<CompletionRequest>>,
}

impl ScriptedBackend {
    /// Always reply with the same text.
    pub fn fixed(text: impl Into<String>) -> Self {
        ScriptedBackend {
            script: Script::ByRequest(vec![text.into()]),
            calls: Mutex::new(Vec::new()),
        }
    }

    pub fn by_request(replies: Vec<String>) -> Self {
        ScriptedBackend {
            script: Script::ByRequest(replies),
            calls: Mutex::new(Vec::new()),
        }
    }

    /// Scripted sequence of replies; `Err(message)` entries surface as
    /// backend-unavailable errors.
    pub fn sequence(replies: Vec<Result<String, String>>) -> Self {
        ScriptedBackend {
            script: Script::Sequence(Mutex::new(replies.into())),
            calls: Mutex::new(Vec::new()),
        }
    }

    pub fn call_count(&self) -> usize {
        self.calls.lock().unwrap().len()
    }

    pub fn calls(&self) -> Vec<CompletionRequest> {
        self.calls.lock().unwrap().clone()
    }
}

impl Backend for ScriptedBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionReply, BackendError> {
        self.calls.lock().unwrap().push(request.clone());
        let text = match &self.script {
            Script::Sequence(queue) => match queue.lock().unwrap().pop_front() {
                Some(Ok(text)) => text,
                Some(Err(message)) => {
                    return Err(BackendError::Unavailable {
                        retries: 0,
                        message,
                    })
                }
                None => {
                    return Err(BackendError::Unavailable {
                        retries: 0,
                        message: "scripted replies exhausted".into(),
                    })
                }
            },
            Script::ByRequest(replies) => {
                if replies.is_empty() {
                    return Err(BackendError::Unavailable {
                        retries: 0,
                        message: "no scripted replies configured".into(),
                    });
                }
                replies[(mix64(request.seed) % replies.len() as u64) as usize].clone()
            }
        };
        Ok(CompletionReply {
            prompt_tokens: approx_token_count(&request.rendered_prompt),
            completion_tokens: approx_token_count(&text),
            text,
            cached: false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn request(seed: u64) -> CompletionRequest {
        CompletionRequest {
            backend_id: "s".into(),
            model_id: "m".into(),
            rendered_prompt: "p".into(),
            temperature: 0.0,
            seed,
            max_tokens: 16,
        }
    }

    #[test]
    fn sequence_consumes_in_order() {
        let backend = ScriptedBackend::sequence(vec![Ok("a".into()), Err("down".into()), Ok("b".into())]);
        assert_eq!(backend.complete(&request(0)).unwrap().text, "a");
        assert!(backend.complete(&request(1)).is_err());
        assert_eq!(backend.complete(&request(2)).unwrap().text, "b");
        assert_eq!(backend.call_count(), 3);
    }

    #[test]
    fn by_request_is_pure_in_the_seed() {
        let backend = ScriptedBackend::by_request(vec!["x".into(), "y".into(), "z".into()]);
        let a = backend.complete(&request(41)).unwrap().text;
        let b = backend.complete(&request(41)).unwrap().text;
        assert_eq!(a, b);
    }
}

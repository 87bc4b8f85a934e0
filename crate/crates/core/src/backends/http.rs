//! Chat-completions HTTP client.
//!
//! Speaks the de-facto wire protocol: POST `{base_url}/chat/completions`,
//! bearer token from an environment variable, one user message carrying the
//! rendered prompt, usage read from the `usage` block. Transient failures
//! (timeouts, 429, 5xx) retry with exponential backoff. Nucleus-sampling
//! fields are deliberately never sent; provider defaults apply.

use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{Backend, BackendError, CompletionReply, CompletionRequest, Telemetry};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HttpConfig {
    pub base_url: String,
    pub model: String,
    /// Environment variable holding the bearer token.
    #[serde(default = "default_api_key_env")]
    pub api_key_env: String,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    #[serde(default = "default_backoff_ms")]
    pub initial_backoff_ms: u64,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
}

fn default_api_key_env() -> String {
    "OPENAI_API_KEY".into()
}
fn default_max_retries() -> u32 {
    3
}
fn default_backoff_ms() -> u64 {
    250
}
fn default_timeout_secs() -> u64 {
    60
}

pub struct HttpBackend {
    config: HttpConfig,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
    telemetry: Arc<Telemetry>,
}

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    messages: [WireMessage<'a>; 1],
    temperature: f64,
    max_tokens: u32,
    seed: u64,
}

#[derive(Serialize)]
struct WireMessage<'a> {
    role: &'static str,
    content: &'a str,
}

#[derive(Deserialize)]
struct WireReply {
    choices: Vec<WireChoice>,
    #[serde(default)]
    usage: Option<WireUsage>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireReplyMessage,
}

#[derive(Deserialize)]
struct WireReplyMessage {
    content: String,
}

#[derive(Deserialize, Default)]
struct WireUsage {
    #[serde(default)]
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
}

enum Attempt {
    Done(Result<CompletionReply, BackendError>),
    Retry(String),
}

impl HttpBackend {
    pub fn new(config: HttpConfig, telemetry: Arc<Telemetry>) -> Result<Self, BackendError> {
        let api_key = std::env::var(&config.api_key_env).ok();
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| BackendError::Protocol(format!("building http client: {e}")))?;
        Ok(HttpBackend {
            config,
            api_key,
            client,
            telemetry,
        })
    }

    fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'))
    }

    fn attempt(&self, request: &CompletionRequest) -> Attempt {
        let body = WireRequest {
            model: &request.model_id,
            messages: [WireMessage {
                role: "user",
                content: &request.rendered_prompt,
            }],
            temperature: request.temperature,
            max_tokens: request.max_tokens,
            seed: request.seed,
        };
        let mut builder = self.client.post(self.endpoint()).json(&body);
        if let Some(key) = &self.api_key {
            builder = builder.bearer_auth(key);
        }
        let response = match builder.send() {
            Ok(r) => r,
            Err(e) if e.is_timeout() || e.is_connect() => return Attempt::Retry(e.to_string()),
            Err(e) => return Attempt::Done(Err(BackendError::Protocol(e.to_string()))),
        };
        let status = response.status();
        if status.as_u16() == 429 || status.is_server_error() {
            return Attempt::Retry(format!("status {status}"));
        }
        if !status.is_success() {
            return Attempt::Done(Err(BackendError::Unavailable {
                retries: 0,
                message: format!("status {status}"),
            }));
        }
        let wire: WireReply = match response.json() {
            Ok(w) => w,
            Err(e) => return Attempt::Done(Err(BackendError::Protocol(format!("decoding reply: {e}")))),
        };
        let Some(choice) = wire.choices.into_iter().next() else {
            return Attempt::Done(Err(BackendError::Protocol("reply carries no choices".into())));
        };
        if choice.message.content.is_empty() {
            return Attempt::Done(Err(BackendError::Protocol("empty completion text".into())));
        }
        let usage = wire.usage.unwrap_or_default();
        Attempt::Done(Ok(CompletionReply {
            text: choice.message.content,
            prompt_tokens: usage.prompt_tokens,
            completion_tokens: usage.completion_tokens,
            cached: false,
        }))
    }
}

impl Backend for HttpBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionReply, BackendError> {
        let mut backoff = Duration::from_millis(self.config.initial_backoff_ms);
        let mut last_message = String::new();
        for retry in 0..=self.config.max_retries {
            if retry > 0 {
                self.telemetry.retries.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                std::thread::sleep(backoff);
                backoff *= 2;
            }
            match self.attempt(request) {
                Attempt::Done(result) => return result,
                Attempt::Retry(message) => {
                    log::warn!("backend {} transient failure: {message}", request.backend_id);
                    last_message = message;
                }
            }
        }
        Err(BackendError::Unavailable {
            retries: self.config.max_retries,
            message: last_message,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{Read, Write};
    use std::net::TcpListener;

    /// Minimal one-shot HTTP server: answers each connection with the next
    /// canned (status, body) pair.
    fn serve(responses: Vec<(u16, String)>) -> String {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        std::thread::spawn(move || {
            for (status, body) in responses {
                let (mut stream, _) = listener.accept().unwrap();
                let mut buf = [0u8; 65536];
                let mut read = 0;
                // Read until the end of the request body (headers + declared length).
                loop {
                    let n = stream.read(&mut buf[read..]).unwrap();
                    read += n;
                    let text = String::from_utf8_lossy(&buf[..read]);
                    if let Some(header_end) = text.find("\r\n\r\n") {
                        let content_length = text
                            .lines()
                            .find_map(|l| l.to_ascii_lowercase().strip_prefix("content-length:").map(|v| v.trim().parse::<usize>().unwrap()))
                            .unwrap_or(0);
                        if read >= header_end + 4 + content_length {
                            break;
                        }
                    }
                    if n == 0 {
                        break;
                    }
                }
                let reason = if status == 200 { "OK" } else { "ERR" };
                let reply = format!(
                    "HTTP/1.1 {status} {reason}\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                    body.len()
                );
                stream.write_all(reply.as_bytes()).unwrap();
            }
        });
        format!("http://{addr}")
    }

    fn ok_body(text: &str) -> String {
        serde_json::json!({
            "choices": [{"message": {"role": "assistant", "content": text}}],
            "usage": {"prompt_tokens": 7, "completion_tokens": 2}
        })
        .to_string()
    }

    fn backend(base_url: String) -> HttpBackend {
        let config = HttpConfig {
            base_url,
            model: "test-model".into(),
            api_key_env: "DIVBON_TEST_NO_SUCH_KEY".into(),
            max_retries: 2,
            initial_backoff_ms: 1,
            timeout_secs: 5,
        };
        HttpBackend::new(config, Arc::new(Telemetry::default())).unwrap()
    }

    fn request() -> CompletionRequest {
        CompletionRequest {
            backend_id: "http0".into(),
            model_id: "test-model".into(),
            rendered_prompt: "hello".into(),
            temperature: 0.6,
            seed: 11,
            max_tokens: 32,
        }
    }

    #[test]
    fn parses_reply_and_usage() {
        let url = serve(vec![(200, ok_body("world"))]);
        let reply = backend(url).complete(&request()).unwrap();
        assert_eq!(reply.text, "world");
        assert_eq!(reply.prompt_tokens, 7);
        assert_eq!(reply.completion_tokens, 2);
    }

    #[test]
    fn rate_limit_then_success_counts_one_retry() {
        let url = serve(vec![(429, "{}".into()), (200, ok_body("ok"))]);
        let config = HttpConfig {
            base_url: url,
            model: "test-model".into(),
            api_key_env: "DIVBON_TEST_NO_SUCH_KEY".into(),
            max_retries: 3,
            initial_backoff_ms: 1,
            timeout_secs: 5,
        };
        let telemetry = Arc::new(Telemetry::default());
        let backend = HttpBackend::new(config, telemetry.clone()).unwrap();
        let reply = backend.complete(&request()).unwrap();
        assert_eq!(reply.text, "ok");
        assert_eq!(telemetry.retries(), 1);
    }

    #[test]
    fn exhausted_retries_is_unavailable() {
        let url = serve(vec![(500, "{}".into()), (500, "{}".into()), (500, "{}".into())]);
        let result = backend(url).complete(&request());
        assert!(matches!(result, Err(BackendError::Unavailable { retries: 2, .. })));
    }

    #[test]
    fn malformed_body_is_a_protocol_error() {
        let url = serve(vec![(200, "not json".into())]);
        assert!(matches!(
            backend(url).complete(&request()),
            Err(BackendError::Protocol(_))
        ));
    }
}

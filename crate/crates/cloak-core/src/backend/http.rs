//! OpenAI-compatible chat-completions client with bounded retry.
//!
//! Transport-level failures are retried with exponential backoff; a
//! reachable endpoint answering with a non-2xx status is terminal.

use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};

use super::{AuditLog, BackendConfig, ChatBackend, ChatMessage, GenerationParams, SpaceLabel};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub initial_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { max_attempts: 3, initial_backoff: Duration::from_secs(1) }
    }
}

impl RetryPolicy {
    /// Backoff before attempt `attempt + 1`, doubling each time.
    fn backoff(&self, attempt: u32) -> Duration {
        self.initial_backoff * 2u32.saturating_pow(attempt.saturating_sub(1))
    }
}

pub struct HttpBackend {
    name: String,
    config: BackendConfig,
    params: GenerationParams,
    api_key: Option<String>,
    retry: RetryPolicy,
    client: reqwest::Client,
    audit: Arc<AuditLog>,
}

impl HttpBackend {
    /// Build a client for the configured endpoint. Fails fast when the
    /// named API-key environment variable is unset.
    pub fn new(name: impl Into<String>, config: BackendConfig, audit: Arc<AuditLog>) -> Result<Self> {
        config.validate()?;
        let api_key = match &config.api_key_env_var {
            Some(var) => Some(std::env::var(var).map_err(|_| {
                Error::Config(format!("environment variable {var} is not set"))
            })?),
            None => None,
        };
        let params = config.resolved_params();
        Ok(Self {
            name: name.into(),
            config,
            params,
            api_key,
            retry: RetryPolicy::default(),
            client: reqwest::Client::new(),
            audit,
        })
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: &'a [ChatMessage],
    temperature: f64,
    top_p: f64,
    max_tokens: u32,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    content: Option<String>,
}

#[async_trait]
impl ChatBackend for HttpBackend {
    fn space(&self) -> SpaceLabel {
        self.config.space
    }

    fn name(&self) -> &str {
        &self.name
    }

    async fn complete(&self, messages: &[ChatMessage]) -> Result<String> {
        let body = ChatRequest {
            model: &self.config.model_name,
            messages,
            temperature: self.params.temperature,
            top_p: self.params.top_p,
            max_tokens: self.params.max_new_tokens,
        };
        let mut attempt = 0u32;
        loop {
            attempt += 1;
            let mut req = self.client.post(&self.config.endpoint_url).json(&body);
            if let Some(key) = &self.api_key {
                req = req.bearer_auth(key);
            }
            match req.send().await {
                Ok(resp) => {
                    let status = resp.status();
                    let text = resp.text().await.unwrap_or_default();
                    if !status.is_success() {
                        return Err(Error::Status {
                            status: status.as_u16(),
                            body: Error::excerpt(&text),
                        });
                    }
                    let parsed: ChatResponse = serde_json::from_str(&text).map_err(|e| {
                        Error::Protocol(format!(
                            "malformed completion payload from {}: {e}: {}",
                            self.config.endpoint_url,
                            Error::excerpt(&text)
                        ))
                    })?;
                    let content = parsed
                        .choices
                        .into_iter()
                        .next()
                        .and_then(|c| c.message.content)
                        .ok_or_else(|| {
                            Error::Protocol(format!(
                                "completion payload from {} has no message content",
                                self.config.endpoint_url
                            ))
                        })?;
                    self.audit.record(self.config.space, &self.name, messages, &content);
                    return Ok(content);
                }
                Err(e) if attempt < self.retry.max_attempts => {
                    tokio::time::sleep(self.retry.backoff(attempt)).await;
                    let _ = e;
                }
                Err(e) => {
                    return Err(Error::Transport { attempts: attempt, message: e.to_string() });
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::net::SocketAddr;
    use tokio::io::{AsyncReadExt, AsyncWriteExt};
    use tokio::net::TcpListener;

    /// Serve canned HTTP responses on a loopback socket; the first
    /// `drop_first` connections are closed without a response.
    async fn flaky_server(drop_first: usize, body: String) -> SocketAddr {
        let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
        let addr = listener.local_addr().unwrap();
        tokio::spawn(async move {
            let mut dropped = 0usize;
            loop {
                let Ok((mut sock, _)) = listener.accept().await else { break };
                if dropped < drop_first {
                    dropped += 1;
                    drop(sock);
                    continue;
                }
                let body = body.clone();
                tokio::spawn(async move {
                    let mut buf = vec![0u8; 65536];
                    let mut read = 0usize;
                    // Read until the end of the request body (best effort).
                    loop {
                        match sock.read(&mut buf[read..]).await {
                            Ok(0) => break,
                            Ok(n) => {
                                read += n;
                                let head = String::from_utf8_lossy(&buf[..read]);
                                if let Some(split) = head.find("\r\n\r\n") {
                                    let content_len = head
                                        .lines()
                                        .find_map(|l| {
                                            l.to_lowercase()
                                                .strip_prefix("content-length:")
                                                .map(|v| v.trim().parse::<usize>().unwrap_or(0))
                                        })
                                        .unwrap_or(0);
                                    if read >= split + 4 + content_len {
                                        break;
                                    }
                                }
                            }
                            Err(_) => break,
                        }
                    }
                    let resp = format!(
                        "HTTP/1.1 200 OK\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{}",
                        body.len(),
                        body
                    );
                    let _ = sock.write_all(resp.as_bytes()).await;
                    let _ = sock.shutdown().await;
                });
            }
        });
        addr
    }

    async fn status_server(status: u16, body: &'static str) -> SocketAddr {
        let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
        let addr = listener.local_addr().unwrap();
        tokio::spawn(async move {
            loop {
                let Ok((mut sock, _)) = listener.accept().await else { break };
                let mut buf = vec![0u8; 65536];
                let _ = sock.read(&mut buf).await;
                let resp = format!(
                    "HTTP/1.1 {status} X\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                    body.len()
                );
                let _ = sock.write_all(resp.as_bytes()).await;
                let _ = sock.shutdown().await;
            }
        });
        addr
    }

    fn backend_for(addr: SocketAddr, audit: Arc<AuditLog>) -> HttpBackend {
        let config = BackendConfig {
            space: SpaceLabel::Public,
            endpoint_url: format!("http://{addr}/v1/chat/completions"),
            model_name: "test-model".into(),
            api_key_env_var: None,
            params: None,
        };
        HttpBackend::new("expert", config, audit)
            .unwrap()
            .with_retry(RetryPolicy { max_attempts: 3, initial_backoff: Duration::from_millis(5) })
    }

    #[tokio::test]
    async fn retries_transport_failures_then_succeeds() {
        let reply = serde_json::json!({
            "choices": [{"message": {"role": "assistant", "content": "hi there"}}]
        })
        .to_string();
        let addr = flaky_server(2, reply).await;
        let audit = AuditLog::in_memory();
        let backend = backend_for(addr, audit.clone());
        let out = backend.complete(&[ChatMessage::user("ping")]).await.unwrap();
        assert_eq!(out, "hi there");
        // Exactly one audit entry despite two failed attempts.
        assert_eq!(audit.len(), 1);
        assert_eq!(audit.snapshot()[0].response, "hi there");
    }

    #[tokio::test]
    async fn exhausted_retries_report_attempt_count() {
        let addr = flaky_server(usize::MAX, String::new()).await;
        let audit = AuditLog::in_memory();
        let backend = backend_for(addr, audit.clone());
        match backend.complete(&[ChatMessage::user("ping")]).await {
            Err(Error::Transport { attempts, .. }) => assert_eq!(attempts, 3),
            other => panic!("expected transport error, got {other:?}"),
        }
        assert!(audit.is_empty());
    }

    #[tokio::test]
    async fn non_2xx_is_terminal_without_retry() {
        let addr = status_server(500, "{\"error\": \"boom\"}").await;
        let audit = AuditLog::in_memory();
        let backend = backend_for(addr, audit.clone());
        let start = std::time::Instant::now();
        match backend.complete(&[ChatMessage::user("ping")]).await {
            Err(Error::Status { status, body }) => {
                assert_eq!(status, 500);
                assert!(body.contains("boom"));
            }
            other => panic!("expected status error, got {other:?}"),
        }
        // No backoff sleeps happened: the failure was immediate.
        assert!(start.elapsed() < Duration::from_millis(500));
        assert!(audit.is_empty());
    }

    #[tokio::test]
    async fn missing_api_key_env_var_fails_at_construction() {
        let config = BackendConfig {
            space: SpaceLabel::Public,
            endpoint_url: "http://127.0.0.1:1/v1".into(),
            model_name: "m".into(),
            api_key_env_var: Some("CLOAK_TEST_KEY_THAT_DOES_NOT_EXIST".into()),
            params: None,
        };
        match HttpBackend::new("x", config, AuditLog::in_memory()) {
            Err(Error::Config(msg)) => assert!(msg.contains("CLOAK_TEST_KEY_THAT_DOES_NOT_EXIST")),
            other => panic!("expected config error, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn backoff_doubles() {
        let p = RetryPolicy { max_attempts: 3, initial_backoff: Duration::from_secs(1) };
        assert_eq!(p.backoff(1), Duration::from_secs(1));
        assert_eq!(p.backoff(2), Duration::from_secs(2));
        assert_eq!(p.backoff(3), Duration::from_secs(4));
    }
}

use std::collections::VecDeque;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatRequest {
    pub base_url: String,
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub timeout: Duration,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransportError {
    #[error("request timed out")]
    Timeout,
    #[error("http status {0}")]
    Status(u16),
    #[error("network error: {0}")]
    Network(String),
    #[error("malformed response: {0}")]
    BadResponse(String),
}

impl TransportError {
    pub fn retriable(&self) -> bool {
        match self {
            TransportError::Timeout | TransportError::Network(_) => true,
            TransportError::Status(s) => *s == 429 || *s >= 500,
            TransportError::BadResponse(_) => false,
        }
    }
}

/// Sends one chat request and returns the assistant's text.
pub trait Transport: Send + Sync {
    fn complete(
        &self,
        req: &ChatRequest,
        credential: Option<&str>,
    ) -> Result<String, TransportError>;
}

/// OpenAI-compatible `POST {base_url}/chat/completions`.
#[derive(Debug, Default, Clone)]
pub struct HttpTransport;

#[derive(Serialize)]
struct Body<'a> {
    model: &'a str,
    messages: &'a [ChatMessage],
}

impl Transport for HttpTransport {
    fn complete(
        &self,
        req: &ChatRequest,
        credential: Option<&str>,
    ) -> Result<String, TransportError> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(req.timeout))
            .build()
            .into();
        let url = format!("{}/chat/completions", req.base_url.trim_end_matches('/'));
        let mut call = agent.post(&url);
        if let Some(key) = credential {
            call = call.header("Authorization", &format!("Bearer {key}"));
        }
        let body = Body {
            model: &req.model,
            messages: &req.messages,
        };
        let mut resp = call.send_json(&body).map_err(|e| match e {
            ureq::Error::Timeout(_) => TransportError::Timeout,
            ureq::Error::StatusCode(s) => TransportError::Status(s),
            other => TransportError::Network(other.to_string()),
        })?;
        let v: serde_json::Value = resp
            .body_mut()
            .read_json()
            .map_err(|e| TransportError::BadResponse(e.to_string()))?;
        v.pointer("/choices/0/message/content")
            .and_then(|c| c.as_str())
            .map(str::to_string)
            .ok_or_else(|| TransportError::BadResponse("no choices[0].message.content".into()))
    }
}

/// Replays canned responses in order and records every request. Safe to
/// share between threads.
#[derive(Debug, Default)]
pub struct StubTransport {
    responses: Mutex<VecDeque<Result<String, TransportError>>>,
    fallback: Option<String>,
    calls: Mutex<Vec<(ChatRequest, Option<String>)>>,
}

impl StubTransport {
    pub fn new(responses: impl IntoIterator<Item = Result<String, TransportError>>) -> Self {
        Self {
            responses: Mutex::new(responses.into_iter().collect()),
            ..Self::default()
        }
    }

    /// Answers every request with `text`.
    pub fn always(text: impl Into<String>) -> Self {
        Self {
            fallback: Some(text.into()),
            ..Self::default()
        }
    }

    pub fn calls(&self) -> Vec<(ChatRequest, Option<String>)> {
        self.calls.lock().expect("stub lock").clone()
    }
}

impl Transport for StubTransport {
    fn complete(
        &self,
        req: &ChatRequest,
        credential: Option<&str>,
    ) -> Result<String, TransportError> {
        self.calls
            .lock()
            .expect("stub lock")
            .push((req.clone(), credential.map(str::to_string)));
        match self.responses.lock().expect("stub lock").pop_front() {
            Some(r) => r,
            None => self
                .fallback
                .clone()
                .ok_or_else(|| TransportError::Network("stub exhausted".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{Read, Write};
    use std::net::TcpListener;
    use std::sync::Arc;

    fn req(base_url: String, timeout: Duration) -> ChatRequest {
        ChatRequest {
            base_url,
            model: "m".into(),
            messages: vec![ChatMessage {
                role: "user".into(),
                content: "hi".into(),
            }],
            timeout,
        }
    }

    #[test]
    fn stub_is_thread_safe() {
        let stub = Arc::new(StubTransport::always("ok"));
        let handles: Vec<_> = (0..8)
            .map(|_| {
                let s = Arc::clone(&stub);
                std::thread::spawn(move || {
                    for _ in 0..50 {
                        s.complete(&req("x".into(), Duration::from_secs(1)), None)
                            .unwrap();
                    }
                })
            })
            .collect();
        for h in handles {
            h.join().unwrap();
        }
        assert_eq!(stub.calls().len(), 400);
    }

    // One-shot local HTTP server, no external network.
    fn serve_once(
        reply: &'static str,
        delay: Duration,
    ) -> (String, std::thread::JoinHandle<String>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let h = std::thread::spawn(move || {
            let (mut sock, _) = listener.accept().unwrap();
            let mut buf = vec![0u8; 65536];
            let mut got = Vec::new();
            sock.set_read_timeout(Some(Duration::from_millis(500)))
                .unwrap();
            while let Ok(n) = sock.read(&mut buf) {
                if n == 0 {
                    break;
                }
                got.extend_from_slice(&buf[..n]);
                let text = String::from_utf8_lossy(&got);
                if let Some(end) = text.find("\r\n\r\n") {
                    if text
                        .to_ascii_lowercase()
                        .contains("transfer-encoding: chunked")
                    {
                        if text.ends_with("0\r\n\r\n") && text.len() > end + 4 {
                            break;
                        }
                        continue;
                    }
                    let len = text
                        .lines()
                        .find_map(|l| {
                            l.to_ascii_lowercase()
                                .strip_prefix("content-length:")
                                .map(|v| v.trim().parse::<usize>().unwrap())
                        })
                        .unwrap_or(0);
                    if got.len() >= end + 4 + len {
                        break;
                    }
                }
            }
            std::thread::sleep(delay);
            let resp = format!(
                "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
                reply.len(),
                reply
            );
            let _ = sock.write_all(resp.as_bytes());
            String::from_utf8_lossy(&got).into_owned()
        });
        (format!("http://{addr}/v1"), h)
    }

    #[test]
    fn http_round_trip_on_loopback() {
        let (url, h) = serve_once(
            r#"{"choices":[{"message":{"role":"assistant","content":"hello"}}]}"#,
            Duration::ZERO,
        );
        let out = HttpTransport
            .complete(&req(url, Duration::from_secs(5)), Some("sk-test"))
            .unwrap();
        assert_eq!(out, "hello");
        let seen = h.join().unwrap();
        assert!(seen.starts_with("POST /v1/chat/completions"));
        assert!(seen.contains("Bearer sk-test"));
        let body: serde_json::Value =
            serde_json::from_str(&seen[seen.find("\r\n\r\n").unwrap() + 4..]).unwrap();
        assert_eq!(body["model"], "m");
        assert_eq!(body["messages"][0]["content"], "hi");
    }

    #[test]
    fn http_timeout() {
        let (url, h) = serve_once("{}", Duration::from_millis(1500));
        let err = HttpTransport
            .complete(&req(url, Duration::from_millis(200)), None)
            .unwrap_err();
        assert_eq!(err, TransportError::Timeout);
        assert!(err.retriable());
        h.join().unwrap();
    }

    #[test]
    fn retriable_classes() {
        assert!(TransportError::Status(503).retriable());
        assert!(TransportError::Status(429).retriable());
        assert!(!TransportError::Status(401).retriable());
        assert!(!TransportError::BadResponse("x".into()).retriable());
    }
}

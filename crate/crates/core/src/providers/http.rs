//! Live HTTP backend. Requests are POSTed as JSON in the wire shapes of
//! [`super`]; responses are parsed into the matching response type.

use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{
    check_dimensions, ChatProvider, ChatRequest, ChatResponse, EmbedRequest, EmbedResponse, EmbeddingProvider,
    RewriteProvider, RewriteRequest, RewriteResponse,
};
use crate::error::ProviderError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HttpConfig {
    pub endpoint: String,
    /// Name of the environment variable holding a bearer token.
    pub api_key_env: Option<String>,
    pub timeout_secs: u64,
    pub max_attempts: u32,
    pub backoff_ms: u64,
    pub max_in_flight: usize,
    /// Upper bound on request starts per second; 0 disables the limit.
    pub requests_per_second: f64,
}

impl Default for HttpConfig {
    fn default() -> Self {
        Self {
            endpoint: String::new(),
            api_key_env: None,
            timeout_secs: 60,
            max_attempts: 3,
            backoff_ms: 500,
            max_in_flight: 4,
            requests_per_second: 0.0,
        }
    }
}

/// Bounds concurrent requests and the rate at which they start.
#[derive(Debug)]
pub struct Throttle {
    max_in_flight: usize,
    in_flight: Mutex<usize>,
    freed: Condvar,
    interval: Option<Duration>,
    next_start: Mutex<Instant>,
}

pub struct Permit<'a>(&'a Throttle);

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut n = self.0.in_flight.lock().expect("throttle lock");
        *n -= 1;
        self.0.freed.notify_one();
    }
}

impl Throttle {
    pub fn new(max_in_flight: usize, requests_per_second: f64) -> Self {
        let interval = (requests_per_second > 0.0).then(|| Duration::from_secs_f64(1.0 / requests_per_second));
        Self {
            max_in_flight: max_in_flight.max(1),
            in_flight: Mutex::new(0),
            freed: Condvar::new(),
            interval,
            next_start: Mutex::new(Instant::now()),
        }
    }

    /// Blocks until a slot is free and the rate limit allows a start.
    pub fn acquire(&self) -> Permit<'_> {
        {
            let mut n = self.in_flight.lock().expect("throttle lock");
            while *n >= self.max_in_flight {
                n = self.freed.wait(n).expect("throttle lock");
            }
            *n += 1;
        }
        if let Some(interval) = self.interval {
            let wait = {
                let mut next = self.next_start.lock().expect("throttle lock");
                let now = Instant::now();
                let start = (*next).max(now);
                *next = start + interval;
                start - now
            };
            if !wait.is_zero() {
                thread::sleep(wait);
            }
        }
        Permit(self)
    }

    pub fn in_flight(&self) -> usize {
        *self.in_flight.lock().expect("throttle lock")
    }
}

pub struct HttpProvider {
    config: HttpConfig,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
    throttle: Throttle,
}

impl HttpProvider {
    pub fn new(config: HttpConfig) -> Result<Self, ProviderError> {
        if config.endpoint.is_empty() {
            return Err(ProviderError::Failed("http provider needs an endpoint".into()));
        }
        let api_key = match &config.api_key_env {
            Some(var) => Some(
                std::env::var(var)
                    .map_err(|_| ProviderError::Failed(format!("environment variable {var} is not set")))?,
            ),
            None => None,
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| ProviderError::Failed(e.to_string()))?;
        let throttle = Throttle::new(config.max_in_flight, config.requests_per_second);
        Ok(Self {
            config,
            api_key,
            client,
            throttle,
        })
    }

    fn post<Req: Serialize, Resp: DeserializeOwned>(&self, request: &Req) -> Result<Resp, ProviderError> {
        let attempts = self.config.max_attempts.max(1);
        let mut last_error = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                let delay = self.config.backoff_ms.saturating_mul(1 << (attempt - 1).min(16));
                thread::sleep(Duration::from_millis(delay));
            }
            let _permit = self.throttle.acquire();
            let mut builder = self.client.post(&self.config.endpoint).json(request);
            if let Some(key) = &self.api_key {
                builder = builder.bearer_auth(key);
            }
            match builder.send() {
                Ok(response) => {
                    let status = response.status();
                    if status.is_success() {
                        let body = response.text().map_err(|e| ProviderError::Malformed(e.to_string()))?;
                        return serde_json::from_str(&body).map_err(|e| ProviderError::Malformed(e.to_string()));
                    }
                    last_error = format!("http status {status}");
                    if !(status.is_server_error() || status.as_u16() == 429) {
                        break;
                    }
                    log::warn!("attempt {} of {attempts}: {last_error}", attempt + 1);
                }
                Err(e) => {
                    last_error = e.to_string();
                    log::warn!("attempt {} of {attempts}: {last_error}", attempt + 1);
                }
            }
        }
        Err(ProviderError::Transport {
            attempts,
            message: last_error,
        })
    }
}

impl ChatProvider for HttpProvider {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        self.post(request)
    }
}

impl RewriteProvider for HttpProvider {
    fn rewrite(&self, request: &RewriteRequest) -> Result<RewriteResponse, ProviderError> {
        self.post(request)
    }
}

impl EmbeddingProvider for HttpProvider {
    fn embed(&self, request: &EmbedRequest) -> Result<EmbedResponse, ProviderError> {
        let response: EmbedResponse = self.post(request)?;
        if response.vectors.len() != request.texts.len() {
            return Err(ProviderError::Malformed(format!(
                "{} texts but {} vectors",
                request.texts.len(),
                response.vectors.len()
            )));
        }
        check_dimensions(&response.vectors)?;
        Ok(response)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::providers::ChatMessage;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    /// Serves the given (status, body) replies in order, one per connection.
    fn serve(replies: Vec<(u16, &'static str)>) -> (String, Arc<AtomicUsize>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let hits = Arc::new(AtomicUsize::new(0));
        let counter = Arc::clone(&hits);
        thread::spawn(move || {
            for (status, body) in replies {
                let (stream, _) = listener.accept().unwrap();
                counter.fetch_add(1, Ordering::SeqCst);
                let mut reader = BufReader::new(stream);
                let mut length = 0usize;
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    let lower = line.to_ascii_lowercase();
                    if let Some(v) = lower.strip_prefix("content-length:") {
                        length = v.trim().parse().unwrap();
                    }
                    if line == "\r\n" || line.is_empty() {
                        break;
                    }
                }
                let mut buf = vec![0; length];
                reader.read_exact(&mut buf).unwrap();
                let mut stream = reader.into_inner();
                write!(
                    stream,
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                )
                .unwrap();
            }
        });
        (format!("http://{addr}/"), hits)
    }

    fn provider(endpoint: String) -> HttpProvider {
        HttpProvider::new(HttpConfig {
            endpoint,
            backoff_ms: 1,
            ..HttpConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn retries_server_errors_then_succeeds() {
        let (endpoint, hits) = serve(vec![(500, "{}"), (503, "{}"), (200, r#"{"content":"ok"}"#)]);
        let req = ChatRequest::new(vec![ChatMessage::user("q")]);
        assert_eq!(provider(endpoint).complete(&req).unwrap().content, "ok");
        assert_eq!(hits.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn gives_up_after_max_attempts() {
        let (endpoint, hits) = serve(vec![(500, "{}"), (500, "{}"), (500, "{}")]);
        let req = ChatRequest::new(vec![ChatMessage::user("q")]);
        match provider(endpoint).complete(&req) {
            Err(ProviderError::Transport { attempts, .. }) => assert_eq!(attempts, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(hits.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn client_errors_are_not_retried() {
        let (endpoint, hits) = serve(vec![(400, "{}")]);
        let req = ChatRequest::new(vec![ChatMessage::user("q")]);
        assert!(provider(endpoint).complete(&req).is_err());
        assert_eq!(hits.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn embedding_dimension_drift_is_an_error() {
        let (endpoint, _) = serve(vec![(200, r#"{"vectors":[[1.0,0.0],[1.0]]}"#)]);
        let req = EmbedRequest {
            texts: vec!["a".into(), "b".into()],
        };
        assert!(matches!(
            provider(endpoint).embed(&req),
            Err(ProviderError::DimensionDrift { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn throttle_bounds_in_flight() {
        let throttle = Arc::new(Throttle::new(2, 0.0));
        let peak = Arc::new(AtomicUsize::new(0));
        let handles: Vec<_> = (0..8)
            .map(|_| {
                let throttle = Arc::clone(&throttle);
                let peak = Arc::clone(&peak);
                thread::spawn(move || {
                    let _p = throttle.acquire();
                    peak.fetch_max(throttle.in_flight(), Ordering::SeqCst);
                    thread::sleep(Duration::from_millis(5));
                })
            })
            .collect();
        for h in handles {
            h.join().unwrap();
        }
        assert!(peak.load(Ordering::SeqCst) <= 2);
        assert_eq!(throttle.in_flight(), 0);
    }
}

//! Pluggable model backends.
//!
//! Three roles share one shape: a chat model (table generation), a rewriter
//! (question decomposition and sentence rewriting) and an embedder. Each role
//! has a live HTTP backend, deterministic offline backends and record/replay
//! through a [`Transcript`].

mod http;
mod local;
mod transcript;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::ProviderError;

pub use self::http::{HttpConfig, HttpProvider, Throttle};
pub use self::local::{cosine, FnChat, FnRewriter, HashingEmbedder, IdentityRewriter, ScriptedChat, HASHING_DIMENSION};
pub use self::transcript::{Recorder, ReplayProvider, Transcript, TranscriptEntry, TranscriptMeta};

/// Default completion budget. Part of every fingerprinted chat request.
pub const DEFAULT_MAX_TOKENS: u32 = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

/// `{messages: [{role, content}], temperature, max_tokens}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl ChatRequest {
    /// Temperature 0 and [`DEFAULT_MAX_TOKENS`].
    pub fn new(messages: Vec<ChatMessage>) -> Self {
        Self {
            messages,
            temperature: 0.0,
            max_tokens: DEFAULT_MAX_TOKENS,
        }
    }
}

/// `{content}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub content: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewriteMode {
    Question,
    Sentence,
}

/// `{mode: "question"|"sentence", text}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RewriteRequest {
    pub mode: RewriteMode,
    pub text: String,
}

/// `{outputs: [string]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewriteResponse {
    pub outputs: Vec<String>,
}

/// `{texts: [string]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbedRequest {
    pub texts: Vec<String>,
}

/// `{vectors: [[float]]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedResponse {
    pub vectors: Vec<Vec<f64>>,
}

pub trait ChatProvider: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError>;
}

pub trait RewriteProvider: Send + Sync {
    fn rewrite(&self, request: &RewriteRequest) -> Result<RewriteResponse, ProviderError>;
}

pub trait EmbeddingProvider: Send + Sync {
    fn embed(&self, request: &EmbedRequest) -> Result<EmbedResponse, ProviderError>;
}

impl<P: ChatProvider + ?Sized> ChatProvider for Box<P> {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        (**self).complete(request)
    }
}

impl<P: RewriteProvider + ?Sized> RewriteProvider for Box<P> {
    fn rewrite(&self, request: &RewriteRequest) -> Result<RewriteResponse, ProviderError> {
        (**self).rewrite(request)
    }
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for Box<P> {
    fn embed(&self, request: &EmbedRequest) -> Result<EmbedResponse, ProviderError> {
        (**self).embed(request)
    }
}

impl<P: ChatProvider + ?Sized> ChatProvider for Arc<P> {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        (**self).complete(request)
    }
}

impl<P: RewriteProvider + ?Sized> RewriteProvider for Arc<P> {
    fn rewrite(&self, request: &RewriteRequest) -> Result<RewriteResponse, ProviderError> {
        (**self).rewrite(request)
    }
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for Arc<P> {
    fn embed(&self, request: &EmbedRequest) -> Result<EmbedResponse, ProviderError> {
        (**self).embed(request)
    }
}

/// A request/response pair type for one provider role.
pub trait Exchange {
    const KIND: &'static str;
}

impl Exchange for ChatRequest {
    const KIND: &'static str = "chat";
}

impl Exchange for RewriteRequest {
    const KIND: &'static str = "rewrite";
}

impl Exchange for EmbedRequest {
    const KIND: &'static str = "embed";
}

/// Serializes JSON with object keys sorted and no insignificant whitespace.
pub fn canonical_json(value: &Value) -> String {
    let mut out = String::new();
    write_canonical(value, &mut out);
    out
}

fn write_canonical(value: &Value, out: &mut String) {
    match value {
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, key) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&Value::String(key.clone()).to_string());
                out.push(':');
                write_canonical(&map[key], out);
            }
            out.push('}');
        }
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(item, out);
            }
            out.push(']');
        }
        scalar => out.push_str(&scalar.to_string()),
    }
}

/// Hex SHA-256 of the canonical JSON of `{"kind": kind, "request": request}`.
pub fn fingerprint_value(kind: &str, request: &Value) -> String {
    let payload = serde_json::json!({ "kind": kind, "request": request });
    let digest = Sha256::digest(canonical_json(&payload).as_bytes());
    hex::encode(digest)
}

pub fn fingerprint<R: Exchange + Serialize>(request: &R) -> Result<String, ProviderError> {
    let value = serde_json::to_value(request).map_err(|e| ProviderError::Malformed(e.to_string()))?;
    Ok(fingerprint_value(R::KIND, &value))
}

/// All vectors share one dimension; returns it (0 for an empty batch).
pub fn check_dimensions(vectors: &[Vec<f64>]) -> Result<usize, ProviderError> {
    let Some(first) = vectors.first() else {
        return Ok(0);
    };
    let expected = first.len();
    for v in vectors {
        if v.len() != expected {
            return Err(ProviderError::DimensionDrift {
                expected,
                found: v.len(),
            });
        }
    }
    Ok(expected)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_json_sorts_keys() {
        let v: Value = serde_json::from_str(r#"{"b": 1, "a": {"d": [1, 2], "c": "x\n"}}"#).unwrap();
        assert_eq!(canonical_json(&v), r#"{"a":{"c":"x\n","d":[1,2]},"b":1}"#);
    }

    #[test]
    fn fingerprint_is_stable_under_reserialization() {
        let req = ChatRequest::new(vec![ChatMessage::system("s"), ChatMessage::user("hello")]);
        let fp = fingerprint(&req).unwrap();
        let json = serde_json::to_string_pretty(&req).unwrap();
        let back: ChatRequest = serde_json::from_str(&json).unwrap();
        assert_eq!(fingerprint(&back).unwrap(), fp);
        // Re-ordered keys in the source text do not matter.
        let shuffled: Value = serde_json::from_str(
            r#"{"max_tokens": 2048, "temperature": 0.0, "messages": [{"content": "s", "role": "system"}, {"role": "user", "content": "hello"}]}"#,
        )
        .unwrap();
        assert_eq!(fingerprint_value("chat", &shuffled), fp);
    }

    #[test]
    fn fingerprint_pinned_value() {
        // Computed independently with Python:
        // sha256(json.dumps({"kind": "rewrite", "request": {"mode": "question", "text": "Q?"}},
        //        sort_keys=True, separators=(",", ":"), ensure_ascii=False))
        let req = RewriteRequest {
            mode: RewriteMode::Question,
            text: "Q?".into(),
        };
        assert_eq!(
            fingerprint(&req).unwrap(),
            "4714e221eac874e601e4d6a49999c8274312f08ccc3ab16bc73711df2a4629bc"
        );
    }

    #[test]
    fn kinds_do_not_collide() {
        let text = serde_json::json!({"texts": ["a"]});
        assert_ne!(fingerprint_value("embed", &text), fingerprint_value("chat", &text));
    }

    #[test]
    fn dimension_check() {
        assert_eq!(check_dimensions(&[vec![0.0; 3], vec![1.0; 3]]).unwrap(), 3);
        assert!(matches!(
            check_dimensions(&[vec![0.0; 3], vec![1.0; 2]]),
            Err(ProviderError::DimensionDrift { expected: 3, found: 2 })
        ));
    }
}

//! Offline backends: a hashing embedder, an identity rewriter and scripted
//! chat providers for tests.

use std::collections::VecDeque;
use std::sync::Mutex;

use super::{
    ChatProvider, ChatRequest, ChatResponse, EmbedRequest, EmbedResponse, EmbeddingProvider, RewriteProvider,
    RewriteRequest, RewriteResponse,
};
use crate::error::ProviderError;
use crate::table::normalize_text;

pub const HASHING_DIMENSION: usize = 4096;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

/// Character 3-gram feature hashing.
///
/// Text is whitespace-normalized, lowercased and padded with one space on
/// each side. Each 3-gram's UTF-8 bytes are hashed with 64-bit FNV-1a into
/// `dimension` buckets; counts are L2-normalized. Text that is empty after
/// normalization embeds to the zero vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashingEmbedder {
    dimension: usize,
}

impl Default for HashingEmbedder {
    fn default() -> Self {
        Self::new(HASHING_DIMENSION)
    }
}

impl HashingEmbedder {
    pub fn new(dimension: usize) -> Self {
        assert!(dimension > 0, "embedding dimension must be positive");
        Self { dimension }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn embed_text(&self, text: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.dimension];
        let normalized = normalize_text(text).to_lowercase();
        if normalized.is_empty() {
            return v;
        }
        let chars: Vec<char> = format!(" {normalized} ").chars().collect();
        let mut buf = String::new();
        for gram in chars.windows(3) {
            buf.clear();
            buf.extend(gram);
            let bucket = (fnv1a(buf.as_bytes()) % self.dimension as u64) as usize;
            v[bucket] += 1.0;
        }
        let norm = l2(&v);
        for x in &mut v {
            *x /= norm;
        }
        v
    }
}

impl EmbeddingProvider for HashingEmbedder {
    fn embed(&self, request: &EmbedRequest) -> Result<EmbedResponse, ProviderError> {
        Ok(EmbedResponse {
            vectors: request.texts.iter().map(|t| self.embed_text(t)).collect(),
        })
    }
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Cosine similarity clamped to `[-1, 1]`. Zero vectors score 0 and equal
/// nonzero vectors score exactly 1.
///
/// Sums run in index order so results are reproducible bit for bit.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let (na, nb) = (l2(a), l2(b));
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    if a == b {
        return 1.0;
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    (dot / (na * nb)).clamp(-1.0, 1.0)
}

/// Returns the input text unchanged, as a single output.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityRewriter;

impl RewriteProvider for IdentityRewriter {
    fn rewrite(&self, request: &RewriteRequest) -> Result<RewriteResponse, ProviderError> {
        Ok(RewriteResponse {
            outputs: vec![request.text.clone()],
        })
    }
}

/// Rewriter backed by a closure.
pub struct FnRewriter<F>(pub F);

impl<F> RewriteProvider for FnRewriter<F>
where
    F: Fn(&RewriteRequest) -> Result<RewriteResponse, ProviderError> + Send + Sync,
{
    fn rewrite(&self, request: &RewriteRequest) -> Result<RewriteResponse, ProviderError> {
        (self.0)(request)
    }
}

/// Chat provider backed by a closure.
pub struct FnChat<F>(pub F);

impl<F> ChatProvider for FnChat<F>
where
    F: Fn(&ChatRequest) -> Result<ChatResponse, ProviderError> + Send + Sync,
{
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        (self.0)(request)
    }
}

/// Replies with canned responses in order, then fails with
/// [`ProviderError::Exhausted`]. Requests are kept for inspection.
#[derive(Debug, Default)]
pub struct ScriptedChat {
    replies: Mutex<VecDeque<Result<String, String>>>,
    seen: Mutex<Vec<ChatRequest>>,
}

impl ScriptedChat {
    pub fn new<I, S>(replies: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::with_results(replies.into_iter().map(|r| Ok(r.into())))
    }

    /// `Err(message)` entries fail that call with [`ProviderError::Failed`].
    pub fn with_results<I>(replies: I) -> Self
    where
        I: IntoIterator<Item = Result<String, String>>,
    {
        Self {
            replies: Mutex::new(replies.into_iter().collect()),
            seen: Mutex::new(Vec::new()),
        }
    }

    pub fn requests(&self) -> Vec<ChatRequest> {
        self.seen.lock().expect("scripted chat lock").clone()
    }

    pub fn remaining(&self) -> usize {
        self.replies.lock().expect("scripted chat lock").len()
    }
}

impl ChatProvider for ScriptedChat {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        self.seen.lock().expect("scripted chat lock").push(request.clone());
        match self.replies.lock().expect("scripted chat lock").pop_front() {
            Some(Ok(content)) => Ok(ChatResponse { content }),
            Some(Err(message)) => Err(ProviderError::Failed(message)),
            None => Err(ProviderError::Exhausted),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::providers::{ChatMessage, RewriteMode};

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn embedding_is_unit_norm_and_deterministic() {
        let e = HashingEmbedder::default();
        let a = e.embed_text("Lung and bronchus");
        assert_eq!(a.len(), HASHING_DIMENSION);
        assert!((l2(&a) - 1.0).abs() < 1e-12);
        assert_eq!(a, e.embed_text("  lung AND   bronchus "));
    }

    #[test]
    fn gram_counts_for_short_text() {
        // " ab " has grams " ab" and "ab ", each weight 1/sqrt(2).
        let e = HashingEmbedder::new(1 << 20);
        let v = e.embed_text("ab");
        let nonzero: Vec<f64> = v.iter().copied().filter(|x| *x != 0.0).collect();
        assert_eq!(nonzero.len(), 2);
        for x in nonzero {
            assert!((x - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_text_is_zero_and_cosine_zero() {
        let e = HashingEmbedder::default();
        let z = e.embed_text("   ");
        assert!(z.iter().all(|x| *x == 0.0));
        assert_eq!(cosine(&z, &e.embed_text("x")), 0.0);
    }

    #[test]
    fn cosine_bounds() {
        let e = HashingEmbedder::default();
        let a = e.embed_text("stomach cancer survival");
        assert_eq!(cosine(&a, &a), 1.0);
        let b = e.embed_text("qqqq zzzz");
        let c = cosine(&a, &b);
        assert!((0.0..=1.0).contains(&c));
    }

    #[test]
    fn identity_rewriter_echoes() {
        let out = IdentityRewriter
            .rewrite(&RewriteRequest {
                mode: RewriteMode::Sentence,
                text: "It rose.".into(),
            })
            .unwrap();
        assert_eq!(out.outputs, vec!["It rose."]);
    }

    #[test]
    fn scripted_chat_runs_out() {
        let chat = ScriptedChat::with_results([Ok("one".to_string()), Err("boom".to_string())]);
        let req = ChatRequest::new(vec![ChatMessage::user("hi")]);
        assert_eq!(chat.complete(&req).unwrap().content, "one");
        assert!(matches!(chat.complete(&req), Err(ProviderError::Failed(m)) if m == "boom"));
        assert!(matches!(chat.complete(&req), Err(ProviderError::Exhausted)));
        assert_eq!(chat.requests().len(), 3);
    }
}

//! JSONL transcripts of provider exchanges, for record and replay.
//!
//! The first line may be `{"meta": {...}}`. Every other line is a
//! [`TranscriptEntry`]. Lookups go by request fingerprint, so replay does not
//! depend on call order or thread scheduling.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::{Arc, Mutex};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{
    fingerprint, ChatProvider, ChatRequest, ChatResponse, EmbedRequest, EmbedResponse, EmbeddingProvider, Exchange,
    RewriteProvider, RewriteRequest, RewriteResponse,
};
use crate::error::ProviderError;

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TranscriptMeta {
    pub provider: String,
    #[serde(default)]
    pub captured_at: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub fingerprint: String,
    pub kind: String,
    pub request: Value,
    pub response: Value,
}

#[derive(Serialize, Deserialize)]
struct MetaLine {
    meta: TranscriptMeta,
}

#[derive(Debug, Clone, Default)]
pub struct Transcript {
    pub meta: Option<TranscriptMeta>,
    pub entries: Vec<TranscriptEntry>,
}

impl Transcript {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ProviderError> {
        let reader = BufReader::new(File::open(path)?);
        let mut transcript = Transcript::default();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let value: Value = serde_json::from_str(&line)
                .map_err(|source| ProviderError::TranscriptFormat { line: i + 1, source })?;
            if value.get("meta").is_some() {
                let meta: MetaLine = serde_json::from_value(value)
                    .map_err(|source| ProviderError::TranscriptFormat { line: i + 1, source })?;
                transcript.meta = Some(meta.meta);
            } else {
                let entry: TranscriptEntry = serde_json::from_value(value)
                    .map_err(|source| ProviderError::TranscriptFormat { line: i + 1, source })?;
                transcript.entries.push(entry);
            }
        }
        Ok(transcript)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ProviderError> {
        let mut out = BufWriter::new(File::create(path)?);
        if let Some(meta) = &self.meta {
            write_line(&mut out, &MetaLine { meta: meta.clone() })?;
        }
        for entry in &self.entries {
            write_line(&mut out, entry)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn write_line<W: Write, T: Serialize>(out: &mut W, value: &T) -> Result<(), ProviderError> {
    let line = serde_json::to_string(value).map_err(|e| ProviderError::Malformed(e.to_string()))?;
    writeln!(out, "{line}")?;
    Ok(())
}

/// Serves recorded responses. A request with no recording fails with
/// [`ProviderError::ReplayMiss`].
#[derive(Debug, Clone, Default)]
pub struct ReplayProvider {
    responses: HashMap<String, Value>,
}

impl ReplayProvider {
    pub fn new(transcript: &Transcript) -> Self {
        let mut responses = HashMap::new();
        for entry in &transcript.entries {
            responses
                .entry(entry.fingerprint.clone())
                .or_insert_with(|| entry.response.clone());
        }
        Self { responses }
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, ProviderError> {
        Ok(Self::new(&Transcript::load(path)?))
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    fn lookup<Req, Resp>(&self, request: &Req) -> Result<Resp, ProviderError>
    where
        Req: Exchange + Serialize,
        Resp: DeserializeOwned,
    {
        let fp = fingerprint(request)?;
        let value = self
            .responses
            .get(&fp)
            .ok_or(ProviderError::ReplayMiss { fingerprint: fp })?;
        serde_json::from_value(value.clone()).map_err(|e| ProviderError::Malformed(e.to_string()))
    }
}

impl ChatProvider for ReplayProvider {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        self.lookup(request)
    }
}

impl RewriteProvider for ReplayProvider {
    fn rewrite(&self, request: &RewriteRequest) -> Result<RewriteResponse, ProviderError> {
        self.lookup(request)
    }
}

impl EmbeddingProvider for ReplayProvider {
    fn embed(&self, request: &EmbedRequest) -> Result<EmbedResponse, ProviderError> {
        self.lookup(request)
    }
}

struct Sink {
    out: BufWriter<File>,
    written: HashSet<String>,
}

/// Wraps a provider and appends every successful exchange to a transcript.
///
/// Clones share one file handle, so several roles can record into one file.
pub struct Recorder<P> {
    inner: P,
    sink: Arc<Mutex<Sink>>,
}

impl<P> Recorder<P> {
    /// Creates (truncating) `path` and writes the meta line.
    pub fn create(inner: P, path: impl AsRef<Path>, meta: TranscriptMeta) -> Result<Self, ProviderError> {
        let mut out = BufWriter::new(File::create(path)?);
        write_line(&mut out, &MetaLine { meta })?;
        out.flush()?;
        Ok(Self {
            inner,
            sink: Arc::new(Mutex::new(Sink {
                out,
                written: HashSet::new(),
            })),
        })
    }

    /// Another recorder writing to the same transcript.
    pub fn share<Q>(&self, inner: Q) -> Recorder<Q> {
        Recorder {
            inner,
            sink: Arc::clone(&self.sink),
        }
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }

    fn record<Req, Resp>(&self, request: &Req, response: &Resp) -> Result<(), ProviderError>
    where
        Req: Exchange + Serialize,
        Resp: Serialize,
    {
        let malformed = |e: serde_json::Error| ProviderError::Malformed(e.to_string());
        let fp = fingerprint(request)?;
        let mut sink = self.sink.lock().expect("transcript lock");
        if !sink.written.insert(fp.clone()) {
            return Ok(());
        }
        let entry = TranscriptEntry {
            fingerprint: fp,
            kind: Req::KIND.to_string(),
            request: serde_json::to_value(request).map_err(malformed)?,
            response: serde_json::to_value(response).map_err(malformed)?,
        };
        write_line(&mut sink.out, &entry)?;
        sink.out.flush()?;
        Ok(())
    }
}

impl<P: ChatProvider> ChatProvider for Recorder<P> {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        let response = self.inner.complete(request)?;
        self.record(request, &response)?;
        Ok(response)
    }
}

impl<P: RewriteProvider> RewriteProvider for Recorder<P> {
    fn rewrite(&self, request: &RewriteRequest) -> Result<RewriteResponse, ProviderError> {
        let response = self.inner.rewrite(request)?;
        self.record(request, &response)?;
        Ok(response)
    }
}

impl<P: EmbeddingProvider> EmbeddingProvider for Recorder<P> {
    fn embed(&self, request: &EmbedRequest) -> Result<EmbedResponse, ProviderError> {
        let response = self.inner.embed(request)?;
        self.record(request, &response)?;
        Ok(response)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::providers::{ChatMessage, HashingEmbedder, RewriteMode, ScriptedChat};

    #[test]
    fn record_then_replay_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        let chat = Recorder::create(
            ScriptedChat::new(["first", "second"]),
            &path,
            TranscriptMeta {
                provider: "scripted".into(),
                captured_at: "test".into(),
            },
        )
        .unwrap();
        let embed = chat.share(HashingEmbedder::new(8));
        let a = ChatRequest::new(vec![ChatMessage::user("a")]);
        let b = ChatRequest::new(vec![ChatMessage::user("b")]);
        assert_eq!(chat.complete(&a).unwrap().content, "first");
        assert_eq!(chat.complete(&b).unwrap().content, "second");
        let e = EmbedRequest {
            texts: vec!["lung".into()],
        };
        let vectors = embed.embed(&e).unwrap();
        drop((chat, embed));

        let transcript = Transcript::load(&path).unwrap();
        assert_eq!(transcript.meta.as_ref().unwrap().provider, "scripted");
        assert_eq!(transcript.entries.len(), 3);

        let replay = ReplayProvider::new(&transcript);
        // Order independent.
        assert_eq!(replay.complete(&b).unwrap().content, "second");
        assert_eq!(replay.complete(&a).unwrap().content, "first");
        assert_eq!(replay.embed(&e).unwrap(), vectors);
    }

    #[test]
    fn replay_miss_names_fingerprint() {
        let replay = ReplayProvider::default();
        let req = RewriteRequest {
            mode: RewriteMode::Question,
            text: "q".into(),
        };
        let expected = fingerprint(&req).unwrap();
        match replay.rewrite(&req) {
            Err(ProviderError::ReplayMiss { fingerprint }) => assert_eq!(fingerprint, expected),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        std::fs::write(&path, "{\"meta\":{\"provider\":\"x\"}}\n\nnot json\n").unwrap();
        match Transcript::load(&path) {
            Err(ProviderError::TranscriptFormat { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }
}

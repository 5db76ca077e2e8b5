//! Builds the three provider roles from a [`ProvidersConfig`].

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use tabqa_core::providers::{
    ChatProvider, EmbeddingProvider, HashingEmbedder, HttpConfig, HttpProvider, IdentityRewriter, Recorder,
    ReplayProvider, RewriteProvider, TranscriptMeta,
};

use crate::config::{ProviderSpec, ProvidersConfig};
use crate::error::CliError;

#[derive(Clone)]
pub struct Providers {
    pub llm: Option<Arc<dyn ChatProvider>>,
    pub rewriter: Arc<dyn RewriteProvider>,
    pub embedder: Arc<dyn EmbeddingProvider>,
}

impl Providers {
    pub fn llm(&self) -> Result<&dyn ChatProvider, CliError> {
        self.llm
            .as_deref()
            .ok_or_else(|| CliError::Config("no LLM provider configured; pass --llm or set providers.llm".into()))
    }
}

/// Roles that name the same transcript share one replay table or one
/// recording sink.
#[derive(Default)]
struct Builder {
    replays: HashMap<PathBuf, Arc<ReplayProvider>>,
    sinks: HashMap<PathBuf, Recorder<()>>,
}

impl Builder {
    fn replay(&mut self, path: &Path) -> Result<Arc<ReplayProvider>, CliError> {
        if let Some(r) = self.replays.get(path) {
            return Ok(Arc::clone(r));
        }
        let replay = Arc::new(ReplayProvider::from_file(path).map_err(|e| CliError::Input {
            file: path.to_path_buf(),
            line: None,
            field: None,
            message: e.to_string(),
        })?);
        self.replays.insert(path.to_path_buf(), Arc::clone(&replay));
        Ok(replay)
    }

    fn recorder<P>(&mut self, path: &Path, inner: P, endpoint: &str) -> Result<Recorder<P>, CliError> {
        if let Some(sink) = self.sinks.get(path) {
            return Ok(sink.share(inner));
        }
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        let meta = TranscriptMeta {
            provider: endpoint.to_string(),
            captured_at: String::new(),
        };
        let sink = Recorder::create((), path, meta)?;
        let recorder = sink.share(inner);
        self.sinks.insert(path.to_path_buf(), sink);
        Ok(recorder)
    }
}

fn http(role: &str, config: &HttpConfig) -> Result<HttpProvider, CliError> {
    if config.endpoint.is_empty() {
        return Err(CliError::Config(format!(
            "the {role} provider uses http but providers.http.{role}.endpoint is empty"
        )));
    }
    Ok(HttpProvider::new(config.clone())?)
}

fn offline_only(role: &str, spec: &ProviderSpec) -> CliError {
    CliError::Config(format!("{spec} cannot serve the {role} role"))
}

pub fn build(config: &ProvidersConfig) -> Result<Providers, CliError> {
    let mut b = Builder::default();
    let http_cfg = &config.http;

    let llm: Option<Arc<dyn ChatProvider>> = match &config.llm {
        None => None,
        Some(ProviderSpec::Replay(p)) => Some(b.replay(p)?),
        Some(ProviderSpec::Http) => Some(Arc::new(http("llm", &http_cfg.llm)?)),
        Some(ProviderSpec::Record(p)) => {
            let inner = http("llm", &http_cfg.llm)?;
            Some(Arc::new(b.recorder(p, inner, &http_cfg.llm.endpoint)?))
        }
        Some(spec) => return Err(offline_only("llm", spec)),
    };

    let rewriter: Arc<dyn RewriteProvider> = match &config.rewriter {
        ProviderSpec::Identity => Arc::new(IdentityRewriter),
        ProviderSpec::Replay(p) => b.replay(p)?,
        ProviderSpec::Http => Arc::new(http("rewriter", &http_cfg.rewriter)?),
        ProviderSpec::Record(p) => {
            let inner = http("rewriter", &http_cfg.rewriter)?;
            Arc::new(b.recorder(p, inner, &http_cfg.rewriter.endpoint)?)
        }
        spec @ ProviderSpec::Hashing => return Err(offline_only("rewriter", spec)),
    };

    let embedder: Arc<dyn EmbeddingProvider> = match &config.embedder {
        ProviderSpec::Hashing => Arc::new(HashingEmbedder::new(config.embedding_dimension)),
        ProviderSpec::Replay(p) => b.replay(p)?,
        ProviderSpec::Http => Arc::new(http("embedder", &http_cfg.embedder)?),
        ProviderSpec::Record(p) => {
            let inner = http("embedder", &http_cfg.embedder)?;
            Arc::new(b.recorder(p, inner, &http_cfg.embedder.endpoint)?)
        }
        spec @ ProviderSpec::Identity => return Err(offline_only("embedder", spec)),
    };

    Ok(Providers {
        llm,
        rewriter,
        embedder,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_offline() {
        let p = build(&ProvidersConfig::default()).unwrap();
        assert!(p.llm.is_none());
        assert!(p.llm().is_err());
    }

    #[test]
    fn wrong_role_is_a_config_error() {
        let config = ProvidersConfig {
            llm: Some(ProviderSpec::Hashing),
            ..ProvidersConfig::default()
        };
        assert!(matches!(build(&config), Err(CliError::Config(_))));
    }

    #[test]
    fn http_without_endpoint_is_rejected() {
        let config = ProvidersConfig {
            llm: Some(ProviderSpec::Http),
            ..ProvidersConfig::default()
        };
        let err = build(&config).err().unwrap().to_string();
        assert!(err.contains("providers.http.llm.endpoint"), "{err}");
    }

    #[test]
    fn missing_transcript_names_the_file() {
        let config = ProvidersConfig {
            llm: Some(ProviderSpec::Replay("/nonexistent/t.jsonl".into())),
            ..ProvidersConfig::default()
        };
        match build(&config) {
            Err(CliError::Input { file, .. }) => assert_eq!(file, PathBuf::from("/nonexistent/t.jsonl")),
            Err(other) => panic!("{other}"),
            Ok(_) => panic!("built"),
        }
    }
}

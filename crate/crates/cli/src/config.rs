//! Run configuration: a TOML file, then `TABQA_*` environment overrides, then
//! command-line flags.
//!
//! ```toml
//! out_dir = "out"            # output directory for `pipeline`
//! seed = 0                   # exemplar sampling
//! workers = 4                # concurrent questions
//! recall_ks = [10, 20, 30]
//! baseline_oneshot = false   # single-prompt generation instead of two stages
//! exemplars = "exemplars.jsonl"   # optional triples to draw one-shot examples from
//!
//! [retrieval]
//! k = 30
//! merge = "round-robin"      # or "max-score"
//! embed_batch_size = 32
//! parallelism = 4
//!
//! [generation]
//! batch_size = 4             # cells per fill prompt; omit for whole rows
//! max_retries = 1
//! parallelism = 4
//! temperature = 0.0
//! max_tokens = 2048
//!
//! [providers]
//! llm = "replay:transcript.jsonl"
//! rewriter = "identity"
//! embedder = "hashing"
//! embedding_dimension = 4096
//!
//! [providers.http.llm]
//! endpoint = "https://example.invalid/chat"
//! api_key_env = "TABQA_LLM_KEY"
//!
//! [pipeline]
//! docs = "docs.jsonl"
//! questions = "questions.jsonl"
//! ```
//!
//! Relative paths are resolved against the directory holding the file.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use tabqa_core::generation::GenerationConfig;
use tabqa_core::providers::{HttpConfig, HASHING_DIMENSION};
use tabqa_core::retrieval::{MergeStrategy, RetrievalConfig};

use crate::error::CliError;

/// Where a provider role is served from.
///
/// `hashing` and `identity` are offline; `replay:PATH` reads a transcript;
/// `http` calls the endpoint in `[providers.http.<role>]`; `record:PATH`
/// calls it and writes a transcript.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ProviderSpec {
    Hashing,
    Identity,
    Replay(PathBuf),
    Record(PathBuf),
    Http,
}

impl FromStr for ProviderSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s {
            "hashing" => return Ok(ProviderSpec::Hashing),
            "identity" => return Ok(ProviderSpec::Identity),
            "http" => return Ok(ProviderSpec::Http),
            _ => {}
        }
        let (mode, path) = s.split_once(':').ok_or_else(|| {
            format!("unknown provider {s:?}; expected hashing, identity, http, replay:PATH or record:PATH")
        })?;
        if path.is_empty() {
            return Err(format!("provider {mode:?} needs a transcript path"));
        }
        match mode {
            "replay" => Ok(ProviderSpec::Replay(path.into())),
            "record" => Ok(ProviderSpec::Record(path.into())),
            _ => Err(format!("unknown provider mode {mode:?}")),
        }
    }
}

impl TryFrom<String> for ProviderSpec {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<ProviderSpec> for String {
    fn from(spec: ProviderSpec) -> String {
        spec.to_string()
    }
}

impl fmt::Display for ProviderSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProviderSpec::Hashing => f.write_str("hashing"),
            ProviderSpec::Identity => f.write_str("identity"),
            ProviderSpec::Http => f.write_str("http"),
            ProviderSpec::Replay(p) => write!(f, "replay:{}", p.display()),
            ProviderSpec::Record(p) => write!(f, "record:{}", p.display()),
        }
    }
}

impl ProviderSpec {
    fn resolve(&mut self, base: &Path) {
        if let ProviderSpec::Replay(p) | ProviderSpec::Record(p) = self {
            *p = resolve(base, p);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HttpSection {
    pub llm: HttpConfig,
    pub rewriter: HttpConfig,
    pub embedder: HttpConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProvidersConfig {
    /// No default: generation needs an explicit choice.
    pub llm: Option<ProviderSpec>,
    pub rewriter: ProviderSpec,
    pub embedder: ProviderSpec,
    pub embedding_dimension: usize,
    pub http: HttpSection,
}

impl Default for ProvidersConfig {
    fn default() -> Self {
        Self {
            llm: None,
            rewriter: ProviderSpec::Identity,
            embedder: ProviderSpec::Hashing,
            embedding_dimension: HASHING_DIMENSION,
            http: HttpSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineInputs {
    pub docs: Option<PathBuf>,
    pub questions: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub out_dir: PathBuf,
    pub seed: u64,
    pub workers: usize,
    pub recall_ks: Vec<usize>,
    pub baseline_oneshot: bool,
    pub exemplars: Option<PathBuf>,
    pub retrieval: RetrievalConfig,
    pub generation: GenerationConfig,
    pub providers: ProvidersConfig,
    pub pipeline: PipelineInputs,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            out_dir: PathBuf::from("out"),
            seed: 0,
            workers: 4,
            recall_ks: vec![10, 20, 30],
            baseline_oneshot: false,
            exemplars: None,
            retrieval: RetrievalConfig::default(),
            generation: GenerationConfig::default(),
            providers: ProvidersConfig::default(),
            pipeline: PipelineInputs::default(),
        }
    }
}

fn resolve(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

fn parse_env<T: FromStr>(name: &str, value: &str) -> Result<T, CliError>
where
    T::Err: fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| CliError::Config(format!("{name}={value:?}: {e}")))
}

impl RunConfig {
    pub fn from_toml(text: &str, base: &Path) -> Result<Self, CliError> {
        let mut config: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.resolve_paths(base);
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new(""));
        Self::from_toml(&text, base).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Loads `path` if given, else the defaults; then applies the process
    /// environment.
    pub fn load_or_default(path: Option<&Path>) -> Result<Self, CliError> {
        let mut config = match path {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        config.apply_env(|name| std::env::var(name).ok())?;
        Ok(config)
    }

    fn resolve_paths(&mut self, base: &Path) {
        self.out_dir = resolve(base, &self.out_dir);
        if let Some(p) = &mut self.exemplars {
            *p = resolve(base, p);
        }
        if let Some(p) = &mut self.pipeline.docs {
            *p = resolve(base, p);
        }
        if let Some(p) = &mut self.pipeline.questions {
            *p = resolve(base, p);
        }
        if let Some(spec) = &mut self.providers.llm {
            spec.resolve(base);
        }
        self.providers.rewriter.resolve(base);
        self.providers.embedder.resolve(base);
    }

    /// Applies `TABQA_*` overrides read through `var`.
    pub fn apply_env(&mut self, var: impl Fn(&str) -> Option<String>) -> Result<(), CliError> {
        let get = |name: &str| {
            var(name)
                .filter(|v| !v.trim().is_empty())
                .map(|v| (name.to_string(), v))
        };
        if let Some((_, v)) = get("TABQA_OUT_DIR") {
            self.out_dir = PathBuf::from(v);
        }
        if let Some((n, v)) = get("TABQA_SEED") {
            self.seed = parse_env(&n, &v)?;
        }
        if let Some((n, v)) = get("TABQA_WORKERS") {
            self.workers = parse_env(&n, &v)?;
        }
        if let Some((n, v)) = get("TABQA_K") {
            self.retrieval.k = parse_env(&n, &v)?;
        }
        if let Some((_, v)) = get("TABQA_MERGE") {
            self.retrieval.merge = match v.trim() {
                "round-robin" => MergeStrategy::RoundRobin,
                "max-score" => MergeStrategy::MaxScore,
                other => {
                    return Err(CliError::Config(format!(
                        "TABQA_MERGE={other:?}: expected round-robin or max-score"
                    )))
                }
            };
        }
        if let Some((n, v)) = get("TABQA_BATCH_SIZE") {
            self.generation.batch_size = Some(parse_env(&n, &v)?);
        }
        if let Some((n, v)) = get("TABQA_MAX_RETRIES") {
            self.generation.max_retries = parse_env(&n, &v)?;
        }
        if let Some((n, v)) = get("TABQA_LLM") {
            self.providers.llm = Some(parse_env(&n, &v)?);
        }
        if let Some((n, v)) = get("TABQA_REWRITER") {
            self.providers.rewriter = parse_env(&n, &v)?;
        }
        if let Some((n, v)) = get("TABQA_EMBEDDER") {
            self.providers.embedder = parse_env(&n, &v)?;
        }
        let http = &mut self.providers.http;
        for (role, section) in [
            ("LLM", &mut http.llm),
            ("REWRITER", &mut http.rewriter),
            ("EMBEDDER", &mut http.embedder),
        ] {
            if let Some((_, v)) = get(&format!("TABQA_{role}_ENDPOINT")) {
                section.endpoint = v;
            }
            if let Some((_, v)) = get(&format!("TABQA_{role}_API_KEY_ENV")) {
                section.api_key_env = Some(v);
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.retrieval.k == 0 {
            return Err(CliError::Config("retrieval.k must be at least 1".into()));
        }
        if self.generation.batch_size == Some(0) {
            return Err(CliError::Config("generation.batch_size must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(CliError::Config("workers must be at least 1".into()));
        }
        if self.recall_ks.contains(&0) {
            return Err(CliError::Config("recall_ks entries must be at least 1".into()));
        }
        if self.providers.embedding_dimension == 0 {
            return Err(CliError::Config(
                "providers.embedding_dimension must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn defaults() {
        let c = RunConfig::from_toml("", Path::new("/base")).unwrap();
        assert_eq!(c.retrieval.k, 30);
        assert_eq!(c.generation.batch_size, None);
        assert_eq!(c.generation.max_retries, 1);
        assert_eq!(c.providers.embedder, ProviderSpec::Hashing);
        assert_eq!(c.providers.rewriter, ProviderSpec::Identity);
        assert_eq!(c.providers.llm, None);
        assert_eq!(c.out_dir, PathBuf::from("/base/out"));
        c.validate().unwrap();
    }

    #[test]
    fn paths_resolve_against_the_file() {
        let c = RunConfig::from_toml(
            "[providers]\nllm = \"replay:t/llm.jsonl\"\n[pipeline]\ndocs = \"docs.jsonl\"\n",
            Path::new("/cfg"),
        )
        .unwrap();
        assert_eq!(c.providers.llm, Some(ProviderSpec::Replay("/cfg/t/llm.jsonl".into())));
        assert_eq!(c.pipeline.docs, Some(PathBuf::from("/cfg/docs.jsonl")));
    }

    #[test]
    fn unknown_keys_and_bad_specs_are_rejected() {
        assert!(RunConfig::from_toml("colour = 1", Path::new("")).is_err());
        assert!(RunConfig::from_toml("[providers]\nembedder = \"magic\"", Path::new("")).is_err());
        assert!("replay:".parse::<ProviderSpec>().is_err());
    }

    #[test]
    fn environment_overrides() {
        let vars: HashMap<&str, &str> = [
            ("TABQA_K", "12"),
            ("TABQA_BATCH_SIZE", "3"),
            ("TABQA_LLM", "replay:x.jsonl"),
            ("TABQA_LLM_ENDPOINT", "http://localhost:1"),
            ("TABQA_MERGE", "max-score"),
        ]
        .into_iter()
        .collect();
        let mut c = RunConfig::default();
        c.apply_env(|n| vars.get(n).map(|v| v.to_string())).unwrap();
        assert_eq!(c.retrieval.k, 12);
        assert_eq!(c.generation.batch_size, Some(3));
        assert_eq!(c.providers.llm, Some(ProviderSpec::Replay("x.jsonl".into())));
        assert_eq!(c.providers.http.llm.endpoint, "http://localhost:1");
        assert_eq!(c.retrieval.merge, MergeStrategy::MaxScore);
        let err = c
            .apply_env(|n| (n == "TABQA_K").then(|| "many".to_string()))
            .unwrap_err();
        assert!(err.to_string().contains("TABQA_K"));
    }

    #[test]
    fn zero_k_fails_validation() {
        let mut c = RunConfig::default();
        c.retrieval.k = 0;
        assert!(c.validate().is_err());
    }
}

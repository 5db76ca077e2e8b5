//! Sentence retrieval: segmentation, question decomposition, sentence
//! rewriting and cosine top-K ranking over sub-questions.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ProviderError, RetrievalError};
use crate::metrics::recall_at_k;
use crate::providers::{
    check_dimensions, cosine, EmbedRequest, EmbeddingProvider, RewriteMode, RewriteProvider, RewriteRequest,
};
use crate::table::normalize_text;

pub const DEFAULT_K: usize = 30;

pub const DEFAULT_ABBREVIATIONS: &[&str] = &[
    "approx.", "co.", "corp.", "dept.", "dr.", "e.g.", "est.", "etc.", "fig.", "i.e.", "inc.", "jr.", "ltd.", "mr.",
    "mrs.", "ms.", "no.", "nos.", "p.", "pp.", "prof.", "rev.", "sr.", "st.", "u.k.", "u.s.", "vol.", "vs.",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MergeStrategy {
    /// Take each sub-question's next-best unseen sentence in turn.
    #[default]
    RoundRobin,
    /// Rank the union by each sentence's best score over sub-questions.
    MaxScore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetrievalConfig {
    pub k: usize,
    pub merge: MergeStrategy,
    /// Texts per embedding request.
    pub embed_batch_size: usize,
    /// Upper bound on concurrent provider calls.
    pub parallelism: usize,
    /// Lowercase tokens, including the final period, that never end a sentence.
    pub abbreviations: Vec<String>,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            merge: MergeStrategy::RoundRobin,
            embed_batch_size: 32,
            parallelism: 4,
            abbreviations: DEFAULT_ABBREVIATIONS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// Rule-based sentence segmentation.
///
/// A sentence ends at `.`, `!` or `?` (plus any closing quotes or brackets)
/// when followed by whitespace and then an uppercase letter or digit, unless
/// the token ending there is a listed abbreviation or an opening parenthesis
/// is still unclosed. A blank line always ends a sentence.
pub fn split_sentences(text: &str, abbreviations: &[String]) -> Vec<String> {
    let abbreviations: BTreeSet<String> = abbreviations.iter().map(|a| a.to_lowercase()).collect();
    let mut sentences = Vec::new();
    for paragraph in split_paragraphs(text) {
        split_paragraph(paragraph, &abbreviations, &mut sentences);
    }
    sentences
}

fn split_paragraphs(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut blank_run = false;
    let mut line_start = 0;
    for (i, c) in text.char_indices() {
        if c == '\n' {
            let line = &text[line_start..i];
            if line.trim().is_empty() && !blank_run && line_start > start {
                out.push(&text[start..line_start]);
                start = i + 1;
                blank_run = true;
            } else if line.trim().is_empty() {
                start = i + 1;
            } else {
                blank_run = false;
            }
            line_start = i + 1;
        }
    }
    out.push(&text[start..]);
    out
}

fn split_paragraph(text: &str, abbreviations: &BTreeSet<String>, out: &mut Vec<String>) {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut depth = 0usize;
    let mut start = 0usize;
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        match c {
            '(' | '[' => depth += 1,
            ')' | ']' => depth = depth.saturating_sub(1),
            '.' | '!' | '?' if depth == 0 => {
                let mut end = i + 1;
                while end < chars.len() && matches!(chars[end].1, '"' | '\'' | '\u{201d}' | '\u{2019}' | ')' | ']') {
                    end += 1;
                }
                let mut next = end;
                while next < chars.len() && chars[next].1.is_whitespace() {
                    next += 1;
                }
                let mut first = next;
                while first < chars.len() && matches!(chars[first].1, '"' | '\'' | '\u{201c}' | '\u{2018}' | '(' | '[')
                {
                    first += 1;
                }
                let boundary = next > end
                    && first < chars.len()
                    && (chars[first].1.is_uppercase() || chars[first].1.is_ascii_digit())
                    && !(c == '.' && ends_with_abbreviation(text, start, pos, abbreviations));
                if boundary {
                    let byte_end = chars.get(end).map_or(text.len(), |&(p, _)| p);
                    push_sentence(&text[start..byte_end], out);
                    start = chars[next].0;
                    i = next;
                    continue;
                }
            }
            _ => {}
        }
        i += 1;
    }
    push_sentence(&text[start..], out);
}

fn ends_with_abbreviation(text: &str, start: usize, period: usize, abbreviations: &BTreeSet<String>) -> bool {
    let before = &text[start..period];
    let token_start = before
        .char_indices()
        .rev()
        .find(|(_, c)| c.is_whitespace() || *c == '(')
        .map_or(0, |(i, c)| i + c.len_utf8());
    let token = format!("{}.", &before[token_start..]).to_lowercase();
    abbreviations.contains(&token)
}

fn push_sentence(raw: &str, out: &mut Vec<String>) {
    let s = normalize_text(raw);
    if !s.is_empty() {
        out.push(s);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sentence {
    pub id: usize,
    pub raw: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rewritten: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<Vec<f64>>,
}

impl Sentence {
    /// Text used for similarity scoring: the rewritten form when present.
    pub fn retrieval_text(&self) -> &str {
        self.rewritten.as_deref().unwrap_or(&self.raw)
    }
}

/// One document as an ordered list of sentences with dense ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentStore {
    pub doc_id: String,
    sentences: Vec<Sentence>,
}

impl DocumentStore {
    pub fn from_sentences<I, S>(doc_id: impl Into<String>, sentences: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            doc_id: doc_id.into(),
            sentences: sentences
                .into_iter()
                .enumerate()
                .map(|(id, raw)| Sentence {
                    id,
                    raw: raw.into(),
                    rewritten: None,
                    embedding: None,
                })
                .collect(),
        }
    }

    pub fn from_text(doc_id: impl Into<String>, text: &str, abbreviations: &[String]) -> Self {
        Self::from_sentences(doc_id, split_sentences(text, abbreviations))
    }

    pub fn sentences(&self) -> &[Sentence] {
        &self.sentences
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn get(&self, id: usize) -> Option<&Sentence> {
        self.sentences.get(id)
    }

    pub fn raw_texts(&self) -> Vec<&str> {
        self.sentences.iter().map(|s| s.raw.as_str()).collect()
    }
}

fn bounded_pool(parallelism: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .expect("thread pool")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionRewrite {
    pub sub_questions: Vec<String>,
    /// The provider failed or returned nothing usable; the original question
    /// stands in as the only sub-question.
    pub degraded: bool,
}

/// Decomposes `question` into sub-questions. Never fails on provider errors.
pub fn rewrite_question(question: &str, rewriter: &dyn RewriteProvider) -> Result<QuestionRewrite, RetrievalError> {
    let question = normalize_text(question);
    if question.is_empty() {
        return Err(RetrievalError::EmptyQuestion);
    }
    let request = RewriteRequest {
        mode: RewriteMode::Question,
        text: question.clone(),
    };
    let outputs = match rewriter.rewrite(&request) {
        Ok(response) => response.outputs,
        Err(e) => {
            log::warn!("question rewrite failed, using the original question: {e}");
            Vec::new()
        }
    };
    let mut seen = BTreeSet::new();
    let sub_questions: Vec<String> = outputs
        .iter()
        .map(|o| normalize_text(o))
        .filter(|o| !o.is_empty() && seen.insert(o.clone()))
        .collect();
    if sub_questions.is_empty() {
        log::warn!("question rewrite produced no sub-questions, using the original question");
        return Ok(QuestionRewrite {
            sub_questions: vec![question],
            degraded: true,
        });
    }
    Ok(QuestionRewrite {
        sub_questions,
        degraded: false,
    })
}

/// Sets each sentence's rewritten form. Failed sentences keep `rewritten =
/// None`, so scoring falls back to the raw text. Returns the failure count.
pub fn rewrite_sentences(store: &mut DocumentStore, rewriter: &dyn RewriteProvider, parallelism: usize) -> usize {
    let results: Vec<Option<String>> = bounded_pool(parallelism).install(|| {
        store
            .sentences
            .par_iter()
            .map(|s| {
                let request = RewriteRequest {
                    mode: RewriteMode::Sentence,
                    text: s.raw.clone(),
                };
                match rewriter.rewrite(&request) {
                    Ok(response) => {
                        let joined = normalize_text(&response.outputs.join(" "));
                        (!joined.is_empty()).then_some(joined)
                    }
                    Err(e) => {
                        log::debug!("rewrite of sentence {} failed: {e}", s.id);
                        None
                    }
                }
            })
            .collect()
    });
    let mut failed = 0;
    for (sentence, rewritten) in store.sentences.iter_mut().zip(results) {
        failed += usize::from(rewritten.is_none());
        sentence.rewritten = rewritten;
    }
    failed
}

fn drift(e: ProviderError) -> RetrievalError {
    match e {
        ProviderError::DimensionDrift { expected, found } => {
            RetrievalError::DimensionMismatch(format!("expected {expected}, got {found}"))
        }
        other => RetrievalError::Provider(other),
    }
}

fn embed_texts(
    texts: &[&str],
    embedder: &dyn EmbeddingProvider,
    config: &RetrievalConfig,
) -> Result<Vec<Vec<f64>>, RetrievalError> {
    let batch = config.embed_batch_size.max(1);
    let batches: Vec<Vec<Vec<f64>>> = bounded_pool(config.parallelism).install(|| {
        texts
            .par_chunks(batch)
            .map(|chunk| {
                let request = EmbedRequest {
                    texts: chunk.iter().map(|t| t.to_string()).collect(),
                };
                let response = embedder.embed(&request).map_err(drift)?;
                if response.vectors.len() != chunk.len() {
                    return Err(RetrievalError::Provider(ProviderError::Malformed(format!(
                        "{} texts but {} vectors",
                        chunk.len(),
                        response.vectors.len()
                    ))));
                }
                Ok(response.vectors)
            })
            .collect::<Result<_, _>>()
    })?;
    let mut vectors: Vec<Vec<f64>> = batches.into_iter().flatten().collect();
    check_dimensions(&vectors).map_err(drift)?;
    for v in &mut vectors {
        unit_normalize(v);
    }
    Ok(vectors)
}

fn unit_normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 && (norm - 1.0).abs() > 1e-9 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
}

/// Fills in every sentence's embedding of its retrieval text.
pub fn embed_store(
    store: &mut DocumentStore,
    embedder: &dyn EmbeddingProvider,
    config: &RetrievalConfig,
) -> Result<(), RetrievalError> {
    let texts: Vec<&str> = store.sentences.iter().map(Sentence::retrieval_text).collect();
    let vectors = embed_texts(&texts, embedder, config)?;
    for (sentence, v) in store.sentences.iter_mut().zip(vectors) {
        sentence.embedding = Some(v);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scored {
    pub sentence_id: usize,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievedSentence {
    pub sentence_id: usize,
    pub score: f64,
    /// Raw document text, not the rewritten form.
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalRecord {
    pub doc_id: String,
    pub question: String,
    pub sub_questions: Vec<String>,
    #[serde(default)]
    pub degraded: bool,
    /// One list per sub-question, best first, at most `k` long.
    pub rankings: Vec<Vec<Scored>>,
    pub merged: Vec<RetrievedSentence>,
    pub k: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl RetrievalRecord {
    pub fn merged_ids(&self) -> Vec<usize> {
        self.merged.iter().map(|s| s.sentence_id).collect()
    }

    pub fn recall(&self, relevant: &BTreeSet<usize>, k: usize) -> Result<f64, crate::error::MetricError> {
        recall_at_k(&self.merged_ids(), relevant, k)
    }
}

fn by_score_then_id(a: &Scored, b: &Scored) -> Ordering {
    b.score.total_cmp(&a.score).then(a.sentence_id.cmp(&b.sentence_id))
}

/// Ranks every sentence against every sub-question and merges the lists
/// into at most `config.k` distinct sentences.
///
/// Sentences without an embedding are embedded from their retrieval text.
pub fn retrieve_top_k(
    store: &DocumentStore,
    question: &str,
    sub_questions: &[String],
    embedder: &dyn EmbeddingProvider,
    config: &RetrievalConfig,
) -> Result<RetrievalRecord, RetrievalError> {
    if config.k == 0 {
        return Err(RetrievalError::ZeroK);
    }
    if sub_questions.is_empty() {
        return Err(RetrievalError::NoSubQuestions);
    }
    let mut record = RetrievalRecord {
        doc_id: store.doc_id.clone(),
        question: question.to_string(),
        sub_questions: sub_questions.to_vec(),
        degraded: false,
        rankings: Vec::new(),
        merged: Vec::new(),
        k: config.k,
        warnings: Vec::new(),
    };
    if store.is_empty() {
        log::warn!("document {} has no sentences", store.doc_id);
        record.warnings.push("document store is empty".into());
        record.rankings = vec![Vec::new(); sub_questions.len()];
        return Ok(record);
    }

    let missing: Vec<&Sentence> = store.sentences.iter().filter(|s| s.embedding.is_none()).collect();
    let mut fresh: HashMap<usize, Vec<f64>> = HashMap::new();
    if !missing.is_empty() {
        let texts: Vec<&str> = missing.iter().map(|s| s.retrieval_text()).collect();
        for (s, v) in missing.iter().zip(embed_texts(&texts, embedder, config)?) {
            fresh.insert(s.id, v);
        }
    }
    let sentence_vectors: Vec<&[f64]> = store
        .sentences
        .iter()
        .map(|s| s.embedding.as_deref().unwrap_or_else(|| &fresh[&s.id]))
        .collect();
    let dim = sentence_vectors[0].len();
    if let Some(bad) = sentence_vectors.iter().find(|v| v.len() != dim) {
        return Err(RetrievalError::DimensionMismatch(format!(
            "sentence embeddings have dimensions {dim} and {}",
            bad.len()
        )));
    }
    let sub_refs: Vec<&str> = sub_questions.iter().map(String::as_str).collect();
    let query_vectors = embed_texts(&sub_refs, embedder, config)?;
    if query_vectors[0].len() != dim {
        return Err(RetrievalError::DimensionMismatch(format!(
            "sub-question dimension {} but sentence dimension {dim}",
            query_vectors[0].len()
        )));
    }

    let full: Vec<Vec<Scored>> = query_vectors
        .iter()
        .map(|q| {
            let mut scored: Vec<Scored> = sentence_vectors
                .iter()
                .enumerate()
                .map(|(sentence_id, v)| Scored {
                    sentence_id,
                    score: cosine(q, v),
                })
                .collect();
            scored.sort_by(by_score_then_id);
            scored
        })
        .collect();

    let merged = match config.merge {
        MergeStrategy::RoundRobin => merge_round_robin(&full, config.k),
        MergeStrategy::MaxScore => merge_max_score(&full, config.k),
    };
    record.merged = merged
        .into_iter()
        .map(|s| RetrievedSentence {
            sentence_id: s.sentence_id,
            score: s.score,
            text: store.sentences[s.sentence_id].raw.clone(),
        })
        .collect();
    record.rankings = full
        .into_iter()
        .map(|mut list| {
            list.truncate(config.k);
            list
        })
        .collect();
    Ok(record)
}

fn merge_round_robin(lists: &[Vec<Scored>], k: usize) -> Vec<Scored> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    let longest = lists.iter().map(Vec::len).max().unwrap_or(0);
    'outer: for position in 0..longest {
        for list in lists {
            if let Some(s) = list.get(position) {
                if seen.insert(s.sentence_id) {
                    out.push(*s);
                    if out.len() == k {
                        break 'outer;
                    }
                }
            }
        }
    }
    out
}

fn merge_max_score(lists: &[Vec<Scored>], k: usize) -> Vec<Scored> {
    let mut best: HashMap<usize, f64> = HashMap::new();
    for s in lists.iter().flatten() {
        let entry = best.entry(s.sentence_id).or_insert(s.score);
        if s.score > *entry {
            *entry = s.score;
        }
    }
    let mut all: Vec<Scored> = best
        .into_iter()
        .map(|(sentence_id, score)| Scored { sentence_id, score })
        .collect();
    all.sort_by(by_score_then_id);
    all.truncate(k);
    all
}

/// Question rewriting followed by [`retrieve_top_k`].
pub fn retrieve_for_question(
    store: &DocumentStore,
    question: &str,
    rewriter: &dyn RewriteProvider,
    embedder: &dyn EmbeddingProvider,
    config: &RetrievalConfig,
) -> Result<RetrievalRecord, RetrievalError> {
    let rewrite = rewrite_question(question, rewriter)?;
    let mut record = retrieve_top_k(store, question, &rewrite.sub_questions, embedder, config)?;
    record.degraded = rewrite.degraded;
    if rewrite.degraded {
        record
            .warnings
            .push("question rewrite failed; retrieved with the original question".into());
    }
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::providers::{EmbedResponse, FnRewriter, HashingEmbedder, IdentityRewriter, RewriteResponse};

    fn abbrevs() -> Vec<String> {
        RetrievalConfig::default().abbreviations
    }

    #[test]
    fn splits_on_terminal_punctuation() {
        assert_eq!(
            split_sentences("Revenue was $10. It grew 5%.", &abbrevs()),
            vec!["Revenue was $10.", "It grew 5%."]
        );
    }

    #[test]
    fn abbreviations_do_not_split() {
        let list = vec!["vs.".to_string(), "rev.".to_string()];
        assert_eq!(
            split_sentences("Q2 rev. grew vs. Q1.", &list),
            vec!["Q2 rev. grew vs. Q1."]
        );
        // Without the list, the period after "vs" precedes a capital.
        assert_eq!(split_sentences("Q2 rev. grew vs. Q1.", &[]).len(), 2);
    }

    #[test]
    fn empty_text_has_no_sentences() {
        assert!(split_sentences("", &abbrevs()).is_empty());
        assert!(split_sentences("  \n\n ", &abbrevs()).is_empty());
    }

    #[test]
    fn parentheses_protect_inner_periods() {
        let text = "Sales rose (from 1.2 vs. 1. Prior year 0.9). Costs fell.";
        assert_eq!(
            split_sentences(text, &[]),
            vec!["Sales rose (from 1.2 vs. 1. Prior year 0.9).", "Costs fell."]
        );
    }

    #[test]
    fn decimals_and_lowercase_continuations() {
        assert_eq!(split_sentences("It was 3.5 million. next one", &[]).len(), 1);
        assert_eq!(split_sentences("Is it? Yes! \"Done.\" 2020 was good.", &[]).len(), 4);
    }

    #[test]
    fn blank_line_ends_sentence() {
        assert_eq!(
            split_sentences("Table 1 shows cases\n\nthe rest follows", &[]),
            vec!["Table 1 shows cases", "the rest follows"]
        );
    }

    #[test]
    fn identity_rewrite_of_question() {
        let r = rewrite_question("How many cases?", &IdentityRewriter).unwrap();
        assert_eq!(r.sub_questions, vec!["How many cases?"]);
        assert!(!r.degraded);
    }

    #[test]
    fn failing_rewriter_falls_back() {
        let failing = FnRewriter(|_: &RewriteRequest| Err(ProviderError::Failed("down".into())));
        let r = rewrite_question("How many cases?", &failing).unwrap();
        assert_eq!(r.sub_questions, vec!["How many cases?"]);
        assert!(r.degraded);
        let empty = FnRewriter(|_: &RewriteRequest| {
            Ok(RewriteResponse {
                outputs: vec![" ".into()],
            })
        });
        assert!(rewrite_question("q", &empty).unwrap().degraded);
        assert!(matches!(
            rewrite_question("  ", &IdentityRewriter),
            Err(RetrievalError::EmptyQuestion)
        ));
    }

    #[test]
    fn sentence_rewrite_with_partial_outage() {
        let mut store = DocumentStore::from_sentences("d", (0..10).map(|i| format!("Sentence {i}.")));
        let flaky = FnRewriter(|r: &RewriteRequest| {
            let n: usize = r.text.trim_matches(|c: char| !c.is_ascii_digit()).parse().unwrap();
            if n.is_multiple_of(2) {
                Err(ProviderError::Failed("outage".into()))
            } else {
                Ok(RewriteResponse {
                    outputs: vec![format!("Rewritten {n}.")],
                })
            }
        });
        assert_eq!(rewrite_sentences(&mut store, &flaky, 3), 5);
        for s in store.sentences() {
            assert_eq!(s.raw, format!("Sentence {}.", s.id));
            let expected = if s.id % 2 == 0 {
                s.raw.clone()
            } else {
                format!("Rewritten {}.", s.id)
            };
            assert_eq!(s.retrieval_text(), expected);
        }
        let record = retrieve_top_k(
            &store,
            "q",
            &["Sentence 4.".to_string()],
            &HashingEmbedder::default(),
            &RetrievalConfig {
                k: 10,
                ..RetrievalConfig::default()
            },
        )
        .unwrap();
        assert_eq!(record.merged.len(), 10);
        assert_eq!(record.merged[0].sentence_id, 4);
    }

    #[test]
    fn identical_sentence_ranks_first_with_score_one() {
        let store = DocumentStore::from_sentences(
            "d",
            [
                "Stomach cancer survival improved.",
                "Lung cancer cases rose.",
                "Kidney data is sparse.",
            ],
        );
        let record = retrieve_top_k(
            &store,
            "q",
            &["Lung cancer cases rose.".to_string()],
            &HashingEmbedder::default(),
            &RetrievalConfig::default(),
        )
        .unwrap();
        assert_eq!(record.merged[0].sentence_id, 1);
        assert_eq!(record.merged[0].score, 1.0);
        assert_eq!(record.merged[0].text, "Lung cancer cases rose.");
    }

    struct Fixed;

    impl EmbeddingProvider for Fixed {
        fn embed(&self, request: &EmbedRequest) -> Result<EmbedResponse, ProviderError> {
            let vectors = request
                .texts
                .iter()
                .map(|t| match t.as_str() {
                    "x" | "q" => vec![1.0, 0.0, 0.0],
                    "y" => vec![0.0, 1.0, 0.0],
                    "xy" => vec![0.6, 0.8, 0.0],
                    "short" => vec![1.0, 0.0],
                    _ => vec![0.0, 0.0, 1.0],
                })
                .collect();
            Ok(EmbedResponse { vectors })
        }
    }

    #[test]
    fn orthogonal_sentence_scores_zero_and_ranks_last() {
        let store = DocumentStore::from_sentences("d", ["y", "x", "xy"]);
        let record = retrieve_top_k(&store, "q", &["q".into()], &Fixed, &RetrievalConfig::default()).unwrap();
        assert_eq!(record.merged_ids(), vec![1, 2, 0]);
        assert_eq!(record.merged[2].score, 0.0);
        assert!((record.merged[1].score - 0.6).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_a_configuration_error() {
        let store = DocumentStore::from_sentences("d", ["x", "y"]);
        let err = retrieve_top_k(&store, "q", &["short".into()], &Fixed, &RetrievalConfig::default());
        assert!(matches!(err, Err(RetrievalError::DimensionMismatch(_))));
        let drift = DocumentStore::from_sentences("d", ["x", "short"]);
        let err = retrieve_top_k(&drift, "q", &["q".into()], &Fixed, &RetrievalConfig::default());
        assert!(matches!(err, Err(RetrievalError::DimensionMismatch(_))));
    }

    #[test]
    fn empty_store_gives_empty_record_with_warning() {
        let store = DocumentStore::from_sentences("d", Vec::<String>::new());
        let record = retrieve_top_k(&store, "q", &["q".into()], &Fixed, &RetrievalConfig::default()).unwrap();
        assert!(record.merged.is_empty());
        assert_eq!(record.warnings.len(), 1);
    }

    #[test]
    fn round_robin_interleaves_and_dedups() {
        let s = |id, score| Scored { sentence_id: id, score };
        let lists = vec![
            vec![s(1, 0.9), s(2, 0.8), s(3, 0.7)],
            vec![s(2, 0.95), s(4, 0.5), s(1, 0.1)],
        ];
        let ids: Vec<usize> = merge_round_robin(&lists, 10).iter().map(|s| s.sentence_id).collect();
        assert_eq!(ids, vec![1, 2, 4, 3]);
        let ids: Vec<usize> = merge_round_robin(&lists, 2).iter().map(|s| s.sentence_id).collect();
        assert_eq!(ids, vec![1, 2]);
        let ids: Vec<usize> = merge_max_score(&lists, 10).iter().map(|s| s.sentence_id).collect();
        assert_eq!(ids, vec![2, 1, 3, 4]);
    }

    #[test]
    fn ties_break_by_sentence_id() {
        let store = DocumentStore::from_sentences("d", ["same", "other", "same"]);
        let record = retrieve_top_k(
            &store,
            "q",
            &["same".into()],
            &HashingEmbedder::default(),
            &RetrievalConfig::default(),
        )
        .unwrap();
        assert_eq!(&record.merged_ids()[..2], &[0, 2]);
    }
}

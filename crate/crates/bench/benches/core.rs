use std::fs;
use std::hint::black_box;
use std::path::PathBuf;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use tabqa_core::metrics::{chrf, teds, tree_edit_distance, StructureTree};
use tabqa_core::providers::{HashingEmbedder, HASHING_DIMENSION};
use tabqa_core::retrieval::{embed_store, retrieve_top_k, DocumentStore, RetrievalConfig};
use tabqa_core::{parse_html_table, serialize_html};
use tabqa_oracles::generate::{random_table, random_text, rng};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn ted(c: &mut Criterion) {
    let mut group = c.benchmark_group("tree_edit_distance");
    let mut r = rng(1);
    for size in [4, 8, 12] {
        let a = random_table(&mut r, size, size, 3);
        let b = random_table(&mut r, size, size, 3);
        let (ta, tb) = (StructureTree::from_table(&a), StructureTree::from_table(&b));
        group.bench_with_input(
            BenchmarkId::from_parameter(ta.node_count() + tb.node_count()),
            &(ta, tb),
            |bench, (ta, tb)| bench.iter(|| tree_edit_distance(black_box(ta.tree()), black_box(tb.tree()))),
        );
    }
    group.finish();
    let cancer_sites =
        parse_html_table(&fs::read_to_string(fixtures().join("tables/cancer_sites.html")).unwrap()).unwrap();
    c.bench_function("teds/cancer_sites_self", |bench| {
        bench.iter(|| teds(black_box(&cancer_sites), black_box(&cancer_sites)))
    });
}

fn chrf_scores(c: &mut Criterion) {
    let mut r = rng(2);
    let pairs: Vec<(String, String)> = (0..100)
        .map(|_| (random_text(&mut r, 40), random_text(&mut r, 40)))
        .collect();
    c.bench_function("chrf/100_pairs", |bench| {
        bench.iter(|| pairs.iter().map(|(a, b)| chrf(black_box(a), black_box(b))).sum::<f64>())
    });
}

fn html(c: &mut Criterion) {
    let cancer_sites = fs::read_to_string(fixtures().join("tables/cancer_sites.html")).unwrap();
    c.bench_function("html/parse_cancer_sites", |bench| {
        bench.iter(|| parse_html_table(black_box(&cancer_sites)).unwrap())
    });
    let table = parse_html_table(&cancer_sites).unwrap();
    c.bench_function("html/serialize_cancer_sites", |bench| {
        bench.iter(|| serialize_html(black_box(&table)))
    });
}

fn retrieval(c: &mut Criterion) {
    let line = fs::read_to_string(fixtures().join("retrieval/docs.jsonl")).unwrap();
    let doc: serde_json::Value = serde_json::from_str(line.lines().next().unwrap()).unwrap();
    let sentences: Vec<String> = doc["sentences"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s.as_str().unwrap().to_string())
        .collect();
    let embedder = HashingEmbedder::new(HASHING_DIMENSION);
    let config = RetrievalConfig::default();
    c.bench_function("retrieval/embed_200_sentences", |bench| {
        bench.iter(|| {
            let mut store = DocumentStore::from_sentences("bench", sentences.iter().cloned());
            embed_store(&mut store, &embedder, &config).unwrap();
            store
        })
    });
    let mut store = DocumentStore::from_sentences("bench", sentences.iter().cloned());
    embed_store(&mut store, &embedder, &config).unwrap();
    let question = "How did the revenue and net income of Acme change from 2019 to 2023?".to_string();
    let subs = vec![
        "What was the revenue of Acme in each year from 2019 to 2023?".to_string(),
        "What was the net income of Acme in each year from 2019 to 2023?".to_string(),
    ];
    c.bench_function("retrieval/top_30_two_sub_questions", |bench| {
        bench.iter(|| retrieve_top_k(black_box(&store), &question, &subs, &embedder, &config).unwrap())
    });
}

criterion_group!(benches, ted, chrf_scores, html, retrieval);
criterion_main!(benches);

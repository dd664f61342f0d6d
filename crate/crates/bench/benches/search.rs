use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use wildvis_core::bench::{naive_search, sample_queries};
use wildvis_core::search::{decode_index, encode_index};
use wildvis_core::{CorpusIndex, FilterQuery};

fn search(c: &mut Criterion) {
    let index = wildvis_bench::index(20_000);
    let terms = sample_queries(&index, 10, 0);
    let mut g = c.benchmark_group("search");
    for term in terms.iter().take(3) {
        let q = FilterQuery::contains(term.clone());
        g.bench_with_input(BenchmarkId::new("indexed", term), &q, |b, q| {
            b.iter(|| index.execute_search(black_box(q)).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("naive", term), &q, |b, q| {
            b.iter(|| naive_search(index.docs(), black_box(q)))
        });
    }
    let phrase = FilterQuery {
        toxic: Some(false),
        language: Some("English".into()),
        ..FilterQuery::contains("write a python function")
    };
    g.bench_function("phrase+filters", |b| b.iter(|| index.execute_search(black_box(&phrase)).unwrap()));
    g.bench_function("capped-page-300", |b| {
        let q = FilterQuery { page: 300, ..FilterQuery::default() };
        b.iter(|| index.execute_search(black_box(&q)).unwrap())
    });
    g.finish();
}

fn build(c: &mut Criterion) {
    let docs = wildvis_bench::corpus(5_000);
    let mut g = c.benchmark_group("index");
    g.sample_size(10);
    g.bench_function("build-5k", |b| b.iter(|| CorpusIndex::build(black_box(docs.clone())).unwrap()));
    let bytes = encode_index(&CorpusIndex::build(docs.clone()).unwrap());
    g.bench_function("decode-5k", |b| b.iter(|| decode_index(black_box(&bytes)).unwrap()));
    g.finish();
}

criterion_group!(benches, search, build);
criterion_main!(benches);

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;
use wildvis_core::projection::{fit_projector, knn_graph, optimize_layout, LayoutParams, ProjectorParams};
use wildvis_core::synth::gaussian_blobs;
use wildvis_core::viz::{build_bundle, select_display_subset};

fn projection(c: &mut Criterion) {
    let (x, _, _) = gaussian_blobs(1_000, 64, 5, 3.0, 1);
    let params = LayoutParams { epochs: 50, ..Default::default() };
    let graph = knn_graph(&x, params.k_neighbors).unwrap();
    let layout = optimize_layout(&x, &graph, &params).unwrap();
    let model = fit_projector(&x, &layout, "English", &ProjectorParams { epochs: 20, ..Default::default() }).unwrap();

    let mut g = c.benchmark_group("projection");
    g.sample_size(10);
    g.bench_function("knn-1000x64", |b| b.iter(|| knn_graph(black_box(&x), 15).unwrap()));
    g.bench_function("layout-50-epochs", |b| b.iter(|| optimize_layout(&x, black_box(&graph), &params).unwrap()));
    g.bench_function("project-one", |b| b.iter(|| model.project(black_box(&x[17])).unwrap()));
    g.finish();
}

fn bundle(c: &mut Criterion) {
    let corpus = wildvis_bench::corpus(12_000);
    let subset = select_display_subset(&corpus, "English", 1_500, 0).unwrap();
    let mut coords = std::collections::HashMap::new();
    let mut previews = std::collections::HashMap::new();
    for (i, r) in subset.records(&corpus).into_iter().enumerate() {
        let k = (r.dataset.clone(), r.conversation_id.clone());
        coords.insert(k.clone(), (i as f32, -(i as f32)));
        previews.insert(k, r.preview());
    }
    let mut g = c.benchmark_group("bundle");
    g.sample_size(20);
    g.bench_function("build-3000", |b| b.iter(|| build_bundle(black_box(&subset), &coords, &previews).unwrap()));
    g.finish();
}

criterion_group!(benches, projection, bundle);
criterion_main!(benches);

use serde::Deserialize;
use wildvis_core::embed::local_embed;
use wildvis_core::synth::{generate_synthetic_corpus, uniform_topic_mix, Topic};
use wildvis_core::EmbedderConfig;

#[derive(Deserialize)]
struct Vector {
    text: String,
    dimension: usize,
    ngram_range: (usize, usize),
    values: Vec<f32>,
}

#[test]
fn matches_reference_vectors() {
    let raw = include_str!("data/embed_vectors.json");
    let cases: Vec<Vector> = serde_json::from_str(raw).unwrap();
    assert_eq!(cases.len(), 20);
    for case in cases {
        let v = local_embed(&case.text, case.dimension, case.ngram_range);
        assert_eq!(v.dim(), case.dimension);
        for (i, (got, want)) in v.values().iter().zip(&case.values).enumerate() {
            assert!(
                (got - want).abs() <= 1e-6,
                "{:?} component {i}: {got} vs {want}",
                case.text
            );
        }
        let all_zero = case.values.iter().all(|&x| x == 0.0);
        assert_eq!(v.is_degenerate(), all_zero, "{:?}", case.text);
    }
}

#[test]
fn same_topic_first_turns_are_closer() {
    let corpus = generate_synthetic_corpus(600, 21, &uniform_topic_mix()).unwrap();
    let cfg = EmbedderConfig::default();
    let topic_of = |text: &str| {
        Topic::ALL
            .into_iter()
            .find(|t| t.keywords().iter().any(|k| text.to_lowercase().contains(k)))
    };
    let mut labelled = Vec::new();
    for r in corpus.iter().filter(|r| r.language == "English").take(200) {
        let text = r.first_user_turn().unwrap();
        if let Some(t) = topic_of(text) {
            labelled.push((t, local_embed(text, cfg.dimension, cfg.ngram_range)));
        }
    }
    assert!(labelled.len() > 100);
    let (mut same, mut ns, mut cross, mut nc) = (0.0, 0usize, 0.0, 0usize);
    for (i, (ti, vi)) in labelled.iter().enumerate() {
        for (tj, vj) in &labelled[i + 1..] {
            let c = vi.cosine(vj);
            if ti == tj {
                same += c;
                ns += 1;
            } else {
                cross += c;
                nc += 1;
            }
        }
    }
    let (same, cross) = (same / ns as f64, cross / nc as f64);
    assert!(same > cross + 0.1, "same-topic {same:.3} vs cross-topic {cross:.3}");
}

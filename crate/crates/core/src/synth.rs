//! Deterministic synthetic conversation corpora and Gaussian blob sets.
//!
//! First user turns are filled from per-topic templates so that topics form
//! clusters in embedding space. A fraction of records are attributed to a
//! small pool of heavy users sharing a `hashed_ip`.

use chrono::{TimeZone, Utc};
use rand::distr::weighted::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::record::{ConversationRecord, Turn};

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("invalid argument: {0}")]
    InvalidArg(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topic {
    Coding,
    Email,
    Story,
    Math,
}

impl Topic {
    pub const ALL: [Topic; 4] = [Topic::Coding, Topic::Email, Topic::Story, Topic::Math];

    /// Words of which every first turn of this topic contains at least one.
    pub fn keywords(self) -> &'static [&'static str] {
        match self {
            Topic::Coding => &["python", "javascript", "rust", "sql", "code", "función", "código"],
            Topic::Email => &["email", "correo"],
            Topic::Story => &["story", "historia", "cuento"],
            Topic::Math => &["how many", "solve", "calculate", "cuántos", "resuelve"],
        }
    }

    pub fn parse(s: &str) -> Option<Topic> {
        Topic::ALL.into_iter().find(|t| t.name() == s)
    }

    pub fn name(self) -> &'static str {
        match self {
            Topic::Coding => "coding",
            Topic::Email => "email",
            Topic::Story => "story",
            Topic::Math => "math",
        }
    }

    fn templates(self, spanish: bool) -> &'static [&'static str] {
        match (self, spanish) {
            (Topic::Coding, false) => &[
                "write a python function that can {verb} a {object}",
                "how do I {verb} a {object} in javascript without a library",
                "fix this rust code so it does not fail to {verb} the {object}",
                "explain this sql query that tries to {verb} every {object}",
                "review my python code that should {verb} a {object} quickly",
            ],
            (Topic::Email, false) => &[
                "write an email to my {person} about {subject}",
                "draft a polite email asking my {person} for {subject}",
                "help me reply to this email from my {person} regarding {subject}",
                "make this email to the {person} about {subject} sound more formal",
            ],
            (Topic::Story, false) => &[
                "write a story about a {creature} who {plot}",
                "tell me a short story where a {creature} {plot}",
                "continue this story: once upon a time a {creature} {plot}",
                "write a bedtime story in which a brave {creature} {plot}",
            ],
            (Topic::Math, false) => &[
                "how many {things} are in {a} boxes if each box holds {b}",
                "solve for x: {a}x + {b} = {c}",
                "calculate {a} times {b} plus {c} and show the steps",
                "how many {things} remain if I start with {c} and give away {a}",
            ],
            (Topic::Coding, true) => &[
                "escribe una función en python que pueda {verb_es} una {object_es}",
                "cómo puedo {verb_es} una {object_es} con javascript",
                "corrige este código para {verb_es} la {object_es}",
            ],
            (Topic::Email, true) => &[
                "escribe un correo a mi {person_es} sobre {subject_es}",
                "redacta un correo formal para mi {person_es} pidiendo {subject_es}",
            ],
            (Topic::Story, true) => &[
                "escribe una historia sobre un {creature_es} que {plot_es}",
                "cuéntame un cuento corto donde un {creature_es} {plot_es}",
            ],
            (Topic::Math, true) => &[
                "cuántos {things_es} hay en {a} cajas si cada caja tiene {b}",
                "resuelve para x: {a}x + {b} = {c}",
            ],
        }
    }
}

const VERBS: &[&str] = &["sort", "reverse", "parse", "merge", "filter", "flatten", "validate", "serialize"];
const OBJECTS: &[&str] = &["list", "dictionary", "string", "linked list", "json file", "csv table", "binary tree", "matrix"];
const PERSONS: &[&str] = &["boss", "landlord", "professor", "colleague", "client", "neighbor", "team"];
const SUBJECTS: &[&str] = &["a deadline extension", "the broken heater", "a salary raise", "the project update", "a refund", "next week's meeting"];
const CREATURES: &[&str] = &["dragon", "robot", "fox", "wizard", "pirate", "unicorn", "astronaut"];
const PLOTS: &[&str] = &["loses its way home", "finds a hidden treasure", "learns to fly", "saves a small village", "befriends a lonely giant"];
const THINGS: &[&str] = &["apples", "marbles", "pencils", "cookies", "coins"];

const VERBS_ES: &[&str] = &["ordenar", "invertir", "filtrar", "validar"];
const OBJECTS_ES: &[&str] = &["lista", "cadena", "tabla", "matriz"];
const PERSONS_ES: &[&str] = &["jefe", "profesor", "cliente", "vecino"];
const SUBJECTS_ES: &[&str] = &["una prórroga", "el informe mensual", "un reembolso", "la reunión"];
const CREATURES_ES: &[&str] = &["dragón", "robot", "zorro", "mago"];
const PLOTS_ES: &[&str] = &["encuentra un tesoro", "aprende a volar", "salva su pueblo"];
const THINGS_ES: &[&str] = &["manzanas", "canicas", "lápices"];

const FOLLOW_UPS: &[&str] = &[
    "thanks, can you make it shorter",
    "please add more detail to the second part",
    "can you explain that again more simply",
    "that looks good, now translate it to french",
    "what would you change to improve it",
];
const REPLIES: &[&str] = &[
    "Sure, here is a version that should work for you.",
    "Certainly. Below is a draft you can adapt.",
    "Here is one way to approach it, step by step.",
    "Of course. Let me know if you want any changes.",
];

const COUNTRIES: &[(&str, &[&str])] = &[
    ("United States", &["California", "Texas", "Florida", "New York", ""]),
    ("Russia", &["Moscow", ""]),
    ("China", &["Beijing", "Guangdong"]),
    ("Germany", &["Bavaria", "Berlin"]),
    ("Brazil", &["São Paulo", ""]),
    ("Spain", &["Madrid", "Catalonia"]),
    ("Mexico", &["Jalisco", ""]),
];
const MODELS: &[&str] = &["gpt-3.5-turbo", "gpt-4", "vicuna-13b", "llama-2-13b-chat", "claude-1"];

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub n: usize,
    pub seed: u64,
    pub topic_mix: Vec<(Topic, f64)>,
    pub datasets: Vec<String>,
    /// (language, weight); "Spanish" uses Spanish templates, anything else English ones.
    pub languages: Vec<(String, f64)>,
    /// Fraction of records attributed to a shared pool of heavy users.
    pub shared_ip_fraction: f64,
}

impl SynthConfig {
    pub fn new(n: usize, seed: u64, topic_mix: &[(Topic, f64)]) -> Self {
        Self {
            n,
            seed,
            topic_mix: topic_mix.to_vec(),
            datasets: vec!["wildchat".into(), "lmsys".into()],
            languages: vec![("English".into(), 0.8), ("Spanish".into(), 0.2)],
            shared_ip_fraction: 0.3,
        }
    }
}

pub fn uniform_topic_mix() -> Vec<(Topic, f64)> {
    Topic::ALL.iter().map(|t| (*t, 1.0)).collect()
}

pub fn synthetic_hashed_ip(seed: u64, user: u64) -> String {
    let digest = Sha256::digest(format!("synthetic-user:{seed}:{user}").as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn fill(template: &str, rng: &mut ChaCha8Rng) -> String {
    let mut out = String::with_capacity(template.len() + 32);
    let mut rest = template;
    while let Some(start) = rest.find('{') {
        out.push_str(&rest[..start]);
        let end = start + rest[start..].find('}').expect("unterminated slot");
        let slot = &rest[start + 1..end];
        let word: String = match slot {
            "verb" => VERBS.choose(rng).unwrap().to_string(),
            "object" => OBJECTS.choose(rng).unwrap().to_string(),
            "person" => PERSONS.choose(rng).unwrap().to_string(),
            "subject" => SUBJECTS.choose(rng).unwrap().to_string(),
            "creature" => CREATURES.choose(rng).unwrap().to_string(),
            "plot" => PLOTS.choose(rng).unwrap().to_string(),
            "things" => THINGS.choose(rng).unwrap().to_string(),
            "verb_es" => VERBS_ES.choose(rng).unwrap().to_string(),
            "object_es" => OBJECTS_ES.choose(rng).unwrap().to_string(),
            "person_es" => PERSONS_ES.choose(rng).unwrap().to_string(),
            "subject_es" => SUBJECTS_ES.choose(rng).unwrap().to_string(),
            "creature_es" => CREATURES_ES.choose(rng).unwrap().to_string(),
            "plot_es" => PLOTS_ES.choose(rng).unwrap().to_string(),
            "things_es" => THINGS_ES.choose(rng).unwrap().to_string(),
            "a" | "b" | "c" => rng.random_range(2..200u32).to_string(),
            other => panic!("unknown slot {other}"),
        };
        out.push_str(&word);
        rest = &rest[end + 1..];
    }
    out.push_str(rest);
    out
}

pub fn generate_synthetic_corpus(
    n: usize,
    seed: u64,
    topic_mix: &[(Topic, f64)],
) -> Result<Vec<ConversationRecord>, SynthError> {
    generate(&SynthConfig::new(n, seed, topic_mix))
}

pub fn generate(cfg: &SynthConfig) -> Result<Vec<ConversationRecord>, SynthError> {
    if cfg.n < 1 {
        return Err(SynthError::InvalidArg("n must be at least 1".into()));
    }
    if cfg.topic_mix.is_empty() {
        return Err(SynthError::InvalidArg("topic mix is empty".into()));
    }
    if cfg.topic_mix.iter().any(|(_, w)| !(*w > 0.0 && w.is_finite())) {
        return Err(SynthError::InvalidArg("topic weights must be positive".into()));
    }
    if cfg.datasets.is_empty() || cfg.languages.is_empty() {
        return Err(SynthError::InvalidArg("datasets and languages must be non-empty".into()));
    }
    if !(0.0..=1.0).contains(&cfg.shared_ip_fraction) {
        return Err(SynthError::InvalidArg("shared_ip_fraction outside [0, 1]".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let topic_dist = WeightedIndex::new(cfg.topic_mix.iter().map(|(_, w)| *w))
        .map_err(|e| SynthError::InvalidArg(e.to_string()))?;
    let lang_dist = WeightedIndex::new(cfg.languages.iter().map(|(_, w)| *w))
        .map_err(|e| SynthError::InvalidArg(e.to_string()))?;
    let exchanges = WeightedIndex::new([50, 25, 15, 10]).unwrap();
    let heavy_users = (cfg.n / 50).max(1) as u64;
    let start = Utc.with_ymd_and_hms(2023, 4, 1, 0, 0, 0).unwrap().timestamp();
    let span = 400 * 24 * 3600;

    let mut out = Vec::with_capacity(cfg.n);
    for i in 0..cfg.n {
        let topic = cfg.topic_mix[topic_dist.sample(&mut rng)].0;
        let language = cfg.languages[lang_dist.sample(&mut rng)].0.clone();
        let spanish = language == "Spanish";
        let first = fill(topic.templates(spanish).choose(&mut rng).unwrap(), &mut rng);

        let mut turns = vec![Turn::user(first)];
        let n_exchanges = exchanges.sample(&mut rng) + 1;
        let trailing_user = rng.random_bool(0.05);
        for ex in 0..n_exchanges {
            if ex > 0 {
                turns.push(Turn::user(*FOLLOW_UPS.choose(&mut rng).unwrap()));
            }
            let last = ex + 1 == n_exchanges;
            if !(last && trailing_user) {
                turns.push(Turn::assistant(*REPLIES.choose(&mut rng).unwrap()));
            }
        }

        let hashed_ip = if rng.random_bool(0.02) {
            String::new()
        } else if rng.random_bool(cfg.shared_ip_fraction) {
            synthetic_hashed_ip(cfg.seed, rng.random_range(0..heavy_users))
        } else {
            synthetic_hashed_ip(cfg.seed, heavy_users + i as u64)
        };
        let (country, states) = COUNTRIES.choose(&mut rng).unwrap();
        let state = states.choose(&mut rng).unwrap();

        out.push(ConversationRecord {
            conversation_id: format!("c{}-{:07}", cfg.seed, i),
            dataset: cfg.datasets.choose(&mut rng).unwrap().clone(),
            timestamp: Utc.timestamp_opt(start + rng.random_range(0..span), 0).unwrap(),
            turn_count: turns.len() as u32,
            turns,
            hashed_ip,
            country: country.to_string(),
            state: state.to_string(),
            language,
            toxic: rng.random_bool(0.05),
            redacted: rng.random_bool(0.08),
            model: MODELS.choose(&mut rng).unwrap().to_string(),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct PlantedUser {
    pub hashed_ip: String,
    pub dataset: String,
    pub conversation_ids: Vec<String>,
    /// Id of the single conversation whose first turn carries the phrase.
    pub phrase_conversation: String,
}

/// Append `count` conversations by one new user; exactly one of them
/// contains `phrase` in its first turn.
pub fn plant_user_scenario(
    records: &mut Vec<ConversationRecord>,
    phrase: &str,
    count: usize,
    seed: u64,
) -> PlantedUser {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x005e_ed0f_u64);
    let hashed_ip = synthetic_hashed_ip(seed, u64::MAX);
    let dataset = "wildchat".to_string();
    let start = Utc.with_ymd_and_hms(2023, 6, 1, 0, 0, 0).unwrap().timestamp();
    let mut ids = Vec::with_capacity(count);
    let phrase_at = rng.random_range(0..count.max(1));
    for k in 0..count {
        let id = format!("planted-{seed}-{k:02}");
        let first = if k == phrase_at {
            format!("rewrite the text below for my newspaper, {phrase}, and keep the tone neutral")
        } else {
            format!(
                "rewrite this press release about {} for my newspaper column",
                SUBJECTS.choose(&mut rng).unwrap()
            )
        };
        records.push(ConversationRecord {
            conversation_id: id.clone(),
            dataset: dataset.clone(),
            timestamp: Utc.timestamp_opt(start + 3600 * k as i64, 0).unwrap(),
            turns: vec![Turn::user(first), Turn::assistant(REPLIES[0])],
            hashed_ip: hashed_ip.clone(),
            country: "United States".into(),
            state: "New York".into(),
            language: "English".into(),
            toxic: false,
            redacted: false,
            model: "gpt-4".into(),
            turn_count: 2,
        });
        ids.push(id);
    }
    PlantedUser {
        hashed_ip,
        dataset,
        phrase_conversation: ids[phrase_at].clone(),
        conversation_ids: ids,
    }
}

/// `n` points in `dim` dimensions drawn from `k` isotropic Gaussian blobs.
///
/// Centers are N(0, center_std²) per coordinate, points are center plus
/// N(0, 1) noise. Returns (points, blob label per point, centers).
pub fn gaussian_blobs(
    n: usize,
    dim: usize,
    k: usize,
    center_std: f64,
    seed: u64,
) -> (Vec<Vec<f32>>, Vec<usize>, Vec<Vec<f64>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let center_dist = Normal::new(0.0, center_std).unwrap();
    let centers: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..dim).map(|_| center_dist.sample(&mut rng)).collect())
        .collect();
    let mut points = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % k;
        points.push(sample_blob_point(&centers[c], &mut rng));
        labels.push(c);
    }
    (points, labels, centers)
}

pub fn sample_blob_point<R: Rng>(center: &[f64], rng: &mut R) -> Vec<f32> {
    let noise = Normal::new(0.0, 1.0).unwrap();
    center
        .iter()
        .map(|c| (c + noise.sample(rng)) as f32)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::write_corpus;

    fn bytes(records: &[ConversationRecord]) -> Vec<u8> {
        let mut buf = Vec::new();
        write_corpus(&mut buf, records).unwrap();
        buf
    }

    #[test]
    fn deterministic_bytes() {
        let mix = uniform_topic_mix();
        let a = generate_synthetic_corpus(5, 7, &mix).unwrap();
        let b = generate_synthetic_corpus(5, 7, &mix).unwrap();
        assert_eq!(bytes(&a), bytes(&b));
        let c = generate_synthetic_corpus(5, 8, &mix).unwrap();
        assert_ne!(bytes(&a), bytes(&c));
    }

    #[test]
    fn invalid_args() {
        assert!(generate_synthetic_corpus(0, 1, &uniform_topic_mix()).is_err());
        assert!(generate_synthetic_corpus(3, 1, &[]).is_err());
        assert!(generate_synthetic_corpus(3, 1, &[(Topic::Math, 0.0)]).is_err());
    }

    #[test]
    fn ten_thousand_unique_valid() {
        let recs = generate_synthetic_corpus(10_000, 1, &uniform_topic_mix()).unwrap();
        assert_eq!(recs.len(), 10_000);
        let ids: std::collections::HashSet<_> = recs.iter().map(|r| &r.conversation_id).collect();
        assert_eq!(ids.len(), 10_000);
        for r in &recs {
            r.validate().unwrap();
        }
    }

    #[test]
    fn coding_only_mix_uses_coding_keywords() {
        let recs = generate_synthetic_corpus(500, 3, &[(Topic::Coding, 1.0)]).unwrap();
        for r in &recs {
            let first = r.first_user_turn().unwrap();
            assert!(
                Topic::Coding.keywords().iter().any(|k| first.contains(k)),
                "{first}"
            );
        }
    }

    #[test]
    fn heavy_users_share_ips() {
        let recs = generate_synthetic_corpus(2_000, 4, &uniform_topic_mix()).unwrap();
        let mut counts = std::collections::HashMap::new();
        for r in recs.iter().filter(|r| !r.hashed_ip.is_empty()) {
            *counts.entry(&r.hashed_ip).or_insert(0) += 1;
        }
        assert!(counts.values().any(|&c| c >= 5));
    }

    #[test]
    fn planted_scenario() {
        let mut recs = generate_synthetic_corpus(50, 2, &uniform_topic_mix()).unwrap();
        let planted = plant_user_scenario(&mut recs, "keep the source a secret", 15, 2);
        assert_eq!(recs.len(), 65);
        assert_eq!(planted.conversation_ids.len(), 15);
        let with_phrase = recs
            .iter()
            .filter(|r| r.turns.iter().any(|t| t.text.contains("keep the source a secret")))
            .count();
        assert_eq!(with_phrase, 1);
    }
}

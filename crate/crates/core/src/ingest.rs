//! Line-delimited JSON ingestion.
//!
//! Every source schema is described by a [`FieldMapping`]: canonical field
//! name to source key, plus constant defaults for fields a source lacks.
//! Two mappings ship built in (`wildchat-like`, `lmsys-like`) alongside the
//! identity mapping `canonical` used by the corpus files this crate writes.

use std::collections::{BTreeMap, HashSet};
use std::io::BufRead;

use chrono::{DateTime, TimeZone, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::record::{ConversationRecord, InvariantViolation, Role, Turn};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed line: {0}")]
    MalformedLine(String),
    #[error("missing field `{0}`")]
    MissingField(String),
    #[error("field `{field}` has unusable value: {reason}")]
    BadValue { field: String, reason: String },
    #[error(transparent)]
    InvariantViolation(#[from] InvariantViolation),
    #[error("duplicate conversation {dataset}/{conversation_id}")]
    Duplicate {
        dataset: String,
        conversation_id: String,
    },
    #[error("unknown adapter `{0}`")]
    UnknownAdapter(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Canonical fields a mapping can point at.
pub const CANONICAL_FIELDS: [&str; 12] = [
    "conversation_id",
    "dataset",
    "timestamp",
    "turns",
    "hashed_ip",
    "country",
    "state",
    "language",
    "toxic",
    "redacted",
    "model",
    "turn_count",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldMapping {
    pub name: String,
    /// canonical field name -> source key. Unlisted fields use the canonical
    /// name as the source key.
    #[serde(default)]
    pub fields: BTreeMap<String, String>,
    /// canonical field name -> value used when the source key is absent.
    #[serde(default)]
    pub defaults: BTreeMap<String, Value>,
    #[serde(default = "default_role_key")]
    pub turn_role_key: String,
    #[serde(default = "default_text_key")]
    pub turn_text_key: String,
    /// Extra spellings of roles, e.g. "human" -> user.
    #[serde(default)]
    pub role_aliases: BTreeMap<String, Role>,
}

fn default_role_key() -> String {
    "role".into()
}

fn default_text_key() -> String {
    "text".into()
}

impl FieldMapping {
    pub fn canonical() -> Self {
        Self {
            name: "canonical".into(),
            fields: BTreeMap::new(),
            defaults: BTreeMap::new(),
            turn_role_key: default_role_key(),
            turn_text_key: default_text_key(),
            role_aliases: BTreeMap::new(),
        }
    }

    pub fn wildchat_like() -> Self {
        let mut m = Self::canonical();
        m.name = "wildchat-like".into();
        m.fields.insert("conversation_id".into(), "conversation_hash".into());
        m.fields.insert("turns".into(), "conversation".into());
        m.fields.insert("turn_count".into(), "turn".into());
        m.defaults.insert("dataset".into(), Value::from("wildchat"));
        m.turn_text_key = "content".into();
        m
    }

    pub fn lmsys_like() -> Self {
        let mut m = Self::canonical();
        m.name = "lmsys-like".into();
        m.fields.insert("turns".into(), "conversation".into());
        m.fields.insert("turn_count".into(), "turn".into());
        m.fields.insert("timestamp".into(), "tstamp".into());
        m.defaults.insert("dataset".into(), Value::from("lmsys"));
        m.defaults.insert("country".into(), Value::from(""));
        m.defaults.insert("toxic".into(), Value::from(false));
        m.defaults.insert("timestamp".into(), Value::from(0));
        m.turn_text_key = "content".into();
        m.role_aliases.insert("human".into(), Role::User);
        m.role_aliases.insert("gpt".into(), Role::Assistant);
        m
    }

    pub fn builtin(name: &str) -> Result<Self, IngestError> {
        match name {
            "canonical" => Ok(Self::canonical()),
            "wildchat-like" => Ok(Self::wildchat_like()),
            "lmsys-like" => Ok(Self::lmsys_like()),
            other => Err(IngestError::UnknownAdapter(other.into())),
        }
    }

    fn source_key<'a>(&'a self, canonical: &'a str) -> &'a str {
        self.fields
            .get(canonical)
            .map(String::as_str)
            .unwrap_or(canonical)
    }

    fn lookup<'a>(&'a self, obj: &'a serde_json::Map<String, Value>, canonical: &str) -> Option<&'a Value> {
        match obj.get(self.source_key(canonical)) {
            Some(Value::Null) | None => self.defaults.get(canonical),
            Some(v) => Some(v),
        }
    }

    fn role(&self, raw: &str) -> Option<Role> {
        if let Some(role) = self.role_aliases.get(raw) {
            return Some(*role);
        }
        match raw {
            "user" => Some(Role::User),
            "assistant" => Some(Role::Assistant),
            _ => None,
        }
    }
}

fn bad(field: &str, reason: impl Into<String>) -> IngestError {
    IngestError::BadValue {
        field: field.into(),
        reason: reason.into(),
    }
}

fn as_string(field: &str, v: &Value) -> Result<String, IngestError> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        other => Err(bad(field, format!("expected string, got {other}"))),
    }
}

fn as_bool(field: &str, v: &Value) -> Result<bool, IngestError> {
    match v {
        Value::Bool(b) => Ok(*b),
        Value::String(s) if s == "true" => Ok(true),
        Value::String(s) if s == "false" => Ok(false),
        other => Err(bad(field, format!("expected boolean, got {other}"))),
    }
}

fn as_timestamp(field: &str, v: &Value) -> Result<DateTime<Utc>, IngestError> {
    match v {
        Value::String(s) => DateTime::parse_from_rfc3339(s)
            .map(|t| t.with_timezone(&Utc))
            .map_err(|e| bad(field, e.to_string())),
        Value::Number(n) => {
            let secs = n.as_f64().ok_or_else(|| bad(field, "not a number"))?;
            let whole = secs.floor();
            let nanos = ((secs - whole) * 1e9).round() as u32;
            Utc.timestamp_opt(whole as i64, nanos.min(999_999_999))
                .single()
                .ok_or_else(|| bad(field, "timestamp out of range"))
        }
        other => Err(bad(field, format!("expected timestamp, got {other}"))),
    }
}

/// Parse one JSON line through `adapter` into a validated record.
pub fn parse_record(raw_line: &str, adapter: &FieldMapping) -> Result<ConversationRecord, IngestError> {
    let value: Value =
        serde_json::from_str(raw_line).map_err(|e| IngestError::MalformedLine(e.to_string()))?;
    let Value::Object(obj) = value else {
        return Err(IngestError::MalformedLine("not a JSON object".into()));
    };

    let required = |name: &str| -> Result<&Value, IngestError> {
        adapter
            .lookup(&obj, name)
            .ok_or_else(|| IngestError::MissingField(name.into()))
    };
    let optional_string = |name: &str| -> Result<String, IngestError> {
        adapter
            .lookup(&obj, name)
            .map(|v| as_string(name, v))
            .transpose()
            .map(Option::unwrap_or_default)
    };

    let raw_turns = required("turns")?
        .as_array()
        .ok_or_else(|| bad("turns", "expected array"))?;
    let mut turns = Vec::with_capacity(raw_turns.len());
    for (i, t) in raw_turns.iter().enumerate() {
        let role_raw = t
            .get(&adapter.turn_role_key)
            .and_then(Value::as_str)
            .ok_or_else(|| bad("turns", format!("turn {i} lacks `{}`", adapter.turn_role_key)))?;
        let role = adapter
            .role(role_raw)
            .ok_or_else(|| bad("turns", format!("turn {i} has unknown role {role_raw:?}")))?;
        let text = match t.get(&adapter.turn_text_key) {
            Some(Value::String(s)) => s.clone(),
            Some(Value::Null) | None => String::new(),
            Some(other) => return Err(bad("turns", format!("turn {i} text is {other}"))),
        };
        turns.push(Turn { role, text });
    }

    let record = ConversationRecord {
        conversation_id: as_string("conversation_id", required("conversation_id")?)?,
        dataset: as_string("dataset", required("dataset")?)?,
        timestamp: as_timestamp("timestamp", required("timestamp")?)?,
        hashed_ip: optional_string("hashed_ip")?,
        country: as_string("country", required("country")?)?,
        state: optional_string("state")?,
        language: as_string("language", required("language")?)?,
        toxic: as_bool("toxic", required("toxic")?)?,
        redacted: as_bool("redacted", required("redacted")?)?,
        model: as_string("model", required("model")?)?,
        turn_count: turns.len() as u32,
        turns,
    };
    record.validate()?;
    Ok(record)
}

#[derive(Debug, Default, Clone, PartialEq, Eq, Serialize)]
pub struct IngestStats {
    pub parsed: usize,
    pub skipped: usize,
}

#[derive(Debug)]
pub struct IngestOutput {
    pub records: Vec<ConversationRecord>,
    pub stats: IngestStats,
    /// (1-based line number, reason) for every skipped line.
    pub warnings: Vec<(usize, IngestError)>,
}

/// Parse every non-blank line, skipping (and counting) the ones that fail.
///
/// Lines are parsed in parallel; output order follows input order. A
/// repeated (dataset, conversation_id) keeps the first occurrence.
pub fn ingest_lines<R: BufRead>(reader: R, adapter: &FieldMapping) -> Result<IngestOutput, IngestError> {
    let lines: Vec<(usize, String)> = reader
        .lines()
        .enumerate()
        .map(|(i, l)| l.map(|l| (i + 1, l)))
        .collect::<Result<_, _>>()?;
    let parsed: Vec<(usize, Result<ConversationRecord, IngestError>)> = lines
        .par_iter()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| (*n, parse_record(l, adapter)))
        .collect();

    let mut seen = HashSet::new();
    let mut out = IngestOutput {
        records: Vec::with_capacity(parsed.len()),
        stats: IngestStats::default(),
        warnings: Vec::new(),
    };
    for (line_no, result) in parsed {
        let outcome = result.and_then(|r| {
            if seen.insert((r.dataset.clone(), r.conversation_id.clone())) {
                Ok(r)
            } else {
                Err(IngestError::Duplicate {
                    dataset: r.dataset,
                    conversation_id: r.conversation_id,
                })
            }
        });
        match outcome {
            Ok(r) => {
                out.stats.parsed += 1;
                out.records.push(r);
            }
            Err(e) => {
                tracing::warn!(line = line_no, error = %e, "skipping record");
                out.stats.skipped += 1;
                out.warnings.push((line_no, e));
            }
        }
    }
    Ok(out)
}

/// Serialize records in the canonical line-delimited format.
pub fn write_corpus<W: std::io::Write>(mut w: W, records: &[ConversationRecord]) -> std::io::Result<()> {
    for r in records {
        w.write_all(r.to_json_line().as_bytes())?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn read_corpus(path: &std::path::Path) -> Result<IngestOutput, IngestError> {
    let file = std::fs::File::open(path)?;
    ingest_lines(std::io::BufReader::new(file), &FieldMapping::canonical())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::record::tests::sample;

    #[test]
    fn canonical_round_trip() {
        let r = sample();
        let back = parse_record(&r.to_json_line(), &FieldMapping::canonical()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn two_turns_derive_count() {
        let line = r#"{"conversation_id":"x","dataset":"d","timestamp":"2024-01-01T00:00:00Z",
            "turns":[{"role":"user","text":"hi"},{"role":"assistant","text":"yo"}],
            "country":"France","language":"English","toxic":false,"redacted":false,"model":"gpt-4"}"#
            .replace('\n', "");
        let r = parse_record(&line, &FieldMapping::canonical()).unwrap();
        assert_eq!(r.turn_count, 2);
        assert_eq!(r.state, "");
        assert_eq!(r.hashed_ip, "");
    }

    #[test]
    fn missing_turns_is_missing_field() {
        let line = r#"{"conversation_id":"x","dataset":"d","timestamp":"2024-01-01T00:00:00Z","country":"F","language":"English","toxic":false,"redacted":false,"model":"m"}"#;
        match parse_record(line, &FieldMapping::canonical()) {
            Err(IngestError::MissingField(f)) => assert_eq!(f, "turns"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_and_zero_turns() {
        assert!(matches!(
            parse_record("{not json", &FieldMapping::canonical()),
            Err(IngestError::MalformedLine(_))
        ));
        let line = r#"{"conversation_id":"x","dataset":"d","timestamp":"2024-01-01T00:00:00Z","turns":[],"country":"F","language":"English","toxic":false,"redacted":false,"model":"m"}"#;
        assert!(matches!(
            parse_record(line, &FieldMapping::canonical()),
            Err(IngestError::InvariantViolation(InvariantViolation::NoTurns))
        ));
    }

    #[test]
    fn wildchat_like_adapter() {
        let line = r#"{"conversation_hash":"abc","model":"gpt-4","timestamp":"2023-04-09T00:02:53Z",
            "conversation":[{"role":"user","content":"write an email"},{"role":"assistant","content":"Sure"}],
            "turn":1,"language":"English","toxic":false,"redacted":true,"state":"Texas","country":"United States",
            "hashed_ip":"048b169ad0d18f2436572717f649bdeddac793967fb63ca6632a2f5dca14e4b8"}"#
            .replace('\n', "");
        let r = parse_record(&line, &FieldMapping::wildchat_like()).unwrap();
        assert_eq!(r.conversation_id, "abc");
        assert_eq!(r.dataset, "wildchat");
        assert_eq!(r.turns[0].text, "write an email");
        assert!(r.redacted);
    }

    #[test]
    fn lmsys_like_adapter_fills_defaults() {
        let line = r#"{"conversation_id":"33f01939","model":"vicuna-13b",
            "conversation":[{"role":"human","content":"how many legs"},{"role":"gpt","content":"four"}],
            "turn":1,"language":"English","redacted":false}"#
            .replace('\n', "");
        let r = parse_record(&line, &FieldMapping::lmsys_like()).unwrap();
        assert_eq!(r.dataset, "lmsys");
        assert_eq!(r.timestamp.timestamp(), 0);
        assert_eq!(r.turns[1].role, Role::Assistant);
    }

    #[test]
    fn user_mapping_deserializes() {
        let json = r#"{"name":"mine","fields":{"conversation_id":"id"},"defaults":{"dataset":"x"}}"#;
        let m: FieldMapping = serde_json::from_str(json).unwrap();
        assert_eq!(m.turn_role_key, "role");
        assert_eq!(m.source_key("conversation_id"), "id");
    }

    #[test]
    fn bad_lines_are_counted_and_order_kept() {
        let mut a = sample();
        a.conversation_id = "a".into();
        let mut b = sample();
        b.conversation_id = "b".into();
        let input = format!(
            "{}\nnot json\n\n{}\n{}\n",
            a.to_json_line(),
            b.to_json_line(),
            a.to_json_line()
        );
        let out = ingest_lines(input.as_bytes(), &FieldMapping::canonical()).unwrap();
        assert_eq!(out.stats, IngestStats { parsed: 2, skipped: 2 });
        assert_eq!(out.records[0].conversation_id, "a");
        assert_eq!(out.records[1].conversation_id, "b");
        assert_eq!(out.warnings[0].0, 2);
        assert!(matches!(out.warnings[1].1, IngestError::Duplicate { .. }));
    }
}

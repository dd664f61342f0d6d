use thiserror::Error;
use wildvis_core::search::MAX_THRESHOLD;
use wildvis_core::FilterQuery;

pub const FILTER_KEYS: [&str; 12] = [
    "contains",
    "hashed_ip",
    "country",
    "state",
    "language",
    "model",
    "dataset",
    "toxic",
    "redacted",
    "min_turns",
    "page",
    "threshold",
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("bad value for {key}: {reason}")]
pub struct BadParam {
    pub key: String,
    pub reason: String,
}

fn bad(key: &str, reason: impl Into<String>) -> BadParam {
    BadParam {
        key: key.to_string(),
        reason: reason.into(),
    }
}

/// A parsed query string: the filter plus keys that were not filter keys.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedQuery {
    pub query: FilterQuery,
    pub unknown: Vec<String>,
}

fn parse_bool(key: &str, v: &str) -> Result<bool, BadParam> {
    match v.to_ascii_lowercase().as_str() {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(bad(key, "expected true or false")),
    }
}

fn parse_u32(key: &str, v: &str) -> Result<u32, BadParam> {
    v.parse().map_err(|_| bad(key, "expected a non-negative integer"))
}

/// Builds a [`FilterQuery`] from decoded key/value pairs. Later duplicates
/// win; empty string values leave a filter unset. Keys in `extra` are
/// consumed silently (endpoint-specific parameters).
pub fn parse_query_params<'a>(
    pairs: impl IntoIterator<Item = (&'a str, &'a str)>,
    extra: &[&str],
) -> Result<ParsedQuery, BadParam> {
    let mut q = FilterQuery::default();
    let mut unknown = Vec::new();
    for (key, value) in pairs {
        let text = || (!value.is_empty()).then(|| value.to_string());
        match key {
            "contains" => q.contains = text(),
            "hashed_ip" => q.hashed_ip = text(),
            "country" => q.country = text(),
            "state" => q.state = text(),
            "language" => q.language = text(),
            "model" => q.model = text(),
            "dataset" => q.dataset = text(),
            "toxic" => q.toxic = Some(parse_bool(key, value)?),
            "redacted" => q.redacted = Some(parse_bool(key, value)?),
            "min_turns" => q.min_turns = Some(parse_u32(key, value)?),
            "page" => {
                q.page = parse_u32(key, value)?;
                if q.page == 0 {
                    return Err(bad(key, "pages start at 1"));
                }
            }
            "threshold" => {
                q.threshold = parse_u32(key, value)?;
                if !(1..=MAX_THRESHOLD).contains(&q.threshold) {
                    return Err(bad(key, format!("must be between 1 and {MAX_THRESHOLD}")));
                }
            }
            k if extra.contains(&k) => {}
            k => {
                if !unknown.iter().any(|u| u == k) {
                    unknown.push(k.to_string());
                }
            }
        }
    }
    Ok(ParsedQuery { query: q, unknown })
}

/// Decodes a raw `application/x-www-form-urlencoded` query string.
pub fn decode_query_string(raw: &str) -> Vec<(String, String)> {
    form_urlencoded::parse(raw.as_bytes()).into_owned().collect()
}

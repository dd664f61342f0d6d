//! Conversation records as they flow through ingest, indexing and display.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub role: Role,
    pub text: String,
}

impl Turn {
    pub fn user(text: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            text: text.into(),
        }
    }

    pub fn assistant(text: impl Into<String>) -> Self {
        Self {
            role: Role::Assistant,
            text: text.into(),
        }
    }
}

/// One conversation with every field the filters can address.
///
/// Field names here are the canonical names used by the corpus file format
/// and by the HTTP query parameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConversationRecord {
    pub conversation_id: String,
    pub dataset: String,
    pub timestamp: DateTime<Utc>,
    pub turns: Vec<Turn>,
    #[serde(default)]
    pub hashed_ip: String,
    pub country: String,
    #[serde(default)]
    pub state: String,
    pub language: String,
    /// Set when any turn of the conversation was flagged.
    pub toxic: bool,
    pub redacted: bool,
    pub model: String,
    pub turn_count: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InvariantViolation {
    #[error("conversation_id is empty")]
    EmptyId,
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("conversation has no turns")]
    NoTurns,
    #[error("turn_count {declared} does not match {actual} turns")]
    TurnCountMismatch { declared: u32, actual: usize },
    #[error("turn {index} has role {found:?}, expected {expected:?}")]
    RoleOrder {
        index: usize,
        expected: Role,
        found: Role,
    },
    #[error("user turn {index} has empty text")]
    EmptyUserTurn { index: usize },
    #[error("hashed_ip {0:?} is not 64 lowercase hex characters")]
    BadHashedIp(String),
}

pub fn is_valid_hashed_ip(ip: &str) -> bool {
    ip.len() == 64 && ip.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'))
}

impl ConversationRecord {
    pub fn validate(&self) -> Result<(), InvariantViolation> {
        if self.conversation_id.is_empty() {
            return Err(InvariantViolation::EmptyId);
        }
        if self.dataset.is_empty() {
            return Err(InvariantViolation::EmptyDataset);
        }
        if self.turns.is_empty() {
            return Err(InvariantViolation::NoTurns);
        }
        if self.turn_count as usize != self.turns.len() {
            return Err(InvariantViolation::TurnCountMismatch {
                declared: self.turn_count,
                actual: self.turns.len(),
            });
        }
        for (index, turn) in self.turns.iter().enumerate() {
            let expected = if index % 2 == 0 {
                Role::User
            } else {
                Role::Assistant
            };
            if turn.role != expected {
                return Err(InvariantViolation::RoleOrder {
                    index,
                    expected,
                    found: turn.role,
                });
            }
            if turn.role == Role::User && turn.text.is_empty() {
                return Err(InvariantViolation::EmptyUserTurn { index });
            }
        }
        if !self.hashed_ip.is_empty() && !is_valid_hashed_ip(&self.hashed_ip) {
            return Err(InvariantViolation::BadHashedIp(self.hashed_ip.clone()));
        }
        Ok(())
    }

    pub fn first_user_turn(&self) -> Option<&str> {
        self.turns
            .iter()
            .find(|t| t.role == Role::User)
            .map(|t| t.text.as_str())
    }

    /// Hover preview: the first 120 scalar values of the first user turn.
    pub fn preview(&self) -> String {
        self.first_user_turn()
            .unwrap_or_default()
            .chars()
            .take(crate::PREVIEW_CHARS)
            .collect()
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("record serialization cannot fail")
    }
}

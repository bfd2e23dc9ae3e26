use std::collections::VecDeque;
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::ChatError;

pub const DEFAULT_MAX_TURNS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    User,
    Bot,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::User => "user",
            Role::Bot => "bot",
        })
    }
}

/// One utterance. A user turn whose reply failed carries an `error` marker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub role: Role,
    pub text: String,
    #[serde(rename = "ts")]
    pub timestamp: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Turn {
    pub fn new(role: Role, text: impl Into<String>, timestamp: DateTime<Utc>) -> Result<Self, ChatError> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(ChatError::EmptyMessage);
        }
        Ok(Self { role, text, timestamp, error: None })
    }

    pub fn is_failed(&self) -> bool {
        self.error.is_some()
    }
}

/// The retention window of turns used to build prompts.
///
/// Roles alternate user, bot, user, ... counting only turns without an error
/// marker; a failed user turn may be followed by another user turn.
#[derive(Debug, Clone, PartialEq)]
pub struct ConversationHistory {
    turns: VecDeque<Turn>,
    max_turns: usize,
}

impl Default for ConversationHistory {
    fn default() -> Self {
        Self { turns: VecDeque::new(), max_turns: DEFAULT_MAX_TURNS }
    }
}

impl ConversationHistory {
    pub fn new(max_turns: usize) -> Result<Self, ChatError> {
        if max_turns == 0 {
            return Err(ChatError::InvalidConfig("max_turns must be positive".into()));
        }
        Ok(Self { turns: VecDeque::new(), max_turns })
    }

    pub fn max_turns(&self) -> usize {
        self.max_turns
    }

    pub fn len(&self) -> usize {
        self.turns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.turns.is_empty()
    }

    pub fn turns(&self) -> impl Iterator<Item = &Turn> {
        self.turns.iter()
    }

    /// Turns that took part in a completed exchange (no error marker).
    pub fn committed(&self) -> impl Iterator<Item = &Turn> {
        self.turns.iter().filter(|t| !t.is_failed())
    }

    fn expected_role(&self) -> Role {
        match self.turns.back() {
            Some(t) if t.role == Role::User && !t.is_failed() => Role::Bot,
            _ => Role::User,
        }
    }

    pub fn push(&mut self, turn: Turn) -> Result<(), ChatError> {
        let expected = self.expected_role();
        if turn.role != expected {
            return Err(ChatError::OutOfOrder { expected, got: turn.role });
        }
        if turn.is_failed() && turn.role == Role::Bot {
            return Err(ChatError::OutOfOrder { expected: Role::User, got: Role::Bot });
        }
        self.turns.push_back(turn);
        while self.turns.len() > self.max_turns {
            self.turns.pop_front();
        }
        // keep the window starting on a user turn
        while self.turns.front().is_some_and(|t| t.role == Role::Bot) {
            self.turns.pop_front();
        }
        Ok(())
    }

    /// Attach an error marker to the trailing user turn.
    pub fn mark_last_failed(&mut self, error: impl Into<String>) {
        if let Some(last) = self.turns.back_mut() {
            if last.role == Role::User {
                last.error = Some(error.into());
            }
        }
    }

    /// Check the alternation invariant over committed turns.
    pub fn alternates(&self) -> bool {
        self.committed()
            .enumerate()
            .all(|(i, t)| t.role == if i % 2 == 0 { Role::User } else { Role::Bot })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn turn(role: Role, text: &str) -> Turn {
        Turn::new(role, text, DateTime::UNIX_EPOCH).unwrap()
    }

    #[test]
    fn empty_text_rejected() {
        assert!(Turn::new(Role::User, "  \n", DateTime::UNIX_EPOCH).is_err());
    }

    #[test]
    fn enforces_alternation() {
        let mut h = ConversationHistory::default();
        assert!(h.push(turn(Role::Bot, "hi")).is_err());
        h.push(turn(Role::User, "hi")).unwrap();
        assert!(h.push(turn(Role::User, "again")).is_err());
        h.push(turn(Role::Bot, "hello")).unwrap();
        assert!(h.alternates());
    }

    #[test]
    fn failed_user_turn_allows_retry() {
        let mut h = ConversationHistory::default();
        h.push(turn(Role::User, "hi")).unwrap();
        h.mark_last_failed("timeout");
        h.push(turn(Role::User, "hi again")).unwrap();
        h.push(turn(Role::Bot, "hello")).unwrap();
        assert_eq!(h.len(), 3);
        assert_eq!(h.committed().count(), 2);
        assert!(h.alternates());
    }

    #[test]
    fn window_keeps_recent_turns_starting_with_user() {
        let mut h = ConversationHistory::new(3).unwrap();
        for i in 0..4 {
            h.push(turn(Role::User, &format!("u{i}"))).unwrap();
            h.push(turn(Role::Bot, &format!("b{i}"))).unwrap();
        }
        let texts: Vec<&str> = h.turns().map(|t| t.text.as_str()).collect();
        assert_eq!(texts, vec!["u3", "b3"]);
        h.push(turn(Role::User, "u4")).unwrap();
        let texts: Vec<&str> = h.turns().map(|t| t.text.as_str()).collect();
        assert_eq!(texts, vec!["u3", "b3", "u4"]);
        assert!(h.len() <= h.max_turns());
        assert!(ConversationHistory::new(0).is_err());
    }
}

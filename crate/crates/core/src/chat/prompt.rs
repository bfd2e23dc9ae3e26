//! Prompt construction for completion-style and chat-style backends.

use serde::{Deserialize, Serialize};

use super::history::{ConversationHistory, Role};
use super::ChatError;

pub const DEFAULT_PREAMBLE: &str = "You are an excellent chat bot. Please respond to the current message accurately, taking into account your knowledge and our previous conversations.";
pub const DEFAULT_HISTORY_LABEL: &str = "Previous conversations:";
pub const DEFAULT_MESSAGE_LABEL: &str = "Current message:";
pub const EMPTY_HISTORY: &str = "(none)";

pub const DEFAULT_SYSTEM_PROMPT: &str = "You are an excellent chat bot, named MSRAbot. You are embodied with a small robot, which makes lively gestures in response to your speech. Please keep conversations with the user by responding with short English phrases. The response can be composed of several sentences, but every sentence should be definitely short and less than 12 words. Answer in English in any situation.";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PromptTemplate {
    pub preamble: String,
    pub history_label: String,
    pub message_label: String,
}

impl Default for PromptTemplate {
    fn default() -> Self {
        Self {
            preamble: DEFAULT_PREAMBLE.to_string(),
            history_label: DEFAULT_HISTORY_LABEL.to_string(),
            message_label: DEFAULT_MESSAGE_LABEL.to_string(),
        }
    }
}

// Line breaks inside an utterance would break the one-turn-per-line layout.
fn single_line(text: &str) -> String {
    if !text.contains(['\n', '\r']) {
        return text.to_string();
    }
    text.split(['\n', '\r'])
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Flatten the history into a single completion prompt:
///
/// ```text
/// <preamble>
/// <history label> User: ...
/// Bot: ...
/// <message label> <message>
/// ```
pub fn build_completion_prompt(
    history: &ConversationHistory,
    message: &str,
    template: &PromptTemplate,
) -> Result<String, ChatError> {
    if message.trim().is_empty() {
        return Err(ChatError::EmptyMessage);
    }
    let lines: Vec<String> = history
        .committed()
        .map(|turn| {
            let speaker = match turn.role {
                Role::User => "User",
                Role::Bot => "Bot",
            };
            format!("{speaker}: {}", single_line(&turn.text))
        })
        .collect();
    let past = if lines.is_empty() { EMPTY_HISTORY.to_string() } else { lines.join("\n") };
    Ok(format!(
        "{}\n{} {}\n{} {}",
        template.preamble,
        template.history_label,
        past,
        template.message_label,
        single_line(message)
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChatRole {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: ChatRole,
    pub content: String,
}

impl ChatMessage {
    pub fn new(role: ChatRole, content: impl Into<String>) -> Self {
        Self { role, content: content.into() }
    }
}

/// System prompt, then the history as user/assistant messages, then the new
/// user message.
pub fn build_chat_messages(
    history: &ConversationHistory,
    message: &str,
    system_prompt: &str,
) -> Result<Vec<ChatMessage>, ChatError> {
    if message.trim().is_empty() {
        return Err(ChatError::EmptyMessage);
    }
    let mut messages = Vec::with_capacity(history.len() + 2);
    messages.push(ChatMessage::new(ChatRole::System, system_prompt));
    messages.extend(history.committed().map(|turn| {
        let role = match turn.role {
            Role::User => ChatRole::User,
            Role::Bot => ChatRole::Assistant,
        };
        ChatMessage::new(role, turn.text.clone())
    }));
    messages.push(ChatMessage::new(ChatRole::User, message));
    Ok(messages)
}

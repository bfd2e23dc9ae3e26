//! Conversation history, prompt construction, backend and speech clients,
//! and turn orchestration.

mod backend;
mod history;
mod prompt;
mod session;
mod speech;
mod style;

pub use backend::{
    complete, BackendConfig, BackendError, BackendMode, HttpBackend, LlmBackend, LlmRequest, StubBackend,
    TransportError, CANNED_RESPONSES,
};
pub use history::{ConversationHistory, Role, Turn, DEFAULT_MAX_TURNS};
pub use prompt::{
    build_chat_messages, build_completion_prompt, ChatMessage, ChatRole, PromptTemplate, DEFAULT_HISTORY_LABEL,
    DEFAULT_MESSAGE_LABEL, DEFAULT_PREAMBLE, DEFAULT_SYSTEM_PROMPT, EMPTY_HISTORY,
};
pub use session::{
    Clock, Engine, EngineBuilder, EngineError, FixedClock, PlaybackPlan, Session, SystemClock, TurnError,
    TurnOutput,
};
pub use speech::{
    spoken_word_count, stub_duration, synthesize_speech, wav_duration, AudioPayload, HttpSpeech, Speech,
    SpeechOutcome, SpeechSynthesizer, StubSpeech, TtsError, STUB_MIN_DURATION, STUB_SECONDS_PER_WORD,
};
pub use style::{check_response_style, sentences, word_count, StyleViolation, MAX_SENTENCE_WORDS};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChatError {
    #[error("message is empty")]
    EmptyMessage,
    #[error("turn out of order: expected {expected} turn, got {got}")]
    OutOfOrder { expected: Role, got: Role },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

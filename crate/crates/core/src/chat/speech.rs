//! Speech synthesis clients and the offline duration estimator.

use std::io::Cursor;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Seconds per word for the offline estimate (150 words per minute).
pub const STUB_SECONDS_PER_WORD: f64 = 0.4;
pub const STUB_MIN_DURATION: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AudioPayload {
    pub mime: String,
    #[serde(skip)]
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Speech {
    pub audio: Option<AudioPayload>,
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TtsError {
    #[error("speech synthesis unavailable: {0}")]
    Unavailable(String),
    #[error("synthesized audio is unreadable: {0}")]
    InvalidAudio(String),
}

#[async_trait]
pub trait SpeechSynthesizer: Send + Sync {
    async fn synthesize(&self, text: &str) -> Result<Speech, TtsError>;
}

pub fn spoken_word_count(text: &str) -> usize {
    text.split_whitespace()
        .filter(|w| w.chars().any(char::is_alphanumeric))
        .count()
}

/// `max(0.5, 0.4 * words)` seconds.
pub fn stub_duration(text: &str) -> f64 {
    (STUB_SECONDS_PER_WORD * spoken_word_count(text) as f64).max(STUB_MIN_DURATION)
}

/// Offline synthesizer: no audio, estimated duration.
#[derive(Debug, Clone, Copy, Default)]
pub struct StubSpeech;

#[async_trait]
impl SpeechSynthesizer for StubSpeech {
    async fn synthesize(&self, text: &str) -> Result<Speech, TtsError> {
        Ok(Speech { audio: None, duration: stub_duration(text) })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeechOutcome {
    pub speech: Speech,
    /// Why the stub estimate replaced the client's answer, if it did.
    pub degraded: Option<String>,
}

/// Synthesize with `client`; any failure falls back to the stub estimate so
/// a turn never fails on speech.
pub async fn synthesize_speech(text: &str, client: &dyn SpeechSynthesizer) -> SpeechOutcome {
    let failure = match client.synthesize(text).await {
        Ok(speech) if speech.duration.is_finite() && speech.duration > 0.0 => {
            return SpeechOutcome { speech, degraded: None }
        }
        Ok(speech) => format!("synthesizer reported invalid duration {}", speech.duration),
        Err(e) => e.to_string(),
    };
    tracing::warn!("speech synthesis degraded: {failure}");
    SpeechOutcome {
        speech: Speech { audio: None, duration: stub_duration(text) },
        degraded: Some(failure),
    }
}

/// Duration of a WAV payload in seconds.
pub fn wav_duration(bytes: &[u8]) -> Result<f64, TtsError> {
    let reader = hound::WavReader::new(Cursor::new(bytes))
        .map_err(|e| TtsError::InvalidAudio(e.to_string()))?;
    let spec = reader.spec();
    Ok(reader.duration() as f64 / spec.sample_rate as f64)
}

/// HTTP synthesizer: `POST {"text": ...}` answered with a WAV body whose
/// length gives the speech duration.
pub struct HttpSpeech {
    client: reqwest::Client,
    endpoint: String,
}

impl HttpSpeech {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self { client: reqwest::Client::new(), endpoint: endpoint.into() }
    }
}

#[async_trait]
impl SpeechSynthesizer for HttpSpeech {
    async fn synthesize(&self, text: &str) -> Result<Speech, TtsError> {
        let response = self
            .client
            .post(&self.endpoint)
            .json(&serde_json::json!({ "text": text }))
            .send()
            .await
            .map_err(|e| TtsError::Unavailable(e.to_string()))?;
        if !response.status().is_success() {
            return Err(TtsError::Unavailable(format!("status {}", response.status())));
        }
        let bytes = response.bytes().await.map_err(|e| TtsError::Unavailable(e.to_string()))?;
        let duration = wav_duration(&bytes)?;
        Ok(Speech {
            audio: Some(AudioPayload { mime: "audio/wav".into(), bytes: bytes.to_vec() }),
            duration,
        })
    }
}

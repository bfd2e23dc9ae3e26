//! Concept estimation: map a bot utterance onto one conversational concept.
//!
//! The default estimator is a weighted lexicon. A concept's score is the sum
//! of the weights of the lexicon entries whose pattern occurs in the text at
//! word boundaries (case-insensitive, each entry counted once). The highest
//! score wins, ties go to the lexicographically smaller name, and text with
//! no match falls back to the inventory's fallback concept.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConceptError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("invalid concept inventory: {0}")]
    InvalidInventory(String),
    #[error("invalid lexicon entry {index} ({pattern:?}): {message}")]
    InvalidEntry { index: usize, pattern: String, message: String },
    #[error("malformed document: {0}")]
    Malformed(String),
}

/// The closed set of concept names plus the fallback used when nothing matches.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConceptInventory {
    fallback: String,
    concepts: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInventory {
    fallback: String,
    concepts: Vec<String>,
}

impl ConceptInventory {
    pub fn new(concepts: Vec<String>, fallback: impl Into<String>) -> Result<Self, ConceptError> {
        let fallback = fallback.into();
        let mut seen = BTreeSet::new();
        for name in &concepts {
            if name.is_empty() || name.trim() != name {
                return Err(ConceptError::InvalidInventory(format!("bad concept name {name:?}")));
            }
            if name.to_lowercase() != *name {
                return Err(ConceptError::InvalidInventory(format!(
                    "concept name {name:?} must be lowercase"
                )));
            }
            if !seen.insert(name.as_str()) {
                return Err(ConceptError::InvalidInventory(format!("duplicate concept {name:?}")));
            }
        }
        if !seen.contains(fallback.as_str()) {
            return Err(ConceptError::InvalidInventory(format!(
                "fallback {fallback:?} is not in the inventory"
            )));
        }
        Ok(Self { fallback, concepts })
    }

    pub fn from_json(text: &str) -> Result<Self, ConceptError> {
        let raw: RawInventory =
            serde_json::from_str(text).map_err(|e| ConceptError::Malformed(e.to_string()))?;
        Self::new(raw.concepts, raw.fallback)
    }

    pub fn load(path: &Path) -> Result<Self, ConceptError> {
        Self::from_json(&read(path)?)
    }

    pub fn concepts(&self) -> &[String] {
        &self.concepts
    }

    pub fn fallback(&self) -> &str {
        &self.fallback
    }

    pub fn contains(&self, concept: &str) -> bool {
        self.concepts.iter().any(|c| c == concept)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexiconEntry {
    pub pattern: String,
    pub concept: String,
    pub weight: f64,
}

/// Validated lexicon with patterns pre-split into words.
#[derive(Debug, Clone, PartialEq)]
pub struct Lexicon {
    entries: Vec<LexiconEntry>,
    tokens: Vec<Vec<String>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLexicon {
    entries: Vec<LexiconEntry>,
}

impl Lexicon {
    pub fn new(entries: Vec<LexiconEntry>, inventory: &ConceptInventory) -> Result<Self, ConceptError> {
        let mut tokens = Vec::with_capacity(entries.len());
        for (index, entry) in entries.iter().enumerate() {
            let invalid = |message: &str| ConceptError::InvalidEntry {
                index,
                pattern: entry.pattern.clone(),
                message: message.to_string(),
            };
            if !inventory.contains(&entry.concept) {
                return Err(invalid(&format!("unknown concept {:?}", entry.concept)));
            }
            if !(entry.weight.is_finite() && entry.weight > 0.0) {
                return Err(invalid("weight must be positive"));
            }
            let words = words(&entry.pattern);
            if words.is_empty() {
                return Err(invalid("pattern has no words"));
            }
            tokens.push(words);
        }
        Ok(Self { entries, tokens })
    }

    pub fn from_json(text: &str, inventory: &ConceptInventory) -> Result<Self, ConceptError> {
        let raw: RawLexicon =
            serde_json::from_str(text).map_err(|e| ConceptError::Malformed(e.to_string()))?;
        Self::new(raw.entries, inventory)
    }

    pub fn load(path: &Path, inventory: &ConceptInventory) -> Result<Self, ConceptError> {
        Self::from_json(&read(path)?, inventory)
    }

    pub fn entries(&self) -> &[LexiconEntry] {
        &self.entries
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptEstimate {
    pub concept: String,
    pub score: f64,
    /// Every concept with a positive score, best first.
    pub ranking: Vec<(String, f64)>,
}

impl ConceptEstimate {
    fn from_scores(scores: BTreeMap<String, f64>, inventory: &ConceptInventory) -> Self {
        let mut ranking: Vec<(String, f64)> =
            scores.into_iter().filter(|(_, s)| *s > 0.0).collect();
        ranking.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        match ranking.first() {
            Some((concept, score)) => {
                ConceptEstimate { concept: concept.clone(), score: *score, ranking }
            }
            None => ConceptEstimate {
                concept: inventory.fallback().to_string(),
                score: 0.0,
                ranking,
            },
        }
    }
}

/// Lowercased words of `text`. A word is a run of alphanumerics and
/// apostrophes, with apostrophes trimmed from its ends.
pub fn words(text: &str) -> Vec<String> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '\'' || c == '\u{2019}'))
        .map(|w| w.trim_matches(|c| c == '\'' || c == '\u{2019}'))
        .filter(|w| !w.is_empty())
        .map(|w| w.to_lowercase().replace('\u{2019}', "'"))
        .collect()
}

fn contains_phrase(haystack: &[String], needle: &[String]) -> bool {
    haystack.windows(needle.len()).any(|w| w == needle)
}

pub fn estimate_concept(text: &str, lexicon: &Lexicon, inventory: &ConceptInventory) -> ConceptEstimate {
    let text_words = words(text);
    let mut matched: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for (entry, pattern) in lexicon.entries.iter().zip(&lexicon.tokens) {
        if contains_phrase(&text_words, pattern) {
            matched.entry(entry.concept.as_str()).or_default().push(entry.weight);
        }
    }
    // Sum in sorted order so the total does not depend on lexicon order.
    let scores = matched
        .into_iter()
        .map(|(concept, mut weights)| {
            weights.sort_by(f64::total_cmp);
            (concept.to_string(), weights.iter().sum())
        })
        .collect();
    ConceptEstimate::from_scores(scores, inventory)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassifierError {
    #[error("classifier timed out")]
    Timeout,
    #[error("classifier transport error: {0}")]
    Transport(String),
    #[error("classifier returned an invalid response: {0}")]
    InvalidResponse(String),
}

/// A remote concept classifier. Returns a score per concept name.
#[async_trait]
pub trait ConceptClassifier: Send + Sync {
    async fn classify(&self, text: &str) -> Result<BTreeMap<String, f64>, ClassifierError>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct RemoteEstimate {
    pub estimate: ConceptEstimate,
    /// Set when the remote path failed and the local lexicon answered instead.
    pub degraded: Option<String>,
}

/// Classify remotely, falling back to the local lexicon on timeout, transport
/// failure, or a response naming concepts outside the inventory.
pub async fn estimate_concept_remote(
    text: &str,
    client: &dyn ConceptClassifier,
    timeout_ms: u64,
    lexicon: &Lexicon,
    inventory: &ConceptInventory,
) -> RemoteEstimate {
    let outcome = match tokio::time::timeout(Duration::from_millis(timeout_ms), client.classify(text)).await {
        Err(_) => Err(ClassifierError::Timeout),
        Ok(result) => result,
    };
    let failure = match outcome {
        Ok(scores) => match check_remote_scores(&scores, inventory) {
            Ok(()) => {
                return RemoteEstimate {
                    estimate: ConceptEstimate::from_scores(scores, inventory),
                    degraded: None,
                }
            }
            Err(message) => message,
        },
        Err(e) => e.to_string(),
    };
    tracing::warn!("remote concept estimation failed, using lexicon: {failure}");
    RemoteEstimate { estimate: estimate_concept(text, lexicon, inventory), degraded: Some(failure) }
}

fn check_remote_scores(scores: &BTreeMap<String, f64>, inventory: &ConceptInventory) -> Result<(), String> {
    for (concept, score) in scores {
        if !inventory.contains(concept) {
            return Err(format!("remote classifier returned unknown concept {concept:?}"));
        }
        if !(score.is_finite() && *score >= 0.0) {
            return Err(format!("remote classifier returned invalid score {score} for {concept:?}"));
        }
    }
    Ok(())
}

/// HTTP classifier: `POST {"text": ...}` answered by `{"scores": {...}}`.
pub struct HttpConceptClassifier {
    client: reqwest::Client,
    endpoint: String,
}

impl HttpConceptClassifier {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self { client: reqwest::Client::new(), endpoint: endpoint.into() }
    }
}

#[derive(Deserialize)]
struct ScoresResponse {
    scores: BTreeMap<String, f64>,
}

#[async_trait]
impl ConceptClassifier for HttpConceptClassifier {
    async fn classify(&self, text: &str) -> Result<BTreeMap<String, f64>, ClassifierError> {
        let response = self
            .client
            .post(&self.endpoint)
            .json(&serde_json::json!({ "text": text }))
            .send()
            .await
            .map_err(|e| ClassifierError::Transport(e.to_string()))?;
        if !response.status().is_success() {
            return Err(ClassifierError::Transport(format!("status {}", response.status())));
        }
        let body: ScoresResponse = response
            .json()
            .await
            .map_err(|e| ClassifierError::InvalidResponse(e.to_string()))?;
        Ok(body.scores)
    }
}

fn read(path: &Path) -> Result<String, ConceptError> {
    std::fs::read_to_string(path)
        .map_err(|e| ConceptError::Io { path: path.display().to_string(), message: e.to_string() })
}

//! One conversational turn, end to end: prompt, reply, speech, concept,
//! gesture, retiming, decoding.

use std::sync::Arc;

use chrono::{DateTime, Utc};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use super::backend::{complete, BackendConfig, BackendError, BackendMode, LlmBackend, LlmRequest, StubBackend};
use super::history::{ConversationHistory, Role, Turn, DEFAULT_MAX_TURNS};
use super::prompt::{build_chat_messages, build_completion_prompt, PromptTemplate};
use super::speech::{synthesize_speech, AudioPayload, SpeechSynthesizer, StubSpeech};
use super::style::{check_response_style, StyleViolation};
use super::ChatError;
use crate::concept::{
    estimate_concept, estimate_concept_remote, ConceptClassifier, ConceptError, ConceptInventory, Lexicon,
};
use crate::laban::{decode_with_warnings, JointTimeline, LabanError, RobotModel};
use crate::library::{retime, select_gesture, GestureLibrary, LibraryError, ScaleClamp};

pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FixedClock(pub DateTime<Utc>);

impl Clock for FixedClock {
    fn now(&self) -> DateTime<Utc> {
        self.0
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Library(#[from] LibraryError),
    #[error(transparent)]
    Concept(#[from] ConceptError),
    #[error(transparent)]
    Robot(#[from] LabanError),
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// Read-only resources shared by every session.
pub struct Engine {
    library: GestureLibrary,
    lexicon: Lexicon,
    inventory: ConceptInventory,
    robot: RobotModel,
    backend_config: BackendConfig,
    backend: Arc<dyn LlmBackend>,
    speech: Arc<dyn SpeechSynthesizer>,
    classifier: Option<(Arc<dyn ConceptClassifier>, u64)>,
    clamp: Option<ScaleClamp>,
    template: PromptTemplate,
    max_turns: usize,
}

pub struct EngineBuilder {
    engine: Engine,
}

impl EngineBuilder {
    pub fn backend(mut self, config: BackendConfig, backend: Arc<dyn LlmBackend>) -> Self {
        self.engine.backend_config = config;
        self.engine.backend = backend;
        self
    }

    pub fn speech(mut self, speech: Arc<dyn SpeechSynthesizer>) -> Self {
        self.engine.speech = speech;
        self
    }

    pub fn classifier(mut self, classifier: Arc<dyn ConceptClassifier>, timeout_ms: u64) -> Self {
        self.engine.classifier = Some((classifier, timeout_ms));
        self
    }

    pub fn clamp(mut self, clamp: Option<ScaleClamp>) -> Self {
        self.engine.clamp = clamp;
        self
    }

    pub fn template(mut self, template: PromptTemplate) -> Self {
        self.engine.template = template;
        self
    }

    pub fn max_turns(mut self, max_turns: usize) -> Self {
        self.engine.max_turns = max_turns;
        self
    }

    pub fn build(self) -> Result<Engine, EngineError> {
        let e = self.engine;
        if let Some(err) = e.library.validate(&e.inventory).into_iter().next() {
            return Err(err.into());
        }
        e.robot.require_all_columns()?;
        e.backend_config.validate().map_err(EngineError::Config)?;
        if e.max_turns == 0 {
            return Err(EngineError::Config("max_turns must be positive".into()));
        }
        if let Some(c) = e.clamp {
            ScaleClamp::new(c.lo, c.hi).map_err(|err| EngineError::Config(err.to_string()))?;
        }
        Ok(e)
    }
}

impl Engine {
    /// Start from the data resources; backend and speech default to the
    /// offline stubs.
    pub fn builder(
        library: GestureLibrary,
        lexicon: Lexicon,
        inventory: ConceptInventory,
        robot: RobotModel,
    ) -> EngineBuilder {
        EngineBuilder {
            engine: Engine {
                library,
                lexicon,
                inventory,
                robot,
                backend_config: BackendConfig::default(),
                backend: Arc::new(StubBackend::default()),
                speech: Arc::new(StubSpeech),
                classifier: None,
                clamp: None,
                template: PromptTemplate::default(),
                max_turns: DEFAULT_MAX_TURNS,
            },
        }
    }

    /// Builder preloaded with the shipped library, lexicon, inventory and
    /// generic robot model.
    pub fn shipped() -> Result<EngineBuilder, EngineError> {
        use crate::data;
        let inventory = ConceptInventory::load(&data::inventory())?;
        let lexicon = Lexicon::load(&data::lexicon(), &inventory)?;
        let library = GestureLibrary::load(&data::library_manifest())?;
        let robot = RobotModel::load(&data::generic_robot())?;
        Ok(Engine::builder(library, lexicon, inventory, robot))
    }

    pub fn library(&self) -> &GestureLibrary {
        &self.library
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    pub fn inventory(&self) -> &ConceptInventory {
        &self.inventory
    }

    pub fn robot(&self) -> &RobotModel {
        &self.robot
    }

    pub fn backend_config(&self) -> &BackendConfig {
        &self.backend_config
    }

    pub fn max_turns(&self) -> usize {
        self.max_turns
    }
}

/// Everything a client needs to play one reply.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PlaybackPlan {
    pub response_text: String,
    pub concept: String,
    pub gesture_id: String,
    /// Seconds; equals `joint_timeline.duration()`.
    pub speech_duration: f64,
    pub joint_timeline: JointTimeline,
    #[serde(skip)]
    pub audio: Option<AudioPayload>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TurnOutput {
    pub plan: PlaybackPlan,
    pub style_violations: Vec<StyleViolation>,
    /// Degradations that did not abort the turn (speech, classifier, clamping).
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TurnError {
    #[error(transparent)]
    Chat(#[from] ChatError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("internal error: {0}")]
    Internal(String),
}

/// A single conversation. Not shareable: callers serialize `run_turn`.
pub struct Session {
    engine: Arc<Engine>,
    history: ConversationHistory,
    transcript: Vec<Turn>,
    clock: Arc<dyn Clock>,
}

impl Session {
    pub fn new(engine: Arc<Engine>) -> Self {
        Self::with_clock(engine, Arc::new(SystemClock))
    }

    pub fn with_clock(engine: Arc<Engine>, clock: Arc<dyn Clock>) -> Self {
        let history = ConversationHistory::new(engine.max_turns).expect("engine validated max_turns");
        Self { engine, history, transcript: Vec::new(), clock }
    }

    pub fn engine(&self) -> &Arc<Engine> {
        &self.engine
    }

    pub fn history(&self) -> &ConversationHistory {
        &self.history
    }

    /// Every turn so far, including ones that fell out of the prompt window.
    pub fn transcript(&self) -> &[Turn] {
        &self.transcript
    }

    fn record(&mut self, turn: Turn) -> Result<(), ChatError> {
        self.history.push(turn.clone())?;
        self.transcript.push(turn);
        Ok(())
    }

    fn mark_failed(&mut self, error: &str) {
        self.history.mark_last_failed(error);
        if let Some(last) = self.transcript.last_mut() {
            if last.role == Role::User {
                last.error = Some(error.to_string());
            }
        }
    }

    fn build_request(&self, message: &str) -> Result<LlmRequest, ChatError> {
        let config = &self.engine.backend_config;
        Ok(match config.mode {
            BackendMode::Completion => LlmRequest::Completion {
                prompt: build_completion_prompt(&self.history, message, &self.engine.template)?,
                max_tokens: config.max_tokens,
            },
            BackendMode::Chat => LlmRequest::Chat {
                messages: build_chat_messages(&self.history, message, &config.system_prompt)?,
            },
        })
    }

    /// Run one exchange. A backend failure aborts the turn and leaves the
    /// user turn in the history with an error marker; every other component
    /// failure degrades instead.
    pub async fn run_turn(&mut self, user_text: &str, seed: u64) -> Result<TurnOutput, TurnError> {
        let engine = Arc::clone(&self.engine);
        let request = self.build_request(user_text)?;
        self.record(Turn::new(Role::User, user_text, self.clock.now())?)?;

        let response = match complete(engine.backend.as_ref(), &engine.backend_config, &request).await {
            Ok(text) => text,
            Err(e) => {
                self.mark_failed(&e.to_string());
                return Err(e.into());
            }
        };

        let mut diagnostics = Vec::new();
        let gesture_side = async {
            let (estimate, degraded) = match &engine.classifier {
                Some((client, timeout_ms)) => {
                    let remote = estimate_concept_remote(
                        &response,
                        client.as_ref(),
                        *timeout_ms,
                        &engine.lexicon,
                        &engine.inventory,
                    )
                    .await;
                    (remote.estimate, remote.degraded)
                }
                None => (estimate_concept(&response, &engine.lexicon, &engine.inventory), None),
            };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut concept = estimate.concept;
            let gesture = match select_gesture(&engine.library, &concept, &mut rng) {
                Ok(g) => g,
                Err(_) => {
                    concept = engine.inventory.fallback().to_string();
                    select_gesture(&engine.library, &concept, &mut rng)
                        .expect("library covers the fallback concept")
                }
            };
            (concept, gesture, degraded)
        };
        let (speech, (concept, gesture, concept_degraded)) =
            tokio::join!(synthesize_speech(&response, engine.speech.as_ref()), gesture_side);
        diagnostics.extend(speech.degraded.map(|d| format!("speech: {d}")));
        diagnostics.extend(concept_degraded.map(|d| format!("concept: {d}")));

        let speech_duration = speech.speech.duration;
        let score = retime(gesture, speech_duration, engine.clamp)
            .map_err(|e| TurnError::Internal(e.to_string()))?;
        let (joint_timeline, warnings) =
            decode_with_warnings(&score, &engine.robot).map_err(|e| TurnError::Internal(e.to_string()))?;
        diagnostics.extend(warnings.iter().map(|w| format!("decode: {w}")));

        self.record(Turn::new(Role::Bot, response.clone(), self.clock.now())?)?;

        Ok(TurnOutput {
            style_violations: check_response_style(&response),
            plan: PlaybackPlan {
                response_text: response,
                concept,
                gesture_id: gesture.id().to_string(),
                speech_duration,
                joint_timeline,
                audio: speech.speech.audio,
            },
            diagnostics,
        })
    }
}

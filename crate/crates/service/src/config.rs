//! Server configuration: a TOML file whose paths resolve against the file's
//! own directory, plus environment overrides for the backend endpoint and
//! API key.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use gesturechat_core::chat::{
    BackendConfig, BackendMode, Engine, EngineError, HttpBackend, HttpSpeech, LlmBackend, PromptTemplate,
    SpeechSynthesizer, StubBackend, StubSpeech, DEFAULT_MAX_TURNS,
};
use gesturechat_core::concept::{ConceptInventory, HttpConceptClassifier, Lexicon};
use gesturechat_core::data;
use gesturechat_core::laban::RobotModel;
use gesturechat_core::library::{GestureLibrary, ScaleClamp};
use serde::Deserialize;
use thiserror::Error;

pub const ENV_BACKEND_ENDPOINT: &str = "GESTURECHAT_BACKEND_ENDPOINT";
pub const ENV_API_KEY: &str = "GESTURECHAT_API_KEY";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("{path}: {message}")]
    Data { path: String, message: String },
    #[error("failed to load data: {0}")]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transport {
    #[default]
    Stub,
    Http,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBackend {
    #[serde(default)]
    transport: Transport,
    mode: Option<BackendMode>,
    endpoint: Option<String>,
    model_name: Option<String>,
    system_prompt: Option<String>,
    timeout_ms: Option<u64>,
    max_retries: Option<u32>,
    backoff_ms: Option<u64>,
    max_tokens: Option<u32>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTts {
    #[serde(default)]
    transport: Transport,
    endpoint: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawClassifier {
    endpoint: String,
    #[serde(default = "default_classifier_timeout")]
    timeout_ms: u64,
}

fn default_classifier_timeout() -> u64 {
    2000
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    bind: Option<String>,
    library: Option<PathBuf>,
    lexicon: Option<PathBuf>,
    inventory: Option<PathBuf>,
    robot_model: Option<PathBuf>,
    transcript_dir: Option<PathBuf>,
    static_dir: Option<PathBuf>,
    max_sessions: Option<usize>,
    /// Seconds.
    session_idle_timeout: Option<f64>,
    max_turns: Option<usize>,
    seed: Option<u64>,
    retiming_clamp: Option<ScaleClamp>,
    prompt: Option<PromptTemplate>,
    #[serde(default)]
    backend: RawBackend,
    #[serde(default)]
    tts: RawTts,
    classifier: Option<RawClassifier>,
}

#[derive(Debug, Clone)]
pub struct ClassifierConfig {
    pub endpoint: String,
    pub timeout_ms: u64,
}

/// Fully resolved configuration. Data paths are absolute or relative to the
/// working directory.
#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub bind: String,
    pub library: PathBuf,
    pub lexicon: PathBuf,
    pub inventory: PathBuf,
    pub robot_model: PathBuf,
    pub transcript_dir: PathBuf,
    pub static_dir: Option<PathBuf>,
    pub max_sessions: usize,
    pub session_idle_timeout: Duration,
    pub max_turns: usize,
    /// Base seed for gesture selection; random per session when absent.
    pub seed: Option<u64>,
    pub retiming_clamp: Option<ScaleClamp>,
    pub prompt: PromptTemplate,
    pub backend_transport: Transport,
    pub backend: BackendConfig,
    pub api_key: Option<String>,
    pub tts_transport: Transport,
    pub tts_endpoint: Option<String>,
    pub classifier: Option<ClassifierConfig>,
}

impl Default for ServerConfig {
    /// Shipped data, stub backend and speech, transcripts under `./transcripts`.
    fn default() -> Self {
        Self::resolve(RawConfig::default(), Path::new("."), |_| None).expect("defaults are valid")
    }
}

impl ServerConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::load_with_env(path, |key| std::env::var(key).ok())
    }

    pub fn load_with_env(path: &Path, env: impl Fn(&str) -> Option<String>) -> Result<Self, ConfigError> {
        let shown = path.display().to_string();
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io { path: shown.clone(), message: e.to_string() })?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")), env)
            .map_err(|e| match e {
                ConfigError::Parse { message, .. } => ConfigError::Parse { path: shown, message },
                other => other,
            })
    }

    /// Parse `text`; relative paths resolve against `base`.
    pub fn from_toml(text: &str, base: &Path, env: impl Fn(&str) -> Option<String>) -> Result<Self, ConfigError> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse { path: "<config>".into(), message: e.to_string() })?;
        Self::resolve(raw, base, env)
    }

    fn resolve(raw: RawConfig, base: &Path, env: impl Fn(&str) -> Option<String>) -> Result<Self, ConfigError> {
        let at = |p: Option<PathBuf>, default: PathBuf| p.map(|p| base.join(p)).unwrap_or(default);
        let mut backend = BackendConfig::default();
        let b = raw.backend;
        if let Some(v) = b.mode {
            backend.mode = v;
        }
        if let Some(v) = b.endpoint {
            backend.endpoint = v;
        }
        if let Some(v) = b.model_name {
            backend.model_name = v;
        }
        if let Some(v) = b.system_prompt {
            backend.system_prompt = v;
        }
        if let Some(v) = b.timeout_ms {
            backend.timeout_ms = v;
        }
        if let Some(v) = b.max_retries {
            backend.max_retries = v;
        }
        if let Some(v) = b.backoff_ms {
            backend.backoff_ms = v;
        }
        if let Some(v) = b.max_tokens {
            backend.max_tokens = v;
        }
        if let Some(endpoint) = env(ENV_BACKEND_ENDPOINT) {
            backend.endpoint = endpoint;
        }
        backend.validate().map_err(ConfigError::Invalid)?;

        let idle = raw.session_idle_timeout.unwrap_or(600.0);
        if !(idle.is_finite() && idle > 0.0) {
            return Err(ConfigError::Invalid("session_idle_timeout must be positive".into()));
        }
        let max_sessions = raw.max_sessions.unwrap_or(64);
        if max_sessions == 0 {
            return Err(ConfigError::Invalid("max_sessions must be positive".into()));
        }
        if raw.tts.transport == Transport::Http && raw.tts.endpoint.is_none() {
            return Err(ConfigError::Invalid("tts transport \"http\" needs an endpoint".into()));
        }
        if let Some(c) = &raw.classifier {
            if c.timeout_ms == 0 {
                return Err(ConfigError::Invalid("classifier timeout_ms must be positive".into()));
            }
        }
        Ok(Self {
            bind: raw.bind.unwrap_or_else(|| "127.0.0.1:8080".into()),
            library: at(raw.library, data::library_manifest()),
            lexicon: at(raw.lexicon, data::lexicon()),
            inventory: at(raw.inventory, data::inventory()),
            robot_model: at(raw.robot_model, data::generic_robot()),
            transcript_dir: at(raw.transcript_dir, base.join("transcripts")),
            static_dir: raw.static_dir.map(|p| base.join(p)),
            max_sessions,
            session_idle_timeout: Duration::from_secs_f64(idle),
            max_turns: raw.max_turns.unwrap_or(DEFAULT_MAX_TURNS),
            seed: raw.seed,
            retiming_clamp: raw.retiming_clamp,
            prompt: raw.prompt.unwrap_or_default(),
            backend_transport: b.transport,
            backend,
            api_key: env(ENV_API_KEY).filter(|k| !k.is_empty()),
            tts_transport: raw.tts.transport,
            tts_endpoint: raw.tts.endpoint,
            classifier: raw.classifier.map(|c| ClassifierConfig { endpoint: c.endpoint, timeout_ms: c.timeout_ms }),
        })
    }

    /// Load and validate every data file. Any failure aborts startup.
    pub fn build_engine(&self) -> Result<Engine, ConfigError> {
        let inventory = data_file(&self.inventory, ConceptInventory::load(&self.inventory))?;
        let lexicon = data_file(&self.lexicon, Lexicon::load(&self.lexicon, &inventory))?;
        // library and robot errors already name the file
        let library = GestureLibrary::load(&self.library).map_err(EngineError::from)?;
        let robot = RobotModel::load(&self.robot_model).map_err(EngineError::from)?;

        let backend: Arc<dyn LlmBackend> = match self.backend_transport {
            Transport::Stub => Arc::new(StubBackend::default()),
            Transport::Http => Arc::new(HttpBackend::new(&self.backend, self.api_key.clone())),
        };
        let speech: Arc<dyn SpeechSynthesizer> = match (&self.tts_transport, &self.tts_endpoint) {
            (Transport::Http, Some(endpoint)) => Arc::new(HttpSpeech::new(endpoint.clone())),
            _ => Arc::new(StubSpeech),
        };
        let mut builder = Engine::builder(library, lexicon, inventory, robot)
            .backend(self.backend.clone(), backend)
            .speech(speech)
            .clamp(self.retiming_clamp)
            .template(self.prompt.clone())
            .max_turns(self.max_turns);
        if let Some(c) = &self.classifier {
            builder = builder.classifier(Arc::new(HttpConceptClassifier::new(c.endpoint.clone())), c.timeout_ms);
        }
        Ok(builder.build()?)
    }
}

fn data_file<T, E: std::fmt::Display>(path: &Path, result: Result<T, E>) -> Result<T, ConfigError> {
    result.map_err(|e| {
        let message = e.to_string();
        let shown = path.display().to_string();
        // I/O errors already lead with the path
        let message = message.strip_prefix(&format!("{shown}: ")).map(str::to_string).unwrap_or(message);
        ConfigError::Data { path: shown, message }
    })
}

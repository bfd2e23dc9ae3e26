//! Live sessions: creation under a capacity limit, one turn in flight per
//! session, a sequenced event log per session, transcript persistence, and
//! idle reaping.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use gesturechat_core::chat::{
    AudioPayload, Engine, PlaybackPlan, Session, StyleViolation, Turn, TurnOutput,
};
use gesturechat_core::laban::JointTimeline;
use gesturechat_core::transcript::{read_transcript, TranscriptLog};
use rand::Rng;
use serde::Serialize;
use thiserror::Error;
use tokio::sync::broadcast;

/// 128-bit random session identifier, shown as 32 lowercase hex digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SessionId([u8; 16]);

impl SessionId {
    pub fn random() -> Self {
        // the thread-local generator is a CSPRNG seeded from the OS
        Self(rand::rng().random())
    }
}

impl fmt::Display for SessionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

impl FromStr for SessionId {
    type Err = ServiceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut bytes = [0u8; 16];
        hex::decode_to_slice(s, &mut bytes).map_err(|_| ServiceError::UnknownSession(s.to_string()))?;
        Ok(Self(bytes))
    }
}

impl Serialize for SessionId {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ServiceError {
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("session {0} already has a turn in flight")]
    TurnInFlight(String),
    #[error("session limit of {0} reached")]
    CapacityExceeded(usize),
    #[error("message text is empty")]
    EmptyMessage,
    #[error("transcript storage failed: {0}")]
    Storage(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EventKind {
    Ack {
        text: String,
    },
    BotText {
        text: String,
        concept: String,
        #[serde(rename = "gestureId")]
        gesture_id: String,
        #[serde(rename = "styleViolations")]
        style_violations: Vec<StyleViolation>,
    },
    PlaybackPlan {
        #[serde(rename = "gestureId")]
        gesture_id: String,
        #[serde(rename = "speechDuration")]
        speech_duration: f64,
        #[serde(rename = "jointTimeline")]
        joint_timeline: JointTimeline,
        /// Fetch path for the synthesized audio, when there is any.
        audio: Option<String>,
        diagnostics: Vec<String>,
    },
    TurnDone,
    Error {
        message: String,
    },
}

/// One message on a session stream.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Event {
    pub seq: u64,
    pub turn: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

impl Event {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("events serialize")
    }
}

#[derive(Default)]
struct EventLog {
    last_seq: u64,
    backlog: Vec<Event>,
}

struct Slot {
    id: SessionId,
    session: tokio::sync::Mutex<Session>,
    in_flight: AtomicBool,
    turns: AtomicU64,
    base_seed: u64,
    events: Mutex<EventLog>,
    sender: broadcast::Sender<Event>,
    transcript: Mutex<Vec<Turn>>,
    persisted: Mutex<usize>,
    audio: Mutex<HashMap<u64, AudioPayload>>,
    last_active: Mutex<Instant>,
}

impl Slot {
    fn emit(&self, turn: u64, kind: EventKind) {
        // sending under the log lock keeps backlog order and broadcast order identical
        let mut log = self.events.lock().expect("event log lock");
        log.last_seq += 1;
        let event = Event { seq: log.last_seq, turn, kind };
        log.backlog.push(event.clone());
        let _ = self.sender.send(event);
    }

    fn touch(&self) {
        *self.last_active.lock().expect("activity lock") = Instant::now();
    }
}

/// Event replay plus live feed for one stream subscriber.
pub struct Subscription {
    pub backlog: Vec<Event>,
    pub live: broadcast::Receiver<Event>,
}

pub struct SessionManager {
    engine: Arc<Engine>,
    sessions: Mutex<HashMap<SessionId, Arc<Slot>>>,
    max_sessions: usize,
    idle_timeout: Duration,
    transcript_dir: PathBuf,
    seed: Option<u64>,
}

impl SessionManager {
    pub fn new(
        engine: Arc<Engine>,
        max_sessions: usize,
        idle_timeout: Duration,
        transcript_dir: impl Into<PathBuf>,
        seed: Option<u64>,
    ) -> Self {
        Self {
            engine,
            sessions: Mutex::new(HashMap::new()),
            max_sessions,
            idle_timeout,
            transcript_dir: transcript_dir.into(),
            seed,
        }
    }

    pub fn engine(&self) -> &Arc<Engine> {
        &self.engine
    }

    pub fn idle_timeout(&self) -> Duration {
        self.idle_timeout
    }

    pub fn live_sessions(&self) -> usize {
        self.sessions.lock().expect("session table lock").len()
    }

    fn slot(&self, id: &str) -> Result<Arc<Slot>, ServiceError> {
        let key: SessionId = id.parse()?;
        self.sessions
            .lock()
            .expect("session table lock")
            .get(&key)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownSession(id.to_string()))
    }

    pub fn create_session(&self) -> Result<SessionId, ServiceError> {
        let mut table = self.sessions.lock().expect("session table lock");
        if table.len() >= self.max_sessions {
            return Err(ServiceError::CapacityExceeded(self.max_sessions));
        }
        let id = loop {
            let id = SessionId::random();
            if !table.contains_key(&id) {
                break id;
            }
        };
        let (sender, _) = broadcast::channel(64);
        let slot = Slot {
            id,
            session: tokio::sync::Mutex::new(Session::new(Arc::clone(&self.engine))),
            in_flight: AtomicBool::new(false),
            turns: AtomicU64::new(0),
            base_seed: self.seed.unwrap_or_else(|| rand::rng().random()),
            events: Mutex::new(EventLog::default()),
            sender,
            transcript: Mutex::new(Vec::new()),
            persisted: Mutex::new(0),
            audio: Mutex::new(HashMap::new()),
            last_active: Mutex::new(Instant::now()),
        };
        table.insert(id, Arc::new(slot));
        tracing::info!(session = %id, "session created");
        Ok(id)
    }

    /// Start a turn. Emits `ack` before returning, then runs the turn in the
    /// background; its remaining events arrive on the session stream.
    /// Returns the turn number.
    pub fn post_message(&self, id: &str, text: &str) -> Result<u64, ServiceError> {
        let slot = self.slot(id)?;
        if text.trim().is_empty() {
            return Err(ServiceError::EmptyMessage);
        }
        if slot.in_flight.compare_exchange(false, true, Ordering::AcqRel, Ordering::Acquire).is_err() {
            return Err(ServiceError::TurnInFlight(id.to_string()));
        }
        slot.touch();
        let turn = slot.turns.fetch_add(1, Ordering::AcqRel) + 1;
        slot.emit(turn, EventKind::Ack { text: text.to_string() });
        let text = text.to_string();
        let dir = self.transcript_dir.clone();
        tokio::spawn(async move {
            let seed = slot.base_seed.wrapping_add(turn);
            let outcome = {
                let mut session = slot.session.lock().await;
                let outcome = session.run_turn(&text, seed).await;
                *slot.transcript.lock().expect("transcript lock") = session.transcript().to_vec();
                outcome
            };
            let persisted = persist(&slot, &dir);
            match outcome {
                Ok(output) => emit_success(&slot, turn, output),
                Err(e) => slot.emit(turn, EventKind::Error { message: e.to_string() }),
            }
            if let Err(e) = persisted {
                tracing::error!(session = %slot.id, "{e}");
            }
            slot.touch();
            slot.in_flight.store(false, Ordering::Release);
        });
        Ok(turn)
    }

    /// Replay of every event so far plus a receiver for later ones, taken
    /// atomically so nothing is missed or duplicated.
    pub fn subscribe(&self, id: &str) -> Result<Subscription, ServiceError> {
        let slot = self.slot(id)?;
        slot.touch();
        let log = slot.events.lock().expect("event log lock");
        Ok(Subscription { backlog: log.backlog.clone(), live: slot.sender.subscribe() })
    }

    /// Events with `seq > after`, for subscribers that fell behind.
    pub fn events_after(&self, id: &str, after: u64) -> Result<Vec<Event>, ServiceError> {
        let slot = self.slot(id)?;
        let log = slot.events.lock().expect("event log lock");
        Ok(log.backlog.iter().filter(|e| e.seq > after).cloned().collect())
    }

    /// Full transcript of a live session, or of a reaped one from disk.
    pub fn get_transcript(&self, id: &str) -> Result<Vec<Turn>, ServiceError> {
        match self.slot(id) {
            Ok(slot) => Ok(slot.transcript.lock().expect("transcript lock").clone()),
            Err(e) => {
                let key: SessionId = id.parse()?;
                let path = transcript_path(&self.transcript_dir, &key);
                if !path.exists() {
                    return Err(e);
                }
                read_transcript(&path).map_err(|e| ServiceError::Storage(e.to_string()))
            }
        }
    }

    /// Audio for `turn_ref` (`<session>-<turn>`), if it is still held.
    pub fn audio(&self, turn_ref: &str) -> Option<AudioPayload> {
        let (id, turn) = turn_ref.rsplit_once('-')?;
        let turn: u64 = turn.parse().ok()?;
        let slot = self.slot(id).ok()?;
        let audio = slot.audio.lock().expect("audio lock");
        audio.get(&turn).cloned()
    }

    /// Drop sessions idle for longer than the timeout with no turn in
    /// flight. Their transcripts stay readable from disk. Returns the count.
    pub fn reap_idle(&self) -> usize {
        let now = Instant::now();
        let mut table = self.sessions.lock().expect("session table lock");
        let before = table.len();
        table.retain(|id, slot| {
            let idle = now.duration_since(*slot.last_active.lock().expect("activity lock"));
            let keep = slot.in_flight.load(Ordering::Acquire) || idle < self.idle_timeout;
            if !keep {
                tracing::info!(session = %id, "session reaped");
            }
            keep
        });
        before - table.len()
    }
}

fn transcript_path(dir: &Path, id: &SessionId) -> PathBuf {
    dir.join(format!("{id}.jsonl"))
}

/// Append turns not yet on disk.
fn persist(slot: &Slot, dir: &Path) -> Result<(), ServiceError> {
    let transcript = slot.transcript.lock().expect("transcript lock").clone();
    let mut persisted = slot.persisted.lock().expect("persist lock");
    if transcript.len() <= *persisted {
        return Ok(());
    }
    std::fs::create_dir_all(dir).map_err(|e| ServiceError::Storage(format!("{}: {e}", dir.display())))?;
    TranscriptLog::new(transcript_path(dir, &slot.id))
        .append(&transcript[*persisted..])
        .map_err(|e| ServiceError::Storage(e.to_string()))?;
    *persisted = transcript.len();
    Ok(())
}

fn emit_success(slot: &Slot, turn: u64, output: TurnOutput) {
    let TurnOutput { plan, style_violations, diagnostics } = output;
    let PlaybackPlan { response_text, concept, gesture_id, speech_duration, joint_timeline, audio } = plan;
    let audio_ref = audio.map(|payload| {
        slot.audio.lock().expect("audio lock").insert(turn, payload);
        format!("/audio/{}-{turn}", slot.id)
    });
    slot.emit(
        turn,
        EventKind::BotText { text: response_text, concept, gesture_id: gesture_id.clone(), style_violations },
    );
    slot.emit(
        turn,
        EventKind::PlaybackPlan { gesture_id, speech_duration, joint_timeline, audio: audio_ref, diagnostics },
    );
    slot.emit(turn, EventKind::TurnDone);
}

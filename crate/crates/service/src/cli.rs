//! `gesturechat` command line: serve, chat, decode, validate.
//!
//! Exit codes: 0 success, 1 usage error, 2 validation or I/O failure.

use std::ffi::OsString;
use std::io::{BufRead, IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use gesturechat_core::chat::Session;
use gesturechat_core::concept::ConceptInventory;
use gesturechat_core::laban::{decode_with_warnings, parse_document, RobotModel};
use gesturechat_core::library::GestureLibrary;

use crate::config::ServerConfig;

const USAGE: u8 = 1;
const FAILURE: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "gesturechat", version, about = "Chat bot with co-speech robot gestures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the HTTP and WebSocket session service.
    Serve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Converse on the terminal, one message per input line.
    Chat {
        /// Defaults to the shipped data with offline stubs.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Gesture-selection seed of the first turn; later turns add 1 each.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Decode a gesture or score document into a joint timeline.
    Decode {
        gesture: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Write the timeline here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Load a gesture library and report every problem found.
    Validate {
        manifest: PathBuf,
        /// Also check coverage of this concept inventory.
        #[arg(long)]
        inventory: Option<PathBuf>,
    },
}

pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(USAGE),
            };
        }
    };
    init_logging(matches!(cli.command, Command::Serve { .. }));
    let result = match cli.command {
        Command::Serve { config } => serve(&config),
        Command::Chat { config, seed } => chat(config.as_deref(), seed),
        Command::Decode { gesture, model, out } => decode(&gesture, &model, out.as_deref()),
        Command::Validate { manifest, inventory } => validate(&manifest, inventory.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(FAILURE)
        }
    }
}

fn init_logging(verbose: bool) {
    let default = if verbose { "info" } else { "warn" };
    let filter = tracing_subscriber::EnvFilter::try_from_default_env()
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(default));
    let _ = tracing_subscriber::fmt().with_env_filter(filter).with_writer(std::io::stderr).try_init();
}

fn runtime() -> Result<tokio::runtime::Runtime, String> {
    tokio::runtime::Runtime::new().map_err(|e| format!("cannot start runtime: {e}"))
}

fn serve(config_path: &Path) -> Result<(), String> {
    let config = ServerConfig::load(config_path).map_err(|e| e.to_string())?;
    runtime()?.block_on(crate::serve(config)).map_err(|e| format!("{e:#}"))
}

fn chat(config_path: Option<&Path>, seed: u64) -> Result<(), String> {
    let config = match config_path {
        Some(p) => ServerConfig::load(p).map_err(|e| e.to_string())?,
        None => ServerConfig::default(),
    };
    let engine = Arc::new(config.build_engine().map_err(|e| e.to_string())?);
    let rt = runtime()?;
    let mut session = Session::new(engine);
    let stdin = std::io::stdin();
    let interactive = stdin.is_terminal();
    let mut stdout = std::io::stdout().lock();
    let mut turn = 0u64;
    let prompt = |out: &mut dyn Write| {
        if interactive {
            let _ = write!(out, "> ");
            let _ = out.flush();
        }
    };
    prompt(&mut stdout);
    for line in stdin.lock().lines() {
        let line = line.map_err(|e| format!("stdin: {e}"))?;
        if line.trim().is_empty() {
            prompt(&mut stdout);
            continue;
        }
        match rt.block_on(session.run_turn(&line, seed.wrapping_add(turn))) {
            Ok(output) => {
                let plan = &output.plan;
                let io = |e: std::io::Error| format!("stdout: {e}");
                writeln!(stdout, "bot: {}", plan.response_text).map_err(io)?;
                writeln!(
                    stdout,
                    "  concept={} gesture={} speech={:.3}s timeline={:.3}s",
                    plan.concept,
                    plan.gesture_id,
                    plan.speech_duration,
                    plan.joint_timeline.duration()
                )
                .map_err(io)?;
                for v in &output.style_violations {
                    writeln!(stdout, "  style: sentence {} has {} words", v.sentence_index + 1, v.word_count)
                        .map_err(io)?;
                }
                for d in &output.diagnostics {
                    eprintln!("warning: {d}");
                }
            }
            Err(e) => eprintln!("error: {e}"),
        }
        turn += 1;
        prompt(&mut stdout);
    }
    Ok(())
}

fn decode(gesture: &Path, model: &Path, out: Option<&Path>) -> Result<(), String> {
    let text = std::fs::read_to_string(gesture).map_err(|e| format!("{}: {e}", gesture.display()))?;
    let doc = parse_document(&text).map_err(|e| format!("{}: {e}", gesture.display()))?;
    let robot = RobotModel::load(model).map_err(|e| e.to_string())?;
    let (timeline, warnings) = decode_with_warnings(&doc.score, &robot).map_err(|e| e.to_string())?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let mut json = serde_json::to_string_pretty(&timeline).map_err(|e| e.to_string())?;
    json.push('\n');
    match out {
        Some(path) => std::fs::write(path, json).map_err(|e| format!("{}: {e}", path.display())),
        None => std::io::stdout().write_all(json.as_bytes()).map_err(|e| format!("stdout: {e}")),
    }
}

fn validate(manifest: &Path, inventory: Option<&Path>) -> Result<(), String> {
    let (library, mut errors) = GestureLibrary::load_collecting(manifest);
    let mut messages: Vec<String> = Vec::new();
    if let Some(path) = inventory {
        match ConceptInventory::load(path) {
            Ok(inv) => errors.extend(library.validate(&inv)),
            Err(e) => messages.push(e.to_string()),
        }
    }
    messages.extend(errors.iter().map(ToString::to_string));
    for m in &messages {
        println!("{m}");
    }
    let n = messages.len();
    println!("{} gestures, {n} {}", library.len(), if n == 1 { "error" } else { "errors" });
    match n {
        0 => Ok(()),
        _ => Err(format!("{} failed validation", manifest.display())),
    }
}

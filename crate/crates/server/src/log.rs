//! Append-only session logs and replay.
//!
//! A log is line-delimited JSON: the header on line 1, then one accepted
//! [`WireMessage`] per line in the order the server accepted it. Replaying
//! folds the messages through a fresh [`GameState`] built from the header.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use rdgmap::game::{GameError, GameState, ParticipantId, Variant};
use rdgmap::world::{CountryId, WorldMap};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protocol::{MatcherMode, Origin, Payload, SessionId, WireMessage};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Participants {
    pub director: String,
    pub matcher: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogHeader {
    pub session: SessionId,
    pub variant: Variant,
    pub map_version: String,
    pub seed: u64,
    pub participants: Participants,
    pub matcher_mode: MatcherMode,
    pub repertoire_version: String,
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error("log i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        source: serde_json::Error,
    },
    #[error("empty log")]
    Empty,
}

/// Where a session's accepted messages go before anyone sees them.
pub trait LogSink: Send {
    fn write_header(&mut self, header: &LogHeader) -> Result<(), LogError>;
    fn append(&mut self, message: &WireMessage) -> Result<(), LogError>;
}

/// Keeps the log in memory, already serialized.
#[derive(Debug, Default, Clone)]
pub struct MemoryLog {
    lines: Vec<String>,
}

impl MemoryLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn lines(&self) -> &[String] {
        &self.lines
    }

    /// The log as file bytes.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for l in &self.lines {
            out.push_str(l);
            out.push('\n');
        }
        out
    }
}

impl LogSink for MemoryLog {
    fn write_header(&mut self, header: &LogHeader) -> Result<(), LogError> {
        self.lines
            .insert(0, serde_json::to_string(header).expect("header serializes"));
        Ok(())
    }

    fn append(&mut self, message: &WireMessage) -> Result<(), LogError> {
        self.lines.push(message.to_json());
        Ok(())
    }
}

/// Lets a caller keep a handle on a sink that a session owns.
impl<S: LogSink> LogSink for Arc<Mutex<S>> {
    fn write_header(&mut self, header: &LogHeader) -> Result<(), LogError> {
        self.lock().expect("log lock").write_header(header)
    }

    fn append(&mut self, message: &WireMessage) -> Result<(), LogError> {
        self.lock().expect("log lock").append(message)
    }
}

/// A `.jsonl` file, synced to disk after every line.
#[derive(Debug)]
pub struct FileLog {
    path: PathBuf,
    file: File,
}

impl FileLog {
    pub fn create(path: impl Into<PathBuf>) -> Result<Self, LogError> {
        let path = path.into();
        let file = File::options().create_new(true).append(true).open(&path)?;
        Ok(Self { path, file })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn line(&mut self, line: &str) -> Result<(), LogError> {
        self.file.write_all(line.as_bytes())?;
        self.file.write_all(b"\n")?;
        self.file.sync_data()?;
        Ok(())
    }
}

impl LogSink for FileLog {
    fn write_header(&mut self, header: &LogHeader) -> Result<(), LogError> {
        self.line(&serde_json::to_string(header).expect("header serializes"))
    }

    fn append(&mut self, message: &WireMessage) -> Result<(), LogError> {
        self.line(&message.to_json())
    }
}

/// A parsed log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionLog {
    pub header: LogHeader,
    pub events: Vec<WireMessage>,
}

impl SessionLog {
    pub fn parse(text: &str) -> Result<Self, LogError> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, first) = lines.next().ok_or(LogError::Empty)?;
        let header =
            serde_json::from_str(first).map_err(|source| LogError::Parse { line: 1, source })?;
        let events = lines
            .map(|(i, l)| {
                WireMessage::from_json(l).map_err(|source| LogError::Parse {
                    line: i + 1,
                    source,
                })
            })
            .collect::<Result<_, _>>()?;
        Ok(Self { header, events })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, LogError> {
        let mut text = String::new();
        for line in BufReader::new(File::open(path)?).lines() {
            text.push_str(&line?);
            text.push('\n');
        }
        Self::parse(&text)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&self.header).expect("header serializes");
        out.push('\n');
        for e in &self.events {
            out.push_str(&e.to_json());
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ReplayError {
    #[error("log was recorded on map {logged}, replaying on {provided}")]
    MapVersion { logged: String, provided: String },
    #[error("seq {seq}: sequence number not increasing")]
    Sequence { seq: u64 },
    #[error("seq {seq}: timestamp goes backwards")]
    Timestamp { seq: u64 },
    #[error("seq {seq}: {source}")]
    Rules { seq: u64, source: GameError },
    #[error("seq {seq}: logged {what} differs from replay")]
    Diverged { seq: u64, what: &'static str },
    #[error("cannot rebuild game: {0}")]
    Setup(GameError),
}

/// What a replay reconstructs.
#[derive(Debug, Clone)]
pub struct Replayed {
    pub state: GameState,
    /// Accepted matcher selections in order.
    pub selections: Vec<CountryId>,
    /// Number of logged utterances and chats per resolved target.
    pub dialogue_lengths: Vec<usize>,
    /// Evaluated guesses: every embodied selection, every web request_next.
    pub guesses: u32,
    pub correct_guesses: u32,
}

impl Replayed {
    pub fn score(&self) -> u32 {
        self.state.score()
    }

    pub fn served_targets(&self) -> &[CountryId] {
        self.state.served_targets()
    }
}

/// Rebuilds the final game state from `log`, checking ordering and every
/// logged TARGET and SCORE against the reconstruction.
pub fn replay(log: &SessionLog, map: &WorldMap) -> Result<Replayed, ReplayError> {
    let h = &log.header;
    if h.map_version != map.version() {
        return Err(ReplayError::MapVersion {
            logged: h.map_version.clone(),
            provided: map.version().to_string(),
        });
    }
    let director = ParticipantId::new(h.participants.director.clone());
    let matcher = ParticipantId::new(h.participants.matcher.clone());
    let mut game = GameState::new(h.variant, director.clone(), matcher.clone(), h.seed, map)
        .map_err(ReplayError::Setup)?;
    let mut out = Replayed {
        state: game.clone(),
        selections: Vec::new(),
        dialogue_lengths: Vec::new(),
        guesses: 0,
        correct_guesses: 0,
    };
    let mut talk = 0usize;
    let mut last: Option<(u64, u64)> = None;
    for ev in &log.events {
        let seq = ev.seq;
        if let Some((s, t)) = last {
            if seq <= s {
                return Err(ReplayError::Sequence { seq });
            }
            if ev.ts < t {
                return Err(ReplayError::Timestamp { seq });
            }
        }
        last = Some((seq, ev.ts));
        let rules = |source| ReplayError::Rules { seq, source };
        let diverged = |what| ReplayError::Diverged { seq, what };
        game.tick(ev.ts);
        let resolved_before = game.resolved_targets();
        match &ev.payload {
            Payload::Start { .. } => {
                game.start(ev.ts).map_err(rules)?;
            }
            Payload::Target { country } => {
                if game.target() != Some(country) {
                    return Err(diverged("target"));
                }
            }
            Payload::Select { country, .. } if ev.from != Origin::Server => {
                let o = game.select(&matcher, country).map_err(rules)?;
                out.selections.push(country.clone());
                if h.variant == Variant::Embodied {
                    out.guesses += 1;
                    out.correct_guesses += u32::from(o.correct);
                }
            }
            Payload::RequestNext {} => {
                let o = game.request_next(&director).map_err(rules)?;
                out.guesses += 1;
                out.correct_guesses += u32::from(o.correct);
            }
            Payload::Score {
                score, resolved, ..
            } => {
                if *score != game.score() || *resolved != game.resolved_targets() {
                    return Err(diverged("score"));
                }
            }
            Payload::End { score, resolved } => {
                if *score != game.score() || *resolved != game.resolved_targets() {
                    return Err(diverged("final score"));
                }
            }
            Payload::Utterance { .. } | Payload::Chat { .. } => talk += 1,
            _ => {}
        }
        if game.resolved_targets() > resolved_before {
            out.dialogue_lengths.push(std::mem::take(&mut talk));
        }
    }
    out.state = game;
    Ok(out)
}

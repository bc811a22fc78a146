//! The Matcher agent: what it knows, what it may say, how it looks, and the
//! rule-based policy that can play without a wizard.

pub mod embodiment;
mod policy;
pub mod repertoire;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::Variant;
use crate::world::{CountryId, WorldMap};

pub use embodiment::{
    reaction_button, EmbodimentEvent, GazeConfig, GazeController, GazeSide, Mood,
};
pub use policy::{AgentAction, AutonomousMatcher, PolicyConfig, PolicyRule};
pub use repertoire::{Category, Repertoire, Utterance, UtteranceButton};

/// Countries the web agent can place from the start.
pub const WEB_SEED: [&str; 9] = [
    "USA", "CAN", "MEX", "BRA", "IND", "CHN", "RUS", "AUS", "ITA",
];
/// Added for the embodied agent.
pub const EMBODIED_EXTRA: [&str; 2] = ["SWE", "FRA"];

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("unknown country {0}")]
    NotFound(String),
    #[error("anchor label must not be empty")]
    EmptyLabel,
    #[error("unknown button {0}")]
    UnknownButton(String),
    #[error("button {button} is not available in {variant}")]
    UnavailableButton { button: String, variant: Variant },
    #[error("button {0} needs a country name")]
    MissingCountry(String),
    #[error("invalid repertoire: {0}")]
    Repertoire(String),
    #[error("memory store: {0}")]
    Storage(String),
}

/// The seed set for `variant`.
pub fn seed_countries(variant: Variant) -> BTreeSet<CountryId> {
    let extra: &[&str] = match variant {
        Variant::Web => &[],
        Variant::Embodied => &EMBODIED_EXTRA,
    };
    WEB_SEED
        .iter()
        .chain(extra)
        .map(|s| CountryId::from(*s))
        .collect()
}

/// A labelled anchoring point added by the wizard or the policy.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Anchor {
    pub label: String,
    pub id: CountryId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentKnowledge {
    pub variant: Variant,
    pub director: String,
    /// Countries the agent can locate by name. Only grows.
    pub known_countries: BTreeSet<CountryId>,
    pub anchors: Vec<Anchor>,
    /// What this director taught the agent in earlier sessions.
    pub session_memory: BTreeSet<CountryId>,
    /// Learned during this game; persisted at game end.
    pub learned: BTreeSet<CountryId>,
    /// Set when the memory store failed and only the seed set is known.
    pub degraded: bool,
}

impl AgentKnowledge {
    /// Seed knowledge only, with no memory lookup.
    pub fn seeded(variant: Variant, director: impl Into<String>) -> Self {
        Self {
            variant,
            director: director.into(),
            known_countries: seed_countries(variant),
            anchors: Vec::new(),
            session_memory: BTreeSet::new(),
            learned: BTreeSet::new(),
            degraded: false,
        }
    }

    pub fn knows(&self, id: &str) -> bool {
        self.known_countries.contains(id)
    }

    /// Adds `id` to the known panel. Returns whether it was new.
    pub fn learn_country(&mut self, map: &WorldMap, id: &str) -> Result<bool, AgentError> {
        let id = map
            .id(id)
            .ok_or_else(|| AgentError::NotFound(id.to_string()))?;
        let new = self.known_countries.insert(id.clone());
        if new {
            self.learned.insert(id.clone());
        }
        Ok(new)
    }

    /// Records an anchoring point. Returns whether it was new.
    pub fn add_anchor(
        &mut self,
        map: &WorldMap,
        label: &str,
        id: &str,
    ) -> Result<bool, AgentError> {
        if label.trim().is_empty() {
            return Err(AgentError::EmptyLabel);
        }
        let id = map
            .id(id)
            .ok_or_else(|| AgentError::NotFound(id.to_string()))?;
        let anchor = Anchor {
            label: label.trim().to_string(),
            id: id.clone(),
        };
        if self.anchors.contains(&anchor) {
            return Ok(false);
        }
        self.anchors.push(anchor);
        Ok(true)
    }

    pub fn anchor_ids(&self) -> impl Iterator<Item = &CountryId> {
        self.anchors.iter().map(|a| &a.id)
    }

    /// Writes this game's learning to `store`.
    pub fn persist(&self, store: &dyn MemoryStore) -> Result<(), AgentError> {
        if self.learned.is_empty() {
            return Ok(());
        }
        store.merge(&self.director, &self.learned)
    }
}

/// Builds the agent's starting knowledge. In EMBODIED games a returning
/// director's earlier teaching is merged in; a failing store falls back to
/// the seed set.
pub fn init_knowledge(variant: Variant, director: &str, store: &dyn MemoryStore) -> AgentKnowledge {
    let mut k = AgentKnowledge::seeded(variant, director);
    if variant == Variant::Embodied {
        match store.load(director) {
            Ok(mem) => {
                k.known_countries.extend(mem.iter().cloned());
                k.session_memory = mem;
            }
            Err(e) => {
                log::warn!("memory store unavailable for {director}, starting from seed set: {e}");
                k.degraded = true;
            }
        }
    }
    k
}

/// Cross-session memory of what each director taught the agent. Writes are
/// unions, so concurrent sessions commute.
pub trait MemoryStore: Send + Sync {
    fn load(&self, director: &str) -> Result<BTreeSet<CountryId>, AgentError>;
    fn merge(&self, director: &str, learned: &BTreeSet<CountryId>) -> Result<(), AgentError>;
}

#[derive(Debug, Default)]
pub struct InMemoryStore {
    inner: Mutex<HashMap<String, BTreeSet<CountryId>>>,
}

impl InMemoryStore {
    pub fn new() -> Self {
        Self::default()
    }
}

impl MemoryStore for InMemoryStore {
    fn load(&self, director: &str) -> Result<BTreeSet<CountryId>, AgentError> {
        let inner = self
            .inner
            .lock()
            .map_err(|e| AgentError::Storage(e.to_string()))?;
        Ok(inner.get(director).cloned().unwrap_or_default())
    }

    fn merge(&self, director: &str, learned: &BTreeSet<CountryId>) -> Result<(), AgentError> {
        let mut inner = self
            .inner
            .lock()
            .map_err(|e| AgentError::Storage(e.to_string()))?;
        inner
            .entry(director.to_string())
            .or_default()
            .extend(learned.iter().cloned());
        Ok(())
    }
}

/// One JSON object `{director: [ids]}` on disk, replaced atomically.
#[derive(Debug)]
pub struct FileMemoryStore {
    path: PathBuf,
    lock: Mutex<()>,
}

impl FileMemoryStore {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self {
            path: path.into(),
            lock: Mutex::new(()),
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn read_all(&self) -> Result<BTreeMap<String, BTreeSet<CountryId>>, AgentError> {
        match std::fs::read(&self.path) {
            Ok(bytes) => serde_json::from_slice(&bytes)
                .map_err(|e| AgentError::Storage(format!("{}: {e}", self.path.display()))),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(BTreeMap::new()),
            Err(e) => Err(AgentError::Storage(format!("{}: {e}", self.path.display()))),
        }
    }
}

impl MemoryStore for FileMemoryStore {
    fn load(&self, director: &str) -> Result<BTreeSet<CountryId>, AgentError> {
        let _guard = self
            .lock
            .lock()
            .map_err(|e| AgentError::Storage(e.to_string()))?;
        Ok(self.read_all()?.remove(director).unwrap_or_default())
    }

    fn merge(&self, director: &str, learned: &BTreeSet<CountryId>) -> Result<(), AgentError> {
        let _guard = self
            .lock
            .lock()
            .map_err(|e| AgentError::Storage(e.to_string()))?;
        let mut all = self.read_all()?;
        all.entry(director.to_string())
            .or_default()
            .extend(learned.iter().cloned());
        let storage =
            |e: std::io::Error| AgentError::Storage(format!("{}: {e}", self.path.display()));
        let tmp = self.path.with_extension("tmp");
        let mut f = std::fs::File::create(&tmp).map_err(storage)?;
        f.write_all(&serde_json::to_vec_pretty(&all).expect("plain map serializes"))
            .map_err(storage)?;
        f.sync_all().map_err(storage)?;
        std::fs::rename(&tmp, &self.path).map_err(storage)
    }
}

//! FIFO matchmaking between waiting Directors and the Matcher side
//! (the single wizard or a pool of autonomous agents).

use std::collections::{HashMap, HashSet, VecDeque};

use rdgmap::game::Variant;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LobbyError {
    #[error("{0} is already queued or playing")]
    AlreadyQueued(String),
    #[error("{0} is not queued")]
    NotQueued(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueueEntry {
    pub participant: String,
    pub enqueued_at_ms: u64,
    pub variant: Variant,
}

/// What kind of Matcher became available.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Slot {
    Wizard,
    Autonomous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReadySignal {
    pub slot: Slot,
    pub variant: Variant,
}

/// One queue per variant. Directors leave the queue when paired or when
/// they disconnect.
#[derive(Debug, Default)]
pub struct Matchmaker {
    queues: HashMap<Variant, VecDeque<QueueEntry>>,
    busy: HashSet<String>,
}

impl Matchmaker {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends `participant`; returns its 1-based position.
    pub fn enqueue(
        &mut self,
        participant: &str,
        variant: Variant,
        now_ms: u64,
    ) -> Result<usize, LobbyError> {
        if !self.busy.insert(participant.to_string()) {
            return Err(LobbyError::AlreadyQueued(participant.to_string()));
        }
        let q = self.queues.entry(variant).or_default();
        q.push_back(QueueEntry {
            participant: participant.to_string(),
            enqueued_at_ms: now_ms,
            variant,
        });
        Ok(q.len())
    }

    pub fn position(&self, participant: &str) -> Option<usize> {
        self.queues
            .values()
            .find_map(|q| q.iter().position(|e| e.participant == participant))
            .map(|i| i + 1)
    }

    pub fn len(&self, variant: Variant) -> usize {
        self.queues.get(&variant).map_or(0, VecDeque::len)
    }

    pub fn is_empty(&self) -> bool {
        self.queues.values().all(VecDeque::is_empty)
    }

    /// Everyone still waiting for `variant`, head first.
    pub fn waiting(&self, variant: Variant) -> impl Iterator<Item = &QueueEntry> {
        self.queues.get(&variant).into_iter().flatten()
    }

    /// Dequeues the head of the signalled variant's queue. The participant
    /// stays busy until [`Matchmaker::release`].
    pub fn pair(&mut self, signal: ReadySignal) -> Option<QueueEntry> {
        self.queues.get_mut(&signal.variant)?.pop_front()
    }

    /// Drops a waiting participant (disconnect).
    pub fn leave(&mut self, participant: &str) -> Result<(), LobbyError> {
        let mut found = false;
        for q in self.queues.values_mut() {
            let before = q.len();
            q.retain(|e| e.participant != participant);
            found |= q.len() != before;
        }
        if !found {
            return Err(LobbyError::NotQueued(participant.to_string()));
        }
        self.busy.remove(participant);
        Ok(())
    }

    /// Marks a paired participant's session as over, so they may queue again.
    pub fn release(&mut self, participant: &str) {
        if self.position(participant).is_none() {
            self.busy.remove(participant);
        }
    }
}

/// Free Matcher capacity: one wizard plus a fixed number of agents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotPool {
    wizard_free: bool,
    autonomous_free: usize,
}

impl SlotPool {
    pub fn new(wizard: bool, autonomous: usize) -> Self {
        Self {
            wizard_free: wizard,
            autonomous_free: autonomous,
        }
    }

    pub fn take(&mut self, slot: Slot) -> bool {
        match slot {
            Slot::Wizard if self.wizard_free => {
                self.wizard_free = false;
                true
            }
            Slot::Autonomous if self.autonomous_free > 0 => {
                self.autonomous_free -= 1;
                true
            }
            _ => false,
        }
    }

    pub fn give_back(&mut self, slot: Slot) {
        match slot {
            Slot::Wizard => self.wizard_free = true,
            Slot::Autonomous => self.autonomous_free += 1,
        }
    }

    /// A free slot, wizard first.
    pub fn any_free(&self) -> Option<Slot> {
        if self.wizard_free {
            Some(Slot::Wizard)
        } else if self.autonomous_free > 0 {
            Some(Slot::Autonomous)
        } else {
            None
        }
    }
}

//! The authoritative game state machine.
//!
//! One [`GameState`] per session. The server owns the clock: every operation
//! that depends on time takes a server-side monotonic timestamp in
//! milliseconds, and clients never decide expiry.
//!
//! Two rule sets exist:
//!
//! * [`Variant::Web`]: the Matcher's selection is hidden from the Director and
//!   may change freely. Correctness is evaluated when the Director asks for the
//!   next target; a correct selection scores 1.
//! * [`Variant::Embodied`]: every selection is shown on the shared screen and
//!   counts as a guess. At most two guesses per target: 2 points for a correct
//!   first guess, 1 for a correct second guess, 0 otherwise. The game advances
//!   on its own once a target is resolved.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::world::{CountryId, WorldMap};

/// Length of one game.
pub const GAME_DURATION_MS: u64 = 600_000;
/// Guesses per target in the embodied variant.
pub const MAX_GUESSES: u8 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Variant {
    Web,
    Embodied,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Web => "WEB",
            Variant::Embodied => "EMBODIED",
        })
    }
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "WEB" => Ok(Variant::Web),
            "EMBODIED" => Ok(Variant::Embodied),
            other => Err(format!("unknown variant {other}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParticipantId(String);

impl ParticipantId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ParticipantId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ParticipantId {
    fn from(s: &str) -> Self {
        Self(s.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Phase {
    Lobby,
    Running,
    Finished,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GameError {
    #[error("director and matcher must be different participants")]
    SameParticipant,
    #[error("operation needs phase {expected:?}, game is {actual:?}")]
    WrongPhase { expected: Phase, actual: Phase },
    #[error("only the matcher may select")]
    NotMatcher,
    #[error("only the director may request the next target")]
    NotDirector,
    #[error("guess limit reached for this target")]
    GuessLimit,
    #[error("game clock has expired")]
    ClockExpired,
    #[error("unknown country {0}")]
    UnknownCountry(String),
    #[error("{0} games advance automatically")]
    Unsupported(Variant),
}

/// Result of a selection or a next-target request.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionOutcome {
    pub accepted: bool,
    /// Points awarded by this action: 0, 1 or 2.
    pub scored: u8,
    /// Whether the game moved on to a new target.
    pub advanced: bool,
    /// Whether the selection is shown to the Director / shared screen.
    pub reveal: bool,
    /// Whether the evaluated selection matched the target.
    pub correct: bool,
    /// Which guess this was (embodied only; 0 for web).
    pub guess: u8,
    /// The target that was resolved, when `advanced`.
    pub resolved_target: Option<CountryId>,
    /// The newly drawn target, when `advanced` and the pool was not empty.
    pub next_target: Option<CountryId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameState {
    variant: Variant,
    director: ParticipantId,
    matcher: ParticipantId,
    target: Option<CountryId>,
    served_targets: Vec<CountryId>,
    current_selection: Option<CountryId>,
    guesses_used: u8,
    score: u32,
    remaining_ms: u64,
    started_at_ms: Option<u64>,
    seed: u64,
    phase: Phase,
    resolved: u32,
    pool: Arc<[CountryId]>,
    board: Arc<BTreeSet<CountryId>>,
    rng: ChaCha8Rng,
}

impl GameState {
    /// A game in the lobby with a full clock and no target yet.
    pub fn new(
        variant: Variant,
        director: ParticipantId,
        matcher: ParticipantId,
        seed: u64,
        map: &WorldMap,
    ) -> Result<Self, GameError> {
        if director == matcher {
            return Err(GameError::SameParticipant);
        }
        Ok(Self {
            variant,
            director,
            matcher,
            target: None,
            served_targets: Vec::new(),
            current_selection: None,
            guesses_used: 0,
            score: 0,
            remaining_ms: GAME_DURATION_MS,
            started_at_ms: None,
            seed,
            phase: Phase::Lobby,
            resolved: 0,
            pool: map.selectable_ids().into(),
            board: Arc::new(map.ids().cloned().collect()),
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    /// Starts the clock at `now_ms` and draws the first target.
    pub fn start(&mut self, now_ms: u64) -> Result<Option<CountryId>, GameError> {
        self.expect_phase(Phase::Lobby)?;
        self.phase = Phase::Running;
        self.started_at_ms = Some(now_ms);
        Ok(self.next_target())
    }

    /// Draws uniformly from the selectable countries not yet served. An
    /// exhausted pool ends the game.
    pub fn next_target(&mut self) -> Option<CountryId> {
        if self.phase != Phase::Running {
            return None;
        }
        self.current_selection = None;
        self.guesses_used = 0;
        let remaining: Vec<&CountryId> = self
            .pool
            .iter()
            .filter(|id| !self.served_targets.contains(id))
            .collect();
        if remaining.is_empty() {
            self.target = None;
            self.phase = Phase::Finished;
            return None;
        }
        let pick = remaining[self.rng.gen_range(0..remaining.len())].clone();
        self.served_targets.push(pick.clone());
        self.target = Some(pick.clone());
        Some(pick)
    }

    /// The Matcher clicks `choice`.
    pub fn select(
        &mut self,
        who: &ParticipantId,
        choice: &CountryId,
    ) -> Result<SelectionOutcome, GameError> {
        self.expect_live()?;
        if who != &self.matcher {
            return Err(GameError::NotMatcher);
        }
        if !self.board.contains(choice) {
            return Err(GameError::UnknownCountry(choice.to_string()));
        }
        let target = self.target.clone().expect("running game has a target");
        match self.variant {
            Variant::Web => {
                self.current_selection = Some(choice.clone());
                Ok(SelectionOutcome {
                    accepted: true,
                    scored: 0,
                    advanced: false,
                    reveal: false,
                    correct: false,
                    guess: 0,
                    resolved_target: None,
                    next_target: None,
                })
            }
            Variant::Embodied => {
                if self.guesses_used >= MAX_GUESSES {
                    return Err(GameError::GuessLimit);
                }
                self.guesses_used += 1;
                self.current_selection = Some(choice.clone());
                let guess = self.guesses_used;
                let correct = *choice == target;
                let scored = match (correct, guess) {
                    (true, 1) => 2,
                    (true, _) => 1,
                    (false, _) => 0,
                };
                let advanced = correct || guess == MAX_GUESSES;
                self.score += u32::from(scored);
                let next_target = if advanced {
                    self.resolved += 1;
                    self.next_target()
                } else {
                    None
                };
                Ok(SelectionOutcome {
                    accepted: true,
                    scored,
                    advanced,
                    reveal: true,
                    correct,
                    guess,
                    resolved_target: advanced.then_some(target),
                    next_target,
                })
            }
        }
    }

    /// The Director presses the next-target button (web variant only).
    pub fn request_next(&mut self, who: &ParticipantId) -> Result<SelectionOutcome, GameError> {
        self.expect_live()?;
        if who != &self.director {
            return Err(GameError::NotDirector);
        }
        if self.variant == Variant::Embodied {
            return Err(GameError::Unsupported(self.variant));
        }
        let target = self.target.clone().expect("running game has a target");
        let correct = self.current_selection.as_ref() == Some(&target);
        let scored = u8::from(correct);
        self.score += u32::from(scored);
        self.resolved += 1;
        let next_target = self.next_target();
        Ok(SelectionOutcome {
            accepted: true,
            scored,
            advanced: true,
            reveal: false,
            correct,
            guess: 0,
            resolved_target: Some(target),
            next_target,
        })
    }

    /// Updates the clock from server time. Returns `true` exactly when this
    /// call ended the game.
    pub fn tick(&mut self, now_ms: u64) -> bool {
        if self.phase != Phase::Running {
            return false;
        }
        let started = self.started_at_ms.expect("running game has a start time");
        let elapsed = now_ms.saturating_sub(started);
        let remaining = GAME_DURATION_MS.saturating_sub(elapsed);
        self.remaining_ms = self.remaining_ms.min(remaining);
        if self.remaining_ms == 0 {
            self.phase = Phase::Finished;
            return true;
        }
        false
    }

    fn expect_phase(&self, expected: Phase) -> Result<(), GameError> {
        if self.phase != expected {
            return Err(GameError::WrongPhase {
                expected,
                actual: self.phase,
            });
        }
        Ok(())
    }

    fn expect_live(&self) -> Result<(), GameError> {
        if self.phase == Phase::Finished && self.remaining_ms == 0 {
            return Err(GameError::ClockExpired);
        }
        self.expect_phase(Phase::Running)?;
        if self.remaining_ms == 0 {
            return Err(GameError::ClockExpired);
        }
        Ok(())
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn director(&self) -> &ParticipantId {
        &self.director
    }

    pub fn matcher(&self) -> &ParticipantId {
        &self.matcher
    }

    pub fn target(&self) -> Option<&CountryId> {
        self.target.as_ref()
    }

    /// Every target drawn so far, including the current one.
    pub fn served_targets(&self) -> &[CountryId] {
        &self.served_targets
    }

    /// Targets that were resolved (scored or given up on).
    pub fn resolved_targets(&self) -> u32 {
        self.resolved
    }

    pub fn current_selection(&self) -> Option<&CountryId> {
        self.current_selection.as_ref()
    }

    pub fn guesses_used(&self) -> u8 {
        self.guesses_used
    }

    pub fn score(&self) -> u32 {
        self.score
    }

    pub fn remaining_ms(&self) -> u64 {
        self.remaining_ms
    }

    /// Remaining whole seconds, rounded up, in [0, 600].
    pub fn clock_secs(&self) -> u64 {
        self.remaining_ms.div_ceil(1000)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    /// Number of countries that can be drawn as targets.
    pub fn pool_size(&self) -> usize {
        self.pool.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map() -> &'static WorldMap {
        WorldMap::bundled()
    }

    fn game(variant: Variant, seed: u64) -> GameState {
        GameState::new(variant, "dir".into(), "agent".into(), seed, map()).unwrap()
    }

    fn running(variant: Variant, seed: u64) -> GameState {
        let mut g = game(variant, seed);
        g.start(0).unwrap();
        g
    }

    fn some_other(g: &GameState) -> CountryId {
        let t = g.target().unwrap();
        map().ids().find(|id| *id != t).unwrap().clone()
    }

    #[test]
    fn new_game_has_full_clock() {
        let g = game(Variant::Web, 42);
        assert_eq!(g.clock_secs(), 600);
        assert_eq!(g.score(), 0);
        assert_eq!(g.phase(), Phase::Lobby);
        assert!(g.target().is_none());
    }

    #[test]
    fn same_participant_is_rejected() {
        let err = GameState::new(Variant::Web, "A".into(), "A".into(), 1, map()).unwrap_err();
        assert_eq!(err, GameError::SameParticipant);
    }

    #[test]
    fn start_twice_is_a_state_error() {
        let mut g = running(Variant::Web, 42);
        assert!(g.target().is_some());
        assert!(matches!(g.start(0), Err(GameError::WrongPhase { .. })));
    }

    #[test]
    fn same_seed_same_sequence() {
        let draw = |seed| {
            let mut g = running(Variant::Web, seed);
            let d = ParticipantId::from("dir");
            for _ in 0..20 {
                g.request_next(&d).unwrap();
            }
            g.served_targets().to_vec()
        };
        assert_eq!(draw(42), draw(42));
        assert_ne!(draw(42), draw(43));
    }

    #[test]
    fn seeds_42_and_43_start_differently() {
        let a = running(Variant::Web, 42);
        let b = running(Variant::Web, 43);
        assert_ne!(a.target(), b.target());
    }

    #[test]
    fn last_country_is_forced_then_pool_exhaustion_finishes() {
        let mut g = running(Variant::Web, 7);
        let d = ParticipantId::from("dir");
        while g.served_targets().len() < 192 {
            g.request_next(&d).unwrap();
        }
        let served: BTreeSet<_> = g.served_targets().iter().cloned().collect();
        let missing: Vec<_> = map()
            .selectable_ids()
            .into_iter()
            .filter(|id| !served.contains(id))
            .collect();
        assert_eq!(missing.len(), 1);
        let out = g.request_next(&d).unwrap();
        assert_eq!(out.next_target.as_ref(), Some(&missing[0]));
        assert_eq!(g.target(), Some(&missing[0]));
        let out = g.request_next(&d).unwrap();
        assert!(out.advanced);
        assert_eq!(out.next_target, None);
        assert_eq!(g.phase(), Phase::Finished);
    }

    #[test]
    fn embodied_truth_table() {
        let m = ParticipantId::from("agent");
        // first correct
        let mut g = running(Variant::Embodied, 1);
        let t = g.target().unwrap().clone();
        let o = g.select(&m, &t).unwrap();
        assert_eq!((o.scored, o.advanced, o.reveal), (2, true, true));
        // wrong then correct
        let mut g = running(Variant::Embodied, 1);
        let t = g.target().unwrap().clone();
        let o = g.select(&m, &some_other(&g)).unwrap();
        assert_eq!((o.scored, o.advanced), (0, false));
        let o = g.select(&m, &t).unwrap();
        assert_eq!((o.scored, o.advanced), (1, true));
        // wrong twice
        let mut g = running(Variant::Embodied, 1);
        let w = some_other(&g);
        g.select(&m, &w).unwrap();
        let o = g.select(&m, &w).unwrap();
        assert_eq!((o.scored, o.advanced, o.guess), (0, true, 2));
        assert_eq!(g.score(), 0);
        assert_eq!(g.guesses_used(), 0);
    }

    #[test]
    fn web_select_is_hidden_and_unscored() {
        let mut g = running(Variant::Web, 5);
        let m = ParticipantId::from("agent");
        for id in map().ids().take(5) {
            let o = g.select(&m, id).unwrap();
            assert_eq!((o.scored, o.advanced, o.reveal), (0, false, false));
        }
    }

    #[test]
    fn web_request_next_scores_on_match() {
        let mut g = running(Variant::Web, 5);
        let (m, d) = (ParticipantId::from("agent"), ParticipantId::from("dir"));
        let t = g.target().unwrap().clone();
        g.select(&m, &t).unwrap();
        let o = g.request_next(&d).unwrap();
        assert_eq!((o.scored, o.advanced), (1, true));
        let o = g.request_next(&d).unwrap();
        assert_eq!((o.scored, o.advanced), (0, true));
        assert!(matches!(g.request_next(&m), Err(GameError::NotDirector)));
        assert!(matches!(g.select(&d, &t), Err(GameError::NotMatcher)));
    }

    #[test]
    fn embodied_has_no_next_button() {
        let mut g = running(Variant::Embodied, 5);
        assert_eq!(
            g.request_next(&"dir".into()),
            Err(GameError::Unsupported(Variant::Embodied))
        );
    }

    #[test]
    fn clock_expiry() {
        let mut g = running(Variant::Web, 5);
        assert!(!g.tick(599_999));
        assert_eq!(g.clock_secs(), 1);
        let snapshot = g.clone();
        assert!(!g.tick(599_999));
        assert_eq!(g, snapshot);
        assert!(g.tick(600_000));
        assert_eq!(g.phase(), Phase::Finished);
        assert!(!g.tick(600_000));
        assert!(!g.tick(700_000));
        let t = g.target().unwrap().clone();
        assert_eq!(g.select(&"agent".into(), &t), Err(GameError::ClockExpired));
        assert_eq!(g.request_next(&"dir".into()), Err(GameError::ClockExpired));
    }

    #[test]
    fn clock_never_increases() {
        let mut g = running(Variant::Web, 5);
        g.tick(10_000);
        g.tick(5_000);
        assert_eq!(g.remaining_ms(), 590_000);
    }

    #[test]
    fn unknown_choice_is_rejected() {
        let mut g = running(Variant::Web, 5);
        assert!(matches!(
            g.select(&"agent".into(), &"XYZ".into()),
            Err(GameError::UnknownCountry(_))
        ));
    }
}

//! One game session: validates messages against the rules, logs them, and
//! decides who sees what.
//!
//! [`SessionCore`] is synchronous and takes the current session time on
//! every call, so the same code runs under the socket server and under the
//! simulator's virtual clock. Every message it sends is appended to the log
//! before the corresponding [`Delivery`] values are returned.

use std::collections::BTreeMap;
use std::sync::Arc;

use rdgmap::agent::{
    reaction_button, AgentAction, AgentKnowledge, AutonomousMatcher, EmbodimentEvent, GazeConfig,
    GazeController, MemoryStore, Repertoire,
};
use rdgmap::game::{
    GameError, GameState, ParticipantId, Phase, SelectionOutcome, Variant, GAME_DURATION_MS,
};
use rdgmap::world::{CountryId, WorldMap};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::log::{LogError, LogHeader, LogSink, Participants};
use crate::protocol::{ErrorCode, MatcherMode, Origin, Payload, Role, SessionId, WireMessage};

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("session log: {0}")]
    Log(#[from] LogError),
    #[error("cannot set up game: {0}")]
    Game(#[from] GameError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub variant: Variant,
    pub seed: u64,
    pub matcher_mode: MatcherMode,
    pub director: String,
    pub matcher: String,
    /// Whether the wizard console also receives TARGET.
    pub wizard_sees_target: bool,
    /// Play the happy/sad reaction automatically after embodied guesses.
    pub auto_reactions: bool,
    pub timer_interval_ms: u64,
    pub gaze: GazeConfig,
}

impl SessionConfig {
    pub fn new(variant: Variant, matcher_mode: MatcherMode, seed: u64) -> Self {
        let matcher = match matcher_mode {
            MatcherMode::Human => "matcher",
            MatcherMode::Wizard => "wizard",
            MatcherMode::Autonomous => "agent",
        };
        Self {
            variant,
            seed,
            matcher_mode,
            director: "director".into(),
            matcher: matcher.into(),
            wizard_sees_target: false,
            auto_reactions: true,
            timer_interval_ms: 10_000,
            gaze: GazeConfig::default(),
        }
    }

    /// Roles that receive messages in this session.
    pub fn roles(&self) -> Vec<Role> {
        let mut roles = vec![Role::Director];
        match self.matcher_mode {
            MatcherMode::Human => roles.push(Role::Matcher),
            MatcherMode::Wizard => roles.push(Role::Wizard),
            MatcherMode::Autonomous => {}
        }
        if self.variant == Variant::Embodied {
            roles.push(Role::SharedScreen);
        }
        roles
    }

    /// The role that plays the Matcher, if a connection does.
    pub fn matcher_role(&self) -> Option<Role> {
        match self.matcher_mode {
            MatcherMode::Human => Some(Role::Matcher),
            MatcherMode::Wizard => Some(Role::Wizard),
            MatcherMode::Autonomous => None,
        }
    }
}

/// A message for one connection.
#[derive(Debug, Clone, PartialEq)]
pub struct Delivery {
    pub to: Role,
    pub message: WireMessage,
}

enum MatcherSide<'m> {
    Human,
    Wizard(AgentKnowledge),
    Autonomous(Box<AutonomousMatcher<'m>>),
}

pub struct SessionCore<'m> {
    id: SessionId,
    config: SessionConfig,
    header: LogHeader,
    map: &'m WorldMap,
    repertoire: &'m Repertoire,
    game: GameState,
    sink: Box<dyn LogSink + 'm>,
    log_seq: u64,
    out_seq: BTreeMap<Role, u64>,
    in_seq: BTreeMap<Role, u64>,
    side: MatcherSide<'m>,
    gaze: Option<GazeController>,
    reactions: usize,
    started_at: u64,
    next_timer_ms: u64,
    ended: bool,
    memory: Option<Arc<dyn MemoryStore>>,
}

type Out = Result<Vec<Delivery>, SessionError>;

impl<'m> SessionCore<'m> {
    /// Creates the session and writes the log header. Agent knowledge comes
    /// from `memory` when given.
    pub fn new(
        id: SessionId,
        config: SessionConfig,
        map: &'m WorldMap,
        repertoire: &'m Repertoire,
        mut sink: Box<dyn LogSink + 'm>,
        memory: Option<Arc<dyn MemoryStore>>,
    ) -> Result<Self, SessionError> {
        let game = GameState::new(
            config.variant,
            ParticipantId::new(config.director.clone()),
            ParticipantId::new(config.matcher.clone()),
            config.seed,
            map,
        )?;
        let knowledge = || match &memory {
            Some(store) => {
                rdgmap::agent::init_knowledge(config.variant, &config.director, store.as_ref())
            }
            None => AgentKnowledge::seeded(config.variant, config.director.clone()),
        };
        let side =
            match config.matcher_mode {
                MatcherMode::Human => MatcherSide::Human,
                MatcherMode::Wizard => MatcherSide::Wizard(knowledge()),
                MatcherMode::Autonomous => MatcherSide::Autonomous(Box::new(
                    AutonomousMatcher::new(map, repertoire, knowledge()),
                )),
            };
        let header = LogHeader {
            session: id.clone(),
            variant: config.variant,
            map_version: map.version().to_string(),
            seed: config.seed,
            participants: Participants {
                director: config.director.clone(),
                matcher: config.matcher.clone(),
            },
            matcher_mode: config.matcher_mode,
            repertoire_version: repertoire.version().to_string(),
        };
        sink.write_header(&header)?;
        Ok(Self {
            id,
            config,
            header,
            map,
            repertoire,
            game,
            sink,
            log_seq: 0,
            out_seq: BTreeMap::new(),
            in_seq: BTreeMap::new(),
            side,
            gaze: None,
            reactions: 0,
            started_at: 0,
            next_timer_ms: 0,
            ended: false,
            memory,
        })
    }

    pub fn id(&self) -> &SessionId {
        &self.id
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn header(&self) -> &LogHeader {
        &self.header
    }

    pub fn game(&self) -> &GameState {
        &self.game
    }

    pub fn is_finished(&self) -> bool {
        self.ended
    }

    /// The agent's panel, unless the Matcher is human.
    pub fn knowledge(&self) -> Option<&AgentKnowledge> {
        match &self.side {
            MatcherSide::Human => None,
            MatcherSide::Wizard(k) => Some(k),
            MatcherSide::Autonomous(a) => Some(a.knowledge()),
        }
    }

    /// Next time at which [`SessionCore::tick`] has something to do.
    pub fn next_deadline(&self) -> Option<u64> {
        if self.game.phase() != Phase::Running {
            return None;
        }
        let end = self.start_ms() + GAME_DURATION_MS;
        let mut t = end.min(self.next_timer_ms);
        if let Some(g) = self.gaze.as_ref().and_then(GazeController::next_deadline) {
            t = t.min(g);
        }
        Some(t)
    }

    fn start_ms(&self) -> u64 {
        self.started_at
    }

    /// Logs `payload` and addresses it to `to`.
    fn emit(&mut self, now: u64, from: Origin, payload: Payload, to: &[Role]) -> Out {
        self.log_seq += 1;
        let logged = WireMessage {
            seq: self.log_seq,
            session: Some(self.id.clone()),
            ts: now,
            from,
            payload,
        };
        self.sink.append(&logged)?;
        Ok(to
            .iter()
            .map(|&role| {
                let seq = self.out_seq.entry(role).or_insert(0);
                *seq += 1;
                Delivery {
                    to: role,
                    message: WireMessage {
                        seq: *seq,
                        ..logged.clone()
                    },
                }
            })
            .collect())
    }

    fn everyone(&self) -> Vec<Role> {
        self.config.roles()
    }

    fn target_viewers(&self) -> Vec<Role> {
        let mut to = vec![Role::Director];
        if self.config.wizard_sees_target && self.config.matcher_mode == MatcherMode::Wizard {
            to.push(Role::Wizard);
        }
        to
    }

    fn matcher_viewers(&self) -> Vec<Role> {
        self.config.matcher_role().into_iter().collect()
    }

    fn error(&mut self, now: u64, to: Role, code: ErrorCode, message: impl Into<String>) -> Out {
        self.emit(
            now,
            Origin::Server,
            Payload::Error {
                code,
                message: message.into(),
            },
            &[to],
        )
    }

    /// Starts the clock and sends the first target.
    pub fn start(&mut self, now: u64) -> Out {
        let first = match self.game.start(now) {
            Ok(t) => t,
            Err(e) => return Err(SessionError::Game(e)),
        };
        self.started_at = now;
        self.next_timer_ms = now + self.config.timer_interval_ms;
        self.gaze = match self.side {
            MatcherSide::Human => None,
            _ => Some(GazeController::new(
                self.config.variant,
                self.config.gaze,
                now,
            )),
        };
        let mut out = self.emit(
            now,
            Origin::Server,
            Payload::Start {
                variant: self.config.variant,
                duration_ms: GAME_DURATION_MS,
            },
            &self.everyone(),
        )?;
        if let Some(t) = first {
            out.extend(self.emit(
                now,
                Origin::Server,
                Payload::Target { country: t },
                &self.target_viewers(),
            )?);
        }
        out.extend(self.emit(
            now,
            Origin::Server,
            Payload::Timer {
                remaining_ms: self.game.remaining_ms(),
            },
            &self.everyone(),
        )?);
        out.extend(self.push_knowledge(now)?);
        if self.game.phase() == Phase::Finished {
            out.extend(self.finish(now)?);
        }
        Ok(out)
    }

    /// Advances the session clock: periodic TIMER, the END message, and
    /// gaze events.
    pub fn tick(&mut self, now: u64) -> Out {
        if self.game.phase() != Phase::Running {
            return Ok(Vec::new());
        }
        let mut out = Vec::new();
        if self.game.tick(now) {
            out.extend(self.finish(now)?);
            return Ok(out);
        }
        if now >= self.next_timer_ms {
            let interval = self.config.timer_interval_ms.max(1);
            while self.next_timer_ms <= now {
                self.next_timer_ms += interval;
            }
            out.extend(self.emit(
                now,
                Origin::Server,
                Payload::Timer {
                    remaining_ms: self.game.remaining_ms(),
                },
                &self.everyone(),
            )?);
        }
        let events = self.gaze.as_mut().map(|g| g.poll(now)).unwrap_or_default();
        for event in events {
            out.extend(self.embodiment(now, event)?);
        }
        Ok(out)
    }

    fn embodiment(&mut self, now: u64, event: EmbodimentEvent) -> Out {
        let from = match self.side {
            MatcherSide::Autonomous(_) => Origin::Agent,
            _ => Origin::Server,
        };
        self.emit(now, from, Payload::Embodiment { event }, &self.everyone())
    }

    fn finish(&mut self, now: u64) -> Out {
        if self.ended {
            return Ok(Vec::new());
        }
        self.ended = true;
        let out = self.emit(
            now,
            Origin::Server,
            Payload::End {
                score: self.game.score(),
                resolved: self.game.resolved_targets(),
            },
            &self.everyone(),
        )?;
        if let (Some(store), Some(k)) = (&self.memory, self.knowledge()) {
            if let Err(e) = k.persist(store.as_ref()) {
                log::warn!("session {}: could not persist agent memory: {e}", self.id);
            }
        }
        Ok(out)
    }

    fn push_knowledge(&mut self, now: u64) -> Out {
        let payload = match &self.side {
            MatcherSide::Wizard(k) => Payload::Knowledge {
                known: k.known_countries.iter().cloned().collect(),
                anchors: k.anchors.clone(),
            },
            _ => return Ok(Vec::new()),
        };
        self.emit(now, Origin::Server, payload, &[Role::Wizard])
    }

    /// Handles one client message from the connection playing `role`.
    pub fn handle(&mut self, role: Role, msg: WireMessage, now: u64) -> Out {
        let mut out = self.tick(now)?;
        if !self.config.roles().contains(&role) {
            out.extend(self.error(
                now,
                role,
                ErrorCode::Role,
                format!("no {role} in this session"),
            )?);
            return Ok(out);
        }
        let expected = self.in_seq.get(&role).copied().unwrap_or(0) + 1;
        if msg.seq != expected {
            out.extend(self.error(
                now,
                role,
                ErrorCode::Sequence,
                format!("expected seq {expected}, got {}", msg.seq),
            )?);
            return Ok(out);
        }
        self.in_seq.insert(role, expected);
        if self.game.phase() != Phase::Running {
            let code = if self.ended {
                ErrorCode::Finished
            } else {
                ErrorCode::Rules
            };
            out.extend(self.error(now, role, code, format!("game is {:?}", self.game.phase()))?);
            return Ok(out);
        }
        let matcher_role = self.config.matcher_role();
        let more = match (role, msg.payload) {
            (Role::Director, Payload::Hover { country }) => {
                self.emit(now, Origin::Director, Payload::Hover { country }, &[])?
            }
            (Role::Director, Payload::Chat { text }) => self.director_chat(now, text)?,
            (Role::Director, Payload::RequestNext {}) => self.request_next(now)?,
            (r, Payload::Select { country, .. }) if Some(r) == matcher_role => {
                self.select(now, r.into(), country, None, Some(r))?
            }
            (Role::Matcher, Payload::Chat { text }) => self.emit(
                now,
                Origin::Matcher,
                Payload::Chat { text },
                &self.everyone(),
            )?,
            (
                Role::Wizard,
                Payload::Utterance {
                    button, country, ..
                },
            ) => self.wizard_utterance(now, &button, country)?,
            (Role::Wizard, Payload::Anchor { label, country }) => {
                self.wizard_anchor(now, &label, &country)?
            }
            (Role::Wizard, Payload::Embodiment { event })
                if self.config.variant == Variant::Embodied =>
            {
                self.emit(
                    now,
                    Origin::Wizard,
                    Payload::Embodiment { event },
                    &self.everyone(),
                )?
            }
            (role, payload) => self.error(
                now,
                role,
                ErrorCode::Role,
                format!("{} not allowed for {role}", payload.kind()),
            )?,
        };
        out.extend(more);
        Ok(out)
    }

    /// The wizard clicks a country on the agent's behalf.
    pub fn wizard_select(&mut self, country: CountryId, seq: u64, now: u64) -> Out {
        self.handle(
            Role::Wizard,
            WireMessage::client(
                seq,
                Payload::Select {
                    country,
                    rule: None,
                },
            ),
            now,
        )
    }

    fn director_chat(&mut self, now: u64, text: String) -> Out {
        let mut out = self.emit(
            now,
            Origin::Director,
            Payload::Chat { text: text.clone() },
            &self.everyone(),
        )?;
        if let Some(g) = self.gaze.as_mut() {
            let events = g.on_director_speech(now);
            for event in events {
                out.extend(self.embodiment(now, event)?);
            }
        }
        let actions = match &mut self.side {
            MatcherSide::Autonomous(agent) => agent.step(&text),
            _ => return Ok(out),
        };
        for action in actions {
            match action {
                AgentAction::Select { country, rule, .. } => {
                    if self.game.phase() != Phase::Running {
                        break;
                    }
                    if let Some(c) = self.map.get(country.as_str()) {
                        let lon = c.centroid.lon;
                        if let Some(event) = self.gaze.as_mut().and_then(|g| g.on_reference(lon)) {
                            out.extend(self.embodiment(now, event)?);
                        }
                    }
                    out.extend(self.select(
                        now,
                        Origin::Agent,
                        country,
                        Some(rule.as_str().to_string()),
                        None,
                    )?);
                }
                AgentAction::Say { utterance, rule } => {
                    if self.game.phase() != Phase::Running {
                        break;
                    }
                    out.extend(self.emit(
                        now,
                        Origin::Agent,
                        Payload::Utterance {
                            button: utterance.button,
                            text: utterance.text,
                            country: None,
                            rule: Some(rule.as_str().to_string()),
                        },
                        &self.everyone(),
                    )?);
                    if let Some(event) = utterance.expression {
                        out.extend(self.embodiment(now, event)?);
                    }
                }
                AgentAction::NoOp { .. } => {}
            }
        }
        Ok(out)
    }

    fn select(
        &mut self,
        now: u64,
        from: Origin,
        country: CountryId,
        rule: Option<String>,
        sender: Option<Role>,
    ) -> Out {
        let matcher = self.game.matcher().clone();
        let outcome = match self.game.select(&matcher, &country) {
            Ok(o) => o,
            Err(e) => {
                return match sender {
                    Some(role) => self.error(now, role, ErrorCode::Rules, e.to_string()),
                    None => {
                        log::debug!("session {}: agent selection rejected: {e}", self.id);
                        Ok(Vec::new())
                    }
                };
            }
        };
        let select = Payload::Select {
            country: country.clone(),
            rule,
        };
        let mut out = match self.config.variant {
            // Hidden selection: only the Matcher side sees it.
            Variant::Web => self.emit(now, from, select, &self.matcher_viewers())?,
            Variant::Embodied => {
                let mut out = self.emit(now, from, select, &[])?;
                out.extend(self.emit(
                    now,
                    Origin::Server,
                    Payload::SelectionShown {
                        country,
                        guess: outcome.guess,
                    },
                    &self.everyone(),
                )?);
                out
            }
        };
        if self.config.variant == Variant::Embodied {
            out.extend(self.after_outcome(now, &outcome)?);
        }
        Ok(out)
    }

    fn request_next(&mut self, now: u64) -> Out {
        let director = self.game.director().clone();
        match self.game.request_next(&director) {
            Ok(outcome) => {
                let mut out = self.emit(now, Origin::Director, Payload::RequestNext {}, &[])?;
                out.extend(self.after_outcome(now, &outcome)?);
                Ok(out)
            }
            Err(e) => self.error(now, Role::Director, ErrorCode::Rules, e.to_string()),
        }
    }

    /// SCORE, learning, reactions, and the next TARGET after a scored action.
    fn after_outcome(&mut self, now: u64, outcome: &SelectionOutcome) -> Out {
        let mut out = Vec::new();
        if outcome.scored > 0 || outcome.advanced {
            out.extend(self.emit(
                now,
                Origin::Server,
                Payload::Score {
                    score: self.game.score(),
                    scored: outcome.scored,
                    correct: outcome.correct,
                    resolved: self.game.resolved_targets(),
                },
                &self.everyone(),
            )?);
        }
        if outcome.correct {
            if let Some(t) = &outcome.resolved_target {
                let learned = match &mut self.side {
                    MatcherSide::Wizard(k) => {
                        k.learn_country(self.map, t.as_str()).unwrap_or(false)
                    }
                    _ => false,
                };
                if learned {
                    out.extend(self.push_knowledge(now)?);
                }
            }
        }
        if let MatcherSide::Autonomous(agent) = &mut self.side {
            agent.on_outcome(outcome);
        }
        let agent_side = !matches!(self.side, MatcherSide::Human);
        if agent_side && self.config.auto_reactions {
            if let Some(button) = reaction_button(self.config.variant, outcome, self.reactions) {
                self.reactions += 1;
                let from = match self.side {
                    MatcherSide::Autonomous(_) => Origin::Agent,
                    _ => Origin::Server,
                };
                let u = self
                    .repertoire
                    .utter(&button, self.config.variant, None)
                    .expect("reaction buttons exist in embodied repertoires");
                out.extend(self.emit(
                    now,
                    from,
                    Payload::Utterance {
                        button: u.button,
                        text: u.text,
                        country: None,
                        rule: Some("auto_reaction".into()),
                    },
                    &self.everyone(),
                )?);
                if let Some(event) = u.expression {
                    out.extend(self.embodiment(now, event)?);
                }
            }
        }
        if outcome.advanced {
            match &outcome.next_target {
                Some(t) => out.extend(self.emit(
                    now,
                    Origin::Server,
                    Payload::Target { country: t.clone() },
                    &self.target_viewers(),
                )?),
                None => out.extend(self.finish(now)?),
            }
        }
        Ok(out)
    }

    fn wizard_utterance(&mut self, now: u64, button: &str, country: Option<CountryId>) -> Out {
        let name = country
            .as_ref()
            .and_then(|c| self.map.get(c.as_str()))
            .map(|c| c.name.clone());
        match self
            .repertoire
            .utter(button, self.config.variant, name.as_deref())
        {
            Ok(u) => {
                let mut out = self.emit(
                    now,
                    Origin::Wizard,
                    Payload::Utterance {
                        button: u.button,
                        text: u.text,
                        country,
                        rule: None,
                    },
                    &self.everyone(),
                )?;
                if let Some(event) = u.expression {
                    out.extend(self.embodiment(now, event)?);
                }
                Ok(out)
            }
            Err(e) => self.error(now, Role::Wizard, ErrorCode::Button, e.to_string()),
        }
    }

    fn wizard_anchor(&mut self, now: u64, label: &str, country: &CountryId) -> Out {
        let MatcherSide::Wizard(k) = &mut self.side else {
            return self.error(
                now,
                Role::Wizard,
                ErrorCode::Role,
                "no wizard in this session",
            );
        };
        match k.add_anchor(self.map, label, country.as_str()) {
            Ok(_) => {
                let mut out = self.emit(
                    now,
                    Origin::Wizard,
                    Payload::Anchor {
                        label: label.to_string(),
                        country: country.clone(),
                    },
                    &[],
                )?;
                out.extend(self.push_knowledge(now)?);
                Ok(out)
            }
            Err(e) => self.error(now, Role::Wizard, ErrorCode::Payload, e.to_string()),
        }
    }
}

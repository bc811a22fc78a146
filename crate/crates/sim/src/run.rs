//! Discrete-event runner: bots and a [`SessionCore`] on a virtual clock.
//!
//! Every message crosses the boundary as JSON text in both directions, the
//! same as on a socket, so a payload the server cannot parse fails here too.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::{Arc, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rdgmap::agent::Repertoire;
use rdgmap::game::Variant;
use rdgmap::world::WorldMap;
use rdgmap_server::protocol::ErrorCode;
use rdgmap_server::{
    replay, Delivery, MatcherMode, MemoryLog, Payload, ReplayError, Role, SessionConfig,
    SessionCore, SessionError, SessionId, SessionLog, WireMessage,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bots::{Bot, BotPolicy, BotRole, DirectorBot, MatcherBot, PolicyError};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("no games requested")]
    NoGames,
    #[error("{0}")]
    Policy(#[from] PolicyError),
    #[error("policy for {0:?} given in the wrong seat")]
    Seat(BotRole),
    #[error("game {game}: server rejected {role} message: {message}")]
    Protocol {
        game: usize,
        role: Role,
        message: String,
    },
    #[error("game {game}: {source}")]
    Session { game: usize, source: SessionError },
    #[error("game {game}: log does not replay: {source}")]
    Replay { game: usize, source: ReplayError },
    #[error("writing logs: {0}")]
    Io(#[from] std::io::Error),
}

/// Who plays the Matcher side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MatcherPolicy {
    /// A scripted bot in the human Matcher's seat.
    Bot(BotPolicy),
    /// The server's autonomous agent.
    Autonomous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub variant: Variant,
    pub director: BotPolicy,
    pub matcher: MatcherPolicy,
    pub seed: u64,
    pub games: usize,
    /// Keep every role's delivery stream in the report.
    pub keep_deliveries: bool,
    /// Run games on this many threads; results do not depend on it.
    pub threads: usize,
}

impl SimConfig {
    pub fn new(
        variant: Variant,
        director: BotPolicy,
        matcher: MatcherPolicy,
        seed: u64,
        games: usize,
    ) -> Self {
        Self {
            variant,
            director,
            matcher,
            seed,
            games,
            keep_deliveries: false,
            threads: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }

    fn validate(&self) -> Result<(), SimError> {
        if self.games == 0 {
            return Err(SimError::NoGames);
        }
        self.director.validate()?;
        if self.director.role != BotRole::Director {
            return Err(SimError::Seat(self.director.role));
        }
        if let MatcherPolicy::Bot(m) = self.matcher {
            m.validate()?;
            if m.role != BotRole::Matcher {
                return Err(SimError::Seat(m.role));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameReport {
    pub index: usize,
    pub session: SessionId,
    pub seed: u64,
    pub variant: Variant,
    pub score: u32,
    pub targets_served: usize,
    pub resolved: u32,
    /// Virtual time at which the game ended.
    pub ended_at_ms: u64,
    /// The session log, line-delimited.
    #[serde(skip)]
    pub log: String,
    /// Per-role delivery streams, when requested.
    #[serde(skip)]
    pub deliveries: BTreeMap<Role, Vec<WireMessage>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub games: usize,
    pub mean_score: f64,
    pub sd_score: f64,
    pub mean_targets_served: f64,
    pub mean_resolved: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub config: SimConfig,
    pub games: Vec<GameReport>,
}

impl BatchReport {
    pub fn scores(&self) -> Vec<u32> {
        self.games.iter().map(|g| g.score).collect()
    }

    pub fn summary(&self) -> BatchSummary {
        let n = self.games.len() as f64;
        let mean = |f: &dyn Fn(&GameReport) -> f64| self.games.iter().map(f).sum::<f64>() / n;
        let mean_score = mean(&|g| g.score as f64);
        let var = if self.games.len() > 1 {
            self.games
                .iter()
                .map(|g| (g.score as f64 - mean_score).powi(2))
                .sum::<f64>()
                / (n - 1.0)
        } else {
            0.0
        };
        BatchSummary {
            games: self.games.len(),
            mean_score,
            sd_score: var.sqrt(),
            mean_targets_served: mean(&|g| g.targets_served as f64),
            mean_resolved: mean(&|g| g.resolved as f64),
        }
    }

    /// Writes each game's log to `<dir>/<session>.jsonl`.
    pub fn write_logs(&self, dir: &Path) -> Result<(), SimError> {
        std::fs::create_dir_all(dir)?;
        for g in &self.games {
            std::fs::write(dir.join(format!("{}.jsonl", g.session)), &g.log)?;
        }
        Ok(())
    }
}

/// Seeds for game `index`: the game's own seed and the bots' seed.
fn game_seeds(seed: u64, index: usize) -> (u64, u64) {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(index as u64);
    (r.gen(), r.gen())
}

struct Pending {
    at: u64,
    order: u64,
    role: Role,
    epoch: u64,
    payload: Payload,
}

/// Plays one game to the end.
pub fn run_game(
    config: &SimConfig,
    index: usize,
    map: &WorldMap,
    repertoire: &Repertoire,
) -> Result<GameReport, SimError> {
    let (game_seed, bot_seed) = game_seeds(config.seed, index);
    let mode = match config.matcher {
        MatcherPolicy::Bot(_) => MatcherMode::Human,
        MatcherPolicy::Autonomous => MatcherMode::Autonomous,
    };
    let mut session_config = SessionConfig::new(config.variant, mode, game_seed);
    session_config.director = "director-bot".into();
    if mode == MatcherMode::Human {
        session_config.matcher = "matcher-bot".into();
    }
    let id = SessionId::new(format!("sim-{:016x}-{index:04}", config.seed));
    let log: Arc<Mutex<MemoryLog>> = Arc::default();
    let session_err = |source| SimError::Session {
        game: index,
        source,
    };
    let mut core = SessionCore::new(
        id.clone(),
        session_config,
        map,
        repertoire,
        Box::new(log.clone()),
        None,
    )
    .map_err(session_err)?;

    let mut rng = ChaCha8Rng::seed_from_u64(bot_seed);
    let mut director = DirectorBot::new(map, config.director, config.variant, &mut rng);
    let mut matcher = match config.matcher {
        MatcherPolicy::Bot(p) => Some(MatcherBot::new(map, p, &mut rng)),
        MatcherPolicy::Autonomous => None,
    };

    let mut pending: Vec<Pending> = Vec::new();
    let mut order = 0u64;
    let mut seqs: BTreeMap<Role, u64> = BTreeMap::new();
    let mut deliveries: BTreeMap<Role, Vec<WireMessage>> = BTreeMap::new();
    let mut now = 0u64;

    let mut dispatch = |out: Vec<Delivery>,
                        now: u64,
                        pending: &mut Vec<Pending>,
                        director: &mut DirectorBot<'_>,
                        matcher: &mut Option<MatcherBot<'_>>|
     -> Result<(), SimError> {
        for d in out {
            // Over the wire and back.
            let msg = WireMessage::from_json(&d.message.to_json()).expect("server messages parse");
            if let Payload::Error { code, message } = &msg.payload {
                if *code != ErrorCode::Finished {
                    return Err(SimError::Protocol {
                        game: index,
                        role: d.to,
                        message: message.clone(),
                    });
                }
            }
            let (plans, epoch) = match d.to {
                Role::Director => (director.on_message(&msg), director.epoch()),
                Role::Matcher => match matcher.as_mut() {
                    Some(m) => (m.on_message(&msg), m.epoch()),
                    None => (Vec::new(), 0),
                },
                _ => (Vec::new(), 0),
            };
            for p in plans {
                order += 1;
                pending.push(Pending {
                    at: now + p.delay_ms,
                    order,
                    role: d.to,
                    epoch,
                    payload: p.payload,
                });
            }
            if config.keep_deliveries {
                deliveries.entry(d.to).or_default().push(msg);
            }
        }
        Ok(())
    };

    let out = core.start(now).map_err(session_err)?;
    dispatch(out, now, &mut pending, &mut director, &mut matcher)?;

    while !core.is_finished() {
        let next = pending
            .iter()
            .enumerate()
            .min_by_key(|(_, p)| (p.at, p.order))
            .map(|(i, p)| (i, p.at));
        let deadline = core.next_deadline();
        let bot_first = match (next, deadline) {
            (Some((_, at)), Some(d)) => at < d,
            (Some(_), None) => true,
            (None, _) => false,
        };
        let out = match (next, deadline) {
            (Some((i, at)), _) if bot_first => {
                let p = pending.swap_remove(i);
                let current = match p.role {
                    Role::Director => director.epoch(),
                    _ => matcher.as_ref().map_or(0, Bot::epoch),
                };
                if p.epoch != current {
                    continue;
                }
                now = at;
                let seq = seqs.entry(p.role).or_insert(0);
                *seq += 1;
                let text = WireMessage::client(*seq, p.payload).to_json();
                let msg = WireMessage::from_json(&text).expect("bot messages parse");
                core.handle(p.role, msg, now).map_err(session_err)?
            }
            (_, Some(d)) => {
                now = now.max(d);
                core.tick(now).map_err(session_err)?
            }
            // Not running and nothing left to send.
            _ => break,
        };
        dispatch(out, now, &mut pending, &mut director, &mut matcher)?;
    }

    let game = core.game();
    let log = log.lock().expect("log lock").to_jsonl();
    Ok(GameReport {
        index,
        session: id,
        seed: game_seed,
        variant: config.variant,
        score: game.score(),
        targets_served: game.served_targets().len(),
        resolved: game.resolved_targets(),
        ended_at_ms: now,
        log,
        deliveries,
    })
}

/// Runs `config.games` games and checks that every log replays to the
/// reported score and targets.
pub fn run_sim(
    config: &SimConfig,
    map: &WorldMap,
    repertoire: &Repertoire,
) -> Result<BatchReport, SimError> {
    config.validate()?;
    let threads = config.threads.clamp(1, config.games);
    let mut slots: Vec<Option<Result<GameReport, SimError>>> =
        (0..config.games).map(|_| None).collect();
    std::thread::scope(|s| {
        for (t, chunk) in slots.chunks_mut(config.games.div_ceil(threads)).enumerate() {
            let base = t * config.games.div_ceil(threads);
            s.spawn(move || {
                for (k, slot) in chunk.iter_mut().enumerate() {
                    *slot = Some(run_game(config, base + k, map, repertoire));
                }
            });
        }
    });
    let mut games = Vec::with_capacity(config.games);
    for slot in slots {
        let g = slot.expect("every game ran")?;
        let parsed = SessionLog::parse(&g.log).expect("sim logs parse");
        let r = replay(&parsed, map).map_err(|source| SimError::Replay {
            game: g.index,
            source,
        })?;
        if r.score() != g.score || r.served_targets().len() != g.targets_served {
            return Err(SimError::Replay {
                game: g.index,
                source: ReplayError::Diverged {
                    seq: parsed.events.last().map_or(0, |e| e.seq),
                    what: "final score",
                },
            });
        }
        games.push(g);
    }
    Ok(BatchReport {
        config: config.clone(),
        games,
    })
}

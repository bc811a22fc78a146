//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Oracles here are written independently of the crates under test.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rdgmap::agent::{
    init_knowledge, seed_countries, AgentAction, AgentKnowledge, AutonomousMatcher, InMemoryStore,
    Repertoire,
};
use rdgmap::game::{GameError, GameState, ParticipantId, Phase, Variant, GAME_DURATION_MS};
use rdgmap::resolver::Derivation;
use rdgmap::world::{CountryId, Direction, WorldMap};
use rdgmap_server::{replay, Matchmaker, Payload, ReadySignal, Role, SessionLog, Slot};
use rdgmap_sim::{run_sim, BotPolicy, BotRole, MatcherPolicy, SimConfig};

type Check = Result<String, String>;

fn map() -> &'static WorldMap {
    WorldMap::bundled()
}

fn ensure(ok: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what())
    }
}

fn fresh(variant: Variant, seed: u64) -> GameState {
    let mut g = GameState::new(variant, "d".into(), "m".into(), seed, map()).unwrap();
    g.start(0).unwrap();
    g
}

fn other_than(t: &CountryId) -> CountryId {
    map().ids().find(|id| *id != t).unwrap().clone()
}

fn scoring_truth_table() -> Check {
    let m = ParticipantId::new("m");
    let d = ParticipantId::new("d");
    // Expected points for (guess 1 correct, guess 2 correct), None when guess
    // 2 is never made.
    let table = [
        ((true, None), 2u32),
        ((false, Some(true)), 1),
        ((false, Some(false)), 0),
    ];
    for seed in 0..50 {
        for ((first, second), want) in table {
            let mut g = fresh(Variant::Embodied, seed);
            let t = g.target().unwrap().clone();
            let pick = |c: bool| if c { t.clone() } else { other_than(&t) };
            g.select(&m, &pick(first)).map_err(|e| e.to_string())?;
            if let Some(c) = second {
                g.select(&m, &pick(c)).map_err(|e| e.to_string())?;
            }
            ensure(g.score() == want, || {
                format!("embodied {first}/{second:?} scored {}", g.score())
            })?;
            // Resolved either way: the old target can never take a third guess.
            ensure(g.target() != Some(&t) && g.guesses_used() == 0, || {
                format!("target {t} still open after {first}/{second:?}")
            })?;
        }
        // Same country twice still uses both guesses.
        let mut g = fresh(Variant::Embodied, seed);
        let t = g.target().unwrap().clone();
        let wrong = other_than(&t);
        g.select(&m, &wrong).unwrap();
        let o = g.select(&m, &wrong).unwrap();
        ensure(o.advanced && o.guess == 2 && o.scored == 0, || {
            format!("repeat click {o:?}")
        })?;

        for correct in [true, false] {
            let mut g = fresh(Variant::Web, seed);
            let t = g.target().unwrap().clone();
            // Changes are free; only the final selection counts.
            g.select(&m, &other_than(&t)).unwrap();
            g.select(&m, &if correct { t.clone() } else { other_than(&t) })
                .unwrap();
            ensure(g.score() == 0, || "web scored before request_next".into())?;
            let o = g.request_next(&d).map_err(|e| e.to_string())?;
            ensure(g.score() == u32::from(correct) && o.advanced, || {
                format!("web correct={correct} scored {}", g.score())
            })?;
        }
        let mut g = fresh(Variant::Web, seed);
        g.request_next(&d).unwrap();
        ensure(g.score() == 0, || "web empty selection scored".into())?;
    }
    // The guard behind the two-guess rule, reached directly.
    let mut g = fresh(Variant::Embodied, 1);
    ensure(
        g.request_next(&d) == Err(GameError::Unsupported(Variant::Embodied)),
        || "embodied request_next accepted".into(),
    )?;
    Ok("2/1/0 embodied, 1/0 web; a third guess never reaches the same target".into())
}

const SOUTH_SUDAN_DIALOGUE: &[&str] = &[
    "So, the country is South Sudan",
    "Do you know where Egypt is",
    "Look at the um Africa, the top three biggest countries uh on top of Africa",
    "The one to the furthest right of those three is Egypt",
    "Go two down from Egypt, it's in the middle of Africa, that is South Sudan",
    "It looks like a seahorse",
];

fn south_sudan_dialogue() -> Check {
    let mut agent = AutonomousMatcher::new(
        map(),
        Repertoire::bundled(),
        AgentKnowledge::seeded(Variant::Web, "d"),
    );
    let selects: Vec<_> = SOUTH_SUDAN_DIALOGUE
        .iter()
        .flat_map(|l| agent.step(l))
        .filter_map(|a| match a {
            AgentAction::Select {
                country,
                derivation,
                ..
            } => Some((country, derivation)),
            _ => None,
        })
        .collect();
    let (country, derivation) = selects.first().ok_or("no selection")?;
    ensure(country.as_str() == "SSD", || format!("selected {country}"))?;
    ensure(selects.iter().all(|(c, _)| c.as_str() == "SSD"), || {
        "later selection changed".into()
    })?;
    ensure(
        derivation.contains(&Derivation::Anchor { id: "EGY".into() }),
        || "no Egypt anchor in trace".into(),
    )?;
    let steps: Vec<_> = derivation
        .iter()
        .filter_map(|d| match d {
            Derivation::Step { direction, .. } => Some(*direction),
            _ => None,
        })
        .collect();
    ensure(steps == [Direction::South, Direction::South], || {
        format!("steps {steps:?}")
    })?;
    Ok("SSD via anchor EGY, 2 steps south".into())
}

fn knowledge_seeding() -> Check {
    // Written out independently of the agent module.
    let web: BTreeSet<CountryId> = [
        "USA", "CAN", "MEX", "BRA", "IND", "CHN", "RUS", "AUS", "ITA",
    ]
    .map(CountryId::from)
    .into();
    let mut embodied = web.clone();
    embodied.extend(["SWE", "FRA"].map(CountryId::from));
    ensure(seed_countries(Variant::Web) == web, || "web seed".into())?;
    ensure(seed_countries(Variant::Embodied) == embodied, || {
        "embodied seed".into()
    })?;
    let store = InMemoryStore::new();
    let k = init_knowledge(Variant::Embodied, "fresh", &store);
    ensure(k.known_countries.len() == 11, || "embodied start".into())?;

    let mut g = fresh(Variant::Embodied, 11);
    let mut target = g.target().unwrap().clone();
    while k.knows(target.as_str()) {
        g.next_target();
        target = g.target().unwrap().clone();
    }
    let mut agent = AutonomousMatcher::new(map(), Repertoire::bundled(), k);
    let o = g.select(&ParticipantId::new("m"), &target).unwrap();
    agent.on_outcome(&o);
    ensure(agent.knowledge().knows(target.as_str()), || {
        format!("{target} not learned")
    })?;
    ensure(agent.knowledge().known_countries.len() == 12, || {
        "panel did not grow by one".into()
    })?;
    Ok(format!(
        "9 web, 11 embodied; correct {target} joins the panel"
    ))
}

fn perfect(variant: Variant, matcher: MatcherPolicy, seed: u64, games: usize) -> SimConfig {
    SimConfig::new(
        variant,
        BotPolicy::perfect(BotRole::Director, 2_500),
        matcher,
        seed,
        games,
    )
}

fn visibility() -> Check {
    let mut web = perfect(
        Variant::Web,
        MatcherPolicy::Bot(BotPolicy::perfect(BotRole::Matcher, 400)),
        5,
        1,
    );
    web.keep_deliveries = true;
    let r = run_sim(&web, map(), Repertoire::bundled()).map_err(|e| e.to_string())?;
    let g = &r.games[0];
    let to_matcher = g
        .deliveries
        .get(&Role::Matcher)
        .ok_or("no matcher stream")?;
    let leaked = to_matcher.iter().filter(|m| m.payload.is_target()).count();
    ensure(leaked == 0, || {
        format!("{leaked} TARGET messages reached the Matcher")
    })?;
    let shown_to_matcher = to_matcher
        .iter()
        .filter(|m| matches!(m.payload, Payload::SelectionShown { .. }))
        .count();
    ensure(shown_to_matcher == 0, || "web selection shown".into())?;

    let mut emb = SimConfig::new(
        Variant::Embodied,
        BotPolicy::anchor_navigator(BotRole::Director, 1.0, 2_500),
        MatcherPolicy::Bot(BotPolicy::random_matcher(800)),
        6,
        1,
    );
    emb.keep_deliveries = true;
    let r = run_sim(&emb, map(), Repertoire::bundled()).map_err(|e| e.to_string())?;
    let g = &r.games[0];
    let log = SessionLog::parse(&g.log).map_err(|e| e.to_string())?;
    let selects: Vec<&CountryId> = log
        .events
        .iter()
        .filter_map(|m| match &m.payload {
            Payload::Select { country, .. } => Some(country),
            _ => None,
        })
        .collect();
    let shown: Vec<&CountryId> = g
        .deliveries
        .get(&Role::SharedScreen)
        .ok_or("no shared-screen stream")?
        .iter()
        .filter_map(|m| match &m.payload {
            Payload::SelectionShown { country, .. } => Some(country),
            _ => None,
        })
        .collect();
    ensure(!selects.is_empty() && selects == shown, || {
        format!("{} selects, {} shown", selects.len(), shown.len())
    })?;
    Ok(format!(
        "web matcher saw 0 TARGET in {} messages; {} embodied SELECTs all shown",
        to_matcher.len(),
        selects.len()
    ))
}

fn mixed_batch(seed: u64) -> Vec<SimConfig> {
    let nav = |k| BotPolicy::anchor_navigator(BotRole::Director, k, 2_500);
    vec![
        SimConfig::new(Variant::Web, nav(1.0), MatcherPolicy::Autonomous, seed, 10),
        SimConfig::new(
            Variant::Embodied,
            nav(0.8),
            MatcherPolicy::Bot(BotPolicy::anchor_navigator(BotRole::Matcher, 0.5, 1_000)),
            seed + 1,
            10,
        ),
        SimConfig::new(
            Variant::Web,
            nav(0.6),
            MatcherPolicy::Bot(BotPolicy::random_matcher(300)),
            seed + 2,
            10,
        ),
        SimConfig::new(
            Variant::Embodied,
            nav(1.0),
            MatcherPolicy::Autonomous,
            seed + 3,
            10,
        ),
        perfect(
            Variant::Embodied,
            MatcherPolicy::Bot(BotPolicy::perfect(BotRole::Matcher, 0)),
            seed + 4,
            10,
        ),
    ]
}

fn determinism() -> Check {
    let run = || -> Result<Vec<(String, u32, usize)>, String> {
        let mut out = Vec::new();
        for c in mixed_batch(2024) {
            let r = run_sim(&c, map(), Repertoire::bundled()).map_err(|e| e.to_string())?;
            out.extend(
                r.games
                    .into_iter()
                    .map(|g| (g.log, g.score, g.targets_served)),
            );
        }
        Ok(out)
    };
    let first = run()?;
    let second = run()?;
    ensure(first.len() == 50, || format!("{} games", first.len()))?;
    let mut variants = BTreeSet::new();
    for (i, ((a, score, served), (b, ..))) in first.iter().zip(&second).enumerate() {
        ensure(a == b, || format!("game {i} log differs on re-run"))?;
        let log = SessionLog::parse(a).map_err(|e| e.to_string())?;
        variants.insert(log.header.variant.to_string());
        let r = replay(&log, map()).map_err(|e| format!("game {i}: {e}"))?;
        let logged: Vec<&CountryId> = log
            .events
            .iter()
            .filter_map(|m| match &m.payload {
                Payload::Target { country } => Some(country),
                _ => None,
            })
            .collect();
        ensure(r.score() == *score, || format!("game {i} score"))?;
        ensure(
            r.served_targets().len() == *served && r.served_targets().iter().eq(logged),
            || format!("game {i} target sequence"),
        )?;
    }
    ensure(variants.len() == 2, || "batch was not mixed".into())?;
    Ok("50 games replay exactly; logs byte-identical on re-run".into())
}

fn timer() -> Check {
    let mut configs = mixed_batch(77);
    configs.push(perfect(
        Variant::Web,
        MatcherPolicy::Bot(BotPolicy::perfect(BotRole::Matcher, 0)),
        78,
        5,
    ));
    let mut late = 0;
    let mut games = 0;
    for c in configs {
        let r = run_sim(&c, map(), Repertoire::bundled()).map_err(|e| e.to_string())?;
        for g in &r.games {
            games += 1;
            let log = SessionLog::parse(&g.log).map_err(|e| e.to_string())?;
            let start = log
                .events
                .iter()
                .find(|m| matches!(m.payload, Payload::Start { .. }))
                .ok_or("no START")?
                .ts;
            late += log
                .events
                .iter()
                .filter(|m| {
                    matches!(m.payload, Payload::Select { .. } | Payload::RequestNext {})
                        && m.ts >= start + GAME_DURATION_MS
                })
                .count();
            let ends = log
                .events
                .iter()
                .filter(|m| matches!(m.payload, Payload::End { .. }))
                .count();
            ensure(ends == 1, || format!("{} ENDs in {}", ends, g.session))?;
        }
    }
    ensure(late == 0, || {
        format!("{late} actions accepted at or after 600 s")
    })?;

    // The rule engine on its own, ticking past the end in small steps.
    let mut g = fresh(Variant::Web, 3);
    let mut transitions = 0;
    for t in (0..=GAME_DURATION_MS + 5_000).step_by(250) {
        transitions += usize::from(g.tick(t));
    }
    ensure(transitions == 1 && g.phase() == Phase::Finished, || {
        format!("{transitions} transitions")
    })?;
    let t = g.target().cloned().unwrap_or_else(|| "USA".into());
    ensure(g.select(&ParticipantId::new("m"), &t).is_err(), || {
        "select after expiry".into()
    })?;
    Ok(format!("{games} games: none late, one END each"))
}

fn fifo() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0xF1F0);
    let variants = [Variant::Web, Variant::Embodied];
    let mut pairs = 0usize;
    for trial in 0..1000 {
        let mut m = Matchmaker::new();
        // Enqueue order per variant, as observed from outside.
        let mut order: [Vec<String>; 2] = Default::default();
        let mut next = 0usize;
        for step in 0..rng.gen_range(5..80) {
            let v = rng.gen_range(0..2);
            match rng.gen_range(0..10) {
                0..=4 => {
                    let p = format!("t{trial}-p{next}");
                    next += 1;
                    m.enqueue(&p, variants[v], step)
                        .map_err(|e| e.to_string())?;
                    order[v].push(p);
                }
                5 if !order[v].is_empty() => {
                    let i = rng.gen_range(0..order[v].len());
                    let p = order[v].remove(i);
                    m.leave(&p).map_err(|e| e.to_string())?;
                }
                _ => {
                    let slot = if rng.gen() {
                        Slot::Wizard
                    } else {
                        Slot::Autonomous
                    };
                    let got = m.pair(ReadySignal {
                        slot,
                        variant: variants[v],
                    });
                    let want = (!order[v].is_empty()).then(|| order[v].remove(0));
                    ensure(
                        got.as_ref().map(|e| &e.participant) == want.as_ref(),
                        || format!("trial {trial}: paired {got:?}, expected {want:?}"),
                    )?;
                    pairs += usize::from(want.is_some());
                }
            }
        }
    }
    Ok(format!("1000 trials, {pairs} pairings in enqueue order"))
}

fn random_matcher() -> Check {
    let n = map().len() as f64;
    let games = 1000;
    let c = SimConfig::new(
        Variant::Web,
        BotPolicy::perfect(BotRole::Director, 2_500),
        MatcherPolicy::Bot(BotPolicy::random_matcher(0)),
        99,
        games,
    );
    let r = run_sim(&c, map(), Repertoire::bundled()).map_err(|e| e.to_string())?;
    let s = r.summary();
    // Each evaluated target is a Bernoulli(1/N) trial.
    let p = 1.0 / n;
    let expected = s.mean_resolved * p;
    let sigma = (s.mean_resolved * p * (1.0 - p) / games as f64).sqrt();
    let z = (s.mean_score - expected) / sigma;
    ensure(z.abs() <= 3.0, || {
        format!("mean {:.4} vs {expected:.4} (z = {z:.2})", s.mean_score)
    })?;
    Ok(format!(
        "mean {:.4}, expected {:.4} = {:.0}/{n}, z = {z:.2}",
        s.mean_score, expected, s.mean_resolved
    ))
}

fn main() -> ExitCode {
    let checks: [(&str, fn() -> Check, Option<Duration>); 8] = [
        (
            "scoring truth table",
            scoring_truth_table,
            Some(Duration::from_secs(1)),
        ),
        (
            "south sudan dialogue end to end",
            south_sudan_dialogue,
            Some(Duration::from_secs(1)),
        ),
        ("knowledge seeding", knowledge_seeding, None),
        ("visibility", visibility, None),
        (
            "determinism and replay",
            determinism,
            Some(Duration::from_secs(30)),
        ),
        ("timer", timer, None),
        ("fifo matchmaking", fifo, None),
        ("random matcher", random_matcher, None),
    ];
    let mut failed = 0;
    for (name, check, budget) in checks {
        let t = Instant::now();
        let mut result = check();
        let took = t.elapsed();
        if let (Ok(_), Some(b)) = (&result, budget) {
            if took > b {
                result = Err(format!("took {took:.2?}, budget {b:?}"));
            }
        }
        match result {
            Ok(detail) => println!("PASS {name} ({took:.2?}): {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name} ({took:.2?}): {why}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

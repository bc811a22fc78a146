use std::io::{BufRead, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rdgmap::agent::{seed_countries, Repertoire};
use rdgmap::game::Variant;
use rdgmap::resolver::{Episode, ResolutionContext};
use rdgmap::world::{CountryId, WorldMap};
use rdgmap_server::transport::{serve, AppState, ServerConfig};
use rdgmap_server::{replay, SessionLog};
use rdgmap_sim::{corpus_stats, run_sim, BotPolicy, BotRole, MatcherPolicy, SimConfig, Strategy};
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "rdgmap",
    version,
    about = "RDG-Map game server, simulator and log tools"
)]
struct Cli {
    /// Interchange map file; the bundled map when omitted.
    #[arg(long, global = true)]
    map: Option<PathBuf>,
    /// Write the report here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the game server.
    Serve {
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Variant a wizard console serves by default.
        #[arg(long, default_value = "WEB")]
        variant: Variant,
        #[arg(long, default_value_t = 1)]
        autonomous_pool: usize,
        /// Do not pair Directors with a wizard console.
        #[arg(long)]
        no_wizard: bool,
        #[arg(long, default_value = "logs")]
        log_dir: PathBuf,
        /// Built browser client to serve at `/`.
        #[arg(long)]
        static_dir: Option<PathBuf>,
        /// Agent memory file shared across sessions.
        #[arg(long)]
        memory: Option<PathBuf>,
        /// Send TARGET to the wizard console too.
        #[arg(long)]
        wizard_sees_target: bool,
    },
    /// Play simulated games with scripted bots.
    Sim {
        #[arg(long, default_value = "WEB")]
        variant: Variant,
        /// perfect or anchor-navigator.
        #[arg(long, default_value = "perfect")]
        director: Strategy,
        #[arg(long, default_value_t = 1.0)]
        director_knowledge: f64,
        /// Seconds per Director turn.
        #[arg(long, default_value_t = 2.5)]
        director_latency: f64,
        /// perfect, anchor-navigator, random, or autonomous (the server agent).
        #[arg(long, default_value = "perfect")]
        matcher: String,
        #[arg(long, default_value_t = 1.0)]
        matcher_knowledge: f64,
        #[arg(long, default_value_t = 0.0)]
        matcher_latency: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        games: usize,
        /// Also write every session log into this directory.
        #[arg(long)]
        log_dir: Option<PathBuf>,
    },
    /// Replay session logs and print their final state.
    Replay { logs: Vec<PathBuf> },
    /// Aggregate a directory of session logs.
    Stats { dir: PathBuf },
    /// Resolve Director utterances, one per line; a blank line starts a new
    /// target episode.
    Resolve {
        /// Input file; stdin when omitted.
        input: Option<PathBuf>,
        /// Countries the listener already knows, comma separated ids.
        #[arg(long, value_delimiter = ',')]
        known: Vec<String>,
        /// Start from an agent's seed knowledge for this variant.
        #[arg(long)]
        seeded: Option<Variant>,
    },
}

fn load_map(path: Option<&Path>) -> Result<(&'static WorldMap, Vec<u8>), String> {
    match path {
        None => Ok((WorldMap::bundled(), WorldMap::bundled_bytes().to_vec())),
        Some(p) => {
            let bytes = std::fs::read(p).map_err(|e| format!("{}: {e}", p.display()))?;
            let map = WorldMap::from_bytes(&bytes).map_err(|e| format!("{}: {e}", p.display()))?;
            Ok((Box::leak(Box::new(map)), bytes))
        }
    }
}

fn emit(output: Option<&Path>, value: &impl Serialize) -> Result<(), String> {
    let text = serde_json::to_string_pretty(value).expect("reports serialize");
    match output {
        Some(p) => std::fs::write(p, text + "\n").map_err(|e| format!("{}: {e}", p.display())),
        None => quiet_pipe(writeln!(std::io::stdout().lock(), "{text}")),
    }
}

/// A reader that went away (`| head`) is not an error.
fn quiet_pipe(r: std::io::Result<()>) -> Result<(), String> {
    match r {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.to_string()),
        _ => Ok(()),
    }
}

fn secs(s: f64) -> Result<u64, String> {
    if s.is_finite() && s >= 0.0 {
        Ok((s * 1000.0).round() as u64)
    } else {
        Err(format!("bad latency {s}"))
    }
}

fn run(cli: Cli) -> Result<(), String> {
    let (map, map_bytes) = load_map(cli.map.as_deref())?;
    let output = cli.output.as_deref();
    match cli.command {
        Command::Serve {
            host,
            port,
            variant,
            autonomous_pool,
            no_wizard,
            log_dir,
            static_dir,
            memory,
            wizard_sees_target,
        } => {
            let mut config = ServerConfig::new(SocketAddr::new(host, port), log_dir);
            config.default_variant = variant;
            config.autonomous_pool = autonomous_pool;
            config.wizard = !no_wizard;
            config.static_dir = static_dir;
            config.memory_path = memory;
            config.wizard_sees_target = wizard_sees_target;
            let state = AppState::new(map, map_bytes, Repertoire::bundled(), config);
            let rt = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
            rt.block_on(serve(state)).map_err(|e| e.to_string())
        }
        Command::Sim {
            variant,
            director,
            director_knowledge,
            director_latency,
            matcher,
            matcher_knowledge,
            matcher_latency,
            seed,
            games,
            log_dir,
        } => {
            let director = BotPolicy::new(
                BotRole::Director,
                director,
                director_knowledge,
                secs(director_latency)?,
            )
            .map_err(|e| e.to_string())?;
            let matcher = match matcher.as_str() {
                "autonomous" => MatcherPolicy::Autonomous,
                s => {
                    let strategy: Strategy = s.parse()?;
                    MatcherPolicy::Bot(
                        BotPolicy::new(
                            BotRole::Matcher,
                            strategy,
                            matcher_knowledge,
                            secs(matcher_latency)?,
                        )
                        .map_err(|e| e.to_string())?,
                    )
                }
            };
            let config = SimConfig::new(variant, director, matcher, seed, games);
            let report = run_sim(&config, map, Repertoire::bundled()).map_err(|e| e.to_string())?;
            if let Some(dir) = log_dir {
                report.write_logs(&dir).map_err(|e| e.to_string())?;
            }
            #[derive(Serialize)]
            struct Out<'a> {
                summary: rdgmap_sim::BatchSummary,
                games: &'a [rdgmap_sim::GameReport],
            }
            emit(
                output,
                &Out {
                    summary: report.summary(),
                    games: &report.games,
                },
            )
        }
        Command::Replay { logs } => {
            #[derive(Serialize)]
            struct Row {
                file: String,
                session: String,
                variant: Variant,
                score: u32,
                resolved: u32,
                served_targets: Vec<CountryId>,
            }
            let mut rows = Vec::new();
            for path in logs {
                let log =
                    SessionLog::read(&path).map_err(|e| format!("{}: {e}", path.display()))?;
                let r = replay(&log, map).map_err(|e| format!("{}: {e}", path.display()))?;
                rows.push(Row {
                    file: path.display().to_string(),
                    session: log.header.session.to_string(),
                    variant: log.header.variant,
                    score: r.score(),
                    resolved: r.state.resolved_targets(),
                    served_targets: r.served_targets().to_vec(),
                });
            }
            emit(output, &rows)
        }
        Command::Stats { dir } => {
            let report = corpus_stats(&dir, map).map_err(|e| format!("{}: {e}", dir.display()))?;
            emit(output, &report)
        }
        Command::Resolve {
            input,
            known,
            seeded,
        } => {
            let mut ids: Vec<CountryId> = seeded
                .map(|v| seed_countries(v).into_iter().collect())
                .unwrap_or_default();
            for k in known {
                let id = map
                    .id(k.trim())
                    .cloned()
                    .ok_or_else(|| format!("unknown country id {k}"))?;
                ids.push(id);
            }
            let fresh =
                || Episode::new(ResolutionContext::new(map).with_known(ids.iter().cloned()));
            let reader: Box<dyn BufRead> = match &input {
                Some(p) => Box::new(std::io::BufReader::new(
                    std::fs::File::open(p).map_err(|e| format!("{}: {e}", p.display()))?,
                )),
                None => Box::new(std::io::stdin().lock()),
            };
            let mut out: Box<dyn Write> = match output {
                Some(p) => {
                    Box::new(std::fs::File::create(p).map_err(|e| format!("{}: {e}", p.display()))?)
                }
                None => Box::new(std::io::stdout().lock()),
            };
            let mut episode = fresh();
            let mut n = 0usize;
            for line in reader.lines() {
                let line = line.map_err(|e| e.to_string())?;
                if line.trim().is_empty() {
                    episode = fresh();
                    n += 1;
                    continue;
                }
                let mut r = episode.observe(&line);
                r.candidates.truncate(5);
                let row = serde_json::json!({ "episode": n, "resolution": r });
                if let Err(e) = writeln!(out, "{row}") {
                    return quiet_pipe(Err(e));
                }
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

//! Bots, a virtual-clock game runner, and corpus statistics for the
//! RDG-Map game.
//!
//! ```
//! use rdgmap::agent::Repertoire;
//! use rdgmap::game::Variant;
//! use rdgmap::world::WorldMap;
//! use rdgmap_sim::{run_sim, BotPolicy, BotRole, MatcherPolicy, SimConfig};
//!
//! let config = SimConfig::new(
//!     Variant::Embodied,
//!     BotPolicy::perfect(BotRole::Director, 2_500),
//!     MatcherPolicy::Bot(BotPolicy::perfect(BotRole::Matcher, 0)),
//!     7,
//!     2,
//! );
//! let report = run_sim(&config, WorldMap::bundled(), Repertoire::bundled()).unwrap();
//! for g in &report.games {
//!     assert_eq!(g.score as usize, 2 * g.targets_served);
//! }
//! ```

pub mod bots;
pub mod run;
pub mod stats;

pub use bots::{
    plan_route, rank_lines, region_phrase, route_lines, BotPolicy, BotRole, PolicyError, Route,
    Strategy,
};
pub use run::{
    run_game, run_sim, BatchReport, BatchSummary, GameReport, MatcherPolicy, SimConfig, SimError,
};
pub use stats::{corpus_stats, CorpusReport, CorpusRow};

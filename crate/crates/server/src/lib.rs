//! Session server for the RDG-Map game.
//!
//! The pieces, from the wire inwards:
//!
//! * [`transport`]: axum routes for the `/queue`, `/wizard` and `/play`
//!   sockets plus a small REST surface and static assets.
//! * [`lobby`]: per-variant FIFO matchmaking.
//! * [`session`]: [`SessionCore`], the synchronous per-session state
//!   machine that validates, logs and fans out messages.
//! * [`log`]: the line-delimited session log and [`replay`].
//! * [`questionnaire`]: write-once post-game answers.

pub mod lobby;
pub mod log;
pub mod protocol;
pub mod questionnaire;
pub mod session;
pub mod transport;

pub use crate::log::{replay, LogHeader, LogSink, MemoryLog, ReplayError, Replayed, SessionLog};
pub use lobby::{Matchmaker, QueueEntry, ReadySignal, Slot};
pub use protocol::{MatcherMode, Origin, Payload, Role, SessionId, WireMessage};
pub use session::{Delivery, SessionConfig, SessionCore, SessionError};

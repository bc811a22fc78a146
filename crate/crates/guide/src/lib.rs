//! The book under `book/`, compiled so its samples run as doctests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/world.md")]
pub mod world {}

#[doc = include_str!("../../../book/src/game.md")]
pub mod game {}

#[doc = include_str!("../../../book/src/resolver.md")]
pub mod resolver {}

#[doc = include_str!("../../../book/src/agent.md")]
pub mod agent {}

#[doc = include_str!("../../../book/src/sessions.md")]
pub mod sessions {}

#[doc = include_str!("../../../book/src/simulation.md")]
pub mod simulation {}

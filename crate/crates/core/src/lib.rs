pub mod agent;
pub mod game;
pub mod resolver;
pub mod world;

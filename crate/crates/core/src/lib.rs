//! Multi-stride GUI trajectory synthesis over a deterministic simulated GUI
//! world: random walks, goal-guided completion with recovery, cross-app
//! stride chaining and retrospective annotation.

pub mod action;
pub mod cli;
pub mod dataset;
pub mod env;
pub mod fixtures;
pub mod guided;
pub mod orchestrator;
pub mod reasoner;
pub mod walk;

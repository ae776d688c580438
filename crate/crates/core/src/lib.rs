//! Persona-guided GUI testing: declarative app simulator, perception
//! pipeline, persona-conditioned decision agents, execution validation,
//! trace metrics and a campaign harness.

pub mod agent;
pub mod app;
pub mod campaign;
pub mod exec;
pub mod hashing;
pub mod metrics;
pub mod perception;
pub mod persona;
pub mod trace;

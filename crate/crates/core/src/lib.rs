//! Belief-space decision support for suspected stroke: a small POMDP over
//! three hidden conditions, exact and particle belief filters, expert and
//! random baselines, an online tree-search planner, a benchmark harness and
//! an HTTP session service.

pub mod belief;
pub mod config;
pub mod despot;
pub mod error;
pub mod harness;
pub mod model;
pub mod policy;
pub mod seed;
pub mod service;

pub use config::ConfigFile;

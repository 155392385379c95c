//! Soak testing for chat models: dialogs between a prompt generator and the
//! model under test, with Q-A test payloads injected at random, followed by
//! offline analysis of the recorded transcripts and per-model reports.

pub mod analyzers;
pub mod bundled;
pub mod campaign;
pub mod config;
pub mod error;
pub mod exec;
pub mod gateway;
pub mod injection;
pub mod model;
pub mod registry;
pub mod report;
pub mod seed;
pub mod text;

pub use error::{Error, Result};

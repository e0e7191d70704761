//! Command-line laboratory for the simple harmonic urn.

pub mod commands;
pub mod config;
pub mod output;
pub mod verify;

//! Config-driven front end for the `mlcons` analysis and simulation library.

pub mod commands;
pub mod config;
pub mod output;

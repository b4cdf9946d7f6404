//! Command-line driver and HTTP service for the triage pipeline.

pub mod cli;
pub mod server;

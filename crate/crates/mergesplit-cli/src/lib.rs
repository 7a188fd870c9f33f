//! Plumbing for the batch driver: config parsing, deterministic artifact
//! writers, and the acceptance battery. The binary in `main.rs` is a thin
//! dispatcher over these.

#![forbid(unsafe_code)]

pub mod config;
pub mod output;
pub mod suite;

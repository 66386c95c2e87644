//! Experiment driver library behind the `pva` binary.
//!
//! Kept as a library so integration tests can run sweeps in-process; the
//! binary in `main.rs` only parses arguments and maps errors to exit codes.

pub mod config;
pub mod error;
pub mod report;
pub mod runner;
pub mod selftest;

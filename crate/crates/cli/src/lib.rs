//! Library side of the `vrpsim` binary, kept separate so the integration
//! tests can drive scenarios without spawning processes.

pub mod config;
pub mod run;

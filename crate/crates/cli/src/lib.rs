//! Experiment runner for `pathlab`: TOML configs in, CSV/JSON tables and a
//! digest manifest out.

pub mod config;
pub mod error;
pub mod run;
pub mod selftest;

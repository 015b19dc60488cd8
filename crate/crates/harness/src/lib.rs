//! Experiment harness for `protoselect`: TOML-configured seeded grids,
//! CSV/JSON-lines records, per-cell summaries and the acceptance checks.

pub mod config;
pub mod grid;
pub mod output;
pub mod summary;
pub mod validation;

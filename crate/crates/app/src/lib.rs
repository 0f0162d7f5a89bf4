//! CLI layer over `branchsolve-core`: flat-file configuration, analytic
//! example generators, and the `branchsolve` command driver.

pub mod config;
pub mod generators;
pub mod run;

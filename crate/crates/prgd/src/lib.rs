//! Command-line front end for `prgd-core`: privacy accounting queries, δ
//! curves, PrGD experiment runs and the oracle validation suites, plus the
//! file formats and parallel Monte Carlo they need.

pub mod commands;
pub mod config;
pub mod curve;
pub mod parallel;
pub mod report;
pub mod suites;
pub mod trace;

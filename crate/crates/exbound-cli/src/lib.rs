//! Scenario ingestion, batch execution and report emission around the
//! `exbound` boundary library.

pub mod report;
pub mod runner;
pub mod scenario;

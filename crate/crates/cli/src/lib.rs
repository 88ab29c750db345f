//! Scenario ingestion, run dispatch, and file emission for the subprime
//! credit market simulator. The numeric core lives in `subprime-core`; this
//! crate owns the JSON scenario format, CSV/JSON outputs, the run manifest,
//! and replication parallelism.

pub mod commands;
pub mod output;
pub mod run;
pub mod scenario;

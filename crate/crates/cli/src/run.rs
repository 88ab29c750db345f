//! Replication parallelism. Each replication runs on its own stream
//! `(base_seed, r)` and summaries are collected in stream order, so the
//! aggregate is bit-identical to a serial run whatever the worker count.

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use subprime_core::engine::{run_replication, ReplicationSummary, ScenarioConfig};

pub const THREADS_ENV: &str = "SUBPRIME_SIM_THREADS";

/// Worker cap from the environment; `None` means the hardware default.
pub fn thread_limit() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(raw) => {
            let n: usize = raw
                .trim()
                .parse()
                .with_context(|| format!("{THREADS_ENV} must be a positive integer, got `{raw}`"))?;
            if n == 0 {
                bail!("{THREADS_ENV} must be a positive integer, got 0");
            }
            Ok(Some(n))
        }
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(e).context(format!("cannot read {THREADS_ENV}")),
    }
}

fn map_replications(config: &ScenarioConfig) -> Result<Vec<ReplicationSummary>> {
    (0..config.replications)
        .into_par_iter()
        .map(|r| {
            let trajectory = run_replication(config, r)
                .map_err(|e| anyhow::anyhow!("replication {r}: {e}"))?;
            Ok(ReplicationSummary::from_trajectory(r, &trajectory))
        })
        .collect()
}

/// All replication summaries, in stream order, honoring the thread cap.
pub fn replication_summaries(config: &ScenarioConfig) -> Result<Vec<ReplicationSummary>> {
    match thread_limit()? {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .context("cannot build worker pool")?;
            pool.install(|| map_replications(config))
        }
        None => map_replications(config),
    }
}

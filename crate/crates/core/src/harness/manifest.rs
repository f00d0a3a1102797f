//! Run manifests: enough to reproduce a run and to diff two of them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::config::RunConfig;
use crate::integrate::{Outcome, Trajectory};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeSummary {
    pub outcome: Outcome,
    pub samples: usize,
    pub t_final: f64,
    pub linf_final: f64,
    pub energy_final: f64,
    pub initial_tail: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub experiment_id: String,
    pub code_version: String,
    /// Wall-clock seconds at creation; excluded from determinism
    /// comparisons.
    pub created_unix: Option<u64>,
    pub config: RunConfig,
    pub outcome: OutcomeSummary,
}

impl RunManifest {
    pub fn new(config: &RunConfig, traj: &Trajectory) -> RunManifest {
        let last = traj.last();
        RunManifest {
            schema_version: SCHEMA_VERSION,
            experiment_id: config.id.clone(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            created_unix: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .ok()
                .map(|d| d.as_secs()),
            config: config.clone(),
            outcome: OutcomeSummary {
                outcome: traj.outcome,
                samples: traj.samples.len(),
                t_final: last.t,
                linf_final: last.linf,
                energy_final: last.energy.total,
                initial_tail: traj.initial_tail,
            },
        }
    }

    pub fn emit(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serialises")
    }

    pub fn parse(text: &str) -> Result<RunManifest> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Copy with the timestamp removed (for byte-determinism comparisons).
    pub fn without_timestamp(&self) -> RunManifest {
        let mut m = self.clone();
        m.created_unix = None;
        m
    }
}

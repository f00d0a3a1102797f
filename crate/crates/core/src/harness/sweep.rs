//! Parameter sweeps: run the base config over a value grid in a local
//! thread pool, one row per run, deterministic row order.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::harness::config::{InitialData, NonlinearityConfig, RunConfig};
use crate::harness::runner::run_config;
use crate::integrate::Outcome;

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub index: usize,
    pub parameter: String,
    pub value: f64,
    pub outcome: String,
    pub t_est: Option<f64>,
    pub final_energy: Option<f64>,
    pub final_linf: Option<f64>,
    pub error: Option<String>,
}

fn apply_parameter(base: &RunConfig, parameter: &str, value: f64) -> Result<RunConfig> {
    let mut cfg = base.clone();
    match parameter {
        "amplitude" => match &mut cfg.initial_data {
            InitialData::Sine { amplitude, .. } => *amplitude = value,
            InitialData::Gaussian { amplitude, .. } => *amplitude = value,
            InitialData::SteadyScaled { lambda } => *lambda = value,
            InitialData::OddPeriodic { lambda } => *lambda = value,
            other => {
                return Err(Error::Config(format!(
                    "amplitude sweep does not apply to initial data {other:?}"
                )))
            }
        },
        "lambda" => match &mut cfg.initial_data {
            InitialData::SteadyScaled { lambda } | InitialData::OddPeriodic { lambda } => *lambda = value,
            _ => match &mut cfg.problem.nonlinearity {
                NonlinearityConfig::Sps { lambda, .. } => *lambda = value,
                other => {
                    return Err(Error::Config(format!(
                        "lambda sweep does not apply to nonlinearity {other:?}"
                    )))
                }
            },
        },
        "q" => match &mut cfg.problem.nonlinearity {
            NonlinearityConfig::Sps { q, .. } => *q = value,
            NonlinearityConfig::Power { p } => *p = value,
            other => {
                return Err(Error::Config(format!("q sweep does not apply to nonlinearity {other:?}")))
            }
        },
        "dt0" => cfg.stepper.dt0 = value,
        other => return Err(Error::Config(format!("unknown sweep parameter {other:?}"))),
    }
    Ok(cfg)
}

/// Thread count: `NPL_THREADS` when set, else the logical core count.
pub fn sweep_threads() -> usize {
    std::env::var("NPL_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

pub fn run_sweep(base: &RunConfig) -> Result<Vec<SweepRow>> {
    let spec = base
        .sweep
        .clone()
        .ok_or_else(|| Error::Config("config has no [sweep] section".into()))?;
    if spec.values.len() > 10_000 {
        return Err(Error::Config("sweep grids are capped at 10^4 points".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(sweep_threads())
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let mut rows: Vec<SweepRow> = pool.install(|| {
        use rayon::prelude::*;
        spec.values
            .par_iter()
            .enumerate()
            .map(|(index, &value)| {
                let row = |outcome: String, t_est, final_energy, final_linf, error| SweepRow {
                    index,
                    parameter: spec.parameter.clone(),
                    value,
                    outcome,
                    t_est,
                    final_energy,
                    final_linf,
                    error,
                };
                match apply_parameter(base, &spec.parameter, value).and_then(|cfg| run_config(&cfg)) {
                    Ok(artifacts) => {
                        let last = artifacts.trajectory.last();
                        let tag = outcome_tag(&artifacts.report.outcome);
                        let t_est = artifacts.report.blowup.as_ref().map(|b| b.t_est);
                        row(tag, t_est, Some(last.energy.total), Some(last.linf), None)
                    }
                    Err(e) => row("error".into(), None, None, None, Some(e.to_string())),
                }
            })
            .collect()
    });
    rows.sort_by_key(|r| r.index);
    Ok(rows)
}

pub fn outcome_tag(outcome: &Outcome) -> String {
    match outcome {
        Outcome::GlobalToTend => "GlobalToTend".into(),
        Outcome::BlowupSuspected { .. } => "BlowupSuspected".into(),
        Outcome::DecayedToZero { .. } => "DecayedToZero".into(),
    }
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("index,parameter,value,outcome,t_est,final_E,final_Linf,error\n");
    for r in rows {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.index,
            r.parameter,
            r.value,
            r.outcome,
            opt(r.t_est),
            opt(r.final_energy),
            opt(r.final_linf),
            r.error.clone().unwrap_or_default()
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn amplitude_sweep_produces_a_dichotomy() {
        let cfg = RunConfig::parse(
            r#"
[problem]
modes = 24
[problem.grid]
kind = "interval"
length = 1.0
nodes = 96
[problem.operator]
[problem.nonlinearity]
kind = "power"
p = 3.0
[stepper]
dt0 = 0.004
t_end = 4.0
record_every = 20
[initial_data]
kind = "sine"
amplitude = 1.0
[sweep]
parameter = "amplitude"
values = [0.5, 1.0, 2.0, 4.0, 8.0, 16.0]
"#,
        )
        .unwrap();
        let rows = run_sweep(&cfg).unwrap();
        assert_eq!(rows.len(), 6);
        assert!(rows.windows(2).all(|w| w[0].index < w[1].index));
        let first = &rows[0];
        let last = &rows[rows.len() - 1];
        assert_eq!(first.outcome, "DecayedToZero");
        assert_eq!(last.outcome, "BlowupSuspected");
        // a threshold amplitude separates the two phases
        let first_blow = rows.iter().position(|r| r.outcome == "BlowupSuspected").unwrap();
        assert!(rows[..first_blow].iter().all(|r| r.outcome == "DecayedToZero"));
        assert!(rows[first_blow..].iter().all(|r| r.outcome == "BlowupSuspected"));
    }

    #[test]
    fn empty_grid_gives_header_only() {
        let rows: Vec<SweepRow> = Vec::new();
        let csv = sweep_csv(&rows);
        assert_eq!(csv, "index,parameter,value,outcome,t_est,final_E,final_Linf,error\n");
    }
}

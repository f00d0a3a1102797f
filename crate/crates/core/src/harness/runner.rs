//! Execute one configured run and lay out its artifact directory:
//! `manifest.json`, `trajectory.csv`, `report.json`, `plotdata/*.csv`.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::blowup::{decay_fit, energy_blowup_monitor, estimate_blowup, BlowupReport, DecayFit, MonitorReport};
use crate::energy::dissipation_residual;
use crate::error::{Error, Result};
use crate::harness::config::RunConfig;
use crate::harness::manifest::RunManifest;
use crate::integrate::{evolve, Outcome, Trajectory};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub outcome: Outcome,
    pub monitor: MonitorReport,
    pub blowup: Option<BlowupReport>,
    pub decay: Option<DecayFit>,
    pub growth_degree: f64,
}

pub struct RunArtifacts {
    pub config: RunConfig,
    pub trajectory: Trajectory,
    pub report: RunReport,
    pub manifest: RunManifest,
}

pub fn run_config(config: &RunConfig) -> Result<RunArtifacts> {
    let problem = config.problem.build()?;
    let stepper = config.stepper.build()?;
    let u0 = config.initial_data.build(&problem)?;
    let traj = evolve(&problem, &stepper, &u0)?;
    let degree = problem.nonlinearity.growth_degree();
    let monitor = energy_blowup_monitor(&traj);
    let blowup = if traj.outcome.is_blowup() { estimate_blowup(&traj, degree).ok() } else { None };
    let decay = match traj.outcome {
        Outcome::DecayedToZero { .. } | Outcome::GlobalToTend => {
            decay_fit(&traj, degree, Some(stepper.t_end / 10.0)).ok()
        }
        _ => None,
    };
    let report = RunReport { outcome: traj.outcome, monitor, blowup, decay, growth_degree: degree };
    let manifest = RunManifest::new(config, &traj);
    Ok(RunArtifacts { config: config.clone(), trajectory: traj, report, manifest })
}

/// Fixed trajectory CSV column set (schema version 1).
pub const TRAJECTORY_COLUMNS: [&str; 9] = ["t", "L2", "Lq1", "Linf", "H1", "E", "Phi", "I", "diss_residual"];

pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::new();
    out.push_str(&TRAJECTORY_COLUMNS.join(","));
    out.push('\n');
    for (i, s) in traj.samples.iter().enumerate() {
        let resid = if i == 0 { 0.0 } else { dissipation_residual(traj, i - 1) };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            s.t,
            s.l2,
            s.lq,
            s.linf,
            s.sobolev,
            s.energy.total,
            s.phi,
            s.interaction.unwrap_or(0.0),
            resid
        ));
    }
    out
}

/// Read back the `t` and `Linf` columns of a trajectory CSV (for re-fitting).
pub fn trajectory_from_csv(text: &str, outcome: Outcome) -> Result<Trajectory> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| Error::Config(e.to_string()))?.clone();
    let t_idx = headers.iter().position(|h| h == "t").ok_or_else(|| Error::Config("missing column t".into()))?;
    let linf_idx = headers
        .iter()
        .position(|h| h == "Linf")
        .ok_or_else(|| Error::Config("missing column Linf".into()))?;
    let mut times = Vec::new();
    let mut linf = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Config(e.to_string()))?;
        let parse = |i: usize| -> Result<f64> {
            record
                .get(i)
                .ok_or_else(|| Error::Config("short row".into()))?
                .parse()
                .map_err(|_| Error::Config("non-numeric entry".into()))
        };
        times.push(parse(t_idx)?);
        linf.push(parse(linf_idx)?);
    }
    Ok(Trajectory::from_series(times, linf, outcome))
}

/// Blow-up runs get the linearised rate-fit data; decaying runs the log-log
/// pairs.
fn rate_fit_csv(traj: &Trajectory, report: &RunReport) -> Option<(String, String)> {
    if let Some(b) = &report.blowup {
        let p = report.growth_degree;
        let mut out = String::from("t,Linf,linearized,log_gap,log_linf\n");
        for s in &traj.samples {
            if s.linf <= 0.0 {
                continue;
            }
            let lin = s.linf.powf(-(p - 1.0));
            let (lg, ll) = if s.t < b.t_est {
                ((b.t_est - s.t).ln(), s.linf.ln())
            } else {
                (f64::NAN, f64::NAN)
            };
            out.push_str(&format!("{},{},{},{},{}\n", s.t, s.linf, lin, lg, ll));
        }
        return Some(("rate_fit.csv".into(), out));
    }
    if report.decay.is_some() {
        let mut out = String::from("t,Linf,log_t,log_linf\n");
        for s in &traj.samples {
            if s.t > 0.0 && s.linf > 0.0 {
                out.push_str(&format!("{},{},{},{}\n", s.t, s.linf, s.t.ln(), s.linf.ln()));
            }
        }
        return Some(("decay_fit.csv".into(), out));
    }
    None
}

pub fn write_run_dir(artifacts: &RunArtifacts, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_atomic(&dir.join("manifest.json"), artifacts.manifest.emit().as_bytes())?;
    write_atomic(&dir.join("trajectory.csv"), trajectory_csv(&artifacts.trajectory).as_bytes())?;
    let report = serde_json::to_string_pretty(&artifacts.report).expect("report serialises");
    write_atomic(&dir.join("report.json"), report.as_bytes())?;
    let plot = dir.join("plotdata");
    std::fs::create_dir_all(&plot)?;
    if let Some((name, text)) = rate_fit_csv(&artifacts.trajectory, &artifacts.report) {
        write_atomic(&plot.join(name), text.as_bytes())?;
    }
    Ok(())
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(bytes)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const CFG: &str = r#"
id = "decay-bench"
[problem]
modes = 32
[problem.grid]
kind = "interval"
length = 1.0
nodes = 128
[problem.operator]
[problem.nonlinearity]
kind = "power"
p = 3.0
[stepper]
dt0 = 0.005
t_end = 3.0
record_every = 5
[initial_data]
kind = "sine"
amplitude = 0.1
"#;

    #[test]
    fn run_and_write_artifacts() {
        let cfg = RunConfig::parse(CFG).unwrap();
        let artifacts = run_config(&cfg).unwrap();
        assert!(matches!(artifacts.report.outcome, Outcome::DecayedToZero { .. }));
        let dir = tempfile::tempdir().unwrap();
        write_run_dir(&artifacts, dir.path()).unwrap();
        assert!(dir.path().join("manifest.json").exists());
        assert!(dir.path().join("trajectory.csv").exists());
        assert!(dir.path().join("report.json").exists());
        let csv = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
        assert!(csv.starts_with("t,L2,Lq1,Linf,H1,E,Phi,I,diss_residual\n"));
        // the CSV reads back into a fit-ready trajectory
        let traj = trajectory_from_csv(&csv, artifacts.report.outcome).unwrap();
        assert_eq!(traj.samples.len(), artifacts.trajectory.samples.len());
    }

    #[test]
    fn reruns_are_byte_identical() {
        let cfg = RunConfig::parse(CFG).unwrap();
        let a = run_config(&cfg).unwrap();
        let b = run_config(&cfg).unwrap();
        assert_eq!(trajectory_csv(&a.trajectory), trajectory_csv(&b.trajectory));
        let ra = serde_json::to_string(&a.report).unwrap();
        let rb = serde_json::to_string(&b.report).unwrap();
        assert_eq!(ra, rb);
        assert_eq!(a.manifest.without_timestamp(), b.manifest.without_timestamp());
    }
}

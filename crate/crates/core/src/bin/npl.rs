//! Command-line front end: exponent tables, configured evolution runs,
//! parameter sweeps, witness constructions, trajectory fits, and the check
//! suites. Exit codes: 0 ok, 1 check failure or runtime error, 2 usage or
//! config error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use npl_core::blowup::{decay_fit, estimate_blowup};
use npl_core::constructions::{
    bump_family, negative_energy_witness, steady_state_1d, SteadyState1d,
};
use npl_core::error::Error;
use npl_core::exponents::{bootstrap_ledger, exponent_table};
use npl_core::grid::Grid;
use npl_core::harness::runner::{run_config, trajectory_from_csv, write_run_dir};
use npl_core::harness::sweep::{run_sweep, sweep_csv};
use npl_core::harness::{run_suite, suite_names, RunConfig};
use npl_core::integrate::Outcome;

#[derive(Parser)]
#[command(name = "npl", version, about = "Numerical laboratory for superlinear parabolic problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the critical-exponent table for a dimension.
    Exponents(ExponentsArgs),
    /// Evolve a configured problem and write a run directory.
    Evolve(EvolveArgs),
    /// Run the parameter sweep described by the config's [sweep] section.
    Sweep(EvolveArgs),
    /// Build witness objects (steady profiles, bump families, witnesses).
    Construct(ConstructArgs),
    /// Fit blow-up or decay rates to an existing trajectory CSV.
    Fit(FitArgs),
    /// Run a named invariant suite.
    Check(CheckArgs),
}

#[derive(Args)]
struct ExponentsArgs {
    #[arg(long)]
    n: u32,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Also write the table (plus the bootstrap ledger when p is given) as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct EvolveArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ConstructArgs {
    #[command(subcommand)]
    what: ConstructCommand,
}

#[derive(Subcommand)]
enum ConstructCommand {
    /// Positive steady profile of v'' + v^p = 0 on (0,1).
    Steady {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Concentrating bump family with measured scaling ratios.
    Bumps {
        #[arg(long)]
        q: f64,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long)]
        m: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 4096)]
        nodes: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Doubling search for a negative-energy bump combination.
    Witness {
        #[arg(long)]
        q: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 4096)]
        nodes: usize,
        #[arg(long, default_value_t = 2.0)]
        m_start: f64,
        #[arg(long, default_value_t = 256.0)]
        m_max: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    trajectory: PathBuf,
    /// Effective superlinear degree used by the fit.
    #[arg(long)]
    p: f64,
    /// "rate" (blow-up) or "decay".
    #[arg(long, default_value = "rate")]
    kind: String,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    suite: String,
    #[arg(long)]
    json: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::InvalidParameter(_) | Error::UnknownSuite(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Exponents(args) => {
            let table = exponent_table(args.n, args.p, args.q, args.alpha)?;
            println!("n = {}", table.n);
            println!("  p_S        = {}", table.p_s);
            println!("  p*         = {}", table.p_star);
            println!("  p_CL       = {}", table.p_cl);
            println!("  p_F        = {:.6}", table.p_f);
            println!("  p_S(alpha) = {}  (alpha = {})", table.p_s_alpha, table.alpha);
            if let Some(qs) = table.q_star {
                println!("  q*         = {qs:.6}  (p = {})", args.p.unwrap());
            }
            if let Some(rs) = table.r_star {
                println!("  R*         = {rs:.6}  (q = {})", args.q.unwrap());
            }
            let ledger = match args.p {
                Some(p) if (3..=5).contains(&args.n) && args.alpha == 1.0 => {
                    let l = bootstrap_ledger(args.n, p, None).ok();
                    if let Some(l) = &l {
                        println!("  ledger     = {:?} -> {:?}", l.steps, l.outcome);
                    }
                    l
                }
                _ => None,
            };
            if let Some(path) = args.json {
                let payload = serde_json::json!({ "table": table, "ledger": ledger });
                std::fs::write(path, serde_json::to_string_pretty(&payload).expect("serialises"))?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Evolve(args) => {
            let config = RunConfig::from_path(&args.config)?;
            let artifacts = run_config(&config)?;
            write_run_dir(&artifacts, &args.out)?;
            println!(
                "{}: {:?} after {} samples (t = {})",
                config.id,
                artifacts.report.outcome,
                artifacts.trajectory.samples.len(),
                artifacts.trajectory.last().t
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep(args) => {
            let config = RunConfig::from_path(&args.config)?;
            let rows = run_sweep(&config)?;
            std::fs::create_dir_all(&args.out)?;
            std::fs::write(args.out.join("sweep.csv"), sweep_csv(&rows))?;
            println!("{} rows -> {}", rows.len(), args.out.join("sweep.csv").display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Construct(args) => construct(args),
        Command::Fit(args) => {
            let text = std::fs::read_to_string(&args.trajectory)?;
            match args.kind.as_str() {
                "rate" => {
                    let traj = trajectory_from_csv(&text, Outcome::BlowupSuspected { t_last: 0.0 })?;
                    let rep = estimate_blowup(&traj, args.p)?;
                    println!(
                        "T_est = {:.6}, exponent = {:.4} +/- {:.4} (R^2 = {:.6})",
                        rep.t_est, rep.rate_exponent, rep.rate_stderr, rep.r_squared
                    );
                    if let Some(path) = args.json {
                        std::fs::write(path, serde_json::to_string_pretty(&rep).expect("serialises"))?;
                    }
                }
                "decay" => {
                    let traj = trajectory_from_csv(&text, Outcome::GlobalToTend)?;
                    let fit = decay_fit(&traj, args.p, None)?;
                    println!(
                        "exponent = {:.4} +/- {:.4} (reference {:.4}, R^2 = {:.6})",
                        fit.exponent, fit.stderr, fit.reference, fit.r_squared
                    );
                    if let Some(path) = args.json {
                        std::fs::write(path, serde_json::to_string_pretty(&fit).expect("serialises"))?;
                    }
                }
                other => return Err(Error::Config(format!("unknown fit kind {other:?}"))),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Check(args) => {
            if !suite_names().contains(&args.suite.as_str()) {
                return Err(Error::UnknownSuite(args.suite));
            }
            let results = run_suite(&args.suite)?;
            let mut failures = 0;
            for r in &results {
                let tag = if r.passed { "PASS" } else { "FAIL" };
                println!("[{tag}] {}/{}: {}", r.suite, r.name, r.detail);
                if !r.passed {
                    failures += 1;
                }
            }
            println!("{} checks, {} failures", results.len(), failures);
            if let Some(path) = args.json {
                std::fs::write(path, serde_json::to_string_pretty(&results).expect("serialises"))?;
            }
            Ok(if failures == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
    }
}

fn construct(args: ConstructArgs) -> Result<ExitCode, Error> {
    match args.what {
        ConstructCommand::Steady { p, out } => {
            let s = steady_state_1d(p)?;
            std::fs::create_dir_all(&out)?;
            let mut csv = String::from("x,v,dv\n");
            for i in 0..s.xs.len() {
                csv.push_str(&format!("{},{},{}\n", s.xs[i], s.vs[i], s.dvs[i]));
            }
            std::fs::write(out.join("profile.csv"), csv)?;
            let (v_max, slope) = SteadyState1d::time_map_prediction(p);
            let summary = serde_json::json!({
                "p": p,
                "max_value": s.max_value,
                "shoot_slope": s.shoot_slope,
                "half_energy": s.half_energy,
                "first_integral_drift": s.first_integral_drift(),
                "time_map_max_value": v_max,
                "time_map_slope": slope,
            });
            std::fs::write(out.join("summary.json"), serde_json::to_string_pretty(&summary).expect("serialises"))?;
            println!("steady profile p = {p}: max {:.6}, slope {:.6}", s.max_value, s.shoot_slope);
            Ok(ExitCode::SUCCESS)
        }
        ConstructCommand::Bumps { q, k, m, lambda, nodes, out } => {
            let grid = Grid::radial_ball(1.0, 3, nodes)?;
            let fam = bump_family(k, None, m, q)?;
            std::fs::create_dir_all(&out)?;
            let mut rows = Vec::new();
            for i in 0..k {
                let (lq, quad) = fam.scaling_ratios(&grid, i, lambda)?;
                rows.push(serde_json::json!({
                    "member": i + 1,
                    "m_i": fam.m_values[i],
                    "lq_ratio": lq,
                    "quadratic_ratio": quad,
                }));
            }
            let payload = serde_json::json!({ "family": fam, "lambda": lambda, "scaling": rows });
            std::fs::write(out.join("bumps.json"), serde_json::to_string_pretty(&payload).expect("serialises"))?;
            println!("bump family written to {}", out.join("bumps.json").display());
            Ok(ExitCode::SUCCESS)
        }
        ConstructCommand::Witness { q, lambda, k, nodes, m_start, m_max, out } => {
            let grid = Grid::radial_ball(1.0, 3, nodes)?;
            let w = negative_energy_witness(q, lambda, k, &grid, m_start, m_max)?;
            std::fs::create_dir_all(&out)?;
            std::fs::write(out.join("witness.json"), serde_json::to_string_pretty(&w).expect("serialises"))?;
            println!(
                "witness at M = {} ({}): E = {:.6}",
                w.m, w.pattern, w.energy
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

//! Named invariant suites behind `npl check`: quadrature, gradient,
//! identities, exponents, ledger.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::energy;
use crate::error::{Error, Result};
use crate::exponents::{
    bootstrap_ledger, bootstrap_sq, lemma1_feasibility, minimize_admissibility_bound, minimizing_q,
    nonlinear_bound_check, p_energy_interpolation, p_fujita, p_sobolev, p_star, q_star, LedgerOutcome,
};
use crate::grid::{Field, Grid};
use crate::integrate::{evolve, ProblemSpec, StepperConfig};
use crate::nonlinear::{gradient_check, NonlinearitySpec};
use crate::operators::{riesz_potential, OperatorSpec, SpectralBasis};

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub suite: String,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(suite: &str, name: &str, passed: bool, detail: String) -> CheckResult {
    CheckResult { suite: suite.into(), name: name.into(), passed, detail }
}

pub fn suite_names() -> &'static [&'static str] {
    &["quadrature", "gradient", "identities", "exponents", "ledger", "all"]
}

pub fn run_suite(name: &str) -> Result<Vec<CheckResult>> {
    match name {
        "quadrature" => Ok(quadrature_suite()),
        "gradient" => Ok(gradient_suite()),
        "identities" => Ok(identities_suite()),
        "exponents" => Ok(exponents_suite()),
        "ledger" => Ok(ledger_suite()),
        "all" => {
            let mut all = quadrature_suite();
            all.extend(gradient_suite());
            all.extend(identities_suite());
            all.extend(exponents_suite());
            all.extend(ledger_suite());
            Ok(all)
        }
        other => Err(Error::UnknownSuite(other.into())),
    }
}

fn quadrature_suite() -> Vec<CheckResult> {
    let s = "quadrature";
    let mut out = Vec::new();

    let g = Grid::interval(1.0, 256).expect("grid");
    let one = Field::from_fn(&g, |_| 1.0).expect("field");
    let err = (one.integrate() - 1.0).abs();
    out.push(check(s, "interval measure", err <= 1e-12, format!("|sum w - L| = {err:.2e}")));

    let gb = Grid::radial_ball(1.0, 3, 256).expect("grid");
    let vol = Field::from_fn(&gb, |_| 1.0).expect("field").integrate();
    let err = (vol - 4.0 * PI / 3.0).abs() / (4.0 * PI / 3.0);
    out.push(check(s, "ball volume", err <= 1e-10, format!("relative error {err:.2e}")));

    let sine = Field::from_fn(&g, |x| (PI * x).sin()).expect("field");
    let err = (sine.integrate() - 2.0 / PI).abs();
    out.push(check(s, "sine integral at N=256", err <= 1e-8, format!("error {err:.2e}")));

    let cubic = Field::from_fn(&g, |x| x * x * x - 0.3 * x).expect("field");
    let err = (cubic.integrate() - (0.25 - 0.15)).abs();
    out.push(check(s, "cubic exactness", err <= 1e-12, format!("error {err:.2e}")));

    let f = Field::from_fn(&g, |x| (3.0 * PI * x).sin() + 0.2).expect("field");
    let a = f.scale(-2.5).lq_norm(3.0).expect("norm");
    let b = 2.5 * f.lq_norm(3.0).expect("norm");
    let err = (a - b).abs() / b;
    out.push(check(s, "norm homogeneity", err <= 1e-13, format!("relative error {err:.2e}")));

    let newton = riesz_potential(&Field::from_fn(&gb, |_| 1.0).expect("field"), 3).expect("riesz");
    let mut worst = 0.0f64;
    for (i, &r) in gb.nodes().iter().enumerate() {
        let exact = 2.0 * PI * (1.0 - r * r / 3.0);
        worst = worst.max((newton.values()[i] - exact).abs() / exact);
    }
    out.push(check(s, "unit-ball Newton potential", worst <= 1e-4, format!("max relative error {worst:.2e}")));
    out
}

fn gradient_suite() -> Vec<CheckResult> {
    let s = "gradient";
    let mut out = Vec::new();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    let cases: Vec<(&str, NonlinearitySpec, Arc<Grid>)> = vec![
        ("power p=3", NonlinearitySpec::power(3.0), Grid::interval(1.0, 192).expect("grid")),
        ("convolution p=2", NonlinearitySpec::choquard(2.0, 3), Grid::radial_ball(1.0, 3, 192).expect("grid")),
        ("competing q=2.5", NonlinearitySpec::sps(2.5, 1.0), Grid::radial_ball(1.0, 3, 192).expect("grid")),
    ];
    for (name, spec, grid) in cases {
        let basis = SpectralBasis::dirichlet(&grid, 24).expect("basis");
        let mut worst = 0.0f64;
        for _ in 0..50 {
            let cu: Vec<f64> = (0..24).map(|k| rng.gen_range(-1.0..1.0) / (1.0 + k as f64)).collect();
            let ch: Vec<f64> = (0..24).map(|k| rng.gen_range(-1.0..1.0) / (1.0 + k as f64)).collect();
            let u = basis.synthesize(&cu);
            let h = basis.synthesize(&ch);
            let err = gradient_check(&spec, &u, &h, 1e-5).expect("gradient check");
            worst = worst.max(err);
        }
        out.push(check(s, name, worst <= 1e-5, format!("worst of 50 trials: {worst:.2e}")));
    }
    out
}

fn identities_suite() -> Vec<CheckResult> {
    let s = "identities";
    let mut out = Vec::new();

    // dissipation along a small-data run
    let grid = Grid::interval(1.0, 128).expect("grid");
    let problem =
        ProblemSpec::new(Arc::clone(&grid), OperatorSpec::laplacian(), NonlinearitySpec::power(3.0), 32);
    let u0 = Field::from_fn(&grid, |x| 0.1 * (PI * x).sin()).expect("field");
    let config = StepperConfig { dt0: 0.02, t_end: 0.5, ..StepperConfig::default() };
    let traj = evolve(&problem, &config, &u0).expect("run");
    let max_resid = (0..traj.samples.len() - 1)
        .map(|i| energy::dissipation_residual(&traj, i))
        .fold(0.0f64, f64::max);
    out.push(check(s, "dissipation residual", max_resid <= 1e-3, format!("max residual {max_resid:.2e}")));

    // multiplier identities with a consistent u_t on a band-limited field
    let gb = Grid::radial_ball(1.0, 3, 512).expect("grid");
    let basis = SpectralBasis::dirichlet(&gb, 48).expect("basis");
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let coeffs: Vec<f64> = (0..48).map(|k| rng.gen_range(-1.0..1.0) / (1.0 + k as f64).powi(2)).collect();
    let u = basis.synthesize(&coeffs);
    let (q, lambda) = (2.5, 1.0);
    let spec = NonlinearitySpec::sps(q, lambda);
    let f = crate::nonlinear::eval_f(&spec, &u).expect("nonlinearity");
    let op = OperatorSpec::laplacian_plus_identity();
    let au = crate::operators::apply_operator(&basis, &op, &u).expect("operator");
    let u_t = f.sub(&au);
    let m = energy::multiplier_residual(&u, &u_t, q, lambda).expect("residual");
    out.push(check(s, "u-multiplier identity", m <= 1e-3, format!("residual {m:.2e}")));
    let p = energy::pohozaev_residual(&u, &u_t, q, lambda).expect("residual");
    out.push(check(s, "x.grad u multiplier identity", p <= 1e-2, format!("residual {p:.2e}")));

    // combined inequality is vacuous at zero
    let z = Field::zeros(&gb);
    let (lhs, rhs) = energy::combined_inequality(&z, &z, 2.5, 1.0).expect("inequality");
    out.push(check(s, "combined inequality at zero", lhs == 0.0 && rhs == 0.0, format!("({lhs}, {rhs})")));
    out
}

fn exponents_suite() -> Vec<CheckResult> {
    let s = "exponents";
    let mut out = Vec::new();
    let rows = [
        (3u32, 5.0, 4.5894, 3.4, 5.0 / 3.0),
        (4, 3.0, 2.9114, 2.5, 1.5),
        (5, 7.0 / 3.0, 2.2996, 23.0 / 11.0, 1.4),
    ];
    let mut ok = true;
    let mut worst = 0.0f64;
    for (n, ps, pstar, pcl, pf) in rows {
        let e1 = (p_sobolev(n).finite().unwrap() - ps).abs();
        let e2 = (p_star(n).finite().unwrap() - pstar).abs();
        let e3 = (p_energy_interpolation(n).finite().unwrap() - pcl).abs();
        let e4 = (p_fujita(n) - pf).abs();
        worst = worst.max(e1).max(e3).max(e4).max(e2 / 5e-4 * 1e-12);
        ok &= e1 <= 1e-12 && e2 <= 5e-4 && e3 <= 1e-12 && e4 <= 1e-12;
    }
    out.push(check(s, "threshold table", ok, format!("worst deviation {worst:.2e}")));

    let mut agree = true;
    let mut worst = 0.0f64;
    for n in [3u32, 4, 5] {
        let (q_hat, val) = minimize_admissibility_bound(n);
        let d1 = (q_hat - minimizing_q(n)).abs();
        let d2 = (val - p_star(n).finite().unwrap()).abs();
        worst = worst.max(d1).max(d2);
        agree &= d1 <= 1e-9 && d2 <= 1e-9;
    }
    out.push(check(s, "closed form vs numeric minimisation", agree, format!("worst gap {worst:.2e}")));

    let rep = nonlinear_bound_check(3, 2.0).expect("bound check");
    out.push(check(
        s,
        "nonlinear bound exponent r2",
        (rep.r2 - 12.0 / 7.0).abs() <= 1e-12 && rep.scaling_spread <= 1e-8,
        format!("r2 = {:.6}, scaling spread {:.2e}", rep.r2, rep.scaling_spread),
    ));

    let t = lemma1_feasibility(2.0, 2.0);
    out.push(check(s, "feasible contraction tuple", t.is_ok(), format!("{t:?}")));
    out
}

fn ledger_suite() -> Vec<CheckResult> {
    let s = "ledger";
    let mut out = Vec::new();
    for p in [2.0, 3.0, 4.0, 4.5] {
        let l = bootstrap_ledger(3, p, None).expect("ledger");
        let passed = l.outcome == LedgerOutcome::Terminated;
        out.push(check(
            s,
            &format!("n=3 p={p} terminates"),
            passed,
            format!("steps {:?}, s_Q = {:.4}, target {:.4}", l.steps, bootstrap_sq(p, *l.steps.last().unwrap()), l.q_target),
        ));
    }
    for p in [4.7, 4.9] {
        let l = bootstrap_ledger(3, p, None).expect("ledger");
        let passed = matches!(l.outcome, LedgerOutcome::Stuck { .. });
        out.push(check(s, &format!("n=3 p={p} sticks"), passed, format!("steps {:?}", l.steps)));
    }
    for (n, ok_p, stuck_p) in [(4u32, 2.8, 2.95), (5, 2.2, 2.32)] {
        let l = bootstrap_ledger(n, ok_p, None).expect("ledger");
        out.push(check(
            s,
            &format!("n={n} p={ok_p} terminates"),
            l.outcome == LedgerOutcome::Terminated,
            format!("steps {:?}", l.steps),
        ));
        let l = bootstrap_ledger(n, stuck_p, None).expect("ledger");
        out.push(check(
            s,
            &format!("n={n} p={stuck_p} sticks"),
            matches!(l.outcome, LedgerOutcome::Stuck { .. }),
            format!("steps {:?}", l.steps),
        ));
    }
    let _ = q_star(3, 2.0, 1.0);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_suites_pass() {
        for suite in ["quadrature", "gradient", "identities", "exponents", "ledger"] {
            let results = run_suite(suite).unwrap();
            assert!(!results.is_empty());
            for r in &results {
                assert!(r.passed, "{}/{}: {}", r.suite, r.name, r.detail);
            }
        }
    }

    #[test]
    fn unknown_suite_is_an_error() {
        assert!(matches!(run_suite("nope"), Err(Error::UnknownSuite(_))));
    }
}

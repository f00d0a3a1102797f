//! Time integration of `u_t + A u = F(u)` by exponential integrators in the
//! Dirichlet eigenbasis, with adaptive steps, trajectory recording, and
//! small-data / continuity probes.
//!
//! The state is the coefficient vector of the solution; nonlinear terms are
//! evaluated on a dealiased collocation grid with `N >= 4 K` nodes.

use std::sync::Arc;

use crate::energy::{self, EnergyBreakdown};
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::nonlinear::{self, NonlinearitySpec};
use crate::operators::{OperatorFlavor, OperatorSpec, SpectralBasis};

/// Solutions are declared decayed once `|u|_inf` drops below this.
pub const DECAY_FLOOR: f64 = 1e-10;

const MAX_STEPS: usize = 4_000_000;

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ProblemSpec {
    #[serde(skip, default = "placeholder_grid")]
    pub grid: Arc<Grid>,
    pub operator: OperatorSpec,
    pub nonlinearity: NonlinearitySpec,
    /// Basis resolution K.
    pub modes: usize,
}

fn placeholder_grid() -> Arc<Grid> {
    Grid::interval(1.0, 8).expect("placeholder grid")
}

impl ProblemSpec {
    pub fn new(grid: Arc<Grid>, operator: OperatorSpec, nonlinearity: NonlinearitySpec, modes: usize) -> Self {
        ProblemSpec { grid, operator, nonlinearity, modes }
    }

    pub fn validate(&self) -> Result<()> {
        self.operator.validate(&self.grid)?;
        self.nonlinearity.validate()?;
        if self.operator.flavor != OperatorFlavor::Spectral {
            return Err(Error::InvalidParameter(
                "time integration needs the spectral operator flavour; the restricted one is a cross-check only"
                    .into(),
            ));
        }
        if self.nonlinearity.needs_radial3() && !self.grid.is_radial() {
            return Err(Error::InvalidParameter(
                "the competing nonlinearity needs a radial 3-ball grid".into(),
            ));
        }
        if self.modes == 0 || 2 * self.modes > self.grid.len() {
            return Err(Error::InvalidParameter(format!(
                "mode count must satisfy 1 <= K <= N/2, got K={}, N={}",
                self.modes,
                self.grid.len()
            )));
        }
        if self.grid.is_radial() && self.grid.len() < 4 * self.modes {
            return Err(Error::GridTooCoarse { required: 4 * self.modes, actual: self.grid.len() });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Etd1,
    Etd2rk,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct StepperConfig {
    /// Base step; the adaptive law divides it by `1 + |u|_inf^{deg-1}`.
    pub dt0: f64,
    pub t_end: f64,
    /// `|u|_inf` threshold declaring suspected blow-up.
    pub blowup_cap: f64,
    pub safety: f64,
    pub record_every: usize,
    pub scheme: Scheme,
    /// Keep field snapshots at record times (needed by the similarity
    /// rescalings).
    pub store_fields: bool,
}

impl Default for StepperConfig {
    fn default() -> Self {
        StepperConfig {
            dt0: 1e-3,
            t_end: 1.0,
            blowup_cap: 1e8,
            safety: 1.0,
            record_every: 1,
            scheme: Scheme::Etd2rk,
            store_fields: false,
        }
    }
}

impl StepperConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt0 > 0.0) {
            return Err(Error::InvalidParameter(format!("dt0 must be positive, got {}", self.dt0)));
        }
        if !(self.blowup_cap > 1.0) {
            return Err(Error::InvalidParameter(format!("blowup_cap must exceed 1, got {}", self.blowup_cap)));
        }
        if !(self.t_end > 0.0) || !(self.safety > 0.0) || self.record_every == 0 {
            return Err(Error::InvalidParameter("t_end, safety and record_every must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    /// Reached `t_end` with the solution still alive.
    GlobalToTend,
    /// Hit the cap (or produced non-finite values); `t_last` is the last
    /// trusted time, a lower bound for the blow-up time.
    BlowupSuspected { t_last: f64 },
    DecayedToZero { t: f64 },
}

impl Outcome {
    pub fn is_blowup(&self) -> bool {
        matches!(self, Outcome::BlowupSuspected { .. })
    }
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct Sample {
    pub t: f64,
    pub l2: f64,
    /// `L_{q+1}` (or `L_{p+1}`) norm matching the nonlinearity.
    pub lq: f64,
    pub linf: f64,
    /// Spectral Sobolev norm `sqrt(sum (1 + lambda^alpha) c_k^2)`.
    pub sobolev: f64,
    pub energy: EnergyBreakdown,
    pub phi: f64,
    pub interaction: Option<f64>,
    pub ut_l2_sq: f64,
    /// `int_0^t |u_t|_2^2 ds`, accumulated per micro-step.
    pub dissipation_cum: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub outcome: Outcome,
    /// Exponent of the recorded `lq` norm.
    pub lq_exponent: f64,
    pub snapshots: Vec<(f64, Field)>,
    /// Projection tail-energy fraction of the initial datum.
    pub initial_tail: f64,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn linf_series(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.linf).collect()
    }

    pub fn energy_series(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.energy.total).collect()
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectories have at least one sample")
    }

    /// Build a trajectory carrying only times and sup norms (fits and
    /// synthetic oracles).
    pub fn from_series(times: Vec<f64>, linf: Vec<f64>, outcome: Outcome) -> Trajectory {
        assert_eq!(times.len(), linf.len());
        let samples = times
            .into_iter()
            .zip(linf)
            .map(|(t, m)| Sample {
                t,
                l2: 0.0,
                lq: 0.0,
                linf: m,
                sobolev: 0.0,
                energy: EnergyBreakdown::zero(),
                phi: 0.0,
                interaction: None,
                ut_l2_sq: 0.0,
                dissipation_cum: 0.0,
            })
            .collect();
        Trajectory { samples, outcome, lq_exponent: 2.0, snapshots: Vec::new(), initial_tail: 0.0 }
    }
}

/// Shared machinery for the exponential steppers.
pub(crate) struct Integrator {
    pub problem: ProblemSpec,
    pub basis: SpectralBasis,
    pub basis_eval: SpectralBasis,
    pub eval_grid: Arc<Grid>,
    pub sigmas: Vec<f64>,
}

impl Integrator {
    pub fn new(problem: &ProblemSpec) -> Result<Self> {
        problem.validate()?;
        let basis = SpectralBasis::dirichlet(&problem.grid, problem.modes)?;
        let n_eval = problem.grid.len().max(4 * problem.modes);
        let (basis_eval, eval_grid) = if n_eval == problem.grid.len() {
            (basis.clone(), Arc::clone(&problem.grid))
        } else {
            let eval_grid = match *problem.grid.kind() {
                crate::grid::GridKind::Interval { origin, length } => {
                    Grid::interval_at(origin, length, n_eval)?
                }
                crate::grid::GridKind::RadialBall { radius, dim } => Grid::radial_ball(radius, dim, n_eval)?,
            };
            (basis.resample(&eval_grid)?, eval_grid)
        };
        let sigmas: Vec<f64> =
            basis.lambdas().iter().map(|&lam| problem.operator.symbol(lam)).collect();
        Ok(Integrator { problem: problem.clone(), basis, basis_eval, eval_grid, sigmas })
    }

    /// Coefficients of `F(u)` from values of `u` on the dealiased grid.
    pub fn nonlinear_coeffs(&self, eval_values: &[f64]) -> Result<Vec<f64>> {
        if matches!(self.problem.nonlinearity, NonlinearitySpec::Zero) {
            return Ok(vec![0.0; self.sigmas.len()]);
        }
        let u = Field::new(Arc::clone(&self.eval_grid), eval_values.to_vec())?;
        let f = nonlinear::eval_f(&self.problem.nonlinearity, &u)?;
        Ok(self.basis_eval.analyze_values(f.values()))
    }

    /// One exponential step. Returns the new coefficients together with the
    /// new dealiased values and nonlinear coefficients (reused by the caller).
    pub fn etd_step(
        &self,
        coeffs: &[f64],
        fhat: &[f64],
        dt: f64,
        scheme: Scheme,
    ) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let k = coeffs.len();
        let mut stage = vec![0.0; k];
        for i in 0..k {
            let z = self.sigmas[i] * dt;
            stage[i] = (-z).exp() * coeffs[i] + dt * phi1(z) * fhat[i];
        }
        let new_coeffs = match scheme {
            Scheme::Etd1 => stage,
            Scheme::Etd2rk => {
                let stage_vals = self.basis_eval.synthesize_values(&stage);
                let fhat_stage = self.nonlinear_coeffs(&stage_vals)?;
                let mut out = stage;
                for i in 0..k {
                    let z = self.sigmas[i] * dt;
                    out[i] += dt * phi2(z) * (fhat_stage[i] - fhat[i]);
                }
                out
            }
        };
        let new_vals = self.basis_eval.synthesize_values(&new_coeffs);
        let new_fhat = self.nonlinear_coeffs(&new_vals)?;
        Ok((new_coeffs, new_vals, new_fhat))
    }

    fn ut_l2_sq(&self, coeffs: &[f64], fhat: &[f64]) -> f64 {
        coeffs
            .iter()
            .zip(fhat)
            .zip(&self.sigmas)
            .map(|((c, f), s)| {
                let v = f - s * c;
                v * v
            })
            .sum()
    }

    fn record(&self, t: f64, coeffs: &[f64], eval_values: &[f64], fhat: &[f64], d_cum: f64) -> Result<Sample> {
        let u_eval = Field::new(Arc::clone(&self.eval_grid), eval_values.to_vec())?;
        let l2 = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
        let lq = u_eval.lq_norm(self.problem.nonlinearity.lq_exponent())?;
        let linf = u_eval.linf();
        let sobolev = coeffs
            .iter()
            .zip(self.basis.lambdas())
            .map(|(c, &lam)| (1.0 + lam.powf(self.problem.operator.alpha)) * c * c)
            .sum::<f64>()
            .sqrt();
        let energy = energy::breakdown(&self.problem, self.basis.lambdas(), coeffs, &u_eval)?;
        let interaction = match self.problem.nonlinearity {
            NonlinearitySpec::Sps { .. } => Some(nonlinear::interaction_integral(&u_eval)?),
            _ => None,
        };
        Ok(Sample {
            t,
            l2,
            lq,
            linf,
            sobolev,
            energy,
            phi: energy.potential,
            interaction,
            ut_l2_sq: self.ut_l2_sq(coeffs, fhat),
            dissipation_cum: d_cum,
        })
    }
}

/// Stable `(1 - e^{-z})/z` for `z >= 0`.
fn phi1(z: f64) -> f64 {
    if z < 1e-5 {
        1.0 - z / 2.0 + z * z / 6.0 - z * z * z / 24.0
    } else {
        (1.0 - (-z).exp()) / z
    }
}

/// Stable `(e^{-z} - 1 + z)/z^2` for `z >= 0`.
fn phi2(z: f64) -> f64 {
    if z < 1e-4 {
        0.5 - z / 6.0 + z * z / 24.0 - z * z * z / 120.0
    } else {
        ((-z).exp() - 1.0 + z) / (z * z)
    }
}

/// One stepper update of a field (identity at `dt = 0`).
pub fn step(problem: &ProblemSpec, config: &StepperConfig, u: &Field, dt: f64) -> Result<Field> {
    config.validate()?;
    if dt < 0.0 {
        return Err(Error::InvalidParameter("dt must be nonnegative".into()));
    }
    let integ = Integrator::new(problem)?;
    let coeffs = integ.basis.analyze(u)?;
    let eval_vals = integ.basis_eval.synthesize_values(&coeffs);
    let fhat = integ.nonlinear_coeffs(&eval_vals)?;
    let (new_coeffs, _, _) = integ.etd_step(&coeffs, &fhat, dt, config.scheme)?;
    Ok(integ.basis.synthesize(&new_coeffs))
}

/// Evolve from `u0` until `t_end`, the blow-up cap, or decay to round-off.
/// All abnormal ends are encoded in the outcome, never an error, except for
/// genuinely invalid setups.
pub fn evolve(problem: &ProblemSpec, config: &StepperConfig, u0: &Field) -> Result<Trajectory> {
    config.validate()?;
    let integ = Integrator::new(problem)?;
    let mut coeffs = integ.basis.analyze(u0)?;
    let initial_tail = integ.basis.tail_fraction(u0)?;
    let mut eval_vals = integ.basis_eval.synthesize_values(&coeffs);
    let mut fhat = match integ.nonlinear_coeffs(&eval_vals) {
        Ok(f) => f,
        Err(Error::Overflow) => {
            // The datum itself is past the overflow threshold.
            return Ok(Trajectory {
                samples: vec![oversized_sample(0.0, &coeffs, &eval_vals)],
                outcome: Outcome::BlowupSuspected { t_last: 0.0 },
                lq_exponent: problem.nonlinearity.lq_exponent(),
                snapshots: Vec::new(),
                initial_tail,
            });
        }
        Err(e) => return Err(e),
    };

    let degree = problem.nonlinearity.growth_degree();
    let mut t = 0.0;
    let mut d_cum = 0.0;
    let mut samples = vec![integ.record(t, &coeffs, &eval_vals, &fhat, d_cum)?];
    let mut snapshots = Vec::new();
    if config.store_fields {
        snapshots.push((t, integ.basis.synthesize(&coeffs)));
    }

    let outcome;
    let mut steps = 0usize;
    let mut recorded_at_t = true;
    loop {
        let linf = eval_vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !linf.is_finite() || linf >= config.blowup_cap {
            outcome = Outcome::BlowupSuspected { t_last: t };
            break;
        }
        if linf < DECAY_FLOOR {
            outcome = Outcome::DecayedToZero { t };
            break;
        }
        if t >= config.t_end * (1.0 - 1e-14) {
            outcome = Outcome::GlobalToTend;
            break;
        }
        if steps >= MAX_STEPS {
            return Err(Error::InsufficientSamples(format!(
                "step budget of {MAX_STEPS} exhausted at t = {t}"
            )));
        }
        let mut dt = config.safety * config.dt0 / (1.0 + linf.powf(degree - 1.0));
        dt = dt.min(config.t_end - t);
        // Near blow-up the adaptive step collapses; once it falls below a few
        // ulps of t the clock can no longer advance, which is itself a
        // blow-up verdict (the solution left the time-representable regime).
        if dt <= 8.0 * f64::EPSILON * t {
            outcome = Outcome::BlowupSuspected { t_last: t };
            break;
        }
        let ut_before = integ.ut_l2_sq(&coeffs, &fhat);
        match integ.etd_step(&coeffs, &fhat, dt, config.scheme) {
            Ok((c, v, f)) => {
                coeffs = c;
                eval_vals = v;
                fhat = f;
            }
            Err(Error::Overflow) => {
                outcome = Outcome::BlowupSuspected { t_last: t };
                break;
            }
            Err(e) => return Err(e),
        }
        t += dt;
        steps += 1;
        d_cum += 0.5 * dt * (ut_before + integ.ut_l2_sq(&coeffs, &fhat));
        recorded_at_t = false;
        if steps % config.record_every == 0 {
            samples.push(integ.record(t, &coeffs, &eval_vals, &fhat, d_cum)?);
            recorded_at_t = true;
            if config.store_fields {
                snapshots.push((t, integ.basis.synthesize(&coeffs)));
            }
        }
    }
    if !recorded_at_t {
        samples.push(integ.record(t, &coeffs, &eval_vals, &fhat, d_cum)?);
        if config.store_fields {
            snapshots.push((t, integ.basis.synthesize(&coeffs)));
        }
    }
    Ok(Trajectory {
        samples,
        outcome,
        lq_exponent: problem.nonlinearity.lq_exponent(),
        snapshots,
        initial_tail,
    })
}

fn oversized_sample(t: f64, coeffs: &[f64], eval_vals: &[f64]) -> Sample {
    Sample {
        t,
        l2: coeffs.iter().map(|c| c * c).sum::<f64>().sqrt(),
        lq: 0.0,
        linf: eval_vals.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        sobolev: 0.0,
        energy: EnergyBreakdown::zero(),
        phi: 0.0,
        interaction: None,
        ut_l2_sq: 0.0,
        dissipation_cum: 0.0,
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ContinuityReport {
    pub times: Vec<f64>,
    /// `|u(t) - v(t)|_2 / |u0 - v0|_2` (zero when the data coincide).
    pub ratios: Vec<f64>,
    pub initial_distance: f64,
    /// Sup of the ratio over the first fifth of the run.
    pub sup_ratio_initial: f64,
    /// Largest time up to which the ratio stays `<= 2`.
    pub window_end: f64,
}

/// March two solutions side by side with a fixed step and report how fast
/// they separate relative to the initial distance.
pub fn continuity_probe(
    problem: &ProblemSpec,
    config: &StepperConfig,
    u0: &Field,
    v0: &Field,
) -> Result<ContinuityReport> {
    config.validate()?;
    let integ = Integrator::new(problem)?;
    let mut cu = integ.basis.analyze(u0)?;
    let mut cv = integ.basis.analyze(v0)?;
    let dist0 = cu.iter().zip(&cv).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let mut times = vec![0.0];
    let mut ratios = vec![0.0];
    let dt = config.dt0;
    let steps = ((config.t_end / dt).ceil() as usize).max(1);
    let vals_u = integ.basis_eval.synthesize_values(&cu);
    let vals_v = integ.basis_eval.synthesize_values(&cv);
    let mut fu = integ.nonlinear_coeffs(&vals_u)?;
    let mut fv = integ.nonlinear_coeffs(&vals_v)?;
    for s in 0..steps {
        let step_u = integ.etd_step(&cu, &fu, dt, config.scheme);
        let step_v = integ.etd_step(&cv, &fv, dt, config.scheme);
        match (step_u, step_v) {
            (Ok((a, _, af)), Ok((b, _, bf))) => {
                cu = a;
                fu = af;
                cv = b;
                fv = bf;
            }
            (Err(Error::Overflow), _) | (_, Err(Error::Overflow)) => break,
            (Err(e), _) | (_, Err(e)) => return Err(e),
        }
        let t = dt * (s + 1) as f64;
        if (s + 1) % config.record_every == 0 {
            let dist = cu.iter().zip(&cv).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            times.push(t);
            ratios.push(if dist0 > 0.0 { dist / dist0 } else { 0.0 });
        }
    }
    let fifth = config.t_end / 5.0;
    let sup_ratio_initial = times
        .iter()
        .zip(&ratios)
        .filter(|(tt, _)| **tt <= fifth)
        .map(|(_, r)| *r)
        .fold(0.0f64, f64::max);
    let mut window_end = 0.0;
    for (tt, r) in times.iter().zip(&ratios) {
        if *r <= 2.0 {
            window_end = *tt;
        } else {
            break;
        }
    }
    Ok(ContinuityReport { times, ratios, initial_distance: dist0, sup_ratio_initial, window_end })
}

/// Evolve a (possibly rough) datum to time `delta` and return
/// `(|u(delta)|_inf, |u(delta)|_{1,2})`. Blow-up before `delta` is an error.
pub fn smoothing_probe(problem: &ProblemSpec, u0: &Field, delta: f64) -> Result<(f64, f64)> {
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter("delta must be positive".into()));
    }
    let config = StepperConfig {
        dt0: delta / 256.0,
        t_end: delta,
        record_every: usize::MAX,
        ..StepperConfig::default()
    };
    let traj = evolve(problem, &config, u0)?;
    if let Outcome::BlowupSuspected { t_last } = traj.outcome {
        return Err(Error::BlowupBeforeProbe(t_last));
    }
    let last = traj.last();
    // |u|_{1,2} from the recorded spectral Sobolev norm (alpha = 1 problems);
    // for fractional runs this is the operator-adapted analogue.
    Ok((last.linf, last.sobolev))
}

/// Bracket the amplitude separating decay from blow-up for data `c *
/// profile`. Global runs are classified by the sign of the final energy.
pub fn bisect_amplitude_threshold(
    problem: &ProblemSpec,
    config: &StepperConfig,
    profile: &Field,
    mut lo: f64,
    mut hi: f64,
    iters: usize,
) -> Result<(f64, f64)> {
    let classify = |c: f64| -> Result<bool> {
        let traj = evolve(problem, config, &profile.scale(c))?;
        Ok(match traj.outcome {
            Outcome::BlowupSuspected { .. } => true,
            Outcome::DecayedToZero { .. } => false,
            Outcome::GlobalToTend => traj.last().energy.total < 0.0,
        })
    };
    if classify(lo)? {
        return Err(Error::PreconditionViolated(format!("lower amplitude {lo} already blows up")));
    }
    if !classify(hi)? {
        return Err(Error::PreconditionViolated(format!("upper amplitude {hi} does not blow up")));
    }
    for _ in 0..iters {
        let mid = 0.5 * (lo + hi);
        if classify(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::OperatorSpec;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn mp_problem(n: usize, k: usize, p: f64) -> ProblemSpec {
        let grid = Grid::interval(1.0, n).unwrap();
        ProblemSpec::new(grid, OperatorSpec::laplacian(), NonlinearitySpec::power(p), k)
    }

    #[test]
    fn pure_heat_mode_decays_exactly() {
        let grid = Grid::interval(1.0, 128).unwrap();
        let problem = ProblemSpec::new(grid, OperatorSpec::laplacian(), NonlinearitySpec::Zero, 16);
        let basis = SpectralBasis::dirichlet(&problem.grid, 16).unwrap();
        let phi1 = basis.mode(0);
        let config = StepperConfig::default();
        let dt = 0.05;
        let out = step(&problem, &config, &phi1, dt).unwrap();
        let factor = (-PI * PI * dt).exp();
        for (o, v) in out.values().iter().zip(phi1.values()) {
            assert!((o - factor * v).abs() <= 1e-10, "{o} vs {}", factor * v);
        }
        // dt = 0 is the identity
        let out = step(&problem, &config, &phi1, 0.0).unwrap();
        for (o, v) in out.values().iter().zip(phi1.values()) {
            assert!((o - v).abs() <= 1e-14);
        }
    }

    #[test]
    fn linear_multimode_decay_tracks_symbols() {
        let grid = Grid::interval(1.0, 128).unwrap();
        let problem =
            ProblemSpec::new(grid, OperatorSpec::fractional(0.6), NonlinearitySpec::Zero, 12);
        let basis = SpectralBasis::dirichlet(&problem.grid, 12).unwrap();
        let mut coeffs = vec![0.0; 12];
        coeffs[0] = 1.0;
        coeffs[4] = -0.3;
        coeffs[9] = 0.08;
        let u0 = basis.synthesize(&coeffs);
        let config = StepperConfig { dt0: 1e-3, t_end: 0.2, record_every: usize::MAX, ..Default::default() };
        let traj = evolve(&problem, &config, &u0).unwrap();
        assert!(matches!(traj.outcome, Outcome::GlobalToTend));
        let t = traj.last().t;
        // reconstruct the final coefficients through an exact synthesis
        let basis2 = SpectralBasis::dirichlet(&problem.grid, 12).unwrap();
        let expect: Vec<f64> = coeffs
            .iter()
            .zip(basis2.lambdas())
            .map(|(c, &lam)| c * (-lam.powf(0.6) * t).exp())
            .collect();
        let expect_l2 = expect.iter().map(|c| c * c).sum::<f64>().sqrt();
        assert_relative_eq!(traj.last().l2, expect_l2, max_relative = 1e-10);
    }

    #[test]
    fn small_data_decays_to_zero() {
        let problem = mp_problem(128, 32, 3.0);
        let u0 = Field::from_fn(&problem.grid, |x| 0.1 * (PI * x).sin()).unwrap();
        let config = StepperConfig { dt0: 5e-3, t_end: 5.0, record_every: 10, ..Default::default() };
        let traj = evolve(&problem, &config, &u0).unwrap();
        assert!(
            matches!(traj.outcome, Outcome::DecayedToZero { .. }),
            "outcome {:?}",
            traj.outcome
        );
        // energy is non-increasing along the run
        let es = traj.energy_series();
        for w in es.windows(2) {
            assert!(w[1] <= w[0] + 1e-6 * (1.0 + w[0].abs()), "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn large_data_blows_up() {
        let problem = mp_problem(128, 32, 3.0);
        let u0 = Field::from_fn(&problem.grid, |x| 20.0 * (PI * x).sin()).unwrap();
        let config = StepperConfig { dt0: 2e-3, t_end: 1.0, ..Default::default() };
        let traj = evolve(&problem, &config, &u0).unwrap();
        assert!(traj.outcome.is_blowup(), "outcome {:?}", traj.outcome);
        assert!(traj.last().energy.total < 0.0);
    }

    #[test]
    fn self_convergence_under_dt_halving() {
        let problem = mp_problem(128, 32, 3.0);
        let u0 = Field::from_fn(&problem.grid, |x| 0.1 * (PI * x).sin()).unwrap();
        let run = |dt0: f64| {
            let config =
                StepperConfig { dt0, t_end: 0.5, record_every: usize::MAX, ..Default::default() };
            evolve(&problem, &config, &u0).unwrap().last().l2
        };
        let a = run(2e-3);
        let b = run(1e-3);
        assert!((a - b).abs() / b.abs() <= 1e-4, "{a} vs {b}");
    }

    #[test]
    fn odd_data_stays_odd() {
        let problem = mp_problem(256, 64, 3.0);
        // odd about the midpoint: sin(2 pi x)
        let u0 = Field::from_fn(&problem.grid, |x| 0.8 * (2.0 * PI * x).sin()).unwrap();
        let config =
            StepperConfig { dt0: 2e-3, t_end: 0.3, record_every: usize::MAX, store_fields: true, ..Default::default() };
        let traj = evolve(&problem, &config, &u0).unwrap();
        let (_, u) = traj.snapshots.last().unwrap();
        let v = u.values();
        let n = v.len();
        let mut asym = 0.0f64;
        for i in 0..n {
            asym = asym.max((v[i] + v[n - 1 - i]).abs());
        }
        assert!(asym <= 1e-9, "odd symmetry broken by {asym}");
    }

    #[test]
    fn steady_mode_balance_is_preserved() {
        // Competing small-data radial run conserves sign of energy and stays bounded.
        let grid = Grid::radial_ball(1.0, 3, 256).unwrap();
        let problem = ProblemSpec::new(
            grid,
            OperatorSpec::laplacian_plus_identity(),
            NonlinearitySpec::sps(3.5, 1.0),
            64,
        );
        let u0 = Field::from_fn(&problem.grid, |r| 0.1 * (PI * r).cos() * (1.0 - r * r)).unwrap();
        let config = StepperConfig { dt0: 5e-3, t_end: 2.0, record_every: 20, ..Default::default() };
        let traj = evolve(&problem, &config, &u0).unwrap();
        assert!(!traj.outcome.is_blowup());
        assert!(traj.samples.iter().all(|s| s.energy.total >= -1e-10));
    }

    #[test]
    fn continuity_probe_tracks_neighbouring_data() {
        let problem = mp_problem(128, 32, 3.0);
        let basis = SpectralBasis::dirichlet(&problem.grid, 32).unwrap();
        let u0 = Field::from_fn(&problem.grid, |x| 0.2 * (PI * x).sin()).unwrap();
        let v0 = u0.axpy(1e-6, &basis.mode(1));
        let config = StepperConfig { dt0: 1e-3, t_end: 0.5, record_every: 25, ..Default::default() };
        let rep = continuity_probe(&problem, &config, &u0, &v0).unwrap();
        assert!(rep.initial_distance > 0.0);
        assert!(rep.sup_ratio_initial <= 2.0, "ratio {}", rep.sup_ratio_initial);
        assert!(rep.window_end > 0.0);
        // identical data: ratio identically zero
        let rep = continuity_probe(&problem, &config, &u0, &u0).unwrap();
        assert!(rep.ratios.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn smoothing_probe_returns_finite_norms() {
        use rand::{Rng, SeedableRng};
        let problem = mp_problem(256, 64, 3.0);
        let basis = SpectralBasis::dirichlet(&problem.grid, 64).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let coeffs: Vec<f64> = (0..64).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut u0 = basis.synthesize(&coeffs);
        let sup = u0.linf();
        u0 = u0.scale(1.0 / sup);
        let (linf, h1) = smoothing_probe(&problem, &u0, 0.01).unwrap();
        assert!(linf.is_finite() && linf > 0.0);
        assert!(h1.is_finite() && h1 > 0.0);
        let zero = Field::zeros(&problem.grid);
        let (linf, h1) = smoothing_probe(&problem, &zero, 0.01).unwrap();
        assert_eq!((linf, h1), (0.0, 0.0));
    }

    #[test]
    fn smoothing_probe_monotone_in_amplitude() {
        let problem = mp_problem(128, 32, 3.0);
        let base = Field::from_fn(&problem.grid, |x| (PI * x).sin()).unwrap();
        let mut prev = (0.0, 0.0);
        for amp in [0.1, 0.2, 0.4, 0.8, 1.6] {
            let out = smoothing_probe(&problem, &base.scale(amp), 0.01).unwrap();
            assert!(out.0 >= prev.0 - 1e-12 && out.1 >= prev.1 - 1e-12, "{out:?} vs {prev:?}");
            prev = out;
        }
    }

    #[test]
    fn blowup_outcome_stable_under_refinement() {
        let problem = mp_problem(128, 32, 3.0);
        let u0 = Field::from_fn(&problem.grid, |x| 20.0 * (PI * x).sin()).unwrap();
        let t_at = |dt0: f64, k: usize| {
            let p = mp_problem(256, k, 3.0);
            let u0 = Field::from_fn(&p.grid, |x| 20.0 * (PI * x).sin()).unwrap();
            let config = StepperConfig { dt0, t_end: 1.0, ..Default::default() };
            let traj = evolve(&p, &config, &u0).unwrap();
            assert!(traj.outcome.is_blowup());
            match traj.outcome {
                Outcome::BlowupSuspected { t_last } => t_last,
                _ => unreachable!(),
            }
        };
        let _ = u0;
        let base = t_at(2e-3, 32);
        let halved = t_at(1e-3, 32);
        let doubled_k = t_at(2e-3, 64);
        assert!((halved - base).abs() / base <= 0.05, "{base} vs {halved}");
        assert!((doubled_k - base).abs() / base <= 0.05, "{base} vs {doubled_k}");
    }

    #[test]
    fn dissipation_residual_small_and_shrinking() {
        let problem = mp_problem(256, 85, 3.0);
        let u0 = Field::from_fn(&problem.grid, |x| 0.1 * (PI * x).sin()).unwrap();
        let max_resid = |dt0: f64| {
            let config = StepperConfig { dt0, t_end: 1.0, ..Default::default() };
            let traj = evolve(&problem, &config, &u0).unwrap();
            (0..traj.samples.len() - 1)
                .map(|i| crate::energy::dissipation_residual(&traj, i))
                .fold(0.0f64, f64::max)
        };
        let coarse = max_resid(0.02);
        let fine = max_resid(0.01);
        assert!(coarse <= 1e-3, "residual {coarse}");
        assert!(coarse / fine >= 2.0, "ratio {}", coarse / fine);
    }

    #[test]
    fn steady_state_residual_is_zero_for_etd() {
        // A discrete steady state (F-hat = sigma * coeffs) is an exact fixed
        // point of both exponential schemes; check on the linear problem with
        // zero data.
        let problem = mp_problem(64, 16, 3.0);
        let z = Field::zeros(&problem.grid);
        let config = StepperConfig::default();
        let out = step(&problem, &config, &z, 0.3).unwrap();
        assert_eq!(out.linf(), 0.0);
    }
}

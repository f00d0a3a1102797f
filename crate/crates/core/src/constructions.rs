//! Explicit witness constructions: the positive 1D steady state, its
//! sign-changing periodic extension, rescaled blow-up data, and the
//! concentrating bump family with its negative-energy search.

use std::sync::Arc;

use crate::blowup::{estimate_blowup, BlowupReport};
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::integrate::{evolve, Outcome, ProblemSpec, StepperConfig};
use crate::nonlinear::{self, NonlinearitySpec};
use crate::operators::OperatorSpec;

/// Positive solution of `v'' + v^p = 0` on `(0, 1)` with zero boundary
/// values, found by shooting. Stores a dense profile plus the conserved
/// quantity `v'(0)^2 / 2` of the first integral `v'^2/2 + v^{p+1}/(p+1)`.
#[derive(Debug, Clone)]
pub struct SteadyState1d {
    pub p: f64,
    pub xs: Vec<f64>,
    pub vs: Vec<f64>,
    pub dvs: Vec<f64>,
    pub max_value: f64,
    pub shoot_slope: f64,
    pub half_energy: f64,
}

fn rk4_step(p: f64, v: f64, dv: f64, h: f64) -> (f64, f64) {
    let f = |v: f64, dv: f64| (dv, -v.abs().powf(p - 1.0) * v);
    let (k1v, k1d) = f(v, dv);
    let (k2v, k2d) = f(v + 0.5 * h * k1v, dv + 0.5 * h * k1d);
    let (k3v, k3d) = f(v + 0.5 * h * k2v, dv + 0.5 * h * k2d);
    let (k4v, k4d) = f(v + h * k3v, dv + h * k3d);
    (v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v), dv + h / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d))
}

/// Location of the first zero of the shooting solution with `v(0) = 0`,
/// `v'(0) = s`, by dense integration and Hermite refinement of the crossing.
fn first_zero(p: f64, s: f64, h: f64, x_max: f64) -> Option<f64> {
    let mut v = 0.0;
    let mut dv = s;
    let mut x = 0.0;
    // leave the origin before testing for the crossing
    while x < x_max {
        let (nv, ndv) = rk4_step(p, v, dv, h);
        let nx = x + h;
        if x > h && nv <= 0.0 {
            // cubic Hermite root between x and nx
            let mut lo = 0.0;
            let mut hi = 1.0;
            let hermite = |t: f64| {
                let t2 = t * t;
                let t3 = t2 * t;
                (2.0 * t3 - 3.0 * t2 + 1.0) * v
                    + (t3 - 2.0 * t2 + t) * h * dv
                    + (-2.0 * t3 + 3.0 * t2) * nv
                    + (t3 - t2) * h * ndv
            };
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if hermite(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Some(x + 0.5 * (lo + hi) * h);
        }
        v = nv;
        dv = ndv;
        x = nx;
    }
    None
}

/// Shoot for the steady profile: bisect the initial slope until the first
/// zero lands at 1.
pub fn steady_state_1d(p: f64) -> Result<SteadyState1d> {
    if !(p > 1.0) {
        return Err(Error::InvalidParameter(format!("steady profile needs p > 1, got {p}")));
    }
    let h = 1.0 / 4096.0;
    // The scaling v_s(x) = lambda^{2/(p-1)} v_1(lambda x) moves the first
    // zero like s^{-(p-1)/(p+1)}; use it to bracket, then bisect on the
    // monotone zero location.
    let x1 = first_zero(p, 1.0, h, 100.0)
        .ok_or_else(|| Error::PreconditionViolated("shooting solution did not return to zero".into()))?;
    let s_guess = x1.powf((p + 1.0) / (p - 1.0));
    let mut lo = s_guess * 0.5;
    let mut hi = s_guess * 2.0;
    // zero location decreases in s
    let zero_at = |s: f64| first_zero(p, s, h, 40.0).unwrap_or(f64::INFINITY);
    if !(zero_at(lo) > 1.0 && zero_at(hi) < 1.0) {
        return Err(Error::PreconditionViolated("failed to bracket the shooting slope".into()));
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if zero_at(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = 0.5 * (lo + hi);

    // dense re-integration of the converged profile on [0, 1]
    let n = 4097;
    let hh = 1.0 / (n - 1) as f64;
    let mut xs = Vec::with_capacity(n);
    let mut vs = Vec::with_capacity(n);
    let mut dvs = Vec::with_capacity(n);
    let mut v = 0.0f64;
    let mut dv = s;
    for i in 0..n {
        xs.push(i as f64 * hh);
        vs.push(v.max(0.0));
        dvs.push(dv);
        if i + 1 < n {
            let (nv, ndv) = rk4_step(p, v, dv, hh);
            v = nv;
            dv = ndv;
        }
    }
    let max_value = vs.iter().fold(0.0f64, |m, v| m.max(*v));
    if vs[n - 1].abs() > 1e-9 {
        return Err(Error::PreconditionViolated(format!(
            "profile does not close: v(1) = {}",
            vs[n - 1]
        )));
    }
    Ok(SteadyState1d { p, xs, vs, dvs, max_value, shoot_slope: s, half_energy: 0.5 * s * s })
}

impl SteadyState1d {
    /// Profile value at `x in [0, 1]` by cubic interpolation of the dense
    /// samples (exact zeros at the endpoints).
    pub fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 || x >= 1.0 {
            return 0.0;
        }
        let n = self.xs.len();
        let h = self.xs[1] - self.xs[0];
        let pos = x / h;
        let i = (pos.floor() as usize).min(n - 2);
        let j0 = i.saturating_sub(1).min(n - 4);
        let t = pos - j0 as f64;
        let mut acc = 0.0;
        for k in 0..4 {
            let mut lk = 1.0;
            for m in 0..4 {
                if m != k {
                    lk *= (t - m as f64) / (k as f64 - m as f64);
                }
            }
            acc += lk * self.vs[j0 + k];
        }
        acc
    }

    /// Odd 2-periodic extension: `u(x) = v(x)` on `[0, 1]`, `u(x) = -v(-x)`
    /// on `[-1, 0)`, `u(x + 2k) = u(x)`.
    pub fn eval_periodic_odd(&self, x: f64) -> f64 {
        let mut y = x.rem_euclid(2.0);
        if y > 1.0 {
            y -= 2.0;
        }
        if y >= 0.0 {
            self.eval(y)
        } else {
            -self.eval(-y)
        }
    }

    /// Largest first-integral drift along the stored profile.
    pub fn first_integral_drift(&self) -> f64 {
        let p = self.p;
        self.vs
            .iter()
            .zip(&self.dvs)
            .map(|(&v, &dv)| (0.5 * dv * dv + v.abs().powf(p + 1.0) / (p + 1.0) - self.half_energy).abs())
            .fold(0.0, f64::max)
    }

    /// Half-period from the first integral: with `E0 = s^2/2`,
    /// `1/2 = int_0^{v_max} dv / sqrt(2 (E0 - v^{p+1}/(p+1)))`. Returns the
    /// predicted `(v_max, slope)` by quadrature, independent of the shooting
    /// path.
    pub fn time_map_prediction(p: f64) -> (f64, f64) {
        // J = int_0^1 (1 - w^{p+1})^{-1/2} dw via the substitution w = 1-u^2
        // (removes the endpoint singularity), Simpson on a fine grid.
        let integrand = |u: f64| {
            if u == 0.0 {
                2.0 / (p + 1.0f64).sqrt()
            } else {
                2.0 * u / (1.0 - (1.0 - u * u).powf(p + 1.0)).sqrt()
            }
        };
        let m = 4096;
        let h = 1.0 / m as f64;
        let mut j = integrand(0.0) + integrand(1.0);
        for i in 1..m {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            j += w * integrand(i as f64 * h);
        }
        j *= h / 3.0;
        // half-period relation: 1/2 = v_max^{(1-p)/2} sqrt((p+1)/2) J
        let v_max = (2.0 * ((p + 1.0) / 2.0f64).sqrt() * j).powf(2.0 / (p - 1.0));
        let slope = (2.0 / (p + 1.0)).sqrt() * v_max.powf((p + 1.0) / 2.0);
        (v_max, slope)
    }
}

/// Sample the odd 2-periodic extension on a grid.
pub fn odd_periodic_extension(profile: &SteadyState1d, grid: &Arc<Grid>) -> Result<Field> {
    if !grid.is_interval() {
        return Err(Error::InvalidParameter("periodic extension lives on interval grids".into()));
    }
    Field::from_fn(grid, |x| profile.eval_periodic_odd(x))
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct LambdaCalibration {
    pub lambda: f64,
    /// Fitted blow-up time, when the run blew up within budget.
    pub t_blow: Option<f64>,
    pub outcome_blowup: bool,
    #[serde(skip)]
    pub report: Option<BlowupReport>,
}

/// Configuration of the unit-interval runs behind the calibration.
pub struct CalibrationSetup {
    pub nodes: usize,
    pub modes: usize,
    pub dt0: f64,
    pub t_budget: f64,
}

impl Default for CalibrationSetup {
    fn default() -> Self {
        CalibrationSetup { nodes: 256, modes: 64, dt0: 2e-3, t_budget: 40.0 }
    }
}

/// Blow-up times of data `lambda * v1` on the unit interval, per lambda.
/// The run at `lambda = 1` sits on the steady state and reports no blow-up.
pub fn calibrate_t_lambda(
    p: f64,
    lambdas: &[f64],
    setup: &CalibrationSetup,
) -> Result<Vec<LambdaCalibration>> {
    let profile = steady_state_1d(p)?;
    let grid = Grid::interval(1.0, setup.nodes)?;
    let problem = ProblemSpec::new(
        Arc::clone(&grid),
        OperatorSpec::laplacian(),
        NonlinearitySpec::power(p),
        setup.modes,
    );
    let config = StepperConfig {
        dt0: setup.dt0,
        t_end: setup.t_budget,
        ..StepperConfig::default()
    };
    let mut out = Vec::new();
    for &lambda in lambdas {
        if !(lambda > 0.0) {
            return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
        }
        let u0 = Field::from_fn(&grid, |x| lambda * profile.eval(x))?;
        let traj = evolve(&problem, &config, &u0)?;
        let (t_blow, report, blew) = match traj.outcome {
            Outcome::BlowupSuspected { .. } => {
                let rep = estimate_blowup(&traj, p)?;
                (Some(rep.t_est), Some(rep), true)
            }
            _ => (None, None, false),
        };
        out.push(LambdaCalibration { lambda, t_blow, outcome_blowup: blew, report });
    }
    Ok(out)
}

/// Rescaled blow-up datum `u0(x) = a^{2/(p-1)} lambda u1(a x)` with
/// `a = sqrt(t_lambda / t_target)`: the corresponding solution blows up at
/// `t_target` with sup norm growing as `lambda` decreases to 1.
pub fn rescaled_blowup_data(
    profile: &SteadyState1d,
    lambda: f64,
    t_lambda: f64,
    t_target: f64,
    grid: &Arc<Grid>,
) -> Result<Field> {
    if !(t_lambda > 0.0 && t_target > 0.0) {
        return Err(Error::InvalidParameter("times must be positive".into()));
    }
    let a = (t_lambda / t_target).sqrt();
    let amp = a.powf(2.0 / (profile.p - 1.0)) * lambda;
    Field::from_fn(grid, |x| amp * profile.eval_periodic_odd(a * x))
}

/// Concentrating bump family on the 3-ball: `v_i(x) = M_i^2 (1 - M_i |x|)_+`
/// with `M_i = M^{1 + (i-1) delta}`, `delta in (0, (q-2)/(2k))`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct BumpFamily {
    pub q: f64,
    pub k: usize,
    pub delta: f64,
    pub m: f64,
    pub m_values: Vec<f64>,
}

pub fn bump_family(k: usize, delta: Option<f64>, m: f64, q: f64) -> Result<BumpFamily> {
    if k == 0 {
        return Err(Error::InvalidParameter("family needs k >= 1".into()));
    }
    if !(q > 2.0) {
        return Err(Error::InvalidParameter(format!("family needs q > 2, got {q}")));
    }
    if !(m > 1.0) {
        return Err(Error::InvalidParameter(format!("family needs M > 1, got {m}")));
    }
    let max_delta = (q - 2.0) / (2.0 * k as f64);
    let delta = delta.unwrap_or(0.5 * max_delta);
    if !(delta > 0.0 && delta < max_delta) {
        return Err(Error::InvalidParameter(format!(
            "delta must lie in (0, {max_delta}), got {delta}"
        )));
    }
    let m_values = (1..=k).map(|i| m.powf(1.0 + (i - 1) as f64 * delta)).collect();
    Ok(BumpFamily { q, k, delta, m, m_values })
}

impl BumpFamily {
    /// Member `i` (zero-based) sampled on the grid.
    pub fn member_on(&self, grid: &Arc<Grid>, i: usize) -> Result<Field> {
        let mi = self.m_values[i];
        Field::from_fn(grid, |r| mi * mi * (1.0 - mi * r).max(0.0))
    }

    /// Combination `sum_i alpha_i v_i` on the grid.
    pub fn combo_on(&self, grid: &Arc<Grid>, alphas: &[f64]) -> Result<Field> {
        if alphas.len() != self.k {
            return Err(Error::InvalidParameter("coefficient count must match the family size".into()));
        }
        let ms = self.m_values.clone();
        let al = alphas.to_vec();
        Field::from_fn(grid, move |r| {
            ms.iter().zip(&al).map(|(&mi, &a)| a * mi * mi * (1.0 - mi * r).max(0.0)).sum()
        })
    }

    /// Exact `int |grad v|^2` of a combination: the profile is piecewise
    /// linear in `r` with breakpoints at the support radii, so the integral
    /// against `4 pi r^2 dr` is a finite sum.
    pub fn exact_gradient_sq(&self, alphas: &[f64]) -> Result<f64> {
        if alphas.len() != self.k {
            return Err(Error::InvalidParameter("coefficient count must match the family size".into()));
        }
        // breakpoints descending: r in (1/M_{i+1}, 1/M_i) sees the slopes of
        // all bumps wider than r
        let mut radii: Vec<f64> = self.m_values.iter().map(|m| 1.0 / m).collect();
        radii.push(0.0);
        // radii[i] = support of bump i; segments (radii[i+1], radii[i])
        let four_pi_over_3 = 4.0 / 3.0 * std::f64::consts::PI;
        let mut total = 0.0;
        for seg in 0..self.k {
            let r_hi = radii[seg];
            let r_lo = radii[seg + 1];
            // bumps seg..k are supported past this segment
            let slope: f64 = (seg..self.k).map(|j| -alphas[j] * self.m_values[j].powi(3)).sum();
            total += slope * slope * four_pi_over_3 * (r_hi.powi(3) - r_lo.powi(3));
        }
        Ok(total)
    }

    /// Minimal grid size resolving the innermost bump (32 cells across its
    /// support).
    pub fn required_nodes(&self, grid_radius: f64) -> usize {
        let m_max = *self.m_values.last().unwrap();
        (32.0 * m_max * grid_radius).ceil() as usize + 1
    }

    /// Measured scaling ratios of member `i`:
    /// `|v|_{q+1}^{q+1} / M_i^{2q-1}` and `(|v|_{1,2}^2 + lambda I) / M_i^3`.
    pub fn scaling_ratios(&self, grid: &Arc<Grid>, i: usize, lambda: f64) -> Result<(f64, f64)> {
        self.check_resolution(grid)?;
        let v = self.member_on(grid, i)?;
        let mi = self.m_values[i];
        let wq = v.map(|x| x.abs().powf(self.q + 1.0))?.integrate();
        let mut alphas = vec![0.0; self.k];
        alphas[i] = 1.0;
        let grad_sq = self.exact_gradient_sq(&alphas)?;
        let mass = v.dot(&v);
        let inter = nonlinear::interaction_integral(&v)?;
        Ok((wq / mi.powf(2.0 * self.q - 1.0), (grad_sq + mass + lambda * inter) / mi.powi(3)))
    }

    fn check_resolution(&self, grid: &Arc<Grid>) -> Result<()> {
        let radius = match *grid.kind() {
            crate::grid::GridKind::RadialBall { radius, .. } => radius,
            _ => return Err(Error::InvalidParameter("bump constructions live on radial grids".into())),
        };
        let required = self.required_nodes(radius);
        if grid.len() < required {
            return Err(Error::GridTooCoarse { required, actual: grid.len() });
        }
        if 1.0 / self.m_values[0] > radius {
            return Err(Error::InvalidParameter("outermost bump exceeds the domain".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct Witness {
    pub m: f64,
    pub m_values: Vec<f64>,
    pub alphas: Vec<f64>,
    pub pattern: String,
    pub energy: f64,
    pub kinetic: f64,
    pub lq_term: f64,
    pub interaction_term: f64,
}

/// Doubling search over `M` for a normalised combination of bumps with
/// negative competing energy
/// `E = 1/2(|grad v|^2 + |v|^2) - w/(q+1) + lambda I / 4`.
/// Tests the single-bump, uniform and alternating patterns (all with
/// `sum |alpha_i| = 1`), returning the first hit. Fails with a grid-refusal
/// carrying the required node count when resolution runs out first.
pub fn negative_energy_witness(
    q: f64,
    lambda: f64,
    k: usize,
    grid: &Arc<Grid>,
    m_start: f64,
    m_max: f64,
) -> Result<Witness> {
    if !(q > 2.0 && q < 5.0) {
        return Err(Error::InvalidParameter(format!("witness search needs q in (2, 5), got {q}")));
    }
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter("lambda must be positive".into()));
    }
    let mut patterns: Vec<(String, Vec<f64>)> = Vec::new();
    for i in 0..k {
        let mut a = vec![0.0; k];
        a[i] = 1.0;
        patterns.push((format!("single_{}", i + 1), a));
    }
    if k > 1 {
        patterns.push(("uniform".into(), vec![1.0 / k as f64; k]));
        let alt: Vec<f64> = (0..k).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 } / k as f64).collect();
        patterns.push(("alternating".into(), alt));
    }

    let mut m = m_start;
    let mut last_refusal = None;
    while m <= m_max {
        let family = bump_family(k, None, m, q)?;
        match family.check_resolution(grid) {
            Ok(()) => {
                for (name, alphas) in &patterns {
                    let v = family.combo_on(grid, alphas)?;
                    let grad_sq = family.exact_gradient_sq(alphas)?;
                    let mass = v.dot(&v);
                    let w = v.map(|x| x.abs().powf(q + 1.0))?.integrate();
                    let inter = nonlinear::interaction_integral(&v)?;
                    let kinetic = 0.5 * (grad_sq + mass);
                    let lq_term = w / (q + 1.0);
                    let interaction_term = lambda / 4.0 * inter;
                    let energy = kinetic - lq_term + interaction_term;
                    if energy < 0.0 {
                        return Ok(Witness {
                            m,
                            m_values: family.m_values.clone(),
                            alphas: alphas.clone(),
                            pattern: name.clone(),
                            energy,
                            kinetic,
                            lq_term,
                            interaction_term,
                        });
                    }
                }
            }
            Err(e) => {
                last_refusal = Some(e);
                break;
            }
        }
        m *= 2.0;
    }
    Err(last_refusal.unwrap_or_else(|| {
        Error::Infeasible(format!("no negative-energy combination up to M = {m_max}"))
    }))
}

/// Evaluate the competing energy of an arbitrary field by quadrature (finite
/// difference gradient); used to re-check witnesses at other resolutions.
pub fn competing_energy_quadrature(v: &Field, q: f64, lambda: f64) -> Result<f64> {
    let h1_sq = v.h1_norm().powi(2);
    let w = v.map(|x| x.abs().powf(q + 1.0))?.integrate();
    let inter = nonlinear::interaction_integral(v)?;
    Ok(0.5 * h1_sq - w / (q + 1.0) + lambda / 4.0 * inter)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn steady_profile_symmetry_and_first_integral() {
        let s = steady_state_1d(3.0).unwrap();
        // maximum at the midpoint
        let i_max = s.vs.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert!((s.xs[i_max] - 0.5).abs() <= 1e-6, "max at {}", s.xs[i_max]);
        // conserved quantity drift
        let drift = s.first_integral_drift();
        assert!(drift <= 1e-8 * s.half_energy, "drift {drift}");
        // boundary values
        assert!(s.vs[0].abs() <= 1e-12 && s.vs[s.vs.len() - 1].abs() <= 1e-9);
        // reflection symmetry
        let n = s.vs.len();
        let mut asym = 0.0f64;
        for i in 0..n {
            asym = asym.max((s.vs[i] - s.vs[n - 1 - i]).abs());
        }
        assert!(asym <= 1e-6 * s.max_value, "asymmetry {asym}");
    }

    #[test]
    fn steady_profile_matches_time_map() {
        for p in [2.0, 3.0, 4.0] {
            let s = steady_state_1d(p).unwrap();
            let (v_max, slope) = SteadyState1d::time_map_prediction(p);
            assert!((s.max_value - v_max).abs() <= 1e-6 * v_max, "p={p}: {} vs {v_max}", s.max_value);
            assert!((s.shoot_slope - slope).abs() <= 1e-6 * slope, "p={p}: {} vs {slope}", s.shoot_slope);
        }
    }

    #[test]
    fn odd_extension_properties() {
        let s = steady_state_1d(3.0).unwrap();
        let grid = Grid::interval_at(-3.0, 6.0, 1537).unwrap();
        let u1 = odd_periodic_extension(&s, &grid).unwrap();
        // oddness about 0
        let v = u1.values();
        let n = v.len();
        for i in 0..n {
            assert!((v[i] + v[n - 1 - i]).abs() <= 1e-10 * s.max_value, "odd symmetry");
        }
        // 5 interior crossings on [-3, 3] (one per integer)
        assert_eq!(u1.sign_changes(Some(1e-12 * s.max_value)), 5);
        // sup norm matches the single-bump profile
        assert_relative_eq!(u1.linf(), s.max_value, max_relative = 1e-6);
    }

    #[test]
    fn rescaled_data_identity_at_unit_scaling() {
        let s = steady_state_1d(3.0).unwrap();
        let grid = Grid::interval_at(-3.0, 6.0, 769).unwrap();
        let u = rescaled_blowup_data(&s, 1.5, 0.25, 0.25, &grid).unwrap();
        let reference = odd_periodic_extension(&s, &grid).unwrap().scale(1.5);
        for (a, b) in u.values().iter().zip(reference.values()) {
            assert!((a - b).abs() <= 1e-12 * s.max_value);
        }
        // sup norm scales like a^{2/(p-1)} lambda |u1|_inf
        let u = rescaled_blowup_data(&s, 1.5, 0.16, 0.04, &grid).unwrap();
        let a: f64 = 2.0;
        assert_relative_eq!(u.linf(), a * 1.5 * s.max_value, max_relative = 1e-4);
    }

    #[test]
    fn bump_family_shapes_and_nesting() {
        let fam = bump_family(3, None, 10.0, 4.0).unwrap();
        let grid = Grid::radial_ball(1.0, 3, 4096).unwrap();
        for i in 0..3 {
            let v = fam.member_on(&grid, i).unwrap();
            let mi = fam.m_values[i];
            // peak value M_i^2 at the centre
            assert_relative_eq!(v.values()[0], mi * mi, max_relative = 1e-12);
            // support radius 1/M_i
            for (j, &r) in grid.nodes().iter().enumerate() {
                if r > 1.0 / mi + 1e-12 {
                    assert_eq!(v.values()[j], 0.0);
                }
            }
        }
        // nesting: M increasing means shrinking supports
        assert!(fam.m_values.windows(2).all(|w| w[1] > w[0]));
        // combinations change sign at most k-1 times
        let v = fam.combo_on(&grid, &[0.4, -0.35, 0.25]).unwrap();
        assert!(v.sign_changes(None) <= 2, "sign changes {}", v.sign_changes(None));
    }

    #[test]
    fn bump_scaling_ratios_stable_in_m() {
        let grid = Grid::radial_ball(1.0, 3, 4096).unwrap();
        let q = 4.0;
        let mut lq_ratios = Vec::new();
        let mut quad_ratios = Vec::new();
        for m in [10.0, 20.0, 40.0] {
            let fam = bump_family(1, None, m, q).unwrap();
            let (lq, quad) = fam.scaling_ratios(&grid, 0, 1.0).unwrap();
            lq_ratios.push(lq);
            quad_ratios.push(quad);
        }
        let spread = |v: &[f64]| {
            let max = v.iter().fold(f64::MIN, |a, &b| a.max(b));
            let min = v.iter().fold(f64::MAX, |a, &b| a.min(b));
            (max - min) / min
        };
        assert!(spread(&lq_ratios) <= 0.05, "lq ratios {lq_ratios:?}");
        assert!(spread(&quad_ratios) <= 0.05, "quadratic ratios {quad_ratios:?}");
        // the L_{q+1} scaling constant is 4 pi B(3, q+2) in closed form
        let beta = statrs::function::beta::beta(3.0, q + 2.0);
        let expect = 4.0 * std::f64::consts::PI * beta;
        assert_relative_eq!(lq_ratios[0], expect, max_relative = 1e-2);
    }

    #[test]
    fn witness_single_bump_supercritical() {
        let grid = Grid::radial_ball(1.0, 3, 2048).unwrap();
        let w = negative_energy_witness(4.0, 1.0, 1, &grid, 2.0, 64.0).unwrap();
        assert!(w.energy < 0.0);
        assert!(w.m <= 16.0, "found only at M = {}", w.m);
        // re-check at doubled resolution with the independent quadrature energy
        let fine = Grid::radial_ball(1.0, 3, 4096).unwrap();
        let fam = bump_family(1, None, w.m, 4.0).unwrap();
        let v = fam.combo_on(&fine, &w.alphas).unwrap();
        let e = competing_energy_quadrature(&v, 4.0, 1.0).unwrap();
        assert!(e < 0.0, "refined energy {e}");
    }

    #[test]
    fn witness_needs_resolution() {
        let coarse = Grid::radial_ball(1.0, 3, 64).unwrap();
        match negative_energy_witness(4.0, 1.0, 1, &coarse, 2.0, 64.0) {
            Err(Error::GridTooCoarse { required, .. }) => assert!(required > 64),
            other => panic!("expected refusal, got {other:?}"),
        }
    }
}

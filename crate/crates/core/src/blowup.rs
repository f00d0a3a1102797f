//! Blow-up detection analytics: rate and decay fits, universal-profile
//! evaluation, similarity-variable rescalings, and the energy monitor.

use crate::error::{Error, Result};
use crate::integrate::Trajectory;

/// Least-squares line `y = a + b x`; returns `(b, a, stderr_b, r_squared)`.
fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let dof = (xs.len().max(3) - 2) as f64;
    let sse = (syy - slope * sxy).max(0.0);
    let stderr = (sse / dof / sxx).sqrt();
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    (slope, intercept, stderr, r2)
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct BlowupReport {
    pub t_est: f64,
    /// Slope of `log |u|_inf` against `log(T - t)` on the fit window.
    pub rate_exponent: f64,
    pub rate_stderr: f64,
    pub fit_window: (f64, f64),
    pub n_fit_samples: usize,
    pub r_squared: f64,
    pub energy_at_last_sample: f64,
    pub cap_hit: bool,
}

/// Samples in the terminal decade of sup-norm growth, trimmed of the last
/// three (cap-contaminated) entries.
fn tail_window(traj: &Trajectory) -> Vec<usize> {
    let linf = traj.linf_series();
    let max = linf.iter().fold(0.0f64, |m, v| m.max(*v));
    let idx: Vec<usize> = (0..linf.len()).filter(|&i| linf[i] >= max / 10.0 && linf[i] > 0.0).collect();
    let keep = idx.len().saturating_sub(3);
    idx.into_iter().take(keep).collect()
}

/// Estimate the blow-up time and rate from a suspected run. `T` comes from a
/// linear fit of `|u|_inf^{-(p-1)}` against `t` (exact for the flat
/// solution), the exponent from `log |u|_inf` against `log(T - t)`.
pub fn estimate_blowup(traj: &Trajectory, p: f64) -> Result<BlowupReport> {
    if !traj.outcome.is_blowup() {
        return Err(Error::PreconditionViolated("trajectory is not a suspected blow-up".into()));
    }
    let window = tail_window(traj);
    if window.len() < 20 {
        return Err(Error::InsufficientSamples(format!(
            "need at least 20 tail samples, have {}",
            window.len()
        )));
    }
    let ts: Vec<f64> = window.iter().map(|&i| traj.samples[i].t).collect();
    let gs: Vec<f64> = window.iter().map(|&i| traj.samples[i].linf.powf(-(p - 1.0))).collect();
    let (slope, intercept, _, _) = linear_fit(&ts, &gs);
    if !(slope < 0.0) {
        return Err(Error::InsufficientSamples("tail is not growing; no root for the blow-up time".into()));
    }
    let t_est = -intercept / slope;
    let last_t = *ts.last().unwrap();
    let t_est = if t_est > last_t { t_est } else { last_t * (1.0 + 1e-12) + f64::MIN_POSITIVE };

    let mut lx = Vec::with_capacity(window.len());
    let mut ly = Vec::with_capacity(window.len());
    for &i in &window {
        let s = &traj.samples[i];
        if s.t < t_est {
            lx.push((t_est - s.t).ln());
            ly.push(s.linf.ln());
        }
    }
    let (rate, _, stderr, r2) = linear_fit(&lx, &ly);
    Ok(BlowupReport {
        t_est,
        rate_exponent: rate,
        rate_stderr: stderr,
        fit_window: (ts[0], last_t),
        n_fit_samples: window.len(),
        r_squared: r2,
        energy_at_last_sample: traj.last().energy.total,
        cap_hit: true,
    })
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct DecayFit {
    /// Slope of `log |u|_inf` against `log t`.
    pub exponent: f64,
    pub stderr: f64,
    /// Reference self-similar exponent `-1/(p-1)`.
    pub reference: f64,
    pub window: (f64, f64),
    pub n_samples: usize,
    pub r_squared: f64,
}

/// Fit the algebraic decay exponent over `t >= t_min` (default 1).
pub fn decay_fit(traj: &Trajectory, p: f64, t_min: Option<f64>) -> Result<DecayFit> {
    let t0 = t_min.unwrap_or(1.0);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for s in &traj.samples {
        if s.t >= t0 && s.linf > 0.0 {
            xs.push(s.t.ln());
            ys.push(s.linf.ln());
        }
    }
    if xs.len() < 10 {
        return Err(Error::InsufficientSamples(format!("need at least 10 samples past t = {t0}, have {}", xs.len())));
    }
    let (slope, _, stderr, r2) = linear_fit(&xs, &ys);
    Ok(DecayFit {
        exponent: slope,
        stderr,
        reference: -1.0 / (p - 1.0),
        window: (xs[0].exp(), xs.last().unwrap().exp()),
        n_samples: xs.len(),
        r_squared: r2,
    })
}

/// `max_t |u|_inf / (t^{-1/(p-1)} + (T-t)^{-1/(p-1)})` over recorded samples
/// with `0 < t < T`. A finite, refinement-stable value is consistency with a
/// two-sided universal bound; growth under a parameter family is its failure.
pub fn universal_profile(traj: &Trajectory, p: f64, t_est: f64) -> f64 {
    let e = -1.0 / (p - 1.0);
    traj.samples
        .iter()
        .filter(|s| s.t > 0.0 && s.t < t_est)
        .map(|s| s.linf / (s.t.powf(e) + (t_est - s.t).powf(e)))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone)]
pub struct SimilarityFrames {
    /// Rescaled times.
    pub s: Vec<f64>,
    /// Self-similar spatial coordinates.
    pub y: Vec<f64>,
    /// `frames[j][i] = w(y_i, s_j)`.
    pub frames: Vec<Vec<f64>>,
    pub sup_abs: f64,
    /// Sup norm of each frame.
    pub frame_sup: Vec<f64>,
}

/// Backward similarity rescaling about the point `a` and blow-up time `T`:
/// `w(y, s) = (T-t)^{1/(p-1)} u(a + y sqrt(T-t))`, `s = -log(T-t)`, sampled
/// by cubic interpolation on a fixed `y` grid (zero outside the domain).
pub fn backward_similarity(
    traj: &Trajectory,
    a: f64,
    t_blow: f64,
    p: f64,
    y_max: f64,
    n_y: usize,
) -> Result<SimilarityFrames> {
    if traj.snapshots.is_empty() {
        return Err(Error::InsufficientSamples("similarity rescaling needs stored field snapshots".into()));
    }
    if t_blow <= traj.snapshots.last().unwrap().0 {
        return Err(Error::InvalidParameter("T must exceed the last snapshot time".into()));
    }
    let y: Vec<f64> = (0..n_y).map(|i| -y_max + 2.0 * y_max * i as f64 / (n_y - 1) as f64).collect();
    let mut s_out = Vec::new();
    let mut frames = Vec::new();
    let mut sup_abs = 0.0f64;
    let mut frame_sup = Vec::new();
    for (t, field) in &traj.snapshots {
        let tau = t_blow - t;
        let scale = tau.powf(1.0 / (p - 1.0));
        let sqrt_tau = tau.sqrt();
        let frame: Vec<f64> = y.iter().map(|&yy| scale * field.eval_cubic(a + yy * sqrt_tau)).collect();
        let sup = frame.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        sup_abs = sup_abs.max(sup);
        frame_sup.push(sup);
        s_out.push(-tau.ln());
        frames.push(frame);
    }
    Ok(SimilarityFrames { s: s_out, y, frames, sup_abs, frame_sup })
}

/// Forward similarity rescaling `w(y, s) = (t+1)^{1/(p-1)} u(y sqrt(t+1))`,
/// `s = log(t+1)`, for decaying / global runs.
pub fn forward_similarity(traj: &Trajectory, p: f64, y_max: f64, n_y: usize) -> Result<SimilarityFrames> {
    if traj.snapshots.is_empty() {
        return Err(Error::InsufficientSamples("similarity rescaling needs stored field snapshots".into()));
    }
    let y: Vec<f64> = (0..n_y).map(|i| -y_max + 2.0 * y_max * i as f64 / (n_y - 1) as f64).collect();
    let mut s_out = Vec::new();
    let mut frames = Vec::new();
    let mut sup_abs = 0.0f64;
    let mut frame_sup = Vec::new();
    for (t, field) in &traj.snapshots {
        let tau = t + 1.0;
        let scale = tau.powf(1.0 / (p - 1.0));
        let sqrt_tau = tau.sqrt();
        let frame: Vec<f64> = y.iter().map(|&yy| scale * field.eval_cubic(yy * sqrt_tau)).collect();
        let sup = frame.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        sup_abs = sup_abs.max(sup);
        frame_sup.push(sup);
        s_out.push(tau.ln());
        frames.push(frame);
    }
    Ok(SimilarityFrames { s: s_out, y, frames, sup_abs, frame_sup })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonitorVerdict {
    EnergyStaysNonneg,
    EnergyDiverging,
    Inconclusive,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct MonitorReport {
    pub verdict: MonitorVerdict,
    pub first_negative_energy: Option<f64>,
    pub initial_energy: f64,
    pub final_energy: f64,
    /// Energy nonincreasing over the final window.
    pub energy_monotone_final: bool,
    /// Recorded solution norms increasing over the final window.
    pub xnorm_increasing_final: bool,
    pub final_window_start: f64,
}

/// Final-window indices: the terminal decade of sup-norm growth when the run
/// spans one, otherwise the last quarter of the samples.
fn final_window(traj: &Trajectory) -> Vec<usize> {
    let linf = traj.linf_series();
    let max = linf.iter().fold(0.0f64, |m, v| m.max(*v));
    let min = linf.iter().fold(f64::INFINITY, |m, v| m.min(*v));
    if max > 10.0 * min.max(f64::MIN_POSITIVE) && traj.outcome.is_blowup() {
        (0..linf.len()).filter(|&i| linf[i] >= max / 10.0).collect()
    } else {
        let start = traj.samples.len() * 3 / 4;
        (start..traj.samples.len()).collect()
    }
}

/// Track where the energy first turns negative and how energy and solution
/// norms trend over the final window.
pub fn energy_blowup_monitor(traj: &Trajectory) -> MonitorReport {
    let es = traj.energy_series();
    let e0 = es[0];
    let e_last = *es.last().unwrap();
    let first_negative_energy = traj.samples.iter().find(|s| s.energy.total < 0.0).map(|s| s.t);

    let window = final_window(traj);
    let mono_tol = 1e-9 * (1.0 + e0.abs());
    let energy_monotone_final =
        window.windows(2).all(|w| es[w[1]] <= es[w[0]] + mono_tol);
    let xnorm_increasing_final = window.windows(2).all(|w| {
        let a = &traj.samples[w[0]];
        let b = &traj.samples[w[1]];
        b.linf >= a.linf * (1.0 - 1e-9) || b.l2 >= a.l2 * (1.0 - 1e-9)
    });
    let min_e = es.iter().fold(f64::INFINITY, |m, v| m.min(*v));

    let verdict = if min_e >= -1e-9 * (1.0 + e0.abs()) {
        MonitorVerdict::EnergyStaysNonneg
    } else if e_last < -10.0 * e0.abs() && energy_monotone_final {
        MonitorVerdict::EnergyDiverging
    } else {
        MonitorVerdict::Inconclusive
    };
    MonitorReport {
        verdict,
        first_negative_energy,
        initial_energy: e0,
        final_energy: e_last,
        energy_monotone_final,
        xnorm_increasing_final,
        final_window_start: traj.samples[window[0]].t,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Field, Grid};
    use crate::integrate::Outcome;

    fn synthetic_blowup(p: f64, t_blow: f64, n: usize) -> Trajectory {
        // |u|_inf = (T - t)^{-1/(p-1)} sampled densely toward T
        let mut times = Vec::new();
        let mut linf = Vec::new();
        for i in 0..n {
            let frac = i as f64 / n as f64;
            let t = t_blow * (1.0 - 10f64.powf(-8.0 * frac));
            times.push(t);
            linf.push((t_blow - t).powf(-1.0 / (p - 1.0)));
        }
        Trajectory::from_series(times, linf, Outcome::BlowupSuspected { t_last: t_blow * 0.999 })
    }

    #[test]
    fn exact_power_law_recovers_time_and_exponent() {
        let traj = synthetic_blowup(3.0, 1.0, 400);
        let rep = estimate_blowup(&traj, 3.0).unwrap();
        assert!((rep.t_est - 1.0).abs() <= 1e-6, "T {}", rep.t_est);
        assert!((rep.rate_exponent + 0.5).abs() <= 1e-6, "exponent {}", rep.rate_exponent);
        assert!(rep.r_squared > 1.0 - 1e-9);
    }

    #[test]
    fn single_mode_ode_limit_matches_closed_form() {
        // u' = u^p with u(0) = u0: u(t) = ((p-1)(T-t))^{-1/(p-1)}
        let p = 3.0;
        let u0: f64 = 2.0;
        let t_blow = u0.powf(-(p - 1.0)) / (p - 1.0);
        let mut times = Vec::new();
        let mut linf = Vec::new();
        for i in 0..500 {
            let frac = i as f64 / 500.0;
            let t = t_blow * (1.0 - 10f64.powf(-7.0 * frac));
            times.push(t);
            linf.push(((p - 1.0) * (t_blow - t)).powf(-1.0 / (p - 1.0)));
        }
        let traj = Trajectory::from_series(times, linf, Outcome::BlowupSuspected { t_last: t_blow });
        let rep = estimate_blowup(&traj, p).unwrap();
        assert!((rep.t_est - t_blow).abs() / t_blow <= 1e-6);
        assert!((rep.rate_exponent + 1.0 / (p - 1.0)).abs() <= 1e-3);
    }

    #[test]
    fn estimate_requires_blowup_outcome_and_enough_samples() {
        let traj = Trajectory::from_series(vec![0.0, 0.1], vec![1.0, 1.1], Outcome::GlobalToTend);
        assert!(estimate_blowup(&traj, 3.0).is_err());
        let short = Trajectory::from_series(
            vec![0.0, 0.1, 0.2],
            vec![1.0, 2.0, 4.0],
            Outcome::BlowupSuspected { t_last: 0.2 },
        );
        assert!(matches!(estimate_blowup(&short, 3.0), Err(Error::InsufficientSamples(_))));
    }

    #[test]
    fn decay_fit_on_synthetic_power_law() {
        let times: Vec<f64> = (0..200).map(|i| 1.0 + i as f64 * 0.5).collect();
        let linf: Vec<f64> = times.iter().map(|t| t.powf(-0.5)).collect();
        let traj = Trajectory::from_series(times, linf, Outcome::GlobalToTend);
        let fit = decay_fit(&traj, 3.0, None).unwrap();
        assert!((fit.exponent + 0.5).abs() <= 1e-6);
        assert_eq!(fit.reference, -0.5);
    }

    #[test]
    fn universal_profile_of_exact_rate_is_one() {
        let traj = synthetic_blowup(3.0, 1.0, 300);
        let m = universal_profile(&traj, 3.0, 1.0);
        // max over samples of (T-t)^{-1/2} / (t^{-1/2} + (T-t)^{-1/2}) -> 1
        assert!(m <= 1.0 + 1e-12 && m > 0.9, "M = {m}");
    }

    #[test]
    fn backward_similarity_of_flat_profile_is_s_invariant() {
        let p = 3.0;
        let t_blow = 1.0;
        let grid = Grid::interval_at(-1.0, 2.0, 128).unwrap();
        let mut snapshots = Vec::new();
        for i in 0..40 {
            let t = 0.9 * t_blow * i as f64 / 39.0;
            let value = ((p - 1.0) * (t_blow - t)).powf(-1.0 / (p - 1.0));
            snapshots.push((t, Field::from_fn(&grid, |_| value).unwrap()));
        }
        let mut traj = Trajectory::from_series(
            snapshots.iter().map(|(t, _)| *t).collect(),
            snapshots.iter().map(|(_, f)| f.linf()).collect(),
            Outcome::BlowupSuspected { t_last: 0.9 },
        );
        traj.snapshots = snapshots;
        let frames = backward_similarity(&traj, 0.0, t_blow, p, 1.0, 41).unwrap();
        let expect = (p - 1.0f64).powf(-1.0 / (p - 1.0));
        let spread = frames
            .frame_sup
            .iter()
            .map(|s| (s - expect).abs())
            .fold(0.0f64, f64::max);
        assert!(spread <= 1e-8, "spread {spread}");
    }

    #[test]
    fn forward_similarity_exact_invariance() {
        let p = 3.0;
        let profile = |y: f64| (-y * y).exp();
        let grid = Grid::interval_at(-20.0, 40.0, 8192).unwrap();
        let mut snapshots = Vec::new();
        for i in 0..30 {
            let t = 8.0 * i as f64 / 29.0;
            let tau: f64 = t + 1.0;
            snapshots.push((
                t,
                Field::from_fn(&grid, |x| tau.powf(-1.0 / (p - 1.0)) * profile(x / tau.sqrt())).unwrap(),
            ));
        }
        let mut traj = Trajectory::from_series(
            snapshots.iter().map(|(t, _)| *t).collect(),
            snapshots.iter().map(|(_, f)| f.linf()).collect(),
            Outcome::GlobalToTend,
        );
        traj.snapshots = snapshots;
        let frames = forward_similarity(&traj, p, 3.0, 61).unwrap();
        // w(y, s) = profile(y) for every s
        let mut worst = 0.0f64;
        for frame in &frames.frames {
            for (i, &w) in frame.iter().enumerate() {
                worst = worst.max((w - profile(frames.y[i])).abs());
            }
        }
        assert!(worst <= 1e-8, "deviation {worst}");
        // u = 0 gives w = 0
        let zero_snap = vec![(0.0, Field::zeros(&grid))];
        let mut traj0 = Trajectory::from_series(vec![0.0], vec![0.0], Outcome::GlobalToTend);
        traj0.snapshots = zero_snap;
        assert_eq!(forward_similarity(&traj0, p, 3.0, 31).unwrap().sup_abs, 0.0);
    }

    #[test]
    fn monitor_flags_synthetic_trends() {
        // decaying energy staying nonnegative
        let times: Vec<f64> = (0..100).map(|i| i as f64 * 0.1).collect();
        let linf: Vec<f64> = times.iter().map(|t| (-t).exp()).collect();
        let mut traj = Trajectory::from_series(times, linf, Outcome::DecayedToZero { t: 10.0 });
        for (i, s) in traj.samples.iter_mut().enumerate() {
            s.energy.total = (-(i as f64) * 0.1f64).exp();
        }
        let rep = energy_blowup_monitor(&traj);
        assert_eq!(rep.verdict, MonitorVerdict::EnergyStaysNonneg);

        // diverging energy with growing norms
        let times: Vec<f64> = (0..100).map(|i| i as f64 * 0.01).collect();
        let linf: Vec<f64> = (0..100).map(|i| (1.0 + i as f64).powi(2)).collect();
        let mut traj = Trajectory::from_series(times, linf, Outcome::BlowupSuspected { t_last: 1.0 });
        for (i, s) in traj.samples.iter_mut().enumerate() {
            s.energy.total = 1.0 - 0.1 * (i as f64).powi(2);
            s.l2 = (1.0 + i as f64).powi(2);
        }
        let rep = energy_blowup_monitor(&traj);
        assert_eq!(rep.verdict, MonitorVerdict::EnergyDiverging);
        assert!(rep.xnorm_increasing_final);
        assert!(rep.first_negative_energy.is_some());
    }
}

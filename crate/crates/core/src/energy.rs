//! Energy functionals, the dissipation residual, and the starshaped-domain
//! multiplier identities.

use crate::error::{Error, Result};
use crate::grid::Field;
use crate::integrate::{ProblemSpec, Trajectory};
use crate::nonlinear::{self, NonlinearitySpec, SpsSign};
use crate::operators::{SpectralBasis, RESOLUTION_LIMIT};

/// `E = kinetic - potential` with the pieces itemised for the competing
/// nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EnergyBreakdown {
    /// `1/2 int A u . u`, evaluated spectrally.
    pub kinetic: f64,
    pub potential: f64,
    pub total: f64,
    /// `1/(q+1) |u|_{q+1}^{q+1}` for the competing nonlinearity.
    pub lq_term: Option<f64>,
    /// `lambda/4 I(u)` for the competing nonlinearity.
    pub interaction_term: Option<f64>,
}

impl EnergyBreakdown {
    pub fn zero() -> Self {
        EnergyBreakdown { kinetic: 0.0, potential: 0.0, total: 0.0, lq_term: None, interaction_term: None }
    }
}

/// Energy of a band-limited field: spectral kinetic term plus the quadrature
/// potential.
pub fn energy(problem: &ProblemSpec, basis: &SpectralBasis, u: &Field) -> Result<EnergyBreakdown> {
    let coeffs = basis.analyze(u)?;
    let tail = basis.tail_fraction(u)?;
    if tail > RESOLUTION_LIMIT {
        return Err(Error::Resolution { tail, limit: RESOLUTION_LIMIT });
    }
    breakdown(problem, basis.lambdas(), &coeffs, u)
}

/// Energy from known coefficients and grid values (no resolution check);
/// the integrator calls this on its own synthesised state.
pub(crate) fn breakdown(
    problem: &ProblemSpec,
    lambdas: &[f64],
    coeffs: &[f64],
    u: &Field,
) -> Result<EnergyBreakdown> {
    let op = &problem.operator;
    let kinetic: f64 = 0.5
        * coeffs
            .iter()
            .zip(lambdas)
            .map(|(c, &lam)| op.symbol(lam) * c * c)
            .sum::<f64>();
    let (potential, lq_term, interaction_term) = match problem.nonlinearity {
        NonlinearitySpec::Sps { q, lambda, sign } => {
            let w = u.map(|v| v.abs().powf(q + 1.0))?.integrate();
            let i = nonlinear::interaction_integral(u)?;
            let lq = w / (q + 1.0);
            let inter = lambda / 4.0 * i;
            let pot = match sign {
                SpsSign::Minus => lq - inter,
                SpsSign::Plus => lq + inter,
            };
            (pot, Some(lq), Some(inter))
        }
        ref nl => (nonlinear::eval_potential(nl, u)?, None, None),
    };
    Ok(EnergyBreakdown { kinetic, potential, total: kinetic - potential, lq_term, interaction_term })
}

/// `|E_{i+1} - E_i + int |u_t|_2^2 dt| / (|E_i| + 1)` over one recorded
/// interval, with the time integral from the stored cumulative dissipation.
pub fn dissipation_residual(traj: &Trajectory, i: usize) -> f64 {
    assert!(i + 1 < traj.samples.len(), "need i+1 < number of samples");
    let a = &traj.samples[i];
    let b = &traj.samples[i + 1];
    let drop = b.energy.total - a.energy.total;
    let dissipated = b.dissipation_cum - a.dissipation_cum;
    (drop + dissipated).abs() / (a.energy.total.abs() + 1.0)
}

struct SpsQuantities {
    /// `|u|_{1,2}^2 = int(|grad u|^2 + u^2)`, finite differences.
    a: f64,
    /// `|u|_2^2`
    y: f64,
    /// `|u|_{q+1}^{q+1}`
    w: f64,
    /// interaction integral
    i: f64,
    du: Vec<f64>,
}

fn sps_quantities(u: &Field, q: f64) -> Result<SpsQuantities> {
    if !u.grid().is_radial() {
        return Err(Error::InvalidParameter("multiplier identities need a radial 3-ball grid".into()));
    }
    let du = u.fd_derivative4();
    let wgt = u.grid().weights();
    let mut a = 0.0;
    let mut y = 0.0;
    let mut w = 0.0;
    for ((&wi, &ui), &di) in wgt.iter().zip(u.values()).zip(&du) {
        a += wi * (di * di + ui * ui);
        y += wi * ui * ui;
        w += wi * ui.abs().powf(q + 1.0);
    }
    let i = nonlinear::interaction_integral(u)?;
    Ok(SpsQuantities { a, y, w, i, du })
}

fn ball_radius(u: &Field) -> f64 {
    match *u.grid().kind() {
        crate::grid::GridKind::RadialBall { radius, .. } => radius,
        _ => unreachable!("checked radial"),
    }
}

/// Normalised residual of the `x . grad u` multiplier identity on the ball
/// (starshaped about the origin):
/// `1/2 |u|_{1,2}^2 + |u|_2^2 - 3/(q+1) w + 5/4 lambda I
///   = -1/2 int_bdry |du/dn|^2 x.n dS + int u_t x.grad u`.
/// The boundary flux enters with the factor 1/2 coming out of
/// `int (x.grad u) Lap u = 1/2 int |grad u|^2 + 1/2 int_bdry (x.n)(du/dn)^2`;
/// only that normalisation makes the residual vanish under refinement.
pub fn pohozaev_residual(u: &Field, u_t: &Field, q: f64, lambda: f64) -> Result<f64> {
    let s = sps_quantities(u, q)?;
    let radius = ball_radius(u);
    let n = u.values().len();
    let flux = 0.5 * 4.0 * std::f64::consts::PI * radius.powi(3) * s.du[n - 1] * s.du[n - 1];
    let wgt = u.grid().weights();
    let r = u.grid().nodes();
    let mut mult = 0.0;
    for i in 0..n {
        mult += wgt[i] * u_t.values()[i] * r[i] * s.du[i];
    }
    let lhs = 0.5 * s.a + s.y - 3.0 / (q + 1.0) * s.w + 1.25 * lambda * s.i;
    let rhs = -flux + mult;
    let scale = [0.5 * s.a, s.y, 3.0 / (q + 1.0) * s.w, 1.25 * lambda * s.i, flux, mult.abs(), 1.0]
        .into_iter()
        .fold(0.0f64, f64::max);
    Ok((lhs - rhs).abs() / scale)
}

/// Normalised residual of the `u`-multiplier identity
/// `-|u|_{1,2}^2 + w - lambda I = int u u_t`.
pub fn multiplier_residual(u: &Field, u_t: &Field, q: f64, lambda: f64) -> Result<f64> {
    let s = sps_quantities(u, q)?;
    let pairing = u.dot(u_t);
    let lhs = -s.a + s.w - lambda * s.i;
    let scale = [s.a, s.w, lambda * s.i, pairing.abs(), 1.0].into_iter().fold(0.0f64, f64::max);
    Ok((lhs - pairing).abs() / scale)
}

/// Both sides of the combined inequality for `q in (2, 3]`:
/// `lhs = (q-2)/4 |u|_{1,2}^2 + (q-2)/(q+1) w + (q-2)/4 lambda I`,
/// `rhs = 3 C(q) |u_t|_2^2 + (q+1) E`,
/// with `C(q) = 3 max(R^2, 1) / (q - 2)` from the Cauchy splittings at
/// `eps = (q-2)/12` (`R` the ball radius bounding `|x|`).
pub fn combined_inequality(u: &Field, u_t: &Field, q: f64, lambda: f64) -> Result<(f64, f64)> {
    if !(q > 2.0 && q <= 3.0) {
        return Err(Error::InvalidParameter(format!("combined inequality needs q in (2, 3], got {q}")));
    }
    let s = sps_quantities(u, q)?;
    let radius = ball_radius(u);
    let c_q = 3.0 * radius.powi(2).max(1.0) / (q - 2.0);
    let ut_sq = u_t.dot(u_t);
    let e = 0.5 * s.a - s.w / (q + 1.0) + lambda / 4.0 * s.i;
    let lhs = (q - 2.0) / 4.0 * s.a + (q - 2.0) / (q + 1.0) * s.w + (q - 2.0) / 4.0 * lambda * s.i;
    let rhs = 3.0 * c_q * ut_sq + (q + 1.0) * e;
    Ok((lhs, rhs))
}

/// Sample ratio `(int A u . u + Phi(u)) / |u|_2^{p+1}`; positive uniformly in
/// the sample is the coercivity evidence reported by the check suites.
/// Only meaningful for the power and convolution nonlinearities.
pub fn coercivity_ratio(problem: &ProblemSpec, basis: &SpectralBasis, u: &Field) -> Result<f64> {
    let p = match problem.nonlinearity {
        NonlinearitySpec::Power { p } => p,
        NonlinearitySpec::Choquard { p, .. } => p,
        _ => {
            return Err(Error::InvalidParameter(
                "coercivity ratio applies to the power and convolution nonlinearities".into(),
            ))
        }
    };
    let coeffs = basis.analyze(u)?;
    let quad: f64 = coeffs
        .iter()
        .zip(basis.lambdas())
        .map(|(c, &lam)| problem.operator.symbol(lam) * c * c)
        .sum();
    let phi = nonlinear::eval_potential(&problem.nonlinearity, u)?;
    let l2 = u.l2_norm();
    if l2 == 0.0 {
        return Err(Error::InvalidParameter("coercivity ratio needs a nonzero field".into()));
    }
    Ok((quad + phi) / l2.powf(p + 1.0))
}

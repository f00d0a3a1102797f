//! Superlinear nonlinearities and their potentials.
//!
//! Three families: the local power `|u|^{p-1} u`, the nonlocal convolution
//! type `(riesz |u|^p) |u|^{p-2} u`, and the competing combination
//! `|u|^{q-1} u -/+ lambda (riesz u^2) u` on the 3-ball. Each nonlinearity is
//! the gradient of its potential under the grid quadrature, which the
//! `gradient_check` operation verifies by central differences.

use crate::error::{Error, Result};
use crate::grid::{Field, OVERFLOW_THRESHOLD};
use crate::operators::riesz_potential;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum SpsSign {
    /// `|u|^{q-1} u - lambda (riesz u^2) u` (repulsive interaction).
    Minus,
    /// `|u|^{q-1} u + lambda (riesz u^2) u`.
    Plus,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum NonlinearitySpec {
    /// Linear runs (debugging / pure heat flow).
    Zero,
    Power { p: f64 },
    Choquard { p: f64, n: u32 },
    Sps { q: f64, lambda: f64, sign: SpsSign },
}

impl NonlinearitySpec {
    pub fn power(p: f64) -> Self {
        NonlinearitySpec::Power { p }
    }

    pub fn choquard(p: f64, n: u32) -> Self {
        NonlinearitySpec::Choquard { p, n }
    }

    pub fn sps(q: f64, lambda: f64) -> Self {
        NonlinearitySpec::Sps { q, lambda, sign: SpsSign::Minus }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            NonlinearitySpec::Zero => Ok(()),
            NonlinearitySpec::Power { p } => {
                if p > 1.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!("power nonlinearity needs p > 1, got {p}")))
                }
            }
            NonlinearitySpec::Choquard { p, n } => {
                if p >= 2.0 && (3..=5).contains(&n) {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!(
                        "convolution nonlinearity needs p >= 2 and 3 <= n <= 5, got p={p}, n={n}"
                    )))
                }
            }
            NonlinearitySpec::Sps { q, lambda, .. } => {
                if q > 1.0 && q <= 5.0 && lambda > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!(
                        "competing nonlinearity needs q in (1, 5] and lambda > 0, got q={q}, lambda={lambda}"
                    )))
                }
            }
        }
    }

    /// Effective superlinear degree: the growth power driving blow-up time
    /// scales and the adaptive step law.
    pub fn growth_degree(&self) -> f64 {
        match *self {
            NonlinearitySpec::Zero => 1.0,
            NonlinearitySpec::Power { p } => p,
            NonlinearitySpec::Choquard { p, .. } => 2.0 * p - 1.0,
            NonlinearitySpec::Sps { q, .. } => q,
        }
    }

    /// Exponent of the norm recorded as `L_{q+1}` along trajectories.
    pub fn lq_exponent(&self) -> f64 {
        match *self {
            NonlinearitySpec::Zero => 2.0,
            NonlinearitySpec::Power { p } => p + 1.0,
            NonlinearitySpec::Choquard { p, .. } => p + 1.0,
            NonlinearitySpec::Sps { q, .. } => q + 1.0,
        }
    }

    pub fn needs_radial3(&self) -> bool {
        matches!(self, NonlinearitySpec::Sps { .. })
    }
}

fn odd_power(v: f64, p: f64) -> f64 {
    // |v|^{p-1} v, with the continuous extension 0 at v = 0.
    if v == 0.0 {
        0.0
    } else {
        v.abs().powf(p - 1.0) * v
    }
}

fn check_overflow(f: &Field) -> Result<()> {
    let m = f.linf();
    if !m.is_finite() || m > OVERFLOW_THRESHOLD {
        Err(Error::Overflow)
    } else {
        Ok(())
    }
}

/// Evaluate the nonlinearity on a field. Odd: `F(-u) = -F(u)`. A field past
/// the overflow threshold (or a non-finite image) comes back as
/// `Error::Overflow`, the blow-up signal; large finite images are fine.
pub fn eval_f(spec: &NonlinearitySpec, u: &Field) -> Result<Field> {
    spec.validate()?;
    check_overflow(u)?;
    let out = match *spec {
        NonlinearitySpec::Zero => Field::zeros(u.grid()),
        NonlinearitySpec::Power { p } => u.map(|v| odd_power(v, p))?,
        NonlinearitySpec::Choquard { p, n } => {
            let density = u.map(|v| v.abs().powf(p))?;
            let potential = riesz_potential(&density, n)?;
            let vals: Vec<f64> = potential
                .values()
                .iter()
                .zip(u.values())
                .map(|(&w, &v)| w * odd_power(v, p - 1.0))
                .collect();
            Field::new(u.grid().clone(), vals)?
        }
        NonlinearitySpec::Sps { q, lambda, sign } => {
            require_radial3(u)?;
            let density = u.map(|v| v * v)?;
            let potential = riesz_potential(&density, 3)?;
            let s = match sign {
                SpsSign::Minus => -1.0,
                SpsSign::Plus => 1.0,
            };
            let vals: Vec<f64> = u
                .values()
                .iter()
                .zip(potential.values())
                .map(|(&v, &w)| odd_power(v, q) + s * lambda * w * v)
                .collect();
            Field::new(u.grid().clone(), vals)?
        }
    };
    Ok(out)
}

fn require_radial3(u: &Field) -> Result<()> {
    if u.grid().is_radial() {
        Ok(())
    } else {
        Err(Error::InvalidParameter("this nonlinearity needs a radial 3-ball grid".into()))
    }
}

/// Potential whose gradient (under the grid quadrature) is `eval_f`.
pub fn eval_potential(spec: &NonlinearitySpec, u: &Field) -> Result<f64> {
    spec.validate()?;
    check_overflow(u)?;
    match *spec {
        NonlinearitySpec::Zero => Ok(0.0),
        NonlinearitySpec::Power { p } => {
            let integrand = u.map(|v| v.abs().powf(p + 1.0))?;
            Ok(integrand.integrate() / (p + 1.0))
        }
        NonlinearitySpec::Choquard { p, n } => {
            // (1/2p) int F(u) u, using the self-adjointness of the kernel.
            let density = u.map(|v| v.abs().powf(p))?;
            let potential = riesz_potential(&density, n)?;
            Ok(potential.dot(&density) / (2.0 * p))
        }
        NonlinearitySpec::Sps { q, lambda, sign } => {
            require_radial3(u)?;
            let w = u.map(|v| v.abs().powf(q + 1.0))?.integrate();
            let i = interaction_integral(u)?;
            let s = match sign {
                SpsSign::Minus => -1.0,
                SpsSign::Plus => 1.0,
            };
            Ok(w / (q + 1.0) + s * lambda / 4.0 * i)
        }
    }
}

/// `I(u) = int int u^2(x) u^2(y) / |x - y| dx dy` on the 3-ball.
pub fn interaction_integral(u: &Field) -> Result<f64> {
    require_radial3(u)?;
    check_overflow(u)?;
    let density = u.map(|v| v * v)?;
    let potential = riesz_potential(&density, 3)?;
    Ok(potential.dot(&density).max(0.0))
}

/// Relative error between the central difference of the potential along `h`
/// and `int F(u) h`.
pub fn gradient_check(spec: &NonlinearitySpec, u: &Field, h: &Field, eps: f64) -> Result<f64> {
    if !(1e-7..=1e-3).contains(&eps) {
        return Err(Error::InvalidParameter(format!("eps must lie in [1e-7, 1e-3], got {eps}")));
    }
    let plus = eval_potential(spec, &u.axpy(eps, h))?;
    let minus = eval_potential(spec, &u.axpy(-eps, h))?;
    let directional = (plus - minus) / (2.0 * eps);
    let pairing = eval_f(spec, u)?.dot(h);
    Ok((directional - pairing).abs() / pairing.abs().max(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::operators::SpectralBasis;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    #[test]
    fn power_is_pointwise() {
        let g = Grid::interval(1.0, 64).unwrap();
        let u = Field::from_fn(&g, |_| 2.0).unwrap();
        let f = eval_f(&NonlinearitySpec::power(3.0), &u).unwrap();
        assert!(f.values().iter().all(|&v| (v - 8.0).abs() < 1e-14));
    }

    #[test]
    fn convolution_nonlinearity_at_unit_density() {
        // p = 2, n = 3, u = 1: F(u)(r) is the Newton potential of 1.
        let g = Grid::radial_ball(1.0, 3, 512).unwrap();
        let u = Field::from_fn(&g, |_| 1.0).unwrap();
        let f = eval_f(&NonlinearitySpec::choquard(2.0, 3), &u).unwrap();
        for (i, &r) in g.nodes().iter().enumerate() {
            let exact = 2.0 * PI * (1.0 - r * r / 3.0);
            assert!((f.values()[i] - exact).abs() <= 1e-4 * exact);
        }
    }

    #[test]
    fn competing_nonlinearity_vanishes_at_zero() {
        let g = Grid::radial_ball(1.0, 3, 64).unwrap();
        let u = Field::zeros(&g);
        let f = eval_f(&NonlinearitySpec::sps(3.5, 1.0), &u).unwrap();
        assert_eq!(f.linf(), 0.0);
        assert_eq!(eval_potential(&NonlinearitySpec::sps(3.5, 1.0), &u).unwrap(), 0.0);
    }

    #[test]
    fn oddness() {
        let g = Grid::radial_ball(1.0, 3, 96).unwrap();
        let u = Field::from_fn(&g, |r| (1.0 - r) * (0.3 + r)).unwrap();
        for spec in [
            NonlinearitySpec::power(2.5),
            NonlinearitySpec::choquard(2.0, 3),
            NonlinearitySpec::sps(2.5, 0.7),
        ] {
            let f_pos = eval_f(&spec, &u).unwrap();
            let f_neg = eval_f(&spec, &u.scale(-1.0)).unwrap();
            for (a, b) in f_pos.values().iter().zip(f_neg.values()) {
                assert!((a + b).abs() <= 1e-12 * (1.0 + a.abs()), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn homogeneity_and_euler_relation() {
        let g = Grid::radial_ball(1.0, 3, 128).unwrap();
        let u = Field::from_fn(&g, |r| (PI * r).cos() * (1.0 - r)).unwrap();
        let c = 1.7;

        let p = 3.0;
        let spec = NonlinearitySpec::power(p);
        let f1 = eval_f(&spec, &u.scale(c)).unwrap();
        let f2 = eval_f(&spec, &u).unwrap().scale(c.powf(p));
        for (a, b) in f1.values().iter().zip(f2.values()) {
            assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()));
        }
        let phi_scaled = eval_potential(&spec, &u.scale(c)).unwrap();
        let phi = eval_potential(&spec, &u).unwrap();
        assert_relative_eq!(phi_scaled, c.powf(p + 1.0) * phi, max_relative = 1e-10);
        // Euler relation: int F(u) u = (p+1) Phi
        let pairing = eval_f(&spec, &u).unwrap().dot(&u);
        assert_relative_eq!(pairing, (p + 1.0) * phi, max_relative = 1e-10);

        let p = 2.0;
        let spec = NonlinearitySpec::choquard(p, 3);
        let phi_scaled = eval_potential(&spec, &u.scale(c)).unwrap();
        let phi = eval_potential(&spec, &u).unwrap();
        assert_relative_eq!(phi_scaled, c.powf(2.0 * p) * phi, max_relative = 1e-10);
        let f1 = eval_f(&spec, &u.scale(c)).unwrap();
        let f2 = eval_f(&spec, &u).unwrap().scale(c.powf(2.0 * p - 1.0));
        for (a, b) in f1.values().iter().zip(f2.values()) {
            assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()));
        }
        let pairing = eval_f(&spec, &u).unwrap().dot(&u);
        assert_relative_eq!(pairing, 2.0 * p * phi, max_relative = 1e-10);
    }

    #[test]
    fn potential_two_evaluation_paths_agree() {
        // (1/2p) int F(u) u matches the double-integral form computed through
        // the potential of |u|^p.
        let g = Grid::radial_ball(1.0, 3, 256).unwrap();
        let u = Field::from_fn(&g, |r| (1.0 - r * r).powi(2)).unwrap();
        let p = 2.0;
        let spec = NonlinearitySpec::choquard(p, 3);
        let phi = eval_potential(&spec, &u).unwrap();
        let pairing = eval_f(&spec, &u).unwrap().dot(&u) / (2.0 * p);
        assert_relative_eq!(phi, pairing, max_relative = 1e-10);
    }

    #[test]
    fn interaction_integral_scaling_and_value() {
        let g = Grid::radial_ball(1.0, 3, 512).unwrap();
        let zero = Field::zeros(&g);
        assert_eq!(interaction_integral(&zero).unwrap(), 0.0);

        let u = Field::from_fn(&g, |_| 1.0).unwrap();
        // I = int 2 pi (1 - r^2/3) dx over the unit ball
        //   = 2 pi (4 pi / 3) - (2 pi / 3) int r^2 dx = 32 pi^2 / 15
        let exact = 32.0 * PI * PI / 15.0;
        let i = interaction_integral(&u).unwrap();
        assert_relative_eq!(i, exact, max_relative = 1e-4);

        let c: f64 = 1.3;
        let i_scaled = interaction_integral(&u.scale(c)).unwrap();
        assert_relative_eq!(i_scaled, c.powi(4) * i, max_relative = 1e-10);
    }

    #[test]
    fn gradient_check_passes_for_all_kinds() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let gi = Grid::interval(1.0, 256).unwrap();
        let bi = SpectralBasis::dirichlet(&gi, 24).unwrap();
        let gr = Grid::radial_ball(1.0, 3, 256).unwrap();
        let br = SpectralBasis::dirichlet(&gr, 24).unwrap();
        let band_limited = |b: &SpectralBasis, rng: &mut rand_chacha::ChaCha8Rng| {
            let coeffs: Vec<f64> =
                (0..b.n_modes()).map(|k| rng.gen_range(-1.0..1.0) / (1.0 + k as f64)).collect();
            b.synthesize(&coeffs)
        };
        for _ in 0..50 {
            let u = band_limited(&bi, &mut rng);
            let h = band_limited(&bi, &mut rng);
            let err = gradient_check(&NonlinearitySpec::power(3.0), &u, &h, 1e-5).unwrap();
            assert!(err <= 1e-5, "power gradient error {err}");
        }
        for _ in 0..50 {
            let u = band_limited(&br, &mut rng);
            let h = band_limited(&br, &mut rng);
            let err = gradient_check(&NonlinearitySpec::choquard(2.0, 3), &u, &h, 1e-5).unwrap();
            assert!(err <= 1e-5, "convolution gradient error {err}");
            let err = gradient_check(&NonlinearitySpec::sps(2.5, 1.0), &u, &h, 1e-5).unwrap();
            assert!(err <= 1e-5, "competing gradient error {err}");
        }
        // h = 0 gives error exactly 0
        let u = band_limited(&bi, &mut rng);
        let z = Field::zeros(&gi);
        assert_eq!(gradient_check(&NonlinearitySpec::power(3.0), &u, &z, 1e-5).unwrap(), 0.0);
    }

    #[test]
    fn overflow_is_a_signal_not_a_panic() {
        let g = Grid::interval(1.0, 64).unwrap();
        let u = Field::from_fn(&g, |_| 2e12).unwrap();
        match eval_f(&NonlinearitySpec::power(3.0), &u) {
            Err(Error::Overflow) => {}
            other => panic!("expected overflow signal, got {other:?}"),
        }
        // large but finite images are not a signal
        let u = Field::from_fn(&g, |_| 1e8).unwrap();
        assert!(eval_f(&NonlinearitySpec::power(3.0), &u).is_ok());
    }

    #[test]
    fn energy_along_rays() {
        // For the competing nonlinearity on H^1-normalised v:
        // q > 3: E(t v) -> -infinity; q in (2,3): E(t v) -> +infinity.
        let g = Grid::radial_ball(1.0, 3, 256).unwrap();
        let v = Field::from_fn(&g, |r| (1.0 - r * r).powi(2)).unwrap();
        let energy_at = |q: f64, t: f64| {
            let spec = NonlinearitySpec::sps(q, 1.0);
            let tv = v.scale(t);
            let kinetic = 0.5 * tv.h1_norm().powi(2);
            kinetic - eval_potential(&spec, &tv).unwrap()
        };
        // q = 3.5: eventually decreasing without bound
        let e1 = energy_at(3.5, 10.0);
        let e2 = energy_at(3.5, 40.0);
        let e3 = energy_at(3.5, 160.0);
        assert!(e2 < e1 && e3 < e2 && e3 < 0.0, "{e1} {e2} {e3}");
        // q = 2.5: the quartic interaction wins, E(tv) -> +infinity
        let f1 = energy_at(2.5, 10.0);
        let f2 = energy_at(2.5, 40.0);
        let f3 = energy_at(2.5, 160.0);
        assert!(f2 > f1 && f3 > f2 && f3 > 0.0, "{f1} {f2} {f3}");
    }
}

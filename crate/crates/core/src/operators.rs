//! Dirichlet Laplacian spectral basis, fractional powers, a 1D restricted
//! fractional Laplacian cross-check, and the Riesz potential.
//!
//! The basis samples the analytic Dirichlet eigenfunctions and then
//! re-orthonormalises them against the grid quadrature (Cholesky of the Gram
//! matrix). On intervals the Gram has a checkerboard parity structure, which
//! the correction preserves, so odd/even symmetry subspaces stay exactly
//! invariant. Eigenvalues are kept analytic.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid, GridKind};

/// Relative tail-energy limit for "resolvable in this basis".
pub const RESOLUTION_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum OperatorFlavor {
    /// Fractional power of the Dirichlet Laplacian through its eigenpairs.
    /// Default: exponential time integration needs a diagonalisable operator.
    Spectral,
    /// Singular-integral operator with exterior zero extension; kept as a
    /// cross-check only (see `restricted_frac_lap_1d`).
    Restricted1d,
}

/// `A u = (-Delta)^alpha u + mu u` on the grid's domain with Dirichlet
/// (exterior zero) conditions.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OperatorSpec {
    pub alpha: f64,
    pub mu: f64,
    pub flavor: OperatorFlavor,
}

impl OperatorSpec {
    pub fn laplacian() -> Self {
        OperatorSpec { alpha: 1.0, mu: 0.0, flavor: OperatorFlavor::Spectral }
    }

    pub fn laplacian_plus_identity() -> Self {
        OperatorSpec { alpha: 1.0, mu: 1.0, flavor: OperatorFlavor::Spectral }
    }

    pub fn fractional(alpha: f64) -> Self {
        OperatorSpec { alpha, mu: 0.0, flavor: OperatorFlavor::Spectral }
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1], got {}", self.alpha)));
        }
        if !(self.mu >= 0.0) {
            return Err(Error::InvalidParameter(format!("mu must be >= 0, got {}", self.mu)));
        }
        if self.flavor == OperatorFlavor::Restricted1d && (self.alpha >= 1.0 || !grid.is_interval()) {
            return Err(Error::InvalidParameter(
                "the restricted flavour needs alpha < 1 and an interval grid".into(),
            ));
        }
        Ok(())
    }

    /// Spectral symbol on eigenvalue `lambda`.
    pub fn symbol(&self, lambda: f64) -> f64 {
        lambda.powf(self.alpha) + self.mu
    }
}

/// Mass-orthonormal Dirichlet eigenpairs of `-Delta` on the grid's domain.
#[derive(Debug, Clone)]
pub struct SpectralBasis {
    grid: Arc<Grid>,
    lambdas: Vec<f64>,
    /// `modes[k][i]`: eigenfunction k at node i (flat, row per mode).
    values: Vec<f64>,
    derivs: Vec<f64>,
    /// Upper-triangular change of basis applied to the analytic samples,
    /// kept so the same functions can be resampled on another grid.
    correction: Vec<f64>,
}

impl SpectralBasis {
    /// Analytic eigenpairs, re-orthonormalised against the grid quadrature.
    /// Needs `k_modes <= n/2`.
    pub fn dirichlet(grid: &Arc<Grid>, k_modes: usize) -> Result<Self> {
        if k_modes == 0 || 2 * k_modes > grid.len() {
            return Err(Error::InvalidParameter(format!(
                "mode count must satisfy 1 <= K <= N/2, got K={k_modes}, N={}",
                grid.len()
            )));
        }
        let mut basis = SpectralBasis::dirichlet_unchecked(grid, k_modes)?;
        basis.orthonormalize()?;
        Ok(basis)
    }

    fn orthonormalize(&mut self) -> Result<()> {
        let k = self.lambdas.len();
        let mut gram = self.gram();
        // On intervals the weights are symmetric about the midpoint, so
        // opposite-parity entries vanish identically; pin them to zero so the
        // Cholesky factor keeps the checkerboard structure.
        if self.grid.is_interval() {
            for j in 0..k {
                for l in 0..k {
                    if (j + l) % 2 == 1 {
                        gram[j * k + l] = 0.0;
                    }
                }
            }
        }
        let off = (0..k)
            .flat_map(|j| (0..k).map(move |l| (j, l)))
            .map(|(j, l)| (gram[j * k + l] - if j == l { 1.0 } else { 0.0 }).abs())
            .fold(0.0f64, f64::max);
        if off < 1e-13 {
            self.correction = identity(k);
            return Ok(());
        }
        let l = cholesky(&gram, k)
            .ok_or_else(|| Error::InvalidParameter("basis Gram matrix is not positive definite".into()))?;
        // New modes: phi_tilde = phi * L^{-T}  (columns of the inverse
        // transpose), which makes the Gram the identity.
        let c = upper_inverse_transpose(&l, k);
        self.apply_correction(&c);
        self.correction = c;
        Ok(())
    }

    fn apply_correction(&mut self, c: &[f64]) {
        let k = self.lambdas.len();
        let n = self.grid.len();
        for mats in [&mut self.values, &mut self.derivs] {
            let old = mats.clone();
            for knew in 0..k {
                for i in 0..n {
                    let mut acc = 0.0;
                    // c is upper triangular: row j, column knew.
                    for j in 0..=knew {
                        acc += old[j * n + i] * c[j * k + knew];
                    }
                    mats[knew * n + i] = acc;
                }
            }
        }
    }

    /// Gram matrix of the current mode samples under the grid quadrature.
    pub fn gram(&self) -> Vec<f64> {
        let k = self.lambdas.len();
        let n = self.grid.len();
        let w = self.grid.weights();
        let mut g = vec![0.0; k * k];
        for j in 0..k {
            for l in j..k {
                let mut acc = 0.0;
                for i in 0..n {
                    acc += w[i] * self.values[j * n + i] * self.values[l * n + i];
                }
                g[j * k + l] = acc;
                g[l * k + j] = acc;
            }
        }
        g
    }

    /// Same eigenfunctions sampled on another grid of the same domain.
    pub fn resample(&self, grid: &Arc<Grid>) -> Result<SpectralBasis> {
        match (self.grid.kind(), grid.kind()) {
            (GridKind::Interval { origin: o1, length: l1 }, GridKind::Interval { origin: o2, length: l2 })
                if o1 == o2 && l1 == l2 => {}
            (GridKind::RadialBall { radius: r1, .. }, GridKind::RadialBall { radius: r2, .. }) if r1 == r2 => {}
            _ => return Err(Error::GridMismatch),
        }
        let k = self.lambdas.len();
        let mut raw = SpectralBasis::dirichlet_unchecked(grid, k)?;
        raw.apply_correction(&self.correction);
        raw.correction = self.correction.clone();
        Ok(raw)
    }

    fn dirichlet_unchecked(grid: &Arc<Grid>, k_modes: usize) -> Result<SpectralBasis> {
        let n = grid.len();
        let mut lambdas = Vec::with_capacity(k_modes);
        let mut values = vec![0.0; k_modes * n];
        let mut derivs = vec![0.0; k_modes * n];
        match *grid.kind() {
            GridKind::Interval { origin, length } => {
                let norm = (2.0 / length).sqrt();
                for k in 1..=k_modes {
                    let a = k as f64 * PI / length;
                    lambdas.push(a * a);
                    for (i, &x) in grid.nodes().iter().enumerate() {
                        let t = a * (x - origin);
                        values[(k - 1) * n + i] = norm * t.sin();
                        derivs[(k - 1) * n + i] = norm * a * t.cos();
                    }
                }
            }
            GridKind::RadialBall { radius, .. } => {
                let norm = 1.0 / (2.0 * PI * radius).sqrt();
                for k in 1..=k_modes {
                    let a = k as f64 * PI / radius;
                    lambdas.push(a * a);
                    for (i, &r) in grid.nodes().iter().enumerate() {
                        let (v, d) = if r == 0.0 {
                            (a, 0.0)
                        } else {
                            let s = (a * r).sin();
                            let c = (a * r).cos();
                            (s / r, (a * r * c - s) / (r * r))
                        };
                        values[(k - 1) * n + i] = norm * v;
                        derivs[(k - 1) * n + i] = norm * d;
                    }
                }
            }
        }
        Ok(SpectralBasis { grid: Arc::clone(grid), lambdas, values, derivs, correction: Vec::new() })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn n_modes(&self) -> usize {
        self.lambdas.len()
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn mode_values(&self, k: usize) -> &[f64] {
        let n = self.grid.len();
        &self.values[k * n..(k + 1) * n]
    }

    pub fn mode(&self, k: usize) -> Field {
        Field::new(Arc::clone(&self.grid), self.mode_values(k).to_vec()).expect("basis samples are finite")
    }

    /// Coefficients of `f` against the orthonormal modes.
    pub fn analyze(&self, f: &Field) -> Result<Vec<f64>> {
        if !f.grid().same_as(&self.grid) {
            return Err(Error::GridMismatch);
        }
        Ok(self.analyze_values(f.values()))
    }

    pub fn analyze_values(&self, vals: &[f64]) -> Vec<f64> {
        let n = self.grid.len();
        let w = self.grid.weights();
        self.lambdas
            .iter()
            .enumerate()
            .map(|(k, _)| {
                let row = &self.values[k * n..(k + 1) * n];
                let mut acc = 0.0;
                for i in 0..n {
                    acc += w[i] * row[i] * vals[i];
                }
                acc
            })
            .collect()
    }

    pub fn synthesize(&self, coeffs: &[f64]) -> Field {
        Field::new(Arc::clone(&self.grid), self.synthesize_values(coeffs)).expect("finite synthesis")
    }

    pub fn synthesize_values(&self, coeffs: &[f64]) -> Vec<f64> {
        let n = self.grid.len();
        let mut out = vec![0.0; n];
        for (k, &c) in coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let row = &self.values[k * n..(k + 1) * n];
            for i in 0..n {
                out[i] += c * row[i];
            }
        }
        out
    }

    pub fn synthesize_derivative_values(&self, coeffs: &[f64]) -> Vec<f64> {
        let n = self.grid.len();
        let mut out = vec![0.0; n];
        for (k, &c) in coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let row = &self.derivs[k * n..(k + 1) * n];
            for i in 0..n {
                out[i] += c * row[i];
            }
        }
        out
    }

    /// Fraction of `|f|_2^2` outside the basis span.
    pub fn tail_fraction(&self, f: &Field) -> Result<f64> {
        let coeffs = self.analyze(f)?;
        let total = f.dot(f);
        if total <= 0.0 {
            return Ok(0.0);
        }
        let captured: f64 = coeffs.iter().map(|c| c * c).sum();
        Ok(((total - captured) / total).max(0.0))
    }
}

fn identity(k: usize) -> Vec<f64> {
    let mut c = vec![0.0; k * k];
    for i in 0..k {
        c[i * k + i] = 1.0;
    }
    c
}

/// Lower Cholesky factor of a symmetric positive definite matrix.
fn cholesky(a: &[f64], k: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..=i {
            let mut sum = a[i * k + j];
            for m in 0..j {
                sum -= l[i * k + m] * l[j * k + m];
            }
            if i == j {
                if sum <= 0.0 {
                    return None;
                }
                l[i * k + i] = sum.sqrt();
            } else {
                l[i * k + j] = sum / l[j * k + j];
            }
        }
    }
    Some(l)
}

/// Inverse transpose of a lower-triangular matrix (result is upper
/// triangular, stored row-major).
fn upper_inverse_transpose(l: &[f64], k: usize) -> Vec<f64> {
    // Column j of L^{-1} solves L x = e_j; it becomes row j of L^{-T}.
    let mut c = vec![0.0; k * k];
    for j in 0..k {
        let mut x = vec![0.0; k];
        for i in 0..k {
            let mut rhs = if i == j { 1.0 } else { 0.0 };
            for m in 0..i {
                rhs -= l[i * k + m] * x[m];
            }
            x[i] = rhs / l[i * k + i];
        }
        c[j * k..(j + 1) * k].copy_from_slice(&x);
    }
    c
}

/// Apply `(-Delta)^alpha + mu` through the basis. The field must be
/// resolvable: tail energy below `RESOLUTION_LIMIT`.
pub fn apply_operator(basis: &SpectralBasis, spec: &OperatorSpec, f: &Field) -> Result<Field> {
    spec.validate(basis.grid())?;
    let coeffs = basis.analyze(f)?;
    let tail = basis.tail_fraction(f)?;
    if tail > RESOLUTION_LIMIT {
        return Err(Error::Resolution { tail, limit: RESOLUTION_LIMIT });
    }
    let scaled: Vec<f64> =
        coeffs.iter().zip(basis.lambdas()).map(|(c, &lam)| c * spec.symbol(lam)).collect();
    Ok(basis.synthesize(&scaled))
}

/// Normalisation constant of the 1D fractional Laplacian,
/// `c(1, alpha) = 4^alpha Gamma(1/2 + alpha) / (sqrt(pi) |Gamma(-alpha)|)`.
pub fn frac_lap_constant_1d(alpha: f64) -> f64 {
    use statrs::function::gamma::gamma;
    // |Gamma(-alpha)| = Gamma(2 - alpha) / (alpha (1 - alpha)) for 0<alpha<1.
    let abs_gamma_neg = gamma(2.0 - alpha) / (alpha * (1.0 - alpha));
    4.0f64.powf(alpha) * gamma(0.5 + alpha) / (PI.sqrt() * abs_gamma_neg)
}

/// Integral (restricted) fractional Laplacian on an interval with exterior
/// zero extension. Singular core by second-difference weighting over one
/// cell, far field by exact product integration of the kernel against the
/// piecewise-linear interpolant, exterior tails in closed form.
pub fn restricted_frac_lap_1d(grid: &Arc<Grid>, f: &Field, alpha: f64) -> Result<Field> {
    if !grid.is_interval() {
        return Err(Error::InvalidParameter("restricted fractional Laplacian needs an interval grid".into()));
    }
    if !f.grid().same_as(grid) {
        return Err(Error::GridMismatch);
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let n = grid.len();
    let h = grid.spacing();
    let x = grid.nodes();
    let u = f.values();
    let c = frac_lap_constant_1d(alpha);
    let two_a = 2.0 * alpha;

    // Kernel moments over [a, b] with 0 < a < b (distances from the centre):
    // m0 = int t^{-1-2a} dt,  m1 = int t^{-2a} dt.
    let m0 = |a: f64, b: f64| (a.powf(-two_a) - b.powf(-two_a)) / two_a;
    let m1 = |a: f64, b: f64| {
        if (two_a - 1.0).abs() < 1e-12 {
            (b / a).ln()
        } else {
            (b.powf(1.0 - two_a) - a.powf(1.0 - two_a)) / (1.0 - two_a)
        }
    };

    let mut out = vec![0.0; n];
    for i in 0..n {
        let ui = u[i];
        // Singular core |y - x_i| <= h: PV kills the odd part, the even part
        // is -u'' h^{2-2a} / (2-2a) with u'' by second differences (exterior
        // zero extension at the ends).
        let um = if i > 0 { u[i - 1] } else { 0.0 };
        let up = if i + 1 < n { u[i + 1] } else { 0.0 };
        let upp = (up - 2.0 * ui + um) / (h * h);
        let mut acc = -upp * h.powf(2.0 - two_a) / (2.0 - two_a);

        // Far field to the right: cells [x_j, x_{j+1}] with j >= i+1.
        for j in (i + 1)..(n - 1) {
            let a = x[j] - x[i];
            let b = x[j + 1] - x[i];
            let q0 = m0(a, b);
            let q1 = m1(a, b);
            // int (u_i - pwl u)(y) k(y - x_i) dy over the cell
            let wa = (b * q0 - q1) / h; // hat weight of u_j
            let wb = (q1 - a * q0) / h; // hat weight of u_{j+1}
            acc += ui * q0 - u[j] * wa - u[j + 1] * wb;
        }
        // Far field to the left: cells [x_{j-1}, x_j] with j <= i-1.
        for j in (1..i.max(1)).rev() {
            let a = x[i] - x[j];
            let b = x[i] - x[j - 1];
            let q0 = m0(a, b);
            let q1 = m1(a, b);
            let wa = (b * q0 - q1) / h; // hat weight of u_j
            let wb = (q1 - a * q0) / h; // hat weight of u_{j-1}
            acc += ui * q0 - u[j] * wa - u[j - 1] * wb;
        }
        // Exterior tails where u = 0 (and the remaining short gap between the
        // last node and the boundary is already inside the loops above since
        // nodes include the endpoints).
        let dist_left = (x[i] - x[0]).max(h);
        let dist_right = (x[n - 1] - x[i]).max(h);
        acc += ui * (dist_left.powf(-two_a) + dist_right.powf(-two_a)) / two_a;

        out[i] = c * acc;
    }
    Field::new(Arc::clone(grid), out)
}

/// Riesz potential `v(x) = int f(y) |x - y|^{-(n-2)} dy`.
///
/// On a 3-ball this is the radial Newton reduction
/// `v(r) = (4 pi / r) int_0^r s^2 f ds + 4 pi int_r^R s f ds`,
/// discretised as an exactly symmetric kernel so the induced bilinear form
/// is self-adjoint. On intervals a soft-core kernel
/// `(t^2 + h^2)^{-(n-2)/2}` stands in for the (non-integrable in 1D)
/// power kernel; `n` is only a kernel parameter there.
pub fn riesz_potential(f: &Field, n_dim: u32) -> Result<Field> {
    if n_dim < 3 {
        return Err(Error::InvalidParameter(format!("Riesz potential needs n >= 3, got {n_dim}")));
    }
    let grid = Arc::clone(f.grid());
    match *grid.kind() {
        GridKind::RadialBall { .. } => {
            if n_dim != 3 {
                return Err(Error::InvalidParameter("radial Newton reduction is implemented for n = 3".into()));
            }
            newton_potential_radial(&grid, f)
        }
        GridKind::Interval { .. } => {
            let h = grid.spacing();
            let sigma = (n_dim - 2) as f64;
            let x = grid.nodes();
            let w = grid.weights();
            let u = f.values();
            let n = grid.len();
            let mut out = vec![0.0; n];
            for i in 0..n {
                let mut acc = 0.0;
                for j in 0..n {
                    let d = x[i] - x[j];
                    acc += w[j] * u[j] * (d * d + h * h).powf(-0.5 * sigma);
                }
                out[i] = acc;
            }
            Field::new(grid, out)
        }
    }
}

/// Symmetric-kernel Newton potential on the radial grid via prefix sums:
/// kernel `1/max(r_i, r_j)` against the quadrature weights, with the centre
/// self-weight chosen so the `r -> 0` limit of the exact reduction is
/// reproduced.
fn newton_potential_radial(grid: &Arc<Grid>, f: &Field) -> Result<Field> {
    let n = grid.len();
    let r = grid.nodes();
    let w = grid.weights();
    let u = f.values();
    let h = grid.spacing();

    // prefix[i] = sum_{j<=i} w_j u_j ; suffix[i] = sum_{j>=i} w_j u_j / r_j
    let mut prefix = vec![0.0; n];
    let mut acc = 0.0;
    for i in 0..n {
        acc += w[i] * u[i];
        prefix[i] = acc;
    }
    let mut suffix = vec![0.0; n + 1];
    for i in (0..n).rev() {
        let kern = if r[i] == 0.0 { 2.0 / h } else { 1.0 / r[i] };
        suffix[i] = suffix[i + 1] + w[i] * u[i] * kern;
    }
    let mut out = vec![0.0; n];
    for i in 0..n {
        if r[i] == 0.0 {
            out[i] = suffix[0];
        } else {
            out[i] = prefix[i] / r[i] + suffix[i + 1];
        }
    }
    Field::new(Arc::clone(grid), out)
}

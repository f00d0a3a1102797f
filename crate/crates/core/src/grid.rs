//! Discrete domains (interval, radial ball), fields on them, quadrature and
//! norms.
//!
//! Interval quadrature is a trapezoid rule with fourth-order Euler-Maclaurin
//! end corrections folded into the weights (exact for cubics, weights stay
//! positive, weights sum to the measure exactly). Radial quadrature
//! integrates the piecewise-linear interpolant exactly against the measure
//! `4 pi r^2 dr`, so the weight sum equals the ball volume to round-off and
//! every weight, including the centre node, is positive.

use std::sync::Arc;

use crate::error::{Error, Result};

/// Norms and evaluations treat magnitudes past this as a blow-up signal.
pub const OVERFLOW_THRESHOLD: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub enum GridKind {
    Interval { origin: f64, length: f64 },
    RadialBall { radius: f64, dim: u32 },
}

#[derive(Debug, Clone)]
pub struct Grid {
    kind: GridKind,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Grid {
    /// Uniform grid on `[0, length]` with `n` nodes (both endpoints included).
    pub fn interval(length: f64, n: usize) -> Result<Arc<Grid>> {
        Self::interval_at(0.0, length, n)
    }

    /// Uniform grid on `[origin, origin + length]`.
    pub fn interval_at(origin: f64, length: f64, n: usize) -> Result<Arc<Grid>> {
        if !(length > 0.0) || !length.is_finite() || !origin.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "interval needs finite origin and positive length, got origin={origin}, length={length}"
            )));
        }
        check_node_count(n)?;
        let h = length / (n - 1) as f64;
        let nodes: Vec<f64> = (0..n).map(|i| origin + i as f64 * h).collect();
        let mut weights = vec![h; n];
        weights[0] = 0.5 * h;
        weights[n - 1] = 0.5 * h;
        // Euler-Maclaurin end correction  + h^2/12 (f'(a) - f'(b))  with the
        // derivatives replaced by 4th-order one-sided stencils. The stencil
        // coefficients sum to zero, so the weight sum stays exactly `length`.
        let c = [-25.0, 48.0, -36.0, 16.0, -3.0];
        for (m, cm) in c.iter().enumerate() {
            weights[m] += h * cm / 144.0;
            weights[n - 1 - m] += h * cm / 144.0;
        }
        Ok(Arc::new(Grid { kind: GridKind::Interval { origin, length }, nodes, weights }))
    }

    /// Uniform radial grid on `[0, radius]` for a ball in `dim` dimensions.
    /// Only `dim = 3` is supported; other dimensions are rejected rather than
    /// approximated.
    pub fn radial_ball(radius: f64, dim: u32, n: usize) -> Result<Arc<Grid>> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidParameter(format!("ball radius must be positive, got {radius}")));
        }
        if dim != 3 {
            return Err(Error::InvalidParameter(format!("radial balls are implemented for dimension 3 only, got {dim}")));
        }
        check_node_count(n)?;
        let h = radius / (n - 1) as f64;
        let nodes: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
        // Exact integrals of the hat functions against 4 pi r^2 dr.
        let quad = |a: f64, b: f64| (b.powi(3) - a.powi(3)) / 3.0;
        let cubic = |a: f64, b: f64| (b.powi(4) - a.powi(4)) / 4.0;
        let four_pi = 4.0 * std::f64::consts::PI;
        let mut weights = vec![0.0; n];
        for i in 0..n {
            let r = nodes[i];
            let mut w = 0.0;
            if i > 0 {
                let a = nodes[i - 1];
                // rising flank: (s - a)/h on [a, r]
                w += (cubic(a, r) - a * quad(a, r)) / h;
            }
            if i + 1 < n {
                let b = nodes[i + 1];
                // falling flank: (b - s)/h on [r, b]
                w += (b * quad(r, b) - cubic(r, b)) / h;
            }
            weights[i] = four_pi * w;
        }
        Ok(Arc::new(Grid { kind: GridKind::RadialBall { radius, dim }, nodes, weights }))
    }

    pub fn kind(&self) -> &GridKind {
        &self.kind
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Node spacing (grids are uniform).
    pub fn spacing(&self) -> f64 {
        self.nodes[1] - self.nodes[0]
    }

    /// Measure of the domain: `L` for intervals, `4/3 pi R^3` for balls.
    pub fn measure(&self) -> f64 {
        match self.kind {
            GridKind::Interval { length, .. } => length,
            GridKind::RadialBall { radius, .. } => 4.0 / 3.0 * std::f64::consts::PI * radius.powi(3),
        }
    }

    pub fn is_interval(&self) -> bool {
        matches!(self.kind, GridKind::Interval { .. })
    }

    pub fn is_radial(&self) -> bool {
        matches!(self.kind, GridKind::RadialBall { .. })
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self.kind == other.kind && self.nodes.len() == other.nodes.len()
    }
}

fn check_node_count(n: usize) -> Result<()> {
    if n < 8 {
        return Err(Error::InvalidParameter(format!("grids need at least 8 nodes, got {n}")));
    }
    Ok(())
}

/// Real-valued function sampled on a grid. Immutable after construction;
/// cheap to share across threads through the `Arc`ed grid.
#[derive(Debug, Clone)]
pub struct Field {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "value count {} does not match grid node count {}",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Overflow);
        }
        Ok(Field { grid, values })
    }

    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Field { grid: Arc::clone(grid), values: vec![0.0; grid.len()] }
    }

    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values: Vec<f64> = grid.nodes().iter().map(|&x| f(x)).collect();
        Field::new(Arc::clone(grid), values)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Quadrature of the field over the domain (with the measure built into
    /// the weights). Exact for constants.
    pub fn integrate(&self) -> f64 {
        dotw(self.grid.weights(), &self.values)
    }

    /// Weighted inner product `int f g`.
    pub fn dot(&self, other: &Field) -> f64 {
        assert!(self.grid.same_as(&other.grid), "fields live on different grids");
        self.grid
            .weights()
            .iter()
            .zip(&self.values)
            .zip(&other.values)
            .map(|((w, a), b)| w * a * b)
            .sum()
    }

    /// `L_q` norm; pass `f64::INFINITY` for the sup norm.
    pub fn lq_norm(&self, q: f64) -> Result<f64> {
        if q.is_infinite() && q > 0.0 {
            return Ok(self.linf());
        }
        if !(q >= 1.0) {
            return Err(Error::InvalidParameter(format!("lq_norm needs q >= 1 or infinity, got {q}")));
        }
        let total: f64 = self
            .grid
            .weights()
            .iter()
            .zip(&self.values)
            .map(|(w, v)| w * v.abs().powf(q))
            .sum();
        Ok(total.powf(1.0 / q))
    }

    pub fn l2_norm(&self) -> f64 {
        self.dot(self).max(0.0).sqrt()
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `sqrt(int(|grad f|^2 + f^2))` with the gradient from centred second
    /// order differences (one-sided at the ends).
    pub fn h1_norm(&self) -> f64 {
        let d = self.fd_derivative();
        let w = self.grid.weights();
        let total: f64 = w
            .iter()
            .zip(&self.values)
            .zip(&d)
            .map(|((w, v), dv)| w * (dv * dv + v * v))
            .sum();
        total.max(0.0).sqrt()
    }

    /// Second-order finite-difference derivative along the coordinate.
    pub fn fd_derivative(&self) -> Vec<f64> {
        let n = self.values.len();
        let h = self.grid.spacing();
        let v = &self.values;
        let mut d = vec![0.0; n];
        d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
        d[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h);
        for i in 1..n - 1 {
            d[i] = (v[i + 1] - v[i - 1]) / (2.0 * h);
        }
        d
    }

    /// Fourth-order finite-difference derivative (used by boundary-sensitive
    /// identity checks).
    pub fn fd_derivative4(&self) -> Vec<f64> {
        let n = self.values.len();
        let h = self.grid.spacing();
        let v = &self.values;
        let mut d = vec![0.0; n];
        let one_sided = |v: &[f64], idx: [usize; 5], sign: f64| {
            sign * (-25.0 * v[idx[0]] + 48.0 * v[idx[1]] - 36.0 * v[idx[2]] + 16.0 * v[idx[3]] - 3.0 * v[idx[4]])
                / (12.0 * h)
        };
        d[0] = one_sided(v, [0, 1, 2, 3, 4], 1.0);
        d[1] = (-3.0 * v[0] - 10.0 * v[1] + 18.0 * v[2] - 6.0 * v[3] + v[4]) / (12.0 * h);
        d[n - 1] = one_sided(v, [n - 1, n - 2, n - 3, n - 4, n - 5], -1.0);
        d[n - 2] = -(-3.0 * v[n - 1] - 10.0 * v[n - 2] + 18.0 * v[n - 3] - 6.0 * v[n - 4] + v[n - 5]) / (12.0 * h);
        for i in 2..n - 2 {
            d[i] = (v[i - 2] - 8.0 * v[i - 1] + 8.0 * v[i + 1] - v[i + 2]) / (12.0 * h);
        }
        d
    }

    /// Number of strict sign alternations along the coordinate. Values with
    /// `|f| <= threshold` are treated as zero and skipped. `None` uses the
    /// default `1e-10 * |f|_inf`.
    pub fn sign_changes(&self, threshold: Option<f64>) -> usize {
        let thr = threshold.unwrap_or(1e-10 * self.linf());
        let mut count = 0;
        let mut last = 0i8;
        for &v in &self.values {
            if v.abs() <= thr {
                continue;
            }
            let s = if v > 0.0 { 1 } else { -1 };
            if last != 0 && s != last {
                count += 1;
            }
            last = s;
        }
        count
    }

    pub fn scale(&self, c: f64) -> Field {
        Field { grid: Arc::clone(&self.grid), values: self.values.iter().map(|v| c * v).collect() }
    }

    pub fn add(&self, other: &Field) -> Field {
        assert!(self.grid.same_as(&other.grid), "fields live on different grids");
        Field {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn axpy(&self, c: f64, other: &Field) -> Field {
        assert!(self.grid.same_as(&other.grid), "fields live on different grids");
        Field {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + c * b).collect(),
        }
    }

    pub fn sub(&self, other: &Field) -> Field {
        self.axpy(-1.0, other)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Field> {
        Field::new(Arc::clone(&self.grid), self.values.iter().map(|&v| f(v)).collect())
    }

    /// Cubic (4-point Lagrange) interpolation at an arbitrary coordinate;
    /// zero outside the domain, matching the exterior Dirichlet extension.
    pub fn eval_cubic(&self, x: f64) -> f64 {
        let nodes = self.grid.nodes();
        let n = nodes.len();
        let a = nodes[0];
        let b = nodes[n - 1];
        if x < a || x > b {
            return 0.0;
        }
        let h = self.grid.spacing();
        let pos = (x - a) / h;
        let i = (pos.floor() as usize).min(n - 2);
        let j0 = i.saturating_sub(1).min(n - 4);
        let t = pos - j0 as f64;
        let v = &self.values[j0..j0 + 4];
        let mut acc = 0.0;
        for (k, &vk) in v.iter().enumerate() {
            let mut lk = 1.0;
            for m in 0..4 {
                if m != k {
                    lk *= (t - m as f64) / (k as f64 - m as f64);
                }
            }
            acc += lk * vk;
        }
        acc
    }
}

fn dotw(w: &[f64], v: &[f64]) -> f64 {
    w.iter().zip(v).map(|(w, v)| w * v).sum()
}

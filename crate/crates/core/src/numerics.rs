//! Numerical kernels shared by the rest of the crate: uniform lattices,
//! running trapezoidal integrals, Lagrange differentiation on equispaced
//! time nodes and local least-squares polynomial smoothing.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result, Warning};

/// Relative edge amplitude above which the decay assumption behind
/// cumulative integrals is reported as violated.
pub const EDGE_TOLERANCE: f64 = 1e-8;

/// Reduced Planck constant and particle mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawConstants")]
pub struct PhysicalConstants {
    hbar: f64,
    mass: f64,
}

#[derive(Deserialize)]
struct RawConstants {
    hbar: f64,
    mass: f64,
}

impl TryFrom<RawConstants> for PhysicalConstants {
    type Error = Error;

    fn try_from(raw: RawConstants) -> Result<Self> {
        PhysicalConstants::new(raw.hbar, raw.mass)
    }
}

impl PhysicalConstants {
    pub fn new(hbar: f64, mass: f64) -> Result<Self> {
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::InvalidConstants(format!("hbar must be positive, got {hbar}")));
        }
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::InvalidConstants(format!("mass must be positive, got {mass}")));
        }
        Ok(PhysicalConstants { hbar, mass })
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }
}

/// Natural units, `ħ = μ = 1`.
impl Default for PhysicalConstants {
    fn default() -> Self {
        PhysicalConstants { hbar: 1.0, mass: 1.0 }
    }
}

/// Uniform position lattice `x_min, …, x_max` with `n_points` samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid")]
pub struct SpatialGrid {
    x_min: f64,
    x_max: f64,
    n_points: usize,
}

#[derive(Deserialize)]
struct RawGrid {
    x_min: f64,
    x_max: f64,
    n_points: usize,
}

impl TryFrom<RawGrid> for SpatialGrid {
    type Error = Error;

    fn try_from(raw: RawGrid) -> Result<Self> {
        SpatialGrid::new(raw.x_min, raw.x_max, raw.n_points)
    }
}

impl SpatialGrid {
    pub const MIN_POINTS: usize = 8;

    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite()) || x_min >= x_max {
            return Err(Error::InvalidGrid(format!("need x_min < x_max, got [{x_min}, {x_max}]")));
        }
        if n_points < Self::MIN_POINTS {
            return Err(Error::InvalidGrid(format!(
                "need at least {} points, got {n_points}",
                Self::MIN_POINTS
            )));
        }
        Ok(SpatialGrid { x_min, x_max, n_points })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n_points - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.n_points {
            self.x_max
        } else {
            self.x_min + i as f64 * self.spacing()
        }
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(|i| self.point(i))
    }

    /// Index of the lattice point closest to `x`, clamped to the grid.
    pub fn nearest_index(&self, x: f64) -> usize {
        let i = ((x - self.x_min) / self.spacing()).round();
        i.clamp(0.0, (self.n_points - 1) as f64) as usize
    }
}

/// Equispaced sampling times `t_0 + j·dt`, `j = 0, …, m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTimes")]
pub struct TimeNodes {
    #[serde(rename = "t_0")]
    t0: f64,
    dt: f64,
    #[serde(rename = "m_plus_1")]
    count: usize,
}

#[derive(Deserialize)]
struct RawTimes {
    #[serde(rename = "t_0")]
    t0: f64,
    dt: f64,
    #[serde(rename = "m_plus_1")]
    count: usize,
}

impl TryFrom<RawTimes> for TimeNodes {
    type Error = Error;

    fn try_from(raw: RawTimes) -> Result<Self> {
        TimeNodes::new(raw.t0, raw.dt, raw.count)
    }
}

impl TimeNodes {
    /// `count` is the number of nodes, `m + 1`.
    pub fn new(t0: f64, dt: f64, count: usize) -> Result<Self> {
        if !t0.is_finite() {
            return Err(Error::InvalidTimeNodes(format!("t0 must be finite, got {t0}")));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidTimeNodes(format!("dt must be positive, got {dt}")));
        }
        if count == 0 {
            return Err(Error::InvalidTimeNodes("need at least one node".into()));
        }
        Ok(TimeNodes { t0, dt, count })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Highest polynomial degree supported by the nodes, `m`.
    pub fn degree(&self) -> usize {
        self.count - 1
    }

    pub fn time(&self, j: usize) -> f64 {
        self.t0 + j as f64 * self.dt
    }

    /// `floor(m / 2)`; for an even node count this is the left of the two
    /// middle nodes.
    pub fn central_index(&self) -> usize {
        self.degree() / 2
    }
}

/// Real samples on a [`SpatialGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    grid: SpatialGrid,
    values: Vec<f64>,
}

impl GridField {
    pub fn new(grid: SpatialGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), actual: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite value at index {i}")));
        }
        Ok(GridField { grid, values })
    }

    pub fn zeros(grid: SpatialGrid) -> Self {
        GridField { grid, values: vec![0.0; grid.len()] }
    }

    pub fn from_fn(grid: SpatialGrid, f: impl Fn(f64) -> f64) -> Self {
        GridField { grid, values: grid.points().map(f).collect() }
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `α·self + β·other`.
    pub fn combine(&self, alpha: f64, other: &GridField, beta: f64) -> Result<GridField> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| alpha * a + beta * b)
            .collect();
        Ok(GridField { grid: self.grid, values })
    }

    pub fn scaled(&self, alpha: f64) -> GridField {
        GridField { grid: self.grid, values: self.values.iter().map(|v| alpha * v).collect() }
    }

    /// Trapezoidal integral over the whole grid.
    pub fn integral(&self) -> f64 {
        let n = self.values.len();
        let inner: f64 = self.values[1..n - 1].iter().sum();
        self.grid.spacing() * (inner + 0.5 * (self.values[0] + self.values[n - 1]))
    }

    /// Larger of `|f(x_min)|` and `|f(x_max)|` relative to `max |f|`; 0 for a
    /// vanishing field.
    pub fn edge_ratio(&self) -> f64 {
        let max = self.max_abs();
        if max == 0.0 {
            return 0.0;
        }
        let edge = self.values[0].abs().max(self.values[self.values.len() - 1].abs());
        edge / max
    }
}

/// Running trapezoidal integral `F(x_j) = ∫_{x_min}^{x_j} f`, with
/// `F(x_min) = 0`.
pub fn cumulative_integral(f: &GridField) -> GridField {
    let half_dx = 0.5 * f.grid.spacing();
    let mut acc = 0.0;
    let mut values = Vec::with_capacity(f.values.len());
    values.push(0.0);
    for w in f.values.windows(2) {
        acc += half_dx * (w[0] + w[1]);
        values.push(acc);
    }
    GridField { grid: f.grid, values }
}

/// Reports when `f` has not decayed at the grid edges, which breaks the
/// `x_min ≈ −∞` assumption of [`cumulative_integral`].
pub fn decay_warning(f: &GridField, edge_tolerance: f64) -> Option<Warning> {
    let ratio = f.edge_ratio();
    (ratio > edge_tolerance).then_some(Warning::EdgeDecay { ratio })
}

/// Barycentric weights of equispaced nodes, `(−1)^j·C(m, j)`.
fn equispaced_weights(m: usize) -> Vec<f64> {
    let mut w = Vec::with_capacity(m + 1);
    let mut binom = 1.0;
    for j in 0..=m {
        w.push(if j % 2 == 0 { binom } else { -binom });
        binom = binom * (m - j) as f64 / (j + 1) as f64;
    }
    w
}

/// Lagrange differentiation matrix on the nodes: row `j` holds the
/// derivatives at `t_j` of the cardinal polynomials, so `D·samples` is the
/// exact derivative of the degree-`m` interpolant at every node.
pub fn differentiation_matrix(nodes: &TimeNodes) -> Result<DMatrix<f64>> {
    let m = nodes.degree();
    if m < 1 {
        return Err(Error::InvalidTimeNodes(
            "differentiation needs at least two nodes".into(),
        ));
    }
    let w = equispaced_weights(m);
    let h = nodes.dt();
    let mut d = DMatrix::zeros(m + 1, m + 1);
    for i in 0..=m {
        let mut diag = 0.0;
        for j in (0..=m).filter(|&j| j != i) {
            let entry = (w[j] / w[i]) / ((i as f64 - j as f64) * h);
            d[(i, j)] = entry;
            diag -= entry;
        }
        d[(i, i)] = diag;
    }
    Ok(d)
}

/// Central finite-difference weights for the `order`-th derivative on the
/// `2·half_width + 1` points `−half_width·h, …, half_width·h`. Obtained as
/// the middle row of `Dᵒʳᵈᵉʳ` for the Lagrange matrix on those points.
pub fn central_stencil(order: usize, half_width: usize, h: f64) -> Result<Vec<f64>> {
    let count = 2 * half_width + 1;
    if order >= count {
        return Err(Error::InvalidArgument(format!(
            "derivative order {order} needs more than {count} points"
        )));
    }
    let nodes = TimeNodes::new(-(half_width as f64) * h, h, count)?;
    let d = differentiation_matrix(&nodes)?;
    let mut row = DMatrix::<f64>::zeros(1, count);
    row[(0, half_width)] = 1.0;
    for _ in 0..order {
        row = &row * &d;
    }
    Ok(row.iter().copied().collect())
}

/// Spatial derivative by the fourth-order five-point central difference.
/// The two points nearest each edge fall back to second-order formulas.
pub fn spatial_derivative(f: &GridField) -> GridField {
    let v = &f.values;
    let n = v.len();
    let h = f.grid.spacing();
    let mut d = vec![0.0; n];
    d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
    d[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h);
    d[1] = (v[2] - v[0]) / (2.0 * h);
    d[n - 2] = (v[n - 1] - v[n - 3]) / (2.0 * h);
    for i in 2..n - 2 {
        d[i] = (-v[i + 2] + 8.0 * v[i + 1] - 8.0 * v[i - 1] + v[i - 2]) / (12.0 * h);
    }
    GridField { grid: f.grid, values: d }
}

/// Weights that evaluate, at `target`, the least-squares polynomial of the
/// given degree through window points `0..window`.
fn local_fit_weights(window: usize, degree: usize, target: usize) -> Vec<f64> {
    let half = (window as f64 - 1.0) / 2.0;
    let scale = if half > 0.0 { half } else { 1.0 };
    let vander = DMatrix::from_fn(window, degree + 1, |r, c| {
        ((r as f64 - target as f64) / scale).powi(c as i32)
    });
    // Row 0 of the pseudo-inverse gives the constant coefficient, which is the
    // fit's value at the target since coordinates are centered there.
    let normal = vander.transpose() * &vander;
    let chol = normal
        .cholesky()
        .expect("Vandermonde of distinct points with degree < window has full rank");
    let mut e0 = DVector::zeros(degree + 1);
    e0[0] = 1.0;
    let coef = chol.solve(&e0);
    (&vander * coef).iter().copied().collect()
}

/// Replaces each sample by the value of the least-squares polynomial of
/// `degree` fitted over a centered `window`; near the edges the window is
/// shifted inside the grid.
pub fn smooth_local_poly(f: &GridField, window: usize, degree: usize) -> Result<GridField> {
    let n = f.values.len();
    if window.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("smoothing window must be odd, got {window}")));
    }
    if degree >= window {
        return Err(Error::InvalidArgument(format!(
            "smoothing degree {degree} must be below the window {window}"
        )));
    }
    if window > n {
        return Err(Error::InvalidArgument(format!(
            "smoothing window {window} exceeds the grid size {n}"
        )));
    }
    let half = window / 2;
    let centered = local_fit_weights(window, degree, half);
    let edge_weights: Vec<Vec<f64>> =
        (0..half).map(|t| local_fit_weights(window, degree, t)).collect();

    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let (start, weights) = if i < half {
            (0, &edge_weights[i])
        } else if i + half >= n {
            (n - window, &edge_weights[n - 1 - i])
        } else {
            (i - half, &centered)
        };
        let value = if i + half >= n && i >= half {
            // Mirror image of the left-edge weights.
            weights
                .iter()
                .rev()
                .zip(&f.values[start..start + window])
                .map(|(w, v)| w * v)
                .sum()
        } else {
            weights.iter().zip(&f.values[start..start + window]).map(|(w, v)| w * v).sum()
        };
        out.push(value);
    }
    GridField::new(f.grid, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn unit_grid(n: usize) -> SpatialGrid {
        SpatialGrid::new(0.0, 1.0, n).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(SpatialGrid::new(1.0, 0.0, 10).is_err());
        assert!(SpatialGrid::new(0.0, 1.0, 7).is_err());
        assert!(SpatialGrid::new(0.0, f64::NAN, 10).is_err());
        let g = SpatialGrid::new(-1.0, 1.0, 201).unwrap();
        assert_abs_diff_eq!(g.spacing(), 0.01, epsilon = 1e-15);
        assert_eq!(g.point(200), 1.0);
        assert_eq!(g.nearest_index(0.0), 100);
    }

    #[test]
    fn constants_and_nodes_validation() {
        assert!(PhysicalConstants::new(0.0, 1.0).is_err());
        assert!(PhysicalConstants::new(1.0, -1.0).is_err());
        assert!(TimeNodes::new(0.0, 0.0, 3).is_err());
        assert!(TimeNodes::new(0.0, 0.1, 0).is_err());
        let t = TimeNodes::new(1.0, 0.5, 6).unwrap();
        assert_eq!(t.central_index(), 2);
        assert_eq!(t.time(2), 2.0);
    }

    #[test]
    fn cumulative_of_zero_and_one() {
        let g = unit_grid(101);
        let zero = cumulative_integral(&GridField::zeros(g));
        assert!(zero.values().iter().all(|&v| v == 0.0));

        let one = cumulative_integral(&GridField::from_fn(g, |_| 1.0));
        for (x, f) in g.points().zip(one.values()) {
            assert_abs_diff_eq!(*f, x, epsilon = 1e-14);
        }
    }

    #[test]
    fn cumulative_of_cat_density_reaches_norm() {
        // Reference from 30-digit adaptive quadrature of the cat-state diagonal
        // over the whole line: 2σ√(2π)(1 + e^{−2k₀²σ²}).
        const NORM: f64 = 3.546_096_885_864_353_4;
        let k0 = 2.0 * 2f64.sqrt();
        let g = SpatialGrid::new(-8.0, 8.0, 1024).unwrap();
        let f = GridField::from_fn(g, |x| {
            (-x * x / (2.0 * 0.5)).exp() * 2.0 * ((2.0 * k0 * x).cos() + 1.0)
        });
        let c = cumulative_integral(&f);
        assert_eq!(c.values()[0], 0.0);
        assert_abs_diff_eq!(c.values()[1023], NORM, epsilon = 1e-12);
        assert!(decay_warning(&f, EDGE_TOLERANCE).is_none());
    }

    #[test]
    fn edge_decay_is_reported() {
        let g = unit_grid(50);
        let f = GridField::from_fn(g, |x| 1.0 + x);
        assert!(matches!(decay_warning(&f, EDGE_TOLERANCE), Some(Warning::EdgeDecay { .. })));
    }

    #[test]
    fn differentiation_matrix_small_cases() {
        let h = 0.25;
        let d1 = differentiation_matrix(&TimeNodes::new(0.0, h, 2).unwrap()).unwrap();
        for row in 0..2 {
            assert_abs_diff_eq!(d1[(row, 0)], -1.0 / h, epsilon = 1e-14);
            assert_abs_diff_eq!(d1[(row, 1)], 1.0 / h, epsilon = 1e-14);
        }
        let d2 = differentiation_matrix(&TimeNodes::new(0.0, h, 3).unwrap()).unwrap();
        assert_abs_diff_eq!(d2[(1, 0)], -1.0 / (2.0 * h), epsilon = 1e-14);
        assert_abs_diff_eq!(d2[(1, 1)], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(d2[(1, 2)], 1.0 / (2.0 * h), epsilon = 1e-14);
        assert!(differentiation_matrix(&TimeNodes::new(0.0, h, 1).unwrap()).is_err());
    }

    #[test]
    fn differentiation_matrix_reproduces_quartic_derivative() {
        let h = 0.3;
        let nodes = TimeNodes::new(0.0, h, 5).unwrap();
        let d = differentiation_matrix(&nodes).unwrap();
        let samples = DVector::from_fn(5, |j, _| nodes.time(j).powi(4));
        let deriv = &d * samples;
        for j in 0..5 {
            let t = nodes.time(j);
            assert_abs_diff_eq!(deriv[j], 4.0 * t.powi(3), epsilon = 1e-12);
        }
    }

    #[test]
    fn differentiation_matrix_rows_annihilate_constants_and_are_exact_on_monomials() {
        let dt = 0.01;
        for count in 2..=9 {
            let nodes = TimeNodes::new(0.0, dt, count).unwrap();
            let d = differentiation_matrix(&nodes).unwrap();
            for i in 0..count {
                let s: f64 = d.row(i).iter().sum();
                assert!(s.abs() < 1e-12 / dt, "row {i} sums to {s}");
            }
            for k in 1..count {
                let samples = DVector::from_fn(count, |j, _| nodes.time(j).powi(k as i32));
                let deriv = &d * samples;
                let scale = k as f64 * nodes.time(count - 1).powi(k as i32 - 1);
                for j in 0..count {
                    let t = nodes.time(j);
                    let exact = k as f64 * t.powi(k as i32 - 1);
                    let rel = (deriv[j] - exact).abs() / scale;
                    assert!(rel < 1e-10, "m={} k={k} node {j}: rel {rel:e}", count - 1);
                }
            }
        }
    }

    #[test]
    fn central_stencil_matches_textbook() {
        let w = central_stencil(2, 1, 1.0).unwrap();
        assert_abs_diff_eq!(w.as_slice(), [1.0, -2.0, 1.0].as_slice(), epsilon = 1e-14);
        let w = central_stencil(1, 2, 1.0).unwrap();
        let expected = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];
        assert_abs_diff_eq!(w.as_slice(), expected.as_slice(), epsilon = 1e-14);
        assert!(central_stencil(3, 1, 1.0).is_err());
    }

    #[test]
    fn five_point_derivative_of_cubic_is_exact_inside() {
        let g = SpatialGrid::new(-1.0, 1.0, 41).unwrap();
        let f = GridField::from_fn(g, |x| x * x * x - 2.0 * x);
        let d = spatial_derivative(&f);
        for (i, x) in g.points().enumerate().skip(2).take(37) {
            assert_abs_diff_eq!(d.values()[i], 3.0 * x * x - 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn smoothing_identity_and_polynomial_reproduction() {
        let g = SpatialGrid::new(-2.0, 2.0, 64).unwrap();
        let f = GridField::from_fn(g, |x| (3.0 * x).sin());
        assert_eq!(smooth_local_poly(&f, 1, 0).unwrap(), f);

        let p = GridField::from_fn(g, |x| 1.0 - 2.0 * x + 0.5 * x * x);
        let s = smooth_local_poly(&p, 7, 2).unwrap();
        for (a, b) in s.values().iter().zip(p.values()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn smoothing_rejects_bad_windows() {
        let f = GridField::zeros(unit_grid(20));
        assert!(smooth_local_poly(&f, 4, 1).is_err());
        assert!(smooth_local_poly(&f, 5, 5).is_err());
        assert!(smooth_local_poly(&f, 21, 2).is_err());
    }

    #[test]
    fn smoothing_reduces_noise_on_gaussian() {
        use rand_like::Lcg;
        let g = SpatialGrid::new(-5.0, 5.0, 512).unwrap();
        let clean = GridField::from_fn(g, |x| (-x * x).exp());
        let mut rng = Lcg(12345);
        let noisy = GridField::new(
            g,
            clean.values().iter().map(|v| v + 1e-2 * (2.0 * rng.next() - 1.0)).collect(),
        )
        .unwrap();
        let smooth = smooth_local_poly(&noisy, 11, 3).unwrap();
        let rms = |a: &GridField| {
            let s: f64 = a.values().iter().zip(clean.values()).map(|(x, y)| (x - y).powi(2)).sum();
            (s / a.values().len() as f64).sqrt()
        };
        assert!(rms(&smooth) < rms(&noisy), "{} vs {}", rms(&smooth), rms(&noisy));
    }

    mod rand_like {
        /// Tiny deterministic uniform generator for test noise.
        pub struct Lcg(pub u64);

        impl Lcg {
            pub fn next(&mut self) -> f64 {
                self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (self.0 >> 11) as f64 / (1u64 << 53) as f64
            }
        }
    }

    proptest! {
        #[test]
        fn cumulative_integral_is_linear(
            a in -3.0f64..3.0,
            b in -3.0f64..3.0,
            fv in proptest::collection::vec(-1.0f64..1.0, 32),
            gv in proptest::collection::vec(-1.0f64..1.0, 32),
        ) {
            let grid = SpatialGrid::new(-1.0, 2.0, 32).unwrap();
            let f = GridField::new(grid, fv).unwrap();
            let g = GridField::new(grid, gv).unwrap();
            let lhs = cumulative_integral(&f.combine(a, &g, b).unwrap());
            let rhs = cumulative_integral(&f).combine(a, &cumulative_integral(&g), b).unwrap();
            for (l, r) in lhs.values().iter().zip(rhs.values()) {
                prop_assert!((l - r).abs() < 1e-13);
            }
        }

        #[test]
        fn smoothing_is_idempotent_on_low_degree_polynomials(
            c in proptest::collection::vec(-2.0f64..2.0, 3),
            half in 1usize..6,
        ) {
            let grid = SpatialGrid::new(-1.0, 1.0, 40).unwrap();
            let p = GridField::from_fn(grid, |x| c[0] + c[1] * x + c[2] * x * x);
            let window = 2 * half + 1;
            let once = smooth_local_poly(&p, window, 2).unwrap();
            let twice = smooth_local_poly(&once, window, 2).unwrap();
            for ((a, b), e) in once.values().iter().zip(twice.values()).zip(p.values()) {
                prop_assert!((a - e).abs() < 1e-11);
                prop_assert!((a - b).abs() < 1e-11);
            }
        }
    }
}

//! Ground truth for the reconstruction: wave-packet preparation,
//! split-operator propagation, and oracles that do not go through the moment
//! recursion (exact density matrix, discrete Wigner transform and its
//! momentum moments, closed-form cat-state moments).

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::numerics::{GridField, PhysicalConstants, SpatialGrid, TimeNodes};
use crate::potentials::Potential;
use crate::{Error, Result, Warning};

/// Maximum relative change of `∫|ψ|²` allowed in a single step.
pub const NORM_DRIFT_TOLERANCE: f64 = 1e-10;
/// Edge amplitude, relative to `max |ψ|`, treated as wrap-around.
pub const WRAP_TOLERANCE: f64 = 1e-8;
/// Relative imaginary residue of the Wigner transform that gets flagged.
pub const WIGNER_IMAG_TOLERANCE: f64 = 1e-8;
/// Relative size of the `pⁿ W` integrand at the momentum edge that gets flagged.
pub const MOMENTUM_EDGE_TOLERANCE: f64 = 1e-10;

/// Sampled wave function. The norm is whatever the amplitudes integrate to;
/// nothing is normalized behind the caller's back.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    grid: SpatialGrid,
    amplitudes: Vec<Complex64>,
    time: f64,
}

impl WaveFunction {
    pub fn new(grid: SpatialGrid, amplitudes: Vec<Complex64>, time: f64) -> Result<Self> {
        if amplitudes.len() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), actual: amplitudes.len() });
        }
        if amplitudes.iter().any(|a| !(a.re.is_finite() && a.im.is_finite())) || !time.is_finite()
        {
            return Err(Error::InvalidArgument("wave function must be finite".into()));
        }
        Ok(WaveFunction { grid, amplitudes, time })
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// `∫|ψ|² dx` by the trapezoidal rule.
    pub fn norm(&self) -> f64 {
        probability_density(self).integral()
    }

    /// Linear interpolation of `ψ` at `x`; `None` outside the grid.
    pub fn interpolate(&self, x: f64) -> Option<Complex64> {
        let pos = (x - self.grid.x_min()) / self.grid.spacing();
        let last = (self.grid.len() - 1) as f64;
        if !(-1e-9..=last + 1e-9).contains(&pos) {
            return None;
        }
        let nearest = pos.round();
        if (pos - nearest).abs() < 1e-9 {
            return Some(self.amplitudes[nearest as usize]);
        }
        let i = pos.floor() as usize;
        let frac = pos - i as f64;
        Some(self.amplitudes[i] * (1.0 - frac) + self.amplitudes[i + 1] * frac)
    }
}

/// Width and wavenumber of the two-component superposition
/// `e^{−(x/2σ)² + ik₀x} + e^{−(x/2σ)² − ik₀x}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CatStateParams {
    pub sigma: f64,
    pub k0: f64,
}

impl CatStateParams {
    pub fn new(sigma: f64, k0: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) || !k0.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "cat state needs sigma > 0 and finite k0, got sigma={sigma}, k0={k0}"
            )));
        }
        Ok(CatStateParams { sigma, k0 })
    }

    /// Exact `⟨x+y|ρ|x−y⟩ = 2 e^{−(x²+y²)/2σ²} [cos 2k₀x + cos 2k₀y]`.
    pub fn density_matrix(&self, x: f64, y: f64) -> f64 {
        let s2 = self.sigma * self.sigma;
        2.0 * (-(x * x + y * y) / (2.0 * s2)).exp()
            * ((2.0 * self.k0 * x).cos() + (2.0 * self.k0 * y).cos())
    }

    /// `∫|ψ|² dx = 2σ√(2π)(1 + e^{−2k₀²σ²})`.
    pub fn norm(&self) -> f64 {
        2.0 * self.sigma
            * (2.0 * PI).sqrt()
            * (1.0 + (-2.0 * self.k0 * self.k0 * self.sigma * self.sigma).exp())
    }

    /// Closed-form hydrodynamical moment `f_n(x)`, from the `n`-th
    /// `y`-derivative of the exact density matrix at `y = 0`. Odd orders
    /// vanish because the density matrix is real.
    pub fn moment(&self, order: usize, x: f64, hbar: f64) -> f64 {
        if order % 2 == 1 {
            return 0.0;
        }
        let inv_s2 = 1.0 / (self.sigma * self.sigma);
        let wave = 2.0 * self.k0;
        // |g⁽ˡ⁾(0)| = (l−1)!!/σˡ for g = e^{−y²/2σ²}; |h⁽ʳ⁾(0)| = (2k₀)ʳ for
        // h = cos 2k₀y. Every even-l product carries the same sign, (−1)^{n/2},
        // which cancels against (ħ/2i)ⁿ.
        let gauss: Vec<f64> = (0..=order / 2)
            .scan(1.0, |acc, j| {
                if j > 0 {
                    *acc *= (2 * j - 1) as f64 * inv_s2;
                }
                Some(*acc)
            })
            .collect();
        let mut product_rule = 0.0;
        let mut binom = 1.0;
        for l in 0..=order {
            if l % 2 == 0 {
                product_rule += binom * gauss[l / 2] * wave.powi((order - l) as i32);
            }
            binom = binom * (order - l) as f64 / (l + 1) as f64;
        }
        let bracket = (wave * x).cos() * gauss[order / 2] + product_rule;
        let envelope = 2.0 * (-x * x * inv_s2 / 2.0).exp();
        (hbar / 2.0).powi(order as i32) * envelope * bracket
    }

    pub fn moment_field(&self, order: usize, grid: SpatialGrid, hbar: f64) -> GridField {
        GridField::from_fn(grid, |x| self.moment(order, x, hbar))
    }

    /// Largest off-diagonal spacing for which the Nyquist momentum `ħ/(2Δy)`
    /// covers four times `ħk₀ + ħ/σ`.
    pub fn recommended_offdiagonal_spacing(&self) -> f64 {
        1.0 / (8.0 * (self.k0.abs() + 1.0 / self.sigma))
    }
}

/// Parameters quoted in the original cat-state illustration,
/// `σ = 1/√2`, `k₀ = 2√2`.
impl Default for CatStateParams {
    fn default() -> Self {
        CatStateParams { sigma: std::f64::consts::FRAC_1_SQRT_2, k0: 2.0 * std::f64::consts::SQRT_2 }
    }
}

fn check_span(grid: &SpatialGrid, center: f64, sigma: f64) -> Result<()> {
    let required = 4.0 * sigma;
    if grid.x_min() > center - required || grid.x_max() < center + required {
        return Err(Error::GridTooNarrow { x_min: grid.x_min(), x_max: grid.x_max(), required });
    }
    Ok(())
}

/// Unnormalized cat state `e^{−(x/2σ)²}·2cos(k₀x)` at `t = 0`.
pub fn make_cat_state(params: &CatStateParams, grid: SpatialGrid) -> Result<WaveFunction> {
    check_span(&grid, 0.0, params.sigma)?;
    let amplitudes = grid
        .points()
        .map(|x| {
            let env = (-(x / (2.0 * params.sigma)).powi(2)).exp();
            Complex64::new(env * 2.0 * (params.k0 * x).cos(), 0.0)
        })
        .collect();
    WaveFunction::new(grid, amplitudes, 0.0)
}

/// `e^{−(x−x₀)²/4σ² + ik₀x}` at `t = 0`: a packet at its waist with
/// position spread σ and mean momentum `ħk₀`.
pub fn make_gaussian_state(sigma: f64, x0: f64, k0: f64, grid: SpatialGrid) -> Result<WaveFunction> {
    if !(sigma.is_finite() && sigma > 0.0) || !x0.is_finite() || !k0.is_finite() {
        return Err(Error::InvalidArgument("gaussian needs sigma > 0 and finite x0, k0".into()));
    }
    check_span(&grid, x0, sigma)?;
    let amplitudes = grid
        .points()
        .map(|x| {
            let u = (x - x0) / (2.0 * sigma);
            Complex64::from_polar((-u * u).exp(), k0 * x)
        })
        .collect();
    WaveFunction::new(grid, amplitudes, 0.0)
}

/// Harmonic-oscillator coherent state: ground-state width `√(ħ/2μω)`,
/// displaced to `x₀` with momentum `p₀`.
pub fn make_coherent_state(
    omega: f64,
    x0: f64,
    p0: f64,
    constants: &PhysicalConstants,
    grid: SpatialGrid,
) -> Result<WaveFunction> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::InvalidArgument(format!("coherent state needs omega > 0, got {omega}")));
    }
    let sigma = (constants.hbar() / (2.0 * constants.mass() * omega)).sqrt();
    make_gaussian_state(sigma, x0, p0 / constants.hbar(), grid)
}

/// Preparation recipes for the simulator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum InitialState {
    Cat { sigma: f64, k0: f64 },
    Gaussian { sigma: f64, x0: f64, k0: f64 },
    Coherent { omega: f64, x0: f64, p0: f64 },
}

impl InitialState {
    pub fn prepare(&self, grid: SpatialGrid, constants: &PhysicalConstants) -> Result<WaveFunction> {
        match *self {
            InitialState::Cat { sigma, k0 } => make_cat_state(&CatStateParams::new(sigma, k0)?, grid),
            InitialState::Gaussian { sigma, x0, k0 } => make_gaussian_state(sigma, x0, k0, grid),
            InitialState::Coherent { omega, x0, p0 } => {
                make_coherent_state(omega, x0, p0, constants, grid)
            }
        }
    }
}

/// `|ψ(x)|²`.
pub fn probability_density(psi: &WaveFunction) -> GridField {
    GridField::new(psi.grid, psi.amplitudes.iter().map(|a| a.norm_sqr()).collect())
        .expect("amplitudes are finite and match the grid")
}

/// Strang split-operator stepper on a periodic FFT grid.
pub struct Propagator<'a, P: Potential + ?Sized> {
    potential: &'a P,
    constants: PhysicalConstants,
    grid: SpatialGrid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    wavenumbers: Vec<f64>,
    xs: Vec<f64>,
}

impl<'a, P: Potential + ?Sized> Propagator<'a, P> {
    pub fn new(potential: &'a P, constants: PhysicalConstants, grid: SpatialGrid) -> Self {
        let n = grid.len();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let dk = 2.0 * PI / (n as f64 * grid.spacing());
        let wavenumbers = (0..n)
            .map(|i| if i <= (n - 1) / 2 { i as f64 } else { i as f64 - n as f64 } * dk)
            .collect();
        Propagator {
            potential,
            constants,
            grid,
            forward,
            inverse,
            wavenumbers,
            xs: grid.points().collect(),
        }
    }

    /// Advances `psi` by `steps` steps of size `dt` (negative `dt` runs
    /// backwards). The potential is sampled at each step's midpoint time.
    pub fn run(&self, psi: &WaveFunction, dt: f64, steps: usize) -> Result<WaveFunction> {
        if psi.grid != self.grid {
            return Err(Error::GridMismatch);
        }
        if !dt.is_finite() {
            return Err(Error::InvalidArgument(format!("time step must be finite, got {dt}")));
        }
        if steps == 0 {
            return Ok(psi.clone());
        }
        let hbar = self.constants.hbar();
        let mass = self.constants.mass();
        let n = self.grid.len();
        let inv_n = 1.0 / n as f64;
        let kinetic: Vec<Complex64> = self
            .wavenumbers
            .iter()
            .map(|k| Complex64::from_polar(inv_n, -hbar * k * k * dt / (4.0 * mass)))
            .collect();
        let mut scratch = vec![Complex64::default(); self.forward.get_inplace_scratch_len()];
        let mut buf = psi.amplitudes.clone();
        let mut norm = psi.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidArgument("cannot propagate a zero wave function".into()));
        }
        let mut t = psi.time;
        let kinetic_half = |buf: &mut Vec<Complex64>, scratch: &mut Vec<Complex64>| {
            self.forward.process_with_scratch(buf, scratch);
            for (a, k) in buf.iter_mut().zip(&kinetic) {
                *a *= k;
            }
            self.inverse.process_with_scratch(buf, scratch);
        };
        for step in 1..=steps {
            kinetic_half(&mut buf, &mut scratch);
            let v = self.potential.values_on(&self.xs, t + 0.5 * dt, mass);
            for (a, v) in buf.iter_mut().zip(&v) {
                *a *= Complex64::from_polar(1.0, -v * dt / hbar);
            }
            kinetic_half(&mut buf, &mut scratch);
            t = psi.time + step as f64 * dt;

            let current = WaveFunction { grid: self.grid, amplitudes: buf, time: t };
            let new_norm = current.norm();
            let drift = (new_norm - norm).abs() / norm;
            if !(drift <= NORM_DRIFT_TOLERANCE) {
                return Err(Error::NormDrift { step, drift });
            }
            let max = current.amplitudes.iter().fold(0.0f64, |m, a| m.max(a.norm()));
            let edge = current.amplitudes[0].norm().max(current.amplitudes[n - 1].norm());
            if edge > WRAP_TOLERANCE * max {
                return Err(Error::WrapAround { step, ratio: edge / max });
            }
            norm = new_norm;
            buf = current.amplitudes;
        }
        WaveFunction::new(self.grid, buf, t)
    }
}

/// One-shot propagation, see [`Propagator::run`].
pub fn propagate<P: Potential + ?Sized>(
    psi: &WaveFunction,
    potential: &P,
    constants: &PhysicalConstants,
    dt: f64,
    steps: usize,
) -> Result<WaveFunction> {
    Propagator::new(potential, *constants, psi.grid).run(psi, dt, steps)
}

/// Wave functions at every node of `nodes`, starting from `psi` (usually
/// prepared at `t = 0`). Each node interval is split into `substeps` steps;
/// the approach to `t_0` uses steps of the same size or smaller.
pub fn sample_evolution<P: Potential + ?Sized>(
    psi: &WaveFunction,
    potential: &P,
    constants: &PhysicalConstants,
    nodes: &TimeNodes,
    substeps: usize,
) -> Result<Vec<WaveFunction>> {
    if substeps == 0 {
        return Err(Error::InvalidArgument("substeps must be at least 1".into()));
    }
    let propagator = Propagator::new(potential, *constants, psi.grid);
    let step = nodes.dt() / substeps as f64;
    let lead = nodes.t0() - psi.time;
    let lead_steps = (lead.abs() / step).ceil() as usize;
    let mut current = if lead_steps == 0 {
        psi.clone()
    } else {
        propagator.run(psi, lead / lead_steps as f64, lead_steps)?
    };
    current.time = nodes.t0();
    let mut out = Vec::with_capacity(nodes.len());
    for j in 0..nodes.len() {
        if j > 0 {
            current = propagator.run(&current, step, substeps)?;
            current.time = nodes.time(j);
        }
        out.push(current.clone());
    }
    Ok(out)
}

/// Symmetric off-diagonal lattice `y_k = k·spacing`, `k = −K, …, K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OffDiagonalGrid {
    spacing: f64,
    half_count: usize,
}

impl OffDiagonalGrid {
    pub fn new(spacing: f64, half_count: usize) -> Result<Self> {
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::InvalidGrid(format!("off-diagonal spacing must be positive, got {spacing}")));
        }
        Ok(OffDiagonalGrid { spacing, half_count })
    }

    /// `n_points` (odd) samples spanning `[−y_max, y_max]`.
    pub fn from_extent(y_max: f64, n_points: usize) -> Result<Self> {
        if n_points.is_multiple_of(2) || n_points < 3 {
            return Err(Error::InvalidGrid(format!(
                "off-diagonal lattice needs an odd count ≥ 3 to contain y = 0, got {n_points}"
            )));
        }
        let half = n_points / 2;
        Self::new(y_max / half as f64, half)
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn half_count(&self) -> usize {
        self.half_count
    }

    pub fn len(&self) -> usize {
        2 * self.half_count + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn y_max(&self) -> f64 {
        self.half_count as f64 * self.spacing
    }

    pub fn point(&self, k: usize) -> f64 {
        (k as f64 - self.half_count as f64) * self.spacing
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|k| self.point(k))
    }

    /// Lattice index of `y = 0`.
    pub fn zero_index(&self) -> usize {
        self.half_count
    }

    /// Copy with every offset multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.spacing * c, self.half_count)
    }
}

/// `ρ(x+y, x−y)` on an `(x, y)` lattice, stored x-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrixGrid {
    x_grid: SpatialGrid,
    y_grid: OffDiagonalGrid,
    values: Vec<Complex64>,
    extrapolated: usize,
}

impl DensityMatrixGrid {
    pub fn new(x_grid: SpatialGrid, y_grid: OffDiagonalGrid, values: Vec<Complex64>) -> Result<Self> {
        let expected = x_grid.len() * y_grid.len();
        if values.len() != expected {
            return Err(Error::LengthMismatch { expected, actual: values.len() });
        }
        Ok(DensityMatrixGrid { x_grid, y_grid, values, extrapolated: 0 })
    }

    pub fn from_fn(
        x_grid: SpatialGrid,
        y_grid: OffDiagonalGrid,
        f: impl Fn(f64, f64) -> Complex64,
    ) -> Self {
        let mut values = Vec::with_capacity(x_grid.len() * y_grid.len());
        for x in x_grid.points() {
            values.extend(y_grid.points().map(|y| f(x, y)));
        }
        DensityMatrixGrid { x_grid, y_grid, values, extrapolated: 0 }
    }

    pub fn x_grid(&self) -> &SpatialGrid {
        &self.x_grid
    }

    pub fn y_grid(&self) -> &OffDiagonalGrid {
        &self.y_grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn get(&self, ix: usize, iy: usize) -> Complex64 {
        self.values[ix * self.y_grid.len() + iy]
    }

    pub fn row(&self, ix: usize) -> &[Complex64] {
        let ny = self.y_grid.len();
        &self.values[ix * ny..(ix + 1) * ny]
    }

    /// Number of samples that needed `ψ` outside its grid (taken as zero).
    pub fn extrapolated(&self) -> usize {
        self.extrapolated
    }

    pub fn warnings(&self) -> Vec<Warning> {
        if self.extrapolated > 0 {
            vec![Warning::Extrapolated { count: self.extrapolated }]
        } else {
            Vec::new()
        }
    }

    /// Real part of the `y = 0` column.
    pub fn diagonal(&self) -> GridField {
        let k0 = self.y_grid.zero_index();
        GridField::new(self.x_grid, (0..self.x_grid.len()).map(|ix| self.get(ix, k0).re).collect())
            .expect("finite diagonal")
    }

    /// `sup |ρ(x, y) − conj ρ(x, −y)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let ny = self.y_grid.len();
        (0..self.x_grid.len())
            .flat_map(|ix| (0..ny).map(move |iy| (ix, iy)))
            .map(|(ix, iy)| (self.get(ix, iy) - self.get(ix, ny - 1 - iy).conj()).norm())
            .fold(0.0, f64::max)
    }
}

/// `ρ(x+y, x−y) = ψ(x+y)·conj ψ(x−y)` on the `x` lattice of `psi`. Off-grid
/// arguments are interpolated linearly; arguments outside the grid use
/// `ψ = 0` and are counted in [`DensityMatrixGrid::extrapolated`].
pub fn exact_density_matrix(psi: &WaveFunction, y_grid: OffDiagonalGrid) -> DensityMatrixGrid {
    let ny = y_grid.len();
    let mut values = Vec::with_capacity(psi.grid.len() * ny);
    let mut extrapolated = 0;
    let mut lookup = |x: f64| {
        psi.interpolate(x).unwrap_or_else(|| {
            extrapolated += 1;
            Complex64::default()
        })
    };
    for x in psi.grid.points() {
        for y in y_grid.points() {
            let plus = lookup(x + y);
            let minus = lookup(x - y);
            values.push(plus * minus.conj());
        }
    }
    DensityMatrixGrid { x_grid: psi.grid, y_grid, values, extrapolated }
}

/// Exact cat-state density matrix sampled on an arbitrary lattice.
pub fn cat_density_matrix(
    params: &CatStateParams,
    x_grid: SpatialGrid,
    y_grid: OffDiagonalGrid,
) -> DensityMatrixGrid {
    DensityMatrixGrid::from_fn(x_grid, y_grid, |x, y| Complex64::new(params.density_matrix(x, y), 0.0))
}

/// Flags an off-diagonal spacing too coarse for the cat state's momenta.
pub fn check_offdiagonal_resolution(y_grid: &OffDiagonalGrid, params: &CatStateParams) -> Option<Warning> {
    let recommended = params.recommended_offdiagonal_spacing();
    (y_grid.spacing() > recommended)
        .then_some(Warning::CoarseOffDiagonal { spacing: y_grid.spacing(), recommended })
}

/// Wigner function on an `(x, p)` lattice. The momentum lattice is the
/// discrete Fourier dual of the off-diagonal lattice: `p_j = πħ j/(N Δy)`,
/// `j = −K, …, K`, with `N = 2K + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    x_grid: SpatialGrid,
    p_spacing: f64,
    half_count: usize,
    values: Vec<f64>,
    imag_residue: f64,
}

impl WignerGrid {
    pub fn x_grid(&self) -> &SpatialGrid {
        &self.x_grid
    }

    pub fn p_spacing(&self) -> f64 {
        self.p_spacing
    }

    pub fn p_len(&self) -> usize {
        2 * self.half_count + 1
    }

    pub fn p(&self, j: usize) -> f64 {
        (j as f64 - self.half_count as f64) * self.p_spacing
    }

    pub fn get(&self, ix: usize, jp: usize) -> f64 {
        self.values[ix * self.p_len() + jp]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Largest imaginary part left by the transform, relative to the
    /// largest real part.
    pub fn imag_residue(&self) -> f64 {
        self.imag_residue
    }

    pub fn warnings(&self) -> Vec<Warning> {
        if self.imag_residue > WIGNER_IMAG_TOLERANCE {
            vec![Warning::ImaginaryResidue { relative: self.imag_residue }]
        } else {
            Vec::new()
        }
    }

    /// `f_n(x) = ∫ pⁿ W(x, p) dp` by the trapezoidal rule on the momentum
    /// lattice.
    pub fn moment(&self, order: usize) -> GridField {
        let weights = self.moment_weights(order);
        let values = self
            .values
            .par_chunks(self.p_len())
            .map(|row| row.iter().zip(&weights).map(|(w, q)| w * q).sum())
            .collect();
        GridField::new(self.x_grid, values).expect("finite moments")
    }

    fn moment_weights(&self, order: usize) -> Vec<f64> {
        let np = self.p_len();
        (0..np)
            .map(|j| {
                let end = if j == 0 || j + 1 == np { 0.5 } else { 1.0 };
                end * self.p_spacing * self.p(j).powi(order as i32)
            })
            .collect()
    }

    /// Warns when `|pⁿ W|` at the momentum edges is not negligible.
    pub fn moment_warning(&self, order: usize) -> Option<Warning> {
        let np = self.p_len();
        let powers: Vec<f64> = (0..np).map(|j| self.p(j).powi(order as i32).abs()).collect();
        let mut max = 0.0f64;
        let mut edge = 0.0f64;
        for row in self.values.chunks(np) {
            for (j, (w, q)) in row.iter().zip(&powers).enumerate() {
                let v = (w * q).abs();
                max = max.max(v);
                if j == 0 || j + 1 == np {
                    edge = edge.max(v);
                }
            }
        }
        let ratio = if max > 0.0 { edge / max } else { 0.0 };
        (ratio > MOMENTUM_EDGE_TOLERANCE).then_some(Warning::MomentumTruncation { order, ratio })
    }
}

/// `W(x, p) = (1/πħ) ∫ dy e^{−2ipy/ħ} ρ(x+y, x−y)`, evaluated per `x` by a
/// discrete Fourier transform over the symmetric off-diagonal lattice.
pub fn wigner_transform(rho: &DensityMatrixGrid, constants: &PhysicalConstants) -> WignerGrid {
    let hbar = constants.hbar();
    let ny = rho.y_grid.len();
    let half = rho.y_grid.half_count();
    let dy = rho.y_grid.spacing();
    let fft = FftPlanner::new().plan_fft_forward(ny);
    let prefactor = dy / (PI * hbar);

    let columns: Vec<(Vec<f64>, f64, f64)> = (0..rho.x_grid.len())
        .into_par_iter()
        .map(|ix| {
            let row = rho.row(ix);
            // Offset k ≥ 0 goes to slot k, k < 0 to slot N + k.
            let mut buf: Vec<Complex64> = (0..ny)
                .map(|slot| if slot <= half { row[half + slot] } else { row[slot - half - 1] })
                .collect();
            fft.process(&mut buf);
            let mut out = Vec::with_capacity(ny);
            let mut max_re = 0.0f64;
            let mut max_im = 0.0f64;
            for j in 0..ny {
                // Momentum index j − K maps to slot (j − K) mod N.
                let slot = (j + ny - half) % ny;
                let w = buf[slot] * prefactor;
                max_re = max_re.max(w.re.abs());
                max_im = max_im.max(w.im.abs());
                out.push(w.re);
            }
            (out, max_re, max_im)
        })
        .collect();

    let mut values = Vec::with_capacity(rho.x_grid.len() * ny);
    let (mut max_re, mut max_im) = (0.0f64, 0.0f64);
    for (col, re, im) in columns {
        values.extend(col);
        max_re = max_re.max(re);
        max_im = max_im.max(im);
    }
    WignerGrid {
        x_grid: rho.x_grid,
        p_spacing: PI * hbar / (ny as f64 * dy),
        half_count: half,
        values,
        imag_residue: if max_re > 0.0 { max_im / max_re } else { 0.0 },
    }
}

/// Wigner function of `psi` on the densest lattice available without
/// interpolation: `Δy = Δx` and `y` reaching half the grid span.
pub fn oracle_wigner(psi: &WaveFunction, constants: &PhysicalConstants) -> WignerGrid {
    let y_grid = OffDiagonalGrid::new(psi.grid.spacing(), psi.grid.len() / 2)
        .expect("grid spacing is positive");
    wigner_transform(&exact_density_matrix(psi, y_grid), constants)
}

/// Moments `f_0, …, f_N` of `psi` by momentum integration of its Wigner
/// function.
pub fn oracle_moments(
    psi: &WaveFunction,
    max_order: usize,
    constants: &PhysicalConstants,
) -> Vec<GridField> {
    let w = oracle_wigner(psi, constants);
    (0..=max_order).map(|n| w.moment(n)).collect()
}

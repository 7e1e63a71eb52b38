//! Truncated Taylor polynomial of the density matrix in the off-diagonal
//! variable, `ρ_N(x, y) = Σ_{n≤N} f_n(x)/n! · (2iy/ħ)ⁿ`, and metrics for
//! comparing density-matrix grids.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::numerics::GridField;
use crate::simulator::{DensityMatrixGrid, OffDiagonalGrid};
use crate::{Error, Result, Warning};

/// Taylor terms above this magnitude are flagged.
pub const TERM_OVERFLOW_GUARD: f64 = 1e300;
/// Relative size of the last Taylor term that bounds the trust radius.
pub const TRUST_THRESHOLD: f64 = 1e-6;

/// `(2iy/ħ)ⁿ/n!` for `n = 0 … order`, by the running-term recurrence.
fn taylor_weights(y: f64, hbar: f64, order: usize) -> Vec<Complex64> {
    let z = Complex64::new(0.0, 2.0 * y / hbar);
    let mut out = Vec::with_capacity(order + 1);
    let mut term = Complex64::new(1.0, 0.0);
    out.push(term);
    for n in 1..=order {
        term = term * z / n as f64;
        out.push(term);
    }
    out
}

fn check_moments(moments: &[GridField]) -> Result<()> {
    let Some(first) = moments.first() else {
        return Err(Error::InvalidArgument("need at least f0 to assemble".into()));
    };
    if moments.iter().any(|m| m.grid() != first.grid()) {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// `ρ_N` sampled on `moments`' spatial grid times an off-diagonal lattice.
#[derive(Debug, Clone)]
pub struct TaylorReconstruction {
    moments: Vec<GridField>,
    hbar: f64,
    values: DensityMatrixGrid,
    term_max: Vec<f64>,
    warnings: Vec<Warning>,
}

impl TaylorReconstruction {
    pub fn order(&self) -> usize {
        self.moments.len() - 1
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn moments(&self) -> &[GridField] {
        &self.moments
    }

    pub fn values(&self) -> &DensityMatrixGrid {
        &self.values
    }

    pub fn into_values(self) -> DensityMatrixGrid {
        self.values
    }

    /// Largest `|f_n(x)(2y/ħ)ⁿ/n!|` over the lattice, per order.
    pub fn term_max(&self) -> &[f64] {
        &self.term_max
    }

    pub fn warnings(&self) -> &[Warning] {
        &self.warnings
    }

    /// `ρ_N` at grid point `ix` and an arbitrary offset `y`.
    pub fn evaluate(&self, ix: usize, y: f64) -> Complex64 {
        taylor_weights(y, self.hbar, self.order())
            .iter()
            .zip(&self.moments)
            .map(|(w, f)| w * f.values()[ix])
            .sum()
    }

    /// Heuristic only: the largest lattice `|y|` at which the highest-order
    /// term stays below `1e−6 · max|ρ_N|` for every `x`. No truncation
    /// bound is implied.
    pub fn trust_radius(&self) -> f64 {
        let scale = self.values.values().iter().fold(0.0f64, |m, v| m.max(v.norm()));
        let last = self.moments.last().unwrap().max_abs();
        let n = self.order();
        let y_grid = self.values.y_grid();
        let mut radius = 0.0;
        for k in y_grid.zero_index()..y_grid.len() {
            let y = y_grid.point(k);
            let term = last * taylor_weights(y, self.hbar, n)[n].norm();
            if term < TRUST_THRESHOLD * scale {
                radius = y;
            } else {
                break;
            }
        }
        radius
    }
}

/// Sums the Taylor series on `moments[0].grid() × y_grid`.
pub fn assemble(moments: &[GridField], y_grid: OffDiagonalGrid, hbar: f64) -> Result<TaylorReconstruction> {
    check_moments(moments)?;
    if !(hbar.is_finite() && hbar > 0.0) {
        return Err(Error::InvalidConstants(format!("hbar must be positive, got {hbar}")));
    }
    let order = moments.len() - 1;
    let x_grid = *moments[0].grid();
    let weights: Vec<Vec<Complex64>> =
        y_grid.points().map(|y| taylor_weights(y, hbar, order)).collect();
    let weight_max: Vec<f64> = (0..=order)
        .map(|n| weights.iter().map(|w| w[n].norm()).fold(0.0, f64::max))
        .collect();
    let term_max: Vec<f64> = moments.iter().zip(&weight_max).map(|(f, w)| f.max_abs() * w).collect();

    let values: Vec<Complex64> = (0..x_grid.len())
        .into_par_iter()
        .flat_map_iter(|ix| {
            let fx: Vec<f64> = moments.iter().map(|f| f.values()[ix]).collect();
            weights
                .iter()
                .map(move |w| w.iter().zip(&fx).map(|(w, f)| w * f).sum::<Complex64>())
                .collect::<Vec<_>>()
        })
        .collect();

    let warnings = term_max
        .iter()
        .enumerate()
        .filter(|(_, m)| !(**m <= TERM_OVERFLOW_GUARD))
        .map(|(order, &magnitude)| Warning::TermOverflow { order, magnitude })
        .collect();
    Ok(TaylorReconstruction {
        moments: moments.to_vec(),
        hbar,
        values: DensityMatrixGrid::new(x_grid, y_grid, values)?,
        term_max,
        warnings,
    })
}

/// The even-order (real) and odd-order (imaginary) sums, x-major like
/// [`DensityMatrixGrid`]:
/// `Σ (−1)ⁿ f_{2n} (2y/ħ)^{2n}/(2n)!` and `Σ (−1)ⁿ f_{2n+1} (2y/ħ)^{2n+1}/(2n+1)!`.
pub fn real_imag_split(rec: &TaylorReconstruction) -> (Vec<f64>, Vec<f64>) {
    let grid = rec.values.x_grid();
    let y_grid = rec.values.y_grid();
    let n = rec.order();
    let mut re = Vec::with_capacity(rec.values.values().len());
    let mut im = Vec::with_capacity(rec.values.values().len());
    let weights: Vec<Vec<f64>> = y_grid
        .points()
        .map(|y| {
            let u = 2.0 * y / rec.hbar;
            let mut out = vec![1.0];
            for k in 1..=n {
                out.push(out[k - 1] * u / k as f64);
            }
            out
        })
        .collect();
    for ix in 0..grid.len() {
        for w in &weights {
            let (mut even, mut odd) = (0.0, 0.0);
            for (k, f) in rec.moments.iter().enumerate() {
                let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
                let term = sign * f.values()[ix] * w[k];
                if k % 2 == 0 {
                    even += term;
                } else {
                    odd += term;
                }
            }
            re.push(even);
            im.push(odd);
        }
    }
    (re, im)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RescalingReport {
    pub scale: f64,
    pub max_relative_deviation: f64,
    pub holds: bool,
}

/// Checks that changing `ħ → cħ` only stretches `y → cy`.
pub fn hbar_rescaling_check(
    moments: &[GridField],
    y_grid: OffDiagonalGrid,
    hbar: f64,
    scale: f64,
) -> Result<RescalingReport> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::InvalidArgument(format!("scale must be positive, got {scale}")));
    }
    let a = assemble(moments, y_grid, hbar)?;
    let b = assemble(moments, y_grid.scaled(scale)?, scale * hbar)?;
    let peak = a.values.values().iter().fold(0.0f64, |m, v| m.max(v.norm()));
    let worst = a
        .values
        .values()
        .iter()
        .zip(b.values.values())
        .map(|(u, v)| (u - v).norm() / u.norm().max(peak * f64::EPSILON))
        .fold(0.0, f64::max);
    Ok(RescalingReport { scale, max_relative_deviation: worst, holds: worst <= 1e-12 })
}

/// `|x| ≤ x_max`, `|y| ≤ y_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub x_max: f64,
    pub y_max: f64,
}

impl Region {
    fn contains(&self, x: f64, y: f64) -> bool {
        let slack = 1e-9;
        x.abs() <= self.x_max + slack && y.abs() <= self.y_max + slack
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub sup_error: f64,
    pub sup_real_error: f64,
    /// `(∫∫ |a − b|² dx dy)^{1/2}` over the region.
    pub l2_error: f64,
    pub region: Region,
    pub trace_a: f64,
    pub trace_b: f64,
    pub hermiticity_defect: f64,
    pub diagonal_mismatch: f64,
    /// `b` was bilinearly resampled onto `a`'s lattice.
    pub resampled: bool,
    pub points: usize,
}

fn bilinear(rho: &DensityMatrixGrid, x: f64, y: f64) -> Option<Complex64> {
    let xg = rho.x_grid();
    let yg = rho.y_grid();
    let px = (x - xg.x_min()) / xg.spacing();
    let py = (y + yg.y_max()) / yg.spacing();
    let (nx, ny) = (xg.len() - 1, yg.len() - 1);
    let slack = 1e-9;
    if px < -slack || py < -slack || px > nx as f64 + slack || py > ny as f64 + slack {
        return None;
    }
    let ix = (px.floor().max(0.0) as usize).min(nx - 1);
    let iy = (py.floor().max(0.0) as usize).min(ny - 1);
    let (fx, fy) = ((px - ix as f64).clamp(0.0, 1.0), (py - iy as f64).clamp(0.0, 1.0));
    Some(
        rho.get(ix, iy) * (1.0 - fx) * (1.0 - fy)
            + rho.get(ix + 1, iy) * fx * (1.0 - fy)
            + rho.get(ix, iy + 1) * (1.0 - fx) * fy
            + rho.get(ix + 1, iy + 1) * fx * fy,
    )
}

/// Errors of `a` against `b` over `region`, on `a`'s lattice. `f0`, when
/// given, is the measured density the diagonal of `a` is checked against;
/// otherwise the diagonal of `b` is used.
pub fn compare(
    a: &DensityMatrixGrid,
    b: &DensityMatrixGrid,
    region: Region,
    f0: Option<&GridField>,
) -> Result<ComparisonReport> {
    let shared = a.x_grid() == b.x_grid() && a.y_grid() == b.y_grid();
    let mut sup = 0.0f64;
    let mut sup_real = 0.0f64;
    let mut sq = 0.0;
    let mut points = 0;
    let mut b_diag = Vec::with_capacity(a.x_grid().len());
    for ix in 0..a.x_grid().len() {
        let x = a.x_grid().point(ix);
        b_diag.push(if shared {
            Some(b.get(ix, b.y_grid().zero_index()))
        } else {
            bilinear(b, x, 0.0)
        });
        for iy in 0..a.y_grid().len() {
            let y = a.y_grid().point(iy);
            if !region.contains(x, y) {
                continue;
            }
            let vb = if shared { Some(b.get(ix, iy)) } else { bilinear(b, x, y) };
            let Some(vb) = vb else { continue };
            let d = a.get(ix, iy) - vb;
            sup = sup.max(d.norm());
            sup_real = sup_real.max(d.re.abs());
            sq += d.norm_sqr();
            points += 1;
        }
    }
    if points == 0 {
        return Err(Error::DisjointLattices);
    }
    let diag_a = a.diagonal();
    let diagonal_mismatch = match f0 {
        Some(f) => {
            if f.grid() != a.x_grid() {
                return Err(Error::GridMismatch);
            }
            diag_a.values().iter().zip(f.values()).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max)
        }
        None => diag_a
            .values()
            .iter()
            .zip(&b_diag)
            .filter_map(|(u, v)| v.map(|v| (u - v.re).abs()))
            .fold(0.0, f64::max),
    };
    Ok(ComparisonReport {
        sup_error: sup,
        sup_real_error: sup_real,
        l2_error: (sq * a.x_grid().spacing() * a.y_grid().spacing()).sqrt(),
        region,
        trace_a: diag_a.integral(),
        trace_b: b.diagonal().integral(),
        hermiticity_defect: a.hermiticity_defect().max(b.hermiticity_defect()),
        diagonal_mismatch,
        resampled: !shared,
        points,
    })
}

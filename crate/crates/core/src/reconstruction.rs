//! Moment recursion: `f_{n+1}` from `f_0 … f_n` by a time derivative of a
//! cumulative spatial integral plus potential force terms,
//!
//! ```text
//! f_{n+1} = −μ ∂_t ∫^x f_n − μ Σ_k (ħ/2i)^{2k} C(n, 2k+1) ∫^x ∂^{2k+1}V · f_{n−2k−1}
//! ```
//!
//! Every level is evaluated at all time nodes so that repeated time
//! derivatives are repeated applications of one differentiation matrix.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::numerics::{
    cumulative_integral, differentiation_matrix, smooth_local_poly, spatial_derivative, GridField,
    PhysicalConstants, SpatialGrid, TimeNodes, EDGE_TOLERANCE,
};
use crate::potentials::Potential;
use crate::{Error, Result, Warning};

/// Node counts above this trigger [`Warning::RungeRisk`].
pub const RUNGE_NODE_LIMIT: usize = 13;

/// `f_n` at one time node.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentField {
    pub order: usize,
    pub time_node: usize,
    pub field: GridField,
}

/// Where the cumulative integral `∫^x` is pinned.
///
/// The exact moments decay at both ends, so `∫_{−∞}^x g = −∫_x^∞ g`. On a
/// finite grid with rounding and truncation error only one of those can be
/// used at each point. Integrating from the left everywhere lets the error
/// accumulated over the whole grid land in the right tail, where the next
/// level multiplies it by growing powers of the force terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", content = "x", rename_all = "snake_case")]
pub enum Anchor {
    /// `∫_{x_min}^x` everywhere.
    Lower,
    /// `∫_{x_min}^x` left of the point, `−∫_x^{x_max}` from it onwards.
    Split(f64),
    /// [`Anchor::Split`] at the median of the central `f_0` record.
    #[default]
    Median,
}

/// Local polynomial smoothing of the `f_0` records.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Smoothing {
    pub window: usize,
    pub degree: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ReconstructionOptions {
    pub anchor: Anchor,
    pub smoothing: Option<Smoothing>,
}

/// `f_n` for `n ≤ N` at every time node. Immutable once built.
#[derive(Debug, Clone)]
pub struct MomentPyramid {
    nodes: TimeNodes,
    levels: Vec<Vec<GridField>>,
    split_index: Option<usize>,
    warnings: Vec<Warning>,
}

impl MomentPyramid {
    pub fn nodes(&self) -> &TimeNodes {
        &self.nodes
    }

    pub fn grid(&self) -> &SpatialGrid {
        self.levels[0][0].grid()
    }

    /// Highest reconstructed order `N`.
    pub fn order(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn central_node(&self) -> usize {
        self.nodes.central_index()
    }

    pub fn central_time(&self) -> f64 {
        self.nodes.time(self.central_node())
    }

    pub fn get(&self, order: usize, node: usize) -> &GridField {
        &self.levels[order][node]
    }

    pub fn level(&self, order: usize) -> &[GridField] {
        &self.levels[order]
    }

    /// Grid index where the integration switches to the right end, if any.
    pub fn split_index(&self) -> Option<usize> {
        self.split_index
    }

    /// `f_0 … f_N` at `node`.
    pub fn slice(&self, node: usize) -> Vec<MomentField> {
        self.levels
            .iter()
            .enumerate()
            .map(|(order, level)| MomentField { order, time_node: node, field: level[node].clone() })
            .collect()
    }

    /// The reconstruction output: `f_0 … f_N` at the central node.
    pub fn central(&self) -> Vec<MomentField> {
        self.slice(self.central_node())
    }

    pub fn central_fields(&self) -> Vec<GridField> {
        self.levels.iter().map(|l| l[self.central_node()].clone()).collect()
    }

    pub fn warnings(&self) -> &[Warning] {
        &self.warnings
    }
}

fn check_records(nodes: &TimeNodes, records: &[GridField]) -> Result<SpatialGrid> {
    if records.len() != nodes.len() {
        return Err(Error::LengthMismatch { expected: nodes.len(), actual: records.len() });
    }
    let grid = *records[0].grid();
    if records.iter().any(|r| *r.grid() != grid) {
        return Err(Error::GridMismatch);
    }
    Ok(grid)
}

/// Index of the first grid point where the cumulative distribution of the
/// (non-negative part of) `f` reaches one half.
fn median_index(f: &GridField) -> usize {
    let clipped = GridField::new(*f.grid(), f.values().iter().map(|v| v.max(0.0)).collect())
        .expect("finite");
    let cum = cumulative_integral(&clipped);
    let total = *cum.values().last().unwrap();
    if total <= 0.0 {
        return f.grid().len() / 2;
    }
    cum.values().iter().position(|&c| c >= 0.5 * total).unwrap_or(f.grid().len() - 1)
}

fn resolve_anchor(anchor: Anchor, central_f0: &GridField) -> Option<usize> {
    match anchor {
        Anchor::Lower => None,
        Anchor::Split(x) => {
            let g = central_f0.grid();
            Some(if x <= g.x_min() {
                0
            } else if x > g.x_max() {
                g.len()
            } else {
                ((x - g.x_min()) / g.spacing()).ceil() as usize
            })
        }
        Anchor::Median => Some(median_index(central_f0)),
    }
}

fn anchored_integral(g: &GridField, split: Option<usize>) -> GridField {
    let c = cumulative_integral(g);
    match split {
        None => c,
        Some(s) => {
            let mut values = c.into_values();
            let total = *values.last().unwrap();
            for v in values.iter_mut().skip(s) {
                *v -= total;
            }
            GridField::new(*g.grid(), values).expect("finite")
        }
    }
}

/// `binom(n, k)` as a float; zero when `k > n`.
fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

struct Step<'a, P: ?Sized> {
    nodes: &'a TimeNodes,
    d: DMatrix<f64>,
    model: &'a P,
    constants: &'a PhysicalConstants,
    split: Option<usize>,
    xs: Vec<f64>,
}

impl<P: Potential + ?Sized> Step<'_, P> {
    /// Integrand of level `n + 1` at `node`, before `−μ ∫^x`.
    fn integrand(&self, levels: &[Vec<GridField>], node: usize) -> GridField {
        let n = levels.len() - 1;
        let grid = *levels[0][0].grid();
        let mut g = vec![0.0; grid.len()];
        for (l, f) in levels[n].iter().enumerate() {
            let w = self.d[(node, l)];
            if w != 0.0 {
                for (acc, v) in g.iter_mut().zip(f.values()) {
                    *acc += w * v;
                }
            }
        }
        if n >= 1 {
            let t = self.nodes.time(node);
            let half_hbar_sq = (self.constants.hbar() / 2.0).powi(2);
            for k in 0..=(n - 1) / 2 {
                let coef = binomial(n, 2 * k + 1) * half_hbar_sq.powi(k as i32)
                    * if k % 2 == 0 { 1.0 } else { -1.0 };
                if coef == 0.0 {
                    continue;
                }
                let dv = self.model.derivatives_on(2 * k + 1, &self.xs, t, self.constants.mass());
                let f = levels[n - 2 * k - 1][node].values();
                for ((acc, dv), f) in g.iter_mut().zip(&dv).zip(f) {
                    *acc += coef * dv * f;
                }
            }
        }
        GridField::new(grid, g).expect("finite integrand")
    }

    fn next(&self, levels: &[Vec<GridField>], node: usize) -> Result<(GridField, f64)> {
        let g = self.integrand(levels, node);
        let edge = g.edge_ratio();
        let f = anchored_integral(&g, self.split).scaled(-self.constants.mass());
        if f.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "moment of order {} is not finite at node {node}",
                levels.len()
            )));
        }
        Ok((f, edge))
    }
}

/// `f_{n+1}` at `node` from `levels[0..=n]`, each holding `f_k` at every node.
pub fn next_moment<P: Potential + ?Sized>(
    levels: &[Vec<GridField>],
    nodes: &TimeNodes,
    model: &P,
    constants: &PhysicalConstants,
    node: usize,
    anchor: Anchor,
) -> Result<MomentField> {
    if levels.is_empty() {
        return Err(Error::InvalidArgument("need at least f0".into()));
    }
    let n = levels.len() - 1;
    if n + 1 > nodes.degree() {
        return Err(Error::InsufficientTimeSamples { order: n + 1, available: nodes.len() });
    }
    if node >= nodes.len() {
        return Err(Error::InvalidArgument(format!("node {node} outside 0..{}", nodes.len())));
    }
    let grid = check_records(nodes, &levels[0])?;
    for level in levels {
        check_records(nodes, level)?;
    }
    let step = Step {
        nodes,
        d: differentiation_matrix(nodes)?,
        model,
        constants,
        split: resolve_anchor(anchor, &levels[0][nodes.central_index()]),
        xs: grid.points().collect(),
    };
    let (field, _) = step.next(levels, node)?;
    Ok(MomentField { order: n + 1, time_node: node, field })
}

/// All `f_n`, `n ≤ order`, at every node of `nodes`, from `f_0` records at
/// those nodes. Needs `order ≤ m` (at least `n + 1` time samples for `f_n`).
pub fn build_pyramid<P: Potential + Sync + ?Sized>(
    records: &[GridField],
    nodes: &TimeNodes,
    model: &P,
    constants: &PhysicalConstants,
    order: usize,
    options: &ReconstructionOptions,
) -> Result<MomentPyramid> {
    if order > nodes.degree() {
        return Err(Error::InsufficientTimeSamples { order, available: nodes.len() });
    }
    let grid = check_records(nodes, records)?;
    let base: Vec<GridField> = match options.smoothing {
        Some(s) => records
            .iter()
            .map(|r| smooth_local_poly(r, s.window, s.degree))
            .collect::<Result<_>>()?,
        None => records.to_vec(),
    };

    let mut warnings = Vec::new();
    if nodes.len() > RUNGE_NODE_LIMIT {
        warnings.push(Warning::RungeRisk { nodes: nodes.len() });
    }
    let max_f0 = base.iter().map(GridField::max_abs).fold(0.0, f64::max);
    let min_f0 = base.iter().flat_map(|r| r.values().iter().copied()).fold(0.0, f64::min);
    if min_f0 < -EDGE_TOLERANCE * max_f0 {
        warnings.push(Warning::NegativeDensity { min: min_f0 });
    }
    let mut worst_edge = base.iter().map(GridField::edge_ratio).fold(0.0, f64::max);

    let step = Step {
        nodes,
        d: differentiation_matrix(nodes)?,
        model,
        constants,
        split: resolve_anchor(options.anchor, &base[nodes.central_index()]),
        xs: grid.points().collect(),
    };
    let split_index = step.split;
    let mut levels = vec![base];
    for _ in 0..order {
        let next: Vec<(GridField, f64)> = (0..nodes.len())
            .into_par_iter()
            .map(|j| step.next(&levels, j))
            .collect::<Result<_>>()?;
        let mut level = Vec::with_capacity(next.len());
        for (f, edge) in next {
            worst_edge = worst_edge.max(edge);
            level.push(f);
        }
        levels.push(level);
    }
    if worst_edge > EDGE_TOLERANCE {
        warnings.push(Warning::EdgeDecay { ratio: worst_edge });
    }
    Ok(MomentPyramid { nodes: *nodes, levels, split_index, warnings })
}

/// Probability current times mass, `f_1 = −μ ∂_t ∫_{x_min}^x f_0`, at `node`.
pub fn reconstruct_current(
    records: &[GridField],
    nodes: &TimeNodes,
    constants: &PhysicalConstants,
    node: usize,
) -> Result<MomentField> {
    next_moment(
        &[records.to_vec()],
        nodes,
        &crate::potentials::PotentialModel::Free,
        constants,
        node,
        Anchor::Lower,
    )
}

/// `‖∂_t f_0 + ∂_x f_1/μ‖₂ / ‖∂_t f_0‖₂` at `node`, with `∂_t` from the
/// differentiation matrix and `∂_x` from the five-point stencil.
pub fn continuity_defect(pyramid: &MomentPyramid, constants: &PhysicalConstants, node: usize) -> Result<f64> {
    if pyramid.order() < 1 {
        return Err(Error::InsufficientTimeSamples { order: 1, available: pyramid.nodes.len() });
    }
    let d = differentiation_matrix(&pyramid.nodes)?;
    let n = pyramid.grid().len();
    let mut dt_f0 = vec![0.0; n];
    for (l, f) in pyramid.level(0).iter().enumerate() {
        for (acc, v) in dt_f0.iter_mut().zip(f.values()) {
            *acc += d[(node, l)] * v;
        }
    }
    let dx_f1 = spatial_derivative(pyramid.get(1, node));
    let inv_mass = 1.0 / constants.mass();
    let (mut num, mut den) = (0.0, 0.0);
    for (a, b) in dt_f0.iter().zip(dx_f1.values()) {
        num += (a + inv_mass * b).powi(2);
        den += a * a;
    }
    Ok(if den > 0.0 { (num / den).sqrt() } else { num.sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::PotentialModel;
    use crate::simulator::{
        make_cat_state, make_coherent_state, make_gaussian_state, oracle_moments,
        probability_density, sample_evolution, CatStateParams, WaveFunction,
    };
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn rel_l2(a: &GridField, b: &GridField) -> f64 {
        let num: f64 = a.values().iter().zip(b.values()).map(|(x, y)| (x - y).powi(2)).sum();
        let den: f64 = b.values().iter().map(|y| y * y).sum();
        (num / den).sqrt()
    }

    fn records_of(states: &[WaveFunction]) -> Vec<GridField> {
        states.iter().map(probability_density).collect()
    }

    fn simulate(
        psi: &WaveFunction,
        model: &PotentialModel,
        nodes: &TimeNodes,
        substeps: usize,
    ) -> Vec<WaveFunction> {
        sample_evolution(psi, model, &PhysicalConstants::default(), nodes, substeps).unwrap()
    }

    fn grid() -> SpatialGrid {
        SpatialGrid::new(-10.0, 10.0, 1024).unwrap()
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(3, 3), 1.0);
        assert_eq!(binomial(2, 3), 0.0);
        assert_eq!(binomial(7, 3), 35.0);
        assert_eq!(binomial(36, 18), 9_075_135_300.0);
    }

    #[test]
    fn order_zero_is_passthrough_and_order_above_m_is_rejected() {
        let g = grid();
        let psi = make_cat_state(&CatStateParams::default(), g).unwrap();
        let nodes = TimeNodes::new(0.0, 0.005, 5).unwrap();
        let states = simulate(&psi, &PotentialModel::Free, &nodes, 5);
        let records = records_of(&states);
        let c = PhysicalConstants::default();
        let opts = ReconstructionOptions::default();
        let p = build_pyramid(&records, &nodes, &PotentialModel::Free, &c, 0, &opts).unwrap();
        assert_eq!(p.order(), 0);
        assert_eq!(p.central()[0].field, records[2]);
        assert_eq!(p.central_time(), nodes.time(2));
        let err = build_pyramid(&records, &nodes, &PotentialModel::Free, &c, 5, &opts).unwrap_err();
        assert_eq!(err, Error::InsufficientTimeSamples { order: 5, available: 5 });
        assert!(err.to_string().contains("n+1"));
        assert!(build_pyramid(&records, &nodes, &PotentialModel::Free, &c, 4, &opts).is_ok());
    }

    #[test]
    fn even_node_count_uses_lower_central_node() {
        let nodes = TimeNodes::new(1.0, 0.1, 4).unwrap();
        let g = grid();
        let records = vec![GridField::from_fn(g, |x| (-x * x).exp()); 4];
        let c = PhysicalConstants::default();
        let p = build_pyramid(&records, &nodes, &PotentialModel::Free, &c, 1, &Default::default())
            .unwrap();
        assert_eq!(p.central_node(), 1);
        assert_eq!(p.central_time(), 1.1);
    }

    #[test]
    fn free_gaussian_at_waist_has_no_current() {
        let g = grid();
        let psi = make_gaussian_state(0.8, 0.0, 0.0, g).unwrap();
        let nodes = TimeNodes::new(-0.02, 0.01, 5).unwrap();
        let records = records_of(&simulate(&psi, &PotentialModel::Free, &nodes, 4));
        let c = PhysicalConstants::default();
        let f1 = reconstruct_current(&records, &nodes, &c, 2).unwrap();
        assert_eq!(f1.order, 1);
        assert!(f1.field.max_abs() < 1e-10 * records[2].max_abs(), "{}", f1.field.max_abs());
    }

    #[test]
    fn stationary_state_has_no_current() {
        let g = grid();
        let c = PhysicalConstants::default();
        let psi = make_coherent_state(1.0, 0.0, 0.0, &c, g).unwrap();
        let nodes = TimeNodes::new(0.0, 0.05, 5).unwrap();
        let records = records_of(&simulate(&psi, &PotentialModel::Harmonic { omega: 1.0 }, &nodes, 100));
        let f1 = reconstruct_current(&records, &nodes, &c, 2).unwrap();
        assert!(f1.field.max_abs() < 1e-8, "{}", f1.field.max_abs());
    }

    #[test]
    fn boosted_gaussian_current_is_momentum_times_density() {
        let g = grid();
        let k0 = 1.5;
        let psi = make_gaussian_state(0.8, -1.0, k0, g).unwrap();
        // Nodes symmetric about the waist at t = 0.
        let nodes = TimeNodes::new(-0.004, 0.002, 5).unwrap();
        let c = PhysicalConstants::default();
        let records = records_of(&simulate(&psi, &PotentialModel::Free, &nodes, 2));
        let f1 = reconstruct_current(&records, &nodes, &c, 2).unwrap();
        let expected = records[2].scaled(c.hbar() * k0);
        assert!(rel_l2(&f1.field, &expected) < 1e-4, "{}", rel_l2(&f1.field, &expected));
        let oracle = oracle_moments(&psi, 1, &c);
        assert!(rel_l2(&oracle[1], &expected) < 1e-6);
    }

    #[test]
    fn time_reversal_flips_current() {
        let g = grid();
        let psi = make_gaussian_state(0.8, 0.0, 1.0, g).unwrap();
        let nodes = TimeNodes::new(0.0, 0.01, 5).unwrap();
        let c = PhysicalConstants::default();
        let records = records_of(&simulate(&psi, &PotentialModel::Free, &nodes, 2));
        let reversed: Vec<GridField> = records.iter().rev().cloned().collect();
        let a = reconstruct_current(&records, &nodes, &c, 2).unwrap();
        let b = reconstruct_current(&reversed, &nodes, &c, 2).unwrap();
        for (x, y) in a.field.values().iter().zip(b.field.values()) {
            assert!((x + y).abs() < 1e-12 * a.field.max_abs());
        }
    }

    #[test]
    fn free_model_matches_zero_frequency_harmonic() {
        let g = grid();
        let psi = make_cat_state(&CatStateParams::default(), g).unwrap();
        let nodes = TimeNodes::new(0.0, 0.005, 5).unwrap();
        let records = records_of(&simulate(&psi, &PotentialModel::Free, &nodes, 5));
        let c = PhysicalConstants::default();
        let opts = ReconstructionOptions::default();
        let a = build_pyramid(&records, &nodes, &PotentialModel::Free, &c, 4, &opts).unwrap();
        let b = build_pyramid(&records, &nodes, &PotentialModel::Harmonic { omega: 0.0 }, &c, 4, &opts)
            .unwrap();
        for n in 0..=4 {
            for j in 0..5 {
                let (x, y) = (a.get(n, j), b.get(n, j));
                let scale = x.max_abs();
                for (u, v) in x.values().iter().zip(y.values()) {
                    assert!((u - v).abs() <= 1e-14 * scale);
                }
            }
        }
    }

    struct Counting<'a> {
        inner: &'a PotentialModel,
        max_order: AtomicUsize,
    }

    impl Potential for Counting<'_> {
        fn value(&self, x: f64, t: f64, mass: f64) -> f64 {
            self.inner.value(x, t, mass)
        }

        fn derivative(&self, order: usize, x: f64, t: f64, mass: f64) -> f64 {
            self.max_order.fetch_max(order, Ordering::SeqCst);
            self.inner.derivative(order, x, t, mass)
        }

        fn derivatives_on(&self, order: usize, xs: &[f64], t: f64, mass: f64) -> Vec<f64> {
            self.max_order.fetch_max(order, Ordering::SeqCst);
            self.inner.derivatives_on(order, xs, t, mass)
        }
    }

    #[test]
    fn potential_derivative_demand_is_bounded() {
        let g = SpatialGrid::new(-10.0, 10.0, 256).unwrap();
        let nodes = TimeNodes::new(0.0, 0.01, 9).unwrap();
        let records = vec![GridField::from_fn(g, |x| (-x * x).exp()); 9];
        let model = PotentialModel::Polynomial { coefficients: vec![vec![0.01]; 10] };
        let c = PhysicalConstants::default();
        for order in 0..=8usize {
            let counting = Counting { inner: &model, max_order: AtomicUsize::new(0) };
            build_pyramid(&records, &nodes, &counting, &c, order, &Default::default()).unwrap();
            let expected = if order < 2 { 0 } else { 2 * ((order - 2) / 2) + 1 };
            assert_eq!(counting.max_order.load(Ordering::SeqCst), expected, "order {order}");
        }
    }

    #[test]
    fn pyramid_is_linear_in_the_data_for_fixed_anchors() {
        let g = grid();
        let c = PhysicalConstants::default();
        let nodes = TimeNodes::new(0.2, 0.01, 5).unwrap();
        let model = PotentialModel::Quartic { c2: 0.5, c4: 0.1 };
        let a = records_of(&simulate(&make_gaussian_state(0.7, 1.0, 0.0, g).unwrap(), &model, &nodes, 5));
        let b = records_of(&simulate(&make_gaussian_state(0.6, -1.0, 1.0, g).unwrap(), &model, &nodes, 5));
        let sum: Vec<GridField> = a.iter().zip(&b).map(|(x, y)| x.combine(1.0, y, 1.0).unwrap()).collect();
        for anchor in [Anchor::Lower, Anchor::Split(0.3)] {
            let opts = ReconstructionOptions { anchor, smoothing: None };
            let pa = build_pyramid(&a, &nodes, &model, &c, 4, &opts).unwrap();
            let pb = build_pyramid(&b, &nodes, &model, &c, 4, &opts).unwrap();
            let ps = build_pyramid(&sum, &nodes, &model, &c, 4, &opts).unwrap();
            for n in 0..=4 {
                let expected = pa.get(n, 2).combine(1.0, pb.get(n, 2), 1.0).unwrap();
                let err = rel_l2(ps.get(n, 2), &expected);
                // Rounding is amplified by one differentiation per order.
                let tol = 1e-13 / nodes.dt().powi(n as i32);
                assert!(err < tol.max(1e-14), "{anchor:?} order {n}: {err:e}");
            }
        }
    }

    #[test]
    fn next_moment_matches_pyramid_levels() {
        let g = grid();
        let c = PhysicalConstants::default();
        let nodes = TimeNodes::new(0.1, 0.01, 4).unwrap();
        let model = PotentialModel::Quartic { c2: 0.5, c4: 0.1 };
        let records =
            records_of(&simulate(&make_gaussian_state(0.7, 1.0, 0.0, g).unwrap(), &model, &nodes, 5));
        let p = build_pyramid(&records, &nodes, &model, &c, 3, &Default::default()).unwrap();
        let levels: Vec<Vec<GridField>> = (0..3).map(|n| p.level(n).to_vec()).collect();
        for j in 0..4 {
            let f = next_moment(&levels, &nodes, &model, &c, j, Anchor::Median).unwrap();
            assert_eq!(f.order, 3);
            assert_eq!(&f.field, p.get(3, j));
        }
        let too_many: Vec<Vec<GridField>> = (0..=3).map(|n| p.level(n).to_vec()).collect();
        assert!(matches!(
            next_moment(&too_many, &nodes, &model, &c, 0, Anchor::Median),
            Err(Error::InsufficientTimeSamples { order: 4, .. })
        ));
    }

    #[test]
    fn free_cat_moments_match_oracle() {
        let g = grid();
        let c = PhysicalConstants::default();
        let psi = make_cat_state(&CatStateParams::default(), g).unwrap();
        let nodes = TimeNodes::new(0.09, 0.005, 5).unwrap();
        let states = simulate(&psi, &PotentialModel::Free, &nodes, 5);
        let p = build_pyramid(&records_of(&states), &nodes, &PotentialModel::Free, &c, 4, &Default::default())
            .unwrap();
        let oracle = oracle_moments(&states[2], 4, &c);
        for n in 1..=4 {
            let err = rel_l2(p.get(n, 2), &oracle[n]);
            assert!(err < 1e-2, "order {n}: {err:e}");
        }
        assert!(continuity_defect(&p, &c, 2).unwrap() < 1e-3);
    }

    #[test]
    fn quartic_hbar_squared_term_enters_at_fourth_moment() {
        let g = grid();
        let c = PhysicalConstants::default();
        let model = PotentialModel::Quartic { c2: 0.5, c4: 0.1 };
        let psi = make_gaussian_state(std::f64::consts::FRAC_1_SQRT_2, 1.0, 0.0, g).unwrap();
        let nodes = TimeNodes::new(0.27, 0.01, 7).unwrap();
        let states = simulate(&psi, &model, &nodes, 10);
        let records = records_of(&states);
        let oracle = oracle_moments(&states[3], 4, &c);
        let full = build_pyramid(&records, &nodes, &model, &c, 4, &Default::default()).unwrap();
        for n in 1..=3 {
            let err = rel_l2(full.get(n, 3), &oracle[n]);
            assert!(err < 2e-2, "order {n}: {err:e}");
        }

        struct FirstOrderOnly<'a>(&'a PotentialModel);
        impl Potential for FirstOrderOnly<'_> {
            fn value(&self, x: f64, t: f64, m: f64) -> f64 {
                self.0.value(x, t, m)
            }
            fn derivative(&self, order: usize, x: f64, t: f64, m: f64) -> f64 {
                if order == 1 { self.0.derivative(1, x, t, m) } else { 0.0 }
            }
        }
        let truncated =
            build_pyramid(&records, &nodes, &FirstOrderOnly(&model), &c, 4, &Default::default()).unwrap();
        for n in 0..=3 {
            assert_eq!(truncated.get(n, 3), full.get(n, 3));
        }
        let err = rel_l2(full.get(4, 3), &oracle[4]);
        let err_truncated = rel_l2(truncated.get(4, 3), &oracle[4]);
        assert!(err_truncated > 5.0 * err, "{err_truncated:e} vs {err:e}");
    }

    #[test]
    fn runge_and_negative_density_warnings() {
        let g = SpatialGrid::new(-10.0, 10.0, 128).unwrap();
        let mut records = vec![GridField::from_fn(g, |x| (-x * x).exp()); 14];
        let c = PhysicalConstants::default();
        let nodes = TimeNodes::new(0.0, 0.01, 14).unwrap();
        let p = build_pyramid(&records, &nodes, &PotentialModel::Free, &c, 0, &Default::default()).unwrap();
        assert!(p.warnings().contains(&Warning::RungeRisk { nodes: 14 }));
        records[3] = GridField::from_fn(g, |x| (-x * x).exp() - 0.01);
        let p = build_pyramid(&records, &nodes, &PotentialModel::Free, &c, 0, &Default::default()).unwrap();
        assert!(p.warnings().iter().any(|w| matches!(w, Warning::NegativeDensity { .. })));
        assert!(p.warnings().iter().any(|w| matches!(w, Warning::EdgeDecay { .. })));
    }

    #[test]
    fn smoothing_touches_only_the_base() {
        let g = SpatialGrid::new(-10.0, 10.0, 256).unwrap();
        let records: Vec<GridField> =
            (0..5).map(|j| GridField::from_fn(g, |x| (-(x - 0.01 * j as f64).powi(2)).exp())).collect();
        let nodes = TimeNodes::new(0.0, 0.01, 5).unwrap();
        let c = PhysicalConstants::default();
        let opts = ReconstructionOptions { anchor: Anchor::Lower, smoothing: Some(Smoothing { window: 7, degree: 3 }) };
        let p = build_pyramid(&records, &nodes, &PotentialModel::Free, &c, 2, &opts).unwrap();
        let smoothed: Vec<GridField> = records.iter().map(|r| smooth_local_poly(r, 7, 3).unwrap()).collect();
        let q = build_pyramid(&smoothed, &nodes, &PotentialModel::Free, &c, 2, &ReconstructionOptions {
            anchor: Anchor::Lower,
            smoothing: None,
        })
        .unwrap();
        for n in 0..=2 {
            assert_eq!(p.level(n), q.level(n));
        }
    }

    #[test]
    fn harmonic_coherent_state_high_orders() {
        let g = grid();
        let c = PhysicalConstants::default();
        let model = PotentialModel::Harmonic { omega: 1.0 };
        let psi = make_coherent_state(1.0, 2.0, 0.0, &c, g).unwrap();
        let nodes = TimeNodes::new(0.5, 0.03, 9).unwrap();
        let states = simulate(&psi, &model, &nodes, 30);
        let p = build_pyramid(&records_of(&states), &nodes, &model, &c, 8, &Default::default()).unwrap();
        let oracle = oracle_moments(&states[4], 8, &c);
        for n in 1..=8 {
            let err = rel_l2(p.get(n, 4), &oracle[n]);
            assert!(err < 5e-2, "order {n}: {err:e}");
        }
    }
}

//! Potentials `V(x, t)` that are polynomial in `x`, so every spatial
//! derivative is exact and derivatives past the degree vanish identically.

use serde::{Deserialize, Serialize};

/// Access to `V` and its spatial derivatives, as consumed by the propagator
/// and the moment recursion.
pub trait Potential {
    fn value(&self, x: f64, t: f64, mass: f64) -> f64;

    /// `∂ᵏV/∂xᵏ` at `(x, t)`, `order ≥ 1`.
    fn derivative(&self, order: usize, x: f64, t: f64, mass: f64) -> f64;

    fn values_on(&self, xs: &[f64], t: f64, mass: f64) -> Vec<f64> {
        xs.iter().map(|&x| self.value(x, t, mass)).collect()
    }

    fn derivatives_on(&self, order: usize, xs: &[f64], t: f64, mass: f64) -> Vec<f64> {
        xs.iter().map(|&x| self.derivative(order, x, t, mass)).collect()
    }
}

/// Built-in potential families. Time dependence enters only through the
/// coefficients of the `x` polynomial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum PotentialModel {
    Free,
    /// `½·μ·ω²·x²`.
    Harmonic { omega: f64 },
    /// `c₂·x² + c₄·x⁴`.
    Quartic { c2: f64, c4: f64 },
    /// `Σ_k c_k(t)·xᵏ` with `c_k(t) = Σ_j coefficients[k][j]·tʲ`.
    Polynomial { coefficients: Vec<Vec<f64>> },
    /// `½·μ·(a + b·cos(Ω t))·x²`.
    PaulTrap { a: f64, b: f64, omega: f64 },
}

impl PotentialModel {
    /// Coefficients `c_0(t), …, c_d(t)` of the `x` polynomial.
    pub fn x_coefficients(&self, t: f64, mass: f64) -> Vec<f64> {
        match self {
            PotentialModel::Free => Vec::new(),
            PotentialModel::Harmonic { omega } => vec![0.0, 0.0, 0.5 * mass * omega * omega],
            PotentialModel::Quartic { c2, c4 } => vec![0.0, 0.0, *c2, 0.0, *c4],
            PotentialModel::Polynomial { coefficients } => coefficients
                .iter()
                .map(|time_poly| time_poly.iter().rev().fold(0.0, |acc, c| acc * t + c))
                .collect(),
            PotentialModel::PaulTrap { a, b, omega } => {
                vec![0.0, 0.0, 0.5 * mass * (a + b * (omega * t).cos())]
            }
        }
    }

    /// Degree in `x`; derivatives of higher order are exactly zero.
    pub fn degree(&self) -> usize {
        match self {
            PotentialModel::Free => 0,
            PotentialModel::Harmonic { .. } | PotentialModel::PaulTrap { .. } => 2,
            PotentialModel::Quartic { .. } => 4,
            PotentialModel::Polynomial { coefficients } => coefficients.len().saturating_sub(1),
        }
    }

    pub fn is_valid(&self) -> bool {
        let finite = |v: &f64| v.is_finite();
        match self {
            PotentialModel::Free => true,
            PotentialModel::Harmonic { omega } => omega.is_finite(),
            PotentialModel::Quartic { c2, c4 } => c2.is_finite() && c4.is_finite(),
            PotentialModel::Polynomial { coefficients } => {
                coefficients.iter().all(|c| c.iter().all(finite))
            }
            PotentialModel::PaulTrap { a, b, omega } => [a, b, omega].into_iter().all(finite),
        }
    }
}

/// Evaluates `Σ_k c_k·∂ᵒʳᵈᵉʳ(xᵏ)` by Horner's rule on the differentiated
/// coefficients.
fn differentiated_poly(coefficients: &[f64], order: usize, x: f64) -> f64 {
    if order >= coefficients.len() {
        return 0.0;
    }
    coefficients[order..]
        .iter()
        .enumerate()
        .rev()
        .fold(0.0, |acc, (i, c)| {
            let k = i + order;
            // k! / (k - order)!
            let falling: f64 = ((k - order + 1)..=k).map(|v| v as f64).product();
            acc * x + c * falling
        })
}

impl Potential for PotentialModel {
    fn value(&self, x: f64, t: f64, mass: f64) -> f64 {
        differentiated_poly(&self.x_coefficients(t, mass), 0, x)
    }

    fn derivative(&self, order: usize, x: f64, t: f64, mass: f64) -> f64 {
        debug_assert!(order >= 1, "derivative order must be at least 1");
        differentiated_poly(&self.x_coefficients(t, mass), order, x)
    }

    fn values_on(&self, xs: &[f64], t: f64, mass: f64) -> Vec<f64> {
        let c = self.x_coefficients(t, mass);
        xs.iter().map(|&x| differentiated_poly(&c, 0, x)).collect()
    }

    fn derivatives_on(&self, order: usize, xs: &[f64], t: f64, mass: f64) -> Vec<f64> {
        let c = self.x_coefficients(t, mass);
        xs.iter().map(|&x| differentiated_poly(&c, order, x)).collect()
    }
}

//! Gradients, Hessians, Laplacians, norms and quadrature.

use alloc::vec;
use alloc::vec::Vec;

use crate::curvature::{christoffel, Christoffel};
use crate::error::Result;
use crate::field::{ScalarField, SymTensorField, VectorField};
use crate::grid::Grid;
use crate::metric::{check_positive, MetricField};
use crate::sym3::Sym3;

/// Centered differential `(∂_1 u, ∂_2 u, ∂_3 u)` (covariant components).
pub fn covector(u: &ScalarField) -> VectorField {
    let grid = *u.grid();
    let d: [Vec<f64>; 3] = core::array::from_fn(|a| grid.d1(u.values(), a));
    let values = (0..grid.len()).map(|i| [d[0][i], d[1][i], d[2][i]]).collect();
    VectorField::from_vec(grid, values)
}

/// `(∇u)^i = g^{ij} ∂_j u`.
pub fn gradient(u: &ScalarField, metric: &MetricField) -> VectorField {
    let du = covector(u);
    let values = du.values().iter().zip(metric.inverse()).map(|(d, gi)| gi.mul_vec(*d)).collect();
    VectorField::from_vec(*u.grid(), values)
}

/// `|∇u|² = g^{ij} ∂_i u ∂_j u`, clamped at zero against round-off.
pub fn grad_norm_sq(u: &ScalarField, metric: &MetricField) -> ScalarField {
    grad_norm_sq_from(&covector(u), metric)
}

pub fn grad_norm_sq_from(du: &VectorField, metric: &MetricField) -> ScalarField {
    let values = du.values().iter().zip(metric.inverse()).map(|(d, gi)| gi.quad(*d).max(0.0)).collect();
    ScalarField::from_vec(*du.grid(), values)
}

/// `(Hess u)_ij = ∂_i∂_j u − Γ^k_ij ∂_k u`. Pure second derivatives use the
/// compact stencil of the divergence-form Laplacian, mixed ones the product of
/// centered differences.
pub fn hessian(u: &ScalarField, metric: &MetricField) -> SymTensorField {
    hessian_with(u, metric, &christoffel(metric))
}

pub fn hessian_with(u: &ScalarField, metric: &MetricField, gamma: &Christoffel) -> SymTensorField {
    let grid = *metric.grid();
    let mut values = coordinate_hessian(u);
    if !gamma.is_zero() {
        let du = covector(u);
        for (node, h) in values.iter_mut().enumerate() {
            let d = du.values()[node];
            let g = &gamma.values()[node];
            *h = *h - (g[0] * d[0] + g[1] * d[1] + g[2] * d[2]);
        }
    }
    SymTensorField::from_vec(grid, values)
}

/// Matrix of second coordinate derivatives.
pub fn coordinate_hessian(u: &ScalarField) -> Vec<Sym3> {
    let grid = *u.grid();
    let mut values = vec![Sym3::ZERO; grid.len()];
    let d1: [Vec<f64>; 3] = core::array::from_fn(|a| grid.d1(u.values(), a));
    for a in 0..3 {
        let d2 = grid.d2(u.values(), a);
        for (h, x) in values.iter_mut().zip(&d2) {
            h.set(a, a, *x);
        }
    }
    for (a, b) in [(0, 1), (0, 2), (1, 2)] {
        let dab = grid.d1(&d1[b], a);
        for (h, x) in values.iter_mut().zip(&dab) {
            h.set(a, b, *x);
        }
    }
    values
}

/// Divergence-form `Δ_g u`.
pub fn laplace_beltrami(u: &ScalarField, metric: &MetricField) -> ScalarField {
    let op = metric.laplacian_operator();
    ScalarField::from_vec(*u.grid(), op.apply(u.values()))
}

/// Divergence-form `𝓛_f u` with weight `H √det g`. Rejects `H ≤ 0`.
pub fn drifting_laplacian(u: &ScalarField, metric: &MetricField, h: &ScalarField) -> Result<ScalarField> {
    let op = metric.drift_operator(h)?;
    Ok(ScalarField::from_vec(*u.grid(), op.apply(u.values())))
}

/// `|T|² = g^{ik} g^{jl} T_ij T_kl`.
pub fn tensor_norm_sq(t: &SymTensorField, metric: &MetricField) -> ScalarField {
    if metric.is_uniform() && t.is_uniform() {
        let x = t.values()[0].norm_sq_with(&metric.inverse()[0]).max(0.0);
        return ScalarField::constant(*t.grid(), x);
    }
    let values = t
        .values()
        .iter()
        .zip(metric.inverse())
        .map(|(x, gi)| x.norm_sq_with(gi).max(0.0))
        .collect();
    ScalarField::from_vec(*t.grid(), values)
}

/// Quadrature weights per node.
#[derive(Clone, Debug, PartialEq)]
pub struct Measure {
    weights: Vec<f64>,
}

impl Measure {
    /// `dμ = √det g · cell volume`.
    pub fn riemannian(metric: &MetricField) -> Self {
        Measure {
            weights: metric.volume_weights(),
        }
    }

    /// `dV = H dμ`.
    pub fn weighted(metric: &MetricField, h: &ScalarField) -> Result<Self> {
        h.check_grid(metric.grid())?;
        check_positive(h)?;
        let cv = metric.grid().cell_volume();
        let weights = h.values().iter().zip(metric.sqrt_det()).map(|(a, b)| a * b * cv).collect();
        Ok(Measure { weights })
    }

    /// Unit-mass uniform measure, `1/N³` per node.
    pub fn uniform(grid: &Grid) -> Self {
        Measure {
            weights: vec![1.0 / grid.len() as f64; grid.len()],
        }
    }

    pub fn from_weights(weights: Vec<f64>) -> Self {
        Measure { weights }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total(&self) -> f64 {
        sum(&self.weights)
    }

    /// Rescaled to unit total mass.
    pub fn normalized(mut self) -> Self {
        let t = self.total();
        for w in self.weights.iter_mut() {
            *w /= t;
        }
        self
    }
}

/// `Σ u·w` over nodes in index order.
pub fn integrate(u: &ScalarField, measure: &Measure) -> f64 {
    dot(u.values(), measure.weights())
}

/// Deterministic dot product in index order.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |s, (x, y)| s + x * y)
}

pub(crate) fn sum(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |s, x| s + x)
}

/// `Σ u·v·w`.
pub(crate) fn dot3(a: &[f64], b: &[f64], w: &[f64]) -> f64 {
    a.iter().zip(b).zip(w).fold(0.0, |s, ((x, y), z)| s + x * y * z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::FdOrder;

    #[test]
    fn constant_has_zero_derivatives() {
        let grid = Grid::new(8, FdOrder::Fourth).unwrap();
        let m = MetricField::flat(grid);
        let u = ScalarField::constant(grid, 2.5);
        assert_eq!(grad_norm_sq(&u, &m).max_abs(), 0.0);
        assert_eq!(hessian(&u, &m).max_abs(), 0.0);
        assert_eq!(laplace_beltrami(&u, &m).max_abs(), 0.0);
    }

    #[test]
    fn uniform_measure_integrates_sin_squared() {
        let grid = Grid::new(16, FdOrder::Fourth).unwrap();
        let u = ScalarField::from_fn(grid, |x| libm::sin(x[0]).powi(2));
        assert!((integrate(&u, &Measure::uniform(&grid)) - 0.5).abs() < 1e-14);
    }
}

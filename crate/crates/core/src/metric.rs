//! Riemannian metrics sampled on the grid and the initial-data factory.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::{ScalarField, SymTensorField};
use crate::grid::{FdOrder, Grid};
use crate::operators::DivergenceOperator;
use crate::sym3::Sym3;

/// Smallest admissible pointwise eigenvalue of a metric.
pub const EPS_PD: f64 = 1e-10;

/// Symmetric positive-definite metric with cached inverse and volume density.
#[derive(Clone, Debug)]
pub struct MetricField {
    g: SymTensorField,
    inv: Vec<Sym3>,
    sqrt_det: Vec<f64>,
    uniform: bool,
}

impl MetricField {
    /// Validates positive definiteness at every node and caches `g⁻¹`, `√det g`.
    pub fn new(g: SymTensorField) -> Result<Self> {
        let uniform = g.is_uniform();
        let values = g.values();
        if uniform {
            let g0 = values[0];
            let min = g0.eigenvalues()[0];
            if !(min > EPS_PD) {
                return Err(Error::NotPositiveDefinite {
                    node: 0,
                    min_eigenvalue: min,
                });
            }
            let inv0 = g0.inverse().ok_or(Error::NotPositiveDefinite {
                node: 0,
                min_eigenvalue: min,
            })?;
            let n = values.len();
            return Ok(MetricField {
                inv: vec![inv0; n],
                sqrt_det: vec![libm::sqrt(g0.det()); n],
                g,
                uniform,
            });
        }
        let mut worst = (0usize, f64::INFINITY);
        for (node, t) in values.iter().enumerate() {
            let e = t.eigenvalues()[0];
            if !(e >= worst.1) {
                worst = (node, e);
            }
        }
        if !(worst.1 > EPS_PD) {
            return Err(Error::NotPositiveDefinite {
                node: worst.0,
                min_eigenvalue: worst.1,
            });
        }
        let mut inv = Vec::with_capacity(values.len());
        for (node, t) in values.iter().enumerate() {
            inv.push(t.inverse().ok_or(Error::NotPositiveDefinite {
                node,
                min_eigenvalue: worst.1,
            })?);
        }
        let sqrt_det = values.iter().map(|t| libm::sqrt(t.det())).collect();
        Ok(MetricField {
            g,
            inv,
            sqrt_det,
            uniform,
        })
    }

    /// Builds the caches without the eigenvalue scan, for tensors already
    /// known to be positive definite (stored flow snapshots and convex
    /// combinations of them).
    pub(crate) fn from_validated(g: SymTensorField) -> Self {
        let uniform = g.is_uniform();
        let n = g.values().len();
        let (inv, sqrt_det) = if uniform {
            let g0 = g.values()[0];
            (vec![g0.inverse().expect("validated metric"); n], vec![libm::sqrt(g0.det()); n])
        } else {
            (
                g.values().iter().map(|t| t.inverse().expect("validated metric")).collect(),
                g.values().iter().map(|t| libm::sqrt(t.det())).collect(),
            )
        };
        MetricField {
            g,
            inv,
            sqrt_det,
            uniform,
        }
    }

    pub fn from_values(grid: Grid, values: Vec<Sym3>) -> Result<Self> {
        Self::new(SymTensorField::new(grid, values)?)
    }

    pub fn flat(grid: Grid) -> Self {
        Self::new(SymTensorField::from_vec(grid, vec![Sym3::IDENTITY; grid.len()]))
            .expect("identity is positive definite")
    }

    pub fn grid(&self) -> &Grid {
        self.g.grid()
    }

    pub fn tensor(&self) -> &SymTensorField {
        &self.g
    }

    pub fn components(&self) -> &[Sym3] {
        self.g.values()
    }

    pub fn inverse(&self) -> &[Sym3] {
        &self.inv
    }

    pub fn sqrt_det(&self) -> &[f64] {
        &self.sqrt_det
    }

    pub fn sqrt_det_field(&self) -> ScalarField {
        ScalarField::from_vec(*self.grid(), self.sqrt_det.clone())
    }

    /// True when every node carries the same tensor.
    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    /// `max_nodes tr g^{ij}`, the stiffness scale of the Laplacian.
    pub fn max_inverse_trace(&self) -> f64 {
        self.inv.iter().map(Sym3::trace).fold(0.0, f64::max)
    }

    /// Riemannian volume element per node, `√det g · cell volume`.
    pub fn volume_weights(&self) -> Vec<f64> {
        let cv = self.grid().cell_volume();
        self.sqrt_det.iter().map(|s| s * cv).collect()
    }

    /// Same metric multiplied by a positive constant.
    pub fn scaled(&self, c: f64) -> Result<MetricField> {
        let values = self.components().iter().map(|t| *t * c).collect();
        MetricField::from_values(*self.grid(), values)
    }

    /// Same metric sampled with a different stencil order.
    pub fn with_order(&self, order: FdOrder) -> MetricField {
        let grid = self.grid().with_order(order);
        MetricField {
            g: SymTensorField::from_vec(grid, self.components().to_vec()),
            ..self.clone()
        }
    }

    /// Divergence-form Laplace–Beltrami operator.
    pub fn laplacian_operator(&self) -> DivergenceOperator {
        DivergenceOperator::from_metric(*self.grid(), &self.inv, self.sqrt_det.clone())
    }

    /// Divergence-form drifting Laplacian with weight `H √det g`.
    pub fn drift_operator(&self, h: &ScalarField) -> Result<DivergenceOperator> {
        h.check_grid(self.grid())?;
        check_positive(h)?;
        let weight = h.values().iter().zip(&self.sqrt_det).map(|(a, b)| a * b).collect();
        Ok(DivergenceOperator::from_metric(*self.grid(), &self.inv, weight))
    }

    /// Pointwise linear interpolation `(1−θ) a + θ b`.
    pub fn lerp(a: &MetricField, b: &MetricField, theta: f64) -> Result<MetricField> {
        if a.grid().nodes_per_axis() != b.grid().nodes_per_axis() {
            return Err(Error::GridMismatch);
        }
        let values = a
            .components()
            .iter()
            .zip(b.components())
            .map(|(x, y)| *x * (1.0 - theta) + *y * theta)
            .collect();
        Ok(MetricField::from_validated(SymTensorField::from_vec(*a.grid(), values)))
    }
}

pub(crate) fn check_positive(h: &ScalarField) -> Result<()> {
    match h.values().iter().enumerate().find(|(_, &x)| !(x > 0.0)) {
        Some((node, &value)) => Err(Error::NonPositiveWeight { node, value }),
        None => Ok(()),
    }
}

/// Initial-data presets.
#[derive(Clone, Debug, PartialEq)]
pub enum MetricPreset {
    /// `g = δ`.
    Flat,
    /// `g = e^{2φ} δ` with `φ = amplitude · sin(mode · x)`.
    Conformal { amplitude: f64, mode: [i32; 3] },
    /// `g = diag(e^{2 a_i sin x^{axes[i]}})`.
    Anisotropic { amplitudes: [f64; 3], axes: [usize; 3] },
    /// `g = δ + amplitude · P` for a seeded smooth symmetric field `P`
    /// (Fourier modes up to `max_mode` per axis) normalized so that its
    /// smallest pointwise eigenvalue is `−3`; positive definite for
    /// amplitudes below `1/3`.
    RandomSmooth { seed: u64, amplitude: f64, max_mode: u32 },
}

/// Optional parameters for [`MetricPreset::from_name`]; unset fields take defaults.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricParams {
    pub amplitude: Option<f64>,
    pub mode: Option<[i32; 3]>,
    pub amplitudes: Option<[f64; 3]>,
    pub axes: Option<[usize; 3]>,
    pub seed: Option<u64>,
    pub max_mode: Option<u32>,
}

pub const PRESET_NAMES: [&str; 4] = ["flat", "conformal", "anisotropic", "random-smooth"];

impl MetricPreset {
    pub fn from_name(name: &str, params: &MetricParams) -> Result<Self> {
        match name {
            "flat" => Ok(MetricPreset::Flat),
            "conformal" => Ok(MetricPreset::Conformal {
                amplitude: params.amplitude.unwrap_or(0.1),
                mode: params.mode.unwrap_or([1, 0, 0]),
            }),
            "anisotropic" => {
                let axes = params.axes.unwrap_or([0, 1, 2]);
                if axes.iter().any(|&a| a > 2) {
                    return Err(Error::InvalidParameter {
                        name: "axes",
                        reason: "axis indices must be 0, 1 or 2".to_string(),
                    });
                }
                Ok(MetricPreset::Anisotropic {
                    amplitudes: params.amplitudes.unwrap_or([0.1, 0.0, 0.0]),
                    axes,
                })
            }
            "random-smooth" => Ok(MetricPreset::RandomSmooth {
                seed: params.seed.unwrap_or(0),
                amplitude: params.amplitude.unwrap_or(0.1),
                max_mode: params.max_mode.unwrap_or(2),
            }),
            other => Err(Error::UnknownPreset(other.to_string())),
        }
    }

    /// Samples the preset on `grid` and validates the result.
    pub fn build(&self, grid: Grid) -> Result<MetricField> {
        match *self {
            MetricPreset::Flat => Ok(MetricField::flat(grid)),
            MetricPreset::Conformal { amplitude, mode } => {
                let k = mode.map(f64::from);
                let values = (0..grid.len())
                    .map(|i| {
                        let x = grid.position(i);
                        let phi = amplitude * libm::sin(k[0] * x[0] + k[1] * x[1] + k[2] * x[2]);
                        Sym3::IDENTITY * libm::exp(2.0 * phi)
                    })
                    .collect();
                MetricField::from_values(grid, values)
            }
            MetricPreset::Anisotropic { amplitudes, axes } => {
                let values = (0..grid.len())
                    .map(|i| {
                        let x = grid.position(i);
                        let s = |a: usize| libm::exp(2.0 * amplitudes[a] * libm::sin(x[axes[a]]));
                        Sym3::diag(s(0), s(1), s(2))
                    })
                    .collect();
                MetricField::from_values(grid, values)
            }
            MetricPreset::RandomSmooth {
                seed,
                amplitude,
                max_mode,
            } => {
                if !(amplitude >= 0.0) || !amplitude.is_finite() {
                    return Err(Error::InvalidParameter {
                        name: "amplitude",
                        reason: "must be finite and nonnegative".to_string(),
                    });
                }
                if max_mode == 0 {
                    return Err(Error::InvalidParameter {
                        name: "max_mode",
                        reason: "must be at least 1".to_string(),
                    });
                }
                let field = RandomTensorField::new(seed, max_mode);
                let values = (0..grid.len())
                    .map(|i| Sym3::IDENTITY + field.eval(grid.position(i)) * amplitude)
                    .collect();
                MetricField::from_values(grid, values)
            }
        }
    }
}

/// Convenience wrapper: `metric_from_preset("conformal", &params, grid)`.
pub fn metric_from_preset(name: &str, params: &MetricParams, grid: Grid) -> Result<MetricField> {
    MetricPreset::from_name(name, params)?.build(grid)
}

/// Nodes per axis of the reference grid that fixes the normalization of the
/// random field, so the same seed describes the same continuum metric on every
/// grid.
const REFERENCE_NODES: usize = 24;

struct RandomTensorField {
    modes: Vec<([f64; 3], f64, Sym3)>,
    scale: f64,
}

impl RandomTensorField {
    fn new(seed: u64, max_mode: u32) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = max_mode as i32;
        let mut modes = Vec::new();
        for a in -k..=k {
            for b in -k..=k {
                for c in -k..=k {
                    // One representative of each ±k pair.
                    let first = if a != 0 { a } else if b != 0 { b } else { c };
                    if first <= 0 {
                        continue;
                    }
                    let damp = 1.0 / (1.0 + (a * a + b * b + c * c) as f64);
                    let mut coeff = Sym3::ZERO;
                    for slot in coeff.0.iter_mut() {
                        *slot = rng.gen_range(-1.0..1.0) * damp;
                    }
                    let phase = rng.gen_range(0.0..core::f64::consts::TAU);
                    modes.push(([a as f64, b as f64, c as f64], phase, coeff));
                }
            }
        }
        let mut field = RandomTensorField { modes, scale: 1.0 };
        let reference = Grid::new(REFERENCE_NODES, FdOrder::Second).expect("reference grid");
        let min = (0..reference.len())
            .map(|i| field.eval(reference.position(i)).eigenvalues()[0])
            .fold(f64::INFINITY, f64::min);
        field.scale = 3.0 / libm::fabs(min);
        field
    }

    fn eval(&self, x: [f64; 3]) -> Sym3 {
        let mut s = Sym3::ZERO;
        for (k, phase, coeff) in &self.modes {
            let arg = k[0] * x[0] + k[1] * x[1] + k[2] * x[2] + phase;
            s += *coeff * libm::cos(arg);
        }
        s * self.scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::is_uniform;

    #[test]
    fn random_field_is_uniform_free_and_normalized() {
        let grid = Grid::new(REFERENCE_NODES, FdOrder::Second).unwrap();
        let f = RandomTensorField::new(3, 2);
        let min = (0..grid.len())
            .map(|i| f.eval(grid.position(i)).eigenvalues()[0])
            .fold(f64::INFINITY, f64::min);
        assert!((min + 3.0).abs() < 1e-12);
        assert!(!is_uniform(&grid.sample(|x| f.eval(x).0[0])));
    }

    #[test]
    fn flat_metric_caches() {
        let grid = Grid::new(8, FdOrder::Fourth).unwrap();
        let m = MetricField::flat(grid);
        assert!(m.is_uniform());
        assert_eq!(m.sqrt_det()[5], 1.0);
        assert_eq!(m.inverse()[5], Sym3::IDENTITY);
        assert_eq!(m.max_inverse_trace(), 3.0);
    }
}

//! Node-indexed fields on a [`Grid`].

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::sym3::Sym3;

/// One value per node.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    /// Wraps `values`, checking the length and that every value is finite.
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        if let Some((node, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { node, value });
        }
        Ok(ScalarField { grid, values })
    }

    pub(crate) fn from_vec(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        ScalarField { grid, values }
    }

    pub fn from_fn(grid: Grid, f: impl FnMut([f64; 3]) -> f64) -> Self {
        ScalarField {
            grid,
            values: grid.sample(f),
        }
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        ScalarField {
            grid,
            values: vec![value; grid.len()],
        }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    /// Seeded smooth field `Σ c_k cos(k·x + φ_k)` over `|k_i| ≤ max_mode`,
    /// `c_k ~ U(−1, 1)/(1 + |k|²)`. The same seed gives the same function on
    /// every grid.
    pub fn random_smooth(grid: Grid, seed: u64, max_mode: u32) -> Self {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let k = max_mode as i32;
        let mut modes = Vec::new();
        for a in -k..=k {
            for b in -k..=k {
                for c in -k..=k {
                    let first = if a != 0 { a } else if b != 0 { b } else { c };
                    if first <= 0 {
                        continue;
                    }
                    let damp = 1.0 / (1.0 + (a * a + b * b + c * c) as f64);
                    let coeff = rng.gen_range(-1.0..1.0) * damp;
                    let phase = rng.gen_range(0.0..core::f64::consts::TAU);
                    modes.push(([a as f64, b as f64, c as f64], phase, coeff));
                }
            }
        }
        Self::from_fn(grid, |x| {
            modes
                .iter()
                .map(|(k, phase, c)| c * libm::cos(k[0] * x[0] + k[1] * x[1] + k[2] * x[2] + phase))
                .sum()
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, x| m.max(libm::fabs(*x)))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> ScalarField {
        debug_assert_eq!(self.grid, other.grid);
        ScalarField {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    /// True when every node holds the bit-identical value.
    pub fn is_uniform(&self) -> bool {
        is_uniform(&self.values)
    }

    pub(crate) fn check_grid(&self, grid: &Grid) -> Result<()> {
        if self.grid.nodes_per_axis() != grid.nodes_per_axis() {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }
}

pub(crate) fn is_uniform<T: Copy + PartialEq>(values: &[T]) -> bool {
    match values.first() {
        Some(first) => values.iter().all(|v| v == first),
        None => true,
    }
}

/// One contravariant or covariant 3-vector per node.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    grid: Grid,
    values: Vec<[f64; 3]>,
}

impl VectorField {
    pub(crate) fn from_vec(grid: Grid, values: Vec<[f64; 3]>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        VectorField { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[[f64; 3]] {
        &self.values
    }

    /// The `axis` component as a flat array.
    pub fn component(&self, axis: usize) -> Vec<f64> {
        self.values.iter().map(|v| v[axis]).collect()
    }
}

/// One symmetric 2-tensor per node.
#[derive(Clone, Debug, PartialEq)]
pub struct SymTensorField {
    grid: Grid,
    values: Vec<Sym3>,
}

impl SymTensorField {
    pub fn new(grid: Grid, values: Vec<Sym3>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        if let Some((node, t)) = values.iter().enumerate().find(|(_, t)| !t.is_finite()) {
            let value = t.0.iter().copied().find(|x| !x.is_finite()).unwrap_or(f64::NAN);
            return Err(Error::NonFinite { node, value });
        }
        Ok(SymTensorField { grid, values })
    }

    pub(crate) fn from_vec(grid: Grid, values: Vec<Sym3>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        SymTensorField { grid, values }
    }

    pub fn from_fn(grid: Grid, mut f: impl FnMut([f64; 3]) -> Sym3) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.position(i))).collect();
        SymTensorField { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Sym3] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Sym3] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Sym3> {
        self.values
    }

    /// Packed component `slot` (see [`crate::sym3::PAIRS`]) as a flat array.
    pub fn component(&self, slot: usize) -> Vec<f64> {
        self.values.iter().map(|t| t.0[slot]).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, t| m.max(t.max_abs()))
    }

    pub fn is_uniform(&self) -> bool {
        is_uniform(&self.values)
    }
}

/// Storage for per-step snapshots that collapses spatially uniform data to a
/// single value.
#[derive(Clone, Debug, PartialEq)]
pub enum NodeData<T> {
    Uniform { value: T, len: usize },
    Nodal(Vec<T>),
}

impl<T: Copy + PartialEq> NodeData<T> {
    pub fn pack(values: Vec<T>) -> Self {
        if values.len() > 1 && is_uniform(&values) {
            NodeData::Uniform {
                value: values[0],
                len: values.len(),
            }
        } else {
            NodeData::Nodal(values)
        }
    }

    pub fn len(&self) -> usize {
        match self {
            NodeData::Uniform { len, .. } => *len,
            NodeData::Nodal(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn get(&self, idx: usize) -> T {
        match self {
            NodeData::Uniform { value, .. } => *value,
            NodeData::Nodal(v) => v[idx],
        }
    }

    pub fn unpack(&self) -> Vec<T> {
        match self {
            NodeData::Uniform { value, len } => vec![*value; *len],
            NodeData::Nodal(v) => v.clone(),
        }
    }
}

impl NodeData<f64> {
    pub fn to_field(&self, grid: Grid) -> ScalarField {
        ScalarField::from_vec(grid, self.unpack())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::FdOrder;

    #[test]
    fn rejects_non_finite_values() {
        let g = Grid::new(8, FdOrder::Second).unwrap();
        let mut v = vec![0.0; g.len()];
        v[17] = f64::NAN;
        assert!(matches!(ScalarField::new(g, v), Err(Error::NonFinite { node: 17, .. })));
    }

    #[test]
    fn node_data_collapses_uniform() {
        let packed = NodeData::pack(vec![2.0; 10]);
        assert!(matches!(packed, NodeData::Uniform { len: 10, .. }));
        assert_eq!(packed.unpack(), vec![2.0; 10]);
        let nodal = NodeData::pack(vec![1.0, 2.0]);
        assert_eq!(nodal.get(1), 2.0);
    }
}

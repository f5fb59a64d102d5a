//! Christoffel symbols, Ricci and scalar curvature, and the Bakry–Émery tensor.

use alloc::vec;
use alloc::vec::Vec;

use crate::calculus::{covector, hessian_with};
use crate::error::Result;
use crate::field::{ScalarField, SymTensorField};
use crate::grid::Grid;
use crate::metric::{check_positive, MetricField};
use crate::sym3::{Sym3, PAIRS};

/// Christoffel symbols of the second kind, `values[node][k]` holding the
/// symmetric matrix `Γ^k_{ij}`.
#[derive(Clone, Debug)]
pub struct Christoffel {
    grid: Grid,
    values: Vec<[Sym3; 3]>,
    zero: bool,
}

impl Christoffel {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[[Sym3; 3]] {
        &self.values
    }

    /// `Γ^k_{ij}` at a node.
    #[inline]
    pub fn get(&self, node: usize, k: usize, i: usize, j: usize) -> f64 {
        self.values[node][k].get(i, j)
    }

    /// True when the symbols vanish identically (uniform metric).
    pub fn is_zero(&self) -> bool {
        self.zero
    }

    fn component(&self, k: usize, slot: usize) -> Vec<f64> {
        self.values.iter().map(|g| g[k].0[slot]).collect()
    }
}

/// `Γ^k_{ij} = ½ g^{kl}(∂_i g_{jl} + ∂_j g_{il} − ∂_l g_{ij})` with centered
/// differences. Symmetry in `(i, j)` holds by storage.
pub fn christoffel(metric: &MetricField) -> Christoffel {
    let grid = *metric.grid();
    if metric.is_uniform() {
        return Christoffel {
            grid,
            values: vec![[Sym3::ZERO; 3]; grid.len()],
            zero: true,
        };
    }
    let comps: [Vec<f64>; 6] = core::array::from_fn(|s| metric.tensor().component(s));
    // dg[l][slot] = ∂_l g_slot
    let dg: [[Vec<f64>; 6]; 3] = core::array::from_fn(|l| core::array::from_fn(|s| grid.d1(&comps[s], l)));
    let inv = metric.inverse();
    let values = (0..grid.len())
        .map(|node| {
            let d = |l: usize, i: usize, j: usize| dg[l][slot_of(i, j)][node];
            // First kind, Γ_{l,ij}.
            let first: [Sym3; 3] =
                core::array::from_fn(|l| Sym3::from_fn(|i, j| 0.5 * (d(i, j, l) + d(j, i, l) - d(l, i, j))));
            core::array::from_fn(|k| {
                let gi = &inv[node];
                first[0] * gi.get(k, 0) + first[1] * gi.get(k, 1) + first[2] * gi.get(k, 2)
            })
        })
        .collect();
    Christoffel {
        grid,
        values,
        zero: false,
    }
}

#[inline]
fn slot_of(i: usize, j: usize) -> usize {
    const PACK: [[usize; 3]; 3] = [[0, 1, 2], [1, 3, 4], [2, 4, 5]];
    PACK[i][j]
}

/// Ricci tensor `R_ij = ∂_k Γ^k_ij − ∂_i Γ^k_kj + Γ^k_kl Γ^l_ij − Γ^k_il Γ^l_kj`,
/// symmetrized.
pub fn ricci(metric: &MetricField) -> SymTensorField {
    ricci_with(metric, &christoffel(metric))
}

pub fn ricci_with(metric: &MetricField, gamma: &Christoffel) -> SymTensorField {
    let grid = *metric.grid();
    if gamma.is_zero() {
        return SymTensorField::from_vec(grid, vec![Sym3::ZERO; grid.len()]);
    }
    let mut ric = vec![Sym3::ZERO; grid.len()];
    // ∂_k Γ^k_ij
    for k in 0..3 {
        for slot in 0..6 {
            let d = grid.d1(&gamma.component(k, slot), k);
            for (r, x) in ric.iter_mut().zip(&d) {
                r.0[slot] += x;
            }
        }
    }
    // Contracted symbols A_j = Γ^k_kj, then −½(∂_i A_j + ∂_j A_i).
    let contracted: [Vec<f64>; 3] = core::array::from_fn(|j| {
        gamma.values().iter().map(|g| g[0].get(0, j) + g[1].get(1, j) + g[2].get(2, j)).collect()
    });
    let da: [[Vec<f64>; 3]; 3] = core::array::from_fn(|i| core::array::from_fn(|j| grid.d1(&contracted[j], i)));
    for (slot, &(i, j)) in PAIRS.iter().enumerate() {
        for (node, r) in ric.iter_mut().enumerate() {
            r.0[slot] -= 0.5 * (da[i][j][node] + da[j][i][node]);
        }
    }
    for (node, r) in ric.iter_mut().enumerate() {
        let g = &gamma.values()[node];
        let a = [contracted[0][node], contracted[1][node], contracted[2][node]];
        for (slot, &(i, j)) in PAIRS.iter().enumerate() {
            let mut s = 0.0;
            for l in 0..3 {
                s += a[l] * g[l].get(i, j);
                for k in 0..3 {
                    s -= g[k].get(i, l) * g[l].get(k, j);
                }
            }
            r.0[slot] += s;
        }
    }
    SymTensorField::from_vec(grid, ric)
}

/// `R = g^{ij} R_ij`.
pub fn scalar_curvature(metric: &MetricField) -> ScalarField {
    scalar_from_ricci(metric, &ricci(metric))
}

pub fn scalar_from_ricci(metric: &MetricField, ric: &SymTensorField) -> ScalarField {
    let values = metric.inverse().iter().zip(ric.values()).map(|(gi, r)| gi.dot(r)).collect();
    ScalarField::from_vec(*metric.grid(), values)
}

/// `Ric_f = Ric + Hess f` with `f = −log H`, i.e.
/// `Hess f = −Hess H / H + dH ⊗ dH / H²`.
pub fn bakry_emery(metric: &MetricField, h: &ScalarField) -> Result<SymTensorField> {
    let gamma = christoffel(metric);
    let ric = ricci_with(metric, &gamma);
    bakry_emery_with(metric, &gamma, &ric, h)
}

/// As [`bakry_emery`] with precomputed connection and Ricci tensor.
pub fn bakry_emery_with(
    metric: &MetricField,
    gamma: &Christoffel,
    ric: &SymTensorField,
    h: &ScalarField,
) -> Result<SymTensorField> {
    h.check_grid(metric.grid())?;
    check_positive(h)?;
    if h.is_uniform() {
        return Ok(ric.clone());
    }
    let hess_f = hess_log_weight(metric, gamma, h);
    let values = ric.values().iter().zip(hess_f).map(|(r, f)| *r + f).collect();
    Ok(SymTensorField::from_vec(*metric.grid(), values))
}

/// `Hess f` for `f = −log H`.
pub(crate) fn hess_log_weight(metric: &MetricField, gamma: &Christoffel, h: &ScalarField) -> Vec<Sym3> {
    let hess_h = hessian_with(h, metric, gamma);
    let dh = covector(h);
    hess_h
        .values()
        .iter()
        .zip(h.values())
        .zip(dh.values())
        .map(|((hh, &hv), d)| *hh * (-1.0 / hv) + Sym3::outer(*d, *d) * (1.0 / (hv * hv)))
        .collect()
}

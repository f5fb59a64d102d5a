//! Divergence-form second-order operators.
//!
//! For a per-node coefficient tensor `C^{ab}` the operator
//!
//! ```text
//! K(C) u = Σ_a δ⁻_a ( C^{aa}_{½} δ⁺_a u ) + Σ_{a≠b} D_a ( C^{ab} D_b u )
//! ```
//!
//! pairs the staggered forward difference `δ⁺` with its negative adjoint `δ⁻`
//! (coefficients interpolated to half nodes) and uses the centered difference
//! `D` for mixed terms. Both parts are symmetric matrices, so `K(C)/W` is
//! self-adjoint in the `W`-weighted inner product for any positive weight `W`.
//! With `C = W g⁻¹` and `W = √det g` this is the Laplace–Beltrami operator;
//! with `W = H √det g` it is the drifting Laplacian.

use alloc::vec;
use alloc::vec::Vec;

use crate::field::is_uniform;
use crate::grid::{Grid, Stencil, StencilKind};
use crate::sym3::Sym3;

/// Matrix-free `u ↦ K(C)u / W`.
#[derive(Clone, Debug)]
pub struct DivergenceOperator {
    grid: Grid,
    half: [Vec<f64>; 3],
    mixed: Option<[Vec<f64>; 3]>,
    weight: Vec<f64>,
}

const MIXED_SLOTS: [(usize, usize, usize); 3] = [(0, 1, 1), (0, 2, 2), (1, 2, 4)];

impl DivergenceOperator {
    /// Builds the operator for coefficient `coeff` (one tensor per node) and
    /// mass weight `weight`.
    pub fn new(grid: Grid, coeff: &[Sym3], weight: Vec<f64>) -> Self {
        debug_assert_eq!(coeff.len(), grid.len());
        debug_assert_eq!(weight.len(), grid.len());
        let interp = grid.stencil(StencilKind::Interpolate);
        let half = core::array::from_fn(|a| {
            let diag: Vec<f64> = coeff.iter().map(|c| c.get(a, a)).collect();
            let mut out = vec![0.0; grid.len()];
            grid.apply_axis(&diag, &mut out, a, &interp);
            out
        });
        let has_mixed = coeff.iter().any(|c| c.0[1] != 0.0 || c.0[2] != 0.0 || c.0[4] != 0.0);
        let mixed = has_mixed.then(|| {
            core::array::from_fn(|s| coeff.iter().map(|c| c.0[MIXED_SLOTS[s].2]).collect())
        });
        DivergenceOperator {
            grid,
            half,
            mixed,
            weight,
        }
    }

    /// `C = W g⁻¹` from an inverse metric and weight.
    pub fn from_metric(grid: Grid, g_inv: &[Sym3], weight: Vec<f64>) -> Self {
        let coeff: Vec<Sym3> = g_inv.iter().zip(&weight).map(|(gi, &w)| *gi * w).collect();
        Self::new(grid, &coeff, weight)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn weight(&self) -> &[f64] {
        &self.weight
    }

    pub fn has_mixed_terms(&self) -> bool {
        self.mixed.is_some()
    }

    /// `K(C) u`, the flux divergence before division by the weight.
    pub fn apply_flux(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.len()];
        self.apply_flux_into(u, &mut out);
        out
    }

    pub(crate) fn apply_flux_into(&self, u: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        if is_uniform(u) {
            return;
        }
        let g = &self.grid;
        let fwd = g.stencil(StencilKind::StaggerForward);
        let bwd = g.stencil(StencilKind::StaggerBackward);
        let mut flux = vec![0.0; g.len()];
        let mut tmp = vec![0.0; g.len()];
        for a in 0..3 {
            g.apply_axis(u, &mut flux, a, &fwd);
            for (f, c) in flux.iter_mut().zip(&self.half[a]) {
                *f *= c;
            }
            g.apply_axis(&flux, &mut tmp, a, &bwd);
            for (o, t) in out.iter_mut().zip(&tmp) {
                *o += t;
            }
        }
        if let Some(mixed) = &self.mixed {
            let cen = g.stencil(StencilKind::Centered);
            let du: [Vec<f64>; 3] = core::array::from_fn(|b| {
                let mut d = vec![0.0; g.len()];
                g.apply_axis(u, &mut d, b, &cen);
                d
            });
            // Σ_{b≠a} C^{ab} D_b u as two (slot, axis) pairs per axis.
            const PARTNERS: [[(usize, usize); 2]; 3] = [[(0, 1), (1, 2)], [(0, 0), (2, 2)], [(1, 0), (2, 1)]];
            for a in 0..3 {
                let [(s0, b0), (s1, b1)] = PARTNERS[a];
                let (c0, c1, d0, d1) = (&mixed[s0], &mixed[s1], &du[b0], &du[b1]);
                for idx in 0..flux.len() {
                    flux[idx] = c0[idx] * d0[idx] + c1[idx] * d1[idx];
                }
                g.apply_axis(&flux, &mut tmp, a, &cen);
                for (o, t) in out.iter_mut().zip(&tmp) {
                    *o += t;
                }
            }
        }
    }

    /// `K(C) u / W`.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let mut out = self.apply_flux(u);
        for (o, w) in out.iter_mut().zip(&self.weight) {
            *o /= w;
        }
        out
    }

    /// Diagonal of `−K(C)`; nonnegative for positive coefficients. The mixed
    /// terms contribute nothing to the diagonal.
    pub fn neg_flux_diagonal(&self) -> Vec<f64> {
        let g = &self.grid;
        let fwd = g.stencil(StencilKind::StaggerForward);
        let bwd = g.stencil(StencilKind::StaggerBackward);
        // Node i receives c_o · f_{−o} · C_{i+o+½} from backward tap o.
        let taps = bwd
            .taps
            .iter()
            .filter_map(|&(o, c)| fwd.taps.iter().find(|&&(fo, _)| fo == -o).map(|&(_, f)| (o, -c * f)))
            .collect();
        let diag_stencil = Stencil { taps, power: 2 };
        let mut out = vec![0.0; g.len()];
        let mut tmp = vec![0.0; g.len()];
        for a in 0..3 {
            g.apply_axis(&self.half[a], &mut tmp, a, &diag_stencil);
            for (o, t) in out.iter_mut().zip(&tmp) {
                *o += t;
            }
        }
        out
    }

    /// Flux-form energy `−Σ u K(C) u` (no cell volume), computed from the
    /// staggered fluxes directly so that it is nonnegative up to round-off
    /// whenever the coefficient is positive.
    pub fn energy(&self, u: &[f64]) -> f64 {
        self.bilinear(u, u)
    }

    /// Symmetric form `a(u, w) = −Σ w K(C) u` in flux form.
    pub fn bilinear(&self, u: &[f64], w: &[f64]) -> f64 {
        let g = &self.grid;
        let fwd = g.stencil(StencilKind::StaggerForward);
        let mut du = vec![0.0; g.len()];
        let mut dw = vec![0.0; g.len()];
        let mut total = 0.0;
        for a in 0..3 {
            g.apply_axis(u, &mut du, a, &fwd);
            g.apply_axis(w, &mut dw, a, &fwd);
            total += du.iter().zip(&dw).zip(&self.half[a]).map(|((x, y), c)| c * x * y).sum::<f64>();
        }
        if let Some(mixed) = &self.mixed {
            let cen = g.stencil(StencilKind::Centered);
            let d = |f: &[f64], axis: usize| {
                let mut out = vec![0.0; g.len()];
                g.apply_axis(f, &mut out, axis, &cen);
                out
            };
            let du: [Vec<f64>; 3] = core::array::from_fn(|b| d(u, b));
            let dw: [Vec<f64>; 3] = core::array::from_fn(|b| d(w, b));
            for (slot, &(i, j, _)) in MIXED_SLOTS.iter().enumerate() {
                let c = &mixed[slot];
                for idx in 0..g.len() {
                    total += c[idx] * (du[i][idx] * dw[j][idx] + du[j][idx] * dw[i][idx]);
                }
            }
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::FdOrder;

    fn anisotropic(grid: Grid) -> (Vec<Sym3>, Vec<f64>) {
        let coeff = (0..grid.len())
            .map(|i| {
                let x = grid.position(i);
                Sym3([
                    1.2 + 0.3 * libm::sin(x[1]),
                    0.1 * libm::cos(x[2]),
                    0.05,
                    1.0 + 0.2 * libm::cos(x[0]),
                    -0.07 * libm::sin(x[0] + x[1]),
                    0.9,
                ])
            })
            .collect();
        let weight = grid.sample(|x| 1.0 + 0.3 * libm::sin(x[0] - x[2]));
        (coeff, weight)
    }

    #[test]
    fn matrix_is_symmetric() {
        for order in [FdOrder::Second, FdOrder::Fourth] {
            let g = Grid::new(8, order).unwrap();
            let (c, w) = anisotropic(g);
            let op = DivergenceOperator::new(g, &c, w);
            let u = g.sample(|x| libm::sin(x[0]) * libm::cos(2.0 * x[1]) + 0.2 * libm::cos(x[2]));
            let v = g.sample(|x| libm::cos(x[0] + x[2]) + libm::sin(3.0 * x[1]));
            let ku = op.apply_flux(&u);
            let kv = op.apply_flux(&v);
            let a: f64 = v.iter().zip(&ku).map(|(x, y)| x * y).sum();
            let b: f64 = u.iter().zip(&kv).map(|(x, y)| x * y).sum();
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{a} vs {b}");
            assert!((op.bilinear(&u, &v) + a).abs() <= 1e-11 * a.abs().max(1.0));
        }
    }

    #[test]
    fn diagonal_matches_unit_vector_probe() {
        for order in [FdOrder::Second, FdOrder::Fourth] {
            let g = Grid::new(8, order).unwrap();
            let (c, w) = anisotropic(g);
            let op = DivergenceOperator::new(g, &c, w);
            let diag = op.neg_flux_diagonal();
            for idx in [0, 77, 300, 511] {
                let mut e = vec![0.0; g.len()];
                e[idx] = 1.0;
                let ke = op.apply_flux(&e);
                assert!((-ke[idx] - diag[idx]).abs() < 1e-12 * diag[idx]);
            }
        }
    }

    #[test]
    fn annihilates_constants() {
        let g = Grid::new(8, FdOrder::Fourth).unwrap();
        let (c, w) = anisotropic(g);
        let op = DivergenceOperator::new(g, &c, w);
        let ku = op.apply_flux(&vec![3.0; g.len()]);
        assert!(ku.iter().all(|x| x.abs() < 1e-12));
    }
}

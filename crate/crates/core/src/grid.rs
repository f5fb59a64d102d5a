//! Periodic structured grid over the 3-torus `[0, 2π)³` and the one-dimensional
//! finite-difference stencils applied along its axes.
//!
//! Nodes are stored in row-major order: node `(i, j, k)` (indices along
//! `x¹, x², x³`) lives at `(i·N + j)·N + k`, so the last axis is contiguous.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use crate::error::{Error, Result};

/// Spatial dimension `n = m + 1`.
pub const DIM: usize = 3;
/// The integer `m` of the flow equations (`DIM = M + 1`).
pub const M: usize = 2;
/// `m` as a float.
pub const M_F: f64 = M as f64;

/// Smallest admissible number of nodes per axis.
pub const MIN_NODES: usize = 8;

/// Order of accuracy of the difference stencils.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FdOrder {
    Second,
    Fourth,
}

impl FdOrder {
    pub fn from_value(order: u32) -> Result<Self> {
        match order {
            2 => Ok(FdOrder::Second),
            4 => Ok(FdOrder::Fourth),
            other => Err(Error::InvalidParameter {
                name: "fd_order",
                reason: alloc::format!("must be 2 or 4, got {other}"),
            }),
        }
    }

    pub fn value(self) -> u32 {
        match self {
            FdOrder::Second => 2,
            FdOrder::Fourth => 4,
        }
    }
}

impl Default for FdOrder {
    fn default() -> Self {
        FdOrder::Fourth
    }
}

/// A 1-D stencil: `out[t] = h^{-power} Σ c · in[t + offset]` with periodic wrap.
#[derive(Clone, Debug)]
pub(crate) struct Stencil {
    pub taps: Vec<(isize, f64)>,
    pub power: i32,
}

// Staggered first difference from nodes to the half node `t + ½`, in units of 1/h.
const STAGGER2: [(isize, f64); 2] = [(0, -1.0), (1, 1.0)];
const STAGGER4: [(isize, f64); 4] = [
    (-1, 1.0 / 24.0),
    (0, -27.0 / 24.0),
    (1, 27.0 / 24.0),
    (2, -1.0 / 24.0),
];
const CENTERED2: [(isize, f64); 2] = [(-1, -0.5), (1, 0.5)];
const CENTERED4: [(isize, f64); 4] = [
    (-2, 1.0 / 12.0),
    (-1, -8.0 / 12.0),
    (1, 8.0 / 12.0),
    (2, -1.0 / 12.0),
];
const INTERP2: [(isize, f64); 2] = [(0, 0.5), (1, 0.5)];
const INTERP4: [(isize, f64); 4] = [
    (-1, -1.0 / 16.0),
    (0, 9.0 / 16.0),
    (1, 9.0 / 16.0),
    (2, -1.0 / 16.0),
];

const PAD: usize = 3;

/// Uniform periodic grid with `N` nodes per axis and spacing `2π/N`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    n: usize,
    spacing: f64,
    order: FdOrder,
}

impl Grid {
    pub fn new(n: usize, order: FdOrder) -> Result<Self> {
        if n < MIN_NODES {
            return Err(Error::InvalidParameter {
                name: "nodes_per_axis",
                reason: alloc::format!("need at least {MIN_NODES} nodes per axis, got {n}"),
            });
        }
        Ok(Grid {
            n,
            spacing: TAU / n as f64,
            order,
        })
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn fd_order(&self) -> FdOrder {
        self.order
    }

    /// Total number of nodes, `N³`.
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing * self.spacing * self.spacing
    }

    /// Same grid with a different stencil order.
    pub fn with_order(&self, order: FdOrder) -> Grid {
        Grid { order, ..*self }
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let k = idx % self.n;
        let j = (idx / self.n) % self.n;
        let i = idx / (self.n * self.n);
        [i, j, k]
    }

    /// Coordinates `(x¹, x², x³)` of a node.
    #[inline]
    pub fn position(&self, idx: usize) -> [f64; 3] {
        let [i, j, k] = self.coords(idx);
        [
            i as f64 * self.spacing,
            j as f64 * self.spacing,
            k as f64 * self.spacing,
        ]
    }

    /// Memory stride of one step along `axis`.
    #[inline]
    pub fn stride(&self, axis: usize) -> usize {
        match axis {
            0 => self.n * self.n,
            1 => self.n,
            _ => 1,
        }
    }

    /// Samples `f` at every node.
    pub fn sample(&self, mut f: impl FnMut([f64; 3]) -> f64) -> Vec<f64> {
        (0..self.len()).map(|idx| f(self.position(idx))).collect()
    }

    fn taps(&self, kind: StencilKind) -> Stencil {
        let (taps, power): (&[(isize, f64)], i32) = match (kind, self.order) {
            (StencilKind::Centered, FdOrder::Second) => (&CENTERED2, 1),
            (StencilKind::Centered, FdOrder::Fourth) => (&CENTERED4, 1),
            (StencilKind::StaggerForward, FdOrder::Second) => (&STAGGER2, 1),
            (StencilKind::StaggerForward, FdOrder::Fourth) => (&STAGGER4, 1),
            (StencilKind::Interpolate, FdOrder::Second) => (&INTERP2, 0),
            (StencilKind::Interpolate, FdOrder::Fourth) => (&INTERP4, 0),
            (StencilKind::StaggerBackward, _) => {
                // Negative transpose of the forward stencil: maps half nodes back
                // to nodes, so that summation by parts holds exactly.
                let fwd = self.taps(StencilKind::StaggerForward);
                let taps = fwd.taps.iter().rev().map(|&(o, c)| (-o, -c)).collect();
                return Stencil { taps, power: 1 };
            }
            (StencilKind::Second, _) => {
                // Composite backward∘forward second difference.
                let fwd = self.taps(StencilKind::StaggerForward).taps;
                let mut acc: Vec<(isize, f64)> = Vec::new();
                for &(a, fa) in &fwd {
                    for &(b, fb) in &fwd {
                        let off = a - b;
                        let c = -fa * fb;
                        match acc.iter_mut().find(|(o, _)| *o == off) {
                            Some(slot) => slot.1 += c,
                            None => acc.push((off, c)),
                        }
                    }
                }
                acc.sort_by_key(|&(o, _)| o);
                return Stencil {
                    taps: acc,
                    power: 2,
                };
            }
        };
        Stencil {
            taps: taps.to_vec(),
            power,
        }
    }

    pub(crate) fn stencil(&self, kind: StencilKind) -> Stencil {
        self.taps(kind)
    }

    /// Applies a 1-D stencil along `axis`, writing into `out`.
    pub(crate) fn apply_axis(&self, input: &[f64], out: &mut [f64], axis: usize, stencil: &Stencil) {
        debug_assert_eq!(input.len(), self.len());
        debug_assert_eq!(out.len(), self.len());
        let n = self.n;
        let scale = libm::pow(self.spacing, -(stencil.power as f64));
        let inner = self.stride(axis);
        let outer = self.len() / (n * inner);
        // Difference stencils are applied to `u[t+o] − u[t]` so that constants
        // map to exact zeros.
        let zero_sum = libm::fabs(stencil.taps.iter().map(|t| t.1).sum::<f64>()) < 1e-12;
        let center = if zero_sum { 1.0 } else { 0.0 };
        if inner == 1 {
            let mut buf = vec![0.0; n + 2 * PAD];
            for o in 0..outer {
                let line = &input[o * n..(o + 1) * n];
                buf[..PAD].copy_from_slice(&line[n - PAD..]);
                buf[PAD..PAD + n].copy_from_slice(line);
                buf[PAD + n..].copy_from_slice(&line[..PAD]);
                let dst = &mut out[o * n..(o + 1) * n];
                dst.fill(0.0);
                let mid = &buf[PAD..PAD + n];
                for &(off, c) in &stencil.taps {
                    let start = (PAD as isize + off) as usize;
                    let shifted = &buf[start..start + n];
                    for ((d, &x), &m) in dst.iter_mut().zip(shifted).zip(mid) {
                        *d += c * (x - center * m);
                    }
                }
                for d in dst.iter_mut() {
                    *d *= scale;
                }
            }
        } else {
            for o in 0..outer {
                for t in 0..n {
                    let base = (o * n + t) * inner;
                    let dst = &mut out[base..base + inner];
                    let mid = &input[base..base + inner];
                    dst.fill(0.0);
                    for &(off, c) in &stencil.taps {
                        let src = (t as isize + off).rem_euclid(n as isize) as usize;
                        let row = &input[(o * n + src) * inner..(o * n + src + 1) * inner];
                        for ((d, &x), &m) in dst.iter_mut().zip(row).zip(mid) {
                            *d += c * (x - center * m);
                        }
                    }
                    for d in dst.iter_mut() {
                        *d *= scale;
                    }
                }
            }
        }
    }

    /// Convenience wrapper returning a fresh array.
    pub(crate) fn apply(&self, input: &[f64], axis: usize, kind: StencilKind) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.apply_axis(input, &mut out, axis, &self.stencil(kind));
        out
    }

    /// Centered first derivative along `axis`.
    pub fn d1(&self, u: &[f64], axis: usize) -> Vec<f64> {
        self.apply(u, axis, StencilKind::Centered)
    }

    /// Compact second derivative along `axis` (composition of the staggered
    /// backward and forward differences).
    pub fn d2(&self, u: &[f64], axis: usize) -> Vec<f64> {
        self.apply(u, axis, StencilKind::Second)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum StencilKind {
    /// Node to node, first derivative.
    Centered,
    /// Node to half node `t + ½`, first derivative.
    StaggerForward,
    /// Half node to node, first derivative.
    StaggerBackward,
    /// Node to half node, interpolation.
    Interpolate,
    /// Node to node, second derivative.
    Second,
}

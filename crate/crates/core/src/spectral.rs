//! First nonzero eigenpair of `−𝓛_f` in the `dV`-weighted inner product.

use alloc::vec;
use alloc::vec::Vec;

use crate::calculus::{dot3, sum};
use crate::elliptic::{pcg, Preconditioner};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::metric::MetricField;
use crate::operators::DivergenceOperator;

#[derive(Clone, Debug, PartialEq)]
pub struct EigenConfig {
    /// Stop when `‖−𝓛_f u − λu‖_dV ≤ tolerance · λ`.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Relative tolerance of the inner conjugate-gradient solves.
    pub inner_tolerance: f64,
    pub preconditioner: Preconditioner,
    /// Number of vectors iterated together (at least 2).
    pub block_size: usize,
    /// Report the gap to the next Ritz value.
    pub compute_gap: bool,
    /// Seed of the deterministic start vector.
    pub seed: u64,
}

impl Default for EigenConfig {
    fn default() -> Self {
        EigenConfig {
            tolerance: 1e-9,
            max_iterations: 500,
            inner_tolerance: 1e-10,
            preconditioner: Preconditioner::Diagonal,
            block_size: 8,
            compute_gap: true,
            seed: 1,
        }
    }
}

/// Eigenpair with `∫u dV = 0`, `∫u² dV = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenResult {
    pub lambda: f64,
    pub u: ScalarField,
    pub residual: f64,
    pub iterations: usize,
    /// Lowest Ritz value of each iterate.
    pub rayleigh_history: Vec<f64>,
    /// `λ₂ − λ₁` when requested.
    pub gap: Option<f64>,
    /// Set when the gap is below `1e-8`.
    pub near_degenerate: bool,
}

/// Gap below which the pair is flagged as nearly degenerate.
pub const DEGENERACY_GAP: f64 = 1e-8;

struct Weighted<'a> {
    op: &'a DivergenceOperator,
    /// `ρ = H √det g` per node; `dV = ρ · cell volume`.
    rho: &'a [f64],
    total: f64,
}

impl Weighted<'_> {
    /// Removes the `dV`-mean.
    fn project(&self, u: &mut [f64]) {
        let mean = u.iter().zip(self.rho).fold(0.0, |s, (x, r)| s + x * r) / self.total;
        for x in u.iter_mut() {
            *x -= mean;
        }
    }

    fn norm(&self, u: &[f64]) -> f64 {
        libm::sqrt(dot3(u, u, self.rho) / self.total)
    }

    /// `−𝓛_f u`.
    fn apply(&self, u: &[f64]) -> Vec<f64> {
        self.op.apply(u).into_iter().map(|x| -x).collect()
    }
}

/// Smallest nonzero eigenvalue of `−𝓛_f` by block inverse iteration on the
/// `dV`-mean-zero subspace, with a Rayleigh–Ritz step on the block so that a
/// nearly degenerate lowest cluster does not slow convergence.
pub fn drift_eigenpair(metric: &MetricField, h: &ScalarField, cfg: &EigenConfig) -> Result<EigenResult> {
    let op = metric.drift_operator(h)?;
    block_inverse_iteration(&op, cfg)
}

fn block_inverse_iteration(op: &DivergenceOperator, cfg: &EigenConfig) -> Result<EigenResult> {
    let grid = *op.grid();
    let rho = op.weight();
    let w = Weighted {
        op,
        rho,
        total: sum(rho),
    };
    let p = cfg.block_size.max(2);
    let mut block = start_block(&grid, cfg.seed, p);
    for u in block.iter_mut() {
        w.project(u);
    }
    orthonormalize(&w, &mut block);

    // −K x = ρ u is the plain symmetric form of −𝓛_f x = u.
    let apply = |x: &[f64], out: &mut [f64]| {
        op.apply_flux_into(x, out);
        out.iter_mut().for_each(|o| *o = -*o);
    };
    let diag = match cfg.preconditioner {
        Preconditioner::Diagonal => Some(op.neg_flux_diagonal()),
        Preconditioner::None => None,
    };
    let mut rayleigh_history = Vec::new();
    let mut residual = f64::INFINITY;
    let mut guesses: Vec<Vec<f64>> = vec![vec![0.0; grid.len()]; p];
    for it in 1..=cfg.max_iterations {
        for (u, x) in block.iter_mut().zip(guesses.iter_mut()) {
            let b: Vec<f64> = u.iter().zip(rho).map(|(a, r)| a * r).collect();
            pcg(&apply, diag.as_deref(), rho, &b, x, cfg.inner_tolerance, 10 * grid.len())?;
            w.project(x);
            u.copy_from_slice(x);
        }
        orthonormalize(&w, &mut block);
        let images: Vec<Vec<f64>> = block.iter().map(|u| w.apply(u)).collect();
        let small: Vec<Vec<f64>> = (0..p)
            .map(|i| (0..p).map(|j| dot3(&block[i], &images[j], rho) / w.total).collect())
            .collect();
        let (vals, vecs) = symmetric_eigen(small);
        let combine = |set: &[Vec<f64>], col: usize| -> Vec<f64> {
            let mut out = vec![0.0; grid.len()];
            for (k, v) in set.iter().enumerate() {
                let c = vecs[k][col];
                out.iter_mut().zip(v).for_each(|(o, x)| *o += c * x);
            }
            out
        };
        let rotated: Vec<Vec<f64>> = (0..p).map(|c| combine(&block, c)).collect();
        let rotated_images: Vec<Vec<f64>> = (0..p).map(|c| combine(&images, c)).collect();
        block = rotated;
        let lambda = vals[0];
        rayleigh_history.push(lambda);
        let r: Vec<f64> = rotated_images[0].iter().zip(&block[0]).map(|(a, b)| a - lambda * b).collect();
        residual = w.norm(&r);
        if residual <= cfg.tolerance * lambda.max(1.0) {
            let gap = vals[1] - vals[0];
            let mut u = block.swap_remove(0);
            // Fix the sign for reproducible output.
            if dot3(&u, &start_block(&grid, cfg.seed, 1)[0], rho) < 0.0 {
                u.iter_mut().for_each(|x| *x = -*x);
            }
            return Ok(EigenResult {
                lambda,
                u: ScalarField::from_vec(grid, u),
                residual,
                iterations: it,
                rayleigh_history,
                gap: cfg.compute_gap.then_some(gap),
                near_degenerate: cfg.compute_gap && gap < DEGENERACY_GAP,
            });
        }
        // Warm starts: A⁻¹ u_k ≈ u_k / λ_k.
        for ((x, u), l) in guesses.iter_mut().zip(&block).zip(&vals) {
            x.iter_mut().zip(u).for_each(|(x, u)| *x = u / l);
        }
    }
    Err(Error::EigenNoConvergence {
        iterations: cfg.max_iterations,
        residual,
    })
}

/// Modified Gram–Schmidt in the weighted inner product, applied twice.
fn orthonormalize(w: &Weighted, block: &mut [Vec<f64>]) {
    for _ in 0..2 {
        for i in 0..block.len() {
            for j in 0..i {
                let (head, tail) = block.split_at_mut(i);
                let c = dot3(&tail[0], &head[j], w.rho) / w.total;
                tail[0].iter_mut().zip(&head[j]).for_each(|(x, y)| *x -= c * y);
            }
            let n = w.norm(&block[i]);
            block[i].iter_mut().for_each(|x| *x /= n);
        }
    }
}

/// Cyclic Jacobi eigen-decomposition of a small symmetric matrix: ascending
/// eigenvalues and the matching eigenvectors as columns.
fn symmetric_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        let diag: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum();
        if off <= 1e-32 * diag.max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (libm::fabs(theta) + libm::sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i][i].total_cmp(&a[j][j]));
    let vals = order.iter().map(|&i| a[i][i]).collect();
    let vecs = (0..n).map(|r| order.iter().map(|&c| v[r][c]).collect()).collect();
    (vals, vecs)
}

/// Deterministic start block: random combinations of the lowest Fourier
/// modes plus a little noise.
fn start_block(grid: &crate::grid::Grid, seed: u64, p: usize) -> Vec<Vec<f64>> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..p)
        .map(|_| {
            let c: [f64; 9] = core::array::from_fn(|_| rng.gen_range(-1.0..1.0));
            let mut noise = rand_chacha::ChaCha8Rng::seed_from_u64(rng.gen());
            grid.sample(|x| {
                c[0] * libm::sin(x[0])
                    + c[1] * libm::cos(x[0])
                    + c[2] * libm::sin(x[1])
                    + c[3] * libm::cos(x[1])
                    + c[4] * libm::sin(x[2])
                    + c[5] * libm::cos(x[2])
                    + c[6] * libm::sin(x[0] + x[1])
                    + c[7] * libm::cos(x[1] - x[2])
                    + c[8] * libm::sin(x[2] + x[0])
                    + 1e-3 * noise.gen_range(-1.0..1.0)
            })
        })
        .collect()
}

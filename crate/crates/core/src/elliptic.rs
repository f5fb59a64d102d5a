//! Matrix-free conjugate gradients for `(−Δ_g + c) u = F` and the pressure
//! equations of the flow.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::calculus::tensor_norm_sq;
use crate::curvature::ricci;
use crate::error::{Error, Result};
use crate::field::{ScalarField, SymTensorField};
use crate::grid::{DIM, M_F};
use crate::metric::MetricField;
use crate::operators::DivergenceOperator;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preconditioner {
    None,
    Diagonal,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EllipticConfig {
    /// Relative residual target in the `dμ`-weighted norm.
    pub rel_tolerance: f64,
    /// Iteration cap; `None` means `10·N³`.
    pub max_iterations: Option<usize>,
    pub preconditioner: Preconditioner,
}

impl Default for EllipticConfig {
    fn default() -> Self {
        EllipticConfig {
            rel_tolerance: 1e-10,
            max_iterations: None,
            preconditioner: Preconditioner::Diagonal,
        }
    }
}

impl EllipticConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tolerance > 0.0) {
            return Err(Error::InvalidParameter {
                name: "rel_tolerance",
                reason: "must be positive".to_string(),
            });
        }
        Ok(())
    }

    fn cap(&self, nodes: usize) -> usize {
        self.max_iterations.unwrap_or(10 * nodes)
    }
}

/// Iteration count and final relative residual of a solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
}

/// Preconditioned conjugate gradients for the symmetric positive
/// semi-definite system `A x = b` (plain inner product), stopping on the
/// norm `‖r‖² = Σ r²/W`. Restarts from the true residual until it meets the
/// tolerance, so the returned residual is not a recursion artifact.
pub(crate) fn pcg(
    apply: &dyn Fn(&[f64], &mut [f64]),
    diag: Option<&[f64]>,
    weight: &[f64],
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> Result<SolveStats> {
    let n = b.len();
    let norm = |r: &[f64]| libm::sqrt(r.iter().zip(weight).fold(0.0, |s, (x, w)| s + x * x / w));
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.fill(0.0);
        return Ok(SolveStats {
            iterations: 0,
            residual: 0.0,
        });
    }
    let precond = |r: &[f64], z: &mut [f64]| match diag {
        Some(d) => {
            for ((z, r), d) in z.iter_mut().zip(r).zip(d) {
                *z = r / d;
            }
        }
        None => z.copy_from_slice(r),
    };
    let mut r = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut ap = vec![0.0; n];
    let mut iterations = 0;
    loop {
        apply(x, &mut ap);
        for ((r, b), a) in r.iter_mut().zip(b).zip(&ap) {
            *r = b - a;
        }
        let true_res = norm(&r) / bnorm;
        if true_res <= tol {
            return Ok(SolveStats {
                iterations,
                residual: true_res,
            });
        }
        if iterations >= max_iter || !true_res.is_finite() {
            return Err(Error::NoConvergence {
                iterations,
                residual: true_res,
            });
        }
        precond(&r, &mut z);
        p.copy_from_slice(&z);
        let mut rz = dot(&r, &z);
        while iterations < max_iter {
            apply(&p, &mut ap);
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                break;
            }
            let alpha = rz / pap;
            for (x, p) in x.iter_mut().zip(&p) {
                *x += alpha * p;
            }
            for (r, a) in r.iter_mut().zip(&ap) {
                *r -= alpha * a;
            }
            iterations += 1;
            if norm(&r) <= 0.5 * tol * bnorm {
                break;
            }
            precond(&r, &mut z);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for (p, z) in p.iter_mut().zip(&z) {
                *p = z + beta * *p;
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |s, (x, y)| s + x * y)
}

/// Solves `(−K/W + c) u = F` for a divergence operator, optionally warm-started.
pub fn solve_shifted(
    op: &DivergenceOperator,
    c: f64,
    f: &[f64],
    guess: Option<&[f64]>,
    cfg: &EllipticConfig,
) -> Result<(Vec<f64>, SolveStats)> {
    cfg.validate()?;
    if !(c > 0.0) {
        return Err(Error::IndefiniteShift(c));
    }
    let w = op.weight();
    let b: Vec<f64> = f.iter().zip(w).map(|(f, w)| f * w).collect();
    let apply = |u: &[f64], out: &mut [f64]| {
        op.apply_flux_into(u, out);
        for ((o, u), w) in out.iter_mut().zip(u).zip(w) {
            *o = c * w * u - *o;
        }
    };
    let diag: Option<Vec<f64>> = match cfg.preconditioner {
        Preconditioner::Diagonal => Some(op.neg_flux_diagonal().iter().zip(w).map(|(d, w)| d + c * w).collect()),
        Preconditioner::None => None,
    };
    let mut x = match guess {
        Some(g) => g.to_vec(),
        None => vec![0.0; f.len()],
    };
    let stats = pcg(&apply, diag.as_deref(), w, &b, &mut x, cfg.rel_tolerance, cfg.cap(f.len()))?;
    Ok((x, stats))
}

/// `(−Δ_g + c) u = F` by conjugate gradients; `c` must be positive.
pub fn solve_helmholtz(metric: &MetricField, c: f64, f: &ScalarField, cfg: &EllipticConfig) -> Result<ScalarField> {
    solve_helmholtz_guess(metric, c, f, None, cfg)
}

pub(crate) fn solve_helmholtz_guess(
    metric: &MetricField,
    c: f64,
    f: &ScalarField,
    guess: Option<&ScalarField>,
    cfg: &EllipticConfig,
) -> Result<ScalarField> {
    cfg.validate()?;
    if !(c > 0.0) {
        return Err(Error::IndefiniteShift(c));
    }
    f.check_grid(metric.grid())?;
    if f.is_uniform() {
        // K annihilates constants, so F/c is the exact discrete solution.
        return Ok(f.map(|x| x / c));
    }
    let op = metric.laplacian_operator();
    let (u, _) = solve_shifted(&op, c, f.values(), guess.map(|g| g.values()), cfg)?;
    Ok(ScalarField::from_vec(*metric.grid(), u))
}

/// Which constraint equation determines the pressure.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PressureEquation {
    /// `(−Δ + (m+1)) p = (1/m)|Ric + m g|²`, i.e. `R_0 = −m(m+1)`.
    Conformal,
    /// `(n−1)Δp + R_0 p = −|Ric − (R_0/n) g|²` with `R_0 < 0`.
    General { r0: f64 },
}

/// Tolerance of the discrete maximum-principle check.
pub const PRESSURE_FLOOR: f64 = -1e-8;

impl PressureEquation {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PressureEquation::General { r0 } if !(r0 < 0.0) => Err(Error::NonNegativeR0(r0)),
            _ => Ok(()),
        }
    }

    /// Target scalar curvature `R_0`.
    pub fn r0(&self) -> f64 {
        match *self {
            PressureEquation::Conformal => -M_F * (M_F + 1.0),
            PressureEquation::General { r0 } => r0,
        }
    }

    /// Helmholtz shift of the rewritten equation.
    pub fn shift(&self) -> f64 {
        match *self {
            PressureEquation::Conformal => M_F + 1.0,
            PressureEquation::General { r0 } => libm::fabs(r0) / (DIM as f64 - 1.0),
        }
    }

    /// Right-hand side of the rewritten equation for a given Ricci tensor.
    pub fn rhs(&self, metric: &MetricField, ric: &SymTensorField) -> ScalarField {
        let n = DIM as f64;
        let (shift_g, scale) = match *self {
            PressureEquation::Conformal => (M_F, 1.0 / M_F),
            PressureEquation::General { r0 } => (-r0 / n, 1.0 / (n - 1.0)),
        };
        let t: Vec<_> = ric
            .values()
            .iter()
            .zip(metric.components())
            .map(|(r, g)| *r + *g * shift_g)
            .collect();
        let t = SymTensorField::from_vec(*metric.grid(), t);
        tensor_norm_sq(&t, metric).map(|x| x * scale)
    }

    /// Solves for `p` given the Ricci tensor of `metric`, then checks `min p`.
    pub fn solve(
        &self,
        metric: &MetricField,
        ric: &SymTensorField,
        guess: Option<&ScalarField>,
        cfg: &EllipticConfig,
    ) -> Result<ScalarField> {
        self.validate()?;
        let rhs = self.rhs(metric, ric);
        let p = solve_helmholtz_guess(metric, self.shift(), &rhs, guess, cfg)?;
        let min_p = p.min();
        if min_p < PRESSURE_FLOOR {
            return Err(Error::NegativePressure { min_p });
        }
        Ok(p)
    }
}

/// Conformal pressure `(−Δ_g + (m+1)) p = (1/m)|Ric + m g|²`.
pub fn solve_pressure(metric: &MetricField, cfg: &EllipticConfig) -> Result<ScalarField> {
    PressureEquation::Conformal.solve(metric, &ricci(metric), None, cfg)
}

/// As [`solve_pressure`] with a caller-supplied Ricci tensor (test seam for
/// synthetic curvature).
pub fn solve_pressure_with_ricci(
    metric: &MetricField,
    ric: &SymTensorField,
    cfg: &EllipticConfig,
) -> Result<ScalarField> {
    PressureEquation::Conformal.solve(metric, ric, None, cfg)
}

/// Pressure for a general negative target curvature `R_0`.
pub fn solve_pressure_general(metric: &MetricField, r0: f64, cfg: &EllipticConfig) -> Result<ScalarField> {
    let eq = PressureEquation::General { r0 };
    eq.validate()?;
    eq.solve(metric, &ricci(metric), None, cfg)
}

/// `p̄ = max_x p`.
pub fn p_bar(p: &ScalarField) -> f64 {
    p.max()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{FdOrder, Grid};

    #[test]
    fn flat_pressure_is_two() {
        let grid = Grid::new(8, FdOrder::Fourth).unwrap();
        let p = solve_pressure(&MetricField::flat(grid), &EllipticConfig::default()).unwrap();
        assert!(p.values().iter().all(|&x| x == 2.0));
    }

    #[test]
    fn rejects_bad_shift_and_r0() {
        let grid = Grid::new(8, FdOrder::Fourth).unwrap();
        let m = MetricField::flat(grid);
        let f = ScalarField::constant(grid, 1.0);
        let cfg = EllipticConfig::default();
        assert_eq!(solve_helmholtz(&m, 0.0, &f, &cfg), Err(Error::IndefiniteShift(0.0)));
        assert_eq!(solve_pressure_general(&m, 1.0, &cfg), Err(Error::NonNegativeR0(1.0)));
    }
}

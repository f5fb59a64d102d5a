//! The parabolic frequency
//!
//! ```text
//! Q(t) = h(t) ∫|∇v|² dV / ∫v² dV · exp(−∫_{t0}^t (2p̄ + (h′ + k)/h) ds)
//! ```
//!
//! along a stored flow, the curvature-saturating choice of `k`, and the
//! monotonicity, backward-uniqueness and growth inequalities built on `Q`.
//!
//! `∫|∇v|² dV` is taken in flux form, `−∫ v 𝓛_f v dV`, from the same
//! divergence-form operator that drives the heat equation, so the discrete
//! Cauchy–Schwarz step holds to round-off. The centered-gradient integral is
//! reported alongside as `e_grad`.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::calculus::{dot, dot3, grad_norm_sq};
use crate::curvature::{bakry_emery_with, christoffel, ricci_with, scalar_from_ricci};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::flow::FlowHistory;
use crate::grid::M_F;
use crate::metric::MetricField;
use crate::operators::DivergenceOperator;
use crate::series::{cumulative_trapezoid, derivative, interior_derivative, trapezoid};
use crate::spectral::{drift_eigenpair, EigenConfig};

/// `I` below this counts as vanished; `Q` is undefined there.
pub const VANISHED: f64 = 1e-300;

/// Default relative monotonicity tolerance, `ε_mono = 1e-4 · max |Q|`.
pub const MONO_RELATIVE: f64 = 1e-4;

/// A smooth scalar function of time with an analytic derivative.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WeightFn {
    Constant(f64),
    /// `c0 + c1 t`.
    Linear { c0: f64, c1: f64 },
    /// `c e^{rate t}`.
    Exponential { c: f64, rate: f64 },
}

impl WeightFn {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            WeightFn::Constant(c) => c,
            WeightFn::Linear { c0, c1 } => c0 + c1 * t,
            WeightFn::Exponential { c, rate } => c * libm::exp(rate * t),
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match *self {
            WeightFn::Constant(_) => 0.0,
            WeightFn::Linear { c1, .. } => c1,
            WeightFn::Exponential { c, rate } => c * rate * libm::exp(rate * t),
        }
    }

    /// `Some(±1)` when the function is nonzero with one sign on `[a, b]`.
    pub fn sign_on(&self, a: f64, b: f64) -> Option<f64> {
        let (x, y) = (self.value(a), self.value(b));
        // Constant, linear and exponential functions are monotone, so the
        // endpoints decide.
        let ok = x.is_finite() && y.is_finite() && x != 0.0 && y != 0.0 && (x > 0.0) == (y > 0.0);
        ok.then(|| if x > 0.0 { 1.0 } else { -1.0 })
    }
}

/// How `k(t)` is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KPolicy {
    Fixed(WeightFn),
    /// `k = 2h (m + μ_max)`, the smallest admissible `k` for `h > 0` (the
    /// largest for `h < 0`).
    Auto,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeWeight {
    pub h: WeightFn,
    pub k: KPolicy,
    /// Start of the observation window.
    pub t0: f64,
    /// End of the window; the end of the run when `None`.
    pub t1: Option<f64>,
}

impl TimeWeight {
    pub fn new(h: WeightFn, k: KPolicy, t0: f64) -> Self {
        TimeWeight { h, k, t0, t1: None }
    }

    pub fn with_end(mut self, t1: f64) -> Self {
        self.t1 = Some(t1);
        self
    }

    /// Sign of `h` on `[t0, t1]`, rejecting a vanishing or sign-changing `h`.
    pub fn sign(&self, t1: f64) -> Result<f64> {
        self.h.sign_on(self.t0, t1).ok_or(Error::WeightSignChange {
            time: if self.h.value(self.t0) == 0.0 { self.t0 } else { t1 },
        })
    }
}

/// Per-sample integrals that do not depend on the time weight.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleIntegrals {
    /// `∫v² dV`.
    pub i: f64,
    /// `−∫ v 𝓛_f v dV` (flux form).
    pub dirichlet: f64,
    /// `∫|∇v|² dV` with centered gradients.
    pub dirichlet_grad: f64,
    /// `∫(𝓛_f v)² dV`.
    pub lf_sq: f64,
    /// Extremes of `μ`, the eigenvalues of `Ric_f` relative to `g`.
    pub mu_min: f64,
    pub mu_max: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub p_min: f64,
    pub p_max: f64,
}

/// `I(t) = ∫v² dV`.
pub fn compute_i(v: &ScalarField, op: &DivergenceOperator) -> f64 {
    let cv = op.grid().cell_volume();
    dot3(v.values(), v.values(), op.weight()) * cv
}

/// `(E, E_grad)`: `E = h · (−∫ v 𝓛_f v dV)` in flux form and the
/// centered-gradient cross-check `h ∫|∇v|² dV`.
pub fn compute_e(v: &ScalarField, metric: &MetricField, op: &DivergenceOperator, h: f64) -> (f64, f64) {
    let cv = op.grid().cell_volume();
    let flux = op.energy(v.values()) * cv;
    let grad = grad_norm_sq(v, metric);
    let g = dot(grad.values(), op.weight()) * cv;
    (h * flux, h * g)
}

fn sample_integrals(history: &FlowHistory, idx: usize) -> Result<SampleIntegrals> {
    let metric = history.metric(idx);
    let hh = history.h(idx).ok_or(Error::MissingData("conjugate heat solution"))?;
    let v = history.v(idx).ok_or(Error::MissingData("heat solution at the sample"))?;
    let op = metric.drift_operator(&hh)?;
    let cv = metric.grid().cell_volume();
    let i = compute_i(&v, &op);
    let (dirichlet, dirichlet_grad) = compute_e(&v, &metric, &op, 1.0);
    let lv = op.apply(v.values());
    let lf_sq = dot3(&lv, &lv, op.weight()) * cv;

    let gamma = christoffel(&metric);
    let ric = ricci_with(&metric, &gamma);
    let ric_f = bakry_emery_with(&metric, &gamma, &ric, &hh)?;
    let (mu_min, mu_max) = pencil_extremes(&metric, &ric_f)?;
    let r = scalar_from_ricci(&metric, &ric);
    let p = history.pressure(idx);
    Ok(SampleIntegrals {
        i,
        dirichlet,
        dirichlet_grad,
        lf_sq,
        mu_min,
        mu_max,
        r_min: r.min(),
        r_max: r.max(),
        p_min: p.min(),
        p_max: p.max(),
    })
}

fn pencil_extremes(metric: &MetricField, ric_f: &crate::field::SymTensorField) -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let nodes: &[_] = if metric.is_uniform() && ric_f.is_uniform() {
        &ric_f.values()[..1]
    } else {
        ric_f.values()
    };
    for (node, (r, g)) in nodes.iter().zip(metric.components()).enumerate() {
        let mu = r.generalized_eigenvalues(g).ok_or(Error::NotPositiveDefinite {
            node,
            min_eigenvalue: g.eigenvalues()[0],
        })?;
        lo = lo.min(mu[0]);
        hi = hi.max(mu[2]);
    }
    Ok((lo, hi))
}

/// Largest and smallest eigenvalue of `(Ric_f, g)` over the nodes.
pub fn ricci_f_extremes(metric: &MetricField, h: &ScalarField) -> Result<(f64, f64)> {
    let gamma = christoffel(metric);
    let ric = ricci_with(metric, &gamma);
    let ric_f = bakry_emery_with(metric, &gamma, &ric, h)?;
    pencil_extremes(metric, &ric_f)
}

/// `k = 2h(m + μ_max)`. The hypothesis `Ric_f ≤ (k/2h − m) g` reads
/// `k ≥ 2h(m + μ_max)` for `h > 0` and `k ≤ 2h(m + μ_max)` for `h < 0`, so the
/// same expression saturates it for both signs.
pub fn k_saturating(h: f64, mu_max: f64) -> f64 {
    2.0 * h * (M_F + mu_max)
}

/// Exponent `∫_{t[0]}^{t} (c·p̄ + (h′ + k)/h) ds` by the trapezoid rule on the
/// sample times; `c = 2` gives the correction of `Q`, `c = 6` the `Γ` of the
/// monotonicity argument.
pub fn correction_exponent(times: &[f64], p_bar: &[f64], h: &WeightFn, k: &[f64], coefficient: f64) -> Result<Vec<f64>> {
    if times.is_empty() {
        return Ok(Vec::new());
    }
    h.sign_on(times[0], times[times.len() - 1])
        .ok_or(Error::WeightSignChange { time: times[0] })?;
    let integrand: Vec<f64> = times
        .iter()
        .zip(p_bar)
        .zip(k)
        .map(|((&t, &p), &k)| coefficient * p + (h.derivative(t) + k) / h.value(t))
        .collect();
    Ok(cumulative_trapezoid(times, &integrand))
}

/// `exp(−∫_{t0}^{t} (2p̄ + (h′+k)/h) ds)` at the last sample.
pub fn correction_factor(times: &[f64], p_bar: &[f64], h: &WeightFn, k: &[f64]) -> Result<f64> {
    let e = correction_exponent(times, p_bar, h, k, 2.0)?;
    Ok(libm::exp(-e.last().copied().unwrap_or(0.0)))
}

/// Frequency series over the observation window.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyReport {
    /// Step indices of the samples in the history.
    pub indices: Vec<usize>,
    pub times: Vec<f64>,
    pub h: Vec<f64>,
    pub h_prime: Vec<f64>,
    pub k: Vec<f64>,
    /// `k_auto` at each sample, whatever the policy.
    pub k_auto: Vec<f64>,
    pub k_is_auto: bool,
    pub p_bar: Vec<f64>,
    pub i: Vec<f64>,
    pub e: Vec<f64>,
    pub e_grad: Vec<f64>,
    /// `∫(𝓛_f v)² dV`.
    pub lf_sq: Vec<f64>,
    /// `∫(2p̄ + (h′+k)/h)` from `t0`.
    pub exponent: Vec<f64>,
    /// `Q`; `None` where `I` vanished.
    pub q: Vec<Option<f64>>,
    /// Centered `dQ/dt`; `None` at the two samples next to each end and
    /// wherever `Q` is undefined.
    pub dqdt: Vec<Option<f64>>,
    pub mu_min: Vec<f64>,
    pub mu_max: Vec<f64>,
    pub r_min: Vec<f64>,
    pub r_max: Vec<f64>,
    pub p_min: Vec<f64>,
    pub p_max: Vec<f64>,
}

impl FrequencyReport {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn vanished(&self, s: usize) -> bool {
        self.q[s].is_none()
    }

    /// `max |Q|` over defined samples.
    pub fn max_abs_q(&self) -> f64 {
        self.q.iter().flatten().fold(0.0f64, |m, q| m.max(libm::fabs(*q)))
    }

    /// `c(t) = Q/h · e^{+∫(2p̄+(h′+k)/h)}`, the Rayleigh quotient of `v`.
    pub fn c(&self, s: usize) -> Option<f64> {
        self.q[s].map(|q| q / self.h[s] * libm::exp(self.exponent[s]))
    }

    /// Cauchy–Schwarz gap `I ∫(𝓛_f v)² − (∫|∇v|²)²`, relative to its first
    /// term.
    pub fn cauchy_schwarz(&self, s: usize) -> f64 {
        let d = self.e[s] / self.h[s];
        let a = self.i[s] * self.lf_sq[s];
        let gap = a - d * d;
        if a > 0.0 {
            gap / a
        } else {
            gap
        }
    }

    /// Smallest relative Cauchy–Schwarz gap over the samples.
    pub fn min_cauchy_schwarz(&self) -> f64 {
        (0..self.len()).map(|s| self.cauchy_schwarz(s)).fold(f64::INFINITY, f64::min)
    }

    /// `‖−𝓛_f v − c v‖_dV / ‖v‖_dV` with `c` the Rayleigh quotient, from the
    /// stored integrals.
    pub fn eigen_residual(&self, s: usize) -> Option<f64> {
        if self.vanished(s) {
            return None;
        }
        let c = self.e[s] / (self.h[s] * self.i[s]);
        // ‖L v + c v‖² = ∫(Lv)² + 2c ∫ v Lv + c² ∫ v²
        let sq = self.lf_sq[s] - 2.0 * c * self.e[s] / self.h[s] + c * c * self.i[s];
        Some(libm::sqrt(sq.max(0.0) / self.i[s]))
    }

    /// Index of the sample at time `t`.
    pub fn sample_at(&self, t: f64) -> Option<usize> {
        let scale = self.times.last().copied().unwrap_or(1.0).max(1.0);
        self.times.iter().position(|&s| libm::fabs(s - t) <= 1e-12 * scale)
    }
}

fn window(history: &FlowHistory, weights: &TimeWeight) -> Result<(usize, usize)> {
    let i0 = history.index_of(weights.t0).ok_or_else(|| Error::InvalidParameter {
        name: "t0",
        reason: alloc::format!("{} is not a step time; add it to the landmarks", weights.t0),
    })?;
    let i1 = match weights.t1 {
        Some(t1) => history.index_of(t1).ok_or_else(|| Error::InvalidParameter {
            name: "t1",
            reason: alloc::format!("{t1} is not a step time; add it to the landmarks"),
        })?,
        None => history.len() - 1,
    };
    if i1 <= i0 {
        return Err(Error::InvalidParameter {
            name: "t1",
            reason: "window end must follow t0".to_string(),
        });
    }
    let heat = history.heat.as_ref().ok_or(Error::MissingData("heat solution"))?;
    if heat.start > i0 {
        return Err(Error::MissingData("heat solution at t0"));
    }
    if history.conjugate.is_none() {
        return Err(Error::MissingData("conjugate heat solution"));
    }
    Ok((i0, i1))
}

/// Builds the frequency series on `[t0, t1]`.
pub fn compute_q(history: &FlowHistory, weights: &TimeWeight) -> Result<FrequencyReport> {
    let (i0, i1) = window(history, weights)?;
    let indices: Vec<usize> = (i0..=i1).collect();
    let times: Vec<f64> = indices.iter().map(|&i| history.time(i)).collect();
    weights.sign(times[times.len() - 1])?;
    let samples = indices
        .iter()
        .map(|&i| sample_integrals(history, i))
        .collect::<Result<Vec<_>>>()?;
    let h: Vec<f64> = times.iter().map(|&t| weights.h.value(t)).collect();
    let h_prime: Vec<f64> = times.iter().map(|&t| weights.h.derivative(t)).collect();
    let p_bar: Vec<f64> = indices.iter().map(|&i| history.p_bar(i)).collect();
    let k_auto: Vec<f64> = h.iter().zip(&samples).map(|(&h, s)| k_saturating(h, s.mu_max)).collect();
    let (k, k_is_auto) = match weights.k {
        KPolicy::Auto => (k_auto.clone(), true),
        KPolicy::Fixed(f) => (times.iter().map(|&t| f.value(t)).collect(), false),
    };
    let exponent = correction_exponent(&times, &p_bar, &weights.h, &k, 2.0)?;
    let i: Vec<f64> = samples.iter().map(|s| s.i).collect();
    let e: Vec<f64> = samples.iter().zip(&h).map(|(s, h)| h * s.dirichlet).collect();
    let e_grad: Vec<f64> = samples.iter().zip(&h).map(|(s, h)| h * s.dirichlet_grad).collect();
    let q: Vec<Option<f64>> = (0..times.len())
        .map(|s| (i[s] >= VANISHED).then(|| e[s] / i[s] * libm::exp(-exponent[s])))
        .collect();
    let dqdt = if q.iter().all(Option::is_some) {
        let qs: Vec<f64> = q.iter().flatten().copied().collect();
        interior_derivative(&times, &qs)
    } else {
        vec![None; times.len()]
    };
    Ok(FrequencyReport {
        indices,
        times,
        h,
        h_prime,
        k,
        k_auto,
        k_is_auto,
        p_bar,
        i,
        e,
        e_grad,
        lf_sq: samples.iter().map(|s| s.lf_sq).collect(),
        exponent,
        q,
        dqdt,
        mu_min: samples.iter().map(|s| s.mu_min).collect(),
        mu_max: samples.iter().map(|s| s.mu_max).collect(),
        r_min: samples.iter().map(|s| s.r_min).collect(),
        r_max: samples.iter().map(|s| s.r_max).collect(),
        p_min: samples.iter().map(|s| s.p_min).collect(),
        p_max: samples.iter().map(|s| s.p_max).collect(),
    })
}

/// `k_auto` over the window `[t0, t1]` of `weights`.
pub fn k_auto(history: &FlowHistory, weights: &TimeWeight) -> Result<Vec<f64>> {
    let i0 = history.index_of(weights.t0).ok_or(Error::InvalidParameter {
        name: "t0",
        reason: "not a step time".to_string(),
    })?;
    let i1 = match weights.t1 {
        Some(t1) => history.index_of(t1).ok_or(Error::InvalidParameter {
            name: "t1",
            reason: "not a step time".to_string(),
        })?,
        None => history.len() - 1,
    };
    (i0..=i1)
        .map(|i| {
            let h = history.h(i).ok_or(Error::MissingData("conjugate heat solution"))?;
            let (_, mu_max) = ricci_f_extremes(&history.metric(i), &h)?;
            Ok(k_saturating(weights.h.value(history.time(i)), mu_max))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Constant,
    StrictlyDecreasing,
    StrictlyIncreasing,
    Nonincreasing,
    Nondecreasing,
    Violated,
    /// `k` below the saturating value; monotonicity is not asserted.
    HypothesisUnmet,
    /// `I` vanished inside the window.
    Vanished,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Constant => "constant",
            Verdict::StrictlyDecreasing => "strictly-decreasing",
            Verdict::StrictlyIncreasing => "strictly-increasing",
            Verdict::Nonincreasing => "nonincreasing",
            Verdict::Nondecreasing => "nondecreasing",
            Verdict::Violated => "violated",
            Verdict::HypothesisUnmet => "hypothesis-unmet",
            Verdict::Vanished => "vanished",
        }
    }

    /// Whether the verdict agrees with the monotonicity expected for the sign
    /// of `h`.
    pub fn is_compliant(&self) -> bool {
        !matches!(self, Verdict::Violated)
    }
}

/// Rigidity diagnostic at a sample where `|dQ/dt| ≤ ε`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rigidity {
    pub sample: usize,
    pub t: f64,
    pub c: f64,
    pub eigen_residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MonotonicityReport {
    pub verdict: Verdict,
    pub epsilon: f64,
    /// `max dQ/dt` for `h > 0`, `−min dQ/dt` for `h < 0`, over interior samples.
    pub worst_slope: f64,
    /// `min (k − k_auto)·sign h`; negative when the hypothesis fails.
    pub hypothesis_margin: f64,
    pub rigidity: Vec<Rigidity>,
}

impl MonotonicityReport {
    pub fn max_eigen_residual(&self) -> Option<f64> {
        self.rigidity.iter().map(|r| r.eigen_residual).reduce(f64::max)
    }
}

/// Tolerance on the hypothesis `(k − k_auto)·sign h ≥ 0`.
const HYPOTHESIS_TOL: f64 = 1e-9;

/// Checks the sign of `dQ/dt` with `ε = relative · max |Q|`.
pub fn monotonicity_report(report: &FrequencyReport, relative: f64) -> MonotonicityReport {
    let sign = if report.h.first().copied().unwrap_or(1.0) > 0.0 { 1.0 } else { -1.0 };
    let margin = report
        .k
        .iter()
        .zip(&report.k_auto)
        .map(|(k, ka)| (k - ka) * sign)
        .fold(f64::INFINITY, f64::min);
    let k_scale = report.k_auto.iter().fold(1.0f64, |m, k| m.max(libm::fabs(*k)));
    let epsilon = relative * report.max_abs_q();
    let slopes: Vec<(usize, f64)> = report.dqdt.iter().enumerate().filter_map(|(s, d)| d.map(|d| (s, d))).collect();
    let worst_slope = slopes.iter().map(|&(_, d)| d * sign).fold(f64::NEG_INFINITY, f64::max);
    let rigidity = slopes
        .iter()
        .filter(|&&(_, d)| libm::fabs(d) <= epsilon)
        .filter_map(|&(s, _)| {
            Some(Rigidity {
                sample: s,
                t: report.times[s],
                c: report.c(s)?,
                eigen_residual: report.eigen_residual(s)?,
            })
        })
        .collect();
    let verdict = if report.q.iter().any(Option::is_none) {
        Verdict::Vanished
    } else if margin < -HYPOTHESIS_TOL * k_scale {
        Verdict::HypothesisUnmet
    } else if slopes.iter().any(|&(_, d)| d * sign > epsilon) {
        Verdict::Violated
    } else if slopes.iter().all(|&(_, d)| libm::fabs(d) <= epsilon) {
        Verdict::Constant
    } else if slopes.iter().all(|&(_, d)| d * sign < -epsilon) {
        if sign > 0.0 {
            Verdict::StrictlyDecreasing
        } else {
            Verdict::StrictlyIncreasing
        }
    } else if sign > 0.0 {
        Verdict::Nonincreasing
    } else {
        Verdict::Nondecreasing
    };
    MonotonicityReport {
        verdict,
        epsilon,
        worst_slope,
        hypothesis_margin: margin,
        rigidity,
    }
}

/// `|dI/dt − (2p̄ I − 2E/h)| / max(|dI/dt|, 1)` per sample.
pub fn check_i_derivative(report: &FrequencyReport) -> Vec<f64> {
    let di = derivative(&report.times, &report.i);
    (0..report.len())
        .map(|s| {
            let rhs = 2.0 * report.p_bar[s] * report.i[s] - 2.0 * report.e[s] / report.h[s];
            libm::fabs(di[s] - rhs) / libm::fabs(di[s]).max(1.0)
        })
        .collect()
}

/// Outcome of a lower bound `I(b) ≥ I(a) e^{X}` used for backward uniqueness.
#[derive(Clone, Debug, PartialEq)]
pub enum UniquenessBound {
    /// `I(a) = 0`: the bound says nothing.
    Vacuous,
    /// `log(I(b)/I(a)) − X`, nonnegative when the bound holds.
    Residual {
        residual: f64,
        exponent: f64,
        /// `I(a) > 0` and a finite exponent force `I(b) > 0`.
        forces_positive: bool,
    },
    /// `I(b) = 0` with a finite exponent: `I(a)` must vanish too.
    ForcesZero { i_a: f64, consistent: bool },
}

impl UniquenessBound {
    fn from_values(i_a: f64, i_b: f64, exponent: f64) -> Self {
        if i_a < VANISHED {
            UniquenessBound::Vacuous
        } else if i_b < VANISHED {
            UniquenessBound::ForcesZero {
                i_a,
                consistent: !exponent.is_finite(),
            }
        } else {
            UniquenessBound::Residual {
                residual: libm::log(i_b / i_a) - exponent,
                exponent,
                forces_positive: exponent.is_finite(),
            }
        }
    }

    pub fn residual(&self) -> Option<f64> {
        match self {
            UniquenessBound::Residual { residual, .. } => Some(*residual),
            _ => None,
        }
    }

    /// Holds within `tol`, or is vacuous.
    pub fn holds(&self, tol: f64) -> bool {
        match self {
            UniquenessBound::Vacuous => true,
            UniquenessBound::Residual { residual, .. } => *residual >= -tol,
            UniquenessBound::ForcesZero { consistent, .. } => *consistent,
        }
    }
}

/// Checks `log(I(b)/I(a)) ≥ 2∫_a^b p̄ − 2Q(a) ∫_a^b (1/h) e^{∫_{t0}^t(2p̄+(h′+k)/h)} dt`.
pub fn backward_uniqueness_bound(report: &FrequencyReport, a: f64, b: f64) -> Result<UniquenessBound> {
    let (sa, sb) = sample_pair(report, a, b)?;
    let Some(q_a) = report.q[sa] else {
        return Ok(UniquenessBound::Vacuous);
    };
    let t = &report.times[sa..=sb];
    let p = &report.p_bar[sa..=sb];
    let weight: Vec<f64> = (sa..=sb).map(|s| libm::exp(report.exponent[s]) / report.h[s]).collect();
    let exponent = 2.0 * trapezoid(t, p) - 2.0 * q_a * trapezoid(t, &weight);
    Ok(UniquenessBound::from_values(report.i[sa], report.i[sb], exponent))
}

fn sample_pair(report: &FrequencyReport, a: f64, b: f64) -> Result<(usize, usize)> {
    let find = |t: f64, name: &'static str| {
        report.sample_at(t).ok_or_else(|| Error::InvalidParameter {
            name,
            reason: alloc::format!("{t} is not a sample time of the report"),
        })
    };
    let (sa, sb) = (find(a, "a")?, find(b, "b")?);
    if sb <= sa {
        return Err(Error::InvalidParameter {
            name: "b",
            reason: "need a < b".to_string(),
        });
    }
    Ok((sa, sb))
}

/// `h(t) λ(t)` against `h(t0) λ(t0)` with `λ` recomputed at each sample.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenMonotonicity {
    pub samples: Vec<usize>,
    pub times: Vec<f64>,
    pub lambda: Vec<f64>,
    /// `h(t) λ(t) e^{−∫(2p̄+(h′+k)/h)}`.
    pub corrected: Vec<f64>,
    pub reference: f64,
    /// `min (h(t0)λ(t0) − corrected)·sign h`; the bound holds when this is
    /// at least `−ε`.
    pub min_margin: f64,
    /// `max |corrected − h(t0)λ(t0)|`.
    pub max_deviation: f64,
    /// Informational: whether the raw `h λ` series is monotone in the
    /// direction fixed by the sign of `h`.
    pub raw_monotone: bool,
}

impl EigenMonotonicity {
    pub fn holds(&self, tol: f64) -> bool {
        self.min_margin >= -tol
    }
}

/// Recomputes `λ` every `stride` samples (and at both ends) and checks
/// `h λ e^{−∫…} ≤ h(t0) λ(t0)` (reversed for `h < 0`).
pub fn eigen_monotonicity_check(
    history: &FlowHistory,
    report: &FrequencyReport,
    cfg: &EigenConfig,
    stride: usize,
) -> Result<EigenMonotonicity> {
    let n = report.len();
    let stride = stride.max(1);
    let mut samples: Vec<usize> = (0..n).step_by(stride).collect();
    if samples.last() != Some(&(n - 1)) {
        samples.push(n - 1);
    }
    let sign = if report.h[0] > 0.0 { 1.0 } else { -1.0 };
    let mut lambda = Vec::with_capacity(samples.len());
    for &s in &samples {
        let i = report.indices[s];
        let h = history.h(i).ok_or(Error::MissingData("conjugate heat solution"))?;
        let r = drift_eigenpair(&history.metric(i), &h, cfg).map_err(|e| e.at_time(report.times[s]))?;
        lambda.push(r.lambda);
    }
    let corrected: Vec<f64> = samples
        .iter()
        .zip(&lambda)
        .map(|(&s, l)| report.h[s] * l * libm::exp(-report.exponent[s]))
        .collect();
    let reference = corrected[0];
    let min_margin = corrected.iter().map(|c| (reference - c) * sign).fold(f64::INFINITY, f64::min);
    let max_deviation = corrected.iter().map(|c| libm::fabs(c - reference)).fold(0.0, f64::max);
    let raw: Vec<f64> = samples.iter().zip(&lambda).map(|(&s, l)| report.h[s] * l).collect();
    let raw_monotone = raw.windows(2).all(|w| (w[1] - w[0]) * sign <= 0.0);
    Ok(EigenMonotonicity {
        times: samples.iter().map(|&s| report.times[s]).collect(),
        samples,
        lambda,
        corrected,
        reference,
        min_margin,
        max_deviation,
        raw_monotone,
    })
}

/// Signed residuals of the growth inequalities for the forced equation; each
/// is nonnegative when the inequality holds.
#[derive(Clone, Debug, PartialEq)]
pub struct GrowthChecks {
    /// `(log I)′ + 3p̄ + ((p̄+2)/h) Q e^{∫…}`, minimum over interior samples.
    pub log_i_rate: f64,
    /// `p̄²(Q + h(t0)) − Q′`.
    pub q_rate: f64,
    /// `p̄² − [log(Q + h(t0))]′`.
    pub log_q_rate: f64,
    /// `log I(t1) − log I(t0) − X` with `X` the displayed exponent.
    pub integrated: UniquenessBound,
    /// `(Q(t0)+h(t0)) e^{∫p̄²} − h(t0) − Q(t)`, minimum over samples.
    pub q_bound: f64,
}

impl GrowthChecks {
    pub fn integrated_residual(&self) -> Option<f64> {
        self.integrated.residual()
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.log_i_rate >= -tol
            && self.q_rate >= -tol
            && self.log_q_rate >= -tol
            && self.q_bound >= -tol
            && self.integrated.holds(tol)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum GrowthOutcome {
    Checked(GrowthChecks),
    Skipped(String),
}

/// Exponent `X` of the integrated lower bound `I(t1) ≥ I(t0) e^{X}`:
///
/// ```text
/// X = −3(t1−t0) sup p̄ − (2 + sup p̄)(Q(t0) + h(t0)) e^{∫p̄²} · ∫_{t0}^{t1} (1/h(t)) dt · e^{∫_{t0}^{t1}(2p̄+(h′+k)/h)}
/// ```
///
/// with the inner integral running to `t1` as displayed.
pub fn integrated_exponent(report: &FrequencyReport) -> Option<f64> {
    let n = report.len();
    let q0 = report.q[0]?;
    let h0 = report.h[0];
    let t = &report.times;
    let sup_p = report.p_bar.iter().fold(f64::NEG_INFINITY, |m, p| m.max(*p));
    let p_sq: Vec<f64> = report.p_bar.iter().map(|p| p * p).collect();
    let inv_h: Vec<f64> = report.h.iter().map(|h| 1.0 / h).collect();
    let span = t[n - 1] - t[0];
    Some(
        -3.0 * span * sup_p
            - (2.0 + sup_p) * (q0 + h0) * libm::exp(trapezoid(t, &p_sq)) * trapezoid(t, &inv_h) * libm::exp(report.exponent[n - 1]),
    )
}

/// The four growth inequalities of the forced equation plus the Grönwall
/// bound on `Q`. Skipped unless `h > 0` and the forcing certificate of the
/// heat pass passed.
pub fn growth_checks(history: &FlowHistory, report: &FrequencyReport) -> GrowthOutcome {
    let Some(heat) = history.heat.as_ref() else {
        return GrowthOutcome::Skipped("no heat pass".to_string());
    };
    match heat.certificate {
        None => return GrowthOutcome::Skipped("forcing certificate missing".to_string()),
        Some(c) if !c.passed() => {
            return GrowthOutcome::Skipped(alloc::format!(
                "forcing certificate failed: excess {:e} above tolerance {:e}",
                c.max_excess,
                c.tolerance
            ))
        }
        Some(_) => {}
    }
    if report.h.iter().any(|h| !(*h > 0.0)) {
        return GrowthOutcome::Skipped("requires h > 0".to_string());
    }
    if report.q.iter().any(Option::is_none) {
        let i0 = report.i[0];
        let i1 = report.i[report.len() - 1];
        let exponent = integrated_exponent(report).unwrap_or(f64::NEG_INFINITY);
        return GrowthOutcome::Checked(GrowthChecks {
            log_i_rate: f64::NAN,
            q_rate: f64::NAN,
            log_q_rate: f64::NAN,
            integrated: UniquenessBound::from_values(i0, i1, exponent),
            q_bound: f64::NAN,
        });
    }
    let t = &report.times;
    let q: Vec<f64> = report.q.iter().flatten().copied().collect();
    let h0 = report.h[0];
    let log_i: Vec<f64> = report.i.iter().map(|i| libm::log(*i)).collect();
    let log_q: Vec<f64> = q.iter().map(|q| libm::log(q + h0)).collect();
    let d_log_i = interior_derivative(t, &log_i);
    let d_q = interior_derivative(t, &q);
    let d_log_q = interior_derivative(t, &log_q);
    let mut log_i_rate = f64::INFINITY;
    let mut q_rate = f64::INFINITY;
    let mut log_q_rate = f64::INFINITY;
    for s in 0..report.len() {
        let p = report.p_bar[s];
        if let Some(d) = d_log_i[s] {
            let bound = -3.0 * p - (p + 2.0) / report.h[s] * q[s] * libm::exp(report.exponent[s]);
            log_i_rate = log_i_rate.min(d - bound);
        }
        if let Some(d) = d_q[s] {
            q_rate = q_rate.min(p * p * (q[s] + h0) - d);
        }
        if let Some(d) = d_log_q[s] {
            log_q_rate = log_q_rate.min(p * p - d);
        }
    }
    let p_sq: Vec<f64> = report.p_bar.iter().map(|p| p * p).collect();
    let cap = (q[0] + h0) * libm::exp(trapezoid(t, &p_sq)) - h0;
    let q_bound = q.iter().map(|q| cap - q).fold(f64::INFINITY, f64::min);
    let exponent = integrated_exponent(report).unwrap_or(f64::NEG_INFINITY);
    GrowthOutcome::Checked(GrowthChecks {
        log_i_rate,
        q_rate,
        log_q_rate,
        integrated: UniquenessBound::from_values(report.i[0], report.i[report.len() - 1], exponent),
        q_bound,
    })
}

/// Verdict of the integrated bound when `v(·, t1) = 0`: with `I(t1) = 0` and a
/// finite exponent the bound forces `I(t0) = 0`.
pub fn vanishing_endpoint_verdict(i_t0: f64, exponent: f64) -> UniquenessBound {
    UniquenessBound::from_values(i_t0, 0.0, exponent)
}

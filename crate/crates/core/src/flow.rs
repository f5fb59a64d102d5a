//! Time integration: the conformal Ricci flow with its pressure constraint,
//! the conjugate heat equation solved backward along the stored flow, and the
//! forward (optionally forced) heat equation.
//!
//! All three use classical RK4 in method-of-lines form. Metric values at RK
//! substages of the linear equations come from cubic interpolation through
//! neighbouring stored snapshots.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::calculus::{covector, grad_norm_sq_from, Measure};
use crate::curvature::ricci;
use crate::elliptic::{EllipticConfig, PressureEquation};
use crate::error::{Error, Result};
use crate::field::{NodeData, ScalarField, SymTensorField};
use crate::grid::{Grid, DIM, M_F};
use crate::metric::{check_positive, MetricField};
use crate::operators::DivergenceOperator;
use crate::series::lagrange_weights;
use crate::sym3::Sym3;

/// Time-step selection `dt = min(dt_max, safety · spacing² / max tr g^{ij})`.
#[derive(Clone, Debug, PartialEq)]
pub struct StepPolicy {
    pub safety: f64,
    pub dt_max: Option<f64>,
}

impl Default for StepPolicy {
    fn default() -> Self {
        StepPolicy {
            safety: 0.25,
            dt_max: None,
        }
    }
}

impl StepPolicy {
    pub fn fixed_cap(dt_max: f64) -> Self {
        StepPolicy {
            dt_max: Some(dt_max),
            ..Self::default()
        }
    }

    pub fn dt(&self, metric: &MetricField) -> f64 {
        let h = metric.grid().spacing();
        let dt = self.safety * h * h / metric.max_inverse_trace();
        match self.dt_max {
            Some(cap) => dt.min(cap),
            None => dt,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.safety > 0.0) {
            return Err(Error::InvalidParameter {
                name: "safety",
                reason: "must be positive".to_string(),
            });
        }
        if let Some(cap) = self.dt_max {
            if !(cap > 0.0) {
                return Err(Error::InvalidParameter {
                    name: "dt_max",
                    reason: "must be positive".to_string(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowConfig {
    /// Final time `T`.
    pub t_final: f64,
    pub policy: StepPolicy,
    pub elliptic: EllipticConfig,
    pub pressure: PressureEquation,
    /// Times in `(0, T)` that must coincide with step times.
    pub landmarks: Vec<f64>,
}

impl FlowConfig {
    pub fn new(t_final: f64) -> Self {
        FlowConfig {
            t_final,
            policy: StepPolicy::default(),
            elliptic: EllipticConfig::default(),
            pressure: PressureEquation::Conformal,
            landmarks: Vec::new(),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.t_final > 0.0) || !self.t_final.is_finite() {
            return Err(Error::InvalidParameter {
                name: "T",
                reason: "final time must be positive and finite".to_string(),
            });
        }
        self.policy.validate()?;
        self.elliptic.validate()?;
        self.pressure.validate()?;
        if let Some(bad) = self.landmarks.iter().find(|&&t| !(t > 0.0 && t <= self.t_final)) {
            return Err(Error::InvalidParameter {
                name: "landmarks",
                reason: alloc::format!("landmark {bad} outside (0, T]"),
            });
        }
        Ok(())
    }
}

/// Stored step: metric and pressure in compact form.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub g: NodeData<Sym3>,
    pub p: NodeData<f64>,
    pub p_bar: f64,
}

/// A fully materialized step.
#[derive(Clone, Debug)]
pub struct FlowState {
    pub t: f64,
    pub g: MetricField,
    pub p: ScalarField,
    pub p_bar: f64,
}

/// Backward conjugate-heat solution: `H` per step and its mass `∫H dμ`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConjugateTrack {
    pub h: Vec<NodeData<f64>>,
    pub mass: Vec<f64>,
}

/// Forcing `φ = p̄(t)(a v + b |∇v|)` of the heat equation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeatForcing {
    pub a: f64,
    pub b: f64,
    pub active: bool,
}

impl HeatForcing {
    /// The unforced equation `v_t = Δv + p̄ v`.
    pub const NONE: HeatForcing = HeatForcing {
        a: 1.0,
        b: 0.0,
        active: false,
    };

    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(libm::fabs(a) <= 1.0) || !(libm::fabs(b) <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "forcing",
                reason: alloc::format!("need |a| ≤ 1 and |b| ≤ 1, got a = {a}, b = {b}"),
            });
        }
        Ok(HeatForcing { a, b, active: true })
    }

    fn coefficients(&self) -> (f64, f64) {
        if self.active {
            (self.a, self.b)
        } else {
            (1.0, 0.0)
        }
    }
}

/// Pointwise check of `|(∂_t − Δ)v| ≤ p̄(|v| + |∇v|)` at every stored step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Certificate {
    /// `max (|(∂_t − Δ)v| − p̄(|v| + |∇v|))` over nodes and steps.
    pub max_excess: f64,
    pub tolerance: f64,
}

impl Certificate {
    pub const TOLERANCE: f64 = 1e-8;

    pub fn passed(&self) -> bool {
        self.max_excess <= self.tolerance
    }
}

/// Forward heat solution starting at step `start`.
#[derive(Clone, Debug, PartialEq)]
pub struct HeatTrack {
    pub start: usize,
    pub v: Vec<NodeData<f64>>,
    pub forcing: HeatForcing,
    pub certificate: Option<Certificate>,
}

/// Every accepted step of a flow run plus the optional `H` and `v` passes.
#[derive(Clone, Debug)]
pub struct FlowHistory {
    grid: Grid,
    pressure: PressureEquation,
    t_final: f64,
    steps: Vec<Snapshot>,
    pub conjugate: Option<ConjugateTrack>,
    pub heat: Option<HeatTrack>,
}

impl FlowHistory {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn pressure_equation(&self) -> PressureEquation {
        self.pressure
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        &self.steps
    }

    pub fn times(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.t).collect()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.steps[i].t
    }

    /// Backward time `τ = T − t`.
    pub fn tau(&self, i: usize) -> f64 {
        self.t_final - self.steps[i].t
    }

    pub fn p_bar(&self, i: usize) -> f64 {
        self.steps[i].p_bar
    }

    pub fn p_bars(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.p_bar).collect()
    }

    pub fn metric(&self, i: usize) -> MetricField {
        MetricField::from_validated(SymTensorField::from_vec(self.grid, self.steps[i].g.unpack()))
    }

    pub fn pressure(&self, i: usize) -> ScalarField {
        self.steps[i].p.to_field(self.grid)
    }

    pub fn state(&self, i: usize) -> FlowState {
        FlowState {
            t: self.steps[i].t,
            g: self.metric(i),
            p: self.pressure(i),
            p_bar: self.steps[i].p_bar,
        }
    }

    /// Step index whose time equals `t` up to `1e-12`.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        self.steps.iter().position(|s| libm::fabs(s.t - t) <= 1e-12 * self.t_final.max(1.0))
    }

    pub fn h(&self, i: usize) -> Option<ScalarField> {
        self.conjugate.as_ref().map(|c| c.h[i].to_field(self.grid))
    }

    /// `v` at step `i`, when the heat pass covers it.
    pub fn v(&self, i: usize) -> Option<ScalarField> {
        let heat = self.heat.as_ref()?;
        (i >= heat.start).then(|| heat.v[i - heat.start].to_field(self.grid))
    }

    pub fn dmu(&self, i: usize) -> Measure {
        Measure::riemannian(&self.metric(i))
    }

    pub fn dv(&self, i: usize) -> Option<Measure> {
        let h = self.h(i)?;
        Measure::weighted(&self.metric(i), &h).ok()
    }

    /// `f = −log((4πτ)^{(m+1)/2} H)` for reporting; `None` at `τ = 0` or
    /// without a conjugate pass.
    pub fn potential(&self, i: usize) -> Option<ScalarField> {
        let tau = self.tau(i);
        if !(tau > 0.0) {
            return None;
        }
        let pre = libm::pow(4.0 * core::f64::consts::PI * tau, (M_F + 1.0) / 2.0);
        self.h(i).map(|h| h.map(|x| -libm::log(pre * x)))
    }

    /// `max_i |∫H dμ − 1|` over the conjugate pass.
    pub fn mass_drift(&self) -> Option<f64> {
        self.conjugate
            .as_ref()
            .map(|c| c.mass.iter().fold(0.0f64, |m, x| m.max(libm::fabs(x - 1.0))))
    }
}

/// `−2(Ric + (m + p) g)` for the conformal equation, or
/// `−2(Ric − (R_0/n) g) − 2 p g` for a general `R_0`.
pub fn crf_rhs_with(
    metric: &MetricField,
    ric: &SymTensorField,
    p: &ScalarField,
    eq: PressureEquation,
) -> SymTensorField {
    let point = |r: &Sym3, g: &Sym3, p: f64| match eq {
        PressureEquation::Conformal => (*r + *g * (M_F + p)) * -2.0,
        PressureEquation::General { r0 } => (*r - *g * (r0 / DIM as f64)) * -2.0 - *g * (2.0 * p),
    };
    let grid = *metric.grid();
    if metric.is_uniform() && ric.is_uniform() && p.is_uniform() {
        let value = point(&ric.values()[0], &metric.components()[0], p.values()[0]);
        return SymTensorField::from_vec(grid, vec![value; grid.len()]);
    }
    let values = ric
        .values()
        .iter()
        .zip(metric.components())
        .zip(p.values())
        .map(|((r, g), &p)| point(r, g, p))
        .collect();
    SymTensorField::from_vec(grid, values)
}

/// Right-hand side of the conformal flow for a metric and pressure.
pub fn crf_rhs(metric: &MetricField, p: &ScalarField) -> SymTensorField {
    crf_rhs_with(metric, &ricci(metric), p, PressureEquation::Conformal)
}

fn axpy_metric(g: &MetricField, dt: f64, k: &SymTensorField) -> Result<MetricField> {
    let values = g.components().iter().zip(k.values()).map(|(a, b)| *a + *b * dt).collect();
    MetricField::from_values(*g.grid(), values)
}

/// Integrates the flow from `g0` to `cfg.t_final`, storing every step.
pub fn evolve_flow(g0: &MetricField, cfg: &FlowConfig) -> Result<FlowHistory> {
    cfg.validate()?;
    let grid = *g0.grid();
    let eq = cfg.pressure;
    let t_final = cfg.t_final;
    let mut landmarks: Vec<f64> = cfg.landmarks.clone();
    landmarks.push(t_final);
    landmarks.sort_by(f64::total_cmp);
    landmarks.dedup();

    if g0.is_uniform() {
        return evolve_uniform(g0, cfg, &landmarks);
    }

    let solve = |g: &MetricField, guess: Option<&ScalarField>, t: f64| -> Result<(SymTensorField, ScalarField)> {
        let ric = ricci(g);
        let p = eq.solve(g, &ric, guess, &cfg.elliptic).map_err(|e| e.at_time(t))?;
        Ok((ric, p))
    };

    let mut t = 0.0;
    let mut g = g0.clone();
    let (mut ric, mut p) = solve(&g, None, t)?;
    let mut steps = vec![snapshot(t, &g, &p)];
    let mut next_landmark = 0;
    // Remaining steps until the next landmark, fixed when the landmark is
    // first targeted so that the final step lands on it exactly.
    while next_landmark < landmarks.len() {
        let target = landmarks[next_landmark];
        let dt_policy = cfg.policy.dt(&g);
        let remaining = target - t;
        let n_sub = libm::ceil(remaining / dt_policy - 1e-9).max(1.0);
        let dt = remaining / n_sub;
        let stage = |base: &MetricField, k: &SymTensorField, h: f64, guess: &ScalarField, ts: f64| {
            let gs = axpy_metric(base, h, k).map_err(|e| e.at_time(ts))?;
            let (rs, ps) = solve(&gs, Some(guess), ts)?;
            let ks = crf_rhs_with(&gs, &rs, &ps, eq);
            Ok::<_, Error>((ks, ps))
        };
        let k1 = crf_rhs_with(&g, &ric, &p, eq);
        let (k2, p2) = stage(&g, &k1, 0.5 * dt, &p, t + 0.5 * dt)?;
        let (k3, p3) = stage(&g, &k2, 0.5 * dt, &p2, t + 0.5 * dt)?;
        let (k4, p4) = stage(&g, &k3, dt, &p3, t + dt)?;
        let values = g
            .components()
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let incr = (k1.values()[i] + (k2.values()[i] + k3.values()[i]) * 2.0 + k4.values()[i]) * (dt / 6.0);
                *a + incr
            })
            .collect();
        let t_new = if n_sub == 1.0 { target } else { t + dt };
        g = MetricField::from_values(grid, values).map_err(|e| e.at_time(t_new))?;
        let solved = solve(&g, Some(&p4), t_new)?;
        ric = solved.0;
        p = solved.1;
        t = t_new;
        steps.push(snapshot(t, &g, &p));
        if n_sub == 1.0 {
            next_landmark += 1;
        }
    }
    Ok(FlowHistory {
        grid,
        pressure: eq,
        t_final,
        steps,
        conjugate: None,
        heat: None,
    })
}

/// Spatially constant metrics stay constant: Ricci vanishes and the pressure
/// is `F/c`, so the flow reduces to an ODE for a single tensor. The arithmetic
/// matches the nodal path.
fn evolve_uniform(g0: &MetricField, cfg: &FlowConfig, landmarks: &[f64]) -> Result<FlowHistory> {
    let grid = *g0.grid();
    let eq = cfg.pressure;
    let len = grid.len();
    let n = DIM as f64;
    let (shift_g, scale) = match eq {
        PressureEquation::Conformal => (M_F, 1.0 / M_F),
        PressureEquation::General { r0 } => (-r0 / n, 1.0 / (n - 1.0)),
    };
    let inverse = |g: &Sym3, t: f64| -> Result<Sym3> {
        let min = g.eigenvalues()[0];
        match g.inverse() {
            Some(inv) if min > crate::metric::EPS_PD => Ok(inv),
            _ => Err(Error::NotPositiveDefinite { node: 0, min_eigenvalue: min }.at_time(t)),
        }
    };
    let pressure = |g: &Sym3, t: f64| -> Result<f64> {
        let inv = inverse(g, t)?;
        let p = (*g * shift_g).norm_sq_with(&inv).max(0.0) * scale / eq.shift();
        Ok(p)
    };
    let rhs = |g: &Sym3, p: f64| match eq {
        PressureEquation::Conformal => (*g * (M_F + p)) * -2.0,
        PressureEquation::General { r0 } => (*g * -(r0 / n)) * -2.0 - *g * (2.0 * p),
    };
    let point = |t: f64, g: Sym3, p: f64| Snapshot {
        t,
        g: NodeData::Uniform { value: g, len },
        p: NodeData::Uniform { value: p, len },
        p_bar: p,
    };
    let h2 = grid.spacing() * grid.spacing();
    let mut t = 0.0;
    let mut g = g0.components()[0];
    let mut p = pressure(&g, t)?;
    let mut steps = vec![point(t, g, p)];
    let mut next_landmark = 0;
    while next_landmark < landmarks.len() {
        let target = landmarks[next_landmark];
        let mut dt_policy = cfg.policy.safety * h2 / inverse(&g, t)?.trace();
        if let Some(cap) = cfg.policy.dt_max {
            dt_policy = dt_policy.min(cap);
        }
        let remaining = target - t;
        let n_sub = libm::ceil(remaining / dt_policy - 1e-9).max(1.0);
        let dt = remaining / n_sub;
        let k1 = rhs(&g, p);
        let g2 = g + k1 * (0.5 * dt);
        let k2 = rhs(&g2, pressure(&g2, t + 0.5 * dt)?);
        let g3 = g + k2 * (0.5 * dt);
        let k3 = rhs(&g3, pressure(&g3, t + 0.5 * dt)?);
        let g4 = g + k3 * dt;
        let k4 = rhs(&g4, pressure(&g4, t + dt)?);
        let t_new = if n_sub == 1.0 { target } else { t + dt };
        g = g + (k1 + (k2 + k3) * 2.0 + k4) * (dt / 6.0);
        p = pressure(&g, t_new)?;
        t = t_new;
        steps.push(point(t, g, p));
        if n_sub == 1.0 {
            next_landmark += 1;
        }
    }
    Ok(FlowHistory {
        grid,
        pressure: eq,
        t_final: cfg.t_final,
        steps,
        conjugate: None,
        heat: None,
    })
}

fn snapshot(t: f64, g: &MetricField, p: &ScalarField) -> Snapshot {
    Snapshot {
        t,
        g: NodeData::pack(g.components().to_vec()),
        p: NodeData::pack(p.values().to_vec()),
        p_bar: p.max(),
    }
}

/// Operators at a step and at the midpoint of each step, built lazily.
struct OperatorCache<'a> {
    history: &'a FlowHistory,
    metrics: Vec<Option<MetricField>>,
}

impl<'a> OperatorCache<'a> {
    fn new(history: &'a FlowHistory) -> Self {
        OperatorCache {
            history,
            metrics: vec![None; history.len()],
        }
    }

    fn metric(&mut self, i: usize) -> MetricField {
        if self.metrics[i].is_none() {
            self.metrics[i] = Some(self.history.metric(i));
        }
        self.metrics[i].clone().expect("filled above")
    }

    /// Drops cached metrics outside `[lo, hi]` to bound memory.
    fn retain(&mut self, lo: usize, hi: usize) {
        for (i, m) in self.metrics.iter_mut().enumerate() {
            if i < lo || i > hi {
                *m = None;
            }
        }
    }
}

/// Metric and `p̄` at the midpoint of step `[n, n+1]` by cubic Lagrange
/// interpolation through the four nearest stored steps. Linear interpolation
/// would cap the heat passes at second order in time.
fn midpoint(cache: &mut OperatorCache, n: usize) -> Result<(MetricField, f64)> {
    let history = cache.history;
    let len = history.len();
    let width = len.min(4);
    let start = n.saturating_sub(1).min(len - width);
    let nodes: Vec<f64> = (start..start + width).map(|j| history.steps[j].t).collect();
    let x = 0.5 * (history.steps[n].t + history.steps[n + 1].t);
    let w = lagrange_weights(&nodes, x);
    let grid = history.grid;
    let mut values = vec![Sym3::ZERO; grid.len()];
    let mut p_bar = 0.0;
    for (j, wj) in (start..start + width).zip(&w) {
        let g = cache.metric(j);
        for (v, c) in values.iter_mut().zip(g.components()) {
            *v = *v + *c * *wj;
        }
        p_bar += wj * history.p_bar(j);
    }
    Ok((MetricField::from_values(grid, values)?, p_bar))
}

/// Classical RK4 step for `y' = F(y)` with stage operators at the step start,
/// midpoint and end.
fn rk4_step(y: &[f64], dt: f64, mut rhs: impl FnMut(usize, &[f64]) -> Vec<f64>) -> Vec<f64> {
    let k1 = rhs(0, y);
    let y2: Vec<f64> = y.iter().zip(&k1).map(|(a, k)| a + 0.5 * dt * k).collect();
    let k2 = rhs(1, &y2);
    let y3: Vec<f64> = y.iter().zip(&k2).map(|(a, k)| a + 0.5 * dt * k).collect();
    let k3 = rhs(1, &y3);
    let y4: Vec<f64> = y.iter().zip(&k3).map(|(a, k)| a + dt * k).collect();
    let k4 = rhs(2, &y4);
    (0..y.len())
        .map(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]))
        .collect()
}

/// Solves the conjugate heat equation backward from `terminal_h` at `T`.
///
/// The density `ρ = H √det g` is evolved in conservative form,
/// `∂_t ρ = −√det g · Δ_g H`, equivalently
/// `∂_t H = −Δ_g H − ½ tr_g(∂_t g) H`. The discrete divergence form makes
/// `Σ ρ` invariant, so `∫ H dμ = 1` holds to round-off; on metrics with
/// `R = −m(m+1)` the equation is `∂_t H = −ΔH + (m+1) p H`.
pub fn solve_conjugate_heat(history: &mut FlowHistory, terminal_h: &ScalarField) -> Result<()> {
    let grid = history.grid;
    terminal_h.check_grid(&grid)?;
    check_positive(terminal_h)?;
    let last = history.len() - 1;
    let mut cache = OperatorCache::new(history);
    let g_t = cache.metric(last);
    let cv = grid.cell_volume();
    let mut rho: Vec<f64> = terminal_h.values().iter().zip(g_t.sqrt_det()).map(|(h, s)| h * s).collect();
    let mass = rho.iter().fold(0.0, |a, r| a + r * cv);
    for r in rho.iter_mut() {
        *r /= mass;
    }
    let to_h = |rho: &[f64], g: &MetricField| -> Vec<f64> {
        rho.iter().zip(g.sqrt_det()).map(|(r, s)| r / s).collect()
    };
    let mass_of = |rho: &[f64]| rho.iter().fold(0.0, |a, r| a + r * cv);
    let mut hs = vec![NodeData::pack(to_h(&rho, &g_t))];
    let mut masses = vec![mass_of(&rho)];
    let mut op_hi = g_t.laplacian_operator();
    for n in (1..=last).rev() {
        let g_lo = cache.metric(n - 1);
        let (g_mid, _) = midpoint(&mut cache, n - 1)?;
        let op_mid = g_mid.laplacian_operator();
        let op_lo = g_lo.laplacian_operator();
        let ds = history.steps[n].t - history.steps[n - 1].t;
        // In backward time s = T − t: ∂_s ρ = K(√g g⁻¹)(ρ/√g).
        let ops: [&DivergenceOperator; 3] = [&op_hi, &op_mid, &op_lo];
        rho = rk4_step(&rho, ds, |stage, y| {
            let op = ops[stage];
            let h: Vec<f64> = y.iter().zip(op.weight()).map(|(r, w)| r / w).collect();
            op.apply_flux(&h)
        });
        let t = history.steps[n - 1].t;
        if let Some((node, &value)) = rho.iter().enumerate().find(|(_, &r)| !(r > 0.0)) {
            return Err(Error::NonPositiveWeight { node, value }.at_time(t));
        }
        hs.push(NodeData::pack(to_h(&rho, &g_lo)));
        masses.push(mass_of(&rho));
        op_hi = op_lo;
        cache.retain(n.saturating_sub(3), n);
    }
    hs.reverse();
    masses.reverse();
    history.conjugate = Some(ConjugateTrack { h: hs, mass: masses });
    Ok(())
}

/// Blow-up threshold of the heat passes.
pub const BLOW_UP: f64 = 1e12;

/// Solves `v_t = Δ_g v + p̄ v` from `v0` at `t = 0`.
pub fn solve_heat(history: &mut FlowHistory, v0: &ScalarField) -> Result<()> {
    solve_heat_from(history, v0, 0, HeatForcing::NONE)
}

/// Solves `v_t = Δ_g v + p̄(t)(a v + b |∇v|)` from `v0` at `t = 0` and records
/// the pointwise certificate of the forcing bound.
pub fn solve_forced_heat(history: &mut FlowHistory, v0: &ScalarField, forcing: HeatForcing) -> Result<()> {
    solve_heat_from(history, v0, 0, forcing)
}

/// Heat pass starting at step `start` with initial value `v0`.
pub fn solve_heat_from(history: &mut FlowHistory, v0: &ScalarField, start: usize, forcing: HeatForcing) -> Result<()> {
    let track = heat_track(history, v0, start, forcing)?;
    history.heat = Some(track);
    Ok(())
}

/// Computes a heat pass without attaching it to the history.
pub fn heat_track(history: &FlowHistory, v0: &ScalarField, start: usize, forcing: HeatForcing) -> Result<HeatTrack> {
    let grid = history.grid;
    v0.check_grid(&grid)?;
    if start >= history.len() {
        return Err(Error::InvalidParameter {
            name: "start",
            reason: "heat pass starts after the last step".to_string(),
        });
    }
    let (a, b) = forcing.coefficients();
    let mut cache = OperatorCache::new(history);
    let mut v = v0.values().to_vec();
    let mut out = vec![NodeData::pack(v.clone())];
    let mut excess = f64::NEG_INFINITY;
    let mut certify = |v: &[f64], g: &MetricField, pbar: f64| {
        if forcing.active {
            excess = excess.max(certificate_excess(v, g, pbar, a, b));
        }
    };
    let g0 = cache.metric(start);
    certify(&v, &g0, history.p_bar(start));
    let mut op_lo = g0.laplacian_operator();
    for n in start..history.len() - 1 {
        let g_lo = cache.metric(n);
        let g_hi = cache.metric(n + 1);
        let (g_mid, pb_mid) = midpoint(&mut cache, n)?;
        let op_mid = g_mid.laplacian_operator();
        let op_hi = g_hi.laplacian_operator();
        let dt = history.steps[n + 1].t - history.steps[n].t;
        let pb = [history.p_bar(n), pb_mid, history.p_bar(n + 1)];
        let ops: [&DivergenceOperator; 3] = [&op_lo, &op_mid, &op_hi];
        let metrics: [&MetricField; 3] = [&g_lo, &g_mid, &g_hi];
        v = rk4_step(&v, dt, |stage, y| {
            let mut r = ops[stage].apply(y);
            let forcing = forcing_term(y, metrics[stage], pb[stage], a, b);
            for (r, f) in r.iter_mut().zip(&forcing) {
                *r += f;
            }
            r
        });
        let t = history.steps[n + 1].t;
        let max = v.iter().fold(0.0f64, |m, x| m.max(libm::fabs(*x)));
        if !(max <= BLOW_UP) {
            return Err(Error::BlowUp { time: t, max }.at_time(t));
        }
        certify(&v, &g_hi, history.p_bar(n + 1));
        out.push(NodeData::pack(v.clone()));
        op_lo = op_hi;
        cache.retain(n, n + 3);
    }
    Ok(HeatTrack {
        start,
        v: out,
        forcing,
        certificate: forcing.active.then_some(Certificate {
            max_excess: excess,
            tolerance: Certificate::TOLERANCE,
        }),
    })
}

/// `p̄ (a v + b |∇v|_g)`.
fn forcing_term(v: &[f64], g: &MetricField, pbar: f64, a: f64, b: f64) -> Vec<f64> {
    if b == 0.0 {
        return v.iter().map(|x| pbar * (a * x)).collect();
    }
    let grad = grad_norm(v, g);
    v.iter().zip(&grad).map(|(x, gn)| pbar * (a * x + b * gn)).collect()
}

fn grad_norm(v: &[f64], g: &MetricField) -> Vec<f64> {
    let field = ScalarField::from_vec(*g.grid(), v.to_vec());
    grad_norm_sq_from(&covector(&field), g).values().iter().map(|x| libm::sqrt(*x)).collect()
}

/// `max (|(∂_t − Δ)v| − p̄(|v| + |∇v|))` with the semi-discrete
/// `(∂_t − Δ)v = p̄(a v + b|∇v|)`.
fn certificate_excess(v: &[f64], g: &MetricField, pbar: f64, a: f64, b: f64) -> f64 {
    let forcing = forcing_term(v, g, pbar, a, b);
    let grad = grad_norm(v, g);
    v.iter()
        .zip(&grad)
        .zip(&forcing)
        .map(|((x, gn), f)| libm::fabs(*f) - pbar * (libm::fabs(*x) + gn))
        .fold(f64::NEG_INFINITY, f64::max)
}

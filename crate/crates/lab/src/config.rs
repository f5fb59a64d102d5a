//! Scenario files: a TOML document with the sections `[grid]`, `[flow]`,
//! `[metric]`, `[heat]`, `[conjugate]`, `[weights]`, `[checks]` and
//! `[tolerances]`. Every key except `grid.n`, `flow.t_final`, `conjugate.t0`
//! and `conjugate.t1` has a default. See the README for the full schema.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crflow::elliptic::PressureEquation;
use crflow::frequency::{KPolicy, TimeWeight, WeightFn};
use crflow::metric::{MetricParams, MetricPreset};
use crflow::{FdOrder, Grid, ScalarField};

use crate::LabError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    /// Output directory; relative paths resolve against the working directory.
    #[serde(default)]
    pub output: Option<PathBuf>,
    pub grid: GridConfig,
    pub flow: FlowSection,
    #[serde(default)]
    pub metric: MetricSection,
    #[serde(default)]
    pub heat: HeatSection,
    pub conjugate: ConjugateSection,
    #[serde(default)]
    pub weights: WeightsSection,
    #[serde(default)]
    pub checks: ChecksSection,
    #[serde(default)]
    pub tolerances: Tolerances,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    #[serde(default = "default_order")]
    pub fd_order: u32,
}

fn default_order() -> u32 {
    4
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSection {
    pub t_final: f64,
    #[serde(default = "default_safety")]
    pub safety: f64,
    #[serde(default)]
    pub dt_max: Option<f64>,
    /// Target scalar curvature; the conformal value `−m(m+1)` when absent.
    #[serde(default)]
    pub r0: Option<f64>,
}

fn default_safety() -> f64 {
    0.25
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSection {
    #[serde(default = "default_metric")]
    pub preset: String,
    pub amplitude: Option<f64>,
    pub mode: Option<[i32; 3]>,
    pub amplitudes: Option<[f64; 3]>,
    pub axes: Option<[usize; 3]>,
    pub max_mode: Option<u32>,
}

fn default_metric() -> String {
    "flat".to_string()
}

impl Default for MetricSection {
    fn default() -> Self {
        MetricSection {
            preset: default_metric(),
            amplitude: None,
            mode: None,
            amplitudes: None,
            axes: None,
            max_mode: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Forcing {
    pub a: f64,
    pub b: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatSection {
    /// `fourier-mode`, `bump`, `random` or `eigenfunction`.
    #[serde(default = "default_v0")]
    pub v0: String,
    /// Wave vector of `fourier-mode`: `v0 = sin(k·x)`.
    #[serde(default = "default_mode")]
    pub mode: [i32; 3],
    /// `bump`: `exp(−|x − c|² / (2 w²))` on the periodic box.
    #[serde(default = "default_center")]
    pub center: [f64; 3],
    #[serde(default = "default_width")]
    pub width: f64,
    /// `random`: highest Fourier mode per axis.
    #[serde(default = "default_random_mode")]
    pub max_mode: u32,
    #[serde(default)]
    pub forcing: Option<Forcing>,
}

fn default_v0() -> String {
    "fourier-mode".to_string()
}
fn default_mode() -> [i32; 3] {
    [1, 0, 0]
}
fn default_center() -> [f64; 3] {
    [std::f64::consts::PI; 3]
}
fn default_width() -> f64 {
    0.6
}
fn default_random_mode() -> u32 {
    2
}

impl Default for HeatSection {
    fn default() -> Self {
        HeatSection {
            v0: default_v0(),
            mode: default_mode(),
            center: default_center(),
            width: default_width(),
            max_mode: default_random_mode(),
            forcing: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConjugateSection {
    /// `uniform` or `bump`.
    #[serde(default = "default_terminal")]
    pub terminal: String,
    /// `bump`: `H(T) = 1 + amplitude · exp(−|x − c|² / (2 w²))`.
    #[serde(default = "default_bump_amplitude")]
    pub amplitude: f64,
    #[serde(default = "default_center")]
    pub center: [f64; 3],
    #[serde(default = "default_width")]
    pub width: f64,
    pub t0: f64,
    pub t1: f64,
}

fn default_terminal() -> String {
    "uniform".to_string()
}
fn default_bump_amplitude() -> f64 {
    0.5
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WeightSpec {
    Constant { value: f64 },
    Linear { c0: f64, c1: f64 },
    Exponential { c: f64, rate: f64 },
}

impl WeightSpec {
    pub fn to_fn(self) -> WeightFn {
        match self {
            WeightSpec::Constant { value } => WeightFn::Constant(value),
            WeightSpec::Linear { c0, c1 } => WeightFn::Linear { c0, c1 },
            WeightSpec::Exponential { c, rate } => WeightFn::Exponential { c, rate },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KSpec {
    /// The string `"auto"`.
    Keyword(KKeyword),
    Fixed(WeightSpec),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KKeyword {
    Auto,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsSection {
    #[serde(default = "default_h")]
    pub h: WeightSpec,
    #[serde(default = "default_k")]
    pub k: KSpec,
}

fn default_h() -> WeightSpec {
    WeightSpec::Constant { value: 1.0 }
}
fn default_k() -> KSpec {
    KSpec::Keyword(KKeyword::Auto)
}

impl Default for WeightsSection {
    fn default() -> Self {
        WeightsSection {
            h: default_h(),
            k: default_k(),
        }
    }
}

/// Which optional suites a run executes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksSection {
    /// Measure, pressure and gradient-evolution audits along the run.
    #[serde(default = "yes")]
    pub audits: bool,
    /// Every `audit_stride`-th interior step is audited.
    #[serde(default = "default_audit_stride")]
    pub audit_stride: usize,
    /// `h λ` monotonicity with `λ` recomputed at sampled steps.
    #[serde(default)]
    pub eigen: bool,
    #[serde(default = "default_eigen_stride")]
    pub eigen_stride: usize,
    /// Lower bound on `log(I(b)/I(a))`, as `[a, b]` inside `[t0, t1]`.
    #[serde(default)]
    pub uniqueness: Option<[f64; 2]>,
    /// Growth inequalities of the forced equation (needs `heat.forcing`).
    #[serde(default)]
    pub growth: bool,
}

fn yes() -> bool {
    true
}
fn default_audit_stride() -> usize {
    10
}
fn default_eigen_stride() -> usize {
    20
}

impl Default for ChecksSection {
    fn default() -> Self {
        ChecksSection {
            audits: true,
            audit_stride: default_audit_stride(),
            eigen: false,
            eigen_stride: default_eigen_stride(),
            uniqueness: None,
            growth: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// `ε_mono = monotone · max|Q|`.
    pub monotone: f64,
    /// `|Q − Q(t0)| ≤ rigidity · |Q(t0)|` in the constant case.
    pub rigidity: f64,
    pub eigen_residual: f64,
    pub mass: f64,
    pub cauchy_schwarz: f64,
    pub uniqueness: f64,
    pub eigen_monotone: f64,
    pub growth: f64,
    pub evolution: f64,
    pub measure: f64,
    pub selfadjoint: f64,
    pub bochner: f64,
    pub reilly: f64,
    pub slope_band: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            monotone: 1e-4,
            rigidity: 1e-4,
            eigen_residual: 1e-3,
            mass: 1e-8,
            cauchy_schwarz: 1e-10,
            uniqueness: 1e-6,
            eigen_monotone: 1e-4,
            growth: 1e-4,
            evolution: 1e-3,
            measure: 1e-6,
            selfadjoint: 1e-12,
            bochner: 1e-1,
            reilly: 1e-2,
            slope_band: 0.5,
        }
    }
}

impl ScenarioConfig {
    /// Parses and validates. Parse errors carry the line and column; validation
    /// errors name the offending field.
    pub fn from_toml(text: &str) -> Result<Self, LabError> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| LabError::Config {
            field: String::new(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::Config {
            field: String::new(),
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        Self::from_toml(&text).map_err(|e| match e {
            LabError::Config { field, message } => LabError::Config {
                field,
                message: format!("{}: {message}", path.display()),
            },
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<(), LabError> {
        let bad = |field: &str, message: String| {
            Err(LabError::Config {
                field: field.to_string(),
                message,
            })
        };
        if self.grid.n < 8 {
            return bad("grid.n", format!("need at least 8 nodes per axis, got {}", self.grid.n));
        }
        if FdOrder::from_value(self.grid.fd_order).is_err() {
            return bad("grid.fd_order", format!("must be 2 or 4, got {}", self.grid.fd_order));
        }
        let f = &self.flow;
        if !(f.t_final > 0.0 && f.t_final.is_finite()) {
            return bad("flow.t_final", format!("must be positive and finite, got {}", f.t_final));
        }
        if !(f.safety > 0.0) {
            return bad("flow.safety", format!("must be positive, got {}", f.safety));
        }
        if let Some(dt) = f.dt_max {
            if !(dt > 0.0) {
                return bad("flow.dt_max", format!("must be positive, got {dt}"));
            }
        }
        if let Some(r0) = f.r0 {
            if !(r0 < 0.0) {
                return bad("flow.r0", format!("must be negative, got {r0}"));
            }
        }
        let c = &self.conjugate;
        if !(c.t0 > 0.0) {
            return bad("conjugate.t0", format!("need 0 < t0, got t0 = {}", c.t0));
        }
        if !(c.t0 < c.t1) {
            return bad("conjugate.t1", format!("need t0 < t1, got t0 = {}, t1 = {}", c.t0, c.t1));
        }
        if !(c.t1 <= f.t_final) {
            return bad("conjugate.t1", format!("need t1 ≤ T, got t1 = {}, T = {}", c.t1, f.t_final));
        }
        match c.terminal.as_str() {
            "uniform" => {}
            "bump" => {
                if !(c.amplitude > -1.0) || !(c.width > 0.0) {
                    return bad("conjugate.amplitude", "bump needs amplitude > −1 and width > 0".to_string());
                }
            }
            other => return bad("conjugate.terminal", format!("unknown preset `{other}` (uniform, bump)")),
        }
        match self.heat.v0.as_str() {
            "fourier-mode" => {
                if self.heat.mode == [0, 0, 0] {
                    return bad("heat.mode", "wave vector must be nonzero".to_string());
                }
            }
            "bump" => {
                if !(self.heat.width > 0.0) {
                    return bad("heat.width", "must be positive".to_string());
                }
            }
            "random" => {
                if self.heat.max_mode == 0 {
                    return bad("heat.max_mode", "must be at least 1".to_string());
                }
            }
            "eigenfunction" => {}
            other => {
                return bad(
                    "heat.v0",
                    format!("unknown preset `{other}` (fourier-mode, bump, random, eigenfunction)"),
                )
            }
        }
        if let Some(fc) = self.heat.forcing {
            if !(fc.a.abs() <= 1.0) || !(fc.b.abs() <= 1.0) {
                return bad("heat.forcing", format!("need |a| ≤ 1 and |b| ≤ 1, got a = {}, b = {}", fc.a, fc.b));
            }
        }
        if self.checks.growth && self.heat.forcing.is_none() {
            return bad("checks.growth", "growth checks need heat.forcing".to_string());
        }
        if let Some([a, b]) = self.checks.uniqueness {
            if !(c.t0 <= a && a < b && b <= c.t1) {
                return bad("checks.uniqueness", format!("need t0 ≤ a < b ≤ t1, got [{a}, {b}]"));
            }
        }
        if self.checks.audit_stride == 0 || self.checks.eigen_stride == 0 {
            return bad("checks", "strides must be positive".to_string());
        }
        let weight = self.time_weight();
        if weight.h.sign_on(c.t0, c.t1).is_none() {
            return bad("weights.h", "h must be nonzero with one sign on [t0, t1]".to_string());
        }
        if let Err(e) = self.metric_preset() {
            return bad("metric", e.to_string());
        }
        Ok(())
    }

    pub fn grid(&self) -> Grid {
        Grid::new(self.grid.n, FdOrder::from_value(self.grid.fd_order).expect("validated")).expect("validated")
    }

    pub fn pressure_equation(&self) -> PressureEquation {
        match self.flow.r0 {
            Some(r0) => PressureEquation::General { r0 },
            None => PressureEquation::Conformal,
        }
    }

    pub fn metric_preset(&self) -> crflow::Result<MetricPreset> {
        let m = &self.metric;
        MetricPreset::from_name(
            &m.preset,
            &MetricParams {
                amplitude: m.amplitude,
                mode: m.mode,
                amplitudes: m.amplitudes,
                axes: m.axes,
                seed: Some(self.seed),
                max_mode: m.max_mode,
            },
        )
    }

    pub fn time_weight(&self) -> TimeWeight {
        let k = match self.weights.k {
            KSpec::Keyword(KKeyword::Auto) => KPolicy::Auto,
            KSpec::Fixed(spec) => KPolicy::Fixed(spec.to_fn()),
        };
        TimeWeight::new(self.weights.h.to_fn(), k, self.conjugate.t0).with_end(self.conjugate.t1)
    }

    /// Terminal data `H(T)` before normalization.
    pub fn terminal_h(&self, grid: Grid) -> ScalarField {
        let c = &self.conjugate;
        match c.terminal.as_str() {
            "bump" => ScalarField::from_fn(grid, |x| 1.0 + c.amplitude * periodic_bump(x, c.center, c.width)),
            _ => ScalarField::constant(grid, 1.0),
        }
    }

    /// Initial heat data for the non-spectral presets.
    pub fn initial_v(&self, grid: Grid) -> Option<ScalarField> {
        let h = &self.heat;
        match h.v0.as_str() {
            "fourier-mode" => {
                let k = h.mode.map(f64::from);
                Some(ScalarField::from_fn(grid, |x| (k[0] * x[0] + k[1] * x[1] + k[2] * x[2]).sin()))
            }
            "bump" => Some(ScalarField::from_fn(grid, |x| periodic_bump(x, h.center, h.width))),
            "random" => Some(ScalarField::random_smooth(grid, self.seed.wrapping_add(0x5eed), h.max_mode)),
            _ => None,
        }
    }
}

/// Gaussian of the periodic distance to `center`.
fn periodic_bump(x: [f64; 3], center: [f64; 3], width: f64) -> f64 {
    let tau = 2.0 * std::f64::consts::PI;
    let mut d2 = 0.0;
    for a in 0..3 {
        let mut d = (x[a] - center[a]).rem_euclid(tau);
        if d > tau / 2.0 {
            d -= tau;
        }
        d2 += d * d;
    }
    (-d2 / (2.0 * width * width)).exp()
}

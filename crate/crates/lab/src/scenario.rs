//! End-to-end pipelines behind the subcommands.

use serde_json::json;

use crflow::audit::{
    check_bochner, check_evolution_identities, check_measure_and_pressure, check_pressure_bound_injected,
    check_reilly, check_selfadjoint, convergence_study, ricci_oracle_residual,
    synthetic_ricci, AuditResult, ConvergenceStudy, MeasureTolerances,
};
use crflow::elliptic::EllipticConfig;
use crflow::flow::{evolve_flow, heat_track, solve_conjugate_heat, FlowConfig, FlowHistory, HeatForcing, StepPolicy};
use crflow::frequency::{
    backward_uniqueness_bound, check_i_derivative, compute_q, eigen_monotonicity_check, growth_checks,
    monotonicity_report, EigenMonotonicity, FrequencyReport, GrowthOutcome, MonotonicityReport, UniquenessBound,
    Verdict,
};
use crflow::metric::MetricPreset;
use crflow::spectral::{drift_eigenpair, EigenConfig};
use crflow::{FdOrder, Grid, MetricField, ScalarField};

use crate::config::ScenarioConfig;
use crate::output::{timeseries_csv, Artifacts};
use crate::report::{Check, Report};
use crate::LabError;

/// Flow, conjugate and heat passes of a scenario.
pub struct Simulation {
    pub history: FlowHistory,
    pub report: FrequencyReport,
}

pub fn flow_config(cfg: &ScenarioConfig) -> FlowConfig {
    let mut fc = FlowConfig::new(cfg.flow.t_final);
    fc.policy = StepPolicy {
        safety: cfg.flow.safety,
        dt_max: cfg.flow.dt_max,
    };
    fc.pressure = cfg.pressure_equation();
    fc.landmarks = vec![cfg.conjugate.t0, cfg.conjugate.t1];
    if let Some([a, b]) = cfg.checks.uniqueness {
        fc.landmarks.extend([a, b]);
    }
    fc
}

pub fn simulate(cfg: &ScenarioConfig) -> Result<Simulation, LabError> {
    let grid = cfg.grid();
    let g0 = cfg.metric_preset()?.build(grid)?;
    let mut history = evolve_flow(&g0, &flow_config(cfg))?;
    solve_conjugate_heat(&mut history, &cfg.terminal_h(grid))?;
    let forcing = match cfg.heat.forcing {
        Some(f) => HeatForcing::new(f.a, f.b)?,
        None => HeatForcing::NONE,
    };
    let (start, v0) = match cfg.initial_v(grid) {
        Some(v0) => (0, v0),
        None => {
            let i0 = history.index_of(cfg.conjugate.t0).expect("t0 is a landmark");
            let h = history.h(i0).expect("conjugate pass ran");
            let e = drift_eigenpair(&history.metric(i0), &h, &EigenConfig::default())?;
            (i0, e.u)
        }
    };
    history.heat = Some(heat_track(&history, &v0, start, forcing)?);
    let report = compute_q(&history, &cfg.time_weight())?;
    Ok(Simulation { history, report })
}

/// Largest `|Q − Q(t0)| / |Q(t0)|` over the window.
pub fn rigidity_deviation(report: &FrequencyReport) -> f64 {
    let Some(q0) = report.q[0] else {
        return f64::NAN;
    };
    report
        .q
        .iter()
        .flatten()
        .map(|q| (q - q0).abs() / q0.abs())
        .fold(0.0, f64::max)
}

fn frequency_checks(cfg: &ScenarioConfig, sim: &Simulation, mono: &MonotonicityReport) -> Vec<Check> {
    let tol = &cfg.tolerances;
    let report = &sim.report;
    let mut checks = Vec::new();
    let detail = format!(
        "verdict {}, hypothesis margin {:e}, k {}",
        mono.verdict.as_str(),
        mono.hypothesis_margin,
        if report.k_is_auto { "auto" } else { "fixed" }
    );
    checks.push(match mono.verdict {
        Verdict::HypothesisUnmet => Check::not_applicable("monotonicity", detail),
        _ => Check::verdict(
            "monotonicity",
            mono.verdict.is_compliant(),
            mono.worst_slope,
            mono.epsilon,
            detail,
        ),
    });
    if mono.verdict == Verdict::Constant {
        checks.push(Check::at_most(
            "rigidity-constant-q",
            rigidity_deviation(report),
            tol.rigidity,
            "max |Q − Q(t0)| / |Q(t0)|",
        ));
        checks.push(Check::at_most(
            "rigidity-eigenfunction",
            mono.max_eigen_residual().unwrap_or(f64::NAN),
            tol.eigen_residual,
            "max ‖−𝓛_f v − c v‖ / ‖v‖ over constant samples",
        ));
    } else {
        checks.push(Check::not_applicable("rigidity-constant-q", "Q is not constant"));
    }
    checks.push(Check::at_least(
        "cauchy-schwarz",
        report.min_cauchy_schwarz(),
        tol.cauchy_schwarz,
        "min relative gap I∫(𝓛_f v)² − (∫|∇v|²)²",
    ));
    let di = check_i_derivative(report);
    checks.push(Check::informational(
        "i-derivative",
        di.iter().copied().fold(0.0, f64::max),
        "max |I′ − (2p̄I − 2E/h)| / max(|I′|, 1), one-sided at the ends",
    ));
    checks
}

fn uniqueness_check(cfg: &ScenarioConfig, report: &FrequencyReport) -> Result<Option<Check>, LabError> {
    let Some([a, b]) = cfg.checks.uniqueness else {
        return Ok(None);
    };
    if report.h[0] > 0.0 {
        return Ok(Some(Check::not_applicable(
            "uniqueness-lower-bound",
            "the lower bound on log(I(b)/I(a)) needs h < 0",
        )));
    }
    let bound = backward_uniqueness_bound(report, a, b)?;
    Ok(Some(match bound {
        UniquenessBound::Residual { residual, exponent, .. } => Check::at_least(
            "uniqueness-lower-bound",
            residual,
            cfg.tolerances.uniqueness,
            format!("log(I(b)/I(a)) − X with X = {exponent:e} on [{a}, {b}]"),
        ),
        UniquenessBound::Vacuous => Check::not_applicable("uniqueness-lower-bound", "I(a) = 0"),
        UniquenessBound::ForcesZero { i_a, consistent } => Check::verdict(
            "uniqueness-lower-bound",
            consistent,
            i_a,
            0.0,
            "I(b) = 0 with a finite exponent forces I(a) = 0",
        ),
    }))
}

fn growth_suite(cfg: &ScenarioConfig, sim: &Simulation) -> Vec<Check> {
    let tol = cfg.tolerances.growth;
    let mut checks = Vec::new();
    let heat = sim.history.heat.as_ref().expect("heat pass ran");
    match heat.certificate {
        Some(c) => checks.push(Check::at_most(
            "forcing-certificate",
            c.max_excess,
            c.tolerance,
            "max(|(∂t − Δ)v| − p̄(|v| + |∇v|)) over nodes and steps",
        )),
        None => checks.push(Check::verdict("forcing-certificate", false, f64::NAN, f64::NAN, "no certificate")),
    }
    match growth_checks(&sim.history, &sim.report) {
        GrowthOutcome::Checked(g) => {
            checks.push(Check::at_least("growth-log-i-rate", g.log_i_rate, tol, "(log I)′ lower bound"));
            checks.push(Check::at_least("growth-q-rate", g.q_rate, tol, "Q′ ≤ p̄²(Q + h(t0))"));
            checks.push(Check::at_least("growth-log-q-rate", g.log_q_rate, tol, "p̄² ≥ [log(Q + h(t0))]′"));
            checks.push(Check::at_least("growth-q-bound", g.q_bound, tol, "Q ≤ (Q(t0)+h(t0))e^{∫p̄²} − h(t0)"));
            checks.push(match g.integrated {
                UniquenessBound::Residual { residual, exponent, .. } => Check::at_least(
                    "growth-integrated",
                    residual,
                    tol,
                    format!("log(I(t1)/I(t0)) − X with X = {exponent:e}"),
                ),
                UniquenessBound::Vacuous => Check::not_applicable("growth-integrated", "I(t0) = 0"),
                UniquenessBound::ForcesZero { i_a, consistent } => {
                    Check::verdict("growth-integrated", consistent, i_a, 0.0, "I(t1) = 0 forces I(t0) = 0")
                }
            });
        }
        GrowthOutcome::Skipped(why) => {
            let applicable = heat.certificate.map(|c| c.passed()).unwrap_or(false);
            checks.push(if applicable {
                Check::not_applicable("growth", why)
            } else {
                Check::verdict("growth", false, f64::NAN, f64::NAN, why)
            });
        }
    }
    checks
}

fn eigen_suite(cfg: &ScenarioConfig, sim: &Simulation) -> Result<(Check, EigenMonotonicity), LabError> {
    let em = eigen_monotonicity_check(&sim.history, &sim.report, &EigenConfig::default(), cfg.checks.eigen_stride)?;
    let check = Check::at_least(
        "eigenvalue-monotonicity",
        em.min_margin,
        cfg.tolerances.eigen_monotone,
        format!(
            "min (h(t0)λ(t0) − hλe^{{−∫…}})·sign h over {} samples; raw hλ monotone: {}",
            em.samples.len(),
            em.raw_monotone
        ),
    );
    Ok((check, em))
}

fn measure_tolerances(cfg: &ScenarioConfig) -> MeasureTolerances {
    MeasureTolerances {
        volume: cfg.tolerances.measure,
        weighted: cfg.tolerances.measure,
        mass: cfg.tolerances.mass,
        min_pressure: 1e-8,
    }
}

/// Audits along a simulated history plus the static identities at `t0`.
pub fn audit_checks(cfg: &ScenarioConfig, sim: &Simulation) -> Result<Vec<Check>, LabError> {
    let tol = &cfg.tolerances;
    let hist = &sim.history;
    let mut checks = Vec::new();
    for r in check_measure_and_pressure(hist, cfg.checks.audit_stride, &measure_tolerances(cfg))? {
        checks.push(Check::from_audit("audit:", &r));
    }
    let (a, b) = check_evolution_identities(hist, cfg.checks.audit_stride, tol.evolution)?;
    checks.push(Check::from_audit("audit:", &a));
    checks.push(Check::from_audit("audit:", &b));
    let i0 = sim.report.indices[0];
    let g = hist.metric(i0);
    let h = hist.h(i0).expect("conjugate pass ran");
    let (sa, ibp) = check_selfadjoint(&g, &h, cfg.seed, 3)?;
    checks.push(Check::from_audit("audit:", &with_tolerance(sa, tol.selfadjoint)));
    checks.push(Check::from_audit("audit:", &ibp));
    let v = hist.v(i0).expect("heat pass covers t0");
    checks.push(Check::from_audit("audit:", &check_bochner(&g, &h, &v, tol.bochner)?));
    checks.push(Check::from_audit("audit:", &check_reilly(&g, &h, &v, tol.reilly)?));
    let injected = check_pressure_bound_injected(&g, &synthetic_ricci(&g, 0.3), &EllipticConfig::default())?;
    checks.push(Check::from_audit("audit:injected-", &injected));
    Ok(checks)
}

fn with_tolerance(mut r: AuditResult, tolerance: f64) -> AuditResult {
    r.tolerance = tolerance;
    r.pass = r.residual <= tolerance;
    r
}

fn summary(sim: &Simulation, mono: &MonotonicityReport) -> serde_json::Value {
    let r = &sim.report;
    json!({
        "steps": sim.history.len(),
        "t0": r.times[0],
        "t1": r.times[r.len() - 1],
        "samples": r.len(),
        "verdict": mono.verdict.as_str(),
        "epsilon": mono.epsilon,
        "worst_slope": mono.worst_slope,
        "hypothesis_margin": mono.hypothesis_margin,
        "q_t0": r.q[0],
        "q_t1": r.q[r.len() - 1],
        "mass_drift": sim.history.mass_drift(),
    })
}

/// `run`: every enabled suite; the time series covers `[t0, t1]`.
pub fn run(cfg: &ScenarioConfig) -> Result<Artifacts, LabError> {
    let sim = simulate(cfg)?;
    let tol = &cfg.tolerances;
    let mono = monotonicity_report(&sim.report, tol.monotone);
    let mut checks = vec![Check::at_most(
        "unit-mass",
        sim.history.mass_drift().unwrap_or(f64::NAN),
        tol.mass,
        "max |∫dV − 1| over steps",
    )];
    checks.extend(frequency_checks(cfg, &sim, &mono));
    checks.extend(uniqueness_check(cfg, &sim.report)?);
    let eigen = if cfg.checks.eigen {
        let (c, em) = eigen_suite(cfg, &sim)?;
        checks.push(c);
        Some(em)
    } else {
        None
    };
    if cfg.checks.growth {
        checks.extend(growth_suite(cfg, &sim));
    }
    if cfg.checks.audits {
        checks.extend(audit_checks(cfg, &sim)?);
    }
    let report = Report::new("run", cfg, checks, summary(&sim, &mono));
    Ok(Artifacts::for_run(report, timeseries_csv(&sim.report, eigen.as_ref()), &sim.report, eigen.as_ref()))
}

/// `audit`: the auditor suites only.
pub fn audit(cfg: &ScenarioConfig) -> Result<Artifacts, LabError> {
    let sim = simulate(cfg)?;
    let mut checks = vec![Check::at_most(
        "unit-mass",
        sim.history.mass_drift().unwrap_or(f64::NAN),
        cfg.tolerances.mass,
        "max |∫dV − 1| over steps",
    )];
    checks.extend(audit_checks(cfg, &sim)?);
    let mono = monotonicity_report(&sim.report, cfg.tolerances.monotone);
    Ok(Artifacts::report_only(Report::new("audit", cfg, checks, summary(&sim, &mono))))
}

pub const DEFAULT_NS: [usize; 3] = [16, 32, 64];

/// Smooth seeded test data for refinement studies: the scenario's metric
/// preset, `H = exp(½ r₁)` and `u = r₂` with seeded random fields of mode 1.
fn study_inputs(cfg: &ScenarioConfig, preset: &MetricPreset, grid: Grid) -> crflow::Result<(MetricField, ScalarField, ScalarField)> {
    let g = preset.build(grid)?;
    let h = ScalarField::random_smooth(grid, cfg.seed.wrapping_add(100), 1).map(|x| (0.5 * x).exp());
    let u = ScalarField::random_smooth(grid, cfg.seed.wrapping_add(200), 1);
    Ok((g, h, u))
}

/// `converge`: refinement slopes on the scenario's initial metric.
pub fn converge(cfg: &ScenarioConfig, ns: &[usize]) -> Result<Artifacts, LabError> {
    let order = FdOrder::from_value(cfg.grid.fd_order)?;
    let expected = f64::from(cfg.grid.fd_order);
    let band = cfg.tolerances.slope_band;
    let preset = cfg.metric_preset()?;
    let mut studies: Vec<ConvergenceStudy> = Vec::new();
    if let MetricPreset::Conformal { amplitude, mode } = preset {
        studies.push(convergence_study("ricci-oracle", ns, order, expected, band, |grid| {
            ricci_oracle_residual(grid, amplitude, mode)
        })?);
    }
    studies.push(convergence_study("bochner", ns, order, expected, band, |grid| {
        let (g, h, u) = study_inputs(cfg, &preset, grid)?;
        crflow::audit::bochner_residual(&g, &h, &u)
    })?);
    studies.push(convergence_study("reilly", ns, order, expected, band, |grid| {
        let (g, h, u) = study_inputs(cfg, &preset, grid)?;
        crflow::audit::reilly_residual(&g, &h, &u)
    })?);
    let mut checks: Vec<Check> = studies
        .iter()
        .map(|s| {
            Check::verdict(
                &format!("slope:{}", s.name),
                s.pass,
                s.fitted,
                s.band,
                format!("expected {} ± {}, pairwise {:?}", s.expected, s.band, s.pairwise),
            )
        })
        .collect();
    let mut worst_sa = 0.0f64;
    for &n in ns {
        let grid = Grid::new(n, order)?;
        let (g, h, _) = study_inputs(cfg, &preset, grid)?;
        worst_sa = worst_sa.max(check_selfadjoint(&g, &h, cfg.seed, 3)?.0.residual);
    }
    checks.push(Check::at_most(
        "self-adjoint",
        worst_sa,
        cfg.tolerances.selfadjoint,
        format!("max over N in {ns:?}"),
    ));
    let mut csv = String::from("identity,N,spacing,residual,pairwise_slope,fitted_slope\n");
    for s in &studies {
        for (k, (&n, (h, r))) in ns.iter().zip(s.h.iter().zip(&s.residuals)).enumerate() {
            let pair = if k == 0 { String::new() } else { format!("{:.16e}", s.pairwise[k - 1]) };
            csv.push_str(&format!("{},{n},{h:.16e},{r:.16e},{pair},{:.16e}\n", s.name, s.fitted));
        }
    }
    let summary = json!({ "ns": ns, "expected_slope": expected, "band": band });
    Ok(Artifacts::with_table(Report::new("converge", cfg, checks, summary), "convergence.csv", csv))
}

/// Smallest nonzero eigenvalue `(2 − 2cos h)/h²` of the second-order
/// difference Laplacian on a flat grid of spacing `h`.
pub fn flat_symbol_fd2(spacing: f64) -> f64 {
    (2.0 - 2.0 * spacing.cos()) / (spacing * spacing)
}

/// Symbol of the discrete Laplacian on the mode `cos x¹`, measured by
/// applying the operator at the node `x = 0`.
pub fn flat_symbol(grid: Grid) -> f64 {
    let op = MetricField::flat(grid).laplacian_operator();
    let mode = ScalarField::from_fn(grid, |x| x[0].cos());
    -op.apply(mode.values())[0]
}

/// `eigen`: smallest nonzero eigenvalue of `−𝓛_f` for the initial metric and
/// terminal weight, checked against the discrete symbol on flat data.
pub fn eigen(cfg: &ScenarioConfig) -> Result<Artifacts, LabError> {
    let grid = cfg.grid();
    let g = cfg.metric_preset()?.build(grid)?;
    let h = cfg.terminal_h(grid);
    let e = drift_eigenpair(&g, &h, &EigenConfig::default())?;
    let mut checks = vec![Check::at_most(
        "eigen-residual",
        e.residual,
        cfg.tolerances.eigen_residual,
        match e.gap {
            Some(gap) => format!("{} iterations, gap {gap:.3e}", e.iterations),
            None => format!("{} iterations", e.iterations),
        },
    )];
    let symbol = if g.is_uniform() && h.is_uniform() {
        let exact = if grid.fd_order() == FdOrder::Second {
            flat_symbol_fd2(grid.spacing())
        } else {
            flat_symbol(grid)
        };
        let err = (e.lambda - exact).abs() / exact;
        checks.push(Check::at_most(
            "eigen-symbol",
            err,
            1e-10,
            format!("λ = {:.17e}, symbol {:.17e}", e.lambda, exact),
        ));
        Some(exact)
    } else {
        checks.push(Check::not_applicable("eigen-symbol", "metric or weight is not uniform"));
        None
    };
    let summary = json!({
        "lambda": e.lambda,
        "symbol": symbol,
        "residual": e.residual,
        "iterations": e.iterations,
        "gap": e.gap,
        "near_degenerate": e.near_degenerate,
    });
    let csv = format!(
        "lambda,residual,iterations\n{:.16e},{:.16e},{}\n",
        e.lambda, e.residual, e.iterations
    );
    Ok(Artifacts::with_table(Report::new("eigen", cfg, checks, summary), "eigen.csv", csv))
}

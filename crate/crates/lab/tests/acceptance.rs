//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

use std::process::ExitCode;
use std::time::Instant;

use crflow::audit::{
    bochner_residual, check_evolution_identities, check_selfadjoint, convergence_study, reilly_residual,
};
use crflow::flow::{evolve_flow, solve_conjugate_heat, solve_heat, FlowConfig, FlowHistory, StepPolicy};
use crflow::frequency::{
    backward_uniqueness_bound, compute_q, eigen_monotonicity_check, growth_checks, monotonicity_report,
    FrequencyReport, GrowthOutcome, KPolicy, TimeWeight, WeightFn,
};
use crflow::spectral::EigenConfig;
use crflow::{FdOrder, Grid, MetricField, MetricPreset, ScalarField};
use crflow_lab::{presets, scenario, ScenarioConfig};

const T0: f64 = 0.01;
const T1: f64 = 0.09;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// Flat flow to `T = 0.1` with `dt = 1e-3`, landmarks at the window ends.
fn flat_flow(n: usize) -> (FlowHistory, f64) {
    let grid = Grid::new(n, FdOrder::Fourth).unwrap();
    let mut cfg = FlowConfig::new(0.1);
    cfg.policy = StepPolicy::fixed_cap(1e-3);
    cfg.landmarks = vec![T0, T1];
    let start = Instant::now();
    let hist = evolve_flow(&MetricField::flat(grid), &cfg).unwrap();
    (hist, start.elapsed().as_secs_f64())
}

/// Flat flow with the conjugate pass from a uniform terminal weight and the
/// heat pass from `sin x¹`.
fn rigidity_run(n: usize) -> FlowHistory {
    let (mut hist, _) = flat_flow(n);
    let grid = *hist.grid();
    solve_conjugate_heat(&mut hist, &ScalarField::constant(grid, 1.0)).unwrap();
    solve_heat(&mut hist, &ScalarField::from_fn(grid, |x| x[0].sin())).unwrap();
    hist
}

fn window(h: f64, k: KPolicy) -> TimeWeight {
    TimeWeight::new(WeightFn::Constant(h), k, T0).with_end(T1)
}

fn rigidity_report(hist: &FlowHistory) -> FrequencyReport {
    compute_q(hist, &window(1.0, KPolicy::Fixed(WeightFn::Constant(4.0)))).unwrap()
}

fn max_dqdt(report: &FrequencyReport, sign: f64) -> f64 {
    report.dqdt.iter().flatten().map(|d| d * sign).fold(f64::NEG_INFINITY, f64::max)
}

fn c1_c2(flat32: &FlowHistory, seconds: f64) -> (Outcome, Outcome) {
    let mut decay = 0.0f64;
    let mut pressure = 0.0f64;
    for i in 0..flat32.len() {
        let want = (-8.0 * flat32.time(i)).exp();
        for c in flat32.metric(i).components() {
            for a in 0..3 {
                for b in 0..3 {
                    let delta = if a == b { 1.0 } else { 0.0 };
                    decay = decay.max((c.get(a, b) - want * delta).abs());
                }
            }
        }
        pressure = pressure.max(flat32.pressure(i).values().iter().fold(0.0f64, |m, p| m.max((p - 2.0).abs())));
    }
    let last = flat32.len() - 1;
    let end = flat32.metric(last).components()[0].get(0, 0);
    let end_err = (end - (-8.0 * flat32.time(last)).exp()).abs();
    (
        outcome(
            decay <= 1e-6 && end_err <= 1e-6 && seconds <= 30.0,
            format!("max ‖g − e^(−8t)δ‖∞ = {decay:.3e}, at T {end_err:.3e}, flow runtime {seconds:.1} s (≤ 30 s)"),
        ),
        outcome(pressure <= 1e-8, format!("max |p − 2| = {pressure:.3e} over all steps")),
    )
}

fn c3(flat64: &FlowHistory) -> Outcome {
    let last = flat64.len() - 1;
    let t = flat64.time(last);
    let grid = *flat64.grid();
    let amp = (2.0 * t - ((8.0 * t).exp() - 1.0) / 8.0).exp();
    let v = flat64.v(last).unwrap();
    let want = grid.sample(|x| amp * x[0].sin());
    let err = v.values().iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / amp;
    outcome(err <= 1e-3, format!("relative error {err:.3e} at t = {t}, N = 64"))
}

fn c4(flat64: &FlowHistory) -> Outcome {
    let report = rigidity_report(flat64);
    let dev = scenario::rigidity_deviation(&report);
    let mono = monotonicity_report(&report, 1e-4);
    let eig = mono.max_eigen_residual().unwrap_or(f64::INFINITY);
    outcome(
        dev <= 1e-4 && eig <= 1e-3,
        format!(
            "max |Q − Q(t0)|/Q(t0) = {dev:.3e}, eigen residual {eig:.3e}, verdict {}",
            mono.verdict.as_str()
        ),
    )
}

fn c5(first: &mut Option<scenario::Simulation>) -> Outcome {
    let base = presets::load("perturbed-monotone").unwrap();
    let mut worst_pos = f64::NEG_INFINITY;
    let mut worst_neg = f64::NEG_INFINITY;
    let mut failures = Vec::new();
    for seed in 0..10u64 {
        let mut cfg = base.clone();
        cfg.seed = seed;
        cfg.checks.eigen = false;
        let sim = scenario::simulate(&cfg).unwrap();
        let pos = max_dqdt(&sim.report, 1.0) / sim.report.max_abs_q();
        let mirrored = compute_q(&sim.history, &window(-1.0, KPolicy::Auto)).unwrap();
        let neg = max_dqdt(&mirrored, -1.0) / mirrored.max_abs_q();
        if pos > 1e-4 || neg > 1e-4 {
            failures.push(seed);
        }
        worst_pos = worst_pos.max(pos);
        worst_neg = worst_neg.max(neg);
        if seed == 0 {
            *first = Some(sim);
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "10 seeds, N = 16, amplitude {}: max dQ/dt / max|Q| = {worst_pos:.3e} (h = 1), max −dQ/dt / max|Q| = {worst_neg:.3e} (h = −1){}",
            base.metric.amplitude.unwrap_or_default(),
            if failures.is_empty() { String::new() } else { format!(", failing seeds {failures:?}") }
        ),
    )
}

fn c6() -> Outcome {
    let mut worst = 0.0f64;
    let mut all = true;
    for order in [FdOrder::Second, FdOrder::Fourth] {
        let grid = Grid::new(16, order).unwrap();
        for seed in 0..3u64 {
            let metric = MetricPreset::RandomSmooth {
                seed,
                amplitude: 0.2,
                max_mode: 2,
            }
            .build(grid)
            .unwrap();
            let h = ScalarField::random_smooth(grid, seed + 50, 2).map(|x| (0.5 * x).exp());
            let (sa, _) = check_selfadjoint(&metric, &h, seed, 4).unwrap();
            worst = worst.max(sa.residual);
            all &= sa.pass;
        }
    }
    outcome(all && worst <= 1e-12, format!("max relative asymmetry {worst:.3e} over 24 seeded pairs"))
}

fn c7() -> Outcome {
    let ns = [16, 32, 64];
    let inputs = |grid: Grid| {
        let metric = MetricPreset::RandomSmooth {
            seed: 5,
            amplitude: 0.1,
            max_mode: 1,
        }
        .build(grid)?;
        let h = ScalarField::random_smooth(grid, 105, 1).map(|x| (0.5 * x).exp());
        let u = ScalarField::random_smooth(grid, 205, 1);
        Ok::<_, crflow::Error>((metric, h, u))
    };
    let mut parts = Vec::new();
    let mut pass = true;
    for order in [FdOrder::Second, FdOrder::Fourth] {
        let expected = f64::from(order.value());
        let b = convergence_study("bochner", &ns, order, expected, 0.5, |g| {
            let (m, h, u) = inputs(g)?;
            bochner_residual(&m, &h, &u)
        })
        .unwrap();
        let r = convergence_study("reilly", &ns, order, expected, 0.5, |g| {
            let (m, h, u) = inputs(g)?;
            reilly_residual(&m, &h, &u)
        })
        .unwrap();
        pass &= b.pass && r.pass;
        parts.push(format!("fd{}: Bochner {:.2}, Reilly {:.2}", order.value(), b.fitted, r.fitted));
    }
    outcome(pass, format!("fitted slopes over N = 16/32/64: {}", parts.join("; ")))
}

fn c8(flat32: &FlowHistory, flat64: &FlowHistory) -> Outcome {
    let combined = |h: &FlowHistory| {
        let (a, b) = check_evolution_identities(h, 5, 1e-3).unwrap();
        a.residual.max(b.residual)
    };
    let (r32, r64) = (combined(flat32), combined(flat64));
    outcome(
        r64 <= 1e-3 && r64 < r32,
        format!("combined residual {r32:.3e} at N = 32, {r64:.3e} at N = 64"),
    )
}

fn c9_c14() -> (Outcome, Outcome) {
    let mut worst_mass = 0.0f64;
    let mut mass_ok = true;
    let mut differing = Vec::new();
    for name in presets::names() {
        let cfg = presets::load(name).unwrap();
        let a = scenario::run(&cfg).unwrap();
        let b = scenario::run(&cfg).unwrap();
        let mass = a.report.checks.iter().find(|c| c.name == "unit-mass").expect("run reports unit mass");
        worst_mass = worst_mass.max(mass.residual);
        mass_ok &= mass.residual <= 1e-8;
        let (ca, cb) = (a.table("timeseries.csv").unwrap(), b.table("timeseries.csv").unwrap());
        if ca.as_bytes() != cb.as_bytes() {
            differing.push(name);
        }
    }
    (
        outcome(mass_ok, format!("max |∫dV − 1| = {worst_mass:.3e} over every step of the 6 bundled scenarios")),
        outcome(
            differing.is_empty(),
            if differing.is_empty() {
                "timeseries.csv byte-identical across two runs of each bundled scenario".to_string()
            } else {
                format!("differing: {differing:?}")
            },
        ),
    )
}

fn c10() -> Outcome {
    let cfg = presets::load("backward-uniqueness").unwrap();
    let sim = scenario::simulate(&cfg).unwrap();
    let [a, b] = cfg.checks.uniqueness.unwrap();
    let bound = backward_uniqueness_bound(&sim.report, a, b).unwrap();
    let residual = bound.residual().unwrap_or(f64::NAN);
    outcome(
        bound.holds(1e-6) && residual >= -1e-6,
        format!("log(I(b)/I(a)) − RHS = {residual:.3e} on [{a}, {b}], h ≡ −1"),
    )
}

fn c11(flat32: &FlowHistory, perturbed: &scenario::Simulation) -> Outcome {
    let cfg = EigenConfig::default();
    let flat_report = rigidity_report(flat32);
    let flat = eigen_monotonicity_check(flat32, &flat_report, &cfg, 20).unwrap();
    let pert = eigen_monotonicity_check(&perturbed.history, &perturbed.report, &cfg, 20).unwrap();
    outcome(
        flat.holds(1e-4) && flat.max_deviation <= 1e-4 && pert.holds(1e-4),
        format!(
            "flat: max |hλe^(−∫) − h(t0)λ(t0)| = {:.3e} over {} samples; perturbed: min margin {:.3e} over {} samples",
            flat.max_deviation,
            flat.samples.len(),
            pert.min_margin,
            pert.samples.len()
        ),
    )
}

fn c12() -> Outcome {
    let cfg = presets::load("forced-growth").unwrap();
    let sim = scenario::simulate(&cfg).unwrap();
    let cert = sim.history.heat.as_ref().unwrap().certificate.unwrap();
    match growth_checks(&sim.history, &sim.report) {
        GrowthOutcome::Checked(g) => {
            let integrated = g.integrated.residual().unwrap_or(f64::NAN);
            let min = g.log_i_rate.min(g.q_rate).min(g.log_q_rate).min(integrated);
            outcome(
                min >= -1e-4 && cert.max_excess <= 1e-8,
                format!(
                    "residuals: log I rate {:.3e}, Q rate {:.3e}, log Q rate {:.3e}, integrated {:.3e}; certificate excess {:.3e}",
                    g.log_i_rate, g.q_rate, g.log_q_rate, integrated, cert.max_excess
                ),
            )
        }
        GrowthOutcome::Skipped(why) => outcome(false, format!("skipped: {why}")),
    }
}

fn c13() -> Outcome {
    let mut cfg: ScenarioConfig = presets::load("flat-uniform").unwrap();
    cfg.grid.fd_order = 2;
    cfg.grid.n = 16;
    let art = scenario::eigen(&cfg).unwrap();
    let lambda = art.report.summary["lambda"].as_f64().unwrap();
    let s = 2.0 * std::f64::consts::PI / 16.0;
    let exact = (2.0 - 2.0 * s.cos()) / (s * s);
    let err = (lambda - exact).abs();
    outcome(err <= 1e-10, format!("λ = {lambda:.15}, symbol {exact:.15}, |difference| {err:.3e}"))
}

fn main() -> ExitCode {
    let mut results: Vec<(u32, &str, Outcome, f64)> = Vec::new();
    let mut record = |id: u32, name: &'static str, start: Instant, o: Outcome| {
        let line = format!(
            "{} C{id:<2} {name}: {} [{:.1} s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
        println!("{line}");
        results.push((id, name, o, start.elapsed().as_secs_f64()));
    };

    let start = Instant::now();
    let (flat32_flow, seconds) = flat_flow(32);
    let (o1, o2) = c1_c2(&flat32_flow, seconds);
    record(1, "flat-flow metric decay", start, o1);
    record(2, "pressure constancy", Instant::now(), o2);

    let start = Instant::now();
    let flat64 = rigidity_run(64);
    record(3, "heat-mode closed form", start, c3(&flat64));
    record(4, "rigidity on the flat flow", Instant::now(), c4(&flat64));

    let start = Instant::now();
    let mut perturbed = None;
    record(5, "monotonicity on random metrics", start, c5(&mut perturbed));
    record(6, "discrete self-adjointness", Instant::now(), c6());
    record(7, "Bochner and Reilly refinement slopes", Instant::now(), c7());

    let start = Instant::now();
    let flat32 = rigidity_run(32);
    record(8, "evolution identities", start, c8(&flat32, &flat64));
    drop(flat64);

    let start = Instant::now();
    let (o9, o14) = c9_c14();
    record(9, "conjugate mass", start, o9);
    record(10, "backward-uniqueness bound", Instant::now(), c10());
    record(11, "corrected eigenvalue monotonicity", Instant::now(), c11(&flat32, perturbed.as_ref().unwrap()));
    record(12, "forced-equation growth suite", Instant::now(), c12());
    record(13, "eigensolver exactness", Instant::now(), c13());
    record(14, "determinism", Instant::now(), o14);

    results.sort_by_key(|r| r.0);
    let failed: Vec<String> = results.iter().filter(|r| !r.2.pass).map(|r| format!("C{}", r.0)).collect();
    println!(
        "acceptance: {}/{} criteria passed{}",
        results.len() - failed.len(),
        results.len(),
        if failed.is_empty() { String::new() } else { format!("; failed: {}", failed.join(", ")) }
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

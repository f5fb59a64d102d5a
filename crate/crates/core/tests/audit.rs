use crflow::audit::{
    bochner_residual, check_evolution_identities, check_measure_and_pressure, check_pressure_bound_injected,
    check_selfadjoint, convergence_study, reilly_residual, ricci_oracle_residual, synthetic_ricci, AuditStatus,
    MeasureTolerances,
};
use crflow::elliptic::EllipticConfig;
use crflow::flow::{evolve_flow, solve_conjugate_heat, solve_heat, FlowConfig, FlowHistory, StepPolicy};
use crflow::{FdOrder, Grid, MetricField, MetricPreset, ScalarField};

const NS: [usize; 3] = [16, 32, 64];

fn mode(grid: Grid) -> ScalarField {
    ScalarField::from_fn(grid, |x| x[0].sin())
}

fn random_inputs(grid: Grid, seed: u64) -> (MetricField, ScalarField, ScalarField) {
    let metric = MetricPreset::RandomSmooth {
        seed,
        amplitude: 0.1,
        max_mode: 1,
    }
    .build(grid)
    .unwrap();
    let h = ScalarField::random_smooth(grid, seed + 100, 1).map(|x| (0.5 * x).exp());
    let u = ScalarField::random_smooth(grid, seed + 200, 1);
    (metric, h, u)
}

fn flat_run(n: usize, v0: impl Fn([f64; 3]) -> f64) -> FlowHistory {
    let grid = Grid::new(n, FdOrder::Fourth).unwrap();
    let mut cfg = FlowConfig::new(0.05);
    cfg.policy = StepPolicy::fixed_cap(1e-3);
    let mut hist = evolve_flow(&MetricField::flat(grid), &cfg).unwrap();
    solve_conjugate_heat(&mut hist, &ScalarField::constant(grid, 1.0)).unwrap();
    solve_heat(&mut hist, &ScalarField::from_fn(grid, v0)).unwrap();
    hist
}

#[test]
fn flat_bochner_converges_at_stencil_order() {
    for order in [FdOrder::Second, FdOrder::Fourth] {
        let study = convergence_study("bochner", &NS, order, order.value() as f64, 0.5, |g| {
            bochner_residual(&MetricField::flat(g), &ScalarField::constant(g, 1.0), &mode(g))
        })
        .unwrap();
        assert!(study.pass, "{study:?}");
        if order == FdOrder::Fourth {
            assert!(study.residuals[1] <= 1e-3, "{study:?}");
        }
    }
}

#[test]
fn flat_reilly_is_tight() {
    let g = Grid::new(32, FdOrder::Fourth).unwrap();
    let r = reilly_residual(&MetricField::flat(g), &ScalarField::constant(g, 1.0), &mode(g)).unwrap();
    assert!(r <= 1e-6, "{r}");
}

#[test]
fn constant_functions_are_exact() {
    let g = Grid::new(16, FdOrder::Fourth).unwrap();
    let (metric, h, _) = random_inputs(g, 1);
    let c = ScalarField::constant(g, 1.5);
    assert_eq!(bochner_residual(&metric, &h, &c).unwrap(), 0.0);
    assert_eq!(reilly_residual(&metric, &h, &c).unwrap(), 0.0);
}

#[test]
fn random_identities_converge_at_stencil_order() {
    for order in [FdOrder::Second, FdOrder::Fourth] {
        let expected = order.value() as f64;
        let bochner = convergence_study("bochner", &NS, order, expected, 0.5, |g| {
            let (m, h, u) = random_inputs(g, 3);
            bochner_residual(&m, &h, &u)
        })
        .unwrap();
        assert!(bochner.pass, "{bochner:?}");
        let reilly = convergence_study("reilly", &NS, order, expected, 0.5, |g| {
            let (m, h, u) = random_inputs(g, 3);
            reilly_residual(&m, &h, &u)
        })
        .unwrap();
        assert!(reilly.pass, "{reilly:?}");
    }
}

#[test]
fn self_adjointness_is_exact() {
    for order in [FdOrder::Second, FdOrder::Fourth] {
        let g = Grid::new(16, order).unwrap();
        let (metric, h, _) = random_inputs(g, 7);
        let (sa, ibp) = check_selfadjoint(&metric, &h, 42, 4).unwrap();
        assert!(sa.pass && sa.residual <= 1e-12, "{sa:?}");
        assert_eq!(ibp.status, AuditStatus::Informational);
    }
}

#[test]
fn ricci_oracle_slope() {
    for order in [FdOrder::Second, FdOrder::Fourth] {
        let expected = order.value() as f64;
        let study = convergence_study("ricci", &NS, order, expected, 0.5, |g| {
            ricci_oracle_residual(g, 0.1, [1, 0, 0])
        })
        .unwrap();
        assert!(study.pass, "{study:?}");
    }
}

#[test]
fn flat_evolution_identities() {
    let hist = flat_run(32, |x| x[0].sin());
    let (grad, heat) = check_evolution_identities(&hist, 5, 1e-3).unwrap();
    assert!(grad.pass, "{grad:?}");
    assert!(heat.pass, "{heat:?}");

    let constant = flat_run(8, |_| 1.0);
    let (grad, heat) = check_evolution_identities(&constant, 5, 1e-3).unwrap();
    assert_eq!(grad.residual, 0.0);
    assert_eq!(heat.residual, 0.0);
}

#[test]
fn flat_measure_and_pressure() {
    let hist = flat_run(16, |x| x[0].sin());
    let results = check_measure_and_pressure(&hist, 5, &MeasureTolerances::default()).unwrap();
    let get = |name: &str| results.iter().find(|r| r.name == name).unwrap_or_else(|| panic!("{name}"));
    for name in ["volume-evolution", "weighted-measure-evolution", "unit-mass", "pressure-nonnegative"] {
        let r = get(name);
        assert!(r.is_enforced() && r.pass, "{r:?}");
    }
    assert!(matches!(get("pressure-upper-bound").status, AuditStatus::NotApplicable(_)));
    assert!(matches!(get("volume-evolution-pressure").status, AuditStatus::NotApplicable(_)));
}

#[test]
fn injected_pressure_bound() {
    let g = Grid::new(16, FdOrder::Fourth).unwrap();
    let metric = MetricPreset::Conformal {
        amplitude: 0.1,
        mode: [1, 0, 0],
    }
    .build(g)
    .unwrap();
    let r = check_pressure_bound_injected(&metric, &synthetic_ricci(&metric, 0.1), &EllipticConfig::default()).unwrap();
    assert!(r.is_enforced() && r.pass, "{r:?}");
    // The unperturbed injection is Einstein, so p ≡ 0 and the bound is trivial.
    let r = check_pressure_bound_injected(&metric, &synthetic_ricci(&metric, 0.0), &EllipticConfig::default()).unwrap();
    assert_eq!(r.residual, 0.0);
}

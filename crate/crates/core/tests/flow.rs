use crflow::calculus::integrate;
use crflow::flow::{
    crf_rhs, evolve_flow, solve_conjugate_heat, solve_forced_heat, solve_heat, FlowConfig, FlowHistory, HeatForcing,
    StepPolicy,
};
use crflow::{FdOrder, Grid, MetricField, MetricPreset, ScalarField};

fn flat_run(n: usize, t_final: f64) -> FlowHistory {
    let grid = Grid::new(n, FdOrder::Fourth).unwrap();
    let mut cfg = FlowConfig::new(t_final);
    cfg.policy = StepPolicy::fixed_cap(1e-3);
    evolve_flow(&MetricField::flat(grid), &cfg).unwrap()
}

fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}

#[test]
fn flat_right_hand_side() {
    let grid = Grid::new(8, FdOrder::Fourth).unwrap();
    let rhs = crf_rhs(&MetricField::flat(grid), &ScalarField::constant(grid, 2.0));
    for c in rhs.values() {
        assert_eq!(c.get(0, 0), -8.0);
        assert_eq!(c.get(1, 1), -8.0);
        assert_eq!(c.get(0, 1), 0.0);
    }
}

#[test]
fn flat_metric_shrinks_homothetically() {
    let hist = flat_run(16, 0.1);
    assert!((hist.t_final() - 0.1).abs() < 1e-14);
    for i in 0..hist.len() {
        let t = hist.time(i);
        let want = (-8.0 * t).exp();
        let g = hist.metric(i);
        for c in g.components() {
            assert!((c.get(0, 0) - want).abs() <= 1e-6 * want);
            assert!(c.get(0, 1).abs() <= 1e-15);
        }
        assert!(hist.pressure(i).values().iter().all(|p| (p - 2.0).abs() <= 1e-8));
        assert!((hist.p_bar(i) - 2.0).abs() <= 1e-8);
    }
}

#[test]
fn flat_conjugate_heat_keeps_dv_uniform() {
    let mut hist = flat_run(16, 0.05);
    let grid = *hist.grid();
    solve_conjugate_heat(&mut hist, &ScalarField::constant(grid, 5.0)).unwrap();
    let last = hist.len() - 1;
    let h_t = hist.h(last).unwrap().values()[0];
    let dv0 = hist.dv(last).unwrap().weights()[0];
    for i in 0..hist.len() {
        // dμ shrinks like e^{−12t}, so H grows like e^{12t}.
        let want = h_t * (12.0 * (hist.time(i) - hist.t_final())).exp();
        let h = hist.h(i).unwrap();
        assert!(h.values().iter().all(|v| (v - want).abs() <= 1e-8 * want));
        let dv = hist.dv(i).unwrap();
        assert!(dv.weights().iter().all(|w| (w - dv0).abs() <= 1e-8 * dv0));
    }
    assert!(hist.mass_drift().unwrap() <= 1e-12);
}

#[test]
fn bump_terminal_stays_positive_with_unit_mass() {
    let grid = Grid::new(16, FdOrder::Fourth).unwrap();
    let g0 = MetricPreset::RandomSmooth {
        seed: 4,
        amplitude: 0.2,
        max_mode: 1,
    }
    .build(grid)
    .unwrap();
    let mut cfg = FlowConfig::new(0.03);
    cfg.policy = StepPolicy::fixed_cap(1e-3);
    let mut hist = evolve_flow(&g0, &cfg).unwrap();
    let terminal = ScalarField::from_fn(grid, |x| 1.0 + 0.1 * x[0].sin());
    solve_conjugate_heat(&mut hist, &terminal).unwrap();
    for i in 0..hist.len() {
        assert!(hist.h(i).unwrap().min() > 0.0);
        let one = ScalarField::constant(grid, 1.0);
        assert!((integrate(&one, &hist.dv(i).unwrap()) - 1.0).abs() <= 1e-8);
    }
}

#[test]
fn heat_mode_closed_form() {
    let mut hist = flat_run(32, 0.1);
    let grid = *hist.grid();
    solve_heat(&mut hist, &ScalarField::from_fn(grid, |x| x[0].sin())).unwrap();
    let last = hist.len() - 1;
    let t = hist.time(last);
    let amp = (2.0 * t - ((8.0 * t).exp() - 1.0) / 8.0).exp();
    let want = grid.sample(|x| amp * x[0].sin());
    assert!(max_rel(hist.v(last).unwrap().values(), &want) <= 1e-3);
}

#[test]
fn constant_and_zero_initial_data() {
    let mut hist = flat_run(8, 0.05);
    let grid = *hist.grid();
    solve_heat(&mut hist, &ScalarField::constant(grid, 1.0)).unwrap();
    for i in 0..hist.len() {
        let want = (2.0 * hist.time(i)).exp();
        assert!(hist.v(i).unwrap().values().iter().all(|v| (v - want).abs() <= 1e-12 * want));
    }
    solve_heat(&mut hist, &ScalarField::zeros(grid)).unwrap();
    assert!((0..hist.len()).all(|i| hist.v(i).unwrap().max_abs() == 0.0));
}

#[test]
fn forcing_variants() {
    let mut hist = flat_run(16, 0.05);
    let grid = *hist.grid();
    let v0 = ScalarField::from_fn(grid, |x| x[0].sin() + 0.5 * x[1].cos());
    let last = hist.len() - 1;

    solve_heat(&mut hist, &v0).unwrap();
    let plain = hist.v(last).unwrap();
    solve_forced_heat(&mut hist, &v0, HeatForcing::new(1.0, 0.0).unwrap()).unwrap();
    assert_eq!(hist.v(last).unwrap(), plain);

    solve_forced_heat(&mut hist, &v0, HeatForcing::new(0.5, 0.3).unwrap()).unwrap();
    let cert = hist.heat.as_ref().unwrap().certificate.unwrap();
    assert!(cert.passed(), "{cert:?}");

    // No forcing: v_t = Δv with Δ = e^{8t} Δ_δ on the shrinking torus.
    let mode = ScalarField::from_fn(grid, |x| x[0].sin());
    solve_forced_heat(&mut hist, &mode, HeatForcing::new(0.0, 0.0).unwrap()).unwrap();
    let t = hist.time(last);
    let amp = (-((8.0 * t).exp() - 1.0) / 8.0).exp();
    assert!(max_rel(hist.v(last).unwrap().values(), &grid.sample(|x| amp * x[0].sin())) <= 1e-4);
}

#[test]
fn rejects_forcing_above_one() {
    assert!(HeatForcing::new(1.5, 0.0).is_err());
    assert!(HeatForcing::new(0.0, -1.1).is_err());
}

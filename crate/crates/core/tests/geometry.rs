use crflow::calculus::{
    drifting_laplacian, grad_norm_sq, hessian, integrate, laplace_beltrami, tensor_norm_sq, Measure,
};
use crflow::curvature::{bakry_emery, christoffel, ricci, scalar_curvature};
use crflow::metric::{metric_from_preset, MetricParams};
use crflow::operators::DivergenceOperator;
use crflow::{FdOrder, Grid, MetricField, MetricPreset, ScalarField, Sym3, SymTensorField};
use proptest::prelude::*;

fn grid(n: usize) -> Grid {
    Grid::new(n, FdOrder::Fourth).unwrap()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn diag_metric(grid: Grid, f: impl Fn([f64; 3]) -> [f64; 3]) -> MetricField {
    MetricField::new(SymTensorField::from_fn(grid, |x| {
        let [a, b, c] = f(x);
        Sym3::diag(a, b, c)
    }))
    .unwrap()
}

fn random_metric(grid: Grid, seed: u64) -> MetricField {
    MetricPreset::RandomSmooth {
        seed,
        amplitude: 0.2,
        max_mode: 1,
    }
    .build(grid)
    .unwrap()
}

#[test]
fn presets_evaluate_their_formulas() {
    let g = grid(32);
    let flat = metric_from_preset("flat", &MetricParams::default(), g).unwrap();
    assert!(flat.components().iter().all(|c| *c == Sym3::diag(1.0, 1.0, 1.0)));

    let params = MetricParams {
        amplitude: Some(0.1),
        mode: Some([1, 0, 0]),
        ..Default::default()
    };
    let conf = metric_from_preset("conformal", &params, g).unwrap();
    for (idx, c) in conf.components().iter().enumerate() {
        let e = (0.2 * g.position(idx)[0].sin()).exp();
        assert!((c.get(0, 0) - e).abs() <= 1e-14 * e);
        assert_eq!(c.get(0, 0), c.get(2, 2));
        assert_eq!(c.get(0, 1), 0.0);
    }
}

#[test]
fn indefinite_random_metric_is_rejected() {
    let params = MetricParams {
        seed: Some(7),
        amplitude: Some(0.5),
        ..Default::default()
    };
    let err = metric_from_preset("random-smooth", &params, grid(16)).unwrap_err();
    assert!(err.to_string().contains("eigenvalue"), "{err}");
    assert!(metric_from_preset("hyperbolic", &MetricParams::default(), grid(16)).is_err());
}

#[test]
fn christoffel_of_stretched_axis() {
    let a = 0.1;
    let mut errors = Vec::new();
    for n in [32, 64] {
        let g = grid(n);
        let metric = diag_metric(g, |x| [(2.0 * a * x[0].sin()).exp(), 1.0, 1.0]);
        let gamma = christoffel(&metric);
        let mut err = 0.0f64;
        for idx in 0..g.len() {
            let x = g.position(idx);
            err = err.max((gamma.get(idx, 0, 0, 0) - a * x[0].cos()).abs());
            for k in 0..3 {
                for i in 0..3 {
                    for j in 0..3 {
                        assert_eq!(gamma.get(idx, k, i, j), gamma.get(idx, k, j, i));
                    }
                }
            }
        }
        errors.push(err);
    }
    assert!(errors[0] < 2e-5, "{errors:?}");
    // Fourth order: halving the spacing divides the error by about 16.
    assert!(errors[0] / errors[1] > 12.0, "{errors:?}");
}

#[test]
fn flat_curvature_vanishes() {
    let metric = MetricField::flat(grid(16));
    assert!(christoffel(&metric).is_zero());
    assert!(ricci(&metric).max_abs() <= 1e-12);
    assert!(scalar_curvature(&metric).max_abs() <= 1e-12);
}

#[test]
fn gradient_norm_of_a_mode() {
    for (order, tol) in [(FdOrder::Fourth, 1e-4), (FdOrder::Second, 2e-2)] {
        let g = Grid::new(32, order).unwrap();
        let u = ScalarField::from_fn(g, |x| x[0].sin());
        let stretched = diag_metric(g, |_| [4.0, 1.0, 1.0]);
        let got = grad_norm_sq(&u, &stretched);
        let want = g.sample(|x| 0.25 * x[0].cos().powi(2));
        assert!(max_diff(got.values(), &want) < 0.25 * tol);
        let flat = grad_norm_sq(&u, &MetricField::flat(g));
        let want = g.sample(|x| x[0].cos().powi(2));
        assert!(max_diff(flat.values(), &want) < tol);
    }
    let c = ScalarField::constant(grid(16), 2.5);
    assert_eq!(grad_norm_sq(&c, &random_metric(grid(16), 1)).max_abs(), 0.0);
}

#[test]
fn hessian_of_a_mode() {
    let g = grid(32);
    let u = ScalarField::from_fn(g, |x| x[0].sin());
    let hess = hessian(&u, &MetricField::flat(g));
    let want = g.sample(|x| -x[0].sin());
    assert!(max_diff(&hess.component(0), &want) < 1e-4);
    for slot in 1..6 {
        assert!(hess.component(slot).iter().all(|v| v.abs() < 1e-12));
    }
    let c = ScalarField::constant(g, -1.0);
    assert_eq!(hessian(&c, &random_metric(g, 2)).max_abs(), 0.0);
}

#[test]
fn hessian_trace_agrees_with_divergence_form() {
    let mut diffs = Vec::new();
    for n in [32, 64] {
        let g = grid(n);
        let metric = MetricPreset::Conformal {
            amplitude: 0.1,
            mode: [1, 0, 0],
        }
        .build(g)
        .unwrap();
        let u = ScalarField::from_fn(g, |x| x[0].sin() + x[1].cos());
        let hess = hessian(&u, &metric);
        let trace: Vec<f64> = hess.values().iter().zip(metric.inverse()).map(|(h, gi)| h.dot(gi)).collect();
        diffs.push(max_diff(&trace, laplace_beltrami(&u, &metric).values()));
    }
    assert!(diffs[1] <= 1e-6, "{diffs:?}");
    assert!(diffs[0] / diffs[1] > 12.0, "{diffs:?}");
}

#[test]
fn second_order_laplacian_symbol_is_exact() {
    let g = Grid::new(16, FdOrder::Second).unwrap();
    let u = ScalarField::from_fn(g, |x| x[0].sin());
    let lap = laplace_beltrami(&u, &MetricField::flat(g));
    let s = g.spacing();
    let symbol = (2.0 - 2.0 * s.cos()) / (s * s);
    let want: Vec<f64> = u.values().iter().map(|v| -symbol * v).collect();
    assert!(max_diff(lap.values(), &want) <= 1e-13);
    let c = ScalarField::constant(g, 3.0);
    assert_eq!(laplace_beltrami(&c, &random_metric(g, 3)).max_abs(), 0.0);
}

#[test]
fn drifting_laplacian_closed_form() {
    let g = grid(32);
    let flat = MetricField::flat(g);
    let u = ScalarField::from_fn(g, |x| x[0].sin());
    let h = ScalarField::from_fn(g, |x| (-0.2 * x[0].sin()).exp());
    let got = drifting_laplacian(&u, &flat, &h).unwrap();
    let want = g.sample(|x| -x[0].sin() - 0.2 * x[0].cos().powi(2));
    assert!(max_diff(got.values(), &want) < 1e-4);

    let metric = random_metric(g, 4);
    let w = ScalarField::random_smooth(g, 5, 2);
    let uniform = ScalarField::constant(g, 0.7);
    let a = drifting_laplacian(&w, &metric, &uniform).unwrap();
    let b = laplace_beltrami(&w, &metric);
    assert!(max_diff(a.values(), b.values()) <= 1e-12 * b.max_abs());
}

#[test]
fn bakry_emery_tensor() {
    let g = grid(32);
    let metric = random_metric(g, 6);
    let uniform = ScalarField::constant(g, 2.0);
    assert_eq!(bakry_emery(&metric, &uniform).unwrap(), ricci(&metric));
    assert!(bakry_emery(&MetricField::flat(g), &uniform).unwrap().max_abs() == 0.0);

    let h = ScalarField::from_fn(g, |x| (-0.2 * x[0].sin()).exp());
    let ric_f = bakry_emery(&MetricField::flat(g), &h).unwrap();
    let want = g.sample(|x| -0.2 * x[0].sin());
    assert!(max_diff(&ric_f.component(0), &want) < 1e-4);
}

#[test]
fn norm_of_scaled_metric_is_twelve() {
    let g = grid(16);
    let metric = random_metric(g, 8);
    let t = SymTensorField::new(g, metric.components().iter().map(|c| *c * 2.0).collect()).unwrap();
    let norm = tensor_norm_sq(&t, &metric);
    assert!(norm.values().iter().all(|v| (v - 12.0).abs() <= 1e-12));
}

#[test]
fn quadrature() {
    let g = grid(16);
    let metric = random_metric(g, 9);
    let dv = Measure::riemannian(&metric).normalized();
    assert!((integrate(&ScalarField::constant(g, 1.0), &dv) - 1.0).abs() <= 1e-14);
    let s = ScalarField::from_fn(g, |x| x[0].sin().powi(2));
    assert!((integrate(&s, &Measure::uniform(&g)) - 0.5).abs() <= 1e-14);
}

fn spd() -> impl Strategy<Value = Sym3> {
    (prop::array::uniform6(-1.0f64..1.0), 0.1f64..2.0).prop_map(|(a, shift)| {
        // A Aᵀ + shift·I is positive definite.
        let m = [[a[0], a[1], a[2]], [a[3], a[4], a[5]], [a[1], a[5], a[0]]];
        Sym3::from_fn(|i, j| (0..3).map(|k| m[i][k] * m[j][k]).sum::<f64>() + if i == j { shift } else { 0.0 })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sym3_inverse_round_trips(s in spd()) {
        let inv = s.inverse().unwrap();
        let (a, b) = (s.to_matrix(), inv.to_matrix());
        for i in 0..3 {
            for j in 0..3 {
                let p: f64 = (0..3).map(|k| a[i][k] * b[k][j]).sum();
                let identity = if i == j { 1.0 } else { 0.0 };
                prop_assert!((p - identity).abs() < 1e-9, "entry ({}, {}) = {}", i, j, p);
            }
        }
        let ev = s.eigenvalues();
        prop_assert!(ev[0] > 0.0);
        prop_assert!((ev.iter().sum::<f64>() - s.trace()).abs() < 1e-10 * s.max_abs().max(1.0));
    }

    #[test]
    fn flux_operator_is_symmetric(seed in 0u64..1000, coeff in spd()) {
        let g = Grid::new(8, FdOrder::Fourth).unwrap();
        let r = ScalarField::random_smooth(g, seed, 2);
        let c: Vec<Sym3> = r.values().iter().map(|v| coeff * (1.0 + 0.3 * v)).collect();
        let op = DivergenceOperator::new(g, &c, vec![1.0; g.len()]);
        let u = ScalarField::random_smooth(g, seed + 1, 3);
        let w = ScalarField::random_smooth(g, seed + 2, 3);
        let a: f64 = op.apply_flux(u.values()).iter().zip(w.values()).map(|(x, y)| x * y).sum();
        let b: f64 = op.apply_flux(w.values()).iter().zip(u.values()).map(|(x, y)| x * y).sum();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0));
    }
}

//! One-dimensional helpers for time series sampled at (possibly nonuniform)
//! step times.

use alloc::vec;
use alloc::vec::Vec;

/// Cumulative trapezoid integral `∫_{t[0]}^{t[i]} f`.
pub fn cumulative_trapezoid(t: &[f64], f: &[f64]) -> Vec<f64> {
    debug_assert_eq!(t.len(), f.len());
    let mut out = vec![0.0; t.len()];
    for i in 1..t.len() {
        out[i] = out[i - 1] + 0.5 * (t[i] - t[i - 1]) * (f[i] + f[i - 1]);
    }
    out
}

/// Trapezoid integral over the whole series.
pub fn trapezoid(t: &[f64], f: &[f64]) -> f64 {
    cumulative_trapezoid(t, f).last().copied().unwrap_or(0.0)
}

/// Weights `w_j = L_j(x)` of the Lagrange interpolant through `nodes`.
pub(crate) fn lagrange_weights(nodes: &[f64], x: f64) -> Vec<f64> {
    (0..nodes.len())
        .map(|j| {
            let mut w = 1.0;
            for (k, &xk) in nodes.iter().enumerate() {
                if k != j {
                    w *= (x - xk) / (nodes[j] - xk);
                }
            }
            w
        })
        .collect()
}

/// Weights `w_j = L_j'(x_at)` of the Lagrange interpolant through `nodes`.
pub(crate) fn lagrange_derivative_weights(nodes: &[f64], at: usize) -> Vec<f64> {
    let x = nodes[at];
    let n = nodes.len();
    let mut w = vec![0.0; n];
    for j in 0..n {
        if j == at {
            w[j] = (0..n).filter(|&k| k != at).map(|k| 1.0 / (x - nodes[k])).sum();
        } else {
            let mut num = 1.0;
            let mut den = 1.0;
            for k in 0..n {
                if k != j {
                    den *= nodes[j] - nodes[k];
                    if k != at {
                        num *= x - nodes[k];
                    }
                }
            }
            w[j] = num / den;
        }
    }
    w
}

/// Derivative of a sampled series by local Lagrange interpolation: five
/// points (fourth order) centered where possible, shifted inward at the ends.
pub fn derivative(t: &[f64], y: &[f64]) -> Vec<f64> {
    debug_assert_eq!(t.len(), y.len());
    let n = t.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let width = n.min(5);
    (0..n)
        .map(|i| {
            let start = i.saturating_sub(width / 2).min(n - width);
            let nodes = &t[start..start + width];
            let w = lagrange_derivative_weights(nodes, i - start);
            w.iter().zip(&y[start..start + width]).map(|(a, b)| a * b).sum()
        })
        .collect()
}

/// Centered-only variant: entries whose five-point window would be one-sided
/// are `None`.
pub fn interior_derivative(t: &[f64], y: &[f64]) -> Vec<Option<f64>> {
    let d = derivative(t, y);
    let n = t.len();
    d.into_iter()
        .enumerate()
        .map(|(i, v)| (i >= 2 && i + 2 < n).then_some(v))
        .collect()
}

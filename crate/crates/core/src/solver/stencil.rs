//! Finite-difference stencils shared by the solver, the hypothesis checks
//! and the diagnostics, so that every consumer sees the same discrete
//! derivative.

/// First derivative: second-order central differences in the interior and
/// second-order one-sided differences at the two end nodes.
pub fn gradient(values: &[f64], dx: f64) -> Vec<f64> {
    let mut out = vec![0.0; values.len()];
    gradient_into(values, dx, &mut out);
    out
}

pub fn gradient_into(values: &[f64], dx: f64, out: &mut [f64]) {
    let n = values.len();
    assert!(n >= 3, "gradient needs at least three nodes");
    assert_eq!(out.len(), n);
    let inv2 = 0.5 / dx;
    for i in 1..n - 1 {
        out[i] = (values[i + 1] - values[i - 1]) * inv2;
    }
    out[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) * inv2;
    out[n - 1] = (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) * inv2;
}

/// Three-point second derivative on interior nodes; the end nodes are 0.
pub fn laplacian(values: &[f64], dx: f64) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; n];
    let inv = 1.0 / (dx * dx);
    for i in 1..n.saturating_sub(1) {
        out[i] = (values[i + 1] - 2.0 * values[i] + values[i - 1]) * inv;
    }
    out
}

/// Trapezoid-rule integral of nodal values with spacing `dx`.
pub fn trapezoid(values: &[f64], dx: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => {
            let inner: f64 = values[1..n - 1].iter().sum();
            dx * (inner + 0.5 * (values[0] + values[n - 1]))
        }
    }
}

//! Central-difference utilities used by the layer tests: every
//! differentiable operation is validated in f64 against a numerical
//! gradient before it is trusted in training.

/// Central-difference gradient of a scalar function at `x0`.
pub fn numerical_grad(mut f: impl FnMut(&[f64]) -> f64, x0: &[f64], eps: f64) -> Vec<f64> {
    let mut g = vec![0.0; x0.len()];
    let mut buf = x0.to_vec();
    for i in 0..x0.len() {
        buf[i] = x0[i] + eps;
        let fp = f(&buf);
        buf[i] = x0[i] - eps;
        let fm = f(&buf);
        buf[i] = x0[i];
        g[i] = (fp - fm) / (2.0 * eps);
    }
    g
}

/// Worst relative disagreement, guarded against tiny denominators.
pub fn max_rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| (a - n).abs() / (a.abs() + n.abs()).max(1e-8))
        .fold(0.0, f64::max)
}

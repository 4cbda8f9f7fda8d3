//! Butterworth low-pass design and causal biquad-cascade filtering.
//!
//! The analog prototype of order 2m has pole pairs with damping
//! `zeta_k = sin((2k+1) pi / (4m))`; each pair maps to a digital biquad by
//! the bilinear transform with the cutoff prewarped as
//! `w_c = 2 fs tan(pi f_c / fs)`, so the -3.01 dB point lands exactly on
//! the requested cutoff. Filtering runs forward only (causal, zero initial
//! state), like a receiver front end.

use num_complex::Complex64;

/// One normalized digital biquad: b = [b0, b1, b2], a = [1, a1, a2].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

/// Even-order Butterworth low-pass as a cascade of biquads, sorted by
/// ascending a2 (least-damped section last is the scipy convention once
/// rows are sorted the same way).
pub fn butterworth_lowpass(order: usize, cutoff_hz: f64, fs_hz: f64) -> Vec<Biquad> {
    assert!(order >= 2 && order % 2 == 0, "even order required");
    assert!(cutoff_hz > 0.0 && cutoff_hz < fs_hz / 2.0);
    let m = order / 2;
    let k = 2.0 * fs_hz;
    let w = k * (std::f64::consts::PI * cutoff_hz / fs_hz).tan();
    let mut sections: Vec<Biquad> = (0..m)
        .map(|i| {
            let zeta = ((2 * i + 1) as f64 * std::f64::consts::PI / (4.0 * m as f64)).sin();
            let a0 = k * k + 2.0 * zeta * w * k + w * w;
            Biquad {
                b: [w * w / a0, 2.0 * w * w / a0, w * w / a0],
                a: [(2.0 * w * w - 2.0 * k * k) / a0, (k * k - 2.0 * zeta * w * k + w * w) / a0],
            }
        })
        .collect();
    sections.sort_by(|x, y| x.a[1].total_cmp(&y.a[1]));
    sections
}

/// Causal cascade filtering with zero initial state (direct form II
/// transposed per section). Real coefficients act on I and Q alike.
pub fn sosfilt(sections: &[Biquad], x: &[Complex64]) -> Vec<Complex64> {
    let mut y: Vec<Complex64> = x.to_vec();
    for s in sections {
        let mut z1 = Complex64::new(0.0, 0.0);
        let mut z2 = Complex64::new(0.0, 0.0);
        for v in y.iter_mut() {
            let xin = *v;
            let out = xin * s.b[0] + z1;
            z1 = xin * s.b[1] - out * s.a[0] + z2;
            z2 = xin * s.b[2] - out * s.a[1];
            *v = out;
        }
    }
    y
}

/// Cascade magnitude response at a frequency, the analytic oracle used by
/// the tests.
pub fn cascade_magnitude(sections: &[Biquad], f_hz: f64, fs_hz: f64) -> f64 {
    let w = std::f64::consts::TAU * f_hz / fs_hz;
    let z1 = Complex64::from_polar(1.0, -w);
    let z2 = Complex64::from_polar(1.0, -2.0 * w);
    sections
        .iter()
        .map(|s| {
            let num = Complex64::new(s.b[0], 0.0) + z1 * s.b[1] + z2 * s.b[2];
            let den = Complex64::new(1.0, 0.0) + z1 * s.a[0] + z2 * s.a[1];
            (num / den).norm()
        })
        .product()
}

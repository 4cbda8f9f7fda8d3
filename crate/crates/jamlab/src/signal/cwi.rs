//! Continuous-wave interference: one or more pure tones at seed-drawn
//! frequencies and phases.

use super::{normalize_unit_power, ComplexSignal, CENTER_OFFSET_HZ, SAMPLE_RATE_HZ, SNAPSHOT_LEN};
use crate::prng::{Domain, Stream};
use num_complex::Complex64;

/// Unit-power tone sum. A single tone is exactly unit-modulus; multi-tone
/// sums are normalized empirically.
pub fn synth_cwi(n_tones: usize, seed: u64) -> ComplexSignal {
    assert!(n_tones >= 1);
    let mut phases = Stream::new(seed, Domain::Phases);
    let draws: Vec<(f64, f64)> = (0..n_tones)
        .map(|_| {
            let f = phases.uniform_in(-CENTER_OFFSET_HZ, CENTER_OFFSET_HZ);
            let phi = phases.uniform_in(0.0, std::f64::consts::TAU);
            (std::f64::consts::TAU * f / SAMPLE_RATE_HZ, phi)
        })
        .collect();

    let mut samples: Vec<Complex64> = (0..SNAPSHOT_LEN)
        .map(|n| {
            draws
                .iter()
                .map(|&(w, phi)| Complex64::from_polar(1.0, phi + w * n as f64))
                .sum()
        })
        .collect();
    if n_tones > 1 {
        normalize_unit_power(&mut samples);
    }
    ComplexSignal::new(samples).expect("finite by construction")
}

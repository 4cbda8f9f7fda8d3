//! Band-limited Gaussian noise interference: complex white Gaussian noise
//! through an 8th-order Butterworth low-pass of cutoff B/2 at complex
//! baseband, shifted to a seed-drawn center frequency.

use super::filter::{butterworth_lowpass, sosfilt};
use super::{normalize_unit_power, ComplexSignal, CENTER_OFFSET_HZ, SAMPLE_RATE_HZ, SNAPSHOT_LEN};
use crate::prng::{Domain, Stream};
use num_complex::Complex64;

/// Filter order fixed by the class definition.
pub const BUTTERWORTH_ORDER: usize = 8;

/// Unit-power noise-like jammer of two-sided bandwidth `bandwidth_hz`.
/// The white innovation comes from the `Symbols` stream (it is the
/// jammer's information content), the center frequency from `Phases`.
pub fn synth_blgni(bandwidth_hz: f64, seed: u64) -> ComplexSignal {
    let mut symbols = Stream::new(seed, Domain::Symbols);
    let mut phases = Stream::new(seed, Domain::Phases);
    let f_c = phases.uniform_in(-CENTER_OFFSET_HZ, CENTER_OFFSET_HZ);

    let white: Vec<Complex64> = (0..SNAPSHOT_LEN).map(|_| symbols.standard_complex()).collect();
    let sos = butterworth_lowpass(BUTTERWORTH_ORDER, bandwidth_hz / 2.0, SAMPLE_RATE_HZ);
    let mut samples = sosfilt(&sos, &white);

    let w = std::f64::consts::TAU * f_c / SAMPLE_RATE_HZ;
    for (n, z) in samples.iter_mut().enumerate() {
        *z *= Complex64::from_polar(1.0, w * n as f64);
    }
    normalize_unit_power(&mut samples);
    ComplexSignal::new(samples).expect("finite by construction")
}

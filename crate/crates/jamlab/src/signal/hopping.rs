//! Frequency-hopping interference: a tone that dwells on one of
//! `n_channels` equispaced frequencies inside a 6 MHz band, hopping every
//! 5 us (20 dwell segments of 200 samples per snapshot).

use super::{ComplexSignal, CENTER_OFFSET_HZ, SAMPLE_RATE_HZ, SNAPSHOT_LEN};
use crate::prng::{Domain, Stream};
use num_complex::Complex64;

/// Unit-modulus hopping jammer. Channel picks come from the `Symbols`
/// stream, the band center and per-hop phases from `Phases`.
pub fn synth_freq_hopping(
    bandwidth_hz: f64,
    dwell_s: f64,
    n_channels: usize,
    seed: u64,
) -> ComplexSignal {
    let dwell_n = (dwell_s * SAMPLE_RATE_HZ).round() as usize;
    assert!(dwell_n > 0 && SNAPSHOT_LEN % dwell_n == 0, "dwell must divide the snapshot");
    assert!(n_channels >= 1);
    let n_hops = SNAPSHOT_LEN / dwell_n;

    let mut symbols = Stream::new(seed, Domain::Symbols);
    let mut phases = Stream::new(seed, Domain::Phases);
    let center = phases.uniform_in(-CENTER_OFFSET_HZ, CENTER_OFFSET_HZ);

    // Channel k sits at the center of its slice of the band.
    let spacing = bandwidth_hz / n_channels as f64;
    let f_of = |ch: usize| center - bandwidth_hz / 2.0 + (ch as f64 + 0.5) * spacing;

    let mut samples = Vec::with_capacity(SNAPSHOT_LEN);
    for _ in 0..n_hops {
        let ch = symbols.index(n_channels);
        let phi = phases.uniform_in(0.0, std::f64::consts::TAU);
        let w = std::f64::consts::TAU * f_of(ch) / SAMPLE_RATE_HZ;
        for m in 0..dwell_n {
            samples.push(Complex64::from_polar(1.0, phi + w * m as f64));
        }
    }
    ComplexSignal::new(samples).expect("finite by construction")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twenty_segments_of_200_samples() {
        let s = synth_freq_hopping(6.0e6, 5.0e-6, 16, 1);
        assert_eq!(s.samples.len(), SNAPSHOT_LEN);
        // Constant frequency within each 200-sample dwell: the sample-to-
        // sample rotation is constant within a segment.
        for hop in 0..20 {
            let seg = &s.samples[hop * 200..(hop + 1) * 200];
            let rot0 = seg[1] * seg[0].conj();
            for w in seg.windows(2).skip(1) {
                let rot = w[1] * w[0].conj();
                assert!((rot - rot0).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn per_segment_dominant_bin_matches_drawn_channel() {
        // FFT oracle: each dwell's peak bin must be the nearest bin to the
        // channel frequency that the Symbols stream drew.
        let seed = 77;
        let s = synth_freq_hopping(6.0e6, 5.0e-6, 16, seed);
        let mut symbols = Stream::new(seed, Domain::Symbols);
        let mut phases = Stream::new(seed, Domain::Phases);
        let center = phases.uniform_in(-CENTER_OFFSET_HZ, CENTER_OFFSET_HZ);
        for hop in 0..20 {
            let ch = symbols.index(16);
            let f = center - 3.0e6 + (ch as f64 + 0.5) * 375.0e3;
            let seg = &s.samples[hop * 200..(hop + 1) * 200];
            // Direct DFT over 200 points.
            let mut best = (0usize, 0.0f64);
            for k in 0..200 {
                let mut acc = Complex64::new(0.0, 0.0);
                for (m, z) in seg.iter().enumerate() {
                    let w = -std::f64::consts::TAU * k as f64 * m as f64 / 200.0;
                    acc += z * Complex64::from_polar(1.0, w);
                }
                let p = acc.norm_sqr();
                if p > best.1 {
                    best = (k, p);
                }
            }
            // Bin spacing is fs/200 = 200 kHz; map to signed frequency.
            let kf = if best.0 <= 100 { best.0 as f64 } else { best.0 as f64 - 200.0 };
            let f_est = kf * SAMPLE_RATE_HZ / 200.0;
            assert!((f_est - f).abs() <= SAMPLE_RATE_HZ / 200.0, "hop {hop}: {f_est} vs {f}");
        }
    }

    #[test]
    fn single_channel_is_tonal() {
        let s = synth_freq_hopping(6.0e6, 5.0e-6, 1, 3);
        // One channel: every dwell sits on the same frequency, so the
        // rotation per sample is globally constant.
        let rot0 = s.samples[1] * s.samples[0].conj();
        for hop in 0..20 {
            let seg = &s.samples[hop * 200..(hop + 1) * 200];
            let rot = seg[1] * seg[0].conj();
            assert!((rot - rot0).norm() < 1e-9);
        }
    }

    #[test]
    fn unit_modulus_and_determinism() {
        let a = synth_freq_hopping(6.0e6, 5.0e-6, 16, 11);
        for z in &a.samples {
            assert!((z.norm() - 1.0).abs() < 1e-9);
        }
        let b = synth_freq_hopping(6.0e6, 5.0e-6, 16, 11);
        assert_eq!(a.samples, b.samples);
    }
}

//! Swept-frequency interference: linear chirps (wrapped and sawtooth),
//! the sinusoidally modulated chirp, and the piecewise families (hooked
//! sawtooth, triangular, triangular wave, tick).
//!
//! All of these are unit-modulus phase signals: the instantaneous
//! frequency profile f[n] is integrated sample by sample,
//! `theta[n+1] = theta[n] + 2 pi f[n] / fs`, and the waveform is
//! `exp(j theta)`. Each class draws a band-center offset uniform within
//! +-2 MHz and a starting phase.

use super::{ComplexSignal, CENTER_OFFSET_HZ, SAMPLE_RATE_HZ, SNAPSHOT_LEN};
use crate::prng::{Domain, Stream};
use crate::{Error, Result};
use num_complex::Complex64;

/// Snapshot duration in seconds.
const T_SNAP: f64 = SNAPSHOT_LEN as f64 / SAMPLE_RATE_HZ;

/// Phase behavior of a repeating linear sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChirpShape {
    /// Frequency wraps at the period boundary, phase stays continuous.
    LinearWrap,
    /// Phase also snaps back to the starting phase at each period
    /// boundary, giving the harmonic-rich sawtooth signature.
    Sawtooth,
}

/// Piecewise-frequency class selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PiecewiseKind {
    /// Asymmetric two-slope sawtooth spanning about 8 MHz.
    Hook,
    /// One symmetric up/down ramp across the whole snapshot.
    Triangular,
    /// Repeated symmetric ramps, 16 MHz at 10 periods per snapshot.
    TriangularWave,
    /// Constant-frequency dwells joined by steep linear transitions.
    Tick,
}

fn integrate_phase(freqs: impl Iterator<Item = f64>, phi0: f64) -> Vec<Complex64> {
    let mut theta = phi0;
    let step = std::f64::consts::TAU / SAMPLE_RATE_HZ;
    freqs
        .map(|f| {
            let z = Complex64::from_polar(1.0, theta);
            theta += f * step;
            z
        })
        .collect()
}

/// Repeating linear sweep covering `bandwidth_hz`, `sweeps` times per
/// snapshot. Rejects bands that do not fit below Nyquist.
pub fn synth_lfm(bandwidth_hz: f64, sweeps: u32, shape: ChirpShape, seed: u64) -> Result<ComplexSignal> {
    if bandwidth_hz / 2.0 + CENTER_OFFSET_HZ > SAMPLE_RATE_HZ / 2.0 {
        return Err(Error::Signal(format!(
            "sweep bandwidth {bandwidth_hz} Hz exceeds Nyquist headroom"
        )));
    }
    if sweeps == 0 {
        return Err(Error::Signal("sweep count must be positive".into()));
    }
    let mut phases = Stream::new(seed, Domain::Phases);
    let center = phases.uniform_in(-CENTER_OFFSET_HZ, CENTER_OFFSET_HZ);
    let phi0 = phases.uniform_in(0.0, std::f64::consts::TAU);
    let f_start = center - bandwidth_hz / 2.0;
    let period = SNAPSHOT_LEN as f64 / sweeps as f64;

    let samples = match shape {
        ChirpShape::LinearWrap => integrate_phase(
            (0..SNAPSHOT_LEN).map(|n| {
                let u = (n as f64 / period).fract();
                f_start + bandwidth_hz * u
            }),
            phi0,
        ),
        ChirpShape::Sawtooth => {
            // Phase restarts each period: generate per period.
            let step = std::f64::consts::TAU / SAMPLE_RATE_HZ;
            let mut out = Vec::with_capacity(SNAPSHOT_LEN);
            let mut theta = phi0;
            let mut k_period = 0u32;
            for n in 0..SNAPSHOT_LEN {
                let p = (n as f64 / period) as u32;
                if p != k_period {
                    k_period = p;
                    theta = phi0;
                }
                out.push(Complex64::from_polar(1.0, theta));
                let u = (n as f64 / period).fract();
                theta += (f_start + bandwidth_hz * u) * step;
            }
            out
        }
    };
    ComplexSignal::new(samples)
}

/// Sinusoidal frequency modulation: phase
/// `2 pi f_c t + (B / (2 f_m)) sin(2 pi f_m t)` with `f_m` set so the
/// modulation completes `cycles` per snapshot; the peak-to-peak
/// instantaneous-frequency excursion is exactly `bandwidth_hz`.
pub fn synth_sin_chirp(bandwidth_hz: f64, cycles: u32, seed: u64) -> ComplexSignal {
    let mut phases = Stream::new(seed, Domain::Phases);
    let f_c = phases.uniform_in(-CENTER_OFFSET_HZ, CENTER_OFFSET_HZ);
    let phi0 = phases.uniform_in(0.0, std::f64::consts::TAU);
    let f_m = cycles as f64 / T_SNAP;
    let beta = bandwidth_hz / (2.0 * f_m);
    let samples = (0..SNAPSHOT_LEN)
        .map(|n| {
            let t = n as f64 / SAMPLE_RATE_HZ;
            let theta = phi0
                + std::f64::consts::TAU * f_c * t
                + beta * (std::f64::consts::TAU * f_m * t).sin();
            Complex64::from_polar(1.0, theta)
        })
        .collect();
    ComplexSignal::new(samples).expect("finite by construction")
}

/// Hook parameters: 8 MHz total span, 5 periods per snapshot, the first
/// 30% of each period sweeping 6 MHz and the rest the remaining 2 MHz.
const HOOK_SPAN_HZ: f64 = 8.0e6;
const HOOK_PERIODS: f64 = 5.0;
const HOOK_KNEE: f64 = 0.30;
const HOOK_FAST_FRACTION: f64 = 0.75;

/// Tick parameters: 10 us dwells joined by 2 us linear transitions, dwell
/// frequencies drawn within a +-4 MHz band around the center offset.
const TICK_DWELL_S: f64 = 10.0e-6;
const TICK_TRANSITION_S: f64 = 2.0e-6;
const TICK_HALF_BAND_HZ: f64 = 4.0e6;

/// Piecewise instantaneous-frequency families; see [`PiecewiseKind`].
pub fn synth_piecewise_chirp(kind: PiecewiseKind, seed: u64) -> ComplexSignal {
    let mut phases = Stream::new(seed, Domain::Phases);
    let center = phases.uniform_in(-CENTER_OFFSET_HZ, CENTER_OFFSET_HZ);
    let phi0 = phases.uniform_in(0.0, std::f64::consts::TAU);

    let samples = match kind {
        PiecewiseKind::Triangular => {
            triangular_freqs(center, 16.0e6, SNAPSHOT_LEN as f64, phi0)
        }
        PiecewiseKind::TriangularWave => {
            triangular_freqs(center, 16.0e6, SNAPSHOT_LEN as f64 / 10.0, phi0)
        }
        PiecewiseKind::Hook => {
            let period = SNAPSHOT_LEN as f64 / HOOK_PERIODS;
            let f_lo = center - HOOK_SPAN_HZ / 2.0;
            let fast_span = HOOK_SPAN_HZ * HOOK_FAST_FRACTION;
            integrate_phase(
                (0..SNAPSHOT_LEN).map(|n| {
                    let u = (n as f64 / period).fract();
                    if u < HOOK_KNEE {
                        f_lo + fast_span * (u / HOOK_KNEE)
                    } else {
                        f_lo + fast_span
                            + (HOOK_SPAN_HZ - fast_span) * ((u - HOOK_KNEE) / (1.0 - HOOK_KNEE))
                    }
                }),
                phi0,
            )
        }
        PiecewiseKind::Tick => {
            let dwell_n = (TICK_DWELL_S * SAMPLE_RATE_HZ) as usize;
            let trans_n = (TICK_TRANSITION_S * SAMPLE_RATE_HZ) as usize;
            let period_n = dwell_n + trans_n;
            let n_dwells = SNAPSHOT_LEN / period_n + 2;
            let dwell_freqs: Vec<f64> = (0..n_dwells)
                .map(|_| center + phases.uniform_in(-TICK_HALF_BAND_HZ, TICK_HALF_BAND_HZ))
                .collect();
            integrate_phase(
                (0..SNAPSHOT_LEN).map(|n| {
                    let seg = n / period_n;
                    let off = n % period_n;
                    if off < dwell_n {
                        dwell_freqs[seg]
                    } else {
                        // Linear transition toward the next dwell.
                        let u = (off - dwell_n) as f64 / trans_n as f64;
                        dwell_freqs[seg] + (dwell_freqs[seg + 1] - dwell_freqs[seg]) * u
                    }
                }),
                phi0,
            )
        }
    };
    ComplexSignal::new(samples).expect("finite by construction")
}

fn triangular_freqs(center: f64, bandwidth_hz: f64, period: f64, phi0: f64) -> Vec<Complex64> {
    let f_lo = center - bandwidth_hz / 2.0;
    integrate_phase(
        (0..SNAPSHOT_LEN).map(|n| {
            let u = (n as f64 / period).fract();
            let ramp = if u < 0.5 { 2.0 * u } else { 2.0 * (1.0 - u) };
            f_lo + bandwidth_hz * ramp
        }),
        phi0,
    )
}

/// Instantaneous frequency (Hz) from unwrapped phase differences, the
/// oracle used by the sweep tests.
#[cfg(test)]
pub(crate) fn instantaneous_freq(x: &ComplexSignal) -> Vec<f64> {
    x.samples
        .windows(2)
        .map(|w| (w[1] * w[0].conj()).arg() * SAMPLE_RATE_HZ / std::f64::consts::TAU)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_chirps_unit_modulus() {
        let sigs = vec![
            synth_lfm(16.0e6, 10, ChirpShape::LinearWrap, 5).unwrap(),
            synth_lfm(12.0e6, 11, ChirpShape::Sawtooth, 5).unwrap(),
            synth_sin_chirp(10.0e6, 5, 5),
            synth_piecewise_chirp(PiecewiseKind::Hook, 5),
            synth_piecewise_chirp(PiecewiseKind::Triangular, 5),
            synth_piecewise_chirp(PiecewiseKind::TriangularWave, 5),
            synth_piecewise_chirp(PiecewiseKind::Tick, 5),
        ];
        for s in sigs {
            for z in &s.samples {
                assert!((z.norm() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn lfm_zero_bandwidth_is_a_tone() {
        let s = synth_lfm(0.0, 1, ChirpShape::LinearWrap, 9).unwrap();
        let f = instantaneous_freq(&s);
        let f0 = f[0];
        for &fi in &f {
            assert!((fi - f0).abs() < 1.0, "tone frequency drifted: {fi} vs {f0}");
        }
    }

    #[test]
    fn lfm_slope_matches_sweep_rate() {
        // One sweep of 16 MHz in 100 us: slope 1.6e11 Hz/s within 1%.
        let s = synth_lfm(16.0e6, 1, ChirpShape::LinearWrap, 3).unwrap();
        let f = instantaneous_freq(&s);
        // Regress over the middle of the single sweep to avoid edges.
        let a = f[200];
        let b = f[3799];
        let slope = (b - a) / ((3799 - 200) as f64 / SAMPLE_RATE_HZ);
        let expect = 16.0e6 / 1.0e-4;
        assert!((slope - expect).abs() / expect < 0.01, "slope {slope}");
    }

    #[test]
    fn lfm_rejects_nyquist_violation() {
        assert!(synth_lfm(37.0e6, 2, ChirpShape::LinearWrap, 0).is_err());
    }

    #[test]
    fn lfm_wraps_expected_times() {
        let s = synth_lfm(16.0e6, 10, ChirpShape::LinearWrap, 11).unwrap();
        let f = instantaneous_freq(&s);
        // Count large downward frequency jumps, one per wrap.
        let wraps = f.windows(2).filter(|w| w[1] - w[0] < -8.0e6).count();
        assert_eq!(wraps, 9, "10 sweeps have 9 interior wraps");
    }

    #[test]
    fn sin_chirp_excursion_matches_bandwidth() {
        let s = synth_sin_chirp(10.0e6, 5, 21);
        let f = instantaneous_freq(&s);
        let fmax = f.iter().cloned().fold(f64::MIN, f64::max);
        let fmin = f.iter().cloned().fold(f64::MAX, f64::min);
        let excursion = fmax - fmin;
        assert!((excursion - 10.0e6).abs() / 10.0e6 < 0.02, "excursion {excursion}");
    }

    #[test]
    fn triangular_frequency_is_palindromic() {
        let s = synth_piecewise_chirp(PiecewiseKind::Triangular, 33);
        let f = instantaneous_freq(&s);
        // Up-ramp mirrors down-ramp around the apex at the middle.
        let m = f.len();
        for k in 0..m / 2 - 40 {
            let a = f[k];
            let b = f[m - 1 - k];
            assert!((a - b).abs() < 40.0e3, "sample {k}: {a} vs {b}");
        }
    }

    #[test]
    fn tick_dwells_are_flat() {
        let s = synth_piecewise_chirp(PiecewiseKind::Tick, 17);
        let f = instantaneous_freq(&s);
        // First dwell: 400 samples of constant frequency.
        let d0 = &f[5..395];
        let mean = d0.iter().sum::<f64>() / d0.len() as f64;
        for &v in d0 {
            assert!((v - mean).abs() < 1.0e3);
        }
        // Transition reaches the second dwell value.
        let d1 = &f[485..875];
        let mean1 = d1.iter().sum::<f64>() / d1.len() as f64;
        assert!((mean1 - mean).abs() > 1.0, "seed should give distinct dwells");
    }

    #[test]
    fn sawtooth_phase_resets_linear_wrap_does_not() {
        // With phase reset, the waveform value at each period start equals
        // the value at t = 0.
        let saw = synth_lfm(12.0e6, 11, ChirpShape::Sawtooth, 2).unwrap();
        let period = SNAPSHOT_LEN as f64 / 11.0;
        for p in 1..11 {
            let n = (p as f64 * period).ceil() as usize;
            let z0 = saw.samples[0];
            let zp = saw.samples[n];
            // Same phase up to one sample of frequency advance.
            assert!((zp - z0).norm() < 0.3, "period {p} phase not reset");
        }
    }

    #[test]
    fn determinism() {
        let a = synth_piecewise_chirp(PiecewiseKind::Tick, 123);
        let b = synth_piecewise_chirp(PiecewiseKind::Tick, 123);
        assert_eq!(a.samples, b.samples);
    }
}

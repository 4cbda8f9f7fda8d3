//! Simplified GPS L1 C/A satellite signal: one PRN-1 Gold-code BPSK
//! spreading sequence at 1.023 Mchip/s with a seed-drawn code phase,
//! Doppler within +-5 kHz, and carrier phase, at unit (reference) power.

use super::{ComplexSignal, SAMPLE_RATE_HZ, SNAPSHOT_LEN};
use crate::prng::{Domain, Stream};
use num_complex::Complex64;

/// C/A chip rate.
pub const CHIP_RATE_HZ: f64 = 1.023e6;
/// Code length in chips.
pub const CODE_LEN: usize = 1023;
/// Doppler draw half-range.
pub const DOPPLER_HZ: f64 = 5.0e3;

/// Full C/A Gold code for PRN 1 as +-1 chips.
///
/// G1: x^10 + x^3 + 1, G2: x^10 + x^9 + x^8 + x^6 + x^3 + x^2 + 1, both
/// seeded all-ones; PRN 1 combines G1 output with G2 taps (2, 6).
pub fn ca_code() -> [i8; CODE_LEN] {
    let mut g1 = [1u8; 10];
    let mut g2 = [1u8; 10];
    let mut code = [0i8; CODE_LEN];
    for chip in code.iter_mut() {
        let out = g1[9] ^ (g2[1] ^ g2[5]);
        *chip = 1 - 2 * out as i8;
        let f1 = g1[2] ^ g1[9];
        let f2 = g2[1] ^ g2[2] ^ g2[5] ^ g2[7] ^ g2[8] ^ g2[9];
        g1.rotate_right(1);
        g1[0] = f1;
        g2.rotate_right(1);
        g2[0] = f2;
    }
    code
}

/// Satellite signal at unit power. Code phase, Doppler, and carrier phase
/// come from the dedicated `Gnss` stream.
pub fn synth_gnss_ca(seed: u64) -> ComplexSignal {
    let code = ca_code();
    let mut rng = Stream::new(seed, Domain::Gnss);
    let code_phase_chips = rng.uniform_in(0.0, CODE_LEN as f64);
    let doppler = rng.uniform_in(-DOPPLER_HZ, DOPPLER_HZ);
    let phi0 = rng.uniform_in(0.0, std::f64::consts::TAU);

    let chips_per_sample = CHIP_RATE_HZ / SAMPLE_RATE_HZ;
    let w = std::f64::consts::TAU * doppler / SAMPLE_RATE_HZ;
    let samples = (0..SNAPSHOT_LEN)
        .map(|n| {
            let idx =
                (code_phase_chips + n as f64 * chips_per_sample) as usize % CODE_LEN;
            let chip = code[idx] as f64;
            Complex64::from_polar(1.0, phi0 + w * n as f64) * chip
        })
        .collect();
    ComplexSignal::new(samples).expect("finite by construction")
}

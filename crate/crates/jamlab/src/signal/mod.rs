//! Calibrated synthesis of the 21 interference classes, the GPS C/A
//! signal, and channel noise.
//!
//! Everything works in normalized power units with the satellite signal at
//! power 1, so the composite snapshot is
//!
//! ```text
//! r[n] = s[n] + sqrt(P_J) * j[n] + w[n],   P_J = 10^(JSR_dB / 10)
//! ```
//!
//! with the noise power fixed by the link budget (receiver noise density
//! times sample rate, 28.02 dB above the signal). Jammer waveforms are
//! generated at exactly unit mean power: constant-modulus families by
//! construction, stochastic families by empirical per-snapshot
//! normalization. Each component draws from an independent sub-stream of
//! the snapshot seed (see [`crate::prng::Domain`]).

mod blgni;
mod chirp;
mod cwi;
mod dmi;
pub mod filter;
mod gnss;
mod hopping;
mod pulse;

pub use blgni::synth_blgni;
pub use chirp::{synth_lfm, synth_piecewise_chirp, synth_sin_chirp, ChirpShape, PiecewiseKind};
pub use cwi::synth_cwi;
pub use dmi::{constellation_points, rrc_taps, synth_dmi, Constellation, ROLLOFF, SYMBOL_RATE_HZ};
pub use gnss::{ca_code, synth_gnss_ca};
pub use hopping::synth_freq_hopping;
pub use pulse::synth_pulse_jamming;

use crate::prng::{Domain, Stream};
use crate::{Error, Result};
use num_complex::Complex64;

/// Fixed front-end sample rate.
pub const SAMPLE_RATE_HZ: f64 = 4.0e7;
/// Fixed snapshot length (100 us at 40 MHz).
pub const SNAPSHOT_LEN: usize = 4000;
/// Number of interference classes.
pub const N_CLASSES: usize = 21;
/// Number of JSR levels in the dataset grid (10..=50 dB step 2).
pub const N_JSR: usize = 21;
/// Every class centers its occupied band within this offset of baseband.
pub const CENTER_OFFSET_HZ: f64 = 2.0e6;

/// The dataset JSR grid in dB.
pub fn jsr_grid_db() -> [f64; N_JSR] {
    let mut g = [0.0; N_JSR];
    for (i, v) in g.iter_mut().enumerate() {
        *v = 10.0 + 2.0 * i as f64;
    }
    g
}

/// A fixed-length complex baseband sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSignal {
    pub samples: Vec<Complex64>,
    pub sample_rate_hz: f64,
}

impl ComplexSignal {
    /// Wraps samples, enforcing the fixed length/rate and finiteness.
    pub fn new(samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != SNAPSHOT_LEN {
            return Err(Error::Signal(format!(
                "expected {} samples, got {}",
                SNAPSHOT_LEN,
                samples.len()
            )));
        }
        if !samples.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::Signal("non-finite sample".into()));
        }
        Ok(ComplexSignal { samples, sample_rate_hz: SAMPLE_RATE_HZ })
    }

    /// Mean instantaneous power.
    pub fn mean_power(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }

    /// Scales every sample in place.
    pub fn scale(&mut self, a: f64) {
        for z in &mut self.samples {
            *z *= a;
        }
    }
}

/// Rescales a sample buffer to exactly unit mean power.
pub(crate) fn normalize_unit_power(samples: &mut [Complex64]) {
    let p = samples.iter().map(|z| z.norm_sqr()).sum::<f64>() / samples.len() as f64;
    assert!(p > 0.0, "cannot normalize an all-zero waveform");
    let a = 1.0 / p.sqrt();
    for z in samples.iter_mut() {
        *z *= a;
    }
}

/// Interference family, used for grouped (macro) scoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Dmi,
    Lfm,
    Nlfm,
    Piecewise,
    Pulse,
    Hopping,
    Cw,
    NoiseLike,
}

impl Family {
    /// Report label.
    pub fn name(self) -> &'static str {
        match self {
            Family::Dmi => "DMI",
            Family::Lfm => "LFM",
            Family::Nlfm => "NLFM",
            Family::Piecewise => "piecewise",
            Family::Pulse => "pulse",
            Family::Hopping => "hopping",
            Family::Cw => "CW",
            Family::NoiseLike => "noise-like",
        }
    }
}

/// All eight families in table order.
pub const FAMILIES: [Family; 8] = [
    Family::Dmi,
    Family::Lfm,
    Family::Nlfm,
    Family::Piecewise,
    Family::Pulse,
    Family::Hopping,
    Family::Cw,
    Family::NoiseLike,
];

/// Generator parameters for one class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClassParams {
    Dmi { constellation: Constellation },
    Lfm { bandwidth_hz: f64, sweeps: u32, shape: ChirpShape },
    Sin { bandwidth_hz: f64, cycles: u32 },
    Piecewise { kind: PiecewiseKind },
    Pulse,
    Hopping { bandwidth_hz: f64, dwell_s: f64, n_channels: usize },
    Cwi { n_tones: usize },
    Blgni { bandwidth_hz: f64 },
}

/// One row of the class table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JammingClass {
    pub id: u8,
    pub name: &'static str,
    pub family: Family,
    pub params: ClassParams,
}

/// The 21-class table. Index equals class id.
pub const CLASS_TABLE: [JammingClass; N_CLASSES] = [
    JammingClass { id: 0, name: "BPSK", family: Family::Dmi, params: ClassParams::Dmi { constellation: Constellation::Bpsk } },
    JammingClass { id: 1, name: "QPSK", family: Family::Dmi, params: ClassParams::Dmi { constellation: Constellation::Qpsk } },
    JammingClass { id: 2, name: "8QAM", family: Family::Dmi, params: ClassParams::Dmi { constellation: Constellation::Qam8 } },
    JammingClass { id: 3, name: "16QAM", family: Family::Dmi, params: ClassParams::Dmi { constellation: Constellation::Qam16 } },
    JammingClass { id: 4, name: "32QAM", family: Family::Dmi, params: ClassParams::Dmi { constellation: Constellation::Qam32 } },
    JammingClass { id: 5, name: "64QAM", family: Family::Dmi, params: ClassParams::Dmi { constellation: Constellation::Qam64 } },
    JammingClass { id: 6, name: "LChirpWideSlow", family: Family::Lfm, params: ClassParams::Lfm { bandwidth_hz: 16.0e6, sweeps: 2, shape: ChirpShape::LinearWrap } },
    JammingClass { id: 7, name: "LChirpWideMedium", family: Family::Lfm, params: ClassParams::Lfm { bandwidth_hz: 16.0e6, sweeps: 5, shape: ChirpShape::LinearWrap } },
    JammingClass { id: 8, name: "LChirpWideFast", family: Family::Lfm, params: ClassParams::Lfm { bandwidth_hz: 16.0e6, sweeps: 10, shape: ChirpShape::LinearWrap } },
    JammingClass { id: 9, name: "LChirpWideRapid", family: Family::Lfm, params: ClassParams::Lfm { bandwidth_hz: 16.0e6, sweeps: 15, shape: ChirpShape::LinearWrap } },
    JammingClass { id: 10, name: "LChirpNarrow", family: Family::Lfm, params: ClassParams::Lfm { bandwidth_hz: 5.0e6, sweeps: 10, shape: ChirpShape::LinearWrap } },
    JammingClass { id: 11, name: "SawChirp", family: Family::Lfm, params: ClassParams::Lfm { bandwidth_hz: 12.0e6, sweeps: 11, shape: ChirpShape::Sawtooth } },
    JammingClass { id: 12, name: "SinChirp", family: Family::Nlfm, params: ClassParams::Sin { bandwidth_hz: 10.0e6, cycles: 5 } },
    JammingClass { id: 13, name: "HookChirp", family: Family::Piecewise, params: ClassParams::Piecewise { kind: PiecewiseKind::Hook } },
    JammingClass { id: 14, name: "Triangular", family: Family::Piecewise, params: ClassParams::Piecewise { kind: PiecewiseKind::Triangular } },
    JammingClass { id: 15, name: "TriangularWave", family: Family::Piecewise, params: ClassParams::Piecewise { kind: PiecewiseKind::TriangularWave } },
    JammingClass { id: 16, name: "TickChirp", family: Family::Piecewise, params: ClassParams::Piecewise { kind: PiecewiseKind::Tick } },
    JammingClass { id: 17, name: "PulseJamming", family: Family::Pulse, params: ClassParams::Pulse },
    JammingClass { id: 18, name: "FH", family: Family::Hopping, params: ClassParams::Hopping { bandwidth_hz: 6.0e6, dwell_s: 5.0e-6, n_channels: 16 } },
    JammingClass { id: 19, name: "CWI", family: Family::Cw, params: ClassParams::Cwi { n_tones: 1 } },
    JammingClass { id: 20, name: "BLGNI", family: Family::NoiseLike, params: ClassParams::Blgni { bandwidth_hz: 3.0e6 } },
];

/// Looks a class up by name (case-insensitive).
pub fn class_by_name(name: &str) -> Option<&'static JammingClass> {
    CLASS_TABLE.iter().find(|c| c.name.eq_ignore_ascii_case(name))
}

/// True when the class is constant-modulus before scaling.
pub fn is_constant_modulus(id: u8) -> bool {
    matches!(
        CLASS_TABLE[id as usize].params,
        ClassParams::Lfm { .. }
            | ClassParams::Sin { .. }
            | ClassParams::Piecewise { .. }
            | ClassParams::Hopping { .. }
            | ClassParams::Cwi { n_tones: 1 }
    )
}

/// Link-budget figures in absolute dBW, plus the working JSR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub gnss_power_dbw: f64,
    pub noise_density_dbw_hz: f64,
    pub jsr_db: f64,
}

impl LinkBudget {
    /// Budget at the reference figures with the given JSR.
    pub fn new(jsr_db: f64) -> Result<Self> {
        let b = LinkBudget { gnss_power_dbw: -157.0, noise_density_dbw_hz: -205.0, jsr_db };
        b.validate()?;
        Ok(b)
    }

    /// Bounds check; dataset generation additionally restricts JSR to the
    /// 2 dB grid.
    pub fn validate(&self) -> Result<()> {
        if !(10.0..=50.0).contains(&self.jsr_db) {
            return Err(Error::Config(format!("jsr_db {} outside [10, 50]", self.jsr_db)));
        }
        Ok(())
    }

    /// Noise power relative to the unit signal power:
    /// `N0 + 10 log10(fs) - P_S` in dB, converted to linear.
    pub fn noise_power_rel(&self) -> f64 {
        let db = self.noise_density_dbw_hz + 10.0 * SAMPLE_RATE_HZ.log10() - self.gnss_power_dbw;
        10f64.powf(db / 10.0)
    }

    /// Same quantity in dB.
    pub fn noise_power_rel_db(&self) -> f64 {
        self.noise_density_dbw_hz + 10.0 * SAMPLE_RATE_HZ.log10() - self.gnss_power_dbw
    }

    /// Jamming power relative to the unit signal power.
    pub fn jamming_power_rel(&self) -> f64 {
        10f64.powf(self.jsr_db / 10.0)
    }
}

/// Dataset coordinate of one snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedTriple {
    pub class_idx: u32,
    pub jsr_idx: u32,
    pub sample_idx: u32,
}

/// Folds a dataset coordinate into its unique 64-bit seed:
/// `class * 2^40 + jsr * 2^20 + sample`. Injective as long as the sample
/// index stays below 2^20, which is enforced.
pub fn derive_seed(t: SeedTriple) -> Result<u64> {
    if t.class_idx >= N_CLASSES as u32 {
        return Err(Error::SeedRange(format!("class_idx {} >= {}", t.class_idx, N_CLASSES)));
    }
    if t.jsr_idx >= N_JSR as u32 {
        return Err(Error::SeedRange(format!("jsr_idx {} >= {}", t.jsr_idx, N_JSR)));
    }
    if t.sample_idx >= 1 << 20 {
        return Err(Error::SeedRange(format!("sample_idx {} >= 2^20", t.sample_idx)));
    }
    Ok(((t.class_idx as u64) << 40) + ((t.jsr_idx as u64) << 20) + t.sample_idx as u64)
}

/// Maps a grid JSR value to its index, requiring an exact grid point.
pub fn jsr_index(jsr_db: f64) -> Result<u32> {
    let idx = (jsr_db - 10.0) / 2.0;
    if idx < 0.0 || idx > 20.0 || idx.fract() != 0.0 {
        return Err(Error::Config(format!("jsr {} dB is not on the 10..50 step-2 grid", jsr_db)));
    }
    Ok(idx as u32)
}

/// One labeled dataset element.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotRecord {
    pub signal: ComplexSignal,
    pub class_id: u8,
    pub jsr_db: f64,
    pub seed: u64,
    pub sample_idx: u32,
}

/// Generates the unit-power jamming waveform for a class.
pub fn synth_jamming(class: &JammingClass, seed: u64) -> ComplexSignal {
    match class.params {
        ClassParams::Dmi { constellation } => synth_dmi(constellation, seed),
        ClassParams::Lfm { bandwidth_hz, sweeps, shape } => {
            synth_lfm(bandwidth_hz, sweeps, shape, seed).expect("table parameters are valid")
        }
        ClassParams::Sin { bandwidth_hz, cycles } => synth_sin_chirp(bandwidth_hz, cycles, seed),
        ClassParams::Piecewise { kind } => synth_piecewise_chirp(kind, seed),
        ClassParams::Pulse => synth_pulse_jamming(seed),
        ClassParams::Hopping { bandwidth_hz, dwell_s, n_channels } => {
            synth_freq_hopping(bandwidth_hz, dwell_s, n_channels, seed)
        }
        ClassParams::Cwi { n_tones } => synth_cwi(n_tones, seed),
        ClassParams::Blgni { bandwidth_hz } => synth_blgni(bandwidth_hz, seed),
    }
}

/// Complex AWGN at the link-budget noise power.
pub fn synth_awgn(power: f64, seed: u64) -> ComplexSignal {
    let mut rng = Stream::new(seed, Domain::Noise);
    let a = power.sqrt();
    let samples = (0..SNAPSHOT_LEN).map(|_| rng.standard_complex() * a).collect();
    ComplexSignal::new(samples).expect("finite by construction")
}

/// Builds the composite snapshot `r = s + sqrt(P_J) j + w` for one dataset
/// coordinate and quantizes it through `f32` so the in-memory record equals
/// its on-disk form bit for bit.
pub fn compose_snapshot(
    class: &JammingClass,
    budget: &LinkBudget,
    sample_idx: u32,
) -> Result<SnapshotRecord> {
    budget.validate()?;
    let jsr_idx = jsr_index(budget.jsr_db)?;
    let seed = derive_seed(SeedTriple { class_idx: class.id as u32, jsr_idx, sample_idx })?;

    let jam = synth_jamming(class, seed);
    let sat = synth_gnss_ca(seed);
    let noise = synth_awgn(budget.noise_power_rel(), seed);
    let aj = budget.jamming_power_rel().sqrt();

    let samples: Vec<Complex64> = (0..SNAPSHOT_LEN)
        .map(|n| {
            let z = sat.samples[n] + jam.samples[n] * aj + noise.samples[n];
            Complex64::new(z.re as f32 as f64, z.im as f32 as f64)
        })
        .collect();

    Ok(SnapshotRecord {
        signal: ComplexSignal::new(samples)?,
        class_id: class.id,
        jsr_db: budget.jsr_db,
        seed,
        sample_idx,
    })
}

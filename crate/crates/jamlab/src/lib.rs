//! A desk-scale GNSS interference laboratory.
//!
//! The crate covers the full experimental loop on a single CPU:
//!
//! 1. [`signal`] synthesizes 21 interference classes plus a GPS C/A signal
//!    and AWGN at a calibrated jamming-to-signal ratio, bit-reproducibly
//!    from a `(class, jsr, sample)` coordinate.
//! 2. [`dataset`] persists snapshots in a fixed little-endian binary layout
//!    with a text manifest and builds stratified train/val/test splits.
//! 3. [`features`] turns a snapshot into the three model inputs: the raw IQ
//!    sequence, a 224x224 normalized log-power spectrogram, and a 6-element
//!    statistics vector.
//! 4. [`nn`] is a minimal tensor/layer stack (complex 1-D convolution,
//!    depthwise separable 2-D convolution, squeeze-and-excitation, batch
//!    norm, Adam, warmup+cosine schedule) with hand-written backward passes
//!    checked against central finite differences in `f64`.
//! 5. [`model`] composes the dual-stream gated-fusion classifier.
//! 6. [`train`] and [`metrics`] run deterministic training/evaluation with
//!    confusion-matrix, F1, and gate-distribution reports.
//! 7. [`theory`] holds the two analysis demos: magnitude-spectrogram
//!    ambiguity and JSR-dependent modality reliability.
//! 8. [`cli`] backs the `jamlab` binary (generate / train / eval /
//!    report-gates / check).
//!
//! Runnable walkthroughs live in `examples/`: `synthesize_waveforms`,
//! `generate_dataset`, `spectrogram_pipeline`, `train_desk_model`,
//! `evaluate_and_gates`, `theory_ambiguity`, `theory_reliability`.

pub mod cli;
pub mod dataset;
pub mod features;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod prng;
pub mod signal;
pub mod theory;
pub mod train;

/// Crate-wide error type; variants carry enough context to identify the
/// failing stage without a backtrace.
#[derive(thiserror::Error, Debug)]
pub enum Error {
    #[error("seed coordinates out of range: {0}")]
    SeedRange(String),
    #[error("signal synthesis: {0}")]
    Signal(String),
    #[error("dataset magic mismatch: found {found:?}, expected \"CGI21\"")]
    MagicMismatch { found: Vec<u8> },
    #[error("dataset version mismatch: found {found}, expected {expected}")]
    VersionMismatch { found: u16, expected: u16 },
    #[error("dataset file truncated: {0}")]
    Truncated(String),
    #[error("dataset count/length disagreement: {0}")]
    CountMismatch(String),
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

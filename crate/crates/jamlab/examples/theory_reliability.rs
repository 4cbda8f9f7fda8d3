//! Traces how the reliability of each modality moves with jamming power
//! and why a fixed fusion weight cannot be optimal.
//!
//! For a hard class pair (64QAM vs band-limited noise), a symmetrized
//! Gaussian KL divergence on fixed feature summaries scores how separable
//! the pair is through the raw IQ stream versus the spectrogram stream.
//! The IQ stream wins at high JSR, the spectrogram stream wins near the
//! noise floor, and the inverse-variance-optimal weight
//! alpha* = R_iq / (R_iq + R_stft) swings across one half accordingly.
//!
//! ```text
//! cargo run --release --example theory_reliability
//! ```

use jamlab::theory::{optimal_alpha, reliability_csv, reliability_curve, reliability_verdict};

fn main() -> jamlab::Result<()> {
    let jsr_levels = [10.0, 20.0, 30.0, 40.0, 50.0];
    let pair = (5u8, 20u8);
    let n = 100;

    println!("scoring {} JSR levels with {n} snapshots per class per level...\n", jsr_levels.len());
    let points = reliability_curve(&jsr_levels, pair, n)?;
    print!("{}", reliability_verdict(&points));
    println!();
    print!("{}", reliability_csv(&points));

    // Two exact identities of the weight formula, independent of data:
    // equal reliabilities always land on 1/2, and swapping the modalities
    // complements the weight bit for bit.
    println!("\nweight identities:");
    let tie = optimal_alpha(3.7, 3.7)?;
    println!("  alpha*(R, R)        = {tie} (exactly 0.5)");
    for p in &points {
        let a = optimal_alpha(p.r_iq, p.r_stft)?;
        let b = optimal_alpha(p.r_stft, p.r_iq)?;
        assert_eq!(a + b, 1.0, "swapping the modalities complements the weight");
        println!("  {:>4} dB: alpha* {a:.4}, swapped {b:.4}, sum {}", p.jsr_db, a + b);
    }
    Ok(())
}

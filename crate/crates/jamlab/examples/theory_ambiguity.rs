//! Demonstrates why the spectrogram stream cannot stand alone: a dense QAM
//! jammer and Gaussian noise shaped to the same band produce practically
//! identical averaged log spectrograms, while their IQ fourth moments stay
//! far apart. Magnitude time-frequency analysis discards the phase
//! structure that separates the two, so a second modality is needed.
//!
//! ```text
//! cargo run --release --example theory_ambiguity
//! ```

use jamlab::theory::{ambiguity_classifier_duel, ambiguity_csv, ambiguity_demo, ambiguity_verdict};

fn main() -> jamlab::Result<()> {
    let jsr_db = 40.0;
    let n = 100;
    let result = ambiguity_demo(jsr_db, n)?;
    print!("{}", ambiguity_verdict(&result));

    println!();
    print!("{}", ambiguity_csv(std::slice::from_ref(&result)));

    // The punchline as a classifier duel on fresh snapshots: thresholding
    // the IQ kurtosis separates the classes; nearest averaged-spectrogram
    // template is no better than guessing.
    let (kurtosis_acc, template_acc) = ambiguity_classifier_duel(jsr_db, n)?;
    println!("\nsingle-feature classifiers on {n} fresh snapshots per class:");
    println!("  IQ kurtosis threshold      {kurtosis_acc:.3}");
    println!("  spectrogram template match {template_acc:.3}");
    Ok(())
}

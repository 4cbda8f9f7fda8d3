//! Runs one snapshot through the feature pipeline and renders the result:
//! STFT frames, energy bookkeeping, the normalized log-power image, and
//! the 6-element statistics vector that drives both fusion gates.
//!
//! ```text
//! cargo run --release --example spectrogram_pipeline
//! ```

use jamlab::features::{
    compute_stats, log_psd_normalize, resize_bilinear, snapshot_spectrogram, stft, StatsVector,
    IMAGE_SIZE, STFT_HOP, STFT_WIN,
};
use jamlab::signal::{compose_snapshot, LinkBudget, CLASS_TABLE};

fn main() -> jamlab::Result<()> {
    // Frequency hopping paints the clearest time-frequency structure.
    let class = &CLASS_TABLE[18];
    let snap = compose_snapshot(class, &LinkBudget::new(40.0)?, 0)?;
    println!("snapshot: {} at {} dB JSR\n", class.name, snap.jsr_db);

    let frames = stft(&snap.signal)?;
    println!("STFT: {} frames x {} bins (window {}, hop {})", frames.n_frames, frames.n_bins, STFT_WIN, STFT_HOP);

    // With a hop short enough to cover every sample, windowed frame energy
    // tracks time-domain energy through the DFT (Parseval).
    let time_energy: f64 = {
        let mut acc = 0.0;
        let w = jamlab::features::hamming(STFT_WIN);
        for f in 0..frames.n_frames {
            for (k, &wk) in w.iter().enumerate() {
                acc += (snap.signal.samples[f * STFT_HOP + k] * wk).norm_sqr();
            }
        }
        acc
    };
    let freq_energy: f64 =
        frames.values.iter().map(|v| v.norm_sqr()).sum::<f64>() / STFT_WIN as f64;
    println!("Parseval: time {:.6e} vs frequency {:.6e} (rel err {:.2e})", time_energy, freq_energy, (time_energy - freq_energy).abs() / time_energy);

    let raw = log_psd_normalize(&frames);
    let (lo, hi) = raw.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    println!("normalized log image: {} x {}, range [{lo}, {hi}]", raw.rows, raw.cols);

    let img = resize_bilinear(&raw, IMAGE_SIZE, IMAGE_SIZE);
    println!("resized to {} x {}\n", img.rows, img.cols);

    // Terminal rendering: time runs top to bottom, frequency left to
    // right; the wandering bright column is the hop pattern.
    let (tr, tc) = (24, 78);
    let shades = [' ', '.', ':', '-', '=', '+', '*', '#', '%', '@'];
    for r in 0..tr {
        let mut line = String::new();
        for c in 0..tc {
            let mut acc = 0.0;
            let mut n = 0;
            for rr in (r * img.rows / tr)..((r + 1) * img.rows / tr) {
                for cc in (c * img.cols / tc)..((c + 1) * img.cols / tc) {
                    acc += img.at(rr, cc);
                    n += 1;
                }
            }
            let v = acc / n as f64;
            line.push(shades[((v * 9.0).round() as usize).min(9)]);
        }
        println!("  {line}");
    }

    let full = snapshot_spectrogram(&snap.signal)?;
    assert_eq!((full.rows, full.cols), (IMAGE_SIZE, IMAGE_SIZE));

    let stats = compute_stats(&snap.signal)?;
    println!("\nstatistics vector:");
    for (name, value) in StatsVector::NAMES.iter().zip(stats.to_array()) {
        println!("  {name:<16} {value:>14.4}");
    }
    Ok(())
}

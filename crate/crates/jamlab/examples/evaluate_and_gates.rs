//! Shows the evaluation reports: per-JSR accuracy buckets, per-family F1,
//! and distributions of the two learned gates. Trains a short two-class
//! run that spans a weak (10 dB) and a strong (50 dB) stratum.
//!
//! Even this small run makes the reliability story visible in the
//! accuracy buckets: the hard pair (dense QAM vs shaped noise) is nearly
//! unsolvable close to the noise floor and trivial when the jammer
//! dominates. Gate movement away from the 0.5 resting point grows with
//! training scale; train the full grid to watch g fall as JSR rises.
//!
//! ```text
//! cargo run --release --example evaluate_and_gates
//! ```

use jamlab::dataset::{default_dir, fnv1a, generate_dataset, load_with_split, GenerationConfig};
use jamlab::model::{FusionMode, GfNet, ModelConfig};
use jamlab::prng::Stream;
use jamlab::train::{evaluate, gate_buckets_csv, gate_report, train, FeatureCache, TrainOptions};

fn main() -> jamlab::Result<()> {
    let cfg = GenerationConfig {
        classes: vec![5, 20], // 64QAM vs band-limited Gaussian noise
        jsr_levels_db: vec![10.0, 50.0],
        train_per_stratum: 20,
        test_per_stratum: 10,
        sample_base: 0,
    };
    let dir = default_dir(&std::env::temp_dir().join("jamlab_examples"), &cfg);
    if !dir.join(jamlab::dataset::MANIFEST_NAME).exists() {
        generate_dataset(&cfg, &dir)?;
    }
    let (ds, split) = load_with_split(&dir, 0.2, 1)?;
    let cache = FeatureCache::build(&ds)?;

    let seed = 1u64;
    let mc = ModelConfig { n_classes: cache.n_classes(), ..ModelConfig::default() };
    let mut model = GfNet::<f32>::new(mc, &mut Stream::from_raw(seed ^ fnv1a(b"init")))?;
    let opts = TrainOptions { epochs: 10, batch_size: 16, seed, verbose: true, ..TrainOptions::default() };
    let outcome = train(&mut model, &cache, &split.train, &split.val, &opts)?;

    let report = evaluate(&model, &cache, &split.test, &outcome.normalizer, FusionMode::Learned)?;
    print!("\n{}", report.summary_text());

    println!("\nper-JSR gate distributions over the test rows:");
    let buckets = gate_report(&model, &cache, &split.test, &outcome.normalizer)?;
    for b in &buckets {
        println!(
            "  {:>4} dB: g mean {:.3} std {:.3} | s mean {:.3} std {:.3}  ({} rows)",
            b.jsr_db, b.g.mean, b.g.std, b.s.mean, b.s.std, b.n
        );
    }

    println!("\nCSV form (deciles included):");
    print!("{}", gate_buckets_csv(&buckets));
    Ok(())
}

//! Trains the desk-scale gated-fusion classifier from scratch on a small
//! three-class problem and evaluates the held-out snapshots. Takes about
//! a minute in release mode on one core.
//!
//! ```text
//! cargo run --release --example train_desk_model
//! ```

use jamlab::dataset::{default_dir, fnv1a, generate_dataset, load_with_split, GenerationConfig};
use jamlab::model::{load_checkpoint, save_checkpoint, GfNet, ModelConfig};
use jamlab::prng::Stream;
use jamlab::train::{evaluate, train, FeatureCache, TrainOptions};

fn main() -> jamlab::Result<()> {
    let cfg = GenerationConfig {
        classes: vec![8, 18, 19], // fast wide chirp, frequency hopping, single tone
        jsr_levels_db: vec![40.0],
        train_per_stratum: 24,
        test_per_stratum: 8,
        sample_base: 0,
    };
    let dir = default_dir(&std::env::temp_dir().join("jamlab_examples"), &cfg);
    if !dir.join(jamlab::dataset::MANIFEST_NAME).exists() {
        generate_dataset(&cfg, &dir)?;
    }
    let (ds, split) = load_with_split(&dir, 0.25, 0)?;
    println!(
        "dataset: {} records, split {}/{}/{}",
        ds.records.len(),
        split.train.len(),
        split.val.len(),
        split.test.len()
    );

    eprint!("caching features... ");
    let cache = FeatureCache::build(&ds)?;
    eprintln!("done");

    let seed = 0u64;
    let mc = ModelConfig { n_classes: cache.n_classes(), ..ModelConfig::default() };
    let mut model = GfNet::<f32>::new(mc, &mut Stream::from_raw(seed ^ fnv1a(b"init")))?;
    let n_params: usize = {
        let mut total = 0;
        model.visit_state(|_, t| total += t.data.len());
        total
    };
    println!("model: {n_params} parameters, learned fusion\n");

    let opts = TrainOptions {
        epochs: 14,
        batch_size: 16,
        seed,
        verbose: true,
        ..TrainOptions::default()
    };
    let outcome = train(&mut model, &cache, &split.train, &split.val, &opts)?;
    println!(
        "\nbest validation accuracy {:.4} at epoch {}",
        outcome.state.best_val_accuracy, outcome.best_epoch
    );

    // Round-trip through a checkpoint before scoring, so the numbers below
    // are those of the persisted artifact, not the in-memory state.
    let ckpt = dir.join("example_model.ckpt");
    save_checkpoint(&ckpt, &mut model, &outcome.normalizer, &outcome.state)?;
    let (restored, norm, state) = load_checkpoint::<f32>(&ckpt)?;
    println!("checkpoint {} (step {})", ckpt.display(), state.step);

    let mode = jamlab::model::FusionMode::parse(&state.fusion_mode)?;
    let report = evaluate(&restored, &cache, &split.test, &norm, mode)?;
    print!("\n{}", report.summary_text());
    Ok(())
}

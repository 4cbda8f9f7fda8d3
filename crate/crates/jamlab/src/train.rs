//! Deterministic training and evaluation on cached features.
//!
//! The pipeline caches every record's three views (IQ planes, spectrogram
//! image, descriptor vector) once up front, then trains with seeded
//! shuffling, warmup-cosine Adam steps, per-epoch validation, and
//! best-validation weight retention. Evaluation groups results by
//! jamming-to-signal ratio and reports accuracy, per-family F1, and the
//! distribution of both fusion gates.

use rayon::prelude::*;

use crate::dataset::{fnv1a, Dataset};
use crate::features::{compute_stats, iq_planes, snapshot_spectrogram, IMAGE_SIZE};
use crate::metrics::{family_groups, ConfusionMatrix};
use crate::model::{
    FusionMode, GateReadout, GfNet, Normalizer, TrainState, STATS_DIM,
};
use crate::nn::{lr_at, softmax_xent, Adam, ComplexTensor, Scalar, Tensor};
use crate::prng::Stream;
use crate::signal::{CLASS_TABLE, SNAPSHOT_LEN};
use crate::{Error, Result};

const EVAL_BATCH: usize = 64;

/// Every record's model-ready views, row index = record index.
///
/// Images are stored as f32 to halve the footprint; they are rescaled
/// log-power values in [0, 1], far from f32's precision limits.
pub struct FeatureCache {
    pub input_len: usize,
    pub image_size: usize,
    /// Per row: re plane then im plane, `2 * input_len` values.
    pub iq: Vec<f32>,
    /// Per row: `image_size^2` values.
    pub images: Vec<f32>,
    pub stats: Vec<[f64; STATS_DIM]>,
    /// Dense label per row (position of the class in `class_ids`).
    pub labels: Vec<usize>,
    pub jsr_db: Vec<f64>,
    /// Synthesis seed per row, for error provenance.
    pub seeds: Vec<u64>,
    /// Dense label -> original class id, manifest order.
    pub class_ids: Vec<u8>,
    /// JSR grid of the source dataset, manifest order.
    pub jsr_grid: Vec<f64>,
}

impl FeatureCache {
    /// Extracts all three views for every record in the dataset.
    pub fn build(ds: &Dataset) -> Result<Self> {
        let class_ids: Vec<u8> = ds.manifest.classes.iter().map(|&(id, _)| id).collect();
        let label_of = {
            let ids = class_ids.clone();
            move |class_id: u8| -> Result<usize> {
                ids.iter().position(|&c| c == class_id).ok_or_else(|| {
                    Error::Manifest(format!("record class {class_id} not in manifest"))
                })
            }
        };

        let rows: Vec<(Vec<f32>, Vec<f32>, [f64; STATS_DIM])> = ds
            .records
            .par_iter()
            .map(|r| {
                let iq = iq_planes(&r.signal);
                let spec = snapshot_spectrogram(&r.signal)?;
                let img: Vec<f32> = spec.values.iter().map(|&v| v as f32).collect();
                let stats = compute_stats(&r.signal)?.to_array();
                Ok((iq, img, stats))
            })
            .collect::<Result<_>>()?;

        let n = ds.records.len();
        let mut cache = FeatureCache {
            input_len: SNAPSHOT_LEN,
            image_size: IMAGE_SIZE,
            iq: Vec::with_capacity(n * 2 * SNAPSHOT_LEN),
            images: Vec::with_capacity(n * IMAGE_SIZE * IMAGE_SIZE),
            stats: Vec::with_capacity(n),
            labels: Vec::with_capacity(n),
            jsr_db: Vec::with_capacity(n),
            seeds: Vec::with_capacity(n),
            class_ids,
            jsr_grid: ds.manifest.jsr_levels_db.clone(),
        };
        for (r, (iq, img, stats)) in ds.records.iter().zip(rows) {
            cache.iq.extend_from_slice(&iq);
            cache.images.extend_from_slice(&img);
            cache.stats.push(stats);
            cache.labels.push(label_of(r.class_id)?);
            cache.jsr_db.push(r.jsr_db);
            cache.seeds.push(r.seed);
        }
        Ok(cache)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.class_ids.len()
    }

    pub fn class_name(&self, label: usize) -> &'static str {
        CLASS_TABLE[self.class_ids[label] as usize].name
    }

    /// Descriptor rows for a subset, as normalizer-fit input.
    pub fn stats_rows(&self, rows: &[usize]) -> Vec<[f64; STATS_DIM]> {
        rows.iter().map(|&r| self.stats[r]).collect()
    }

    fn check_model<T: Scalar>(&self, model: &GfNet<T>) -> Result<()> {
        let c = &model.config;
        if c.input_len != self.input_len
            || c.image_size != self.image_size
            || c.n_classes != self.n_classes()
        {
            return Err(Error::Config(format!(
                "model expects len {} / image {} / {} classes, cache holds {} / {} / {}",
                c.input_len,
                c.image_size,
                c.n_classes,
                self.input_len,
                self.image_size,
                self.n_classes()
            )));
        }
        Ok(())
    }

    /// Assembles one batch. Streams the active fusion mode does not
    /// consume are skipped entirely.
    fn batch<T: Scalar>(
        &self,
        rows: &[usize],
        norm: &Normalizer,
        mode: FusionMode,
    ) -> (Option<ComplexTensor<T>>, Option<Tensor<T>>, Tensor<T>, Vec<usize>) {
        let (b, l, s) = (rows.len(), self.input_len, self.image_size);
        let iq = (mode != FusionMode::StftOnly).then(|| {
            let mut t = ComplexTensor::zeros(vec![b, 1, l]);
            for (i, &r) in rows.iter().enumerate() {
                let src = &self.iq[r * 2 * l..(r + 1) * 2 * l];
                for (dst, &v) in t.re.data[i * l..(i + 1) * l].iter_mut().zip(&src[..l]) {
                    *dst = T::from_f64(v as f64);
                }
                for (dst, &v) in t.im.data[i * l..(i + 1) * l].iter_mut().zip(&src[l..]) {
                    *dst = T::from_f64(v as f64);
                }
            }
            t
        });
        let img = (mode != FusionMode::IqOnly).then(|| {
            let mut t = Tensor::zeros(vec![b, 1, s, s]);
            for (i, &r) in rows.iter().enumerate() {
                let src = &self.images[r * s * s..(r + 1) * s * s];
                for (dst, &v) in t.data[i * s * s..(i + 1) * s * s].iter_mut().zip(src) {
                    *dst = T::from_f64(v as f64);
                }
            }
            t
        });
        let mut stats = Tensor::zeros(vec![b, STATS_DIM]);
        for (i, &r) in rows.iter().enumerate() {
            let z = norm.apply(self.stats[r]);
            for (dst, &v) in stats.data[i * STATS_DIM..(i + 1) * STATS_DIM].iter_mut().zip(&z) {
                *dst = T::from_f64(v);
            }
        }
        let labels = rows.iter().map(|&r| self.labels[r]).collect();
        (iq, img, stats, labels)
    }

    fn provenance(&self, rows: &[usize]) -> String {
        rows.iter()
            .map(|&r| {
                format!(
                    "(class {}, jsr {} dB, seed {:#x})",
                    self.class_ids[self.labels[r]], self.jsr_db[r], self.seeds[r]
                )
            })
            .collect::<Vec<_>>()
            .join(", ")
    }
}

#[derive(Debug, Clone)]
pub struct TrainOptions {
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub base_lr: f64,
    pub weight_decay: f64,
    pub warmup_epochs: u64,
    pub mode: FusionMode,
    /// Print one progress line per epoch to stderr.
    pub verbose: bool,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            epochs: 30,
            batch_size: 64,
            seed: 0,
            base_lr: 1e-3,
            weight_decay: 1e-4,
            warmup_epochs: 1,
            mode: FusionMode::Learned,
            verbose: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    /// Mean cross-entropy per optimizer step.
    pub loss_history: Vec<f64>,
    /// Validation accuracy after each epoch (NaN if no validation rows).
    pub val_accuracy: Vec<f64>,
    /// Epoch whose weights the model now holds.
    pub best_epoch: usize,
    pub state: TrainState,
    pub normalizer: Normalizer,
}

fn snapshot<T: Scalar>(model: &mut GfNet<T>) -> Vec<Vec<T>> {
    let mut out = Vec::new();
    model.visit_state(|_, t| out.push(t.data.clone()));
    out
}

fn restore<T: Scalar>(model: &mut GfNet<T>, snap: &[Vec<T>]) {
    let mut i = 0;
    model.visit_state(|_, t| {
        t.data.copy_from_slice(&snap[i]);
        i += 1;
    });
    assert_eq!(i, snap.len(), "snapshot tensor count drifted");
}

/// Trains in place. Deterministic for a fixed seed: epoch shuffles,
/// dropout, and the optimizer schedule all derive from `opts.seed`.
/// Descriptor normalization is fit on the training rows only. After the
/// run the model holds the weights of the best validation epoch (the
/// final epoch if there are no validation rows).
pub fn train<T: Scalar>(
    model: &mut GfNet<T>,
    cache: &FeatureCache,
    train_rows: &[usize],
    val_rows: &[usize],
    opts: &TrainOptions,
) -> Result<TrainOutcome> {
    cache.check_model(model)?;
    if opts.batch_size == 0 {
        return Err(Error::Config("batch size 0".into()));
    }
    if train_rows.is_empty() && opts.epochs > 0 {
        return Err(Error::Config("no training rows".into()));
    }
    let norm = if train_rows.is_empty() {
        Normalizer::identity()
    } else {
        Normalizer::fit(&cache.stats_rows(train_rows))?
    };

    let steps_per_epoch = train_rows.len().div_ceil(opts.batch_size) as u64;
    let mut optimizer = Adam::new(opts.weight_decay);
    let mut dropout_rng = Stream::from_raw(opts.seed ^ fnv1a(b"dropout"));
    let mut loss_history = Vec::new();
    let mut val_accuracy = Vec::new();
    let mut best = f64::NEG_INFINITY;
    let mut best_epoch = 0usize;
    let mut best_weights: Option<Vec<Vec<T>>> = None;
    let mut step = 0u64;

    for epoch in 0..opts.epochs {
        let mut order = train_rows.to_vec();
        let mut rng = Stream::from_raw(opts.seed ^ fnv1a(format!("epoch{epoch}").as_bytes()));
        rng.shuffle(&mut order);

        for chunk in order.chunks(opts.batch_size) {
            let (iq, img, stats, labels) = cache.batch::<T>(chunk, &norm, opts.mode);
            let loss = (|| -> Result<f64> {
                let (logits, _, caches) =
                    model.forward_train(iq.as_ref(), img.as_ref(), &stats, opts.mode, &mut dropout_rng)?;
                let (loss, _, dlogits) = softmax_xent(&logits, &labels)?;
                let loss = loss.to_f64();
                if !loss.is_finite() {
                    return Err(Error::Numeric(format!("loss {loss}")));
                }
                model.zero_grad();
                model.backward(&caches, &dlogits)?;
                let lr = lr_at(step, steps_per_epoch, opts.epochs as u64, opts.warmup_epochs, opts.base_lr);
                optimizer.step(model.params_mut(), lr)?;
                Ok(loss)
            })()
            .map_err(|e| {
                Error::Numeric(format!(
                    "aborting at epoch {epoch}, step {step}, batch [{}]: {e}",
                    cache.provenance(chunk)
                ))
            })?;
            loss_history.push(loss);
            step += 1;
        }

        let acc = if val_rows.is_empty() {
            f64::NAN
        } else {
            let (pred, _) = predict(model, cache, val_rows, &norm, opts.mode)?;
            let hits = val_rows.iter().zip(&pred).filter(|&(&r, &p)| cache.labels[r] == p).count();
            hits as f64 / val_rows.len() as f64
        };
        val_accuracy.push(acc);
        // Without validation every epoch "improves", so the final weights
        // survive; with it, strictly better accuracy wins (earliest best).
        if val_rows.is_empty() || acc > best {
            best = acc;
            best_epoch = epoch;
            best_weights = Some(snapshot(model));
        }
        if opts.verbose {
            let mean_loss: f64 =
                loss_history[loss_history.len() - steps_per_epoch as usize..].iter().sum::<f64>()
                    / steps_per_epoch as f64;
            eprintln!(
                "epoch {:>3}/{}: train loss {mean_loss:.4}, val accuracy {acc:.4}",
                epoch + 1,
                opts.epochs
            );
        }
    }

    if let Some(w) = &best_weights {
        restore(model, w);
    }
    let state = TrainState {
        step,
        epoch: opts.epochs as u64,
        best_val_accuracy: if best.is_finite() { best } else { 0.0 },
        fusion_mode: opts.mode.as_str().into(),
    };
    Ok(TrainOutcome { loss_history, val_accuracy, best_epoch, state, normalizer: norm })
}

/// Predicted dense labels and gate readouts for a row subset, in input
/// order. Batches run in parallel; aggregation preserves order, so the
/// result is independent of worker count.
pub fn predict<T: Scalar>(
    model: &GfNet<T>,
    cache: &FeatureCache,
    rows: &[usize],
    norm: &Normalizer,
    mode: FusionMode,
) -> Result<(Vec<usize>, Vec<GateReadout>)> {
    cache.check_model(model)?;
    let per_chunk: Vec<(Vec<usize>, Vec<GateReadout>)> = rows
        .par_chunks(EVAL_BATCH)
        .map(|chunk| {
            let (iq, img, stats, _) = cache.batch::<T>(chunk, norm, mode);
            let (probs, gates) = model.forward_eval(iq.as_ref(), img.as_ref(), &stats, mode)?;
            let k = probs.shape[1];
            let pred = (0..chunk.len())
                .map(|i| {
                    let row = &probs.data[i * k..(i + 1) * k];
                    let mut arg = 0;
                    for (j, &v) in row.iter().enumerate() {
                        if v > row[arg] {
                            arg = j;
                        }
                    }
                    arg
                })
                .collect();
            Ok((pred, gates))
        })
        .collect::<Result<_>>()?;
    let mut preds = Vec::with_capacity(rows.len());
    let mut gates = Vec::with_capacity(rows.len());
    for (p, g) in per_chunk {
        preds.extend(p);
        gates.extend(g);
    }
    Ok((preds, gates))
}

/// Distribution summary of one gate over one JSR bucket. Deciles are
/// the 0%, 10%, ..., 100% quantiles (linear interpolation).
#[derive(Debug, Clone, PartialEq)]
pub struct GateStats {
    pub mean: f64,
    pub std: f64,
    pub deciles: [f64; 11],
}

impl GateStats {
    fn from_values(mut values: Vec<f64>) -> Self {
        if values.is_empty() {
            return GateStats { mean: f64::NAN, std: f64::NAN, deciles: [f64::NAN; 11] };
        }
        values.sort_by(f64::total_cmp);
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        let mut deciles = [0.0; 11];
        for (q, d) in deciles.iter_mut().enumerate() {
            let pos = q as f64 / 10.0 * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            let frac = pos - lo as f64;
            *d = values[lo] * (1.0 - frac) + values[hi] * frac;
        }
        GateStats { mean, std: var.sqrt(), deciles }
    }
}

/// One JSR bucket of an evaluation: sample counts, accuracy, and gate
/// distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct BucketReport {
    pub jsr_db: f64,
    pub n: usize,
    pub correct: usize,
    /// (samples, correct) per dense label.
    pub per_class: Vec<(usize, usize)>,
    pub g: GateStats,
    pub s: GateStats,
}

impl BucketReport {
    pub fn accuracy(&self) -> f64 {
        self.correct as f64 / self.n as f64
    }

    pub fn class_accuracy(&self, label: usize) -> Option<f64> {
        let (n, c) = self.per_class[label];
        (n > 0).then(|| c as f64 / n as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub n: usize,
    pub correct: usize,
    pub confusion: ConfusionMatrix,
    /// Unweighted mean F1 over all classes.
    pub macro_f1: f64,
    /// Macro F1 per interference family present in the label space.
    pub family_f1: Vec<(&'static str, f64)>,
    /// One entry per JSR level of the source grid, grid order.
    pub buckets: Vec<BucketReport>,
    pub class_names: Vec<&'static str>,
}

impl EvalReport {
    pub fn accuracy(&self) -> f64 {
        self.correct as f64 / self.n as f64
    }

    /// Long-format CSV: one row per (JSR, class) plus per-JSR totals.
    pub fn accuracy_csv(&self) -> String {
        let mut out = String::from("jsr_db,class,samples,correct,accuracy\n");
        for b in &self.buckets {
            out.push_str(&format!(
                "{},all,{},{},{:.6}\n",
                b.jsr_db,
                b.n,
                b.correct,
                b.accuracy()
            ));
            for (label, &(n, c)) in b.per_class.iter().enumerate() {
                let acc = if n > 0 { format!("{:.6}", c as f64 / n as f64) } else { String::new() };
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    b.jsr_db, self.class_names[label], n, c, acc
                ));
            }
        }
        out
    }

    pub fn gates_csv(&self) -> String {
        gate_csv_rows(self.buckets.iter().map(|b| (b.jsr_db, b.n, &b.g, &b.s)))
    }

    /// Human-readable run summary.
    pub fn summary_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "samples {}  accuracy {:.4}  macro F1 {:.4}\n",
            self.n,
            self.accuracy(),
            self.macro_f1
        ));
        out.push_str("per-JSR:\n");
        for b in &self.buckets {
            out.push_str(&format!(
                "  {:>5} dB: n {:>5}  accuracy {:.4}  gate g {:.3}  gate s {:.3}\n",
                b.jsr_db,
                b.n,
                b.accuracy(),
                b.g.mean,
                b.s.mean
            ));
        }
        out.push_str("per-family macro F1:\n");
        for (fam, f1) in &self.family_f1 {
            out.push_str(&format!("  {fam:<10} {f1:.4}\n"));
        }
        out
    }
}

fn gate_csv_rows<'a>(rows: impl Iterator<Item = (f64, usize, &'a GateStats, &'a GateStats)>) -> String {
    let mut out = String::from("jsr_db,gate,samples,mean,std");
    for q in 0..=10 {
        out.push_str(&format!(",q{}", q * 10));
    }
    out.push('\n');
    for (jsr, n, g, s) in rows {
        for (name, st) in [("g", g), ("s", s)] {
            out.push_str(&format!("{jsr},{name},{n},{:.6},{:.6}", st.mean, st.std));
            for d in st.deciles {
                out.push_str(&format!(",{d:.6}"));
            }
            out.push('\n');
        }
    }
    out
}

/// Evaluates a row subset. The report is independent of row order: rows
/// are re-sorted into dataset order before any accumulation.
pub fn evaluate<T: Scalar>(
    model: &GfNet<T>,
    cache: &FeatureCache,
    rows: &[usize],
    norm: &Normalizer,
    mode: FusionMode,
) -> Result<EvalReport> {
    if rows.is_empty() {
        return Err(Error::Config("no samples to evaluate".into()));
    }
    let mut rows = rows.to_vec();
    rows.sort_unstable();
    let (preds, gates) = predict(model, cache, &rows, norm, mode)?;

    let k = cache.n_classes();
    let labels: Vec<usize> = rows.iter().map(|&r| cache.labels[r]).collect();
    let confusion = ConfusionMatrix::from_pairs(&labels, &preds, k)?;
    let all: Vec<usize> = (0..k).collect();
    let macro_f1 = confusion.macro_f1(&all)?;

    let mut family_f1 = Vec::new();
    for (fam, ids) in family_groups() {
        let members: Vec<usize> = ids
            .iter()
            .filter_map(|&id| cache.class_ids.iter().position(|&c| c as usize == id))
            .collect();
        if !members.is_empty() {
            family_f1.push((fam.name(), confusion.macro_f1(&members)?));
        }
    }

    let mut buckets = Vec::new();
    for &jsr in &cache.jsr_grid {
        let mut n = 0;
        let mut correct = 0;
        let mut per_class = vec![(0usize, 0usize); k];
        let mut g_vals = Vec::new();
        let mut s_vals = Vec::new();
        for ((&r, &p), gate) in rows.iter().zip(&preds).zip(&gates) {
            if cache.jsr_db[r] != jsr {
                continue;
            }
            let t = cache.labels[r];
            n += 1;
            per_class[t].0 += 1;
            if p == t {
                correct += 1;
                per_class[t].1 += 1;
            }
            g_vals.push(gate.g);
            s_vals.push(gate.s);
        }
        buckets.push(BucketReport {
            jsr_db: jsr,
            n,
            correct,
            per_class,
            g: GateStats::from_values(g_vals),
            s: GateStats::from_values(s_vals),
        });
    }
    let counted: usize = buckets.iter().map(|b| b.n).sum();
    if counted != rows.len() {
        return Err(Error::Manifest(format!(
            "{} of {} evaluated records carry a JSR outside the manifest grid",
            rows.len() - counted,
            rows.len()
        )));
    }

    Ok(EvalReport {
        n: rows.len(),
        correct: labels.iter().zip(&preds).filter(|&(t, p)| t == p).count(),
        confusion,
        macro_f1,
        family_f1,
        buckets,
        class_names: (0..k).map(|l| cache.class_name(l)).collect(),
    })
}

/// Gate distributions per JSR bucket. Both gates read only the
/// descriptor vector, so this skips the encoders entirely.
#[derive(Debug, Clone, PartialEq)]
pub struct GateBucket {
    pub jsr_db: f64,
    pub n: usize,
    pub g: GateStats,
    pub s: GateStats,
}

pub fn gate_report<T: Scalar>(
    model: &GfNet<T>,
    cache: &FeatureCache,
    rows: &[usize],
    norm: &Normalizer,
) -> Result<Vec<GateBucket>> {
    if rows.is_empty() {
        return Err(Error::Config("no samples for the gate report".into()));
    }
    let mut rows = rows.to_vec();
    rows.sort_unstable();
    let mut stats = Tensor::<T>::zeros(vec![rows.len(), STATS_DIM]);
    for (i, &r) in rows.iter().enumerate() {
        let z = norm.apply(cache.stats[r]);
        for (dst, &v) in stats.data[i * STATS_DIM..(i + 1) * STATS_DIM].iter_mut().zip(&z) {
            *dst = T::from_f64(v);
        }
    }
    let (g, _) = model.gate_values(&stats)?;
    let (s, _) = model.aux_values(&stats)?;

    let mut out = Vec::new();
    let mut counted = 0;
    for &jsr in &cache.jsr_grid {
        let mut g_vals = Vec::new();
        let mut s_vals = Vec::new();
        for (i, &r) in rows.iter().enumerate() {
            if cache.jsr_db[r] == jsr {
                g_vals.push(g[i].to_f64());
                s_vals.push(s[i].to_f64());
            }
        }
        counted += g_vals.len();
        out.push(GateBucket {
            jsr_db: jsr,
            n: g_vals.len(),
            g: GateStats::from_values(g_vals),
            s: GateStats::from_values(s_vals),
        });
    }
    if counted != rows.len() {
        return Err(Error::Manifest(format!(
            "{} of {} records carry a JSR outside the manifest grid",
            rows.len() - counted,
            rows.len()
        )));
    }
    Ok(out)
}

pub fn gate_buckets_csv(buckets: &[GateBucket]) -> String {
    gate_csv_rows(buckets.iter().map(|b| (b.jsr_db, b.n, &b.g, &b.s)))
}

//! Structural checks behind the dual-gate fusion design.
//!
//! Two executable demonstrations:
//!
//! 1. **Magnitude ambiguity** ([`ambiguity_demo`]): pulse-shaped QAM and
//!    band-limited Gaussian noise of matched occupied bandwidth produce
//!    nearly identical averaged magnitude spectrograms, while their
//!    complex fourth-moment ratios stay far apart. Magnitude-only
//!    time-frequency features are blind to a distinction the raw IQ
//!    stream carries.
//! 2. **Strength-dependent reliability** ([`reliability_curve`]): a
//!    fixed low-dimensional summary of each modality is scored by a
//!    symmetrized Gaussian-approximation KL divergence between class
//!    pairs. The IQ and spectrogram scores move in opposite directions
//!    as interference strength grows, and the induced optimal fusion
//!    weight [`optimal_alpha`] shifts accordingly.
//!
//! Everything here is deterministic: snapshot seeds derive from fixed
//! tags, and the KL estimator is closed-form on fitted moments.

use rayon::prelude::*;

use crate::dataset::fnv1a;
use crate::features::{snapshot_spectrogram, stft, LOG_FLOOR};
use crate::signal::{
    compose_snapshot, synth_awgn, synth_blgni, synth_dmi, synth_gnss_ca, ComplexSignal,
    Constellation, LinkBudget, CLASS_TABLE, N_CLASSES, ROLLOFF, SNAPSHOT_LEN, SYMBOL_RATE_HZ,
};
use crate::{Error, Result};
use num_complex::Complex64;

/// Covariance ridge added before every KL factorization, recorded in
/// reports alongside the scores.
pub const KL_RIDGE: f64 = 1e-6;

/// Two-sided occupied bandwidth of the pulse-shaped QAM jammers:
/// symbol rate times (1 + rolloff). The ambiguity demo's noise generator
/// uses this as its cutoff so both processes fill the same band.
pub fn matched_noise_bandwidth_hz() -> f64 {
    SYMBOL_RATE_HZ * (1.0 + ROLLOFF)
}

fn demo_seed(tag: &str, i: usize) -> u64 {
    fnv1a(format!("{tag}/{i}").as_bytes())
}

/// Composite receiver snapshot `r = s + sqrt(P_J) j + w` with an
/// arbitrary jammer waveform (or none), quantized through f32 exactly
/// like the dataset path.
fn composite(jam: Option<&ComplexSignal>, jsr_db: f64, seed: u64) -> Result<ComplexSignal> {
    let budget = LinkBudget::new(jsr_db)?;
    let sat = synth_gnss_ca(seed);
    let noise = synth_awgn(budget.noise_power_rel(), seed);
    let aj = budget.jamming_power_rel().sqrt();
    let samples: Vec<Complex64> = (0..SNAPSHOT_LEN)
        .map(|n| {
            let j = jam.map_or(Complex64::new(0.0, 0.0), |j| j.samples[n] * aj);
            let z = sat.samples[n] + j + noise.samples[n];
            Complex64::new(z.re as f32 as f64, z.im as f32 as f64)
        })
        .collect();
    ComplexSignal::new(samples)
}

fn qam_snapshot(jsr_db: f64, seed: u64) -> Result<ComplexSignal> {
    let jam = synth_dmi(Constellation::Qam64, seed);
    composite(Some(&jam), jsr_db, seed)
}

fn matched_noise_snapshot(jsr_db: f64, seed: u64) -> Result<ComplexSignal> {
    let jam = synth_blgni(matched_noise_bandwidth_hz(), seed);
    composite(Some(&jam), jsr_db, seed)
}

fn awgn_snapshot(seed: u64) -> Result<ComplexSignal> {
    // The budget's JSR is irrelevant without a jammer; any in-range
    // value selects the same noise power.
    composite(None, 40.0, seed)
}

fn batch(
    n: usize,
    tag: &str,
    make: impl Fn(u64) -> Result<ComplexSignal> + Sync,
) -> Result<Vec<ComplexSignal>> {
    (0..n).into_par_iter().map(|i| make(demo_seed(tag, i))).collect()
}

/// Mean log power spectrogram of a batch, frame-major, then min-max
/// normalized to [0, 1] (average first, normalize once).
fn mean_log_psd(snapshots: &[ComplexSignal]) -> Result<Vec<f64>> {
    let mut acc: Vec<f64> = Vec::new();
    for s in snapshots {
        let m = stft(s)?;
        if acc.is_empty() {
            acc = vec![0.0; m.values.len()];
        }
        for (a, v) in acc.iter_mut().zip(&m.values) {
            *a += v.norm_sqr().max(LOG_FLOOR).ln();
        }
    }
    let scale = 1.0 / snapshots.len() as f64;
    for a in &mut acc {
        *a *= scale;
    }
    minmax_norm(&mut acc);
    Ok(acc)
}

fn minmax_norm(v: &mut [f64]) {
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi > lo {
        for x in v.iter_mut() {
            *x = (*x - lo) / (hi - lo);
        }
    } else {
        v.fill(0.0);
    }
}

/// Relative L2 distance: `|a - b| / (0.5 (|a| + |b|))`.
fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / (0.5 * (na + nb))
}

/// Fourth-moment ratio `E|x|^4 / (E|x|^2)^2` pooled over a batch.
/// Cauchy-Schwarz puts it at >= 1 for any distribution; a circular
/// Gaussian sits at exactly 2.
fn pooled_kurtosis(snapshots: &[ComplexSignal]) -> f64 {
    let mut p2 = 0.0;
    let mut p4 = 0.0;
    let mut n = 0usize;
    for s in snapshots {
        for z in &s.samples {
            let m2 = z.norm_sqr();
            p2 += m2;
            p4 += m2 * m2;
            n += 1;
        }
    }
    p4 * n as f64 / (p2 * p2)
}

fn sample_kurtosis(s: &ComplexSignal) -> f64 {
    let mut p2 = 0.0;
    let mut p4 = 0.0;
    for z in &s.samples {
        let m2 = z.norm_sqr();
        p2 += m2;
        p4 += m2 * m2;
    }
    p4 * s.samples.len() as f64 / (p2 * p2)
}

/// Outcome of the magnitude-ambiguity demonstration at one JSR.
#[derive(Debug, Clone, PartialEq)]
pub struct AmbiguityResult {
    pub jsr_db: f64,
    /// Snapshots per batch.
    pub n: usize,
    /// Relative L2 between the batch-averaged normalized log
    /// spectrograms of QAM and bandwidth-matched Gaussian noise.
    pub spectrogram_distance: f64,
    /// Same statistic between two independent jamming-free batches;
    /// the scale of distance expected from estimation noise alone.
    pub awgn_self_distance: f64,
    /// Pooled fourth-moment ratio of the QAM composites.
    pub iq_kurtosis_qam: f64,
    /// Pooled fourth-moment ratio of the noise composites.
    pub iq_kurtosis_noise: f64,
}

impl AmbiguityResult {
    pub fn kurtosis_gap(&self) -> f64 {
        (self.iq_kurtosis_noise - self.iq_kurtosis_qam).abs()
    }
}

/// Runs the ambiguity demonstration: `n` composite snapshots per
/// process, averaged magnitude spectrograms compared against an
/// AWGN-only self-distance control, fourth-moment ratios reported.
pub fn ambiguity_demo(jsr_db: f64, n: usize) -> Result<AmbiguityResult> {
    if n == 0 {
        return Err(Error::Config("ambiguity demo needs at least one snapshot".into()));
    }
    let qam = batch(n, "ambiguity/qam", |s| qam_snapshot(jsr_db, s))?;
    let noise = batch(n, "ambiguity/noise", |s| matched_noise_snapshot(jsr_db, s))?;
    let ctrl_a = batch(n, "ambiguity/awgn-a", awgn_snapshot)?;
    let ctrl_b = batch(n, "ambiguity/awgn-b", awgn_snapshot)?;

    let psd_qam = mean_log_psd(&qam)?;
    let psd_noise = mean_log_psd(&noise)?;
    let psd_a = mean_log_psd(&ctrl_a)?;
    let psd_b = mean_log_psd(&ctrl_b)?;

    Ok(AmbiguityResult {
        jsr_db,
        n,
        spectrogram_distance: rel_l2(&psd_qam, &psd_noise),
        awgn_self_distance: rel_l2(&psd_a, &psd_b),
        iq_kurtosis_qam: pooled_kurtosis(&qam),
        iq_kurtosis_noise: pooled_kurtosis(&noise),
    })
}

/// Resubstitution accuracies of two single-feature threshold
/// classifiers on the QAM-vs-matched-noise batches: per-snapshot
/// fourth-moment ratio (midpoint threshold) versus nearest
/// mean-spectrogram template. Returns `(kurtosis_acc, template_acc)`.
pub fn ambiguity_classifier_duel(jsr_db: f64, n: usize) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::Config("classifier duel needs at least one snapshot".into()));
    }
    let qam = batch(n, "ambiguity/qam", |s| qam_snapshot(jsr_db, s))?;
    let noise = batch(n, "ambiguity/noise", |s| matched_noise_snapshot(jsr_db, s))?;

    let kq: Vec<f64> = qam.iter().map(sample_kurtosis).collect();
    let kn: Vec<f64> = noise.iter().map(sample_kurtosis).collect();
    let mq = kq.iter().sum::<f64>() / n as f64;
    let mn = kn.iter().sum::<f64>() / n as f64;
    let thr = 0.5 * (mq + mn);
    // QAM pulse trains are sub-Gaussian, so class-by-kurtosis means
    // "below threshold is QAM" (and the reverse if the gap flips).
    let qam_low = mq < mn;
    let kurt_hits = kq.iter().filter(|&&k| (k < thr) == qam_low).count()
        + kn.iter().filter(|&&k| (k >= thr) == qam_low).count();

    let tq = mean_log_psd(&qam)?;
    let tn = mean_log_psd(&noise)?;
    let classify = |s: &ComplexSignal, own: &[f64], other: &[f64]| -> Result<bool> {
        let mut m: Vec<f64> = stft(s)?.values.iter().map(|v| v.norm_sqr().max(LOG_FLOOR).ln()).collect();
        minmax_norm(&mut m);
        Ok(rel_l2(&m, own) <= rel_l2(&m, other))
    };
    let mut tmpl_hits = 0usize;
    for s in &qam {
        tmpl_hits += classify(s, &tq, &tn)? as usize;
    }
    for s in &noise {
        tmpl_hits += classify(s, &tn, &tq)? as usize;
    }

    Ok((kurt_hits as f64 / (2 * n) as f64, tmpl_hits as f64 / (2 * n) as f64))
}

pub fn ambiguity_csv(results: &[AmbiguityResult]) -> String {
    let mut out = String::from(
        "jsr_db,n,spectrogram_distance,awgn_self_distance,kurtosis_qam,kurtosis_noise,kurtosis_gap\n",
    );
    for r in results {
        out.push_str(&format!(
            "{},{},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
            r.jsr_db,
            r.n,
            r.spectrogram_distance,
            r.awgn_self_distance,
            r.iq_kurtosis_qam,
            r.iq_kurtosis_noise,
            r.kurtosis_gap()
        ));
    }
    out
}

pub fn ambiguity_verdict(r: &AmbiguityResult) -> String {
    format!(
        "ambiguity check at {} dB ({} snapshots per batch):\n\
           averaged spectrogram distance QAM vs matched noise: {:.4}\n\
           AWGN-only self-distance control:                    {:.4}\n\
           fourth-moment ratio: QAM {:.3} vs noise {:.3} (gap {:.3})\n\
           magnitude spectrograms {} the two processes; the IQ fourth moment separates them.\n",
        r.jsr_db,
        r.n,
        r.spectrogram_distance,
        r.awgn_self_distance,
        r.iq_kurtosis_qam,
        r.iq_kurtosis_noise,
        r.kurtosis_gap(),
        if r.spectrogram_distance <= 2.0 * r.awgn_self_distance {
            "do not distinguish"
        } else {
            "still partially distinguish"
        }
    )
}

/// Which modality summary feeds the discriminability estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureSet {
    /// Per-snapshot `[fourth-moment ratio, envelope std / envelope mean]`.
    Iq,
    /// Eight largest cells of the 8x8 mean-pooled normalized spectrogram,
    /// sorted descending.
    Stft,
}

fn iq_summary(s: &ComplexSignal) -> Vec<f64> {
    let n = s.samples.len() as f64;
    let mut sum = 0.0;
    let mut sum2 = 0.0;
    for z in &s.samples {
        let a = z.norm();
        sum += a;
        sum2 += a * a;
    }
    let mean = sum / n;
    let var = (sum2 / n - mean * mean).max(0.0);
    vec![sample_kurtosis(s), var.sqrt() / mean]
}

const POOL_GRID: usize = 8;
const TOP_K: usize = 8;

fn stft_summary(s: &ComplexSignal) -> Result<Vec<f64>> {
    let img = snapshot_spectrogram(s)?;
    let block = img.rows / POOL_GRID;
    debug_assert_eq!(img.rows % POOL_GRID, 0);
    let mut cells = Vec::with_capacity(POOL_GRID * POOL_GRID);
    for br in 0..POOL_GRID {
        for bc in 0..POOL_GRID {
            let mut acc = 0.0;
            for r in br * block..(br + 1) * block {
                for c in bc * block..(bc + 1) * block {
                    acc += img.at(r, c);
                }
            }
            cells.push(acc / (block * block) as f64);
        }
    }
    cells.sort_by(|a, b| b.total_cmp(a));
    cells.truncate(TOP_K);
    Ok(cells)
}

/// Lower-triangular Cholesky factor of a symmetric positive-definite
/// matrix (row-major). Fails on a non-positive pivot.
fn cholesky(a: &[f64], d: usize) -> Result<Vec<f64>> {
    let mut l = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let mut s = a[i * d + j];
            for k in 0..j {
                s -= l[i * d + k] * l[j * d + k];
            }
            if i == j {
                if s <= 0.0 {
                    return Err(Error::Numeric(format!(
                        "covariance not positive definite (pivot {s:.3e} at {i})"
                    )));
                }
                l[i * d + i] = s.sqrt();
            } else {
                l[i * d + j] = s / l[j * d + j];
            }
        }
    }
    Ok(l)
}

/// Solves `A x = b` in place given A's Cholesky factor.
fn chol_solve(l: &[f64], d: usize, b: &mut [f64]) {
    for i in 0..d {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * d + k] * b[k];
        }
        b[i] = s / l[i * d + i];
    }
    for i in (0..d).rev() {
        let mut s = b[i];
        for k in i + 1..d {
            s -= l[k * d + i] * b[k];
        }
        b[i] = s / l[i * d + i];
    }
}

fn chol_logdet(l: &[f64], d: usize) -> f64 {
    2.0 * (0..d).map(|i| l[i * d + i].ln()).sum::<f64>()
}

fn gaussian_kl(mu_p: &[f64], cov_p: &[f64], mu_q: &[f64], l_q: &[f64], logdet_p: f64, logdet_q: f64) -> f64 {
    let d = mu_p.len();
    let mut trace = 0.0;
    for j in 0..d {
        let mut col: Vec<f64> = (0..d).map(|i| cov_p[i * d + j]).collect();
        chol_solve(l_q, d, &mut col);
        trace += col[j];
    }
    let mut m: Vec<f64> = mu_p.iter().zip(mu_q).map(|(a, b)| a - b).collect();
    let m0 = m.clone();
    chol_solve(l_q, d, &mut m);
    let maha: f64 = m0.iter().zip(&m).map(|(a, b)| a * b).sum();
    0.5 * (trace + maha - d as f64 + logdet_q - logdet_p)
}

/// Symmetrized KL divergence between two Gaussians,
/// `0.5 (KL(a||b) + KL(b||a))`, with `ridge` added to both covariance
/// diagonals before factorization.
pub fn symmetric_gaussian_kl(
    mu_a: &[f64],
    cov_a: &[f64],
    mu_b: &[f64],
    cov_b: &[f64],
    ridge: f64,
) -> Result<f64> {
    let d = mu_a.len();
    if mu_b.len() != d || cov_a.len() != d * d || cov_b.len() != d * d {
        return Err(Error::Shape("mean/covariance dimensions disagree".into()));
    }
    let mut ca = cov_a.to_vec();
    let mut cb = cov_b.to_vec();
    for i in 0..d {
        ca[i * d + i] += ridge;
        cb[i * d + i] += ridge;
    }
    let la = cholesky(&ca, d)?;
    let lb = cholesky(&cb, d)?;
    let (lda, ldb) = (chol_logdet(&la, d), chol_logdet(&lb, d));
    let kl_ab = gaussian_kl(mu_a, &ca, mu_b, &lb, lda, ldb);
    let kl_ba = gaussian_kl(mu_b, &cb, mu_a, &la, ldb, lda);
    // Mathematically >= 0; rounding in the triangular solves can leave
    // a last-ulp negative on (near-)identical inputs.
    Ok((0.5 * (kl_ab + kl_ba)).max(0.0))
}

fn fit_gaussian(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let n = rows.len() as f64;
    let d = rows[0].len();
    let mut mu = vec![0.0; d];
    for r in rows {
        for (m, v) in mu.iter_mut().zip(r) {
            *m += v;
        }
    }
    for m in &mut mu {
        *m /= n;
    }
    let mut cov = vec![0.0; d * d];
    for r in rows {
        for i in 0..d {
            for j in 0..d {
                cov[i * d + j] += (r[i] - mu[i]) * (r[j] - mu[j]);
            }
        }
    }
    for c in &mut cov {
        *c /= n;
    }
    (mu, cov)
}

/// Discriminability of two labelled summary batches: fit a Gaussian to
/// each and return their symmetrized KL (ridge [`KL_RIDGE`]).
pub fn discriminability_from_summaries(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<f64> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::Config("need at least two summaries per class".into()));
    }
    let (mu_a, cov_a) = fit_gaussian(a);
    let (mu_b, cov_b) = fit_gaussian(b);
    symmetric_gaussian_kl(&mu_a, &cov_a, &mu_b, &cov_b, KL_RIDGE)
}

fn class_summaries(set: FeatureSet, jsr_db: f64, class_id: u8, n: usize) -> Result<Vec<Vec<f64>>> {
    if class_id as usize >= N_CLASSES {
        return Err(Error::Config(format!("class id {class_id} out of range")));
    }
    let class = &CLASS_TABLE[class_id as usize];
    let budget = LinkBudget::new(jsr_db)?;
    (0..n)
        .into_par_iter()
        .map(|i| {
            let rec = compose_snapshot(class, &budget, i as u32)?;
            match set {
                FeatureSet::Iq => Ok(iq_summary(&rec.signal)),
                FeatureSet::Stft => stft_summary(&rec.signal),
            }
        })
        .collect()
}

/// Discriminative information one modality's summary carries about a
/// class pair at one JSR, from `n >= 50` snapshots per class.
pub fn discriminability(
    set: FeatureSet,
    jsr_db: f64,
    class_pair: (u8, u8),
    n: usize,
) -> Result<f64> {
    if n < 50 {
        return Err(Error::Config(format!("need at least 50 snapshots per class, got {n}")));
    }
    let a = class_summaries(set, jsr_db, class_pair.0, n)?;
    let b = class_summaries(set, jsr_db, class_pair.1, n)?;
    discriminability_from_summaries(&a, &b)
}

/// Optimal fusion weight for the IQ stream given both discriminability
/// scores: `alpha* = R_I / (R_I + R_S)`.
///
/// The branch below computes the same real number either way; routing
/// the larger argument through the complement makes
/// `optimal_alpha(a, b) + optimal_alpha(b, a) == 1` hold bitwise.
pub fn optimal_alpha(r_iq: f64, r_stft: f64) -> Result<f64> {
    if !(r_iq >= 0.0 && r_stft >= 0.0) {
        return Err(Error::Config(format!("negative reliability: ({r_iq}, {r_stft})")));
    }
    if r_iq + r_stft == 0.0 {
        return Err(Error::Config("both reliabilities are zero".into()));
    }
    Ok(if r_iq <= r_stft {
        r_iq / (r_iq + r_stft)
    } else {
        1.0 - r_stft / (r_iq + r_stft)
    })
}

/// One JSR point of the reliability curve.
#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityPoint {
    pub jsr_db: f64,
    pub r_iq: f64,
    pub r_stft: f64,
    pub alpha_star: f64,
}

/// Evaluates both modalities on a class pair across a JSR list.
pub fn reliability_curve(
    jsr_levels_db: &[f64],
    class_pair: (u8, u8),
    n: usize,
) -> Result<Vec<ReliabilityPoint>> {
    jsr_levels_db
        .iter()
        .map(|&jsr| {
            let r_iq = discriminability(FeatureSet::Iq, jsr, class_pair, n)?;
            let r_stft = discriminability(FeatureSet::Stft, jsr, class_pair, n)?;
            let alpha_star = optimal_alpha(r_iq, r_stft)?;
            Ok(ReliabilityPoint { jsr_db: jsr, r_iq, r_stft, alpha_star })
        })
        .collect()
}

pub fn reliability_csv(points: &[ReliabilityPoint]) -> String {
    let mut out = format!("# symmetrized Gaussian KL on fixed summaries, ridge {KL_RIDGE:e}\n");
    out.push_str("jsr_db,r_iq,r_stft,alpha_star\n");
    for p in points {
        out.push_str(&format!(
            "{},{:.6},{:.6},{:.6}\n",
            p.jsr_db, p.r_iq, p.r_stft, p.alpha_star
        ));
    }
    out
}

pub fn reliability_verdict(points: &[ReliabilityPoint]) -> String {
    let mut out = format!(
        "modality reliability (symmetrized Gaussian KL, ridge {KL_RIDGE:e}; \
         alpha* = R_iq / (R_iq + R_stft), equality reading of the proportionality):\n"
    );
    for p in points {
        let lead = if p.r_iq > p.r_stft { "IQ leads" } else { "spectrogram leads" };
        out.push_str(&format!(
            "  {:>5} dB: R_iq {:.4}, R_stft {:.4}, alpha* {:.3} ({lead})\n",
            p.jsr_db, p.r_iq, p.r_stft, p.alpha_star
        ));
    }
    if points.len() >= 2 {
        let first = &points[0];
        let last = &points[points.len() - 1];
        out.push_str(&format!(
            "  alpha* moves {:.3} -> {:.3} from {} dB to {} dB\n",
            first.alpha_star, last.alpha_star, first.jsr_db, last.jsr_db
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prng::Stream;
    use crate::signal::constellation_points;

    #[test]
    fn qam64_symbol_kurtosis_enumerated() {
        let pts = constellation_points(Constellation::Qam64);
        let n = pts.len() as f64;
        let p2: f64 = pts.iter().map(|z| z.norm_sqr()).sum::<f64>() / n;
        let p4: f64 = pts.iter().map(|z| z.norm_sqr().powi(2)).sum::<f64>() / n;
        let kurt = p4 / (p2 * p2);
        // Exact moment ratio of the square 64-point grid.
        assert!((kurt - 29.0 / 21.0).abs() < 1e-12, "kurtosis {kurt}");
        // Strictly separated from the circular-Gaussian value 2.
        assert!(kurt < 1.9);
        // A large Gaussian draw lands near 2.
        let mut rng = Stream::from_raw(31);
        let zs: Vec<Complex64> = (0..200_000).map(|_| rng.standard_complex()).collect();
        let p2: f64 = zs.iter().map(|z| z.norm_sqr()).sum::<f64>() / zs.len() as f64;
        let p4: f64 = zs.iter().map(|z| z.norm_sqr().powi(2)).sum::<f64>() / zs.len() as f64;
        assert!((p4 / (p2 * p2) - 2.0).abs() < 0.05);
    }

    #[test]
    fn ambiguity_demo_invariants_and_reproducibility() {
        let r = ambiguity_demo(40.0, 12).unwrap();
        assert!(r.spectrogram_distance >= 0.0);
        assert!(r.awgn_self_distance > 0.0);
        assert!(r.iq_kurtosis_qam >= 1.0);
        assert!(r.iq_kurtosis_noise >= 1.0);
        assert!(r.kurtosis_gap() > 0.2, "gap {}", r.kurtosis_gap());
        let again = ambiguity_demo(40.0, 12).unwrap();
        assert_eq!(r, again);
        let csv = ambiguity_csv(&[r.clone()]);
        assert!(csv.lines().count() == 2);
        assert!(ambiguity_verdict(&r).contains("fourth-moment"));
    }

    #[test]
    fn awgn_control_batches_look_alike() {
        // Two independent jamming-free pairs: their self-distances are
        // the same statistic, so neither should dwarf the other.
        let a = batch(10, "ctrl/a", awgn_snapshot).unwrap();
        let b = batch(10, "ctrl/b", awgn_snapshot).unwrap();
        let c = batch(10, "ctrl/c", awgn_snapshot).unwrap();
        let d = batch(10, "ctrl/d", awgn_snapshot).unwrap();
        let ab = rel_l2(&mean_log_psd(&a).unwrap(), &mean_log_psd(&b).unwrap());
        let cd = rel_l2(&mean_log_psd(&c).unwrap(), &mean_log_psd(&d).unwrap());
        assert!(ab > 0.0 && cd > 0.0);
        let ratio = ab / cd;
        assert!((0.25..4.0).contains(&ratio), "self-distance ratio {ratio}");
    }

    #[test]
    fn kurtosis_beats_spectrogram_templates_at_high_jsr() {
        let (kurt_acc, tmpl_acc) = ambiguity_classifier_duel(40.0, 16).unwrap();
        assert!(
            kurt_acc > tmpl_acc,
            "kurtosis classifier {kurt_acc} vs template classifier {tmpl_acc}"
        );
        assert!(kurt_acc > 0.9, "kurtosis classifier only {kurt_acc}");
    }

    #[test]
    fn gaussian_kl_closed_form_oracle() {
        // Unit covariances, means t apart: symmetric KL = t^2 / 2.
        for t in [0.5, 1.0, 2.0, 4.0] {
            let r = symmetric_gaussian_kl(
                &[0.0, 0.0],
                &[1.0, 0.0, 0.0, 1.0],
                &[t, 0.0],
                &[1.0, 0.0, 0.0, 1.0],
                0.0,
            )
            .unwrap();
            assert!((r - t * t / 2.0).abs() < 1e-12, "t {t}: {r}");
        }
        // Identical Gaussians: zero.
        let z = symmetric_gaussian_kl(&[1.0], &[2.0], &[1.0], &[2.0], 0.0).unwrap();
        assert_eq!(z, 0.0);
        // Strictly increasing as means separate with covariances fixed.
        let mut prev = -1.0;
        for k in 0..8 {
            let t = k as f64 * 0.5;
            let r = symmetric_gaussian_kl(&[0.0], &[1.0], &[t], &[1.0], 0.0).unwrap();
            assert!(r > prev);
            prev = r;
        }
    }

    #[test]
    fn ridge_rescues_singular_covariance() {
        let singular = [1.0, 1.0, 1.0, 1.0];
        assert!(symmetric_gaussian_kl(&[0.0, 0.0], &singular, &[1.0, 1.0], &singular, 0.0).is_err());
        let r =
            symmetric_gaussian_kl(&[0.0, 0.0], &singular, &[1.0, 1.0], &singular, KL_RIDGE).unwrap();
        assert!(r.is_finite() && r > 0.0);
    }

    #[test]
    fn same_distribution_summaries_score_near_zero() {
        let mut rng = Stream::from_raw(404);
        let draw = |rng: &mut Stream| {
            (0..400)
                .map(|_| vec![rng.standard_normal(), 2.0 + 0.5 * rng.standard_normal()])
                .collect::<Vec<_>>()
        };
        let a = draw(&mut rng);
        let b = draw(&mut rng);
        let r = discriminability_from_summaries(&a, &b).unwrap();
        assert!(r < 0.05, "same-distribution score {r}");
        // Pushing the means apart with the same covariance raises it.
        let shifted: Vec<Vec<f64>> = b.iter().map(|v| vec![v[0] + 3.0, v[1]]).collect();
        let r2 = discriminability_from_summaries(&a, &shifted).unwrap();
        assert!(r2 > 1.0 && r2 > r);
    }

    #[test]
    fn discriminability_is_symmetric_in_the_pair() {
        let a = discriminability(FeatureSet::Iq, 50.0, (5, 20), 50).unwrap();
        let b = discriminability(FeatureSet::Iq, 50.0, (20, 5), 50).unwrap();
        assert!((a - b).abs() < 1e-12);
        assert!(a >= 0.0);
        assert!(discriminability(FeatureSet::Iq, 50.0, (5, 20), 10).is_err());
    }

    #[test]
    fn optimal_alpha_identities() {
        assert_eq!(optimal_alpha(3.0, 1.0).unwrap(), 0.75);
        for r in [1e-9, 0.1, 0.3, 7.7, 1e6] {
            assert_eq!(optimal_alpha(r, r).unwrap(), 0.5);
        }
        let mut rng = Stream::from_raw(77);
        for _ in 0..200 {
            let a = rng.uniform_in(0.0, 10.0);
            let b = rng.uniform_in(1e-6, 10.0);
            let sum = optimal_alpha(a, b).unwrap() + optimal_alpha(b, a).unwrap();
            assert_eq!(sum, 1.0, "complement identity broke at ({a}, {b})");
        }
        // Monotone in the first argument on a grid.
        let mut prev = -1.0;
        for k in 0..50 {
            let alpha = optimal_alpha(k as f64 * 0.2, 3.0).unwrap();
            assert!(alpha >= prev);
            prev = alpha;
        }
        assert!(optimal_alpha(0.0, 0.0).is_err());
        assert!(optimal_alpha(-1.0, 2.0).is_err());
    }

    #[test]
    fn reliability_rows_and_rendering() {
        let pts = vec![
            ReliabilityPoint { jsr_db: 10.0, r_iq: 0.02, r_stft: 0.17, alpha_star: 0.105 },
            ReliabilityPoint { jsr_db: 50.0, r_iq: 190.0, r_stft: 4.0, alpha_star: 0.979 },
        ];
        let csv = reliability_csv(&pts);
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.contains("jsr_db,r_iq,r_stft,alpha_star"));
        assert!(csv.contains("ridge"));
        let verdict = reliability_verdict(&pts);
        assert!(verdict.contains("spectrogram leads"));
        assert!(verdict.contains("IQ leads"));
    }
}

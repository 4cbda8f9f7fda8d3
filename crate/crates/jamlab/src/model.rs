//! The interference classifier: a complex-valued residual encoder for
//! raw IQ, a depthwise-separable SE encoder for spectrograms, and a
//! dual-gate fusion head driven by the statistical descriptor vector.
//!
//! Gate `g` arbitrates between the two deep streams; gate `s` injects a
//! processed copy of the statistics directly into the fused feature.
//! Both are sigmoid outputs of small heads fed only by the (z-scored)
//! statistics, so for a fixed parameter set they depend on nothing else.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::features::StatsVector;
use crate::nn::{
    crelu, crelu_backward, gap, gap_backward, modulus, modulus_backward, relu, relu_backward,
    sigmoid_scalar, BatchNorm, BnCache, CBnCache, ComplexBatchNorm, ComplexTensor, Conv1dComplex,
    Conv2d, DepthwiseConv2d, Dropout, Linear, ParamRefs, Scalar, SeBlock, SeCache, Tensor,
};
use crate::prng::Stream;
use crate::{Error, Result};

/// Length of the statistics vector feeding both gates.
pub const STATS_DIM: usize = StatsVector::DIM;

/// Architecture hyperparameters. The defaults are the desk-scale build;
/// `paper_scale` restores the full-width encoders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub iq_feature_dim: usize,
    pub stft_feature_dim: usize,
    pub fusion_dim: usize,
    pub n_classes: usize,
    pub input_len: usize,
    pub image_size: usize,
    pub iq_stem_channels: usize,
    pub iq_stem_kernel: usize,
    pub iq_stem_stride: usize,
    /// Residual stages as [mid_channels, out_channels, stride].
    pub iq_stages: Vec<[usize; 3]>,
    pub stft_stem_channels: usize,
    /// Separable stages as [out_channels, stride].
    pub stft_stages: Vec<[usize; 2]>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            iq_feature_dim: 128,
            stft_feature_dim: 160,
            fusion_dim: 256,
            n_classes: crate::signal::N_CLASSES,
            input_len: crate::signal::SNAPSHOT_LEN,
            image_size: crate::features::IMAGE_SIZE,
            iq_stem_channels: 12,
            iq_stem_kernel: 16,
            iq_stem_stride: 16,
            iq_stages: vec![[16, 16, 2], [20, 24, 2], [24, 32, 2], [48, 128, 2]],
            stft_stem_channels: 12,
            stft_stages: vec![[24, 2], [48, 2], [96, 2], [160, 1]],
        }
    }
}

impl ModelConfig {
    /// Full-width encoders matching the published architecture sizes.
    pub fn paper_scale() -> Self {
        ModelConfig {
            iq_feature_dim: 1024,
            stft_feature_dim: 1280,
            iq_stem_channels: 32,
            iq_stages: vec![[64, 64, 2], [96, 128, 2], [192, 256, 2], [384, 1024, 2]],
            stft_stem_channels: 32,
            stft_stages: vec![[64, 2], [128, 2], [320, 2], [1280, 1]],
            ..ModelConfig::default()
        }
    }

    /// Miniature configuration for fast self-checks and gradient
    /// certification; small enough for exhaustive finite differences.
    pub fn tiny() -> Self {
        ModelConfig {
            iq_feature_dim: 10,
            stft_feature_dim: 12,
            fusion_dim: 256,
            n_classes: 3,
            input_len: 64,
            image_size: 16,
            iq_stem_channels: 4,
            iq_stem_kernel: 4,
            iq_stem_stride: 4,
            iq_stages: vec![[6, 8, 2], [8, 10, 2]],
            stft_stem_channels: 4,
            stft_stages: vec![[8, 2], [12, 1]],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.fusion_dim != 256 {
            return Err(Error::Config(format!("fusion_dim is fixed at 256, got {}", self.fusion_dim)));
        }
        if self.n_classes < 2 {
            return Err(Error::Config("need at least 2 classes".into()));
        }
        let positive = [
            self.iq_feature_dim,
            self.stft_feature_dim,
            self.input_len,
            self.image_size,
            self.iq_stem_channels,
            self.iq_stem_kernel,
            self.iq_stem_stride,
            self.stft_stem_channels,
        ];
        if positive.iter().any(|&v| v == 0) {
            return Err(Error::Config("model dimensions must be positive".into()));
        }
        if self.iq_stages.is_empty() || self.stft_stages.is_empty() {
            return Err(Error::Config("both encoders need at least one stage".into()));
        }
        if self.iq_stages.last().unwrap()[1] != self.iq_feature_dim {
            return Err(Error::Config("last IQ stage width must equal iq_feature_dim".into()));
        }
        if self.stft_stages.last().unwrap()[0] != self.stft_feature_dim {
            return Err(Error::Config("last STFT stage width must equal stft_feature_dim".into()));
        }
        if self.input_len < self.iq_stem_kernel {
            return Err(Error::Config("input shorter than the IQ stem kernel".into()));
        }
        // The temporal and spatial chains must stay non-empty.
        let mut l = (self.input_len - self.iq_stem_kernel) / self.iq_stem_stride + 1;
        for st in &self.iq_stages {
            if st.iter().any(|&v| v == 0) {
                return Err(Error::Config("IQ stage entries must be positive".into()));
            }
            if l + 2 < 3 {
                return Err(Error::Config("IQ feature map shrank to nothing".into()));
            }
            l = (l + 2 - 3) / st[2] + 1;
        }
        if self.image_size + 4 < 5 {
            return Err(Error::Config("image too small for the stem".into()));
        }
        let mut s = (self.image_size + 4 - 5) / 4 + 1;
        for st in &self.stft_stages {
            if st[0] == 0 || st[1] == 0 {
                return Err(Error::Config("STFT stage entries must be positive".into()));
            }
            s = (s + 2 - 3) / st[1] + 1;
            if s == 0 {
                return Err(Error::Config("STFT feature map shrank to nothing".into()));
            }
        }
        Ok(())
    }
}

/// Which streams participate in the forward pass. The forced modes are
/// the single-modality ablations: the dead encoder is skipped entirely.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FusionMode {
    Learned,
    IqOnly,
    StftOnly,
}

impl FusionMode {
    pub fn as_str(self) -> &'static str {
        match self {
            FusionMode::Learned => "learned",
            FusionMode::IqOnly => "iq_only",
            FusionMode::StftOnly => "stft_only",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "learned" => Ok(FusionMode::Learned),
            "iq_only" => Ok(FusionMode::IqOnly),
            "stft_only" => Ok(FusionMode::StftOnly),
            other => Err(Error::Config(format!(
                "unknown fusion mode {other:?} (expected learned|iq_only|stft_only)"
            ))),
        }
    }
}

/// Per-sample gate activations surfaced for analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateReadout {
    pub g: f64,
    pub s: f64,
}

/// Weighted blend of the two projected streams: g picks the
/// spectrogram side, 1-g the IQ side.
pub fn fuse_rows<T: Scalar>(g: T, p_iq: &[T], p_stft: &[T], out: &mut [T]) {
    let one_m = T::one() - g;
    for i in 0..out.len() {
        out[i] = g * p_stft[i] + one_m * p_iq[i];
    }
}

/// Auxiliary injection: fused features plus s-scaled processed stats.
pub fn inject_rows<T: Scalar>(s: T, z_fused: &[T], proc_v: &[T], out: &mut [T]) {
    for i in 0..out.len() {
        out[i] = z_fused[i] + s * proc_v[i];
    }
}

/// One residual stage of the IQ encoder: two k=3 complex convolutions
/// with plane-wise batch norm and crelu, plus a strided 1x1 complex
/// projection on the skip branch.
#[derive(Debug, Clone)]
pub struct IqStage<T> {
    pub conv1: Conv1dComplex<T>,
    pub bn1: ComplexBatchNorm<T>,
    pub conv2: Conv1dComplex<T>,
    pub bn2: ComplexBatchNorm<T>,
    pub skip: Conv1dComplex<T>,
    pub skip_bn: ComplexBatchNorm<T>,
}

#[derive(Debug)]
pub struct IqStageCache<T: Scalar> {
    bn1: CBnCache<T>,
    b1: ComplexTensor<T>,
    a1: ComplexTensor<T>,
    bn2: CBnCache<T>,
    bn_sk: CBnCache<T>,
    pre: ComplexTensor<T>,
}

impl<T: Scalar> IqStage<T> {
    fn new(c_in: usize, mid: usize, c_out: usize, stride: usize, rng: &mut Stream) -> Self {
        IqStage {
            conv1: Conv1dComplex::new(c_in, mid, 3, stride, 1, rng),
            bn1: ComplexBatchNorm::new(mid),
            conv2: Conv1dComplex::new(mid, c_out, 3, 1, 1, rng),
            bn2: ComplexBatchNorm::new(c_out),
            skip: Conv1dComplex::new(c_in, c_out, 1, stride, 0, rng),
            skip_bn: ComplexBatchNorm::new(c_out),
        }
    }

    fn forward_train(&mut self, x: &ComplexTensor<T>) -> Result<(ComplexTensor<T>, IqStageCache<T>)> {
        let c1 = self.conv1.forward(x)?;
        let (b1, bn1) = self.bn1.forward_train(&c1)?;
        let a1 = crelu(&b1);
        let c2 = self.conv2.forward(&a1)?;
        let (b2, bn2) = self.bn2.forward_train(&c2)?;
        let sk = self.skip.forward(x)?;
        let (bsk, bn_sk) = self.skip_bn.forward_train(&sk)?;
        let mut pre = b2;
        pre.add_assign(&bsk);
        let y = crelu(&pre);
        Ok((y, IqStageCache { bn1, b1, a1, bn2, bn_sk, pre }))
    }

    fn forward_eval(&self, x: &ComplexTensor<T>) -> Result<ComplexTensor<T>> {
        let a1 = crelu(&self.bn1.forward_eval(&self.conv1.forward(x)?)?);
        let mut pre = self.bn2.forward_eval(&self.conv2.forward(&a1)?)?;
        pre.add_assign(&self.skip_bn.forward_eval(&self.skip.forward(x)?)?);
        Ok(crelu(&pre))
    }

    fn backward(
        &mut self,
        x: &ComplexTensor<T>,
        cache: &IqStageCache<T>,
        dy: &ComplexTensor<T>,
    ) -> ComplexTensor<T> {
        let dpre = crelu_backward(&cache.pre, dy);
        let dsk = self.skip_bn.backward(&cache.bn_sk, &dpre);
        let dx_skip = self.skip.backward(x, &dsk);
        let dc2 = self.bn2.backward(&cache.bn2, &dpre);
        let da1 = self.conv2.backward(&cache.a1, &dc2);
        let db1 = crelu_backward(&cache.b1, &da1);
        let dc1 = self.bn1.backward(&cache.bn1, &db1);
        let mut dx = self.conv1.backward(x, &dc1);
        dx.add_assign(&dx_skip);
        dx
    }

    fn params_mut(&mut self) -> ParamRefs<'_, T> {
        let mut out = crate::nn::with_prefix("conv1", self.conv1.params_mut());
        out.extend(crate::nn::with_prefix("bn1", self.bn1.params_mut()));
        out.extend(crate::nn::with_prefix("conv2", self.conv2.params_mut()));
        out.extend(crate::nn::with_prefix("bn2", self.bn2.params_mut()));
        out.extend(crate::nn::with_prefix("skip", self.skip.params_mut()));
        out.extend(crate::nn::with_prefix("skip_bn", self.skip_bn.params_mut()));
        out
    }

    fn buffers_mut(&mut self) -> Vec<(String, &mut Tensor<T>)> {
        let mut out = Vec::new();
        for (prefix, bn) in [
            ("bn1", &mut self.bn1 as *mut ComplexBatchNorm<T>),
            ("bn2", &mut self.bn2),
            ("skip_bn", &mut self.skip_bn),
        ] {
            // Raw pointer sidesteps the borrow checker for the three
            // disjoint fields collected into one list.
            let bn = unsafe { &mut *bn };
            out.extend(bn.buffers_mut().into_iter().map(|(n, t)| (format!("{prefix}.{n}"), t)));
        }
        out
    }
}

/// One separable stage of the spectrogram encoder: depthwise k=3,
/// pointwise 1x1, batch norm + relu after each, then squeeze-excitation.
#[derive(Debug, Clone)]
pub struct StftStage<T> {
    pub dw: DepthwiseConv2d<T>,
    pub bn1: BatchNorm<T>,
    pub pw: Conv2d<T>,
    pub bn2: BatchNorm<T>,
    pub se: SeBlock<T>,
}

#[derive(Debug)]
pub struct StftStageCache<T: Scalar> {
    bn1: BnCache<T>,
    b1: Tensor<T>,
    h1: Tensor<T>,
    bn2: BnCache<T>,
    b2: Tensor<T>,
    h2: Tensor<T>,
    se: SeCache<T>,
}

impl<T: Scalar> StftStage<T> {
    fn new(c_in: usize, c_out: usize, stride: usize, rng: &mut Stream) -> Self {
        StftStage {
            dw: DepthwiseConv2d::new(c_in, 3, stride, 1, rng),
            bn1: BatchNorm::new(c_in),
            pw: Conv2d::new(c_in, c_out, 1, 1, 0, rng),
            bn2: BatchNorm::new(c_out),
            se: SeBlock::new(c_out, 4, rng),
        }
    }

    fn forward_train(&mut self, x: &Tensor<T>) -> Result<(Tensor<T>, StftStageCache<T>)> {
        let d = self.dw.forward(x)?;
        let (b1, bn1) = self.bn1.forward_train(&d)?;
        let h1 = relu(&b1);
        let p = self.pw.forward(&h1)?;
        let (b2, bn2) = self.bn2.forward_train(&p)?;
        let h2 = relu(&b2);
        let (y, se) = self.se.forward(&h2)?;
        Ok((y, StftStageCache { bn1, b1, h1, bn2, b2, h2, se }))
    }

    fn forward_eval(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let h1 = relu(&self.bn1.forward_eval(&self.dw.forward(x)?)?);
        let h2 = relu(&self.bn2.forward_eval(&self.pw.forward(&h1)?)?);
        Ok(self.se.forward(&h2)?.0)
    }

    fn backward(&mut self, x: &Tensor<T>, cache: &StftStageCache<T>, dy: &Tensor<T>) -> Tensor<T> {
        let dh2 = self.se.backward(&cache.h2, &cache.se, dy);
        let db2 = relu_backward(&cache.b2, &dh2);
        let dp = self.bn2.backward(&cache.bn2, &db2);
        let dh1 = self.pw.backward(&cache.h1, &dp);
        let db1 = relu_backward(&cache.b1, &dh1);
        let dd = self.bn1.backward(&cache.bn1, &db1);
        self.dw.backward(x, &dd)
    }

    fn params_mut(&mut self) -> ParamRefs<'_, T> {
        let mut out = crate::nn::with_prefix("dw", self.dw.params_mut());
        out.extend(crate::nn::with_prefix("bn1", self.bn1.params_mut()));
        out.extend(crate::nn::with_prefix("pw", self.pw.params_mut()));
        out.extend(crate::nn::with_prefix("bn2", self.bn2.params_mut()));
        out.extend(crate::nn::with_prefix("se", self.se.params_mut()));
        out
    }

    fn buffers_mut(&mut self) -> Vec<(String, &mut Tensor<T>)> {
        let mut out: Vec<(String, &mut Tensor<T>)> = self
            .bn1
            .buffers_mut()
            .into_iter()
            .map(|(n, t)| (format!("bn1.{n}"), t))
            .collect();
        out.extend(self.bn2.buffers_mut().into_iter().map(|(n, t)| (format!("bn2.{n}"), t)));
        out
    }
}

/// The full dual-gate fusion classifier.
#[derive(Debug, Clone)]
pub struct GfNet<T> {
    pub config: ModelConfig,
    pub iq_stem: Conv1dComplex<T>,
    pub iq_stem_bn: ComplexBatchNorm<T>,
    pub iq_stages: Vec<IqStage<T>>,
    pub stft_stem: Conv2d<T>,
    pub stft_stem_bn: BatchNorm<T>,
    pub stft_stages: Vec<StftStage<T>>,
    pub proj_iq: Linear<T>,
    pub proj_stft: Linear<T>,
    pub gate_fc1: Linear<T>,
    pub gate_fc2: Linear<T>,
    pub aux_head: Linear<T>,
    pub proc_fc1: Linear<T>,
    pub proc_fc2: Linear<T>,
    pub dropout: Dropout,
    pub classifier: Linear<T>,
}

struct IqPathCache<T: Scalar> {
    input: ComplexTensor<T>,
    stem_bn: CBnCache<T>,
    stem_pre: ComplexTensor<T>,
    /// acts[i] is the input to stage i (acts[0] is the stem activation).
    acts: Vec<ComplexTensor<T>>,
    stages: Vec<IqStageCache<T>>,
    last: ComplexTensor<T>,
    modv: Tensor<T>,
    z: Tensor<T>,
}

struct StftPathCache<T: Scalar> {
    input: Tensor<T>,
    stem_bn: BnCache<T>,
    stem_pre: Tensor<T>,
    acts: Vec<Tensor<T>>,
    stages: Vec<StftStageCache<T>>,
    z: Tensor<T>,
}

struct GateCache<T: Scalar> {
    h_pre: Tensor<T>,
    h: Tensor<T>,
}

/// Everything the training backward pass needs from the forward pass.
pub struct TrainCaches<T: Scalar> {
    mode: FusionMode,
    iq: Option<IqPathCache<T>>,
    stft: Option<StftPathCache<T>>,
    stats: Tensor<T>,
    gate: Option<GateCache<T>>,
    g: Vec<T>,
    s: Vec<T>,
    p_iq: Option<Tensor<T>>,
    p_stft: Option<Tensor<T>>,
    proc_h_pre: Tensor<T>,
    proc_h: Tensor<T>,
    proc_v: Tensor<T>,
    drop_mask: Tensor<T>,
    dropped: Tensor<T>,
}

impl<T: Scalar> GfNet<T> {
    pub fn new(config: ModelConfig, rng: &mut Stream) -> Result<Self> {
        config.validate()?;
        let iq_stem = Conv1dComplex::new(
            1,
            config.iq_stem_channels,
            config.iq_stem_kernel,
            config.iq_stem_stride,
            0,
            rng,
        );
        let iq_stem_bn = ComplexBatchNorm::new(config.iq_stem_channels);
        let mut iq_stages = Vec::new();
        let mut c_in = config.iq_stem_channels;
        for &[mid, out, stride] in &config.iq_stages {
            iq_stages.push(IqStage::new(c_in, mid, out, stride, rng));
            c_in = out;
        }
        let stft_stem = Conv2d::new(1, config.stft_stem_channels, 5, 4, 2, rng);
        let stft_stem_bn = BatchNorm::new(config.stft_stem_channels);
        let mut stft_stages = Vec::new();
        let mut c_in = config.stft_stem_channels;
        for &[out, stride] in &config.stft_stages {
            stft_stages.push(StftStage::new(c_in, out, stride, rng));
            c_in = out;
        }
        Ok(GfNet {
            proj_iq: Linear::new(config.iq_feature_dim, config.fusion_dim, rng),
            proj_stft: Linear::new(config.stft_feature_dim, config.fusion_dim, rng),
            gate_fc1: Linear::new(STATS_DIM, 32, rng),
            // Zero heads start both gates at exactly sigmoid(0) = 1/2.
            gate_fc2: Linear::zeroed(32, 1),
            aux_head: Linear::zeroed(STATS_DIM, 1),
            proc_fc1: Linear::new(STATS_DIM, 32, rng),
            proc_fc2: Linear::new(32, config.fusion_dim, rng),
            dropout: Dropout { p: 0.5 },
            classifier: Linear::new(config.fusion_dim, config.n_classes, rng),
            config,
            iq_stem,
            iq_stem_bn,
            iq_stages,
            stft_stem,
            stft_stem_bn,
            stft_stages,
        })
    }

    fn check_inputs(
        &self,
        iq: Option<&ComplexTensor<T>>,
        img: Option<&Tensor<T>>,
        stats: &Tensor<T>,
        mode: FusionMode,
    ) -> Result<usize> {
        if stats.shape.len() != 2 || stats.shape[1] != STATS_DIM {
            return Err(Error::Shape(format!(
                "stats must be [n, {STATS_DIM}], got {:?}",
                stats.shape
            )));
        }
        let n = stats.shape[0];
        if n == 0 {
            return Err(Error::Shape("empty batch".into()));
        }
        if mode != FusionMode::StftOnly {
            let iq = iq.ok_or_else(|| {
                Error::Config(format!("mode {} needs the IQ input", mode.as_str()))
            })?;
            let want = vec![n, 1, self.config.input_len];
            if iq.shape() != want.as_slice() {
                return Err(Error::Shape(format!("IQ must be {:?}, got {:?}", want, iq.shape())));
            }
        }
        if mode != FusionMode::IqOnly {
            let img = img.ok_or_else(|| {
                Error::Config(format!("mode {} needs the spectrogram input", mode.as_str()))
            })?;
            let s = self.config.image_size;
            let want = vec![n, 1, s, s];
            if img.shape != want {
                return Err(Error::Shape(format!("image must be {:?}, got {:?}", want, img.shape)));
            }
        }
        Ok(n)
    }

    fn encode_iq_train(&mut self, x: &ComplexTensor<T>) -> Result<(Tensor<T>, IqPathCache<T>)> {
        let c0 = self.iq_stem.forward(x)?;
        let (b0, stem_bn) = self.iq_stem_bn.forward_train(&c0)?;
        let a0 = crelu(&b0);
        a0.check_finite("iq stem")?;
        let mut acts = vec![a0];
        let mut stages = Vec::new();
        for (i, st) in self.iq_stages.iter_mut().enumerate() {
            let (y, cache) = st.forward_train(acts.last().unwrap())?;
            y.check_finite(&format!("iq stage {}", i + 1))?;
            stages.push(cache);
            acts.push(y);
        }
        let last = acts.pop().unwrap();
        let modv = modulus(&last);
        let z = gap(&modv);
        z.check_finite("iq feature vector")?;
        Ok((
            z.clone(),
            IqPathCache { input: x.clone(), stem_bn, stem_pre: b0, acts, stages, last, modv, z },
        ))
    }

    /// Inference-mode IQ encoding (running statistics, no caches).
    pub fn encode_iq_eval(&self, x: &ComplexTensor<T>) -> Result<Tensor<T>> {
        let b0 = self.iq_stem_bn.forward_eval(&self.iq_stem.forward(x)?)?;
        let mut a = crelu(&b0);
        a.check_finite("iq stem")?;
        for (i, st) in self.iq_stages.iter().enumerate() {
            a = st.forward_eval(&a)?;
            a.check_finite(&format!("iq stage {}", i + 1))?;
        }
        let z = gap(&modulus(&a));
        z.check_finite("iq feature vector")?;
        Ok(z)
    }

    fn backward_iq(&mut self, cache: &IqPathCache<T>, dz: &Tensor<T>) -> ComplexTensor<T> {
        let dmod = gap_backward(&cache.modv.shape, dz);
        let mut dy = modulus_backward(&cache.last, &cache.modv, &dmod);
        for i in (0..self.iq_stages.len()).rev() {
            dy = self.iq_stages[i].backward(&cache.acts[i], &cache.stages[i], &dy);
        }
        let db0 = crelu_backward(&cache.stem_pre, &dy);
        let dc0 = self.iq_stem_bn.backward(&cache.stem_bn, &db0);
        self.iq_stem.backward(&cache.input, &dc0)
    }

    fn encode_stft_train(&mut self, x: &Tensor<T>) -> Result<(Tensor<T>, StftPathCache<T>)> {
        let c0 = self.stft_stem.forward(x)?;
        let (b0, stem_bn) = self.stft_stem_bn.forward_train(&c0)?;
        let a0 = relu(&b0);
        a0.check_finite("stft stem")?;
        let mut acts = vec![a0];
        let mut stages = Vec::new();
        for (i, st) in self.stft_stages.iter_mut().enumerate() {
            let (y, cache) = st.forward_train(acts.last().unwrap())?;
            y.check_finite(&format!("stft stage {}", i + 1))?;
            stages.push(cache);
            acts.push(y);
        }
        let last = acts.pop().unwrap();
        let z = gap(&last);
        z.check_finite("stft feature vector")?;
        Ok((z.clone(), StftPathCache { input: x.clone(), stem_bn, stem_pre: b0, acts, stages, z }))
    }

    /// Inference-mode spectrogram encoding.
    pub fn encode_stft_eval(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let b0 = self.stft_stem_bn.forward_eval(&self.stft_stem.forward(x)?)?;
        let mut a = relu(&b0);
        a.check_finite("stft stem")?;
        for (i, st) in self.stft_stages.iter().enumerate() {
            a = st.forward_eval(&a)?;
            a.check_finite(&format!("stft stage {}", i + 1))?;
        }
        let z = gap(&a);
        z.check_finite("stft feature vector")?;
        Ok(z)
    }

    fn backward_stft(&mut self, cache: &StftPathCache<T>, dz: &Tensor<T>) {
        let last_shape: &[usize] = match cache.stages.last() {
            Some(c) => &c.h2.shape,
            None => &cache.stem_pre.shape,
        };
        let mut dy = gap_backward(last_shape, dz);
        for i in (0..self.stft_stages.len()).rev() {
            dy = self.stft_stages[i].backward(&cache.acts[i], &cache.stages[i], &dy);
        }
        let db0 = relu_backward(&cache.stem_pre, &dy);
        let dc0 = self.stft_stem_bn.backward(&cache.stem_bn, &db0);
        let _ = self.stft_stem.backward(&cache.input, &dc0);
    }

    /// Primary gate values g for a batch of (z-scored) stats rows.
    pub fn gate_values(&self, stats: &Tensor<T>) -> Result<(Vec<T>, GateCacheParts<T>)> {
        let h_pre = self.gate_fc1.forward(stats)?;
        let h = relu(&h_pre);
        let logit = self.gate_fc2.forward(&h)?;
        let g = logit.data.iter().map(|&v| sigmoid_scalar(v)).collect();
        Ok((g, GateCacheParts { h_pre, h, logit }))
    }

    /// Auxiliary gate values s.
    pub fn aux_values(&self, stats: &Tensor<T>) -> Result<(Vec<T>, Tensor<T>)> {
        let logit = self.aux_head.forward(stats)?;
        let s = logit.data.iter().map(|&v| sigmoid_scalar(v)).collect();
        Ok((s, logit))
    }

    fn proc_chain(&self, stats: &Tensor<T>) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>)> {
        let h_pre = self.proc_fc1.forward(stats)?;
        let h = relu(&h_pre);
        let v = self.proc_fc2.forward(&h)?;
        Ok((h_pre, h, v))
    }

    fn fuse_batch(
        &self,
        n: usize,
        g: &[T],
        p_iq: Option<&Tensor<T>>,
        p_stft: Option<&Tensor<T>>,
    ) -> Tensor<T> {
        let d = self.config.fusion_dim;
        let mut z = Tensor::zeros(vec![n, d]);
        for b in 0..n {
            let out = &mut z.data[b * d..(b + 1) * d];
            match (p_iq, p_stft) {
                (Some(pi), Some(ps)) => {
                    fuse_rows(g[b], &pi.data[b * d..(b + 1) * d], &ps.data[b * d..(b + 1) * d], out)
                }
                (Some(pi), None) => out.copy_from_slice(&pi.data[b * d..(b + 1) * d]),
                (None, Some(ps)) => out.copy_from_slice(&ps.data[b * d..(b + 1) * d]),
                (None, None) => unreachable!("at least one stream is always live"),
            }
        }
        z
    }

    /// Training forward pass. Returns logits (softmax lives in the loss),
    /// per-sample gate readouts, and the caches for `backward`.
    pub fn forward_train(
        &mut self,
        iq: Option<&ComplexTensor<T>>,
        img: Option<&Tensor<T>>,
        stats: &Tensor<T>,
        mode: FusionMode,
        rng: &mut Stream,
    ) -> Result<(Tensor<T>, Vec<GateReadout>, TrainCaches<T>)> {
        let n = self.check_inputs(iq, img, stats, mode)?;
        stats.check_finite("stats vector")?;

        let (g, gate) = match mode {
            FusionMode::Learned => {
                let (g, parts) = self.gate_values(stats)?;
                (g, Some(GateCache { h_pre: parts.h_pre, h: parts.h }))
            }
            FusionMode::IqOnly => (vec![T::zero(); n], None),
            FusionMode::StftOnly => (vec![T::one(); n], None),
        };
        let (s, _) = self.aux_values(stats)?;

        let (iq_cache, p_iq) = if mode != FusionMode::StftOnly {
            let (z, cache) = self.encode_iq_train(iq.unwrap())?;
            let p = self.proj_iq.forward(&z)?;
            (Some(cache), Some(p))
        } else {
            (None, None)
        };
        let (stft_cache, p_stft) = if mode != FusionMode::IqOnly {
            let (z, cache) = self.encode_stft_train(img.unwrap())?;
            let p = self.proj_stft.forward(&z)?;
            (Some(cache), Some(p))
        } else {
            (None, None)
        };

        let z_fused = self.fuse_batch(n, &g, p_iq.as_ref(), p_stft.as_ref());
        let (proc_h_pre, proc_h, proc_v) = self.proc_chain(stats)?;
        let d = self.config.fusion_dim;
        let mut z_final = Tensor::zeros(vec![n, d]);
        for b in 0..n {
            inject_rows(
                s[b],
                &z_fused.data[b * d..(b + 1) * d],
                &proc_v.data[b * d..(b + 1) * d],
                &mut z_final.data[b * d..(b + 1) * d],
            );
        }
        z_final.check_finite("fused feature")?;
        let (dropped, drop_mask) = self.dropout.forward_train(&z_final, rng);
        let logits = self.classifier.forward(&dropped)?;
        logits.check_finite("classifier logits")?;

        let readouts = (0..n)
            .map(|b| GateReadout { g: g[b].to_f64(), s: s[b].to_f64() })
            .collect();
        let caches = TrainCaches {
            mode,
            iq: iq_cache,
            stft: stft_cache,
            stats: stats.clone(),
            gate,
            g,
            s,
            p_iq,
            p_stft,
            proc_h_pre,
            proc_h,
            proc_v,
            drop_mask,
            dropped,
        };
        Ok((logits, readouts, caches))
    }

    /// Accumulates parameter gradients for one batch given the loss
    /// gradient at the logits.
    pub fn backward(&mut self, caches: &TrainCaches<T>, dlogits: &Tensor<T>) -> Result<()> {
        self.backward_impl(caches, dlogits).map(|_| ())
    }

    /// Like [`backward`](Self::backward) but also returns the loss
    /// gradient at the raw IQ input, for finite-difference certification.
    pub fn backward_returning_iq_grad(
        &mut self,
        caches: &TrainCaches<T>,
        dlogits: &Tensor<T>,
    ) -> Result<ComplexTensor<T>> {
        self.backward_impl(caches, dlogits)?
            .ok_or_else(|| Error::Config("this pass had no IQ stream".into()))
    }

    fn backward_impl(
        &mut self,
        caches: &TrainCaches<T>,
        dlogits: &Tensor<T>,
    ) -> Result<Option<ComplexTensor<T>>> {
        let n = dlogits.shape[0];
        let d = self.config.fusion_dim;

        let ddropped = self.classifier.backward(&caches.dropped, dlogits);
        let dz_final = self.dropout.backward(&caches.drop_mask, &ddropped);

        // inject_aux: dZ_fused = dZ_final; ds = <dZ_final, proc_v>.
        let mut ds_logit = Tensor::zeros(vec![n, 1]);
        let mut dproc_v = Tensor::zeros(vec![n, d]);
        for b in 0..n {
            let row = &dz_final.data[b * d..(b + 1) * d];
            let pv = &caches.proc_v.data[b * d..(b + 1) * d];
            let ds: T = row.iter().zip(pv).map(|(&a, &b)| a * b).sum();
            let sb = caches.s[b];
            ds_logit.data[b] = ds * sb * (T::one() - sb);
            for (o, &r) in dproc_v.data[b * d..(b + 1) * d].iter_mut().zip(row) {
                *o = sb * r;
            }
        }
        let _ = self.aux_head.backward(&caches.stats, &ds_logit);
        let dproc_h = self.proc_fc2.backward(&caches.proc_h, &dproc_v);
        let dproc_pre = relu_backward(&caches.proc_h_pre, &dproc_h);
        let _ = self.proc_fc1.backward(&caches.stats, &dproc_pre);

        // fuse: split dZ_fused between the streams by the gate.
        if caches.mode == FusionMode::Learned {
            let gc = caches.gate.as_ref().expect("learned mode caches the gate");
            let (pi, ps) = (
                caches.p_iq.as_ref().expect("learned mode has both streams"),
                caches.p_stft.as_ref().expect("learned mode has both streams"),
            );
            let mut dg_logit = Tensor::zeros(vec![n, 1]);
            for b in 0..n {
                let row = &dz_final.data[b * d..(b + 1) * d];
                let dg: T = row
                    .iter()
                    .zip(&ps.data[b * d..(b + 1) * d])
                    .zip(&pi.data[b * d..(b + 1) * d])
                    .map(|((&r, &a), &c)| r * (a - c))
                    .sum();
                let gb = caches.g[b];
                dg_logit.data[b] = dg * gb * (T::one() - gb);
            }
            let dh = self.gate_fc2.backward(&gc.h, &dg_logit);
            let dh_pre = relu_backward(&gc.h_pre, &dh);
            let _ = self.gate_fc1.backward(&caches.stats, &dh_pre);
        }

        let mut iq_grad = None;
        if let (Some(cache), Some(_)) = (&caches.iq, &caches.p_iq) {
            let mut dp = Tensor::zeros(vec![n, d]);
            for b in 0..n {
                let w = T::one() - caches.g[b];
                for (o, &r) in dp.data[b * d..(b + 1) * d]
                    .iter_mut()
                    .zip(&dz_final.data[b * d..(b + 1) * d])
                {
                    *o = w * r;
                }
            }
            let dz = self.proj_iq.backward(&cache.z, &dp);
            iq_grad = Some(self.backward_iq(cache, &dz));
        }
        if let (Some(cache), Some(_)) = (&caches.stft, &caches.p_stft) {
            let mut dp = Tensor::zeros(vec![n, d]);
            for b in 0..n {
                let w = caches.g[b];
                for (o, &r) in dp.data[b * d..(b + 1) * d]
                    .iter_mut()
                    .zip(&dz_final.data[b * d..(b + 1) * d])
                {
                    *o = w * r;
                }
            }
            let dz = self.proj_stft.backward(&cache.z, &dp);
            self.backward_stft(cache, &dz);
        }
        Ok(iq_grad)
    }

    /// Pure inference: probabilities over classes plus gate readouts.
    pub fn forward_eval(
        &self,
        iq: Option<&ComplexTensor<T>>,
        img: Option<&Tensor<T>>,
        stats: &Tensor<T>,
        mode: FusionMode,
    ) -> Result<(Tensor<T>, Vec<GateReadout>)> {
        let n = self.check_inputs(iq, img, stats, mode)?;
        stats.check_finite("stats vector")?;

        let g: Vec<T> = match mode {
            FusionMode::Learned => self.gate_values(stats)?.0,
            FusionMode::IqOnly => vec![T::zero(); n],
            FusionMode::StftOnly => vec![T::one(); n],
        };
        let (s, _) = self.aux_values(stats)?;

        let p_iq = if mode != FusionMode::StftOnly {
            Some(self.proj_iq.forward(&self.encode_iq_eval(iq.unwrap())?)?)
        } else {
            None
        };
        let p_stft = if mode != FusionMode::IqOnly {
            Some(self.proj_stft.forward(&self.encode_stft_eval(img.unwrap())?)?)
        } else {
            None
        };

        let z_fused = self.fuse_batch(n, &g, p_iq.as_ref(), p_stft.as_ref());
        let (_, _, proc_v) = self.proc_chain(stats)?;
        let d = self.config.fusion_dim;
        let mut z_final = Tensor::zeros(vec![n, d]);
        for b in 0..n {
            inject_rows(
                s[b],
                &z_fused.data[b * d..(b + 1) * d],
                &proc_v.data[b * d..(b + 1) * d],
                &mut z_final.data[b * d..(b + 1) * d],
            );
        }
        let logits = self.classifier.forward(&z_final)?;
        logits.check_finite("classifier logits")?;
        let probs = softmax_rows(&logits);
        let readouts =
            (0..n).map(|b| GateReadout { g: g[b].to_f64(), s: s[b].to_f64() }).collect();
        Ok((probs, readouts))
    }

    pub fn params_mut(&mut self) -> ParamRefs<'_, T> {
        let mut out = crate::nn::with_prefix("iq_stem", self.iq_stem.params_mut());
        out.extend(crate::nn::with_prefix("iq_stem_bn", self.iq_stem_bn.params_mut()));
        for (i, st) in self.iq_stages.iter_mut().enumerate() {
            out.extend(crate::nn::with_prefix(&format!("iq{}", i + 1), st.params_mut()));
        }
        out.extend(crate::nn::with_prefix("stft_stem", self.stft_stem.params_mut()));
        out.extend(crate::nn::with_prefix("stft_stem_bn", self.stft_stem_bn.params_mut()));
        for (i, st) in self.stft_stages.iter_mut().enumerate() {
            out.extend(crate::nn::with_prefix(&format!("st{}", i + 1), st.params_mut()));
        }
        out.extend(crate::nn::with_prefix("proj_iq", self.proj_iq.params_mut()));
        out.extend(crate::nn::with_prefix("proj_stft", self.proj_stft.params_mut()));
        out.extend(crate::nn::with_prefix("gate_fc1", self.gate_fc1.params_mut()));
        out.extend(crate::nn::with_prefix("gate_fc2", self.gate_fc2.params_mut()));
        out.extend(crate::nn::with_prefix("aux_head", self.aux_head.params_mut()));
        out.extend(crate::nn::with_prefix("proc_fc1", self.proc_fc1.params_mut()));
        out.extend(crate::nn::with_prefix("proc_fc2", self.proc_fc2.params_mut()));
        out.extend(crate::nn::with_prefix("classifier", self.classifier.params_mut()));
        out
    }

    pub fn buffers_mut(&mut self) -> Vec<(String, &mut Tensor<T>)> {
        let mut out: Vec<(String, &mut Tensor<T>)> = self
            .iq_stem_bn
            .buffers_mut()
            .into_iter()
            .map(|(n, t)| (format!("iq_stem_bn.{n}"), t))
            .collect();
        for (i, st) in self.iq_stages.iter_mut().enumerate() {
            out.extend(st.buffers_mut().into_iter().map(|(n, t)| (format!("iq{}.{n}", i + 1), t)));
        }
        out.extend(
            self.stft_stem_bn
                .buffers_mut()
                .into_iter()
                .map(|(n, t)| (format!("stft_stem_bn.{n}"), t)),
        );
        for (i, st) in self.stft_stages.iter_mut().enumerate() {
            out.extend(st.buffers_mut().into_iter().map(|(n, t)| (format!("st{}.{n}", i + 1), t)));
        }
        out
    }

    /// Walks every persistent tensor (parameters, then batch-norm
    /// running statistics) in a fixed order.
    pub fn visit_state(&mut self, mut f: impl FnMut(String, &mut Tensor<T>)) {
        for (name, p) in self.params_mut() {
            f(name, &mut p.w);
        }
        for (name, t) in self.buffers_mut() {
            f(name, t);
        }
    }

    pub fn zero_grad(&mut self) {
        for (_, p) in self.params_mut() {
            p.zero_grad();
        }
    }

    pub fn parameter_count(&mut self) -> usize {
        self.params_mut().iter().map(|(_, p)| p.w.numel()).sum()
    }
}

/// Intermediate tensors of the primary-gate MLP, exposed so training can
/// reuse the public gate computation.
pub struct GateCacheParts<T> {
    pub h_pre: Tensor<T>,
    pub h: Tensor<T>,
    pub logit: Tensor<T>,
}

/// Row-wise stable softmax.
pub fn softmax_rows<T: Scalar>(logits: &Tensor<T>) -> Tensor<T> {
    let (n, k) = (logits.shape[0], logits.shape[1]);
    let mut out = Tensor::zeros(vec![n, k]);
    for b in 0..n {
        let row = &logits.data[b * k..(b + 1) * k];
        let max = row.iter().cloned().fold(T::neg_infinity(), T::max);
        let exps: Vec<T> = row.iter().map(|&v| (v - max).exp()).collect();
        let z: T = exps.iter().copied().sum();
        for (o, e) in out.data[b * k..(b + 1) * k].iter_mut().zip(&exps) {
            *o = *e / z;
        }
    }
    out
}

/// Z-score constants for the statistics vector, fitted on the training
/// split and stored in the checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Normalizer {
    pub fn identity() -> Self {
        Normalizer { mean: vec![0.0; STATS_DIM], std: vec![1.0; STATS_DIM] }
    }

    /// Population mean/std per coordinate. Degenerate coordinates get
    /// std 1 so they pass through centered but unscaled.
    pub fn fit(rows: &[[f64; STATS_DIM]]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Config("cannot fit a normalizer on zero rows".into()));
        }
        let n = rows.len() as f64;
        let mut mean = vec![0.0; STATS_DIM];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut std = vec![0.0; STATS_DIM];
        for r in rows {
            for (s, (v, m)) in std.iter_mut().zip(r.iter().zip(&mean)) {
                *s += (v - m) * (v - m);
            }
        }
        for s in &mut std {
            *s = (*s / n).sqrt();
            if *s == 0.0 || !s.is_finite() {
                *s = 1.0;
            }
        }
        Ok(Normalizer { mean, std })
    }

    pub fn apply(&self, raw: [f64; STATS_DIM]) -> [f64; STATS_DIM] {
        let mut out = [0.0; STATS_DIM];
        for i in 0..STATS_DIM {
            out[i] = (raw[i] - self.mean[i]) / self.std[i];
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.mean.len() != STATS_DIM || self.std.len() != STATS_DIM {
            return Err(Error::Config("normalizer must have 6 coordinates".into()));
        }
        if self.std.iter().any(|&s| s <= 0.0 || !s.is_finite())
            || self.mean.iter().any(|m| !m.is_finite())
        {
            return Err(Error::Config("normalizer constants must be finite, std positive".into()));
        }
        Ok(())
    }
}

/// Where a checkpoint sits in its training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainState {
    pub step: u64,
    pub epoch: u64,
    pub best_val_accuracy: f64,
    pub fusion_mode: String,
}

impl TrainState {
    pub fn fresh(mode: FusionMode) -> Self {
        TrainState { step: 0, epoch: 0, best_val_accuracy: 0.0, fusion_mode: mode.as_str().into() }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CkptManifest {
    schema: u32,
    dtype: String,
    config: ModelConfig,
    state: TrainState,
    normalizer: Normalizer,
    tensors: Vec<TensorEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
}

const CKPT_MAGIC: &[u8; 8] = b"JLGFCKPT";
const CKPT_VERSION: u32 = 1;

/// Serializes the model to a single file: a TOML manifest (config,
/// schedule position, z-score constants, tensor table) followed by the
/// raw little-endian tensor blobs in manifest order. Round-trips
/// bit-exactly.
pub fn save_checkpoint<T: Scalar>(
    path: &Path,
    model: &mut GfNet<T>,
    normalizer: &Normalizer,
    state: &TrainState,
) -> Result<()> {
    let mut entries = Vec::new();
    let mut blob = Vec::new();
    model.visit_state(|name, t| {
        entries.push(TensorEntry { name, shape: t.shape.clone() });
        for &v in &t.data {
            v.write_le(&mut blob);
        }
    });
    let manifest = CkptManifest {
        schema: 1,
        dtype: T::DTYPE.into(),
        config: model.config.clone(),
        state: state.clone(),
        normalizer: normalizer.clone(),
        tensors: entries,
    };
    let text = toml::to_string(&manifest)
        .map_err(|e| Error::Config(format!("checkpoint manifest serialization: {e}")))?;
    let mut out = Vec::with_capacity(16 + text.len() + blob.len());
    out.extend_from_slice(CKPT_MAGIC);
    out.extend_from_slice(&CKPT_VERSION.to_le_bytes());
    out.extend_from_slice(&(text.len() as u64).to_le_bytes());
    out.extend_from_slice(text.as_bytes());
    out.extend_from_slice(&blob);
    std::fs::write(path, out)?;
    Ok(())
}

/// Loads a checkpoint written by [`save_checkpoint`] with the same
/// element type.
pub fn load_checkpoint<T: Scalar>(path: &Path) -> Result<(GfNet<T>, Normalizer, TrainState)> {
    let bytes = std::fs::read(path)?;
    if bytes.len() < 20 {
        return Err(Error::Truncated(format!("checkpoint {path:?} too short")));
    }
    if &bytes[..8] != CKPT_MAGIC {
        return Err(Error::Config(format!("{path:?} is not a checkpoint (bad magic)")));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != CKPT_VERSION {
        return Err(Error::Config(format!(
            "checkpoint version {version}, this build reads {CKPT_VERSION}"
        )));
    }
    let mlen = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
    if bytes.len() < 20 + mlen {
        return Err(Error::Truncated("checkpoint manifest overruns the file".into()));
    }
    let text = std::str::from_utf8(&bytes[20..20 + mlen])
        .map_err(|_| Error::Config("checkpoint manifest is not UTF-8".into()))?;
    let manifest: CkptManifest =
        toml::from_str(text).map_err(|e| Error::Config(format!("checkpoint manifest: {e}")))?;
    if manifest.schema != 1 {
        return Err(Error::Config(format!("unknown checkpoint schema {}", manifest.schema)));
    }
    if manifest.dtype != T::DTYPE {
        return Err(Error::Config(format!(
            "checkpoint holds {} tensors, caller wants {}",
            manifest.dtype,
            T::DTYPE
        )));
    }
    manifest.normalizer.validate()?;
    FusionMode::parse(&manifest.state.fusion_mode)?;

    let blob = &bytes[20 + mlen..];
    let mut model = GfNet::<T>::new(manifest.config.clone(), &mut Stream::from_raw(0))?;
    let mut cursor = 0usize;
    let mut idx = 0usize;
    let mut failure: Option<Error> = None;
    model.visit_state(|name, t| {
        if failure.is_some() {
            return;
        }
        if idx >= manifest.tensors.len() {
            failure = Some(Error::Config(format!("checkpoint manifest ends before tensor {name}")));
            return;
        }
        let entry = &manifest.tensors[idx];
        if entry.name != name {
            failure = Some(Error::Config(format!(
                "checkpoint tensor order mismatch: file has {:?}, model expects {:?}",
                entry.name, name
            )));
            return;
        }
        if entry.shape != t.shape {
            failure = Some(Error::Shape(format!(
                "checkpoint tensor {name}: file shape {:?}, model shape {:?}",
                entry.shape, t.shape
            )));
            return;
        }
        let nbytes = t.data.len() * T::SIZE;
        if cursor + nbytes > blob.len() {
            failure = Some(Error::Truncated(format!("checkpoint blob ends inside tensor {name}")));
            return;
        }
        for (i, v) in t.data.iter_mut().enumerate() {
            *v = T::read_le(&blob[cursor + i * T::SIZE..cursor + (i + 1) * T::SIZE]);
        }
        cursor += nbytes;
        idx += 1;
    });
    if let Some(e) = failure {
        return Err(e);
    }
    if idx != manifest.tensors.len() {
        return Err(Error::Config("checkpoint manifest lists tensors the model lacks".into()));
    }
    if cursor != blob.len() {
        return Err(Error::CountMismatch(format!(
            "checkpoint blob has {} trailing bytes",
            blob.len() - cursor
        )));
    }
    Ok((model, manifest.normalizer, manifest.state))
}

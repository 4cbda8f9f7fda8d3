//! Standard layers: linear, batch normalization, squeeze-excitation,
//! dropout, activations, pooling reductions, and the softmax
//! cross-entropy head.

use super::{ComplexTensor, Param, ParamRefs, Scalar, Tensor};
use crate::prng::Stream;
use crate::{Error, Result};

/// Fully connected `[n, d_in] -> [n, d_out]`.
#[derive(Debug, Clone)]
pub struct Linear<T> {
    pub w: Param<T>,
    pub b: Param<T>,
}

impl<T: Scalar> Linear<T> {
    pub fn new(d_in: usize, d_out: usize, rng: &mut Stream) -> Self {
        Linear {
            w: Param::kaiming(vec![d_out, d_in], d_in, rng),
            b: Param::new(Tensor::zeros(vec![d_out])),
        }
    }

    /// All-zero weights and bias: the head then outputs exactly zero,
    /// which downstream sigmoids turn into 1/2.
    pub fn zeroed(d_in: usize, d_out: usize) -> Self {
        Linear {
            w: Param::new(Tensor::zeros(vec![d_out, d_in])),
            b: Param::new(Tensor::zeros(vec![d_out])),
        }
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let (d_out, d_in) = (self.w.w.shape[0], self.w.w.shape[1]);
        if x.shape.len() != 2 || x.shape[1] != d_in {
            return Err(Error::Shape(format!("linear expects [n, {d_in}], got {:?}", x.shape)));
        }
        let n = x.shape[0];
        let mut y = Tensor::zeros(vec![n, d_out]);
        for b in 0..n {
            let x_row = &x.data[b * d_in..(b + 1) * d_in];
            let y_row = &mut y.data[b * d_out..(b + 1) * d_out];
            for (o, yv) in y_row.iter_mut().enumerate() {
                let w_row = &self.w.w.data[o * d_in..(o + 1) * d_in];
                *yv = self.b.w.data[o]
                    + w_row.iter().zip(x_row).map(|(&wv, &xv)| wv * xv).sum::<T>();
            }
        }
        Ok(y)
    }

    pub fn backward(&mut self, x: &Tensor<T>, dy: &Tensor<T>) -> Tensor<T> {
        let (d_out, d_in) = (self.w.w.shape[0], self.w.w.shape[1]);
        let n = x.shape[0];
        let mut dx = Tensor::zeros(x.shape.clone());
        for b in 0..n {
            let x_row = &x.data[b * d_in..(b + 1) * d_in];
            let dy_row = &dy.data[b * d_out..(b + 1) * d_out];
            let dx_row = &mut dx.data[b * d_in..(b + 1) * d_in];
            for (o, &dv) in dy_row.iter().enumerate() {
                self.b.g.data[o] += dv;
                let gw_row = &mut self.w.g.data[o * d_in..(o + 1) * d_in];
                for ((gw, &xv), _) in gw_row.iter_mut().zip(x_row).zip(0..d_in) {
                    *gw += dv * xv;
                }
                let w_row = &self.w.w.data[o * d_in..(o + 1) * d_in];
                for (dxv, &wv) in dx_row.iter_mut().zip(w_row) {
                    *dxv += dv * wv;
                }
            }
        }
        dx
    }

    pub fn params_mut(&mut self) -> ParamRefs<'_, T> {
        vec![("w".into(), &mut self.w), ("b".into(), &mut self.b)]
    }
}

/// Per-channel batch normalization over every non-channel dimension,
/// with running statistics for inference. Input is `[n, c, ...]`.
#[derive(Debug, Clone)]
pub struct BatchNorm<T> {
    pub gamma: Param<T>,
    pub beta: Param<T>,
    pub running_mean: Tensor<T>,
    pub running_var: Tensor<T>,
    pub momentum: f64,
    pub eps: f64,
}

/// What [`BatchNorm::forward_train`] hands to its backward pass.
#[derive(Debug)]
pub struct BnCache<T> {
    xhat: Tensor<T>,
    inv_std: Vec<T>,
}

impl<T: Scalar> BatchNorm<T> {
    pub fn new(c: usize) -> Self {
        BatchNorm {
            gamma: Param::new(Tensor::full(vec![c], T::one())),
            beta: Param::new(Tensor::zeros(vec![c])),
            running_mean: Tensor::zeros(vec![c]),
            running_var: Tensor::full(vec![c], T::one()),
            momentum: 0.1,
            eps: 1e-5,
        }
    }

    fn dims(&self, x: &Tensor<T>) -> Result<(usize, usize, usize)> {
        let c = self.gamma.w.shape[0];
        if x.shape.len() < 2 || x.shape[1] != c {
            return Err(Error::Shape(format!("batchnorm expects [n, {c}, ...], got {:?}", x.shape)));
        }
        let n = x.shape[0];
        let s: usize = x.shape[2..].iter().product();
        Ok((n, c, s.max(1)))
    }

    /// Normalizes with batch statistics and updates the running ones
    /// (exponential average, unbiased variance, like the common framework
    /// convention).
    pub fn forward_train(&mut self, x: &Tensor<T>) -> Result<(Tensor<T>, BnCache<T>)> {
        let (n, c, s) = self.dims(x)?;
        let count = (n * s) as f64;
        let mut mean = vec![T::zero(); c];
        let mut var = vec![T::zero(); c];
        for b in 0..n {
            for ch in 0..c {
                let row = &x.data[(b * c + ch) * s..(b * c + ch + 1) * s];
                mean[ch] += row.iter().copied().sum::<T>();
            }
        }
        for m in &mut mean {
            *m = *m / T::from_f64(count);
        }
        for b in 0..n {
            for ch in 0..c {
                let row = &x.data[(b * c + ch) * s..(b * c + ch + 1) * s];
                var[ch] += row.iter().map(|&v| (v - mean[ch]) * (v - mean[ch])).sum::<T>();
            }
        }
        for v in &mut var {
            *v = *v / T::from_f64(count);
        }

        let mom = T::from_f64(self.momentum);
        let unbias = T::from_f64(count / (count - 1.0).max(1.0));
        for ch in 0..c {
            self.running_mean.data[ch] =
                (T::one() - mom) * self.running_mean.data[ch] + mom * mean[ch];
            self.running_var.data[ch] =
                (T::one() - mom) * self.running_var.data[ch] + mom * var[ch] * unbias;
        }

        let inv_std: Vec<T> =
            var.iter().map(|&v| T::one() / (v + T::from_f64(self.eps)).sqrt()).collect();
        let mut xhat = Tensor::zeros(x.shape.clone());
        let mut y = Tensor::zeros(x.shape.clone());
        for b in 0..n {
            for ch in 0..c {
                let base = (b * c + ch) * s;
                let (g, be) = (self.gamma.w.data[ch], self.beta.w.data[ch]);
                for i in 0..s {
                    let h = (x.data[base + i] - mean[ch]) * inv_std[ch];
                    xhat.data[base + i] = h;
                    y.data[base + i] = g * h + be;
                }
            }
        }
        Ok((y, BnCache { xhat, inv_std }))
    }

    /// Normalizes with the stored running statistics (inference).
    pub fn forward_eval(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let (n, c, s) = self.dims(x)?;
        let mut y = Tensor::zeros(x.shape.clone());
        for b in 0..n {
            for ch in 0..c {
                let base = (b * c + ch) * s;
                let inv = T::one() / (self.running_var.data[ch] + T::from_f64(self.eps)).sqrt();
                let (g, be) = (self.gamma.w.data[ch], self.beta.w.data[ch]);
                let m = self.running_mean.data[ch];
                for i in 0..s {
                    y.data[base + i] = g * (x.data[base + i] - m) * inv + be;
                }
            }
        }
        Ok(y)
    }

    pub fn backward(&mut self, cache: &BnCache<T>, dy: &Tensor<T>) -> Tensor<T> {
        let c = self.gamma.w.shape[0];
        let n = dy.shape[0];
        let s: usize = dy.shape[2..].iter().product::<usize>().max(1);
        let count = T::from_f64((n * s) as f64);

        let mut sum_dy = vec![T::zero(); c];
        let mut sum_dy_xhat = vec![T::zero(); c];
        for b in 0..n {
            for ch in 0..c {
                let base = (b * c + ch) * s;
                for i in 0..s {
                    sum_dy[ch] += dy.data[base + i];
                    sum_dy_xhat[ch] += dy.data[base + i] * cache.xhat.data[base + i];
                }
            }
        }
        for ch in 0..c {
            self.beta.g.data[ch] += sum_dy[ch];
            self.gamma.g.data[ch] += sum_dy_xhat[ch];
        }

        let mut dx = Tensor::zeros(dy.shape.clone());
        for b in 0..n {
            for ch in 0..c {
                let base = (b * c + ch) * s;
                let k = self.gamma.w.data[ch] * cache.inv_std[ch];
                let mdy = sum_dy[ch] / count;
                let mdyx = sum_dy_xhat[ch] / count;
                for i in 0..s {
                    dx.data[base + i] =
                        k * (dy.data[base + i] - mdy - cache.xhat.data[base + i] * mdyx);
                }
            }
        }
        dx
    }

    pub fn params_mut(&mut self) -> ParamRefs<'_, T> {
        vec![("gamma".into(), &mut self.gamma), ("beta".into(), &mut self.beta)]
    }

    /// Non-learnable state that still belongs in a checkpoint.
    pub fn buffers_mut(&mut self) -> Vec<(String, &mut Tensor<T>)> {
        vec![
            ("running_mean".into(), &mut self.running_mean),
            ("running_var".into(), &mut self.running_var),
        ]
    }
}

/// Batch normalization for complex maps, applied to the real and
/// imaginary planes independently (full complex covariance whitening is
/// deliberately out of scope; this is a documented simplification).
#[derive(Debug, Clone)]
pub struct ComplexBatchNorm<T> {
    pub re: BatchNorm<T>,
    pub im: BatchNorm<T>,
}

#[derive(Debug)]
pub struct CBnCache<T> {
    re: BnCache<T>,
    im: BnCache<T>,
}

impl<T: Scalar> ComplexBatchNorm<T> {
    pub fn new(c: usize) -> Self {
        ComplexBatchNorm { re: BatchNorm::new(c), im: BatchNorm::new(c) }
    }

    pub fn forward_train(&mut self, x: &ComplexTensor<T>) -> Result<(ComplexTensor<T>, CBnCache<T>)> {
        let (yr, cr) = self.re.forward_train(&x.re)?;
        let (yi, ci) = self.im.forward_train(&x.im)?;
        Ok((ComplexTensor { re: yr, im: yi }, CBnCache { re: cr, im: ci }))
    }

    pub fn forward_eval(&self, x: &ComplexTensor<T>) -> Result<ComplexTensor<T>> {
        Ok(ComplexTensor { re: self.re.forward_eval(&x.re)?, im: self.im.forward_eval(&x.im)? })
    }

    pub fn backward(&mut self, cache: &CBnCache<T>, dy: &ComplexTensor<T>) -> ComplexTensor<T> {
        ComplexTensor {
            re: self.re.backward(&cache.re, &dy.re),
            im: self.im.backward(&cache.im, &dy.im),
        }
    }

    pub fn params_mut(&mut self) -> ParamRefs<'_, T> {
        let mut out = super::with_prefix("re", self.re.params_mut());
        out.extend(super::with_prefix("im", self.im.params_mut()));
        out
    }

    pub fn buffers_mut(&mut self) -> Vec<(String, &mut Tensor<T>)> {
        let mut out: Vec<(String, &mut Tensor<T>)> = self
            .re
            .buffers_mut()
            .into_iter()
            .map(|(n, t)| (format!("re.{n}"), t))
            .collect();
        out.extend(self.im.buffers_mut().into_iter().map(|(n, t)| (format!("im.{n}"), t)));
        out
    }
}

/// Squeeze-and-excitation: channel gates from globally pooled features
/// through a two-layer bottleneck.
#[derive(Debug, Clone)]
pub struct SeBlock<T> {
    pub fc1: Linear<T>,
    pub fc2: Linear<T>,
}

#[derive(Debug)]
pub struct SeCache<T> {
    pooled: Tensor<T>,
    hidden: Tensor<T>,
    act: Tensor<T>,
    gate: Tensor<T>,
}

impl<T: Scalar> SeBlock<T> {
    pub fn new(c: usize, reduction: usize, rng: &mut Stream) -> Self {
        let hidden = (c / reduction).max(1);
        SeBlock { fc1: Linear::new(c, hidden, rng), fc2: Linear::new(hidden, c, rng) }
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<(Tensor<T>, SeCache<T>)> {
        let (n, c) = (x.shape[0], x.shape[1]);
        let s: usize = x.shape[2..].iter().product::<usize>().max(1);
        let pooled = gap(x);
        let hidden = self.fc1.forward(&pooled)?;
        let act = relu(&hidden);
        let mut gate = self.fc2.forward(&act)?;
        for v in &mut gate.data {
            *v = T::one() / (T::one() + (-*v).exp());
        }
        let mut y = Tensor::zeros(x.shape.clone());
        for b in 0..n {
            for ch in 0..c {
                let base = (b * c + ch) * s;
                let g = gate.data[b * c + ch];
                for i in 0..s {
                    y.data[base + i] = x.data[base + i] * g;
                }
            }
        }
        Ok((y, SeCache { pooled, hidden, act, gate }))
    }

    pub fn backward(&mut self, x: &Tensor<T>, cache: &SeCache<T>, dy: &Tensor<T>) -> Tensor<T> {
        let (n, c) = (x.shape[0], x.shape[1]);
        let s: usize = x.shape[2..].iter().product::<usize>().max(1);

        let mut dgate = Tensor::zeros(vec![n, c]);
        let mut dx = Tensor::zeros(x.shape.clone());
        for b in 0..n {
            for ch in 0..c {
                let base = (b * c + ch) * s;
                let g = cache.gate.data[b * c + ch];
                let mut acc = T::zero();
                for i in 0..s {
                    acc += dy.data[base + i] * x.data[base + i];
                    dx.data[base + i] = dy.data[base + i] * g;
                }
                dgate.data[b * c + ch] = acc;
            }
        }
        // Through the sigmoid.
        for (dg, &g) in dgate.data.iter_mut().zip(&cache.gate.data) {
            *dg = *dg * g * (T::one() - g);
        }
        let dact = self.fc2.backward(&cache.act, &dgate);
        let dhidden = relu_backward(&cache.hidden, &dact);
        let dpooled = self.fc1.backward(&cache.pooled, &dhidden);
        // Pool gradient spreads evenly over the spatial positions.
        let inv = T::one() / T::from_f64(s as f64);
        for b in 0..n {
            for ch in 0..c {
                let base = (b * c + ch) * s;
                let dv = dpooled.data[b * c + ch] * inv;
                for i in 0..s {
                    dx.data[base + i] += dv;
                }
            }
        }
        dx
    }

    pub fn params_mut(&mut self) -> ParamRefs<'_, T> {
        let mut out = super::with_prefix("fc1", self.fc1.params_mut());
        out.extend(super::with_prefix("fc2", self.fc2.params_mut()));
        out
    }
}

/// Inverted dropout at rate `p`: active only in training, scales kept
/// activations by 1/(1-p) so inference is the identity.
#[derive(Debug, Clone)]
pub struct Dropout {
    pub p: f64,
}

impl Dropout {
    pub fn forward_train<T: Scalar>(&self, x: &Tensor<T>, rng: &mut Stream) -> (Tensor<T>, Tensor<T>) {
        let keep = 1.0 - self.p;
        let scale = T::from_f64(1.0 / keep);
        let mask = Tensor {
            shape: x.shape.clone(),
            data: x
                .data
                .iter()
                .map(|_| if rng.uniform() < keep { scale } else { T::zero() })
                .collect(),
        };
        let y = Tensor {
            shape: x.shape.clone(),
            data: x.data.iter().zip(&mask.data).map(|(&a, &m)| a * m).collect(),
        };
        (y, mask)
    }

    pub fn backward<T: Scalar>(&self, mask: &Tensor<T>, dy: &Tensor<T>) -> Tensor<T> {
        Tensor {
            shape: dy.shape.clone(),
            data: dy.data.iter().zip(&mask.data).map(|(&d, &m)| d * m).collect(),
        }
    }
}

/// Elementwise max(x, 0).
pub fn relu<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    x.map(|v| if v > T::zero() { v } else { T::zero() })
}

/// dx = dy where the forward input was positive.
pub fn relu_backward<T: Scalar>(x: &Tensor<T>, dy: &Tensor<T>) -> Tensor<T> {
    Tensor {
        shape: dy.shape.clone(),
        data: x
            .data
            .iter()
            .zip(&dy.data)
            .map(|(&xv, &dv)| if xv > T::zero() { dv } else { T::zero() })
            .collect(),
    }
}

/// ReLU applied independently to the real and imaginary planes.
pub fn crelu<T: Scalar>(x: &ComplexTensor<T>) -> ComplexTensor<T> {
    ComplexTensor { re: relu(&x.re), im: relu(&x.im) }
}

pub fn crelu_backward<T: Scalar>(x: &ComplexTensor<T>, dy: &ComplexTensor<T>) -> ComplexTensor<T> {
    ComplexTensor { re: relu_backward(&x.re, &dy.re), im: relu_backward(&x.im, &dy.im) }
}

/// Logistic function of one scalar.
pub fn sigmoid_scalar<T: Scalar>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

/// Mean over all trailing (spatial) dimensions: `[n, c, ...] -> [n, c]`.
pub fn gap<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    let (n, c) = (x.shape[0], x.shape[1]);
    let s: usize = x.shape[2..].iter().product::<usize>().max(1);
    let inv = T::one() / T::from_f64(s as f64);
    let mut y = Tensor::zeros(vec![n, c]);
    for b in 0..n {
        for ch in 0..c {
            let base = (b * c + ch) * s;
            y.data[b * c + ch] = x.data[base..base + s].iter().copied().sum::<T>() * inv;
        }
    }
    y
}

/// Gradient of [`gap`] back to the spatial layout.
pub fn gap_backward<T: Scalar>(x_shape: &[usize], dy: &Tensor<T>) -> Tensor<T> {
    let (n, c) = (x_shape[0], x_shape[1]);
    let s: usize = x_shape[2..].iter().product::<usize>().max(1);
    let inv = T::one() / T::from_f64(s as f64);
    let mut dx = Tensor::zeros(x_shape.to_vec());
    for b in 0..n {
        for ch in 0..c {
            let base = (b * c + ch) * s;
            let dv = dy.data[b * c + ch] * inv;
            for i in 0..s {
                dx.data[base + i] = dv;
            }
        }
    }
    dx
}

/// Channel-wise modulus of a complex map with an epsilon-smoothed root:
/// `sqrt(re^2 + im^2 + 1e-12)`, so the gradient exists at the origin.
pub fn modulus<T: Scalar>(x: &ComplexTensor<T>) -> Tensor<T> {
    let eps = T::from_f64(1e-12);
    Tensor {
        shape: x.re.shape.clone(),
        data: x
            .re
            .data
            .iter()
            .zip(&x.im.data)
            .map(|(&a, &b)| (a * a + b * b + eps).sqrt())
            .collect(),
    }
}

pub fn modulus_backward<T: Scalar>(
    x: &ComplexTensor<T>,
    y: &Tensor<T>,
    dy: &Tensor<T>,
) -> ComplexTensor<T> {
    let mut dre = Tensor::zeros(x.re.shape.clone());
    let mut dim = Tensor::zeros(x.im.shape.clone());
    for i in 0..dy.data.len() {
        let scale = dy.data[i] / y.data[i];
        dre.data[i] = x.re.data[i] * scale;
        dim.data[i] = x.im.data[i] * scale;
    }
    ComplexTensor { re: dre, im: dim }
}

/// Softmax cross-entropy over `[n, k]` logits with integer labels.
/// Returns (mean loss, probabilities, gradient w.r.t. logits).
pub fn softmax_xent<T: Scalar>(
    logits: &Tensor<T>,
    labels: &[usize],
) -> Result<(T, Tensor<T>, Tensor<T>)> {
    let (n, k) = (logits.shape[0], logits.shape[1]);
    if labels.len() != n {
        return Err(Error::Shape(format!("{n} logit rows, {} labels", labels.len())));
    }
    let mut probs = Tensor::zeros(vec![n, k]);
    let mut dlogits = Tensor::zeros(vec![n, k]);
    let mut loss = T::zero();
    let inv_n = T::one() / T::from_f64(n as f64);
    for b in 0..n {
        if labels[b] >= k {
            return Err(Error::Shape(format!("label {} out of {k} classes", labels[b])));
        }
        let row = &logits.data[b * k..(b + 1) * k];
        let max = row.iter().cloned().fold(T::neg_infinity(), T::max);
        let exps: Vec<T> = row.iter().map(|&v| (v - max).exp()).collect();
        let z: T = exps.iter().copied().sum();
        let p_row = &mut probs.data[b * k..(b + 1) * k];
        for (p, e) in p_row.iter_mut().zip(&exps) {
            *p = *e / z;
        }
        loss += -(p_row[labels[b]].max(T::from_f64(1e-30))).ln();
        let d_row = &mut dlogits.data[b * k..(b + 1) * k];
        for (i, d) in d_row.iter_mut().enumerate() {
            let y = if i == labels[b] { T::one() } else { T::zero() };
            *d = (p_row[i] - y) * inv_n;
        }
    }
    Ok((loss * inv_n, probs, dlogits))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_matches_hand_product() {
        let mut rng = Stream::from_raw(1);
        let mut lin = Linear::<f64>::new(2, 2, &mut rng);
        lin.w.w.data = vec![1.0, 2.0, -3.0, 0.5];
        lin.b.w.data = vec![0.25, -1.0];
        let x = Tensor::new(vec![1, 2], vec![2.0, -1.0]).unwrap();
        let y = lin.forward(&x).unwrap();
        assert_eq!(y.data, vec![1.0 * 2.0 + 2.0 * -1.0 + 0.25, -3.0 * 2.0 + 0.5 * -1.0 - 1.0]);
    }

    #[test]
    fn softmax_uniform_on_equal_logits() {
        let logits = Tensor::new(vec![1, 3], vec![0.0f64, 0.0, 0.0]).unwrap();
        let (loss, probs, _) = softmax_xent(&logits, &[2]).unwrap();
        for &p in &probs.data {
            assert!((p - 1.0 / 3.0).abs() < 1e-12);
        }
        assert!((loss - (3.0f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn xent_gradient_is_probs_minus_onehot() {
        let logits = Tensor::new(vec![2, 3], vec![0.3f64, -1.0, 0.7, 2.0, 0.0, -0.5]).unwrap();
        let (_, probs, dl) = softmax_xent(&logits, &[1, 0]).unwrap();
        for b in 0..2 {
            for k in 0..3 {
                let y = if (b == 0 && k == 1) || (b == 1 && k == 0) { 1.0 } else { 0.0 };
                let expect = (probs.data[b * 3 + k] - y) / 2.0;
                assert!((dl.data[b * 3 + k] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn softmax_argmax_shift_invariant() {
        let base = vec![0.1f64, 1.4, -0.3, 0.9];
        let shifted: Vec<f64> = base.iter().map(|v| v + 100.0).collect();
        let (_, p1, _) = softmax_xent(&Tensor::new(vec![1, 4], base).unwrap(), &[0]).unwrap();
        let (_, p2, _) = softmax_xent(&Tensor::new(vec![1, 4], shifted).unwrap(), &[0]).unwrap();
        for (a, b) in p1.data.iter().zip(&p2.data) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn se_equal_channels_get_equal_gates() {
        let mut rng = Stream::from_raw(2);
        let mut se = SeBlock::<f64>::new(4, 4, &mut rng);
        // Symmetric weights so channel symmetry survives the bottleneck.
        se.fc1.w.w.data.fill(0.3);
        se.fc1.b.w.data.fill(0.1);
        se.fc2.w.w.data.fill(-0.2);
        se.fc2.b.w.data.fill(0.05);
        let x = Tensor::full(vec![1, 4, 3], 2.0);
        let (y, cache) = se.forward(&x).unwrap();
        let g0 = cache.gate.data[0];
        assert!(cache.gate.data.iter().all(|&g| (g - g0).abs() < 1e-15));
        assert!(y.data.iter().all(|&v| (v - 2.0 * g0).abs() < 1e-15));
    }

    #[test]
    fn batchnorm_train_moments_and_eval_path() {
        let mut bn = BatchNorm::<f64>::new(2);
        let mut rng = Stream::from_raw(3);
        let x = Tensor::new(vec![4, 2, 5], (0..40).map(|_| rng.uniform_in(-2.0, 5.0)).collect())
            .unwrap();
        let (y, _) = bn.forward_train(&x).unwrap();
        // Per channel: zero mean, unit variance (gamma = 1, beta = 0).
        for ch in 0..2 {
            let vals: Vec<f64> = (0..4)
                .flat_map(|b| y.data[(b * 2 + ch) * 5..(b * 2 + ch + 1) * 5].to_vec())
                .collect();
            let m: f64 = vals.iter().sum::<f64>() / 20.0;
            let v: f64 = vals.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / 20.0;
            assert!(m.abs() < 1e-12);
            // Unit up to the eps inside the normalizer: var/(var + 1e-5).
            assert!((v - 1.0).abs() < 1e-4);
        }
        // Eval path is deterministic and uses the running stats.
        let e1 = bn.forward_eval(&x).unwrap();
        let e2 = bn.forward_eval(&x).unwrap();
        assert_eq!(e1, e2);
        assert!(bn.running_mean.data.iter().any(|&m| m != 0.0));
    }

    #[test]
    fn dropout_mask_and_determinism() {
        let d = Dropout { p: 0.5 };
        let x = Tensor::full(vec![1, 1000], 1.0f64);
        let (y1, m1) = d.forward_train(&x, &mut Stream::from_raw(9));
        let (y2, _) = d.forward_train(&x, &mut Stream::from_raw(9));
        assert_eq!(y1, y2);
        let kept = m1.data.iter().filter(|&&m| m != 0.0).count();
        assert!((350..=650).contains(&kept), "kept {kept}");
        assert!(y1.data.iter().all(|&v| v == 0.0 || (v - 2.0).abs() < 1e-12));
    }

    #[test]
    fn relu_and_crelu_act_independently() {
        let x = ComplexTensor::new(
            Tensor::new(vec![1, 4], vec![1.0f64, -1.0, 2.0, -2.0]).unwrap(),
            Tensor::new(vec![1, 4], vec![-3.0f64, 3.0, -0.5, 0.5]).unwrap(),
        )
        .unwrap();
        let y = crelu(&x);
        assert_eq!(y.re.data, vec![1.0, 0.0, 2.0, 0.0]);
        assert_eq!(y.im.data, vec![0.0, 3.0, 0.0, 0.5]);
    }

    #[test]
    fn gap_and_modulus_shapes() {
        let x = Tensor::new(vec![2, 3, 4], (0..24).map(|i| i as f64).collect()).unwrap();
        let g = gap(&x);
        assert_eq!(g.shape, vec![2, 3]);
        assert!((g.data[0] - 1.5).abs() < 1e-12);

        let z = ComplexTensor::new(
            Tensor::new(vec![1, 2], vec![3.0f64, 0.0]).unwrap(),
            Tensor::new(vec![1, 2], vec![4.0f64, 0.0]).unwrap(),
        )
        .unwrap();
        let m = modulus(&z);
        assert!((m.data[0] - 5.0).abs() < 1e-9);
    }
}

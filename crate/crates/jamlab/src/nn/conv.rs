//! Convolution layers: complex 1-D for the sequence stream, dense and
//! depthwise 2-D for the image stream.
//!
//! The hot loops all reduce to contiguous slice operations when stride
//! is 1 (saxpy for forward/input-gradient, dot products for weight
//! gradients), which is what the autovectorizer needs; strided layers
//! fall back to indexed loops. Backward methods take the forward input
//! instead of an internal cache, so a layer stays immutable during
//! inference.

use super::{ComplexTensor, Param, ParamRefs, Scalar, Tensor};
use crate::prng::Stream;
use crate::{Error, Result};

pub(crate) fn conv_out_len(l: usize, k: usize, stride: usize, pad: usize) -> usize {
    (l + 2 * pad - k) / stride + 1
}

/// Output range [t0, t1) where t*stride + kk - pad stays inside [0, l),
/// plus the source index for t0. t0 >= t1 means no valid positions;
/// src0 never underflows by choice of t0.
fn strided_span(l: usize, stride: usize, pad: usize, kk: usize, lo: usize) -> (usize, usize, usize) {
    let t0 = if kk >= pad { 0 } else { (pad - kk).div_ceil(stride) };
    let t1 = if pad + l > kk { ((pad + l - kk - 1) / stride + 1).min(lo) } else { 0 };
    // t0*stride + kk >= pad by construction, so this cannot underflow.
    (t0, t1, t0 * stride + kk - pad)
}

/// Interior output range [ti0, ti1) where every kernel tap lands inside
/// the input, so the tap loop can skip bounds checks entirely.
fn interior_span(l: usize, k: usize, stride: usize, pad: usize, lo: usize) -> (usize, usize) {
    let ti0 = pad.div_ceil(stride).min(lo);
    let ti1 = if l + pad >= k { ((l + pad - k) / stride + 1).min(lo) } else { 0 };
    (ti0, ti1.max(ti0))
}

/// y[n,co,t] += scale * sum_{ci,k} w[co,ci,k] x[n,ci,t*stride+k-pad]
///
/// Single pass per output row: each position takes one k-tap dot
/// product against a contiguous input window (specialized for the
/// kernel widths the encoders use).
fn conv1d_fwd_accum<T: Scalar>(
    x: &Tensor<T>,
    w: &Tensor<T>,
    stride: usize,
    pad: usize,
    scale: T,
    y: &mut Tensor<T>,
) {
    let (n, ci, l) = (x.shape[0], x.shape[1], x.shape[2]);
    let (co, k) = (w.shape[0], w.shape[2]);
    let lo = y.shape[2];
    let (ti0, ti1) = interior_span(l, k, stride, pad, lo);
    for b in 0..n {
        for o in 0..co {
            let y_row = &mut y.data[(b * co + o) * lo..(b * co + o + 1) * lo];
            for i in 0..ci {
                let x_row = &x.data[(b * ci + i) * l..(b * ci + i + 1) * l];
                let w_row = &w.data[(o * ci + i) * k..(o * ci + i + 1) * k];
                // ti0*stride >= pad whenever the interior is non-empty.
                let mut base = (ti0 * stride).saturating_sub(pad);
                match k {
                    1 => {
                        let w0 = w_row[0];
                        for yv in &mut y_row[ti0..ti1] {
                            *yv += scale * (w0 * x_row[base]);
                            base += stride;
                        }
                    }
                    3 => {
                        let (w0, w1, w2) = (w_row[0], w_row[1], w_row[2]);
                        for yv in &mut y_row[ti0..ti1] {
                            *yv += scale
                                * (w0 * x_row[base]
                                    + w1 * x_row[base + 1]
                                    + w2 * x_row[base + 2]);
                            base += stride;
                        }
                    }
                    _ => {
                        for yv in &mut y_row[ti0..ti1] {
                            let mut acc = T::zero();
                            for (&wv, &xv) in w_row.iter().zip(&x_row[base..base + k]) {
                                acc += wv * xv;
                            }
                            *yv += scale * acc;
                            base += stride;
                        }
                    }
                }
                for t in (0..ti0).chain(ti1..lo) {
                    let mut acc = T::zero();
                    for (kk, &wv) in w_row.iter().enumerate() {
                        let src = t * stride + kk;
                        if src >= pad && src - pad < l {
                            acc += wv * x_row[src - pad];
                        }
                    }
                    y_row[t] += scale * acc;
                }
            }
        }
    }
}

/// dx[n,ci,t*stride+k-pad] += scale * w[co,ci,k] dy[n,co,t]
///
/// Stride 1 uses the correlation form dx[s] = sum_k w[k] dy[s+pad-k]
/// (gather, vectorizes); larger strides scatter a k-wide window per
/// output position in one pass.
fn conv1d_bwd_input<T: Scalar>(
    dy: &Tensor<T>,
    w: &Tensor<T>,
    stride: usize,
    pad: usize,
    scale: T,
    dx: &mut Tensor<T>,
) {
    let (n, co, lo) = (dy.shape[0], dy.shape[1], dy.shape[2]);
    let (ci, k) = (w.shape[1], w.shape[2]);
    let l = dx.shape[2];
    // Gather-form interior for stride 1: every dy[s+pad-k..=s+pad] valid.
    let si0 = (k - 1).saturating_sub(pad).min(l);
    let si1 = lo.saturating_sub(pad).min(l).max(si0);
    for b in 0..n {
        for o in 0..co {
            let dy_row = &dy.data[(b * co + o) * lo..(b * co + o + 1) * lo];
            for i in 0..ci {
                let dx_row = &mut dx.data[(b * ci + i) * l..(b * ci + i + 1) * l];
                let w_row = &w.data[(o * ci + i) * k..(o * ci + i + 1) * k];
                if stride == 1 {
                    match k {
                        1 => {
                            let w0 = w_row[0] * scale;
                            for s in si0..si1 {
                                dx_row[s] += w0 * dy_row[s + pad];
                            }
                        }
                        3 => {
                            let (w0, w1, w2) =
                                (w_row[0] * scale, w_row[1] * scale, w_row[2] * scale);
                            for s in si0..si1 {
                                let t = s + pad;
                                dx_row[s] +=
                                    w0 * dy_row[t] + w1 * dy_row[t - 1] + w2 * dy_row[t - 2];
                            }
                        }
                        _ => {
                            for s in si0..si1 {
                                let t = s + pad;
                                let mut acc = T::zero();
                                for (kk, &wv) in w_row.iter().enumerate() {
                                    acc += wv * dy_row[t - kk];
                                }
                                dx_row[s] += scale * acc;
                            }
                        }
                    }
                    for s in (0..si0).chain(si1..l) {
                        let mut acc = T::zero();
                        for (kk, &wv) in w_row.iter().enumerate() {
                            let t = s + pad;
                            if t >= kk && t - kk < lo {
                                acc += wv * dy_row[t - kk];
                            }
                        }
                        dx_row[s] += scale * acc;
                    }
                } else {
                    let (ti0, ti1) = interior_span(l, k, stride, pad, lo);
                    let mut base = (ti0 * stride).saturating_sub(pad);
                    match k {
                        1 => {
                            let w0 = w_row[0] * scale;
                            for &dv in &dy_row[ti0..ti1] {
                                dx_row[base] += w0 * dv;
                                base += stride;
                            }
                        }
                        3 => {
                            let (w0, w1, w2) =
                                (w_row[0] * scale, w_row[1] * scale, w_row[2] * scale);
                            for &dv in &dy_row[ti0..ti1] {
                                dx_row[base] += w0 * dv;
                                dx_row[base + 1] += w1 * dv;
                                dx_row[base + 2] += w2 * dv;
                                base += stride;
                            }
                        }
                        _ => {
                            for &dv in &dy_row[ti0..ti1] {
                                let dv = dv * scale;
                                for (kk, &wv) in w_row.iter().enumerate() {
                                    dx_row[base + kk] += wv * dv;
                                }
                                base += stride;
                            }
                        }
                    }
                    for t in (0..ti0).chain(ti1..lo) {
                        let dv = dy_row[t] * scale;
                        for (kk, &wv) in w_row.iter().enumerate() {
                            let src = t * stride + kk;
                            if src >= pad && src - pad < l {
                                dx_row[src - pad] += wv * dv;
                            }
                        }
                    }
                }
            }
        }
    }
}

/// dw[co,ci,k] += scale * sum_{n,t} x[n,ci,t*stride+k-pad] dy[n,co,t]
///
/// One pass per row pair, k independent accumulator chains.
fn conv1d_bwd_weight<T: Scalar>(
    x: &Tensor<T>,
    dy: &Tensor<T>,
    stride: usize,
    pad: usize,
    scale: T,
    dw: &mut Tensor<T>,
) {
    let (n, ci, l) = (x.shape[0], x.shape[1], x.shape[2]);
    let (co, lo) = (dy.shape[1], dy.shape[2]);
    let k = dw.shape[2];
    let (ti0, ti1) = interior_span(l, k, stride, pad, lo);
    let mut acc = vec![T::zero(); k];
    for b in 0..n {
        for o in 0..co {
            let dy_row = &dy.data[(b * co + o) * lo..(b * co + o + 1) * lo];
            for i in 0..ci {
                let x_row = &x.data[(b * ci + i) * l..(b * ci + i + 1) * l];
                let dw_row = &mut dw.data[(o * ci + i) * k..(o * ci + i + 1) * k];
                let mut base = (ti0 * stride).saturating_sub(pad);
                match k {
                    1 => {
                        let mut a0 = T::zero();
                        for &dv in &dy_row[ti0..ti1] {
                            a0 += x_row[base] * dv;
                            base += stride;
                        }
                        dw_row[0] += scale * a0;
                    }
                    3 => {
                        let (mut a0, mut a1, mut a2) = (T::zero(), T::zero(), T::zero());
                        for &dv in &dy_row[ti0..ti1] {
                            a0 += x_row[base] * dv;
                            a1 += x_row[base + 1] * dv;
                            a2 += x_row[base + 2] * dv;
                            base += stride;
                        }
                        dw_row[0] += scale * a0;
                        dw_row[1] += scale * a1;
                        dw_row[2] += scale * a2;
                    }
                    _ => {
                        acc.fill(T::zero());
                        for &dv in &dy_row[ti0..ti1] {
                            for (a, &xv) in acc.iter_mut().zip(&x_row[base..base + k]) {
                                *a += xv * dv;
                            }
                            base += stride;
                        }
                        for (dwv, &a) in dw_row.iter_mut().zip(&acc) {
                            *dwv += scale * a;
                        }
                    }
                }
                for t in (0..ti0).chain(ti1..lo) {
                    let dv = dy_row[t];
                    for (kk, dwv) in dw_row.iter_mut().enumerate() {
                        let src = t * stride + kk;
                        if src >= pad && src - pad < l {
                            *dwv += scale * (x_row[src - pad] * dv);
                        }
                    }
                }
            }
        }
    }
}

/// Complex 1-D convolution: with input h = h_r + j h_i and kernel
/// W = W_r + j W_i,
///
/// ```text
/// re(out) = W_r * h_r - W_i * h_i + b_r
/// im(out) = W_r * h_i + W_i * h_r + b_i
/// ```
///
/// which is exactly the complex multiply-accumulate, so a global phase
/// rotation of the input rotates the output by the same phase.
#[derive(Debug, Clone)]
pub struct Conv1dComplex<T> {
    pub wr: Param<T>,
    pub wi: Param<T>,
    pub br: Param<T>,
    pub bi: Param<T>,
    pub stride: usize,
    pub pad: usize,
}

impl<T: Scalar> Conv1dComplex<T> {
    pub fn new(c_in: usize, c_out: usize, k: usize, stride: usize, pad: usize, rng: &mut Stream) -> Self {
        // Fan-in counts both real planes feeding each complex MAC.
        let fan_in = 2 * c_in * k;
        Conv1dComplex {
            wr: Param::kaiming(vec![c_out, c_in, k], fan_in, rng),
            wi: Param::kaiming(vec![c_out, c_in, k], fan_in, rng),
            br: Param::new(Tensor::zeros(vec![c_out])),
            bi: Param::new(Tensor::zeros(vec![c_out])),
            stride,
            pad,
        }
    }

    pub fn out_shape(&self, x: &[usize]) -> Vec<usize> {
        vec![x[0], self.wr.w.shape[0], conv_out_len(x[2], self.wr.w.shape[2], self.stride, self.pad)]
    }

    fn check(&self, x: &ComplexTensor<T>) -> Result<()> {
        if x.shape().len() != 3 || x.shape()[1] != self.wr.w.shape[1] {
            return Err(Error::Shape(format!(
                "complex conv expects [n, {}, l], got {:?}",
                self.wr.w.shape[1],
                x.shape()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, x: &ComplexTensor<T>) -> Result<ComplexTensor<T>> {
        self.check(x)?;
        let shape = self.out_shape(x.shape());
        let (n, co, lo) = (shape[0], shape[1], shape[2]);
        let mut re = Tensor::zeros(shape.clone());
        let mut im = Tensor::zeros(shape);
        for b in 0..n {
            for o in 0..co {
                let vr = self.br.w.data[o];
                let vi = self.bi.w.data[o];
                re.data[(b * co + o) * lo..(b * co + o + 1) * lo].fill(vr);
                im.data[(b * co + o) * lo..(b * co + o + 1) * lo].fill(vi);
            }
        }
        conv1d_fwd_accum(&x.re, &self.wr.w, self.stride, self.pad, T::one(), &mut re);
        conv1d_fwd_accum(&x.im, &self.wi.w, self.stride, self.pad, -T::one(), &mut re);
        conv1d_fwd_accum(&x.im, &self.wr.w, self.stride, self.pad, T::one(), &mut im);
        conv1d_fwd_accum(&x.re, &self.wi.w, self.stride, self.pad, T::one(), &mut im);
        Ok(ComplexTensor { re, im })
    }

    /// Accumulates parameter gradients and returns the input gradient.
    pub fn backward(&mut self, x: &ComplexTensor<T>, dy: &ComplexTensor<T>) -> ComplexTensor<T> {
        let mut dx = ComplexTensor::zeros(x.shape().to_vec());
        conv1d_bwd_input(&dy.re, &self.wr.w, self.stride, self.pad, T::one(), &mut dx.re);
        conv1d_bwd_input(&dy.im, &self.wi.w, self.stride, self.pad, T::one(), &mut dx.re);
        conv1d_bwd_input(&dy.re, &self.wi.w, self.stride, self.pad, -T::one(), &mut dx.im);
        conv1d_bwd_input(&dy.im, &self.wr.w, self.stride, self.pad, T::one(), &mut dx.im);

        conv1d_bwd_weight(&x.re, &dy.re, self.stride, self.pad, T::one(), &mut self.wr.g);
        conv1d_bwd_weight(&x.im, &dy.im, self.stride, self.pad, T::one(), &mut self.wr.g);
        conv1d_bwd_weight(&x.im, &dy.re, self.stride, self.pad, -T::one(), &mut self.wi.g);
        conv1d_bwd_weight(&x.re, &dy.im, self.stride, self.pad, T::one(), &mut self.wi.g);

        let (n, co, lo) = (dy.re.shape[0], dy.re.shape[1], dy.re.shape[2]);
        for b in 0..n {
            for o in 0..co {
                let row = (b * co + o) * lo;
                self.br.g.data[o] += dy.re.data[row..row + lo].iter().copied().sum();
                self.bi.g.data[o] += dy.im.data[row..row + lo].iter().copied().sum();
            }
        }
        dx
    }

    pub fn params_mut(&mut self) -> ParamRefs<'_, T> {
        vec![
            ("wr".into(), &mut self.wr),
            ("wi".into(), &mut self.wi),
            ("br".into(), &mut self.br),
            ("bi".into(), &mut self.bi),
        ]
    }
}

/// Receptive-field unpack for one image: col[(i*k+kh)*k+kw][oh*wo+ow] =
/// x[i, oh*s+kh-p, ow*s+kw-p], zero where the window leaves the input.
/// Turns every convolution loop into contiguous multiply-accumulates.
#[allow(clippy::too_many_arguments)]
fn im2col<T: Scalar>(
    x_img: &[T],
    ci: usize,
    h: usize,
    w: usize,
    k: usize,
    s: usize,
    p: usize,
    ho: usize,
    wo: usize,
    col: &mut [T],
) {
    let spatial = ho * wo;
    for i in 0..ci {
        let x_plane = &x_img[i * h * w..(i + 1) * h * w];
        for kh in 0..k {
            for kw in 0..k {
                let r = (i * k + kh) * k + kw;
                let col_row = &mut col[r * spatial..(r + 1) * spatial];
                let (t0, t1, src0) = strided_span(w, s, p, kw, wo);
                for oh in 0..ho {
                    let dst = &mut col_row[oh * wo..(oh + 1) * wo];
                    let ih = oh * s + kh;
                    if ih < p || ih - p >= h || t0 >= t1 {
                        dst.fill(T::zero());
                        continue;
                    }
                    let x_row = &x_plane[(ih - p) * w..(ih - p + 1) * w];
                    dst[..t0].fill(T::zero());
                    dst[t1..].fill(T::zero());
                    if s == 1 {
                        dst[t0..t1].copy_from_slice(&x_row[src0..src0 + (t1 - t0)]);
                    } else {
                        let mut src = src0;
                        for d in &mut dst[t0..t1] {
                            *d = x_row[src];
                            src += s;
                        }
                    }
                }
            }
        }
    }
}

/// Adjoint of [`im2col`]: scatter-adds column gradients back onto the
/// image gradient.
#[allow(clippy::too_many_arguments)]
fn col2im_add<T: Scalar>(
    dcol: &[T],
    ci: usize,
    h: usize,
    w: usize,
    k: usize,
    s: usize,
    p: usize,
    ho: usize,
    wo: usize,
    dx_img: &mut [T],
) {
    let spatial = ho * wo;
    for i in 0..ci {
        let dx_plane = &mut dx_img[i * h * w..(i + 1) * h * w];
        for kh in 0..k {
            for kw in 0..k {
                let r = (i * k + kh) * k + kw;
                let col_row = &dcol[r * spatial..(r + 1) * spatial];
                let (t0, t1, dst0) = strided_span(w, s, p, kw, wo);
                if t0 >= t1 {
                    continue;
                }
                for oh in 0..ho {
                    let ih = oh * s + kh;
                    if ih < p || ih - p >= h {
                        continue;
                    }
                    let src_row = &col_row[oh * wo..(oh + 1) * wo];
                    let dx_row = &mut dx_plane[(ih - p) * w..(ih - p + 1) * w];
                    if s == 1 {
                        for (dv, &sv) in
                            dx_row[dst0..dst0 + (t1 - t0)].iter_mut().zip(&src_row[t0..t1])
                        {
                            *dv += sv;
                        }
                    } else {
                        let mut dst = dst0;
                        for &sv in &src_row[t0..t1] {
                            dx_row[dst] += sv;
                            dst += s;
                        }
                    }
                }
            }
        }
    }
}

/// Dense 2-D convolution over `[n, c, h, w]`, square kernel.
#[derive(Debug, Clone)]
pub struct Conv2d<T> {
    pub w: Param<T>,
    pub b: Param<T>,
    pub stride: usize,
    pub pad: usize,
}

impl<T: Scalar> Conv2d<T> {
    pub fn new(c_in: usize, c_out: usize, k: usize, stride: usize, pad: usize, rng: &mut Stream) -> Self {
        Conv2d {
            w: Param::kaiming(vec![c_out, c_in, k, k], c_in * k * k, rng),
            b: Param::new(Tensor::zeros(vec![c_out])),
            stride,
            pad,
        }
    }

    fn k(&self) -> usize {
        *self.w.w.shape.last().unwrap()
    }

    pub fn out_shape(&self, x: &[usize]) -> Vec<usize> {
        let k = self.k();
        vec![
            x[0],
            self.w.w.shape[0],
            conv_out_len(x[2], k, self.stride, self.pad),
            conv_out_len(x[3], k, self.stride, self.pad),
        ]
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        if x.shape.len() != 4 || x.shape[1] != self.w.w.shape[1] {
            return Err(Error::Shape(format!(
                "conv2d expects [n, {}, h, w], got {:?}",
                self.w.w.shape[1],
                x.shape
            )));
        }
        let (n, ci, h, wd) = (x.shape[0], x.shape[1], x.shape[2], x.shape[3]);
        let co = self.w.w.shape[0];
        let k = self.k();
        let (s, p) = (self.stride, self.pad);
        let (ho, wo) = (conv_out_len(h, k, s, p), conv_out_len(wd, k, s, p));
        let spatial = ho * wo;
        let r_dim = ci * k * k;
        let mut y = Tensor::zeros(vec![n, co, ho, wo]);
        let mut col = vec![T::zero(); r_dim * spatial];
        for b in 0..n {
            im2col(
                &x.data[b * ci * h * wd..(b + 1) * ci * h * wd],
                ci,
                h,
                wd,
                k,
                s,
                p,
                ho,
                wo,
                &mut col,
            );
            for o in 0..co {
                let y_row = &mut y.data[(b * co + o) * spatial..(b * co + o + 1) * spatial];
                y_row.fill(self.b.w.data[o]);
                let w_row = &self.w.w.data[o * r_dim..(o + 1) * r_dim];
                for (r, &wv) in w_row.iter().enumerate() {
                    let c_row = &col[r * spatial..(r + 1) * spatial];
                    for (yv, &cv) in y_row.iter_mut().zip(c_row) {
                        *yv += wv * cv;
                    }
                }
            }
        }
        Ok(y)
    }

    pub fn backward(&mut self, x: &Tensor<T>, dy: &Tensor<T>) -> Tensor<T> {
        let (n, ci, h, wd) = (x.shape[0], x.shape[1], x.shape[2], x.shape[3]);
        let co = self.w.w.shape[0];
        let k = self.k();
        let (s, p) = (self.stride, self.pad);
        let (ho, wo) = (dy.shape[2], dy.shape[3]);
        let spatial = ho * wo;
        let r_dim = ci * k * k;
        let mut dx = Tensor::zeros(x.shape.clone());
        let mut col = vec![T::zero(); r_dim * spatial];
        let mut dcol = vec![T::zero(); r_dim * spatial];
        for b in 0..n {
            im2col(
                &x.data[b * ci * h * wd..(b + 1) * ci * h * wd],
                ci,
                h,
                wd,
                k,
                s,
                p,
                ho,
                wo,
                &mut col,
            );
            dcol.fill(T::zero());
            for o in 0..co {
                let dy_row = &dy.data[(b * co + o) * spatial..(b * co + o + 1) * spatial];
                self.b.g.data[o] += dy_row.iter().copied().sum();
                let w_row = &self.w.w.data[o * r_dim..(o + 1) * r_dim];
                let dw_row = &mut self.w.g.data[o * r_dim..(o + 1) * r_dim];
                for r in 0..r_dim {
                    let wv = w_row[r];
                    let c_row = &col[r * spatial..(r + 1) * spatial];
                    let dc_row = &mut dcol[r * spatial..(r + 1) * spatial];
                    let mut acc = T::zero();
                    for ((dc, &dv), &cv) in dc_row.iter_mut().zip(dy_row).zip(c_row) {
                        *dc += wv * dv;
                        acc += cv * dv;
                    }
                    dw_row[r] += acc;
                }
            }
            col2im_add(
                &dcol,
                ci,
                h,
                wd,
                k,
                s,
                p,
                ho,
                wo,
                &mut dx.data[b * ci * h * wd..(b + 1) * ci * h * wd],
            );
        }
        dx
    }

    pub fn params_mut(&mut self) -> ParamRefs<'_, T> {
        vec![("w".into(), &mut self.w), ("b".into(), &mut self.b)]
    }
}

/// y_plane[oh, ow] += wv * x_plane[oh*s+kh-p, ow*s+kw-p] over valid indices.
#[allow(clippy::too_many_arguments)]
fn accum_rows<T: Scalar>(
    x_plane: &[T],
    h: usize,
    w: usize,
    s: usize,
    p: usize,
    kh: usize,
    kw: usize,
    wv: T,
    y_plane: &mut [T],
    ho: usize,
    wo: usize,
) {
    for oh in 0..ho {
        let ih = oh * s + kh;
        if ih < p || ih - p >= h {
            continue;
        }
        let x_row = &x_plane[(ih - p) * w..(ih - p + 1) * w];
        let y_row = &mut y_plane[oh * wo..(oh + 1) * wo];
        if s == 1 {
            let t0 = p.saturating_sub(kw);
            let t1 = (w + p - kw).min(wo);
            if t0 >= t1 {
                continue;
            }
            let xs = &x_row[t0 + kw - p..t1 + kw - p];
            for (yv, &xv) in y_row[t0..t1].iter_mut().zip(xs) {
                *yv += wv * xv;
            }
        } else {
            let (t0, t1, mut src) = strided_span(w, s, p, kw, wo);
            for yv in &mut y_row[t0..t1] {
                *yv += wv * x_row[src];
                src += s;
            }
        }
    }
}

/// dx_plane[oh*s+kh-p, ow*s+kw-p] += wv * dy_plane[oh, ow].
#[allow(clippy::too_many_arguments)]
fn scatter_rows<T: Scalar>(
    dy_plane: &[T],
    ho: usize,
    wo: usize,
    s: usize,
    p: usize,
    kh: usize,
    kw: usize,
    wv: T,
    dx_plane: &mut [T],
    h: usize,
    w: usize,
) {
    for oh in 0..ho {
        let ih = oh * s + kh;
        if ih < p || ih - p >= h {
            continue;
        }
        let dy_row = &dy_plane[oh * wo..(oh + 1) * wo];
        let dx_row = &mut dx_plane[(ih - p) * w..(ih - p + 1) * w];
        if s == 1 {
            let t0 = p.saturating_sub(kw);
            let t1 = (w + p - kw).min(wo);
            if t0 >= t1 {
                continue;
            }
            let xs = &mut dx_row[t0 + kw - p..t1 + kw - p];
            for (xv, &dv) in xs.iter_mut().zip(&dy_row[t0..t1]) {
                *xv += wv * dv;
            }
        } else {
            let (t0, t1, mut src) = strided_span(w, s, p, kw, wo);
            for &dv in &dy_row[t0..t1] {
                dx_row[src] += wv * dv;
                src += s;
            }
        }
    }
}

/// sum over (oh, ow) of x_plane[oh*s+kh-p, ow*s+kw-p] * dy_plane[oh, ow].
#[allow(clippy::too_many_arguments)]
fn corr_rows<T: Scalar>(
    x_plane: &[T],
    h: usize,
    w: usize,
    s: usize,
    p: usize,
    kh: usize,
    kw: usize,
    dy_plane: &[T],
    ho: usize,
    wo: usize,
) -> T {
    let mut acc = T::zero();
    for oh in 0..ho {
        let ih = oh * s + kh;
        if ih < p || ih - p >= h {
            continue;
        }
        let x_row = &x_plane[(ih - p) * w..(ih - p + 1) * w];
        let dy_row = &dy_plane[oh * wo..(oh + 1) * wo];
        if s == 1 {
            let t0 = p.saturating_sub(kw);
            let t1 = (w + p - kw).min(wo);
            if t0 < t1 {
                let xs = &x_row[t0 + kw - p..t1 + kw - p];
                acc += xs.iter().zip(&dy_row[t0..t1]).map(|(&a, &b)| a * b).sum();
            }
        } else {
            let (t0, t1, mut src) = strided_span(w, s, p, kw, wo);
            for &dv in &dy_row[t0..t1] {
                acc += x_row[src] * dv;
                src += s;
            }
        }
    }
    acc
}

/// Depthwise 2-D convolution: one square kernel per channel.
#[derive(Debug, Clone)]
pub struct DepthwiseConv2d<T> {
    pub w: Param<T>,
    pub b: Param<T>,
    pub stride: usize,
    pub pad: usize,
}

impl<T: Scalar> DepthwiseConv2d<T> {
    pub fn new(c: usize, k: usize, stride: usize, pad: usize, rng: &mut Stream) -> Self {
        DepthwiseConv2d {
            w: Param::kaiming(vec![c, k, k], k * k, rng),
            b: Param::new(Tensor::zeros(vec![c])),
            stride,
            pad,
        }
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        if x.shape.len() != 4 || x.shape[1] != self.w.w.shape[0] {
            return Err(Error::Shape(format!(
                "depthwise conv expects [n, {}, h, w], got {:?}",
                self.w.w.shape[0],
                x.shape
            )));
        }
        let (n, c, h, wd) = (x.shape[0], x.shape[1], x.shape[2], x.shape[3]);
        let k = self.w.w.shape[1];
        let (s, p) = (self.stride, self.pad);
        let (ho, wo) = (conv_out_len(h, k, s, p), conv_out_len(wd, k, s, p));
        let mut y = Tensor::zeros(vec![n, c, ho, wo]);
        for b in 0..n {
            for ch in 0..c {
                let x_plane = &x.data[(b * c + ch) * h * wd..(b * c + ch + 1) * h * wd];
                let y_plane = &mut y.data[(b * c + ch) * ho * wo..(b * c + ch + 1) * ho * wo];
                y_plane.fill(self.b.w.data[ch]);
                for kh in 0..k {
                    for kw in 0..k {
                        let wv = self.w.w.data[(ch * k + kh) * k + kw];
                        accum_rows(x_plane, h, wd, s, p, kh, kw, wv, y_plane, ho, wo);
                    }
                }
            }
        }
        Ok(y)
    }

    pub fn backward(&mut self, x: &Tensor<T>, dy: &Tensor<T>) -> Tensor<T> {
        let (n, c, h, wd) = (x.shape[0], x.shape[1], x.shape[2], x.shape[3]);
        let k = self.w.w.shape[1];
        let (s, p) = (self.stride, self.pad);
        let (ho, wo) = (dy.shape[2], dy.shape[3]);
        let mut dx = Tensor::zeros(x.shape.clone());
        for b in 0..n {
            for ch in 0..c {
                let x_plane = &x.data[(b * c + ch) * h * wd..(b * c + ch + 1) * h * wd];
                let dx_plane = &mut dx.data[(b * c + ch) * h * wd..(b * c + ch + 1) * h * wd];
                let dy_plane = &dy.data[(b * c + ch) * ho * wo..(b * c + ch + 1) * ho * wo];
                self.b.g.data[ch] += dy_plane.iter().copied().sum();
                for kh in 0..k {
                    for kw in 0..k {
                        let wi = (ch * k + kh) * k + kw;
                        let wv = self.w.w.data[wi];
                        scatter_rows(dy_plane, ho, wo, s, p, kh, kw, wv, dx_plane, h, wd);
                        self.w.g.data[wi] +=
                            corr_rows(x_plane, h, wd, s, p, kh, kw, dy_plane, ho, wo);
                    }
                }
            }
        }
        dx
    }

    pub fn params_mut(&mut self) -> ParamRefs<'_, T> {
        vec![("w".into(), &mut self.w), ("b".into(), &mut self.b)]
    }
}

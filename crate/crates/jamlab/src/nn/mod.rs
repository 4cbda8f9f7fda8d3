//! Minimal neural-network stack: dense tensors, hand-derived backward
//! passes for every layer, Adam, and the warmup-plus-cosine schedule.
//!
//! Scope is deliberately small: exactly the layers the classifier needs,
//! on CPU, in `f32`. Every layer is generic over the scalar so the same
//! code paths run in `f64` under the finite-difference harness in
//! [`gradcheck`]; that harness is what certifies the backward passes.
//!
//! Layout conventions: tensors are dense row-major; feature maps carry an
//! explicit batch dimension (`[n, c, l]` for sequences, `[n, c, h, w]`
//! for images, `[n, d]` for vectors). Forward methods take `&self` and
//! return the output plus a cache of whatever backward needs, so
//! inference from shared immutable parameters is freely parallel;
//! backward takes `&mut self` and accumulates into each parameter's
//! gradient buffer in a fixed order, which keeps training bit-for-bit
//! reproducible.

pub mod conv;
pub mod gradcheck;
pub mod layers;
pub mod optim;

pub use conv::{Conv1dComplex, Conv2d, DepthwiseConv2d};
pub use layers::{
    crelu, crelu_backward, gap, gap_backward, modulus, modulus_backward, relu, relu_backward,
    sigmoid_scalar, softmax_xent, BatchNorm, BnCache, CBnCache, ComplexBatchNorm, Dropout, Linear,
    SeBlock, SeCache,
};
pub use optim::{lr_at, Adam};

use crate::{Error, Result};

/// Floating-point scalar the stack is generic over. `f32` for real
/// training, `f64` for gradient certification.
pub trait Scalar:
    num_traits::Float
    + std::iter::Sum
    + std::ops::AddAssign
    + std::ops::MulAssign
    + std::fmt::Debug
    + std::fmt::Display
    + Send
    + Sync
    + 'static
{
    /// Dtype tag recorded in checkpoint manifests.
    const DTYPE: &'static str;
    /// Bytes per element in checkpoint blobs.
    const SIZE: usize;

    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn write_le(self, out: &mut Vec<u8>);
    fn read_le(bytes: &[u8]) -> Self;
}

impl Scalar for f32 {
    const DTYPE: &'static str = "f32";
    const SIZE: usize = 4;

    fn from_f64(x: f64) -> Self {
        x as f32
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
    fn read_le(bytes: &[u8]) -> Self {
        f32::from_le_bytes(bytes.try_into().expect("4-byte f32"))
    }
}

impl Scalar for f64 {
    const DTYPE: &'static str = "f64";
    const SIZE: usize = 8;

    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
    fn read_le(bytes: &[u8]) -> Self {
        f64::from_le_bytes(bytes.try_into().expect("8-byte f64"))
    }
}

/// Dense row-major tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    pub shape: Vec<usize>,
    pub data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn new(shape: Vec<usize>, data: Vec<T>) -> Result<Self> {
        let numel: usize = shape.iter().product();
        if numel != data.len() {
            return Err(Error::Shape(format!(
                "shape {:?} wants {} elements, got {}",
                shape,
                numel,
                data.len()
            )));
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let numel = shape.iter().product();
        Tensor { shape, data: vec![T::zero(); numel] }
    }

    pub fn full(shape: Vec<usize>, v: T) -> Self {
        let numel = shape.iter().product();
        Tensor { shape, data: vec![v; numel] }
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    /// Fails on the first non-finite element, naming `what`.
    pub fn check_finite(&self, what: &str) -> Result<()> {
        for (i, v) in self.data.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::Numeric(format!("{what}: non-finite value {v} at index {i}")));
            }
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Tensor { shape: self.shape.clone(), data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn add_assign(&mut self, other: &Tensor<T>) {
        debug_assert_eq!(self.shape, other.shape);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += *b;
        }
    }
}

/// A learnable tensor with its gradient accumulator.
#[derive(Debug, Clone, PartialEq)]
pub struct Param<T> {
    pub w: Tensor<T>,
    pub g: Tensor<T>,
}

impl<T: Scalar> Param<T> {
    pub fn new(w: Tensor<T>) -> Self {
        let g = Tensor::zeros(w.shape.clone());
        Param { w, g }
    }

    /// Kaiming-style uniform init over `+-sqrt(6 / fan_in)`.
    pub fn kaiming(shape: Vec<usize>, fan_in: usize, rng: &mut crate::prng::Stream) -> Self {
        let bound = (6.0 / fan_in as f64).sqrt();
        let numel: usize = shape.iter().product();
        let data = (0..numel).map(|_| T::from_f64(rng.uniform_in(-bound, bound))).collect();
        Param::new(Tensor { shape, data })
    }

    pub fn zero_grad(&mut self) {
        for g in &mut self.g.data {
            *g = T::zero();
        }
    }
}

/// Complex-valued feature map as two equally shaped real tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexTensor<T> {
    pub re: Tensor<T>,
    pub im: Tensor<T>,
}

impl<T: Scalar> ComplexTensor<T> {
    pub fn new(re: Tensor<T>, im: Tensor<T>) -> Result<Self> {
        if re.shape != im.shape {
            return Err(Error::Shape(format!(
                "complex parts disagree: {:?} vs {:?}",
                re.shape, im.shape
            )));
        }
        Ok(ComplexTensor { re, im })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        ComplexTensor { re: Tensor::zeros(shape.clone()), im: Tensor::zeros(shape) }
    }

    pub fn shape(&self) -> &[usize] {
        &self.re.shape
    }

    pub fn add_assign(&mut self, other: &ComplexTensor<T>) {
        self.re.add_assign(&other.re);
        self.im.add_assign(&other.im);
    }

    pub fn check_finite(&self, what: &str) -> Result<()> {
        self.re.check_finite(what)?;
        self.im.check_finite(what)
    }
}

/// Named mutable views of every parameter, in a fixed traversal order.
/// The optimizer aligns its moment buffers with this order and the
/// checkpoint writer keys blobs by the names.
pub type ParamRefs<'a, T> = Vec<(String, &'a mut Param<T>)>;

/// Prefixes every name in `refs` (helper for composing layers).
pub fn with_prefix<'a, T>(prefix: &str, refs: ParamRefs<'a, T>) -> ParamRefs<'a, T> {
    refs.into_iter().map(|(n, p)| (format!("{prefix}.{n}"), p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tensor_shape_checks() {
        assert!(Tensor::<f32>::new(vec![2, 3], vec![0.0; 6]).is_ok());
        assert!(Tensor::<f32>::new(vec![2, 3], vec![0.0; 5]).is_err());
        let z = Tensor::<f32>::zeros(vec![4, 5]);
        assert_eq!(z.numel(), 20);
    }

    #[test]
    fn finiteness_diagnostic_names_offender() {
        let mut t = Tensor::<f32>::zeros(vec![3]);
        t.data[1] = f32::NAN;
        let err = t.check_finite("stage2 activation").unwrap_err();
        assert!(err.to_string().contains("stage2 activation"));
    }

    #[test]
    fn complex_tensor_rejects_mismatched_parts() {
        let a = Tensor::<f32>::zeros(vec![2, 2]);
        let b = Tensor::<f32>::zeros(vec![2, 3]);
        assert!(ComplexTensor::new(a, b).is_err());
    }

    #[test]
    fn kaiming_bound_and_determinism() {
        let mut rng = crate::prng::Stream::from_raw(1);
        let p: Param<f32> = Param::kaiming(vec![8, 4], 4, &mut rng);
        let bound = (6.0f32 / 4.0).sqrt();
        assert!(p.w.data.iter().all(|&v| v.abs() <= bound));
        let mut rng2 = crate::prng::Stream::from_raw(1);
        let q: Param<f32> = Param::kaiming(vec![8, 4], 4, &mut rng2);
        assert_eq!(p.w, q.w);
    }
}

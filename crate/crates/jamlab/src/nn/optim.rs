//! Adam with decoupled weight decay, and the warmup-then-cosine
//! learning-rate schedule used for training.

use super::{ParamRefs, Scalar};
use crate::{Error, Result};

/// Adam optimizer. Moment buffers are allocated on first `step` in the
/// order the parameters are visited, so the visiting order must stay
/// fixed across steps (it does: model parameter lists are deterministic).
#[derive(Debug, Clone)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(weight_decay: f64) -> Self {
        Adam { beta1: 0.9, beta2: 0.999, eps: 1e-8, weight_decay, t: 0, m: Vec::new(), v: Vec::new() }
    }

    pub fn steps_taken(&self) -> u64 {
        self.t
    }

    /// One update over every parameter, with bias-corrected moments and
    /// weight decay applied directly to the weights (not through the
    /// moment estimates). A non-finite gradient aborts with the name of
    /// the offending parameter.
    pub fn step<T: Scalar>(&mut self, mut params: ParamRefs<'_, T>, lr: f64) -> Result<()> {
        if self.m.is_empty() {
            for (_, p) in params.iter() {
                self.m.push(vec![0.0; p.w.data.len()]);
                self.v.push(vec![0.0; p.w.data.len()]);
            }
        }
        if self.m.len() != params.len() {
            return Err(Error::Shape(format!(
                "optimizer saw {} parameters, expected {}",
                params.len(),
                self.m.len()
            )));
        }
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);

        for (idx, (name, p)) in params.iter_mut().enumerate() {
            if p.g.data.iter().any(|&g| !g.to_f64().is_finite()) {
                return Err(Error::Numeric(format!("non-finite gradient in {name}")));
            }
            let (m, v) = (&mut self.m[idx], &mut self.v[idx]);
            if m.len() != p.w.data.len() {
                return Err(Error::Shape(format!("parameter {name} changed size mid-run")));
            }
            for i in 0..m.len() {
                let g = p.g.data[i].to_f64();
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g;
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g * g;
                let mhat = m[i] / bc1;
                let vhat = v[i] / bc2;
                let w = p.w.data[i].to_f64();
                let upd = w - lr * (mhat / (vhat.sqrt() + self.eps) + self.weight_decay * w);
                p.w.data[i] = T::from_f64(upd);
            }
        }
        Ok(())
    }
}

/// Learning rate at a global step: linear warmup from 1% of base over
/// `warmup_epochs`, then a cosine decay to zero across the remaining
/// epochs.
pub fn lr_at(
    step: u64,
    steps_per_epoch: u64,
    total_epochs: u64,
    warmup_epochs: u64,
    base_lr: f64,
) -> f64 {
    let warmup_steps = warmup_epochs * steps_per_epoch;
    let total_steps = total_epochs * steps_per_epoch;
    if warmup_steps > 0 && step < warmup_steps {
        let frac = step as f64 / warmup_steps as f64;
        return base_lr * (0.01 + 0.99 * frac);
    }
    if total_steps <= warmup_steps {
        return base_lr;
    }
    let progress = (step - warmup_steps) as f64 / (total_steps - warmup_steps) as f64;
    let progress = progress.min(1.0);
    base_lr * 0.5 * (1.0 + (std::f64::consts::PI * progress).cos())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Param, Tensor};

    #[test]
    fn zero_gradient_applies_pure_decay() {
        let mut p = Param::new(Tensor::new(vec![2], vec![1.0f64, -2.0]).unwrap());
        let mut opt = Adam::new(1e-2);
        opt.step(vec![("p".into(), &mut p)], 0.1).unwrap();
        // m and v stay zero, so the update is only -lr * wd * w.
        assert!((p.w.data[0] - (1.0 - 0.1 * 1e-2)).abs() < 1e-15);
        assert!((p.w.data[1] - (-2.0 + 0.1 * 1e-2 * 2.0)).abs() < 1e-15);
    }

    #[test]
    fn first_step_matches_hand_computation() {
        let mut p = Param::new(Tensor::new(vec![1], vec![0.5f64]).unwrap());
        p.g.data[0] = 0.25;
        let mut opt = Adam::new(0.0);
        opt.step(vec![("p".into(), &mut p)], 1e-3).unwrap();
        // After bias correction the first step is lr * g/(|g| + eps).
        let expect = 0.5 - 1e-3 * (0.25 / (0.25 + 1e-8));
        assert!((p.w.data[0] - expect).abs() < 1e-12);
    }

    #[test]
    fn updates_are_bit_deterministic() {
        let run = || {
            let mut p = Param::new(Tensor::new(vec![3], vec![0.1f64, -0.4, 2.0]).unwrap());
            let mut opt = Adam::new(1e-5);
            for t in 0..50 {
                for (i, g) in p.g.data.iter_mut().enumerate() {
                    *g = ((t * 3 + i) as f64 * 0.37).sin();
                }
                opt.step(vec![("p".into(), &mut p)], 5e-4).unwrap();
            }
            p.w.data.iter().map(|v| v.to_bits()).collect::<Vec<u64>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn non_finite_gradient_is_rejected_by_name() {
        let mut p = Param::new(Tensor::new(vec![1], vec![0.0f64]).unwrap());
        p.g.data[0] = f64::NAN;
        let mut opt = Adam::new(0.0);
        let err = opt.step(vec![("head.w".into(), &mut p)], 1e-3).unwrap_err();
        assert!(err.to_string().contains("head.w"), "{err}");
    }

    #[test]
    fn schedule_reference_points() {
        let spe = 100;
        // Step 0: 1% of base.
        assert!((lr_at(0, spe, 30, 3, 5e-4) - 5e-6).abs() < 1e-12);
        // Warmup end: full base rate.
        assert!((lr_at(300, spe, 30, 3, 5e-4) - 5e-4).abs() < 1e-12);
        // Cosine midpoint: half of base.
        assert!((lr_at(300 + 1350, spe, 30, 3, 5e-4) - 2.5e-4).abs() < 1e-12);
        // Final step approaches zero.
        assert!(lr_at(3000, spe, 30, 3, 5e-4) < 1e-9);
        // Monotone non-increasing after warmup.
        let mut prev = f64::INFINITY;
        for s in 300..3000 {
            let lr = lr_at(s, spe, 30, 3, 5e-4);
            assert!(lr <= prev + 1e-18);
            prev = lr;
        }
    }
}

use serde::{Deserialize, Serialize};

use super::mlp::Params;
use crate::error::{Result, WeldError};

/// Adam with decoupled weight decay. Defaults follow the usual framework
/// settings: betas (0.9, 0.999), eps 1e-8, weight decay 0.01.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamW {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamW {
    pub fn new(lr: f64) -> Self {
        AdamW {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.01,
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn with_weight_decay(mut self, wd: f64) -> Self {
        self.weight_decay = wd;
        self
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn first_moments(&self) -> &[Vec<f64>] {
        &self.m
    }

    pub fn second_moments(&self) -> &[Vec<f64>] {
        &self.v
    }

    /// One update of every tensor in `params` from the matching tensor in `grads`.
    pub fn step<P: Params + ?Sized, G: Params + ?Sized>(&mut self, params: &mut P, grads: &G) -> Result<()> {
        let g = grads.tensors();
        let mut p = params.tensors_mut();
        if p.len() != g.len() || p.iter().zip(&g).any(|(a, b)| a.len() != b.len()) {
            return Err(WeldError::shape(
                "AdamW::step",
                format!("{} tensors", p.len()),
                format!("{} gradient tensors", g.len()),
            ));
        }
        if self.m.is_empty() {
            self.m = p.iter().map(|t| vec![0.0; t.len()]).collect();
            self.v = self.m.clone();
        } else if self.m.len() != p.len() || self.m.iter().zip(&p).any(|(m, t)| m.len() != t.len()) {
            return Err(WeldError::invalid("AdamW state was built for different parameters"));
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        let decay = 1.0 - self.lr * self.weight_decay;
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.lr, self.eps);
        for (((pt, gt), mt), vt) in p.iter_mut().zip(&g).zip(&mut self.m).zip(&mut self.v) {
            let pt: &mut [f64] = pt;
            for (((p, &gi), m), v) in pt.iter_mut().zip(gt.iter()).zip(mt.iter_mut()).zip(vt.iter_mut()) {
                *m = b1 * *m + (1.0 - b1) * gi;
                *v = b2 * *v + (1.0 - b2) * gi * gi;
                let m_hat = *m / bc1;
                let v_hat = *v / bc2;
                *p = *p * decay - lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

/// Reduce-on-plateau learning-rate schedule: multiply the rate by `factor`
/// once the epoch loss has failed to improve for more than `patience`
/// consecutive epochs, never going below `min_lr`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlateauSchedule {
    pub factor: f64,
    pub patience: usize,
    pub min_lr: f64,
    #[serde(skip, default = "infinity")]
    best_loss: f64,
    #[serde(skip)]
    epochs_since_improve: usize,
}

fn infinity() -> f64 {
    f64::INFINITY
}

impl Default for PlateauSchedule {
    fn default() -> Self {
        PlateauSchedule::new(0.3, 15, 1e-6)
    }
}

impl PlateauSchedule {
    pub fn new(factor: f64, patience: usize, min_lr: f64) -> Self {
        PlateauSchedule {
            factor,
            patience,
            min_lr,
            best_loss: f64::INFINITY,
            epochs_since_improve: 0,
        }
    }

    /// Fresh copy with the same settings and no loss history.
    pub fn reset(&self) -> Self {
        PlateauSchedule::new(self.factor, self.patience, self.min_lr)
    }

    pub fn best_loss(&self) -> f64 {
        self.best_loss
    }

    /// Records an epoch loss and returns the learning rate for the next epoch.
    pub fn update(&mut self, lr: f64, epoch_loss: f64) -> Result<f64> {
        if !epoch_loss.is_finite() {
            return Err(WeldError::numerical(
                "learning-rate schedule",
                format!("epoch loss is {epoch_loss}"),
            ));
        }
        if epoch_loss < self.best_loss {
            self.best_loss = epoch_loss;
            self.epochs_since_improve = 0;
            return Ok(lr);
        }
        self.epochs_since_improve += 1;
        if self.epochs_since_improve > self.patience {
            self.epochs_since_improve = 0;
            return Ok((lr * self.factor).max(self.min_lr));
        }
        Ok(lr)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Scalar(Vec<f64>);

    impl Params for Scalar {
        fn tensors(&self) -> Vec<&[f64]> {
            vec![&self.0]
        }
        fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
            vec![&mut self.0]
        }
    }

    #[test]
    fn zero_grad_no_decay_is_fixed_point() {
        let mut p = Scalar(vec![1.0, -2.0, 3.5]);
        let g = Scalar(vec![0.0; 3]);
        let mut opt = AdamW::new(1e-3).with_weight_decay(0.0);
        for _ in 0..5 {
            opt.step(&mut p, &g).unwrap();
        }
        assert_eq!(p.0, vec![1.0, -2.0, 3.5]);
        assert_eq!(opt.step_count(), 5);
    }

    #[test]
    fn zero_grad_applies_decoupled_decay() {
        let mut p = Scalar(vec![1.0, -2.0]);
        let g = Scalar(vec![0.0; 2]);
        let mut opt = AdamW::new(1e-4);
        opt.step(&mut p, &g).unwrap();
        let s = 1.0 - 1e-4 * 0.01;
        assert_eq!(p.0, vec![s, -2.0 * s]);
    }

    #[test]
    fn first_step_closed_form() {
        let lr = 1e-4;
        let mut p = Scalar(vec![1.0]);
        let mut opt = AdamW::new(lr);
        opt.step(&mut p, &Scalar(vec![1.0])).unwrap();
        // m_hat = v_hat = 1 on the first step.
        let expected = 1.0 - lr * (1.0 / (1.0 + 1e-8)) - lr * 0.01 * 1.0;
        assert!((p.0[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn shape_mismatch() {
        let mut p = Scalar(vec![1.0]);
        assert!(AdamW::new(1e-3).step(&mut p, &Scalar(vec![1.0, 2.0])).is_err());
    }

    #[test]
    fn plateau_strictly_decreasing_keeps_lr() {
        let mut s = PlateauSchedule::default();
        let mut lr = 1e-4;
        for i in 0..100 {
            lr = s.update(lr, 10.0 - i as f64 * 0.01).unwrap();
        }
        assert_eq!(lr, 1e-4);
    }

    #[test]
    fn plateau_decays_after_patience() {
        let mut s = PlateauSchedule::default();
        let mut lr = s.update(1e-4, 1.0).unwrap();
        for _ in 0..15 {
            lr = s.update(lr, 1.0).unwrap();
            assert_eq!(lr, 1e-4);
        }
        lr = s.update(lr, 1.0).unwrap();
        assert!((lr - 3e-5).abs() < 1e-18);
    }

    #[test]
    fn plateau_floors_at_min_lr() {
        let mut s = PlateauSchedule::default();
        let mut lr = 1e-4;
        let mut last = lr;
        for _ in 0..1000 {
            lr = s.update(lr, 1.0).unwrap();
            assert!(lr <= last);
            last = lr;
        }
        assert_eq!(lr, 1e-6);
    }

    #[test]
    fn plateau_rejects_nan() {
        assert!(PlateauSchedule::default().update(1e-4, f64::NAN).is_err());
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Step-wise exponential decay: `initial * rate^floor(step / interval)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrSchedule {
    pub initial: f64,
    pub decay_rate: f64,
    pub decay_interval: u64,
}

impl LrSchedule {
    pub const DEFAULT_INITIAL: f64 = 1e-4;
    pub const DEFAULT_DECAY_RATE: f64 = 0.9;

    /// Decay interval for a run of `total_steps`, keeping the ratio of a
    /// 23k-step interval in a 106k-step run.
    pub fn scaled_interval(total_steps: u64) -> u64 {
        (total_steps * 23 / 106).max(1)
    }

    pub fn new(initial: f64, decay_rate: f64, decay_interval: u64) -> Result<Self> {
        if !(initial > 0.0 && initial.is_finite()) {
            return Err(Error::InvalidParameter(format!("learning rate {initial} must be positive")));
        }
        if !(decay_rate > 0.0 && decay_rate <= 1.0) {
            return Err(Error::InvalidParameter(format!("decay rate {decay_rate} outside (0, 1]")));
        }
        if decay_interval == 0 {
            return Err(Error::InvalidParameter("decay interval must be at least 1".into()));
        }
        Ok(Self {
            initial,
            decay_rate,
            decay_interval,
        })
    }

    pub fn lr(&self, step: u64) -> f64 {
        let k = (step / self.decay_interval).min(i32::MAX as u64) as i32;
        self.initial * self.decay_rate.powi(k)
    }
}

/// Adam with bias correction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub schedule: LrSchedule,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(param_count: usize, schedule: LrSchedule) -> Self {
        Self {
            schedule,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
        }
    }

    pub fn current_lr(&self) -> f64 {
        self.schedule.lr(self.step)
    }

    pub fn update(&mut self, params: &mut [f64], grad: &[f64]) -> Result<()> {
        if params.len() != self.m.len() || grad.len() != self.m.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} parameters", self.m.len()),
                actual: format!("{} params / {} grads", params.len(), grad.len()),
            });
        }
        let lr = self.schedule.lr(self.step);
        self.step += 1;
        let t = self.step.min(i32::MAX as u64) as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for ((p, &g), (m, v)) in params.iter_mut().zip(grad).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + self.eps);
        }
        Ok(())
    }
}

//! Adam with the inverse-square-root warmup schedule.

use rand::seq::SliceRandom;

use super::net::sample_gradients_ctx;
use super::ops::Ctx;
use super::{ModelConfig, ModelError, ModelParams, Scalar, TrainSample};
use crate::encoding::PAD;
use crate::rng::{sample_rng, seeded};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub warmup: usize,
    pub batch_size: usize,
    pub steps: usize,
    pub seed: u64,
    /// Multiplier on the schedule; 1 keeps it unchanged.
    pub lr_factor: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { beta1: 0.9, beta2: 0.98, eps: 1e-9, warmup: 4000, batch_size: 16, steps: 1000, seed: 0, lr_factor: 1.0 }
    }
}

/// `d_model^-0.5 · min(step^-0.5, step · warmup^-1.5)` for `step ≥ 1`.
pub fn lr_at(d_model: usize, warmup: usize, step: usize) -> f64 {
    let s = step.max(1) as f64;
    (d_model as f64).powf(-0.5) * s.powf(-0.5).min(s * (warmup.max(1) as f64).powf(-1.5))
}

/// Adam moment estimates for every parameter tensor.
#[derive(Debug, Clone)]
pub struct Adam<T> {
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
    t: usize,
}

impl<T: Scalar> Adam<T> {
    pub fn new(params: &ModelParams<T>) -> Self {
        Adam { m: params.zeros_like(), v: params.zeros_like(), t: 0 }
    }

    pub fn step(&mut self, params: &mut ModelParams<T>, grads: &[Vec<T>], lr: f64, tc: &TrainConfig) {
        self.t += 1;
        let (b1, b2) = (T::of(tc.beta1), T::of(tc.beta2));
        let c1 = 1.0 - tc.beta1.powi(self.t as i32);
        let c2 = 1.0 - tc.beta2.powi(self.t as i32);
        let step = T::of(lr / c1);
        let c2 = T::of(c2);
        let eps = T::of(tc.eps);
        for ((tensor, g), (m, v)) in params.tensors.iter_mut().zip(grads).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            for i in 0..g.len() {
                m[i] = b1 * m[i] + (T::one() - b1) * g[i];
                v[i] = b2 * v[i] + (T::one() - b2) * g[i] * g[i];
                tensor.data[i] -= step * m[i] / ((v[i] / c2).sqrt() + eps);
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainReport {
    /// Mean token NLL of each step's batch.
    pub losses: Vec<f64>,
    /// Teacher-forced accuracy of each step's batch, measured during the
    /// forward pass.
    pub batch_accuracy: Vec<f64>,
}

/// Trains fresh parameters (seeded by `tc.seed`) for `tc.steps` steps.
pub fn train(config: &ModelConfig, tc: &TrainConfig, data: &[TrainSample]) -> Result<(ModelParams<f32>, TrainReport), ModelError> {
    let mut params = ModelParams::init(config, tc.seed)?;
    let report = train_params(&mut params, tc, data, |_, _, _| true)?;
    Ok((params, report))
}

/// Continues training `params`. `on_step(step, loss, params)` runs after
/// every update; returning `false` stops early.
pub fn train_params<T: Scalar>(
    params: &mut ModelParams<T>,
    tc: &TrainConfig,
    data: &[TrainSample],
    mut on_step: impl FnMut(usize, f64, &ModelParams<T>) -> bool,
) -> Result<TrainReport, ModelError> {
    if data.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    let mut adam = Adam::new(params);
    let mut order_rng = seeded(tc.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut cursor = order.len();
    let mut report = TrainReport::default();
    let batch = tc.batch_size.max(1);
    for step in 1..=tc.steps {
        let mut picks = Vec::with_capacity(batch);
        while picks.len() < batch.min(data.len()) {
            if cursor == order.len() {
                order.shuffle(&mut order_rng);
                cursor = 0;
            }
            picks.push(order[cursor]);
            cursor += 1;
        }
        let tokens: usize = picks.iter().map(|&i| data[i].target.iter().filter(|&&t| t != PAD).count()).sum();
        let weight = T::one() / T::of(tokens.max(1) as f64);
        let mut grads = params.zeros_like();
        let mut ctx = Ctx { p: params.config.dropout, rng: Some(sample_rng(tc.seed, step as u64)) };
        let (mut total, mut correct) = (0.0, 0);
        for &i in &picks {
            let (sum, _, right) = sample_gradients_ctx(params, &data[i], &mut grads, weight, &mut ctx)?;
            total += sum;
            correct += right;
        }
        let loss = total / tokens.max(1) as f64;
        if !loss.is_finite() {
            return Err(ModelError::Diverged { step });
        }
        let lr = tc.lr_factor * lr_at(params.config.d_model, tc.warmup, step);
        adam.step(params, &grads, lr, tc);
        report.losses.push(loss);
        report.batch_accuracy.push(correct as f64 / tokens.max(1) as f64);
        if !on_step(step, loss, params) {
            break;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_peak() {
        let peak = lr_at(256, 4000, 4000);
        assert!((peak - 256f64.powf(-0.5) * 4000f64.powf(-0.5)).abs() < 1e-15);
        assert!(lr_at(256, 4000, 3999) < peak);
        assert!(lr_at(256, 4000, 4001) < peak);
    }
}

//! Double-DQN training step with the two-headed Huber loss and Adam.
//!
//! Per batch element the target is y = r + gamma * Q_target(s', a*) with
//! a* = argmax over valid actions of Q_online(s'), or y = r on terminal
//! transitions. The loss is Huber(q[a] - y) + Huber(r_hat[a] - r) averaged
//! over the batch; the reward head is supervised only at the taken action.

use super::mlp::{Gradients, QNetwork};
use super::policy::masked_argmax;
use super::replay::Experience;
use super::DqnError;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub gamma: f64,
    pub lr: f64,
    /// Gradient steps per environment decision step.
    pub model_update_freq: u32,
    /// Hard target sync every this many gradient steps.
    pub target_update_freq: u32,
    pub epsilon: f64,
    pub epsilon_min: f64,
    /// Multiplicative epsilon decay per episode.
    pub epsilon_decay: f64,
    /// Max green during training episodes, seconds.
    pub green_sec: u32,
    pub batch_size: usize,
    pub replay_capacity: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            gamma: 0.8,
            lr: 5e-5,
            model_update_freq: 1,
            target_update_freq: 17,
            epsilon: 0.2,
            epsilon_min: 0.01,
            epsilon_decay: 0.995,
            green_sec: 20,
            batch_size: 64,
            replay_capacity: 65_536,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Stable hash of the serialized config (FNV-1a), stored in checkpoints.
    pub fn stable_hash(&self) -> u64 {
        let text = serde_json::to_string(self).expect("config serializes");
        let mut h: u64 = 0xcbf29ce484222325;
        for byte in text.as_bytes() {
            h ^= *byte as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        h
    }
}

/// Smooth-L1.
pub fn huber(d: f64) -> f64 {
    if d.abs() <= 1.0 {
        0.5 * d * d
    } else {
        d.abs() - 0.5
    }
}

pub fn huber_grad(d: f64) -> f64 {
    d.clamp(-1.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossParts {
    pub q_loss: f64,
    pub r_loss: f64,
}

impl LossParts {
    pub fn total(&self) -> f64 {
        self.q_loss + self.r_loss
    }
}

/// Double-DQN targets; detached constants w.r.t. the optimized network.
pub fn compute_targets(
    online: &QNetwork,
    target: &QNetwork,
    batch: &[&Experience],
    gamma: f64,
) -> Result<Vec<f64>, DqnError> {
    batch
        .iter()
        .map(|e| {
            if e.terminal {
                return Ok(e.reward);
            }
            let q_online = online.q_values(&e.next_state)?;
            let best = masked_argmax(&q_online, &e.mask).ok_or(DqnError::EmptyMask)?;
            let q_target = target.q_values(&e.next_state)?;
            Ok(e.reward + gamma * q_target[best])
        })
        .collect()
}

/// Loss of the batch against fixed targets, with parameter gradients
/// accumulated into `grads` (reset first).
pub fn loss_and_grads(
    net: &QNetwork,
    batch: &[&Experience],
    targets: &[f64],
    grads: &mut Gradients,
) -> Result<LossParts, DqnError> {
    assert_eq!(batch.len(), targets.len());
    grads.reset();
    let n = batch.len() as f64;
    let a_count = net.n_actions;
    let mut q_loss = 0.0;
    let mut r_loss = 0.0;
    let mut dout = vec![0.0; 2 * a_count];
    for (e, &y) in batch.iter().zip(targets.iter()) {
        let acts = net.forward_full(&e.state);
        let out = acts.last().unwrap();
        let dq = out[e.action] - y;
        let dr = out[a_count + e.action] - e.reward;
        q_loss += huber(dq) / n;
        r_loss += huber(dr) / n;
        dout.iter_mut().for_each(|v| *v = 0.0);
        dout[e.action] = huber_grad(dq) / n;
        dout[a_count + e.action] = huber_grad(dr) / n;
        net.backward_into(&acts, &dout, grads);
    }
    Ok(LossParts { q_loss, r_loss })
}

/// Adam with the usual defaults.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(lr: f64, num_params: usize) -> Adam {
        Adam { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, m: vec![0.0; num_params], v: vec![0.0; num_params], t: 0 }
    }

    pub fn step(&mut self, net: &mut QNetwork, grads: &Gradients) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        let mut at = 0;
        for (layer, (dw, db)) in net.layers.iter_mut().zip(grads.layers.iter()) {
            for (p, g) in layer.w.iter_mut().zip(dw.iter()).chain(layer.b.iter_mut().zip(db.iter())) {
                let m = &mut self.m[at];
                let v = &mut self.v[at];
                *m = self.beta1 * *m + (1.0 - self.beta1) * g;
                *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
                let mhat = *m / bc1;
                let vhat = *v / bc2;
                *p -= self.lr * mhat / (vhat.sqrt() + self.eps);
                at += 1;
            }
        }
        debug_assert_eq!(at, self.m.len());
    }
}

/// One gradient step on a sampled batch. Returns the loss parts; a
/// non-finite loss aborts with diagnostics.
pub fn train_step(
    online: &mut QNetwork,
    target: &QNetwork,
    opt: &mut Adam,
    batch: &[&Experience],
    grads: &mut Gradients,
    cfg: &TrainConfig,
    updates: u64,
) -> Result<LossParts, DqnError> {
    assert!(!batch.is_empty());
    let targets = compute_targets(online, target, batch, cfg.gamma)?;
    let loss = loss_and_grads(online, batch, &targets, grads)?;
    if !loss.q_loss.is_finite() || !loss.r_loss.is_finite() {
        return Err(DqnError::NonFiniteLoss { q_loss: loss.q_loss, r_loss: loss.r_loss, updates });
    }
    opt.step(online, grads);
    Ok(loss)
}

/// Hard copy of the online parameters into the target network.
pub fn sync_target(online: &QNetwork, target: &mut QNetwork) {
    target.clone_from(online);
}

#[cfg(test)]
mod tests;

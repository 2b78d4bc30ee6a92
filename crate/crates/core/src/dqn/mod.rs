//! From-scratch double-DQN machinery: a two-headed MLP (Q-values and
//! predicted immediate rewards), Huber losses, Adam, a FIFO replay buffer,
//! masked epsilon-greedy/ensemble/hybrid action selection and versioned
//! checkpoints.

mod checkpoint;
mod mlp;
mod policy;
mod replay;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use mlp::{Gradients, Linear, QNetwork};
pub use policy::{act, ensemble_act, ensemble_q, hybrid_act, masked_argmax};
pub use replay::{Experience, ReplayBuffer};
pub use train::{
    compute_targets, huber, huber_grad, loss_and_grads, sync_target, train_step, Adam, LossParts,
    TrainConfig,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DqnError {
    #[error("input dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("action mask allows no action")]
    EmptyMask,
    #[error("non-finite loss (q={q_loss}, r={r_loss}) at update {updates}")]
    NonFiniteLoss { q_loss: f64, r_loss: f64, updates: u64 },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

//! Masked action selection: epsilon-greedy, ensemble averaging and the
//! rule-revised hybrid.

use super::mlp::QNetwork;
use super::DqnError;
use crate::net::PhaseId;
use rand::Rng;

/// Argmax over valid actions, ties to the lowest index; `None` when the
/// mask allows nothing. Mask entries beyond the Q-vector are ignored.
pub fn masked_argmax(q: &[f64], mask: &[bool]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &qi) in q.iter().enumerate() {
        if !mask.get(i).copied().unwrap_or(false) {
            continue;
        }
        match best {
            Some(b) if qi <= q[b] => {}
            _ => best = Some(i),
        }
    }
    best
}

/// Epsilon-greedy over valid actions: explore uniformly with probability
/// epsilon, otherwise argmax of the Q-head.
pub fn act(
    net: &QNetwork,
    input: &[f64],
    mask: &[bool; 8],
    epsilon: f64,
    rng: &mut impl Rng,
) -> Result<usize, DqnError> {
    let valid: Vec<usize> = (0..8).filter(|&i| mask[i]).collect();
    if valid.is_empty() {
        return Err(DqnError::EmptyMask);
    }
    if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
        return Ok(valid[rng.gen_range(0..valid.len())]);
    }
    let q = net.q_values(input)?;
    masked_argmax(&q, mask).ok_or(DqnError::EmptyMask)
}

/// Element-wise mean of the Q-heads across models.
pub fn ensemble_q(nets: &[QNetwork], input: &[f64]) -> Result<Vec<f64>, DqnError> {
    assert!(!nets.is_empty());
    let mut acc = vec![0.0; nets[0].n_actions];
    for net in nets {
        let q = net.q_values(input)?;
        for (a, v) in acc.iter_mut().zip(q.iter()) {
            *a += v;
        }
    }
    let n = nets.len() as f64;
    acc.iter_mut().for_each(|v| *v /= n);
    Ok(acc)
}

/// Greedy action on the ensemble-mean Q-values.
pub fn ensemble_act(nets: &[QNetwork], input: &[f64], mask: &[bool; 8]) -> Result<usize, DqnError> {
    let q = ensemble_q(nets, input)?;
    masked_argmax(&q, mask).ok_or(DqnError::EmptyMask)
}

/// Rule-revised policy: adopt the rule agent's blocked-lane rescue when its
/// layer 1 fired for this intersection, otherwise the ensemble decision.
pub fn hybrid_act(
    nets: &[QNetwork],
    rule_layer1: Option<PhaseId>,
    input: &[f64],
    mask: &[bool; 8],
) -> Result<usize, DqnError> {
    if let Some(p) = rule_layer1 {
        if mask[p.index()] {
            return Ok(p.index());
        }
    }
    ensemble_act(nets, input, mask)
}

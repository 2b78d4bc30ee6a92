//! DQN training orchestration: trigger-to-trigger transitions pooled from
//! every intersection into one shared replay buffer, one gradient step per
//! decision, hard target syncs, per-episode epsilon decay.

use super::run::{HarnessError, RunConfig, ScenarioSpec};
use super::seeds::{splitmix64, Seeder};
use crate::control::TriggerConfig;
use crate::dqn::{
    act, sync_target, train_step, Adam, Experience, Gradients, QNetwork, ReplayBuffer, TrainConfig,
};
use crate::features::{build_state, zone_stats, ZoneStats};
use crate::net::{IntersectionIdx, PhaseId};
use crate::rewards::{RewardKind, RewardSnapshot};
use crate::sim::{SimParams, SimWorld};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Zone distance rewards are computed at.
pub const REWARD_ZONE_K: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSpec {
    pub scenario: ScenarioSpec,
    pub reward: RewardKind,
    #[serde(default)]
    pub twin_abs: bool,
    pub episodes: u32,
    pub horizon: u32,
    /// Roll training episodes to the horizon instead of stopping at the
    /// delay threshold; exposes the agent to the full demand profile.
    #[serde(default = "default_true")]
    pub train_to_horizon: bool,
    pub dqn: TrainConfig,
    pub seed: u64,
}

fn default_true() -> bool {
    true
}

impl Default for TrainSpec {
    fn default() -> Self {
        TrainSpec {
            scenario: ScenarioSpec::default_grid(),
            reward: RewardKind::TwinDq,
            twin_abs: false,
            episodes: 12,
            horizon: 3600,
            train_to_horizon: true,
            dqn: TrainConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub episode: u32,
    pub served: u64,
    pub delay_at_termination: f64,
    pub mean_loss: f64,
}

#[derive(Debug)]
pub struct TrainResult {
    pub net: QNetwork,
    pub curve: Vec<CurvePoint>,
    pub config_hash: u64,
}

impl TrainResult {
    pub fn curve_csv(&self) -> String {
        let mut out = String::from("episode,served,delay_at_termination,mean_loss\n");
        for p in &self.curve {
            out.push_str(&format!(
                "{},{},{:.4},{:.6}\n",
                p.episode, p.served, p.delay_at_termination, p.mean_loss
            ));
        }
        out
    }
}

struct Pending {
    input: Vec<f64>,
    action: usize,
    stats: ZoneStats,
}

/// Trains one model. Training triggers use the full condition set with the
/// training max-green; each episode re-jitters the scenario demand.
pub fn train_dqn(spec: &TrainSpec) -> Result<TrainResult, HarnessError> {
    let seeder = Seeder::new(spec.seed);
    let mut init_rng = seeder.rng("init");
    let mut online = QNetwork::traffic_default(&mut init_rng);
    let mut target = online.clone();
    let mut opt = Adam::new(spec.dqn.lr, online.num_params());
    let mut grads = Gradients::zeros_like(&online);
    let mut replay = ReplayBuffer::new(spec.dqn.replay_capacity);
    let mut agent_rng: ChaCha8Rng = seeder.rng("agent");

    let trigger = TriggerConfig {
        green_max: spec.dqn.green_sec,
        ..TriggerConfig::new(crate::control::TriggerPolicy::Tp3)
    };

    let mut epsilon = spec.dqn.epsilon;
    let mut updates: u64 = 0;
    let mut decisions: u64 = 0;
    let mut curve = Vec::with_capacity(spec.episodes as usize);

    for episode in 0..spec.episodes {
        let episode_cfg = RunConfig {
            scenario: spec.scenario.clone(),
            horizon: spec.horizon,
            seed: splitmix64(seeder.stream_seed("scenario") ^ episode as u64),
            ..RunConfig::default()
        };
        let (net, flows) = super::run::load_scenario(&episode_cfg)?;
        let mut params = SimParams::default();
        if spec.train_to_horizon {
            params.delay_threshold = f64::INFINITY;
        }
        let mut world = SimWorld::new(Arc::clone(&net), &flows, params)?;

        let n_inter = world.net().intersections().len();
        let mut pending: Vec<Option<Pending>> = (0..n_inter).map(|_| None).collect();
        let mut loss_sum = 0.0;
        let mut loss_n = 0u64;

        {
            let mut on_decision = |w: &SimWorld, i: IntersectionIdx| -> PhaseId {
                let stats = zone_stats(w, i, REWARD_ZONE_K);
                let input = build_state(w, i).to_net_input();
                let mask = w.controller(i).expect("signalized").valid_phases();

                if let Some(prev) = pending[i.idx()].take() {
                    let reward = spec
                        .reward
                        .compute(&RewardSnapshot::new(prev.stats, stats.clone()), spec.twin_abs);
                    replay.push(Experience {
                        state: prev.input,
                        action: prev.action,
                        reward,
                        next_state: input.clone(),
                        mask,
                        terminal: false,
                    });
                    decisions += 1;
                    if replay.len() >= spec.dqn.batch_size
                        && decisions % spec.dqn.model_update_freq as u64 == 0
                    {
                        let batch = replay.sample(spec.dqn.batch_size, &mut agent_rng);
                        let loss = train_step(
                            &mut online,
                            &target,
                            &mut opt,
                            &batch,
                            &mut grads,
                            &spec.dqn,
                            updates,
                        )
                        .expect("finite training loss");
                        updates += 1;
                        loss_sum += loss.total();
                        loss_n += 1;
                        if updates % spec.dqn.target_update_freq as u64 == 0 {
                            sync_target(&online, &mut target);
                        }
                    }
                }

                let action = act(&online, &input, &mask, epsilon, &mut agent_rng).expect("mask");
                pending[i.idx()] = Some(Pending { input, action, stats });
                PhaseId::from_index(action)
            };
            super::run::drive_episode(&mut world, spec.horizon, &trigger, &mut on_decision);
        }

        // Flush open transitions as terminal.
        for ii in 0..n_inter {
            if let Some(prev) = pending[ii].take() {
                let i = IntersectionIdx(ii as u32);
                let stats = zone_stats(&world, i, REWARD_ZONE_K);
                let mask = world.controller(i).expect("signalized").valid_phases();
                let reward = spec
                    .reward
                    .compute(&RewardSnapshot::new(prev.stats, stats), spec.twin_abs);
                replay.push(Experience {
                    state: prev.input,
                    action: prev.action,
                    reward,
                    next_state: build_state(&world, i).to_net_input(),
                    mask,
                    terminal: true,
                });
            }
        }

        let metrics = world.metrics();
        curve.push(CurvePoint {
            episode,
            served: metrics.served,
            delay_at_termination: metrics.final_delay(),
            mean_loss: if loss_n > 0 { loss_sum / loss_n as f64 } else { 0.0 },
        });
        epsilon = (epsilon * spec.dqn.epsilon_decay).max(spec.dqn.epsilon_min);
    }

    Ok(TrainResult { net: online, curve, config_hash: spec.dqn.stable_hash() })
}

/// Trains `count` independent models (distinct seeds) in parallel.
pub fn train_many(base: &TrainSpec, count: usize) -> Result<Vec<TrainResult>, HarnessError> {
    (0..count)
        .into_par_iter()
        .map(|m| {
            let spec =
                TrainSpec { seed: splitmix64(base.seed ^ splitmix64(m as u64 + 1)), ..base.clone() };
            train_dqn(&spec)
        })
        .collect()
}

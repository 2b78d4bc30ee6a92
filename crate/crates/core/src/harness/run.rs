//! Episode driving, run configs with on-disk audit trails, and multi-agent
//! comparisons on matched scenarios.

use super::report::{AgentRow, ComparisonReport, EpisodeSummary};
use super::seeds::{fnv1a, Seeder};
use crate::agents::{Agent, DqnAgent, FixedTimeAgent, MaxPressureAgent, RuleBasedAgent};
use crate::control::{should_trigger, TriggerConfig, ACTION_PERIOD, TRIGGER_ZONE_K};
use crate::dqn::load_checkpoint;
use crate::features::zone_stats;
use crate::net::{
    flows_to_json, gen_grid, load_flows, load_network, network_to_json, FlowSpec, GridSpec,
    IntersectionIdx, RoadNetwork,
};
use crate::rewards::RewardKind;
use crate::rules::RuleParams;
use crate::sim::{EpisodeMetrics, SimParams, SimWorld};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Network(#[from] crate::net::NetworkError),
    #[error(transparent)]
    Flow(#[from] crate::net::FlowError),
    #[error(transparent)]
    Dqn(#[from] crate::dqn::DqnError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("config: {0}")]
    Config(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenarioSpec {
    /// Load network and flows from files.
    Files { network: PathBuf, flows: PathBuf },
    /// Generate a grid scenario; its seed is overridden by the run seed.
    Grid(GridSpec),
}

impl ScenarioSpec {
    pub fn default_grid() -> ScenarioSpec {
        ScenarioSpec::Grid(GridSpec::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub scenario: ScenarioSpec,
    /// Agent spec: fixed[:period] | max_pressure | rule |
    /// dqn:ckpt[,ckpt...] | hybrid:ckpt[,ckpt...].
    pub agent: String,
    pub reward: RewardKind,
    #[serde(default)]
    pub twin_abs: bool,
    pub trigger: TriggerConfig,
    pub horizon: u32,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scenario: ScenarioSpec::default_grid(),
            agent: "max_pressure".into(),
            reward: RewardKind::TwinDq,
            twin_abs: false,
            trigger: TriggerConfig::default(),
            horizon: 3600,
            seed: 0,
        }
    }
}

/// Materializes the scenario. Grid scenarios draw their generation seed
/// from the run seed's "scenario" stream.
pub fn load_scenario(cfg: &RunConfig) -> Result<(Arc<RoadNetwork>, Vec<FlowSpec>), HarnessError> {
    match &cfg.scenario {
        ScenarioSpec::Files { network, flows } => {
            let net = Arc::new(load_network(network)?);
            let flow_list = load_flows(flows, &net)?;
            Ok((net, flow_list))
        }
        ScenarioSpec::Grid(spec) => {
            let mut spec = spec.clone();
            spec.seed = Seeder::new(cfg.seed).stream_seed("scenario");
            let (net, flows) = gen_grid(&spec)?;
            Ok((Arc::new(net), flows))
        }
    }
}

/// Hash identifying the exact scenario an agent saw (network + flows).
pub fn scenario_hash(net: &RoadNetwork, flows: &[FlowSpec]) -> u64 {
    fnv1a(network_to_json(net).as_bytes()) ^ fnv1a(flows_to_json(flows).as_bytes())
}

/// Builds an agent from its spec string. Checkpoint lists are separated by
/// commas; `hybrid:` wraps the ensemble with the rule agent's layer-1
/// override.
pub fn build_agent(spec: &str, seed: u64) -> Result<Box<dyn Agent>, HarnessError> {
    let (kind, arg) = match spec.split_once(':') {
        Some((k, a)) => (k, Some(a)),
        None => (spec, None),
    };
    match kind {
        "fixed" | "fixed_time" => {
            let period = match arg {
                Some(a) => a
                    .parse::<u32>()
                    .map_err(|_| HarnessError::Config(format!("bad fixed-time period {a:?}")))?,
                None => 30,
            };
            Ok(Box::new(FixedTimeAgent::new(period)))
        }
        "max_pressure" | "maxpressure" | "mp" => Ok(Box::new(MaxPressureAgent::default())),
        "rule" | "rule_based" => Ok(Box::new(RuleBasedAgent::new(RuleParams::default()))),
        "dqn" | "hybrid" => {
            let paths = arg.unwrap_or("");
            if paths.is_empty() {
                return Err(HarnessError::Config(format!(
                    "{kind}: expected {kind}:checkpoint[,checkpoint...]"
                )));
            }
            let mut nets = Vec::new();
            for p in paths.split(',') {
                nets.push(load_checkpoint(p.trim())?.0);
            }
            let agent = match (kind, nets.len()) {
                ("hybrid", _) => DqnAgent::hybrid(nets, RuleParams::default()),
                (_, 1) => DqnAgent::single(nets.into_iter().next().unwrap(), 0.0, seed),
                _ => DqnAgent::ensemble(nets),
            };
            Ok(Box::new(agent))
        }
        other => Err(HarnessError::Config(format!("unknown agent spec {other:?}"))),
    }
}

/// Runs one episode: every 10 s boundary, each signalized intersection out
/// of all-red is trigger-checked and, when fired, `on_decision` picks the
/// phase. Delay samples are taken every `eval_period`; the episode stops at
/// the horizon or on threshold termination.
pub fn drive_episode(
    world: &mut SimWorld,
    horizon: u32,
    trigger: &TriggerConfig,
    on_decision: &mut dyn FnMut(&SimWorld, IntersectionIdx) -> crate::net::PhaseId,
) -> EpisodeMetrics {
    let eval_period = world.params().eval_period;
    let n = world.net().intersections().len();
    while world.clock < horizon {
        let t = world.clock;
        if t > 0 && t % eval_period == 0 {
            world.sample_metrics();
            if world.terminated() {
                break;
            }
        }
        if t % ACTION_PERIOD == 0 {
            for ii in 0..n {
                let i = IntersectionIdx(ii as u32);
                let Some(cs) = world.controller(i) else { continue };
                if cs.in_all_red() {
                    continue;
                }
                let stats60 = zone_stats(world, i, TRIGGER_ZONE_K);
                let fired = should_trigger(cs, &stats60, trigger).expect("k=60 stats");
                if fired {
                    let phase = on_decision(world, i);
                    world
                        .controller_mut(i)
                        .unwrap()
                        .request(phase)
                        .expect("agent chose an unavailable phase");
                }
            }
        }
        world.step();
    }
    if world.clock % eval_period == 0 && world.clock > 0 && !world.terminated() {
        // Horizon landed on a sample boundary that the loop exited before taking.
        world.sample_metrics();
    }
    world.metrics()
}

/// Convenience wrapper: scenario + agent from a config, one episode.
pub fn run_episode(cfg: &RunConfig) -> Result<EpisodeMetrics, HarnessError> {
    let (net, flows) = load_scenario(cfg)?;
    let mut agent = build_agent(&cfg.agent, Seeder::new(cfg.seed).stream_seed("agent"))?;
    let mut world = SimWorld::new(net, &flows, SimParams::default())?;
    Ok(drive_episode(&mut world, cfg.horizon, &cfg.trigger, &mut |w, i| agent.decide(w, i)))
}

/// Runs and writes the audit trail: config.json, metrics.csv, summary.json.
pub fn run_to_dir(cfg: &RunConfig, out_dir: impl AsRef<Path>) -> Result<EpisodeMetrics, HarnessError> {
    let out = out_dir.as_ref();
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("config.json"), serde_json::to_string_pretty(cfg)?)?;
    let metrics = run_episode(cfg)?;

    let mut csv = String::from("t,served,delay_index\n");
    for s in &metrics.samples {
        csv.push_str(&format!("{},{},{:.6}\n", s.t, s.served, s.delay_index));
    }
    std::fs::write(out.join("metrics.csv"), csv)?;

    let summary = serde_json::json!({
        "served": metrics.served,
        "terminated_at": metrics.terminated_at,
        "final_delay_index": metrics.final_delay(),
        "threshold": metrics.threshold,
    });
    std::fs::write(out.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    Ok(metrics)
}

/// Runs every agent on the identical scenario per seed and tabulates
/// served/delay. Needs at least two agents.
pub fn compare(
    base: &RunConfig,
    agents: &[(String, TriggerConfig)],
    seeds: &[u64],
) -> Result<ComparisonReport, HarnessError> {
    if agents.len() < 2 {
        return Err(HarnessError::Config("compare needs at least 2 agents".into()));
    }
    if seeds.is_empty() {
        return Err(HarnessError::Config("compare needs at least 1 seed".into()));
    }

    // One scenario per seed, shared across agents.
    let scenarios: Vec<(Arc<RoadNetwork>, Vec<FlowSpec>)> = seeds
        .iter()
        .map(|&s| load_scenario(&RunConfig { seed: s, ..base.clone() }))
        .collect::<Result<_, _>>()?;
    let hash = seeds
        .iter()
        .zip(&scenarios)
        .map(|(s, (net, flows))| scenario_hash(net, flows) ^ s)
        .fold(0u64, |a, b| a ^ b);

    let runs: Vec<Result<Vec<EpisodeSummary>, HarnessError>> = agents
        .par_iter()
        .map(|(spec, trig)| {
            seeds
                .par_iter()
                .zip(scenarios.par_iter())
                .map(|(&seed, (net, flows))| {
                    let mut agent = build_agent(spec, Seeder::new(seed).stream_seed("agent"))?;
                    let mut world = SimWorld::new(Arc::clone(net), flows, SimParams::default())?;
                    let metrics =
                        drive_episode(&mut world, base.horizon, trig, &mut |w, i| agent.decide(w, i));
                    Ok(EpisodeSummary {
                        agent: agent.name(),
                        seed,
                        served: metrics.served,
                        terminated_at: metrics.terminated_at,
                        final_delay: metrics.final_delay(),
                    })
                })
                .collect()
        })
        .collect();

    let mut rows = Vec::new();
    for ((spec, trig), result) in agents.iter().zip(runs) {
        let summaries = result?;
        rows.push(AgentRow::new(spec.clone(), trig.policy.name().into(), summaries));
    }
    Ok(ComparisonReport { scenario_hash: hash, horizon: base.horizon, rows })
}

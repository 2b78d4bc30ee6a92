//! `tsc` command line: generate grid scenarios, run episodes, train DQN
//! models, compare agents and sweep reward x trigger-policy pairs.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use tsc_core::control::{TriggerConfig, TriggerPolicy};
use tsc_core::dqn::{save_checkpoint, TrainConfig};
use tsc_core::harness::{
    self, run_to_dir, train_dqn, RunConfig, ScenarioSpec, TrainSpec,
};
use tsc_core::net::{flows_to_json, gen_grid, network_to_json, DemandSpec, GridSpec};
use tsc_core::rewards::RewardKind;

#[derive(Parser)]
#[command(name = "tsc", about = "Traffic-signal control sandbox", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct GridArgs {
    /// Grid rows.
    #[arg(long, default_value_t = 4)]
    rows: usize,
    /// Grid columns.
    #[arg(long, default_value_t = 4)]
    cols: usize,
    /// Internal road length in meters.
    #[arg(long, default_value_t = 120.0)]
    lane_len: f64,
    /// Boundary source/sink road length in meters.
    #[arg(long, default_value_t = 450.0)]
    boundary_len: f64,
    /// Speed limit in m/s.
    #[arg(long, default_value_t = 15.0)]
    speed: f64,
    /// Seconds between vehicles per straight route on the heavy axis.
    #[arg(long, default_value_t = 8)]
    heavy: u32,
    /// Seconds between vehicles per straight route on the light axis.
    #[arg(long, default_value_t = 16)]
    light: u32,
    /// Seconds between vehicles per turning route (0 disables).
    #[arg(long, default_value_t = 32)]
    turn: u32,
    /// Keep the heavy axis east-west for the whole horizon.
    #[arg(long)]
    no_swap: bool,
}

impl GridArgs {
    fn to_spec(&self, horizon: u32, seed: u64) -> GridSpec {
        GridSpec {
            rows: self.rows,
            cols: self.cols,
            lane_len: self.lane_len,
            boundary_len: self.boundary_len,
            speed_limit: self.speed,
            demand: DemandSpec {
                horizon,
                heavy_interval: self.heavy,
                light_interval: self.light,
                turn_interval: self.turn,
                swap_halfway: !self.no_swap,
            },
            seed,
        }
    }
}

#[derive(Args, Clone)]
struct ScenarioArgs {
    /// Network JSON file (with --flows); otherwise a grid is generated.
    #[arg(long)]
    network: Option<PathBuf>,
    /// Flow JSON file.
    #[arg(long, requires = "network")]
    flows: Option<PathBuf>,
    #[command(flatten)]
    grid: GridArgs,
}

impl ScenarioArgs {
    fn to_spec(&self, horizon: u32, seed: u64) -> ScenarioSpec {
        match (&self.network, &self.flows) {
            (Some(network), Some(flows)) => {
                ScenarioSpec::Files { network: network.clone(), flows: flows.clone() }
            }
            _ => ScenarioSpec::Grid(self.grid.to_spec(horizon, seed)),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a grid network and flow file.
    GenNetwork {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value_t = 3600)]
        horizon: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory for network.json and flows.json.
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Run one episode and write metrics.
    Run {
        /// Run config JSON (overrides all other scenario/agent flags).
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// fixed[:period] | max_pressure | rule | dqn:ckpt[,..] | hybrid:ckpt[,..]
        #[arg(long, default_value = "max_pressure")]
        agent: String,
        #[arg(long, default_value = "tp3")]
        policy: TriggerPolicy,
        #[arg(long, default_value_t = 30)]
        green_max: u32,
        #[arg(long, default_value_t = 3600)]
        horizon: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory (config.json, metrics.csv, summary.json).
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Also dump per-intersection feature rows (154 columns) each decision.
        #[arg(long)]
        dump_features: bool,
    },
    /// Train a DQN model and save a checkpoint.
    Train {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value = "twin_dq")]
        reward: RewardKind,
        /// Penalize downstream change in both directions for twin_dq.
        #[arg(long)]
        twin_abs: bool,
        #[arg(long, default_value_t = 12)]
        episodes: u32,
        #[arg(long, default_value_t = 3600)]
        horizon: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Learning rate (the published default is very conservative for
        /// desk-scale runs; 1e-3 trains in minutes).
        #[arg(long, default_value_t = 1e-3)]
        lr: f64,
        #[arg(long, default_value_t = 20)]
        green_sec: u32,
        /// Stop training episodes at the 1.40 delay threshold instead of
        /// rolling to the horizon.
        #[arg(long)]
        stop_at_threshold: bool,
        #[arg(long)]
        out: PathBuf,
        /// Training-curve CSV path.
        #[arg(long)]
        curve: Option<PathBuf>,
    },
    /// Run several agents on identical scenarios and tabulate served/delay.
    Compare {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Comma-separated agent specs.
        #[arg(long, value_delimiter = ',', required = true)]
        agents: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4")]
        seeds: Vec<u64>,
        /// Trigger policy for adaptive agents (fixed-time always runs tp1).
        #[arg(long, default_value = "tp3")]
        policy: TriggerPolicy,
        #[arg(long, default_value_t = 3600)]
        horizon: u32,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Train per reward, evaluate per trigger policy, write the matrix.
    Sweep {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, value_delimiter = ',', default_value = "dq,mp_dq,twin_dq")]
        rewards: Vec<RewardKind>,
        #[arg(long, value_delimiter = ',', default_value = "tp1,tp2,tp3")]
        policies: Vec<TriggerPolicy>,
        #[arg(long, default_value_t = 12)]
        episodes: u32,
        #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4")]
        seeds: Vec<u64>,
        #[arg(long, default_value_t = 3600)]
        horizon: u32,
        #[arg(long, default_value_t = 1e-3)]
        lr: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::GenNetwork { grid, horizon, seed, out_dir } => {
            let spec = grid.to_spec(horizon, seed);
            let (net, flows) = gen_grid(&spec)?;
            std::fs::create_dir_all(&out_dir)?;
            std::fs::write(out_dir.join("network.json"), network_to_json(&net))?;
            std::fs::write(out_dir.join("flows.json"), flows_to_json(&flows))?;
            println!(
                "wrote {} intersections, {} roads, {} flows to {}",
                net.intersections().len(),
                net.roads().len(),
                flows.len(),
                out_dir.display()
            );
        }
        Command::Run {
            config,
            scenario,
            agent,
            policy,
            green_max,
            horizon,
            seed,
            out_dir,
            dump_features,
        } => {
            let cfg = match config {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)
                        .with_context(|| format!("reading {}", path.display()))?;
                    serde_json::from_str::<RunConfig>(&text)
                        .with_context(|| format!("parsing {}", path.display()))?
                }
                None => RunConfig {
                    scenario: scenario.to_spec(horizon, seed),
                    agent,
                    trigger: TriggerConfig { green_max, ..TriggerConfig::new(policy) },
                    horizon,
                    seed,
                    ..RunConfig::default()
                },
            };
            let metrics = match &out_dir {
                Some(dir) => {
                    if dump_features {
                        run_with_feature_dump(&cfg, dir)?
                    } else {
                        run_to_dir(&cfg, dir)?
                    }
                }
                None => harness::run_episode(&cfg)?,
            };
            println!(
                "served {} | final delay {:.3} | terminated {}",
                metrics.served,
                metrics.final_delay(),
                metrics.terminated_at.map(|t| format!("at {t}s")).unwrap_or_else(|| "no".into())
            );
        }
        Command::Train {
            grid,
            reward,
            twin_abs,
            episodes,
            horizon,
            seed,
            lr,
            green_sec,
            stop_at_threshold,
            out,
            curve,
        } => {
            let spec = TrainSpec {
                scenario: ScenarioSpec::Grid(grid.to_spec(horizon, seed)),
                reward,
                twin_abs,
                episodes,
                horizon,
                train_to_horizon: !stop_at_threshold,
                dqn: TrainConfig { lr, green_sec, seed, ..TrainConfig::default() },
                seed,
            };
            let result = train_dqn(&spec)?;
            save_checkpoint(&result.net, result.config_hash, &out)?;
            if let Some(curve_path) = curve {
                std::fs::write(&curve_path, result.curve_csv())?;
            }
            let last = result.curve.last();
            println!(
                "trained {} episodes; last episode served {} | saved {}",
                result.curve.len(),
                last.map(|p| p.served).unwrap_or(0),
                out.display()
            );
        }
        Command::Compare { scenario, agents, seeds, policy, horizon, out_dir } => {
            if agents.len() < 2 {
                bail!("compare needs at least 2 agents");
            }
            let base = RunConfig {
                scenario: scenario.to_spec(horizon, 0),
                horizon,
                trigger: TriggerConfig::new(policy),
                ..RunConfig::default()
            };
            let agent_cfgs: Vec<(String, TriggerConfig)> = agents
                .iter()
                .map(|spec| {
                    let trig = if spec.starts_with("fixed") {
                        let period =
                            spec.split(':').nth(1).and_then(|p| p.parse().ok()).unwrap_or(30);
                        TriggerConfig { green_max: period, ..TriggerConfig::new(TriggerPolicy::Tp1) }
                    } else {
                        TriggerConfig::new(policy)
                    };
                    (spec.clone(), trig)
                })
                .collect();
            let report = harness::compare(&base, &agent_cfgs, &seeds)?;
            std::fs::create_dir_all(&out_dir)?;
            std::fs::write(out_dir.join("report.md"), report.to_markdown())?;
            std::fs::write(out_dir.join("report.csv"), report.to_csv())?;
            std::fs::write(out_dir.join("report.json"), serde_json::to_string_pretty(&report)?)?;
            print!("{}", report.to_markdown());
        }
        Command::Sweep { grid, rewards, policies, episodes, seeds, horizon, lr, seed, out_dir } => {
            std::fs::create_dir_all(&out_dir)?;
            let mut cells = Vec::new();
            for reward in &rewards {
                let spec = TrainSpec {
                    scenario: ScenarioSpec::Grid(grid.to_spec(horizon, seed)),
                    reward: *reward,
                    twin_abs: false,
                    episodes,
                    horizon,
                    train_to_horizon: true,
                    dqn: TrainConfig { lr, seed, ..TrainConfig::default() },
                    seed,
                };
                let result = train_dqn(&spec)?;
                let ckpt = out_dir.join(format!("{}.ckpt", reward.name()));
                save_checkpoint(&result.net, result.config_hash, &ckpt)?;
                for policy in &policies {
                    let base = RunConfig {
                        scenario: ScenarioSpec::Grid(grid.to_spec(horizon, seed)),
                        horizon,
                        ..RunConfig::default()
                    };
                    let agent_spec = format!("dqn:{}", ckpt.display());
                    let trig = TriggerConfig::new(*policy);
                    let mut served = Vec::new();
                    for &s in &seeds {
                        let cfg = RunConfig {
                            seed: s,
                            agent: agent_spec.clone(),
                            trigger: trig.clone(),
                            ..base.clone()
                        };
                        served.push(harness::run_episode(&cfg)?.served);
                    }
                    let mean = served.iter().sum::<u64>() as f64 / served.len() as f64;
                    println!("{} x {}: mean served {:.1} {:?}", reward.name(), policy.name(), mean, served);
                    cells.push(serde_json::json!({
                        "reward": reward.name(),
                        "policy": policy.name(),
                        "served": served,
                        "mean_served": mean,
                    }));
                }
            }
            std::fs::write(
                out_dir.join("sweep.json"),
                serde_json::to_string_pretty(&serde_json::json!({ "cells": cells }))?,
            )?;
            println!("wrote {}", out_dir.join("sweep.json").display());
        }
    }
    Ok(())
}

/// Episode run that also writes per-decision feature rows.
fn run_with_feature_dump(
    cfg: &RunConfig,
    out_dir: &PathBuf,
) -> Result<tsc_core::sim::EpisodeMetrics, harness::HarnessError> {
    use tsc_core::features::build_state;
    use tsc_core::harness::{build_agent, drive_episode, load_scenario, Seeder};
    use tsc_core::sim::{SimParams, SimWorld};

    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join("config.json"), serde_json::to_string_pretty(cfg)?)?;
    let (net, flows) = load_scenario(cfg)?;
    let mut agent = build_agent(&cfg.agent, Seeder::new(cfg.seed).stream_seed("agent"))?;
    let mut world = SimWorld::new(net, &flows, SimParams::default())?;

    let mut dump = String::from("t,intersection,");
    dump.push_str(
        &(0..tsc_core::features::STATE_DIM).map(|i| format!("f{i}")).collect::<Vec<_>>().join(","),
    );
    dump.push('\n');
    let metrics = drive_episode(&mut world, cfg.horizon, &cfg.trigger, &mut |w, i| {
        let row: Vec<String> =
            build_state(w, i).to_vec().iter().map(|v| format!("{v:.4}")).collect();
        dump.push_str(&format!("{},{},{}\n", w.clock, w.net().intersection(i).id, row.join(",")));
        agent.decide(w, i)
    });
    std::fs::write(out_dir.join("features.csv"), dump)?;

    let mut csv = String::from("t,served,delay_index\n");
    for s in &metrics.samples {
        csv.push_str(&format!("{},{},{:.6}\n", s.t, s.served, s.delay_index));
    }
    std::fs::write(out_dir.join("metrics.csv"), csv)?;
    std::fs::write(
        out_dir.join("summary.json"),
        serde_json::to_string_pretty(&serde_json::json!({
            "served": metrics.served,
            "terminated_at": metrics.terminated_at,
            "final_delay_index": metrics.final_delay(),
            "threshold": metrics.threshold,
        }))?,
    )?;
    Ok(metrics)
}

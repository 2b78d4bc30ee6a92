//! Experiment harness: reproducible episode runs, agent comparison,
//! training orchestration and reward x trigger-policy sweeps.

mod report;
mod run;
mod seeds;
mod train;

pub use report::{AgentRow, ComparisonReport, EpisodeSummary};
pub use run::{
    build_agent, compare, drive_episode, load_scenario, run_episode, run_to_dir, scenario_hash,
    HarnessError, RunConfig, ScenarioSpec,
};
pub use seeds::{fnv1a, splitmix64, Seeder};
pub use train::{train_dqn, train_many, CurvePoint, TrainResult, TrainSpec, REWARD_ZONE_K};

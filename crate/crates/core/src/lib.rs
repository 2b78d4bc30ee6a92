//! Traffic-signal control sandbox.
//!
//! A deterministic point-queue traffic simulator over signalized grid
//! networks, zone-of-influence feature extraction, six reward functions,
//! trigger-based signal controllers, a four-layer rule-based agent, and a
//! from-scratch double-DQN trainer with a two-headed value/reward network.
//!
//! The `harness` module ties everything into reproducible episode runs,
//! agent comparisons and training sweeps; the `tsc` binary exposes them as
//! CLI subcommands.

pub mod net;
pub mod sim;
pub mod features;
pub mod rewards;
pub mod control;
pub mod rules;
pub mod dqn;
pub mod agents;
pub mod harness;
pub mod testkit;

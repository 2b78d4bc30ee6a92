//! Traffic demand: timed spawn schedules along validated road routes.

use super::{RoadIdx, RoadNetwork};
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

/// One demand pattern: vehicles released along `route` every `interval`
/// seconds from `start_time` through `end_time` inclusive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowSpec {
    /// Road ids, in travel order.
    pub route: Vec<i64>,
    pub start_time: u32,
    pub end_time: u32,
    pub interval: u32,
}

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("flow {flow}: route references unknown road {road}")]
    UnknownRoad { flow: usize, road: i64 },
    #[error("flow {flow}: disconnected route: {reason}")]
    Disconnected { flow: usize, reason: String },
    #[error("flow {flow}: {reason}")]
    BadSchedule { flow: usize, reason: String },
}

/// Spawn times of a flow: start, start+interval, ..., capped at end_time.
pub fn spawn_times(flow: &FlowSpec) -> impl Iterator<Item = u32> + '_ {
    (flow.start_time..=flow.end_time).step_by(flow.interval.max(1) as usize)
}

/// Resolves a flow's route to road indices and checks connectivity.
pub fn resolve_route(
    flow_no: usize,
    flow: &FlowSpec,
    net: &RoadNetwork,
) -> Result<Vec<RoadIdx>, FlowError> {
    if flow.route.is_empty() {
        return Err(FlowError::Disconnected { flow: flow_no, reason: "empty route".into() });
    }
    if flow.interval < 1 {
        return Err(FlowError::BadSchedule { flow: flow_no, reason: "interval must be >= 1".into() });
    }
    if flow.start_time > flow.end_time {
        return Err(FlowError::BadSchedule {
            flow: flow_no,
            reason: format!("start_time {} > end_time {}", flow.start_time, flow.end_time),
        });
    }
    let roads: Vec<RoadIdx> = flow
        .route
        .iter()
        .map(|&id| net.road_by_id(id).ok_or(FlowError::UnknownRoad { flow: flow_no, road: id }))
        .collect::<Result<_, _>>()?;
    for pair in roads.windows(2) {
        net.route_turn(pair[0], pair[1])
            .map_err(|reason| FlowError::Disconnected { flow: flow_no, reason })?;
    }
    Ok(roads)
}

pub fn flows_from_json(text: &str, net: &RoadNetwork) -> Result<Vec<FlowSpec>, FlowError> {
    let flows: Vec<FlowSpec> = serde_json::from_str(text)?;
    for (i, f) in flows.iter().enumerate() {
        resolve_route(i, f, net)?;
    }
    Ok(flows)
}

pub fn flows_to_json(flows: &[FlowSpec]) -> String {
    serde_json::to_string_pretty(flows).expect("flow serialization cannot fail")
}

pub fn load_flows(path: impl AsRef<Path>, net: &RoadNetwork) -> Result<Vec<FlowSpec>, FlowError> {
    let text = std::fs::read_to_string(path)?;
    flows_from_json(&text, net)
}

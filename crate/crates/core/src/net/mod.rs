//! Road-network data model: lanes, roads, intersections with the 24-slot
//! lane table, signal phases, and network/flow file ingestion.
//!
//! Slot convention: slots 0-11 are upstream (incoming) lanes, 12-23
//! downstream (outgoing). Per approach the three slots are (left, through,
//! right): {0,1,2}=North-in, {3,4,5}=East-in, {6,7,8}=South-in,
//! {9,10,11}=West-in, and {12..14}, {15..17}, {18..20}, {21..23} the
//! matching North/East/South/West out triples. Nonexistent lanes are -1.

mod flow;
mod grid;
mod io;
mod phase;

pub use flow::{flows_from_json, flows_to_json, load_flows, resolve_route, spawn_times, FlowError, FlowSpec};
pub use grid::{gen_grid, DemandSpec, GridSpec};
pub use io::{load_network, network_from_json, network_to_json, save_network};
pub use phase::{phase_movements, PhaseId, PhaseMovements, PHASE_TABLE};

use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

/// Vehicle footprint used for lane storage capacity and queue geometry, in meters.
pub const JAM_SPACING: f64 = 7.5;
/// Lanes shorter than this are rejected by validation.
pub const MIN_LANE_LENGTH: f64 = 30.0;
/// Number of slots in an intersection lane table.
pub const LANE_SLOTS: usize = 24;
/// Upstream slots are 0..12.
pub const UPSTREAM_SLOTS: usize = 12;
/// Right-turn slots: always permitted, never phase-controlled.
pub const RIGHT_TURN_SLOTS: [usize; 4] = [2, 5, 8, 11];

/// Compass approach of an intersection leg.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Approach {
    North = 0,
    East = 1,
    South = 2,
    West = 3,
}

impl Approach {
    pub const ALL: [Approach; 4] = [Approach::North, Approach::East, Approach::South, Approach::West];

    pub fn from_index(i: usize) -> Approach {
        Self::ALL[i % 4]
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Turning movement of an upstream lane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Turn {
    Left = 0,
    Through = 1,
    Right = 2,
}

impl Turn {
    pub const ALL: [Turn; 3] = [Turn::Left, Turn::Through, Turn::Right];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Upstream slot index for (approach, turn).
pub fn in_slot(approach: Approach, turn: Turn) -> usize {
    3 * approach.index() + turn.index()
}

/// The three downstream slot indices of an out approach.
pub fn out_triple(approach: Approach) -> [usize; 3] {
    let base = 12 + 3 * approach.index();
    [base, base + 1, base + 2]
}

/// Approach and turn encoded by an upstream slot.
pub fn slot_movement(slot: usize) -> (Approach, Turn) {
    debug_assert!(slot < UPSTREAM_SLOTS);
    (Approach::from_index(slot / 3), Turn::ALL[slot % 3])
}

/// Out approach reached by turning `turn` from `from` (right-hand traffic:
/// left exits one approach clockwise, through two, right three).
pub fn turn_target(from: Approach, turn: Turn) -> Approach {
    Approach::from_index(from.index() + 1 + turn.index())
}

/// Downstream slot triple fed by an upstream slot's movement.
pub fn movement_target(slot: usize) -> [usize; 3] {
    let (approach, turn) = slot_movement(slot);
    out_triple(turn_target(approach, turn))
}

/// Turn required to go from in-approach `from` to out-approach `to`,
/// or `None` for a U-turn (unsupported).
pub fn turn_between(from: Approach, to: Approach) -> Option<Turn> {
    match (to.index() + 4 - from.index()) % 4 {
        1 => Some(Turn::Left),
        2 => Some(Turn::Through),
        3 => Some(Turn::Right),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LaneIdx(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RoadIdx(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct IntersectionIdx(pub u32);

impl LaneIdx {
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

impl RoadIdx {
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

impl IntersectionIdx {
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lane {
    pub id: i64,
    pub length: f64,
    pub speed_limit: f64,
    /// floor(length / jam_spacing), >= 1 after validation.
    pub capacity: usize,
}

/// A directed road: exactly three lanes ordered (left, through, right) as
/// seen at the road's end intersection.
#[derive(Debug, Clone, PartialEq)]
pub struct Road {
    pub id: i64,
    pub from: String,
    pub to: String,
    pub lanes: [LaneIdx; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Intersection {
    pub id: String,
    pub signalized: bool,
    /// 24 slots, `None` for nonexistent lanes (-1 in the file format).
    pub lane_table: [Option<LaneIdx>; LANE_SLOTS],
}

impl Intersection {
    pub fn slot(&self, s: usize) -> Option<LaneIdx> {
        self.lane_table[s]
    }

    pub fn has_in_approach(&self, a: Approach) -> bool {
        self.lane_table[3 * a.index()].is_some()
    }

    /// Phases with at least one existing upstream slot; the action mask.
    pub fn valid_phases(&self) -> [bool; 8] {
        let mut mask = [false; 8];
        for (i, m) in PHASE_TABLE.iter().enumerate() {
            mask[i] = m.upstream_slots.iter().any(|&s| self.lane_table[s].is_some());
        }
        mask
    }
}

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid network: {0}")]
    Invalid(String),
}

/// Immutable, validated road network. Signal state lives in the simulator.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadNetwork {
    pub jam_spacing: f64,
    lanes: Vec<Lane>,
    roads: Vec<Road>,
    intersections: Vec<Intersection>,
    // Derived lookups.
    lane_road: Vec<RoadIdx>,
    /// Intersection and slot where each lane is an upstream (in) lane.
    lane_upstream_of: Vec<Option<(IntersectionIdx, u8)>>,
    road_by_id: HashMap<i64, RoadIdx>,
    lane_by_id: HashMap<i64, LaneIdx>,
    intersection_by_id: HashMap<String, IntersectionIdx>,
    road_to_intersection: Vec<Option<IntersectionIdx>>,
    road_from_intersection: Vec<Option<IntersectionIdx>>,
}

impl RoadNetwork {
    /// Assembles and validates a network from raw parts.
    pub fn build(
        jam_spacing: f64,
        lanes: Vec<Lane>,
        roads: Vec<Road>,
        intersections: Vec<Intersection>,
    ) -> Result<RoadNetwork, NetworkError> {
        let invalid = |msg: String| NetworkError::Invalid(msg);
        if !(jam_spacing > 0.0) {
            return Err(invalid(format!("jam_spacing must be positive, got {jam_spacing}")));
        }

        let mut lane_by_id = HashMap::new();
        for (i, lane) in lanes.iter().enumerate() {
            if lane_by_id.insert(lane.id, LaneIdx(i as u32)).is_some() {
                return Err(invalid(format!("duplicate lane id {}", lane.id)));
            }
            if !(lane.length >= MIN_LANE_LENGTH) {
                return Err(invalid(format!(
                    "lane {}: length {} below minimum {MIN_LANE_LENGTH}",
                    lane.id, lane.length
                )));
            }
            if !(lane.speed_limit > 0.0) {
                return Err(invalid(format!(
                    "lane {}: non-positive speed limit {}",
                    lane.id, lane.speed_limit
                )));
            }
            if lane.capacity < 1 {
                return Err(invalid(format!("lane {}: capacity {} < 1", lane.id, lane.capacity)));
            }
        }

        let mut road_by_id = HashMap::new();
        let mut lane_road = vec![None; lanes.len()];
        for (i, road) in roads.iter().enumerate() {
            if road_by_id.insert(road.id, RoadIdx(i as u32)).is_some() {
                return Err(invalid(format!("duplicate road id {}", road.id)));
            }
            if road.from == road.to {
                return Err(invalid(format!("road {}: from == to ({})", road.id, road.from)));
            }
            let l0 = &lanes[road.lanes[0].idx()];
            for &l in &road.lanes {
                if l.idx() >= lanes.len() {
                    return Err(invalid(format!("road {}: dangling lane index", road.id)));
                }
                if lane_road[l.idx()].replace(RoadIdx(i as u32)).is_some() {
                    return Err(invalid(format!(
                        "lane {} assigned to more than one road",
                        lanes[l.idx()].id
                    )));
                }
                let lane = &lanes[l.idx()];
                if lane.length != l0.length || lane.speed_limit != l0.speed_limit {
                    return Err(invalid(format!(
                        "road {}: lanes must share length and speed limit",
                        road.id
                    )));
                }
            }
        }
        let lane_road: Vec<RoadIdx> = lane_road
            .into_iter()
            .enumerate()
            .map(|(i, r)| r.ok_or_else(|| invalid(format!("lane {} belongs to no road", lanes[i].id))))
            .collect::<Result<_, _>>()?;

        let mut intersection_by_id = HashMap::new();
        for (i, inter) in intersections.iter().enumerate() {
            if intersection_by_id.insert(inter.id.clone(), IntersectionIdx(i as u32)).is_some() {
                return Err(invalid(format!("duplicate intersection id {}", inter.id)));
            }
        }

        let mut lane_upstream_of = vec![None; lanes.len()];
        let mut road_to_intersection = vec![None; roads.len()];
        let mut road_from_intersection = vec![None; roads.len()];

        // Per-approach triples are all-or-none and must match exactly one road
        // wired in the right direction.
        for (ii, inter) in intersections.iter().enumerate() {
            let iidx = IntersectionIdx(ii as u32);
            for a in Approach::ALL {
                for (dir_in, base) in [(true, 3 * a.index()), (false, 12 + 3 * a.index())] {
                    let triple = [
                        inter.lane_table[base],
                        inter.lane_table[base + 1],
                        inter.lane_table[base + 2],
                    ];
                    if triple.iter().all(|s| s.is_none()) {
                        continue;
                    }
                    let slots: Vec<LaneIdx> = triple.iter().flatten().copied().collect();
                    if slots.len() != 3 {
                        return Err(invalid(format!(
                            "intersection {}: approach {:?} {} triple must be fully present or fully absent",
                            inter.id,
                            a,
                            if dir_in { "in" } else { "out" }
                        )));
                    }
                    let road_idx = lane_road[slots[0].idx()];
                    let road = &roads[road_idx.idx()];
                    if road.lanes != [slots[0], slots[1], slots[2]] {
                        return Err(invalid(format!(
                            "intersection {}: {:?} triple does not match road {} lane order",
                            inter.id, a, road.id
                        )));
                    }
                    if dir_in {
                        if road.to != inter.id {
                            return Err(invalid(format!(
                                "intersection {}: in-road {} does not end here (to={})",
                                inter.id, road.id, road.to
                            )));
                        }
                        road_to_intersection[road_idx.idx()] = Some(iidx);
                        for (t, &l) in slots.iter().enumerate() {
                            lane_upstream_of[l.idx()] = Some((iidx, (base + t) as u8));
                        }
                    } else {
                        if road.from != inter.id {
                            return Err(invalid(format!(
                                "intersection {}: out-road {} does not start here (from={})",
                                inter.id, road.id, road.from
                            )));
                        }
                        road_from_intersection[road_idx.idx()] = Some(iidx);
                    }
                }
            }
        }

        // Roads that reference an intersection endpoint must be wired into
        // its lane table.
        for (ri, road) in roads.iter().enumerate() {
            if let Some(&iidx) = intersection_by_id.get(&road.to) {
                if road_to_intersection[ri] != Some(iidx) {
                    return Err(invalid(format!(
                        "road {} ends at intersection {} but is not in its lane table",
                        road.id, road.to
                    )));
                }
            }
            if let Some(&iidx) = intersection_by_id.get(&road.from) {
                if road_from_intersection[ri] != Some(iidx) {
                    return Err(invalid(format!(
                        "road {} starts at intersection {} but is not in its lane table",
                        road.id, road.from
                    )));
                }
            }
        }

        Ok(RoadNetwork {
            jam_spacing,
            lanes,
            roads,
            intersections,
            lane_road,
            lane_upstream_of,
            road_by_id,
            lane_by_id,
            intersection_by_id,
            road_to_intersection,
            road_from_intersection,
        })
    }

    pub fn lane(&self, l: LaneIdx) -> &Lane {
        &self.lanes[l.idx()]
    }

    pub fn road(&self, r: RoadIdx) -> &Road {
        &self.roads[r.idx()]
    }

    pub fn intersection(&self, i: IntersectionIdx) -> &Intersection {
        &self.intersections[i.idx()]
    }

    pub fn lanes(&self) -> &[Lane] {
        &self.lanes
    }

    pub fn roads(&self) -> &[Road] {
        &self.roads
    }

    pub fn intersections(&self) -> &[Intersection] {
        &self.intersections
    }

    pub fn num_lanes(&self) -> usize {
        self.lanes.len()
    }

    pub fn intersection_indices(&self) -> impl Iterator<Item = IntersectionIdx> {
        (0..self.intersections.len() as u32).map(IntersectionIdx)
    }

    pub fn lane_by_id(&self, id: i64) -> Option<LaneIdx> {
        self.lane_by_id.get(&id).copied()
    }

    pub fn road_by_id(&self, id: i64) -> Option<RoadIdx> {
        self.road_by_id.get(&id).copied()
    }

    pub fn intersection_by_id(&self, id: &str) -> Option<IntersectionIdx> {
        self.intersection_by_id.get(id).copied()
    }

    pub fn lane_road(&self, l: LaneIdx) -> RoadIdx {
        self.lane_road[l.idx()]
    }

    /// Intersection and slot (0..12) where `l` is an upstream lane, if any.
    pub fn lane_upstream_of(&self, l: LaneIdx) -> Option<(IntersectionIdx, usize)> {
        self.lane_upstream_of[l.idx()].map(|(i, s)| (i, s as usize))
    }

    /// Intersection a road ends at; `None` for sink-terminated roads.
    pub fn road_end(&self, r: RoadIdx) -> Option<IntersectionIdx> {
        self.road_to_intersection[r.idx()]
    }

    pub fn road_start(&self, r: RoadIdx) -> Option<IntersectionIdx> {
        self.road_from_intersection[r.idx()]
    }

    /// Representative free-flow traversal time of a road in whole seconds.
    pub fn road_freeflow_secs(&self, r: RoadIdx) -> u32 {
        let lane = self.lane(self.roads[r.idx()].lanes[0]);
        (lane.length / lane.speed_limit).ceil() as u32
    }

    /// Turn connecting two consecutive route roads, or an error message.
    pub fn route_turn(&self, from: RoadIdx, to: RoadIdx) -> Result<Turn, String> {
        let inter = match self.road_end(from) {
            Some(i) => i,
            None => return Err(format!("road {} ends at a sink", self.road(from).id)),
        };
        if self.road_start(to) != Some(inter) {
            return Err(format!(
                "roads {} -> {} do not meet at an intersection",
                self.road(from).id,
                self.road(to).id
            ));
        }
        let table = &self.intersections[inter.idx()];
        let in_approach = self
            .approach_of_in_road(inter, from)
            .ok_or_else(|| format!("road {} not an in-road of {}", self.road(from).id, table.id))?;
        let out_approach = self
            .approach_of_out_road(inter, to)
            .ok_or_else(|| format!("road {} not an out-road of {}", self.road(to).id, table.id))?;
        turn_between(in_approach, out_approach)
            .ok_or_else(|| format!("u-turn at intersection {} is not a movement", table.id))
    }

    fn approach_of_in_road(&self, i: IntersectionIdx, r: RoadIdx) -> Option<Approach> {
        let inter = &self.intersections[i.idx()];
        Approach::ALL.into_iter().find(|&a| {
            inter.lane_table[3 * a.index()]
                .map(|l| self.lane_road[l.idx()] == r)
                .unwrap_or(false)
        })
    }

    fn approach_of_out_road(&self, i: IntersectionIdx, r: RoadIdx) -> Option<Approach> {
        let inter = &self.intersections[i.idx()];
        Approach::ALL.into_iter().find(|&a| {
            inter.lane_table[12 + 3 * a.index()]
                .map(|l| self.lane_road[l.idx()] == r)
                .unwrap_or(false)
        })
    }
}

#[cfg(test)]
mod tests;

//! Zone-of-influence lane statistics and the 154-dim observation vector.
//!
//! For an intersection and distance k, the zone covers the segment of each
//! of its 24 lanes within min(k, lane length) meters of the intersection.
//! Per lane slot the statistics are x (vehicle count), d (mean vehicle
//! delay) and q (queue length). Per phase they fold into aggregates (sum
//! over the two served upstream slots) and pressures (aggregate minus one
//! third of the six downstream slots' sum).
//!
//! The observation is 6 feature groups x 3 zone distances x 8 phases = 144
//! statistics in group-major order, then the phase one-hot, normalized
//! clock and normalized green duration.

use crate::net::{phase_movements, IntersectionIdx, PhaseId, LANE_SLOTS, UPSTREAM_SLOTS};
use crate::sim::SimWorld;

/// Zone distances used by the state design, meters.
pub const ZONE_KS: [f64; 3] = [60.0, 100.0, 200.0];
/// Statistic feature count: 6 groups x 3 distances x 8 phases.
pub const STAT_FEATURES: usize = 144;
/// Full observation dimension.
pub const STATE_DIM: usize = STAT_FEATURES + 8 + 2;
/// Vehicles slower than this count as queued.
pub const QUEUE_SPEED_THRESHOLD: f64 = 0.3;
/// Clock normalization divisor for the time feature, seconds.
pub const TIME_NORM_DIVISOR: f64 = 3600.0;
/// Green-duration normalization divisor, seconds.
pub const DURATION_NORM_DIVISOR: f64 = 30.0;

/// Vehicle delay: 1 minus speed over the lane speed limit.
pub fn vehicle_delay(speed: f64, speed_limit: f64) -> f64 {
    1.0 - speed / speed_limit
}

/// Queue status: strictly below the 0.3 m/s threshold.
pub fn vehicle_queue_status(speed: f64) -> bool {
    speed < QUEUE_SPEED_THRESHOLD
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StatGroup {
    /// Vehicle count x.
    Count,
    /// Lane delay index d (mean of vehicle delays, 0 when empty).
    Delay,
    /// Queue length q.
    Queue,
}

impl StatGroup {
    pub const ALL: [StatGroup; 3] = [StatGroup::Count, StatGroup::Delay, StatGroup::Queue];
}

/// Per-lane zone statistics of one intersection at one distance k.
/// Entries of nonexistent slots are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ZoneStats {
    pub intersection: IntersectionIdx,
    pub k: f64,
    pub x: [f64; LANE_SLOTS],
    pub d: [f64; LANE_SLOTS],
    pub q: [f64; LANE_SLOTS],
}

impl ZoneStats {
    pub fn empty(intersection: IntersectionIdx, k: f64) -> ZoneStats {
        ZoneStats {
            intersection,
            k,
            x: [0.0; LANE_SLOTS],
            d: [0.0; LANE_SLOTS],
            q: [0.0; LANE_SLOTS],
        }
    }

    pub fn group(&self, g: StatGroup) -> &[f64; LANE_SLOTS] {
        match g {
            StatGroup::Count => &self.x,
            StatGroup::Delay => &self.d,
            StatGroup::Queue => &self.q,
        }
    }
}

/// Zone statistics for several distances in one pass over the vehicles.
pub fn zone_stats_multi(world: &SimWorld, i: IntersectionIdx, ks: &[f64]) -> Vec<ZoneStats> {
    let net = world.net();
    let inter = net.intersection(i);
    let mut out: Vec<ZoneStats> = ks.iter().map(|&k| ZoneStats::empty(i, k)).collect();
    let mut delay_sums = vec![[0.0f64; LANE_SLOTS]; ks.len()];

    for slot in 0..LANE_SLOTS {
        let Some(lane) = inter.slot(slot) else { continue };
        let info = net.lane(lane);
        for id in world.lane_vehicles(lane) {
            let v = world.vehicle(id);
            // Distance to the intersection: upstream lanes run toward it,
            // downstream lanes away from it.
            let dist = if slot < UPSTREAM_SLOTS { info.length - v.lane_pos } else { v.lane_pos };
            let speed = v.speed(net);
            for (zi, &k) in ks.iter().enumerate() {
                let effective = k.min(info.length);
                if dist < effective {
                    out[zi].x[slot] += 1.0;
                    delay_sums[zi][slot] += vehicle_delay(speed, info.speed_limit);
                    if vehicle_queue_status(speed) {
                        out[zi].q[slot] += 1.0;
                    }
                }
            }
        }
        for (zi, sums) in delay_sums.iter().enumerate() {
            if out[zi].x[slot] > 0.0 {
                out[zi].d[slot] = sums[slot] / out[zi].x[slot];
            }
        }
    }
    out
}

pub fn zone_stats(world: &SimWorld, i: IntersectionIdx, k: f64) -> ZoneStats {
    zone_stats_multi(world, i, &[k]).pop().unwrap()
}

/// Sum of a statistic over the phase's two upstream slots.
pub fn phase_aggregate(stats: &ZoneStats, phase: PhaseId, group: StatGroup) -> f64 {
    let vals = stats.group(group);
    phase_movements(phase).upstream_slots.iter().map(|&s| vals[s]).sum()
}

/// Upstream aggregate minus one third of the phase's six downstream slots.
pub fn phase_pressure(stats: &ZoneStats, phase: PhaseId, group: StatGroup) -> f64 {
    let vals = stats.group(group);
    let down: f64 = phase_movements(phase).downstream_slots().map(|s| vals[s]).sum();
    phase_aggregate(stats, phase, group) - down / 3.0
}

/// The 154-dim observation of one intersection.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    /// 144 statistics in group-major order: for each of (x, d, q aggregates,
    /// x, d, q pressures), for each k in {60,100,200}, for each phase 1..8.
    pub stats: Vec<f64>,
    pub phase_onehot: [f64; 8],
    /// clock / 3600.
    pub time_norm: f64,
    /// green seconds of the current phase / 30.
    pub duration_norm: f64,
}

impl StateVector {
    /// Flat observation, length `STATE_DIM`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(STATE_DIM);
        v.extend_from_slice(&self.stats);
        v.extend_from_slice(&self.phase_onehot);
        v.push(self.time_norm);
        v.push(self.duration_norm);
        v
    }

    /// Network input encoding: statistics rescaled to unit-ish magnitudes
    /// (counts and queues by 1/20, delays by 1/2), the rest as-is. The
    /// encoding is part of the checkpoint contract.
    pub fn to_net_input(&self) -> Vec<f64> {
        let mut v = self.to_vec();
        for (gi, &(group, _)) in STAT_GROUP_ORDER.iter().enumerate() {
            let scale = match group {
                StatGroup::Delay => 2.0,
                _ => 20.0,
            };
            for e in &mut v[gi * 24..(gi + 1) * 24] {
                *e /= scale;
            }
        }
        v
    }

    /// Flat index of (group, k, phase) in `stats`.
    pub fn stat_index(group_index: usize, k_index: usize, phase: PhaseId) -> usize {
        group_index * 24 + k_index * 8 + phase.index()
    }
}

/// Frozen feature-group order: aggregates then pressures, each x, d, q.
/// The bool marks pressure groups.
pub const STAT_GROUP_ORDER: [(StatGroup, bool); 6] = [
    (StatGroup::Count, false),
    (StatGroup::Delay, false),
    (StatGroup::Queue, false),
    (StatGroup::Count, true),
    (StatGroup::Delay, true),
    (StatGroup::Queue, true),
];

/// Assembles the observation for one intersection from the live world.
pub fn build_state(world: &SimWorld, i: IntersectionIdx) -> StateVector {
    let zone = zone_stats_multi(world, i, &ZONE_KS);
    let mut stats = vec![0.0; STAT_FEATURES];
    for (gi, &(group, pressure)) in STAT_GROUP_ORDER.iter().enumerate() {
        for (ki, z) in zone.iter().enumerate() {
            for phase in PhaseId::all() {
                let value = if pressure {
                    phase_pressure(z, phase, group)
                } else {
                    phase_aggregate(z, phase, group)
                };
                stats[StateVector::stat_index(gi, ki, phase)] = value;
            }
        }
    }

    let (phase, green) = match world.controller(i) {
        Some(cs) => (cs.current_phase(), cs.green_elapsed()),
        None => (PhaseId::new(1).unwrap(), 0),
    };
    let mut phase_onehot = [0.0; 8];
    phase_onehot[phase.index()] = 1.0;

    StateVector {
        stats,
        phase_onehot,
        time_norm: world.clock as f64 / TIME_NORM_DIVISOR,
        duration_norm: green as f64 / DURATION_NORM_DIVISOR,
    }
}

//! Deterministic 1 s tick point-queue traffic dynamics.
//!
//! Vehicles travel at the lane speed limit until they hit the back of the
//! stop-line queue, wait at zero speed, and discharge across the
//! intersection when their movement has right-of-way (right turns always
//! do), at one vehicle per `saturation_headway` seconds per lane. Queues
//! occupy `jam_spacing` meters per vehicle; a lane never holds more than
//! its capacity. Everything is integer-clocked and deterministic: identical
//! (network, flows, controller decisions) reproduce identical trajectories
//! bit for bit.
//!
//! Tick order: spawn, advance/queue-join, discharge, controller countdown.

use crate::control::ControllerState;
use crate::net::{
    movement_target, slot_movement, FlowError, FlowSpec, IntersectionIdx, LaneIdx, PhaseId,
    RoadIdx, RoadNetwork, Turn, RIGHT_TURN_SLOTS, UPSTREAM_SLOTS,
};
use std::collections::VecDeque;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq)]
pub struct SimParams {
    /// Seconds between discharges per permitted lane (1 veh / 2 s ~ 1800 veh/h).
    pub saturation_headway: u32,
    /// Phase every signalized intersection starts in.
    pub initial_phase: PhaseId,
    /// Fleet delay index samples are taken every this many seconds.
    pub eval_period: u32,
    /// Episode terminates once a sample reaches this.
    pub delay_threshold: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            saturation_headway: 2,
            initial_phase: PhaseId::new(1).unwrap(),
            eval_period: 20,
            delay_threshold: 1.40,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VehicleStatus {
    /// Created but still waiting for headroom on its entry lane.
    Pending,
    /// Traveling at the lane speed limit.
    EnRoute,
    /// Standing in a stop-line queue.
    Queued,
    /// Completed its route.
    Served,
}

/// Route shared by all vehicles of one flow.
#[derive(Debug)]
pub struct RouteInfo {
    pub roads: Vec<RoadIdx>,
    /// Turn taken at the end of road i (len = roads.len() - 1).
    pub turns: Vec<Turn>,
    /// Free-flow traversal seconds per road.
    pub road_ff: Vec<u32>,
    /// Free-flow seconds for roads after index i.
    pub suffix_ff: Vec<u32>,
    /// Whole-trip free-flow time, seconds.
    pub freeflow: u32,
}

#[derive(Debug, Clone)]
pub struct Vehicle {
    pub id: u32,
    pub route: Arc<RouteInfo>,
    pub route_pos: usize,
    pub lane: Option<LaneIdx>,
    pub lane_pos: f64,
    pub status: VehicleStatus,
    /// Tick the vehicle was scheduled to appear.
    pub scheduled: u32,
    /// Tick it actually entered the network (valid once departed).
    pub depart_time: u32,
    pub exit_time: Option<u32>,
}

impl Vehicle {
    pub fn speed(&self, net: &RoadNetwork) -> f64 {
        match self.status {
            VehicleStatus::EnRoute => self.lane.map(|l| net.lane(l).speed_limit).unwrap_or(0.0),
            _ => 0.0,
        }
    }

    pub fn departed(&self) -> bool {
        !matches!(self.status, VehicleStatus::Pending)
    }

    fn on_last_road(&self) -> bool {
        self.route_pos + 1 == self.route.roads.len()
    }
}

#[derive(Debug, Clone, Default)]
struct LaneRt {
    /// Front = closest to the stop line.
    moving: VecDeque<u32>,
    queued: VecDeque<u32>,
    next_discharge: u32,
    blocked_secs: u32,
    count: usize,
}

#[derive(Debug, Clone)]
struct SpawnEvent {
    time: u32,
    route: Arc<RouteInfo>,
}

/// One evaluation sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSample {
    pub t: u32,
    pub served: u64,
    pub delay_index: f64,
}

/// Episode evaluation record: vehicles served plus the 20 s delay-index series.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeMetrics {
    pub served: u64,
    pub samples: Vec<MetricSample>,
    pub terminated_at: Option<u32>,
    pub threshold: f64,
}

impl EpisodeMetrics {
    /// Delay index of the last sample (1.0 before any sample).
    pub fn final_delay(&self) -> f64 {
        self.samples.last().map(|s| s.delay_index).unwrap_or(1.0)
    }
}

#[derive(Debug)]
pub struct SimWorld {
    net: Arc<RoadNetwork>,
    params: SimParams,
    pub clock: u32,
    vehicles: Vec<Vehicle>,
    lanes_rt: Vec<LaneRt>,
    controllers: Vec<Option<ControllerState>>,
    schedule: Vec<SpawnEvent>,
    cursor: usize,
    source_queue: VecDeque<u32>,
    served_count: u64,
    spawned_count: u64,
    active_count: u64,
    metrics: EpisodeMetrics,
}

impl SimWorld {
    pub fn new(
        net: Arc<RoadNetwork>,
        flows: &[FlowSpec],
        params: SimParams,
    ) -> Result<SimWorld, FlowError> {
        let mut schedule = Vec::new();
        for (i, flow) in flows.iter().enumerate() {
            let roads = crate::net::resolve_route(i, flow, &net)?;
            let turns: Vec<Turn> = roads
                .windows(2)
                .map(|w| net.route_turn(w[0], w[1]).expect("validated route"))
                .collect();
            let road_ff: Vec<u32> = roads.iter().map(|&r| net.road_freeflow_secs(r)).collect();
            let mut suffix_ff = vec![0u32; roads.len()];
            for j in (0..roads.len().saturating_sub(1)).rev() {
                suffix_ff[j] = suffix_ff[j + 1] + road_ff[j + 1];
            }
            let freeflow = road_ff.iter().sum();
            let route = Arc::new(RouteInfo { roads, turns, road_ff, suffix_ff, freeflow });
            for time in crate::net::spawn_times(flow) {
                schedule.push(SpawnEvent { time, route: Arc::clone(&route) });
            }
        }
        schedule.sort_by_key(|e| e.time);

        let controllers = net
            .intersections()
            .iter()
            .map(|inter| {
                inter.signalized.then(|| {
                    let mask = inter.valid_phases();
                    let initial = if mask[params.initial_phase.index()] {
                        params.initial_phase
                    } else {
                        PhaseId::from_index(mask.iter().position(|&m| m).expect("no valid phase"))
                    };
                    ControllerState::new(initial, mask)
                })
            })
            .collect();

        let threshold = params.delay_threshold;
        Ok(SimWorld {
            lanes_rt: vec![LaneRt::default(); net.num_lanes()],
            controllers,
            net,
            params,
            clock: 0,
            vehicles: Vec::new(),
            schedule,
            cursor: 0,
            source_queue: VecDeque::new(),
            served_count: 0,
            spawned_count: 0,
            active_count: 0,
            metrics: EpisodeMetrics { served: 0, samples: Vec::new(), terminated_at: None, threshold },
        })
    }

    pub fn net(&self) -> &RoadNetwork {
        &self.net
    }

    pub fn params(&self) -> &SimParams {
        &self.params
    }

    pub fn vehicle(&self, id: u32) -> &Vehicle {
        &self.vehicles[id as usize]
    }

    pub fn vehicles(&self) -> &[Vehicle] {
        &self.vehicles
    }

    pub fn served_count(&self) -> u64 {
        self.served_count
    }

    pub fn spawned_count(&self) -> u64 {
        self.spawned_count
    }

    pub fn active_count(&self) -> u64 {
        self.active_count
    }

    pub fn source_pending(&self) -> u64 {
        self.source_queue.len() as u64
    }

    pub fn controller(&self, i: IntersectionIdx) -> Option<&ControllerState> {
        self.controllers[i.idx()].as_ref()
    }

    pub fn controller_mut(&mut self, i: IntersectionIdx) -> Option<&mut ControllerState> {
        self.controllers[i.idx()].as_mut()
    }

    /// Vehicle ids on a lane, en-route first (back-to-front order is not
    /// guaranteed; callers aggregate).
    pub fn lane_vehicles(&self, l: LaneIdx) -> impl Iterator<Item = u32> + '_ {
        let rt = &self.lanes_rt[l.idx()];
        rt.moving.iter().chain(rt.queued.iter()).copied()
    }

    pub fn lane_occupancy(&self, l: LaneIdx) -> usize {
        self.lanes_rt[l.idx()].count
    }

    pub fn lane_queue_len(&self, l: LaneIdx) -> usize {
        self.lanes_rt[l.idx()].queued.len()
    }

    /// Consecutive seconds the lane's queue was nonempty with no discharge.
    pub fn blocked_secs(&self, l: LaneIdx) -> u32 {
        self.lanes_rt[l.idx()].blocked_secs
    }

    /// Mean speed over vehicles on the lane; the speed limit when empty.
    pub fn avg_speed(&self, l: LaneIdx) -> f64 {
        let limit = self.net.lane(l).speed_limit;
        let rt = &self.lanes_rt[l.idx()];
        if rt.count == 0 {
            return limit;
        }
        limit * rt.moving.len() as f64 / rt.count as f64
    }

    fn entry_lane(&self, route: &RouteInfo, road_index: usize) -> LaneIdx {
        let road = self.net.road(route.roads[road_index]);
        if road_index < route.turns.len() {
            road.lanes[route.turns[road_index].index()]
        } else {
            // Final road: least-occupied lane, ties to the lowest slot.
            road.lanes
                .iter()
                .copied()
                .min_by_key(|&l| (self.lanes_rt[l.idx()].count, l.0))
                .unwrap()
        }
    }

    fn lane_has_headroom(&self, l: LaneIdx) -> bool {
        self.lanes_rt[l.idx()].count < self.net.lane(l).capacity
    }

    /// One second of dynamics.
    pub fn step(&mut self) {
        let t = self.clock;
        let jam = self.net.jam_spacing;

        // (a) Spawns: materialize due vehicles, then admit the source queue
        // in FIFO order wherever the entry lane has headroom.
        while self.cursor < self.schedule.len() && self.schedule[self.cursor].time <= t {
            let ev = &self.schedule[self.cursor];
            let id = self.vehicles.len() as u32;
            self.vehicles.push(Vehicle {
                id,
                route: Arc::clone(&ev.route),
                route_pos: 0,
                lane: None,
                lane_pos: 0.0,
                status: VehicleStatus::Pending,
                scheduled: ev.time,
                depart_time: 0,
                exit_time: None,
            });
            self.spawned_count += 1;
            self.source_queue.push_back(id);
            self.cursor += 1;
        }
        for _ in 0..self.source_queue.len() {
            let id = self.source_queue.pop_front().unwrap();
            let lane = self.entry_lane(&self.vehicles[id as usize].route, 0);
            if self.lane_has_headroom(lane) {
                let v = &mut self.vehicles[id as usize];
                v.lane = Some(lane);
                v.lane_pos = 0.0;
                v.status = VehicleStatus::EnRoute;
                v.depart_time = t;
                self.lanes_rt[lane.idx()].moving.push_back(id);
                self.lanes_rt[lane.idx()].count += 1;
                self.active_count += 1;
            } else {
                self.source_queue.push_back(id);
            }
        }

        // (b)+(c) Advance en-route vehicles; join queues or exit open ends.
        for li in 0..self.lanes_rt.len() {
            let lane = LaneIdx(li as u32);
            let info = self.net.lane(lane);
            let open_end = self.net.road_end(self.net.lane_road(lane)).is_none();
            let mut boundary = if open_end {
                info.length
            } else {
                info.length - self.lanes_rt[li].queued.len() as f64 * jam
            };
            let ids: Vec<u32> = self.lanes_rt[li].moving.drain(..).collect();
            for id in ids {
                let v = &mut self.vehicles[id as usize];
                let target = v.lane_pos + info.speed_limit;
                if target >= boundary {
                    if open_end {
                        debug_assert!(v.on_last_road(), "mid-route vehicle on a sink road");
                        v.status = VehicleStatus::Served;
                        v.exit_time = Some(t);
                        v.lane = None;
                        self.lanes_rt[li].count -= 1;
                        self.served_count += 1;
                        self.active_count -= 1;
                    } else {
                        v.lane_pos = boundary;
                        v.status = VehicleStatus::Queued;
                        self.lanes_rt[li].queued.push_back(id);
                        boundary -= jam;
                    }
                } else {
                    v.lane_pos = target;
                    self.lanes_rt[li].moving.push_back(id);
                }
            }
        }

        // (d) Discharge across intersections.
        for ii in 0..self.net.intersections().len() {
            let inter_idx = IntersectionIdx(ii as u32);
            let (all_red, phase) = match &self.controllers[ii] {
                Some(cs) => (cs.in_all_red(), Some(cs.current_phase())),
                None => (false, None),
            };
            for slot in 0..UPSTREAM_SLOTS {
                let Some(lane) = self.net.intersection(inter_idx).slot(slot) else {
                    continue;
                };
                let li = lane.idx();
                let mut discharged = false;
                if !self.lanes_rt[li].queued.is_empty() && t >= self.lanes_rt[li].next_discharge {
                    let front = *self.lanes_rt[li].queued.front().unwrap();
                    let exiting = self.vehicles[front as usize].on_last_road();
                    let green = match phase {
                        // Unsignalized: every movement is permitted.
                        None => true,
                        Some(p) => {
                            !all_red
                                && crate::net::phase_movements(p).upstream_slots.contains(&slot)
                        }
                    };
                    let permitted = exiting || RIGHT_TURN_SLOTS.contains(&slot) || green;
                    if permitted {
                        if exiting {
                            self.pop_queue_front(li, jam);
                            let v = &mut self.vehicles[front as usize];
                            v.status = VehicleStatus::Served;
                            v.exit_time = Some(t);
                            v.lane = None;
                            self.served_count += 1;
                            self.active_count -= 1;
                            self.lanes_rt[li].next_discharge = t + self.params.saturation_headway;
                            discharged = true;
                        } else {
                            let v = &self.vehicles[front as usize];
                            debug_assert_eq!(
                                v.route.turns[v.route_pos],
                                slot_movement(slot).1,
                                "vehicle lane does not match its turn"
                            );
                            debug_assert!({
                                let targets = movement_target(slot);
                                let next = self.net.road(v.route.roads[v.route_pos + 1]).lanes;
                                let table = self.net.intersection(inter_idx).lane_table;
                                targets.iter().all(|&s| {
                                    table[s].map(|l| next.contains(&l)).unwrap_or(false)
                                })
                            });
                            let next_index = v.route_pos + 1;
                            let entry = self.entry_lane(&v.route, next_index);
                            if self.lane_has_headroom(entry) {
                                self.pop_queue_front(li, jam);
                                let v = &mut self.vehicles[front as usize];
                                v.route_pos = next_index;
                                v.lane = Some(entry);
                                v.lane_pos = 0.0;
                                v.status = VehicleStatus::EnRoute;
                                self.lanes_rt[entry.idx()].moving.push_back(front);
                                self.lanes_rt[entry.idx()].count += 1;
                                self.lanes_rt[li].next_discharge = t + self.params.saturation_headway;
                                discharged = true;
                            }
                        }
                    }
                }
                let rt = &mut self.lanes_rt[li];
                if !rt.queued.is_empty() && !discharged {
                    rt.blocked_secs += 1;
                } else {
                    rt.blocked_secs = 0;
                }
            }
        }

        // Signal countdowns.
        for cs in self.controllers.iter_mut().flatten() {
            cs.tick();
        }
        self.clock = t + 1;
    }

    fn pop_queue_front(&mut self, li: usize, jam: f64) {
        self.lanes_rt[li].queued.pop_front();
        self.lanes_rt[li].count -= 1;
        // Everyone behind rolls forward one slot.
        for qi in 0..self.lanes_rt[li].queued.len() {
            let id = self.lanes_rt[li].queued[qi];
            self.vehicles[id as usize].lane_pos += jam;
        }
    }

    /// Trip-level delay index: elapsed plus estimated remaining free-flow
    /// time over the trip's free-flow time; the realized ratio once served.
    pub fn vehicle_delay_index(&self, id: u32, now: u32) -> f64 {
        let v = &self.vehicles[id as usize];
        let ff = v.route.freeflow.max(1) as f64;
        match v.status {
            VehicleStatus::Pending => panic!("delay index requested before departure"),
            VehicleStatus::Served => {
                (v.exit_time.unwrap() + 1 - v.depart_time) as f64 / ff
            }
            _ => {
                let lane = v.lane.unwrap();
                let info = self.net.lane(lane);
                let remaining_here =
                    ((info.length - v.lane_pos) / info.speed_limit).ceil().max(0.0) as u32;
                let remaining = remaining_here + v.route.suffix_ff[v.route_pos];
                let elapsed = now - v.depart_time;
                (elapsed + remaining) as f64 / ff
            }
        }
    }

    /// Mean delay index over departed vehicles; 1.0 with no departures.
    pub fn fleet_delay_index(&self, now: u32) -> f64 {
        let mut sum = 0.0;
        let mut n = 0u64;
        for v in &self.vehicles {
            if v.departed() {
                sum += self.vehicle_delay_index(v.id, now);
                n += 1;
            }
        }
        if n == 0 {
            1.0
        } else {
            sum / n as f64
        }
    }

    /// Takes a delay-index sample (call on `eval_period` boundaries) and
    /// arms termination when it reaches the threshold.
    pub fn sample_metrics(&mut self) -> f64 {
        let sample = self.fleet_delay_index(self.clock);
        self.metrics.samples.push(MetricSample {
            t: self.clock,
            served: self.served_count,
            delay_index: sample,
        });
        if sample >= self.metrics.threshold && self.metrics.terminated_at.is_none() {
            self.metrics.terminated_at = Some(self.clock);
        }
        sample
    }

    pub fn terminated(&self) -> bool {
        self.metrics.terminated_at.is_some()
    }

    /// Final metrics with the served count frozen in.
    pub fn metrics(&self) -> EpisodeMetrics {
        let mut m = self.metrics.clone();
        m.served = self.served_count;
        m
    }
}

#[cfg(test)]
mod tests;

//! The four-layer rule-based controller.
//!
//! Priorities come from relative densities: upstream density over a fixed
//! zone minus a weighted density of the movement's downstream lane over the
//! rest of that lane. Upstream slots are ranked 1..12 by relative density
//! (rank 1 highest). The cascade then picks the first phase produced by
//!
//! 1. blocked-lane rescue (lanes starved past a rising time threshold),
//! 2. balanced high-density pairs over five rounds of loosening ranks,
//! 3. pairs of crawling lanes (both below 1 m/s),
//! 4. the densest controllable lane, preferring two-road phases.
//!
//! Right-turn slots are never phase-controlled, so they are skipped by the
//! blocked ranking of layer 1 and by layer 4's anchor walk (one extra walk
//! step per the fallback rule).

use crate::features::zone_stats;
use crate::net::{
    movement_target, phase_movements, IntersectionIdx, PhaseId, RoadNetwork,
    RIGHT_TURN_SLOTS, UPSTREAM_SLOTS,
};
use crate::sim::SimWorld;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleParams {
    /// Upstream zone distance for densities, meters.
    pub k_up: f64,
    /// Downstream density weight in the relative density.
    pub mu: f64,
    /// Layer-1 blocked threshold start/end, seconds.
    pub c_block_start: f64,
    pub c_block_end: f64,
    /// Layer-2 balance coefficients per round, start and floor.
    pub c_balance_start: [f64; 5],
    pub c_balance_end: [f64; 5],
    /// Seconds over which the thresholds ramp linearly before clamping.
    pub schedule_window: u32,
    /// Layer-3 low-speed threshold, m/s.
    pub c_speed: f64,
}

impl Default for RuleParams {
    fn default() -> Self {
        RuleParams {
            k_up: 100.0,
            mu: 0.5,
            c_block_start: 200.0,
            c_block_end: 300.0,
            c_balance_start: [0.15, 0.2, 0.2, 0.2, 0.25],
            c_balance_end: [0.13, 0.18, 0.18, 0.18, 0.23],
            schedule_window: 1800,
            c_speed: 1.0,
        }
    }
}

impl RuleParams {
    fn ramp(&self, start: f64, end: f64, now: u32) -> f64 {
        let frac = (now.min(self.schedule_window) as f64) / self.schedule_window as f64;
        start + (end - start) * frac
    }

    pub fn c_block(&self, now: u32) -> f64 {
        self.ramp(self.c_block_start, self.c_block_end, now)
    }

    pub fn c_balance(&self, round: usize, now: u32) -> f64 {
        self.ramp(self.c_balance_start[round], self.c_balance_end[round], now)
    }
}

/// Upstream-lane priority view of one intersection at one decision step.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityView {
    pub intersection: IntersectionIdx,
    pub exists: [bool; UPSTREAM_SLOTS],
    pub alpha_up: [f64; UPSTREAM_SLOTS],
    /// alpha_up minus mu times the fed downstream lane's density;
    /// -inf for nonexistent slots.
    pub alpha_rel: [f64; UPSTREAM_SLOTS],
    /// Rank 1..=12 by descending alpha_rel (ties to the lower slot,
    /// nonexistent slots last).
    pub order: [u8; UPSTREAM_SLOTS],
    pub blocked_secs: [u32; UPSTREAM_SLOTS],
    /// Mean lane speed; the speed limit when empty, +inf when nonexistent.
    pub avg_speed: [f64; UPSTREAM_SLOTS],
    /// Rank 1..=12 by ascending avg_speed.
    pub speed_order: [u8; UPSTREAM_SLOTS],
}

fn rank_slots<F: Fn(usize) -> f64>(key_asc: F) -> [u8; UPSTREAM_SLOTS] {
    let mut slots: Vec<usize> = (0..UPSTREAM_SLOTS).collect();
    slots.sort_by(|&a, &b| key_asc(a).total_cmp(&key_asc(b)).then(a.cmp(&b)));
    let mut order = [0u8; UPSTREAM_SLOTS];
    for (rank, &slot) in slots.iter().enumerate() {
        order[slot] = rank as u8 + 1;
    }
    order
}

/// Computes densities, priorities, blocked times and speeds for one
/// intersection from a world snapshot.
pub fn density_view(world: &SimWorld, i: IntersectionIdx, params: &RuleParams) -> DensityView {
    let net: &RoadNetwork = world.net();
    let inter = net.intersection(i);
    let up_zone = zone_stats(world, i, params.k_up);

    // Downstream density over the near-intersection remainder of each lane
    // (length l - k_up); zero when the lane is shorter than k_up.
    let mut alpha_down = [0.0f64; 12];
    for (di, slot) in (UPSTREAM_SLOTS..24).enumerate() {
        let Some(lane) = inter.slot(slot) else { continue };
        let info = net.lane(lane);
        let span = info.length - params.k_up;
        if span <= 0.0 {
            continue;
        }
        let mut count = 0.0;
        for id in world.lane_vehicles(lane) {
            if world.vehicle(id).lane_pos < span {
                count += 1.0;
            }
        }
        alpha_down[di] = count / span;
    }

    let mut view = DensityView {
        intersection: i,
        exists: [false; UPSTREAM_SLOTS],
        alpha_up: [0.0; UPSTREAM_SLOTS],
        alpha_rel: [f64::NEG_INFINITY; UPSTREAM_SLOTS],
        order: [0; UPSTREAM_SLOTS],
        blocked_secs: [0; UPSTREAM_SLOTS],
        avg_speed: [f64::INFINITY; UPSTREAM_SLOTS],
        speed_order: [0; UPSTREAM_SLOTS],
    };

    for slot in 0..UPSTREAM_SLOTS {
        let Some(lane) = inter.slot(slot) else { continue };
        view.exists[slot] = true;
        view.alpha_up[slot] = up_zone.x[slot] / params.k_up;
        let fed = movement_target(slot)[1]; // canonical: middle lane of the triple
        let down = if inter.slot(fed).is_some() { alpha_down[fed - UPSTREAM_SLOTS] } else { 0.0 };
        view.alpha_rel[slot] = view.alpha_up[slot] - params.mu * down;
        view.blocked_secs[slot] = world.blocked_secs(lane);
        view.avg_speed[slot] = world.avg_speed(lane);
    }

    view.order = rank_slots(|s| -view.alpha_rel[s]);
    view.speed_order = rank_slots(|s| view.avg_speed[s]);
    view
}

/// The two phases serving an upstream slot, two-road phase first.
/// Empty for right-turn slots.
fn phases_of_slot(slot: usize) -> Vec<PhaseId> {
    let mut phases: Vec<PhaseId> = PhaseId::all()
        .filter(|&p| phase_movements(p).upstream_slots.contains(&slot))
        .collect();
    phases.sort_by_key(|&p| !phase_movements(p).serves_two_roads);
    phases
}

fn partner_slot(phase: PhaseId, slot: usize) -> usize {
    let up = phase_movements(phase).upstream_slots;
    if up[0] == slot {
        up[1]
    } else {
        up[0]
    }
}

/// Balance test with the pair ordered so the denser side is compared
/// against the other scaled by 1/c.
fn balanced(a: f64, b: f64, c: f64) -> bool {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi < lo / c
}

/// Layer 1: rescue a lane blocked past the (rising) threshold. Round 1
/// anchors the longest-blocked controllable lane, round 2 the second
/// longest at a 50 s stiffer threshold and tighter ranks.
pub fn layer1_blocked(view: &DensityView, params: &RuleParams, now: u32) -> Option<PhaseId> {
    let mut by_blocked: Vec<usize> = (0..UPSTREAM_SLOTS)
        .filter(|&s| view.exists[s] && !RIGHT_TURN_SLOTS.contains(&s))
        .collect();
    by_blocked.sort_by(|&a, &b| view.blocked_secs[b].cmp(&view.blocked_secs[a]).then(a.cmp(&b)));

    let c_block = params.c_block(now);
    let rounds = [(0usize, c_block, 5u8, 4u8, false), (1, c_block + 50.0, 2, 1, true)];
    for (idx, threshold, max_own, max_partner, partner_exact) in rounds {
        let Some(&anchor) = by_blocked.get(idx) else { continue };
        if (view.blocked_secs[anchor] as f64) <= threshold || view.order[anchor] > max_own {
            continue;
        }
        let pick = phases_of_slot(anchor)
            .into_iter()
            .filter(|&p| {
                let partner = partner_slot(p, anchor);
                view.exists[partner]
                    && if partner_exact {
                        view.order[partner] == max_partner
                    } else {
                        view.order[partner] <= max_partner
                    }
            })
            .next(); // two-road phase listed first
        if pick.is_some() {
            return pick;
        }
    }
    None
}

/// Layer 2: a phase whose two lane pairs are both high-priority and
/// balanced. Rounds 1-4 anchor the rank-1 slot and loosen the partner rank
/// (2,3,4,5); round 5 accepts any phase with ranks (<=2, <=3).
pub fn layer2_balanced(view: &DensityView, params: &RuleParams, now: u32) -> Option<PhaseId> {
    let anchor = (0..UPSTREAM_SLOTS).find(|&s| view.order[s] == 1)?;
    if view.exists[anchor] && !RIGHT_TURN_SLOTS.contains(&anchor) {
        for (round, max_partner) in [(0usize, 2u8), (1, 3), (2, 4), (3, 5)] {
            let c = params.c_balance(round, now);
            let pick = phases_of_slot(anchor)
                .into_iter()
                .filter(|&p| {
                    let partner = partner_slot(p, anchor);
                    view.exists[partner]
                        && view.order[partner] <= max_partner
                        && balanced(view.alpha_rel[anchor], view.alpha_rel[partner], c)
                })
                .min_by_key(|&p| (view.order[partner_slot(p, anchor)], p.value()));
            if pick.is_some() {
                return pick;
            }
        }
    }

    let c = params.c_balance(4, now);
    PhaseId::all()
        .filter(|&p| {
            let [a, b] = phase_movements(p).upstream_slots;
            if !(view.exists[a] && view.exists[b]) {
                return false;
            }
            let (lead, other) = if view.order[a] <= view.order[b] { (a, b) } else { (b, a) };
            view.order[lead] <= 2
                && view.order[other] <= 3
                && balanced(view.alpha_rel[lead], view.alpha_rel[other], c)
        })
        .min_by_key(|&p| {
            let [a, b] = phase_movements(p).upstream_slots;
            let (lo, hi) = if view.order[a] <= view.order[b] {
                (view.order[a], view.order[b])
            } else {
                (view.order[b], view.order[a])
            };
            (lo, hi, p.value())
        })
}

/// Layer 3: both lanes of the phase crawling below the speed threshold,
/// with speed ranks (<=2 then <=3) and density ranks (<=4 then <=5).
pub fn layer3_slow(view: &DensityView, params: &RuleParams) -> Option<PhaseId> {
    for (max_speed_rank, max_density_rank) in [(2u8, 4u8), (3, 5)] {
        let pick = PhaseId::all()
            .filter(|&p| {
                let [a, b] = phase_movements(p).upstream_slots;
                view.exists[a]
                    && view.exists[b]
                    && view.avg_speed[a] < params.c_speed
                    && view.avg_speed[b] < params.c_speed
                    && view.speed_order[a] <= max_speed_rank
                    && view.speed_order[b] <= max_speed_rank
                    && view.order[a] <= max_density_rank
                    && view.order[b] <= max_density_rank
            })
            .min_by_key(|&p| p.value());
        if pick.is_some() {
            return pick;
        }
    }
    None
}

/// Layer 4: always yields a phase. Walks the density order, skipping
/// right-turn anchors, and prefers the two-road phase unless the opposing
/// road is absent.
pub fn layer4_fallback(view: &DensityView) -> PhaseId {
    for rank in 1..=UPSTREAM_SLOTS as u8 {
        let Some(slot) = (0..UPSTREAM_SLOTS).find(|&s| view.order[s] == rank) else { continue };
        if !view.exists[slot] || RIGHT_TURN_SLOTS.contains(&slot) {
            continue;
        }
        let phases = phases_of_slot(slot);
        for &p in &phases {
            if view.exists[partner_slot(p, slot)] {
                return p;
            }
        }
    }
    // No controllable upstream lane; degenerate but keep the function total.
    PhaseId::new(1).unwrap()
}

/// Which layer produced the decision (for trace logs).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerFired {
    Blocked = 1,
    Balanced = 2,
    Slow = 3,
    Fallback = 4,
}

pub fn decide_view(view: &DensityView, params: &RuleParams, now: u32) -> (PhaseId, LayerFired) {
    if let Some(p) = layer1_blocked(view, params, now) {
        return (p, LayerFired::Blocked);
    }
    if let Some(p) = layer2_balanced(view, params, now) {
        return (p, LayerFired::Balanced);
    }
    if let Some(p) = layer3_slow(view, params) {
        return (p, LayerFired::Slow);
    }
    (layer4_fallback(view), LayerFired::Fallback)
}

/// Full cascade against a live world snapshot.
pub fn decide(world: &SimWorld, i: IntersectionIdx, params: &RuleParams, now: u32) -> PhaseId {
    decide_view(&density_view(world, i, params), params, now).0
}

#[cfg(test)]
mod tests;

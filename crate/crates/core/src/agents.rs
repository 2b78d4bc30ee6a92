//! Phase-choosing agents queried by the episode driver whenever an
//! intersection's trigger fires.

use crate::dqn::{act, ensemble_act, hybrid_act, QNetwork};
use crate::features::{build_state, phase_pressure, zone_stats, StatGroup};
use crate::net::{IntersectionIdx, PhaseId};
use crate::rules::{self, RuleParams};
use crate::sim::SimWorld;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub trait Agent: Send {
    fn name(&self) -> String;

    /// Chooses the next phase for an intersection whose trigger fired.
    fn decide(&mut self, world: &SimWorld, i: IntersectionIdx) -> PhaseId;
}

/// Cycles phases 1-4 (skipping phases without lanes). Switch cadence comes
/// from the trigger's max-green condition.
pub struct FixedTimeAgent {
    pub period: u32,
}

impl FixedTimeAgent {
    pub fn new(period: u32) -> FixedTimeAgent {
        FixedTimeAgent { period }
    }
}

impl Agent for FixedTimeAgent {
    fn name(&self) -> String {
        format!("fixed_time_{}", self.period)
    }

    fn decide(&mut self, world: &SimWorld, i: IntersectionIdx) -> PhaseId {
        let cs = world.controller(i).expect("fixed-time agent on unsignalized intersection");
        let valid = cs.valid_phases();
        let current = cs.current_phase().index();
        for step in 1..=4 {
            let candidate = (current + step) % 4;
            if valid[candidate] {
                return PhaseId::from_index(candidate);
            }
        }
        cs.current_phase()
    }
}

/// Greedy max-pressure: the valid phase with the highest vehicle-count
/// pressure at k=100, ties to the lowest phase id.
pub struct MaxPressureAgent {
    pub k: f64,
}

impl Default for MaxPressureAgent {
    fn default() -> Self {
        MaxPressureAgent { k: 100.0 }
    }
}

impl Agent for MaxPressureAgent {
    fn name(&self) -> String {
        "max_pressure".into()
    }

    fn decide(&mut self, world: &SimWorld, i: IntersectionIdx) -> PhaseId {
        let stats = zone_stats(world, i, self.k);
        let valid = world.controller(i).expect("signalized").valid_phases();
        PhaseId::all()
            .filter(|p| valid[p.index()])
            .min_by(|&a, &b| {
                let pa = phase_pressure(&stats, a, StatGroup::Count);
                let pb = phase_pressure(&stats, b, StatGroup::Count);
                pb.total_cmp(&pa).then(a.value().cmp(&b.value()))
            })
            .expect("at least one valid phase")
    }
}

/// Decision-trace row of the rule agent: (t, intersection id, layer, phase).
pub type TraceRow = (u32, String, u8, u8);

/// The four-layer heuristic controller.
pub struct RuleBasedAgent {
    pub params: RuleParams,
    trace: Option<Vec<TraceRow>>,
}

impl RuleBasedAgent {
    pub fn new(params: RuleParams) -> RuleBasedAgent {
        RuleBasedAgent { params, trace: None }
    }

    pub fn with_trace(mut self) -> RuleBasedAgent {
        self.trace = Some(Vec::new());
        self
    }

    pub fn take_trace(&mut self) -> Option<Vec<TraceRow>> {
        self.trace.take().map(|t| {
            self.trace = Some(Vec::new());
            t
        })
    }
}

impl Agent for RuleBasedAgent {
    fn name(&self) -> String {
        "rule_based".into()
    }

    fn decide(&mut self, world: &SimWorld, i: IntersectionIdx) -> PhaseId {
        let view = rules::density_view(world, i, &self.params);
        let (phase, layer) = rules::decide_view(&view, &self.params, world.clock);
        if let Some(trace) = &mut self.trace {
            trace.push((world.clock, world.net().intersection(i).id.clone(), layer as u8, phase.value()));
        }
        phase
    }
}

/// DQN policy agent: single model, ensemble mean, or the rule-revised
/// hybrid. Exploration only happens when epsilon > 0 (training rollouts).
pub struct DqnAgent {
    pub nets: Vec<QNetwork>,
    pub epsilon: f64,
    pub hybrid_rule: Option<RuleParams>,
    rng: ChaCha8Rng,
    label: String,
}

impl DqnAgent {
    pub fn single(net: QNetwork, epsilon: f64, seed: u64) -> DqnAgent {
        DqnAgent {
            nets: vec![net],
            epsilon,
            hybrid_rule: None,
            rng: ChaCha8Rng::seed_from_u64(seed),
            label: "dqn_single".into(),
        }
    }

    pub fn ensemble(nets: Vec<QNetwork>) -> DqnAgent {
        assert!(!nets.is_empty());
        let label = format!("dqn_ensemble_{}", nets.len());
        DqnAgent { nets, epsilon: 0.0, hybrid_rule: None, rng: ChaCha8Rng::seed_from_u64(0), label }
    }

    pub fn hybrid(nets: Vec<QNetwork>, params: RuleParams) -> DqnAgent {
        let mut a = DqnAgent::ensemble(nets);
        a.hybrid_rule = Some(params);
        a.label = "dqn_rule_hybrid".into();
        a
    }
}

impl Agent for DqnAgent {
    fn name(&self) -> String {
        self.label.clone()
    }

    fn decide(&mut self, world: &SimWorld, i: IntersectionIdx) -> PhaseId {
        let mask = world.controller(i).expect("signalized").valid_phases();
        let input = build_state(world, i).to_net_input();
        let index = if let Some(params) = &self.hybrid_rule {
            let view = rules::density_view(world, i, params);
            let layer1 = rules::layer1_blocked(&view, params, world.clock);
            hybrid_act(&self.nets, layer1, &input, &mask).expect("valid mask")
        } else if self.nets.len() == 1 {
            act(&self.nets[0], &input, &mask, self.epsilon, &mut self.rng).expect("valid mask")
        } else {
            ensemble_act(&self.nets, &input, &mask).expect("valid mask")
        };
        PhaseId::from_index(index)
    }
}

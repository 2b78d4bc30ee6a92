//! Test support: independent straight-line oracles shared by the unit and
//! acceptance suites. Everything here deliberately avoids the production
//! code paths it checks.

use crate::dqn::{compute_targets, loss_and_grads, Experience, Gradients, QNetwork};
use crate::rules::{DensityView, RuleParams};

/// (slot, [(phase, partner slot, serves two roads); 2]) for every
/// controllable upstream slot; right-turn slots 2/5/8/11 serve no phase.
/// Hand-derived from the compass slot layout.
pub const SLOT_PHASES: [(usize, [(u8, usize, bool); 2]); 8] = [
    (0, [(1, 6, true), (5, 1, false)]),
    (1, [(2, 7, true), (5, 0, false)]),
    (3, [(3, 9, true), (6, 4, false)]),
    (4, [(4, 10, true), (6, 3, false)]),
    (6, [(1, 0, true), (7, 7, false)]),
    (7, [(2, 1, true), (7, 6, false)]),
    (9, [(3, 3, true), (8, 10, false)]),
    (10, [(4, 4, true), (8, 9, false)]),
];

/// (phase, upstream slot pair) for phases 1..8.
pub const PHASE_SLOTS: [(u8, usize, usize); 8] =
    [(1, 0, 6), (2, 1, 7), (3, 3, 9), (4, 4, 10), (5, 0, 1), (6, 3, 4), (7, 6, 7), (8, 9, 10)];

fn slot_phases(slot: usize) -> Option<[(u8, usize, bool); 2]> {
    SLOT_PHASES.iter().find(|(s, _)| *s == slot).map(|(_, p)| *p)
}

fn oracle_balanced(a: f64, b: f64, c: f64) -> bool {
    let hi = a.max(b);
    let lo = a.min(b);
    hi < lo / c
}

/// Brute-force reimplementation of the four-layer rule cascade. Returns
/// (phase value, layer fired).
pub fn cascade_oracle(view: &DensityView, params: &RuleParams, now: u32) -> (u8, u8) {
    // Layer 1: blocked lanes ranked by time (ties to the lower slot).
    let mut blocked: Vec<usize> =
        SLOT_PHASES.iter().map(|(s, _)| *s).filter(|&s| view.exists[s]).collect();
    blocked.sort_by(|&a, &b| view.blocked_secs[b].cmp(&view.blocked_secs[a]).then(a.cmp(&b)));
    let cb = params.c_block(now);
    let rounds = [(0usize, cb, 5u8, 4u8, false), (1, cb + 50.0, 2, 1, true)];
    for (idx, threshold, own_max, partner_req, exact) in rounds {
        if let Some(&j) = blocked.get(idx) {
            if view.blocked_secs[j] as f64 > threshold && view.order[j] <= own_max {
                if let Some(phases) = slot_phases(j) {
                    // two-road phase listed first
                    for (phase, partner, _) in phases {
                        let ok = view.exists[partner]
                            && if exact {
                                view.order[partner] == partner_req
                            } else {
                                view.order[partner] <= partner_req
                            };
                        if ok {
                            return (phase, 1);
                        }
                    }
                }
            }
        }
    }

    // Layer 2: balanced high-priority pairs, anchor rounds then the open round.
    let anchor = (0..12).find(|&s| view.order[s] == 1).unwrap();
    if view.exists[anchor] {
        if let Some(phases) = slot_phases(anchor) {
            for (round, partner_max) in [(0usize, 2u8), (1, 3), (2, 4), (3, 5)] {
                let c = params.c_balance(round, now);
                let mut best: Option<(u8, u8)> = None;
                for (phase, partner, _) in phases {
                    if view.exists[partner]
                        && view.order[partner] <= partner_max
                        && oracle_balanced(view.alpha_rel[anchor], view.alpha_rel[partner], c)
                    {
                        let cand = (view.order[partner], phase);
                        if best.map_or(true, |b| cand < b) {
                            best = Some(cand);
                        }
                    }
                }
                if let Some((_, phase)) = best {
                    return (phase, 2);
                }
            }
        }
    }
    {
        let c = params.c_balance(4, now);
        let mut best: Option<(u8, u8, u8)> = None;
        for (phase, a, b) in PHASE_SLOTS {
            if !(view.exists[a] && view.exists[b]) {
                continue;
            }
            let (lo, hi) = if view.order[a] <= view.order[b] {
                (view.order[a], view.order[b])
            } else {
                (view.order[b], view.order[a])
            };
            if lo <= 2 && hi <= 3 && oracle_balanced(view.alpha_rel[a], view.alpha_rel[b], c) {
                let cand = (lo, hi, phase);
                if best.map_or(true, |x| cand < x) {
                    best = Some(cand);
                }
            }
        }
        if let Some((_, _, phase)) = best {
            return (phase, 2);
        }
    }

    // Layer 3: two crawling lanes, two rounds of loosening ranks.
    for (speed_max, dens_max) in [(2u8, 4u8), (3, 5)] {
        for (phase, a, b) in PHASE_SLOTS {
            if view.exists[a]
                && view.exists[b]
                && view.avg_speed[a] < params.c_speed
                && view.avg_speed[b] < params.c_speed
                && view.speed_order[a] <= speed_max
                && view.speed_order[b] <= speed_max
                && view.order[a] <= dens_max
                && view.order[b] <= dens_max
            {
                return (phase, 3);
            }
        }
    }

    // Layer 4: densest controllable lane, two-road preferred.
    for rank in 1..=12u8 {
        let slot = (0..12).find(|&s| view.order[s] == rank).unwrap();
        if !view.exists[slot] {
            continue;
        }
        if let Some(phases) = slot_phases(slot) {
            for (phase, partner, _) in phases {
                if view.exists[partner] {
                    return (phase, 4);
                }
            }
        }
    }
    (1, 4)
}

/// Naive counting rank: 1 = best. Ties break to the lower slot.
pub fn naive_ranks(key: &[f64; 12], ascending: bool) -> [u8; 12] {
    let mut order = [0u8; 12];
    for s in 0..12 {
        let mut rank = 1u8;
        for t in 0..12 {
            if t == s {
                continue;
            }
            let better = if ascending { key[t] < key[s] } else { key[t] > key[s] };
            if better || (key[t] == key[s] && t < s) {
                rank += 1;
            }
        }
        order[s] = rank;
    }
    order
}

/// Hand-specified intersection state for cascade fixtures.
#[derive(Clone)]
pub struct RuleFixture {
    pub alpha: [f64; 12],
    pub speed: [f64; 12],
    pub blocked: [u32; 12],
    pub missing: &'static [usize],
}

impl Default for RuleFixture {
    fn default() -> Self {
        RuleFixture { alpha: [0.0; 12], speed: [15.0; 12], blocked: [0; 12], missing: &[] }
    }
}

/// Builds a DensityView from raw values, ranking with `naive_ranks`.
pub fn view_from(f: &RuleFixture) -> DensityView {
    let mut alpha = f.alpha;
    let mut speed = f.speed;
    let mut exists = [true; 12];
    for &s in f.missing {
        exists[s] = false;
        alpha[s] = f64::NEG_INFINITY;
        speed[s] = f64::INFINITY;
    }
    let mut neg = [0.0; 12];
    for s in 0..12 {
        neg[s] = -alpha[s];
    }
    DensityView {
        intersection: crate::net::IntersectionIdx(0),
        exists,
        alpha_up: alpha.map(|a| a.max(0.0)),
        alpha_rel: alpha,
        order: naive_ranks(&neg, true),
        blocked_secs: f.blocked,
        avg_speed: speed,
        speed_order: naive_ranks(&speed, true),
    }
}

fn with(values: &[(usize, f64)]) -> [f64; 12] {
    // Unset slots get distinct tiny negatives so ranks are unambiguous.
    let mut out = [0.0; 12];
    for s in 0..12 {
        out[s] = -1e-4 * (s as f64 + 1.0);
    }
    for &(s, v) in values {
        out[s] = v;
    }
    out
}

/// The hand-constructed cascade fixture suite: every layer, every round,
/// the right-turn fallback and the three-leg case. Expected (phase, layer)
/// values were computed with `cascade_oracle`, which re-verifies them on
/// every run.
pub fn cascade_fixtures() -> Vec<(&'static str, RuleFixture, u32, u8, u8)> {
    let mut out: Vec<(&'static str, RuleFixture, u32, u8, u8)> = Vec::new();
    let mut push = |name, f: RuleFixture, now: u32, phase: u8, layer: u8| {
        out.push((name, f, now, phase, layer));
    };

    push(
        "layer1 round1 rescues longest-blocked lane",
        RuleFixture {
            alpha: with(&[(4, 0.30), (7, 0.25), (1, 0.20)]),
            blocked: { let mut b = [0; 12]; b[1] = 250; b },
            ..RuleFixture::default()
        },
        0,
        2,
        1,
    );
    push(
        "layer1 prefers the two-road phase",
        RuleFixture {
            alpha: with(&[(0, 0.30), (6, 0.25), (1, 0.20)]),
            blocked: { let mut b = [0; 12]; b[0] = 220; b },
            ..RuleFixture::default()
        },
        0,
        1,
        1,
    );
    push(
        "layer1 round2 uses the second-largest blocked lane",
        RuleFixture {
            alpha: with(&[
                (10, 0.50),
                (9, 0.45),
                (4, 0.40),
                (7, 0.35),
                (1, 0.30),
                (6, 0.25),
                (3, 0.20),
                (0, 0.15),
            ]),
            blocked: {
                let mut b = [0; 12];
                b[3] = 400;
                b[9] = 260;
                b
            },
            ..RuleFixture::default()
        },
        0,
        8,
        1,
    );
    push(
        "layer1 outranks a balanced layer2 pair",
        RuleFixture {
            alpha: with(&[(4, 0.30), (10, 0.28), (7, 0.25), (1, 0.20)]),
            blocked: { let mut b = [0; 12]; b[1] = 250; b },
            ..RuleFixture::default()
        },
        0,
        2,
        1,
    );
    push(
        "layer2 round1 balanced top pair",
        RuleFixture { alpha: with(&[(4, 0.30), (10, 0.28)]), ..RuleFixture::default() },
        0,
        4,
        2,
    );
    push(
        "layer2 advances to round3",
        RuleFixture {
            alpha: with(&[(0, 0.30), (7, 0.25), (4, 0.20), (6, 0.10)]),
            ..RuleFixture::default()
        },
        0,
        1,
        2,
    );
    push(
        "layer2 round5 accepts a non-anchored pair",
        RuleFixture {
            alpha: with(&[(1, 0.50), (4, 0.48), (10, 0.46), (7, 0.05), (0, 0.04)]),
            ..RuleFixture::default()
        },
        0,
        4,
        2,
    );
    push(
        "layer2 balance substitution (0.10 vs 0.09 at C=0.2)",
        RuleFixture {
            alpha: with(&[(4, 0.10), (10, 0.09), (7, 0.095)]),
            ..RuleFixture::default()
        },
        0,
        4,
        2,
    );
    push(
        "lopsided pair falls through to layer4",
        RuleFixture {
            alpha: with(&[(4, 0.10), (10, 0.01), (7, 0.095)]),
            ..RuleFixture::default()
        },
        0,
        4,
        4,
    );
    push(
        "layer3 round1 two crawling lanes",
        RuleFixture {
            alpha: with(&[(3, 0.50), (4, 0.02), (9, 0.01), (10, 0.005)]),
            speed: {
                let mut s = [15.0; 12];
                s[3] = 0.4;
                s[4] = 0.6;
                s
            },
            ..RuleFixture::default()
        },
        0,
        6,
        3,
    );
    push(
        "layer3 round2 relaxes ranks",
        RuleFixture {
            alpha: with(&[
                (4, 0.60),
                (9, 0.09),
                (7, 0.08),
                (0, 0.07),
                (6, 0.06),
                (10, 0.001),
                (3, 0.0005),
                (1, 0.0004),
            ]),
            speed: {
                let mut s = [15.0; 12];
                s[9] = 0.3;
                s[0] = 0.5;
                s[6] = 0.7;
                s
            },
            ..RuleFixture::default()
        },
        0,
        1,
        3,
    );
    push(
        "layer4 prefers the two-road phase",
        RuleFixture {
            alpha: with(&[(1, 0.30), (2, 0.05), (5, 0.04), (7, 0.0002), (0, 0.0001)]),
            ..RuleFixture::default()
        },
        0,
        2,
        4,
    );
    push(
        "layer4 right-turn anchor falls to the next rank",
        RuleFixture {
            alpha: with(&[(2, 0.40), (7, 0.35), (10, 0.30), (6, 0.02)]),
            ..RuleFixture::default()
        },
        0,
        2,
        4,
    );
    push(
        "layer4 three-leg uses the one-road phase",
        RuleFixture {
            alpha: with(&[(1, 0.30), (4, 0.02), (10, 0.0003), (0, 0.0002)]),
            missing: &[6, 7, 8],
            ..RuleFixture::default()
        },
        0,
        5,
        4,
    );
    push(
        "empty intersection falls back by slot order",
        RuleFixture { alpha: [0.0; 12], ..RuleFixture::default() },
        0,
        1,
        4,
    );
    out
}

/// Central finite differences of the two-headed Huber batch loss at fixed
/// targets; returns the flat numerical gradient.
pub fn numerical_grads(net: &QNetwork, batch: &[&Experience], targets: &[f64], eps: f64) -> Vec<f64> {
    let params = net.flat_params();
    let mut out = Vec::with_capacity(params.len());
    let mut probe = net.clone();
    let mut grads = Gradients::zeros_like(net);
    for i in 0..params.len() {
        let mut plus = params.clone();
        plus[i] += eps;
        probe.set_flat_params(&plus);
        let lp = loss_and_grads(&probe, batch, targets, &mut grads).unwrap().total();
        let mut minus = params.clone();
        minus[i] -= eps;
        probe.set_flat_params(&minus);
        let lm = loss_and_grads(&probe, batch, targets, &mut grads).unwrap().total();
        out.push((lp - lm) / (2.0 * eps));
    }
    out
}

/// Deterministic 2-state/2-action MDP trained with the production double-DQN
/// pipeline at gamma 0.8. The closed-form optimal values from the Bellman
/// equations are Q(s0)=[7.4, 8.0], Q(s1)=[6.4, 10.0]. Returns the trained
/// network and the final worst |Q - Q*|; stops early once under 1e-2.
pub fn bellman_toy(max_steps: u64) -> (QNetwork, f64) {
    use crate::dqn::{sync_target, train_step, Adam, ReplayBuffer, TrainConfig};
    use rand_chacha::rand_core::SeedableRng;

    let s0 = vec![1.0, 0.0];
    let s1 = vec![0.0, 1.0];
    let mut mask = [false; 8];
    mask[0] = true;
    mask[1] = true;
    let trans = |s: &Vec<f64>, a: usize| -> (f64, Vec<f64>) {
        match (s[0] as i32, a) {
            (1, 0) => (1.0, s0.clone()),
            (1, 1) => (0.0, s1.clone()),
            (0, 0) => (0.0, s0.clone()),
            _ => (2.0, s1.clone()),
        }
    };

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1234);
    let mut online = QNetwork::new(2, &[32, 32], 2, &mut rng);
    let mut target = online.clone();
    let cfg = TrainConfig {
        gamma: 0.8,
        lr: 2e-3,
        batch_size: 16,
        replay_capacity: 64,
        ..TrainConfig::default()
    };
    let mut opt = Adam::new(cfg.lr, online.num_params());
    let mut grads = Gradients::zeros_like(&online);
    let mut replay = ReplayBuffer::new(cfg.replay_capacity);
    for s in [&s0, &s1] {
        for a in 0..2 {
            let (r, next) = trans(s, a);
            replay.push(Experience {
                state: s.clone(),
                action: a,
                reward: r,
                next_state: next,
                mask,
                terminal: false,
            });
        }
    }

    let expected = [[7.4, 8.0], [6.4, 10.0]];
    let mut worst = f64::INFINITY;
    for step in 0..max_steps {
        let batch = replay.sample(cfg.batch_size, &mut rng);
        train_step(&mut online, &target, &mut opt, &batch, &mut grads, &cfg, step).unwrap();
        if (step + 1) % cfg.target_update_freq as u64 == 0 {
            sync_target(&online, &mut target);
        }
        if step % 50 == 0 {
            let q0 = online.q_values(&s0).unwrap();
            let q1 = online.q_values(&s1).unwrap();
            worst = [
                q0[0] - expected[0][0],
                q0[1] - expected[0][1],
                q1[0] - expected[1][0],
                q1[1] - expected[1][1],
            ]
            .iter()
            .map(|d| d.abs())
            .fold(0.0, f64::max);
            if worst < 1e-2 {
                return (online, worst);
            }
        }
    }
    (online, worst)
}

/// One full gradient check on a random tiny network; returns the worst
/// relative error and the number of parameters compared.
pub fn gradient_check(seed: u64) -> (f64, usize) {
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut net = QNetwork::new(5, &[7, 6], 3, &mut rng);
    let mut target = QNetwork::new(5, &[7, 6], 3, &mut rng);
    // Generic evaluation point: random biases keep pre-activations off the
    // ReLU corners that zero-init would pin them to on dead paths.
    for l in net.layers.iter_mut().chain(target.layers.iter_mut()) {
        for b in &mut l.b {
            *b = rng.gen_range(-0.5..0.5);
        }
    }
    let batch: Vec<Experience> = (0..4)
        .map(|_| {
            let state: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let next: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut mask = [false; 8];
            for m in mask.iter_mut().take(3) {
                *m = true;
            }
            Experience {
                state,
                action: rng.gen_range(0..3),
                reward: rng.gen_range(-2.0..2.0),
                next_state: next,
                mask,
                terminal: rng.gen_bool(0.25),
            }
        })
        .collect();
    let refs: Vec<&Experience> = batch.iter().collect();
    let targets = compute_targets(&net, &target, &refs, 0.8).unwrap();

    let mut grads = Gradients::zeros_like(&net);
    loss_and_grads(&net, &refs, &targets, &mut grads).unwrap();
    let analytic = grads.flat();
    let numeric = numerical_grads(&net, &refs, &targets, 1e-7);

    let mut worst = 0.0f64;
    let mut checked = 0;
    for (a, n) in analytic.iter().zip(numeric.iter()) {
        let denom = a.abs().max(n.abs());
        if denom < 1e-8 {
            continue;
        }
        worst = worst.max((a - n).abs() / denom);
        checked += 1;
    }
    (worst, checked)
}

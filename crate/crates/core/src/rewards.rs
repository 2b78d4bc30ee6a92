//! The six reward functions over zone statistics at consecutive decision
//! boundaries. All of them follow the larger-is-better convention; every
//! reward is 0 on an empty intersection.

use crate::features::ZoneStats;
use crate::net::{LANE_SLOTS, UPSTREAM_SLOTS};
use serde::{Deserialize, Serialize};

/// Zone statistics at a decision step (`before`) and at the next decision
/// boundary (`after`); both for the same intersection and k.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardSnapshot {
    pub before: ZoneStats,
    pub after: ZoneStats,
}

impl RewardSnapshot {
    pub fn new(before: ZoneStats, after: ZoneStats) -> RewardSnapshot {
        debug_assert_eq!(before.intersection, after.intersection);
        debug_assert_eq!(before.k, after.k);
        RewardSnapshot { before, after }
    }
}

/// Negated sum of lane delay indices at the next step.
pub fn reward_delay(s: &RewardSnapshot) -> f64 {
    -s.after.d.iter().sum::<f64>()
}

/// Negated sum of lane queue lengths at the next step.
pub fn reward_queue(s: &RewardSnapshot) -> f64 {
    -s.after.q.iter().sum::<f64>()
}

/// Delay and queue combined.
pub fn reward_dq(s: &RewardSnapshot) -> f64 {
    reward_delay(s) + reward_queue(s)
}

/// Max-pressure: negated absolute difference between total upstream and
/// total downstream vehicle counts.
pub fn reward_mp(s: &RewardSnapshot) -> f64 {
    let up: f64 = s.after.x[..UPSTREAM_SLOTS].iter().sum();
    let down: f64 = s.after.x[UPSTREAM_SLOTS..].iter().sum();
    -(up - down).abs()
}

/// Upstream DQ penalty with a half-weight downstream bonus.
pub fn reward_mp_dq(s: &RewardSnapshot) -> f64 {
    let up: f64 = (0..UPSTREAM_SLOTS).map(|j| s.after.d[j] + s.after.q[j]).sum();
    let down: f64 = (UPSTREAM_SLOTS..LANE_SLOTS).map(|j| s.after.d[j] + s.after.q[j]).sum();
    -up + 0.5 * down
}

/// Upstream DQ penalty plus a penalty on the signed change of downstream DQ
/// between the two boundaries: clearing upstream while holding downstream
/// congestion level.
pub fn reward_twin_dq(s: &RewardSnapshot) -> f64 {
    let up: f64 = (0..UPSTREAM_SLOTS).map(|j| s.after.d[j] + s.after.q[j]).sum();
    let down_change: f64 = (UPSTREAM_SLOTS..LANE_SLOTS)
        .map(|j| (s.after.d[j] + s.after.q[j]) - (s.before.d[j] + s.before.q[j]))
        .sum();
    -up - down_change
}

/// Variant penalizing downstream DQ changes in both directions.
pub fn reward_twin_dq_abs(s: &RewardSnapshot) -> f64 {
    let up: f64 = (0..UPSTREAM_SLOTS).map(|j| s.after.d[j] + s.after.q[j]).sum();
    let down_change: f64 = (UPSTREAM_SLOTS..LANE_SLOTS)
        .map(|j| ((s.after.d[j] + s.after.q[j]) - (s.before.d[j] + s.before.q[j])).abs())
        .sum();
    -up - down_change
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardKind {
    Delay,
    Queue,
    Dq,
    Mp,
    MpDq,
    TwinDq,
}

impl RewardKind {
    pub const ALL: [RewardKind; 6] = [
        RewardKind::Delay,
        RewardKind::Queue,
        RewardKind::Dq,
        RewardKind::Mp,
        RewardKind::MpDq,
        RewardKind::TwinDq,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RewardKind::Delay => "delay",
            RewardKind::Queue => "queue",
            RewardKind::Dq => "dq",
            RewardKind::Mp => "mp",
            RewardKind::MpDq => "mp_dq",
            RewardKind::TwinDq => "twin_dq",
        }
    }

    /// Evaluates the reward; `twin_abs` switches Twin-DQ's downstream term
    /// to the absolute-change variant.
    pub fn compute(self, s: &RewardSnapshot, twin_abs: bool) -> f64 {
        match self {
            RewardKind::Delay => reward_delay(s),
            RewardKind::Queue => reward_queue(s),
            RewardKind::Dq => reward_dq(s),
            RewardKind::Mp => reward_mp(s),
            RewardKind::MpDq => reward_mp_dq(s),
            RewardKind::TwinDq => {
                if twin_abs {
                    reward_twin_dq_abs(s)
                } else {
                    reward_twin_dq(s)
                }
            }
        }
    }
}

impl std::str::FromStr for RewardKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "delay" => Ok(RewardKind::Delay),
            "queue" => Ok(RewardKind::Queue),
            "dq" => Ok(RewardKind::Dq),
            "mp" => Ok(RewardKind::Mp),
            "mp_dq" | "mpdq" => Ok(RewardKind::MpDq),
            "twin_dq" | "twindq" => Ok(RewardKind::TwinDq),
            other => Err(format!(
                "unknown reward {other:?} (expected delay|queue|dq|mp|mp_dq|twin_dq)"
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::IntersectionIdx;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn snap() -> RewardSnapshot {
        RewardSnapshot::new(
            ZoneStats::empty(IntersectionIdx(0), 100.0),
            ZoneStats::empty(IntersectionIdx(0), 100.0),
        )
    }

    /// Random but consistent stats: x in [0,20], q <= x, d in [0,1].
    pub(crate) fn random_stats(rng: &mut ChaCha8Rng) -> ZoneStats {
        let mut z = ZoneStats::empty(IntersectionIdx(0), 100.0);
        for j in 0..LANE_SLOTS {
            let x = rng.gen_range(0..=20) as f64;
            z.x[j] = x;
            if x > 0.0 {
                z.q[j] = rng.gen_range(0.0..=x).floor();
                z.d[j] = rng.gen_range(0.0..=1.0);
            }
        }
        z
    }

    #[test]
    fn empty_intersection_scores_zero() {
        let s = snap();
        for kind in RewardKind::ALL {
            assert_eq!(kind.compute(&s, false), 0.0, "{}", kind.name());
        }
    }

    #[test]
    fn delay_substitution() {
        let mut s = snap();
        s.after.d[0] = 1.0;
        s.after.d[12] = 0.5;
        assert_eq!(reward_delay(&s), -1.5);
    }

    #[test]
    fn queue_substitution() {
        let mut s = snap();
        s.after.q[1] = 3.0;
        s.after.q[7] = 2.0;
        assert_eq!(reward_queue(&s), -5.0);
    }

    #[test]
    fn dq_is_sum_of_parts() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let s = RewardSnapshot::new(random_stats(&mut rng), random_stats(&mut rng));
            assert!((reward_dq(&s) - (reward_delay(&s) + reward_queue(&s))).abs() < 1e-12);
        }
    }

    #[test]
    fn mp_balance_and_sign() {
        let mut s = snap();
        for j in 0..6 {
            s.after.x[j] = 2.0;
            s.after.x[12 + j] = 2.0;
        }
        assert_eq!(reward_mp(&s), 0.0);

        let mut s = snap();
        s.after.x[0] = 10.0;
        s.after.x[12] = 4.0;
        assert_eq!(reward_mp(&s), -6.0);

        // Absolute value: swapping up/down totals leaves it unchanged.
        let mut swapped = snap();
        swapped.after.x[0] = 4.0;
        swapped.after.x[12] = 10.0;
        assert_eq!(reward_mp(&swapped), reward_mp(&s));
    }

    #[test]
    fn mp_dq_substitution() {
        let mut s = snap();
        s.after.q[0] = 4.0; // upstream DQ 4
        s.after.q[12] = 2.0; // downstream DQ 2
        assert_eq!(reward_mp_dq(&s), -3.0);
    }

    #[test]
    fn twin_dq_substitution() {
        let mut s = snap();
        s.after.q[0] = 3.0; // upstream DQ(t+1) = 3
        s.after.q[12] = 2.0; // downstream DQ(t+1) = 2
        s.before.q[12] = 1.5; // downstream DQ(t) = 1.5
        assert_eq!(reward_twin_dq(&s), -3.5);
    }

    #[test]
    fn twin_dq_stationary_downstream_reduces_to_upstream_term() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..50 {
            let after = random_stats(&mut rng);
            let mut before = random_stats(&mut rng);
            for j in UPSTREAM_SLOTS..LANE_SLOTS {
                before.d[j] = after.d[j];
                before.q[j] = after.q[j];
            }
            let s = RewardSnapshot::new(before, after);
            let upstream_only: f64 =
                -(0..UPSTREAM_SLOTS).map(|j| s.after.d[j] + s.after.q[j]).sum::<f64>();
            assert!((reward_twin_dq(&s) - upstream_only).abs() < 1e-12);
        }
    }

    #[test]
    fn twin_dq_rewards_downstream_relief() {
        let mut s = snap();
        s.after.q[0] = 3.0;
        s.before.q[12] = 5.0;
        s.after.q[12] = 2.0; // downstream cleared
        let upstream_only = -3.0;
        assert!(reward_twin_dq(&s) > upstream_only);
    }

    #[test]
    fn rewards_are_nonpositive_where_required() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..200 {
            let s = RewardSnapshot::new(random_stats(&mut rng), random_stats(&mut rng));
            assert!(reward_delay(&s) <= 0.0);
            assert!(reward_queue(&s) <= 0.0);
            assert!(reward_dq(&s) <= 0.0);
            assert!(reward_mp(&s) <= 0.0);
        }
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("twin_dq".parse::<RewardKind>().unwrap(), RewardKind::TwinDq);
        assert_eq!("MP_DQ".parse::<RewardKind>().unwrap(), RewardKind::MpDq);
        assert!("bogus".parse::<RewardKind>().is_err());
    }
}

//! The eight signal phases and their lane movements.
//!
//! Each phase grants right-of-way to two non-conflicting movements: phases
//! 1-4 pair opposing approaches (N/S left, N/S through, E/W left, E/W
//! through), phases 5-8 serve one approach's left+through. Right turns are
//! never signal-controlled.

use super::{in_slot, movement_target, Approach, Turn};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Signal phase, 1..=8.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct PhaseId(u8);

impl PhaseId {
    pub const COUNT: usize = 8;

    pub fn new(value: u8) -> Option<PhaseId> {
        (1..=8).contains(&value).then_some(PhaseId(value))
    }

    pub fn value(self) -> u8 {
        self.0
    }

    /// Zero-based action index.
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    pub fn from_index(i: usize) -> PhaseId {
        assert!(i < 8, "phase index {i} out of range");
        PhaseId(i as u8 + 1)
    }

    pub fn all() -> impl Iterator<Item = PhaseId> {
        (1..=8).map(PhaseId)
    }
}

impl TryFrom<u8> for PhaseId {
    type Error = String;

    fn try_from(v: u8) -> Result<PhaseId, String> {
        PhaseId::new(v).ok_or_else(|| format!("phase {v} out of range 1..=8"))
    }
}

impl From<PhaseId> for u8 {
    fn from(p: PhaseId) -> u8 {
        p.0
    }
}

impl fmt::Display for PhaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Lane movements granted by one phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhaseMovements {
    /// The two upstream slots with right-of-way.
    pub upstream_slots: [usize; 2],
    /// The downstream slot triples those movements feed, in the same order.
    pub downstream_groups: [[usize; 3]; 2],
    /// Phases 1-4 pair two opposing roads; 5-8 serve a single road.
    pub serves_two_roads: bool,
}

impl PhaseMovements {
    /// All six downstream slots of the phase.
    pub fn downstream_slots(&self) -> impl Iterator<Item = usize> + '_ {
        self.downstream_groups.iter().flatten().copied()
    }
}

fn build_table() -> [PhaseMovements; 8] {
    use Approach::*;
    use Turn::*;
    let pairs: [([(Approach, Turn); 2], bool); 8] = [
        ([(North, Left), (South, Left)], true),
        ([(North, Through), (South, Through)], true),
        ([(East, Left), (West, Left)], true),
        ([(East, Through), (West, Through)], true),
        ([(North, Left), (North, Through)], false),
        ([(East, Left), (East, Through)], false),
        ([(South, Left), (South, Through)], false),
        ([(West, Left), (West, Through)], false),
    ];
    pairs.map(|(mv, serves_two_roads)| {
        let up = [in_slot(mv[0].0, mv[0].1), in_slot(mv[1].0, mv[1].1)];
        PhaseMovements {
            upstream_slots: up,
            downstream_groups: [movement_target(up[0]), movement_target(up[1])],
            serves_two_roads,
        }
    })
}

/// Phase table indexed by `PhaseId::index()`; identical for every intersection.
pub static PHASE_TABLE: std::sync::LazyLock<[PhaseMovements; 8]> = std::sync::LazyLock::new(build_table);

/// Movements of a phase (pure lookup).
pub fn phase_movements(phase: PhaseId) -> &'static PhaseMovements {
    &PHASE_TABLE[phase.index()]
}

//! FIFO replay buffer with uniform sampling.

use rand::Rng;
use std::collections::VecDeque;

/// One transition between consecutive trigger decisions at an intersection.
#[derive(Debug, Clone, PartialEq)]
pub struct Experience {
    /// Network input encoding of the state.
    pub state: Vec<f64>,
    /// Zero-based action index (phase index).
    pub action: usize,
    pub reward: f64,
    pub next_state: Vec<f64>,
    /// Valid actions at this intersection.
    pub mask: [bool; 8],
    pub terminal: bool,
}

#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    buf: VecDeque<Experience>,
    capacity: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> ReplayBuffer {
        assert!(capacity > 0);
        ReplayBuffer { buf: VecDeque::with_capacity(capacity.min(1 << 20)), capacity }
    }

    /// Appends, evicting the oldest transition at capacity.
    pub fn push(&mut self, e: Experience) {
        debug_assert!(e.mask[e.action], "action {} not valid under its mask", e.action);
        if self.buf.len() == self.capacity {
            self.buf.pop_front();
        }
        self.buf.push_back(e);
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn get(&self, i: usize) -> &Experience {
        &self.buf[i]
    }

    /// Uniform sample with replacement.
    pub fn sample<'a>(&'a self, n: usize, rng: &mut impl Rng) -> Vec<&'a Experience> {
        (0..n).map(|_| &self.buf[rng.gen_range(0..self.buf.len())]).collect()
    }
}

use std::collections::VecDeque;

use crate::seed::Rng;
use crate::world::FeatureVector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub phi: FeatureVector,
    pub action: usize,
    pub reward: f64,
    pub next_phi: FeatureVector,
    pub done: bool,
}

/// Fixed-capacity FIFO memory; the oldest entry is dropped when full.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    entries: VecDeque<Transition>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> ReplayBuffer {
        ReplayBuffer { capacity, entries: VecDeque::with_capacity(capacity) }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn push(&mut self, t: Transition) {
        if self.capacity == 0 {
            return;
        }
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(t);
    }

    pub fn get(&self, i: usize) -> Option<&Transition> {
        self.entries.get(i)
    }

    /// Indices of `n` distinct entries, or `None` if fewer are stored.
    pub fn sample_indices(&self, rng: &mut Rng, n: usize) -> Option<Vec<usize>> {
        (self.entries.len() >= n).then(|| rand::seq::index::sample(rng, self.entries.len(), n).into_vec())
    }
}

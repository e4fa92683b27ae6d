//! Experience replay: a fixed-capacity ring of transitions with uniform
//! sampling (with replacement).

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ReplayError {
    #[error("replay buffer holds {have} transitions, {want} requested")]
    NotEnough { have: usize, want: usize },
}

/// One MDP experience tuple. State and action layouts are fixed per scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub terminal: bool,
}

/// Ring storage; once full, each push evicts the oldest transition.
#[derive(Clone, Debug)]
pub struct ReplayBuffer {
    storage: Vec<Transition>,
    capacity: usize,
    write: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> ReplayBuffer {
        assert!(capacity > 0, "replay capacity must be positive");
        ReplayBuffer {
            storage: Vec::with_capacity(capacity.min(1 << 20)),
            capacity,
            write: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.storage.len()
    }

    pub fn is_empty(&self) -> bool {
        self.storage.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, t: Transition) {
        if self.storage.len() < self.capacity {
            self.storage.push(t);
        } else {
            self.storage[self.write] = t;
        }
        self.write = (self.write + 1) % self.capacity;
    }

    /// Uniform sample of `n` transitions with replacement.
    pub fn sample<'a>(
        &'a self,
        n: usize,
        rng: &mut impl rand::Rng,
    ) -> Result<Vec<&'a Transition>, ReplayError> {
        if self.storage.len() < n || n == 0 {
            return Err(ReplayError::NotEnough {
                have: self.storage.len(),
                want: n,
            });
        }
        Ok((0..n)
            .map(|_| &self.storage[rng.gen_range(0..self.storage.len())])
            .collect())
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.storage.iter()
    }
}

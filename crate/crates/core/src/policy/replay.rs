//! Fixed-capacity FIFO replay memory.
//!
//! Scan matrices are stored as 16-bit fixed point in `[0, 1]` after range
//! normalisation, and each observation is shared between the transition
//! that produced it and the one that consumes it.

use std::sync::Arc;

use ndarray::{Array1, Array2, Array4};
use rand::Rng;

use super::network::{FeatureBatch, RANGE_SCALE};
use super::PolicyError;
use crate::lidar::MotionFeature;

const QUANT: f64 = u16::MAX as f64;

#[derive(Debug, Clone, PartialEq)]
pub struct CompactObs {
    pub rows: usize,
    pub beams: usize,
    scans: Vec<u16>,
    pub goal: [f64; 2],
}

impl CompactObs {
    pub fn from_feature(f: &MotionFeature) -> CompactObs {
        CompactObs {
            rows: f.rows,
            beams: f.beams,
            scans: f
                .data
                .iter()
                .map(|r| ((r / RANGE_SCALE).clamp(0.0, 1.0) * QUANT).round() as u16)
                .collect(),
            goal: f.goal.normalized(),
        }
    }

    fn write_into(&self, dst: &mut [f64]) {
        for (d, &q) in dst.iter_mut().zip(&self.scans) {
            *d = q as f64 / QUANT;
        }
    }
}

#[derive(Debug, Clone)]
pub struct Transition {
    pub obs: Arc<CompactObs>,
    pub action: [f64; 2],
    pub reward: f64,
    pub next: Arc<CompactObs>,
    pub done: bool,
}

/// A sampled minibatch in network layout.
#[derive(Debug, Clone)]
pub struct TrainBatch {
    pub obs: FeatureBatch,
    pub actions: Array2<f64>,
    pub rewards: Array1<f64>,
    pub next: FeatureBatch,
    pub done: Array1<f64>,
}

impl TrainBatch {
    pub fn from_transitions(items: &[&Transition]) -> TrainBatch {
        let n = items.len();
        let (rows, beams) = items.first().map(|t| (t.obs.rows, t.obs.beams)).unwrap_or((0, 0));
        let mut obs = Array4::<f64>::zeros((n, 1, rows, beams));
        let mut next = Array4::<f64>::zeros((n, 1, rows, beams));
        let mut goals = Array2::<f64>::zeros((n, 2));
        let mut next_goals = Array2::<f64>::zeros((n, 2));
        let mut actions = Array2::<f64>::zeros((n, 2));
        let mut rewards = Array1::<f64>::zeros(n);
        let mut done = Array1::<f64>::zeros(n);
        let plane = rows * beams;
        {
            let os = obs.as_slice_mut().expect("fresh array");
            let ns = next.as_slice_mut().expect("fresh array");
            for (i, t) in items.iter().enumerate() {
                t.obs.write_into(&mut os[i * plane..(i + 1) * plane]);
                t.next.write_into(&mut ns[i * plane..(i + 1) * plane]);
                goals.row_mut(i).assign(&Array1::from(t.obs.goal.to_vec()));
                next_goals.row_mut(i).assign(&Array1::from(t.next.goal.to_vec()));
                actions.row_mut(i).assign(&Array1::from(t.action.to_vec()));
                rewards[i] = t.reward;
                done[i] = if t.done { 1.0 } else { 0.0 };
            }
        }
        TrainBatch {
            obs: FeatureBatch { scans: obs, goals },
            actions,
            rewards,
            next: FeatureBatch {
                scans: next,
                goals: next_goals,
            },
            done,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    head: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> ReplayBuffer {
        assert!(capacity > 0, "replay capacity must be positive");
        ReplayBuffer {
            capacity,
            items: Vec::new(),
            head: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Appends, evicting the oldest entry once full.
    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.head] = t;
            self.head = (self.head + 1) % self.capacity;
        }
    }

    /// Entries from oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items[self.head..].iter().chain(&self.items[..self.head])
    }

    /// Uniform sampling with replacement.
    pub fn sample<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Result<Vec<&Transition>, PolicyError> {
        if batch == 0 || batch > self.items.len() {
            return Err(PolicyError::BatchTooLarge {
                batch,
                occupancy: self.items.len(),
            });
        }
        Ok((0..batch).map(|_| &self.items[rng.random_range(0..self.items.len())]).collect())
    }
}

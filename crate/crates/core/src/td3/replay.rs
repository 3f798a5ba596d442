use ndarray::{Array1, Array2};
use rand::seq::index;
use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub obs: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_obs: Vec<f64>,
    pub done: bool,
}

/// A sampled minibatch, one row per transition.
#[derive(Debug, Clone)]
pub struct Batch {
    pub obs: Array2<f64>,
    pub actions: Array2<f64>,
    pub rewards: Array1<f64>,
    pub next_obs: Array2<f64>,
    pub dones: Array1<f64>,
}

/// Fixed-capacity ring of transitions; the oldest entry is overwritten first.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    next: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        ReplayBuffer {
            capacity,
            items: Vec::with_capacity(capacity.min(1 << 16)),
            next: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.next] = t;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    /// Uniform sample without replacement; `None` while fewer than
    /// `batch_size` transitions are stored.
    pub fn sample(&self, batch_size: usize, rng: &mut impl Rng) -> Option<Batch> {
        if batch_size == 0 || self.items.len() < batch_size {
            return None;
        }
        let picks = index::sample(rng, self.items.len(), batch_size);
        let first = &self.items[0];
        let (od, ad) = (first.obs.len(), first.action.len());
        let mut batch = Batch {
            obs: Array2::zeros((batch_size, od)),
            actions: Array2::zeros((batch_size, ad)),
            rewards: Array1::zeros(batch_size),
            next_obs: Array2::zeros((batch_size, od)),
            dones: Array1::zeros(batch_size),
        };
        for (row, k) in picks.into_iter().enumerate() {
            let t = &self.items[k];
            batch.obs.row_mut(row).assign(&Array1::from(t.obs.clone()));
            batch.actions.row_mut(row).assign(&Array1::from(t.action.clone()));
            batch.next_obs.row_mut(row).assign(&Array1::from(t.next_obs.clone()));
            batch.rewards[row] = t.reward;
            batch.dones[row] = if t.done { 1.0 } else { 0.0 };
        }
        Some(batch)
    }
}

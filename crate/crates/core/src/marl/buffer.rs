use rand::Rng;

use crate::comm::GateStats;

/// One joint experience tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub obs: Vec<Vec<f64>>,
    pub actions: Vec<Vec<f64>>,
    pub routes: Vec<(usize, usize)>,
    pub gates: GateStats,
    pub rewards: Vec<f64>,
    pub next_obs: Vec<Vec<f64>>,
    pub next_routes: Vec<(usize, usize)>,
    pub done: bool,
}

/// Fixed-capacity ring buffer with FIFO eviction.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    cursor: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            items: Vec::with_capacity(capacity.min(1 << 16)),
            cursor: 0,
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
            self.items[self.cursor] = t;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
    }

    /// Uniform sample with replacement.
    pub fn sample<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Vec<&Transition> {
        if self.items.is_empty() {
            return Vec::new();
        }
        (0..batch)
            .map(|_| &self.items[rng.random_range(0..self.items.len())])
            .collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(tag: f64) -> Transition {
        Transition {
            obs: vec![vec![tag]],
            actions: vec![vec![0.0]],
            routes: vec![],
            gates: GateStats::default(),
            rewards: vec![tag],
            next_obs: vec![vec![tag]],
            next_routes: vec![],
            done: false,
        }
    }

    #[test]
    fn eviction_is_fifo() {
        let cap = 5;
        let n = 3;
        let mut buf = ReplayBuffer::new(cap);
        for i in 0..cap + n {
            buf.push(t(i as f64));
        }
        assert_eq!(buf.len(), cap);
        let tags: Vec<f64> = buf.iter().map(|x| x.rewards[0]).collect();
        for old in 0..n {
            assert!(!tags.contains(&(old as f64)));
        }
        for kept in n..cap + n {
            assert!(tags.contains(&(kept as f64)));
        }
    }
}

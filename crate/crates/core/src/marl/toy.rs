//! Two-agent rendezvous: a sanity task on which communication is load-bearing.
//!
//! Both agents live on `[-1, 1]` and choose their next position directly. A
//! target `t ~ U[-1, 1]` is redrawn every step and shown only to agent 0; agent
//! 1 observes its own position alone. Each step both receive
//! `-(|x_0 - t| + |x_1 - t|) / 2`. Without messages agent 1 can do no better
//! than the median of the target law, which costs [`NO_INFORMATION_COST`].

use rand::Rng;

use super::env::{EnvStep, MultiAgentEnv, NodePosition};
use crate::error::{Error, Result};
use crate::rng::SimRng;

pub const TOY_EPISODE_LEN: usize = 10;

/// `E[(|x_0 − t| + |0 − t|)/2]` with a perfect agent 0: `E|t| / 2 = 1/4`.
pub const NO_INFORMATION_COST: f64 = 0.25;

#[derive(Debug, Clone)]
pub struct ToyMeetEnv {
    pub positions: [f64; 2],
    pub target: f64,
    pub t: usize,
    pub episode_len: usize,
}

/// Fresh toy environment with random positions and target.
pub fn toy_meet_env(rng: &mut SimRng) -> ToyMeetEnv {
    let mut env = ToyMeetEnv {
        positions: [0.0; 2],
        target: 0.0,
        t: 0,
        episode_len: TOY_EPISODE_LEN,
    };
    env.reset(rng).expect("toy reset cannot fail");
    env
}

impl ToyMeetEnv {
    pub fn cost(&self) -> f64 {
        ((self.positions[0] - self.target).abs() + (self.positions[1] - self.target).abs()) / 2.0
    }
}

impl MultiAgentEnv for ToyMeetEnv {
    fn n_agents(&self) -> usize {
        2
    }

    fn obs_dim(&self) -> usize {
        2
    }

    fn action_dim(&self) -> usize {
        1
    }

    fn groups(&self) -> Vec<usize> {
        vec![0, 1]
    }

    fn episode_len(&self) -> usize {
        self.episode_len
    }

    fn reset(&mut self, rng: &mut SimRng) -> Result<()> {
        self.positions = [rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)];
        self.target = rng.random_range(-1.0..=1.0);
        self.t = 0;
        Ok(())
    }

    fn observe(&self) -> Vec<Vec<f64>> {
        vec![
            vec![self.positions[0], self.target],
            vec![self.positions[1], 0.0],
        ]
    }

    fn routes(&self) -> Vec<(usize, usize)> {
        vec![(1, 0), (0, 1)]
    }

    fn step(&mut self, actions: &[Vec<f64>], msg_count: usize, rng: &mut SimRng) -> Result<EnvStep> {
        if actions.len() != 2 || actions.iter().any(|a| a.len() != 1) {
            return Err(Error::invalid("toy env takes one scalar action per agent"));
        }
        for (p, a) in self.positions.iter_mut().zip(actions) {
            *p = a[0].clamp(-1.0, 1.0);
        }
        let reward = -self.cost();
        self.t += 1;
        self.target = rng.random_range(-1.0..=1.0);
        Ok(EnvStep {
            rewards: vec![reward; 2],
            sum_se: 0.0,
            ee: 0.0,
            msg_count,
        })
    }

    fn positions(&self) -> Vec<NodePosition> {
        vec![
            (0, "agent", self.positions[0], 0.0),
            (1, "agent", self.positions[1], 0.0),
        ]
    }
}

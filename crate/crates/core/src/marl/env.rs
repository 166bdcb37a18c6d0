//! The environment interface the trainer drives, and its cell-free adapter.

use crate::env::{DeviceKind, ScenarioConfig, Task, World};
use crate::error::Result;
use crate::graph::{build_graph, StructureKind};
use crate::rng::SimRng;

#[derive(Debug, Clone, PartialEq)]
pub struct EnvStep {
    pub rewards: Vec<f64>,
    pub sum_se: f64,
    pub ee: f64,
    pub msg_count: usize,
}

/// A node position for trajectory logs: `(node id, kind, x, y)`.
pub type NodePosition = (usize, &'static str, f64, f64);

pub trait MultiAgentEnv {
    fn n_agents(&self) -> usize;
    fn obs_dim(&self) -> usize;
    fn action_dim(&self) -> usize;
    /// Parameter-sharing group of each agent.
    fn groups(&self) -> Vec<usize>;
    fn n_groups(&self) -> usize {
        self.groups().iter().max().map_or(0, |g| g + 1)
    }
    fn episode_len(&self) -> usize;
    fn reset(&mut self, rng: &mut SimRng) -> Result<()>;
    fn observe(&self) -> Vec<Vec<f64>>;
    /// Directed message routes `(sender, receiver)` available this step.
    fn routes(&self) -> Vec<(usize, usize)>;
    fn step(&mut self, actions: &[Vec<f64>], msg_count: usize, rng: &mut SimRng) -> Result<EnvStep>;
    fn positions(&self) -> Vec<NodePosition> {
        Vec::new()
    }
}

/// Cell-free world plus the graph structure that defines who may talk.
#[derive(Debug, Clone)]
pub struct CellFreeEnv {
    pub scenario: ScenarioConfig,
    pub task: Task,
    pub structure: StructureKind,
    world: World,
    groups: Vec<usize>,
    routes: Vec<(usize, usize)>,
}

impl CellFreeEnv {
    pub fn new(scenario: ScenarioConfig, task: Task, structure: StructureKind, rng: &mut SimRng) -> Result<Self> {
        let world = World::reset(&scenario, task, rng)?;
        let mut kinds: Vec<DeviceKind> = world.aps().iter().map(|d| d.kind).collect();
        kinds.sort();
        kinds.dedup();
        let groups = world
            .aps()
            .iter()
            .map(|d| kinds.iter().position(|k| *k == d.kind).unwrap())
            .collect();
        let mut env = Self {
            scenario,
            task,
            structure,
            world,
            groups,
            routes: Vec::new(),
        };
        env.refresh_routes()?;
        Ok(env)
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    fn refresh_routes(&mut self) -> Result<()> {
        self.routes = build_graph(&self.world.devices, self.structure, &self.scenario)?.agent_routes();
        Ok(())
    }
}

impl MultiAgentEnv for CellFreeEnv {
    fn n_agents(&self) -> usize {
        self.world.n_agents()
    }

    fn obs_dim(&self) -> usize {
        self.world.obs_dim()
    }

    fn action_dim(&self) -> usize {
        self.world.action_dim()
    }

    fn groups(&self) -> Vec<usize> {
        self.groups.clone()
    }

    fn episode_len(&self) -> usize {
        self.scenario.episode_len
    }

    fn reset(&mut self, rng: &mut SimRng) -> Result<()> {
        self.world = World::reset(&self.scenario, self.task, rng)?;
        self.refresh_routes()
    }

    fn observe(&self) -> Vec<Vec<f64>> {
        self.world.observe_all()
    }

    fn routes(&self) -> Vec<(usize, usize)> {
        self.routes.clone()
    }

    fn step(&mut self, actions: &[Vec<f64>], msg_count: usize, rng: &mut SimRng) -> Result<EnvStep> {
        let out = self.world.step(actions, msg_count, rng)?;
        if self.task == Task::Mobility {
            self.refresh_routes()?;
        }
        Ok(EnvStep {
            rewards: out.reward_per_agent,
            sum_se: out.sum_se,
            ee: out.ee,
            msg_count,
        })
    }

    fn positions(&self) -> Vec<NodePosition> {
        self.world
            .devices
            .iter()
            .map(|d| (d.id, d.kind.as_str(), d.position.x, d.position.y))
            .collect()
    }
}

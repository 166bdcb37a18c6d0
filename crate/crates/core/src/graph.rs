//! Typed communication graphs over devices and neighbor sampling.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::index::sample;
use rand::Rng;

use crate::env::{DeviceKind, DeviceState, ScenarioConfig};
use crate::error::{Error, Result};
use crate::nn::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StructureKind {
    Bipartite,
    Heterogeneous,
    Hierarchical,
}

impl StructureKind {
    pub const ALL: [StructureKind; 3] = [
        StructureKind::Bipartite,
        StructureKind::Heterogeneous,
        StructureKind::Hierarchical,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StructureKind::Bipartite => "bipartite",
            StructureKind::Heterogeneous => "heterogeneous",
            StructureKind::Hierarchical => "hierarchical",
        }
    }
}

impl std::str::FromStr for StructureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bipartite" => Ok(StructureKind::Bipartite),
            "heterogeneous" => Ok(StructureKind::Heterogeneous),
            "hierarchical" => Ok(StructureKind::Hierarchical),
            other => Err(Error::invalid(format!(
                "unknown structure {other:?} (bipartite|heterogeneous|hierarchical)"
            ))),
        }
    }
}

/// Undirected link label; both directions of a link carry the same label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeKind {
    ApAp,
    ApUe,
    UeUe,
    ApHub,
}

impl EdgeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EdgeKind::ApAp => "AP-AP",
            EdgeKind::ApUe => "AP-UE",
            EdgeKind::UeUe => "UE-UE",
            EdgeKind::ApHub => "AP-HUB",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Device(DeviceKind),
    /// Virtual aggregation node above all APs.
    Hub,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub id: usize,
    pub kind: NodeKind,
    /// 0 for UEs, 1 for APs, 2 for the hub.
    pub layer: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommGraph {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    out_adj: Vec<Vec<usize>>,
}

impl CommGraph {
    /// Build from explicit parts, enforcing the graph invariants.
    pub fn new(nodes: Vec<Node>, mut edges: Vec<Edge>) -> Result<Self> {
        let v = nodes.len();
        if nodes.iter().enumerate().any(|(i, n)| n.id != i) {
            return Err(Error::invalid("node ids must be 0..V in order"));
        }
        edges.sort();
        edges.dedup();
        let mut out_adj = vec![Vec::new(); v];
        for e in &edges {
            if e.src == e.dst {
                return Err(Error::invalid(format!("self-edge at node {}", e.src)));
            }
            if e.src >= v || e.dst >= v {
                return Err(Error::invalid(format!(
                    "edge {}->{} references a missing node",
                    e.src, e.dst
                )));
            }
            out_adj[e.src].push(e.dst);
        }
        for adj in &mut out_adj {
            adj.sort_unstable();
            adj.dedup();
        }
        Ok(Self {
            nodes,
            edges,
            out_adj,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.out_adj[node]
    }

    pub fn has_edge(&self, src: usize, dst: usize) -> bool {
        self.out_adj.get(src).is_some_and(|a| a.binary_search(&dst).is_ok())
    }

    pub fn hub(&self) -> Option<usize> {
        self.nodes.iter().find(|n| n.kind == NodeKind::Hub).map(|n| n.id)
    }

    fn is_ap(&self, node: usize) -> bool {
        matches!(self.nodes[node].kind, NodeKind::Device(k) if k.is_ap())
    }

    /// Directed message routes `(sender, receiver)` between AP agents.
    ///
    /// `j → i` is a route when the graph links the two APs directly or through
    /// one relay node (a UE or the hub) adjacent to both. Agents are the AP nodes,
    /// which occupy ids `0..n_agents`. Sorted by receiver, then sender.
    pub fn agent_routes(&self) -> Vec<(usize, usize)> {
        let aps: Vec<usize> = (0..self.node_count()).filter(|&n| self.is_ap(n)).collect();
        let mut routes = Vec::new();
        for &i in &aps {
            for &j in &aps {
                if i == j {
                    continue;
                }
                let direct = self.has_edge(j, i);
                let relayed = || {
                    self.neighbors(j)
                        .iter()
                        .any(|&r| !self.is_ap(r) && self.has_edge(r, i))
                };
                if direct || relayed() {
                    routes.push((j, i));
                }
            }
        }
        routes.sort_by_key(|&(s, d)| (d, s));
        routes
    }

    /// One `src,dst,kind` line per directed edge.
    pub fn to_edge_list(&self) -> String {
        let mut s = String::new();
        for e in &self.edges {
            let _ = writeln!(s, "{},{},{}", e.src, e.dst, e.kind.as_str());
        }
        s
    }

    pub fn export_edge_list(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_edge_list()).map_err(|e| Error::io(path, e))
    }
}

fn layer_of(kind: NodeKind) -> usize {
    match kind {
        NodeKind::Device(DeviceKind::Ue) => 0,
        NodeKind::Device(_) => 1,
        NodeKind::Hub => 2,
    }
}

/// Build the communication graph of one step from device positions.
///
/// * bipartite: AP↔UE links within `radius_ap_ue_m`;
/// * heterogeneous: AP↔AP, AP↔UE and UE↔UE links, each within its own radius;
/// * hierarchical: AP↔UE links plus a virtual hub linked to every AP.
pub fn build_graph(devices: &[DeviceState], structure: StructureKind, cfg: &ScenarioConfig) -> Result<CommGraph> {
    if devices.is_empty() {
        return Err(Error::invalid("graph needs at least one device"));
    }
    let mut nodes: Vec<Node> = devices
        .iter()
        .enumerate()
        .map(|(i, d)| Node {
            id: i,
            kind: NodeKind::Device(d.kind),
            layer: layer_of(NodeKind::Device(d.kind)),
        })
        .collect();
    let mut edges = Vec::new();
    let mut link = |a: usize, b: usize, kind: EdgeKind| {
        edges.push(Edge { src: a, dst: b, kind });
        edges.push(Edge { src: b, dst: a, kind });
    };
    for a in 0..devices.len() {
        for b in a + 1..devices.len() {
            let (ka, kb) = (devices[a].kind, devices[b].kind);
            let (kind, radius) = match (ka.is_ap(), kb.is_ap()) {
                (true, true) => (EdgeKind::ApAp, cfg.radius_ap_ap_m),
                (false, false) => (EdgeKind::UeUe, cfg.radius_ue_ue_m),
                _ => (EdgeKind::ApUe, cfg.radius_ap_ue_m),
            };
            let allowed = match structure {
                StructureKind::Heterogeneous => true,
                StructureKind::Bipartite | StructureKind::Hierarchical => kind == EdgeKind::ApUe,
            };
            if allowed && devices[a].position.distance(&devices[b].position) <= radius {
                link(a, b, kind);
            }
        }
    }
    if structure == StructureKind::Hierarchical {
        let hub = devices.len();
        nodes.push(Node {
            id: hub,
            kind: NodeKind::Hub,
            layer: 2,
        });
        for (i, d) in devices.iter().enumerate() {
            if d.kind.is_ap() {
                link(i, hub, EdgeKind::ApHub);
            }
        }
    }
    CommGraph::new(nodes, edges)
}

/// Neighbor sampling without replacement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleSpec {
    pub k: usize,
}

impl SampleSpec {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("sample size k must be at least 1"));
        }
        Ok(Self { k })
    }
}

/// Uniformly choose `min(degree, k)` distinct neighbors of `node`.
pub fn sample_neighbors<R: Rng + ?Sized>(
    g: &CommGraph,
    node: usize,
    spec: SampleSpec,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if node >= g.node_count() {
        return Err(Error::invalid(format!("node {node} not in graph")));
    }
    let ns = g.neighbors(node);
    if ns.len() <= spec.k {
        return Ok(ns.to_vec());
    }
    Ok(sample(rng, ns.len(), spec.k).into_iter().map(|i| ns[i]).collect())
}

/// `D̃^{-1/2}(A + I)D̃^{-1/2}` over the listed nodes, with `A` the symmetrized
/// 0/1 adjacency restricted to them. Row/column order follows `subset`.
pub fn normalized_adjacency(g: &CommGraph, subset: &[usize]) -> Result<Matrix> {
    if subset.is_empty() {
        return Err(Error::invalid("normalized adjacency of an empty node set"));
    }
    if let Some(&bad) = subset.iter().find(|&&n| n >= g.node_count()) {
        return Err(Error::invalid(format!("node {bad} not in graph")));
    }
    let n = subset.len();
    let mut a = Matrix::identity(n);
    for (i, &u) in subset.iter().enumerate() {
        for (j, &v) in subset.iter().enumerate() {
            if i != j && (g.has_edge(u, v) || g.has_edge(v, u)) {
                a[(i, j)] = 1.0;
            }
        }
    }
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|i| 1.0 / a.row(i).iter().sum::<f64>().sqrt())
        .collect();
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] *= inv_sqrt[i] * inv_sqrt[j];
        }
    }
    Ok(a)
}

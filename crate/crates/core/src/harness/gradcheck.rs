//! Finite-difference verification of every differentiable component.

use rand::Rng;

use crate::comm::{CommMode, GatePolicy, Phase};
use crate::error::Result;
use crate::marl::{joint_input, Actor, ActorConfig, Critic};
use crate::nn::{
    gat_backward, gat_forward_gated, gcn_backward, gcn_forward, grad_check, sage_backward, sage_forward, Activation,
    Dense, GatParams, GcnParams, GradCheckConfig, Matrix, Params, SageParams,
};
use crate::rng::{stream, purpose, SimRng};

/// Worst relative error a component may show.
pub const GRADCHECK_TOLERANCE: f64 = 1e-4;

/// A scalar loss over a flat vector together with its analytic gradient at `point`.
pub struct GradProblem {
    pub point: Vec<f64>,
    pub analytic: Vec<f64>,
    pub loss: Box<dyn Fn(&[f64]) -> f64>,
}

pub struct GradComponent {
    pub name: &'static str,
    pub build: fn(&mut SimRng) -> Result<GradProblem>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentReport {
    pub name: &'static str,
    pub max_rel_error: f64,
    pub worst_index: usize,
    pub passed: bool,
}

fn random_matrix(rows: usize, cols: usize, rng: &mut SimRng) -> Matrix {
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect())
        .expect("sizes agree")
}

fn random_vec(n: usize, rng: &mut SimRng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn weighted_sum(m: &Matrix, c: &Matrix) -> f64 {
    m.as_slice().iter().zip(c.as_slice()).map(|(a, b)| a * b).sum()
}

/// Append `h` to the flat parameters so inputs are checked as well.
fn with_input<P: Params>(params: &P, h: &Matrix) -> Vec<f64> {
    let mut flat = params.to_flat();
    flat.extend_from_slice(h.as_slice());
    flat
}

fn split_input<P: Params + Clone>(template: &P, h: &Matrix, flat: &[f64]) -> (P, Matrix) {
    let n = template.num_params();
    let mut p = template.clone();
    p.set_flat(&flat[..n]);
    let h = Matrix::from_vec(h.rows(), h.cols(), flat[n..].to_vec()).expect("sizes agree");
    (p, h)
}

fn dense_problem(rng: &mut SimRng) -> Result<GradProblem> {
    let layer = Dense::new(5, 4, Activation::Tanh, rng);
    let x = random_vec(5, rng);
    let c = random_vec(4, rng);
    let y = layer.forward(&x)?;
    let mut grads = layer.params.clone();
    grads.zero();
    let gx = layer.backward(&x, &y, &c, &mut grads)?;
    let mut point = layer.params.to_flat();
    point.extend_from_slice(&x);
    let mut analytic = grads.to_flat();
    analytic.extend(gx);
    let n = layer.params.num_params();
    Ok(GradProblem {
        point,
        analytic,
        loss: Box::new(move |flat| {
            let mut l = layer.clone();
            l.params.set_flat(&flat[..n]);
            l.forward(&flat[n..])
                .map_or(f64::NAN, |y| y.iter().zip(&c).map(|(a, b)| a * b).sum())
        }),
    })
}

fn random_adjacency(v: usize, rng: &mut SimRng) -> Vec<Vec<usize>> {
    let mut nbrs = vec![Vec::new(); v];
    // node v-1 is left isolated
    for i in 0..v - 1 {
        for j in i + 1..v - 1 {
            if rng.random_bool(0.5) {
                nbrs[i].push(j);
                nbrs[j].push(i);
            }
        }
    }
    nbrs
}

fn gcn_problem(rng: &mut SimRng) -> Result<GradProblem> {
    let v = 5;
    let nbrs = random_adjacency(v, rng);
    let deg: Vec<f64> = nbrs.iter().map(|n| n.len() as f64 + 1.0).collect();
    let mut a_hat = Matrix::zeros(v, v);
    for i in 0..v {
        a_hat.row_mut(i)[i] = 1.0 / deg[i];
        for &j in &nbrs[i] {
            a_hat.row_mut(i)[j] = 1.0 / (deg[i] * deg[j]).sqrt();
        }
    }
    let params = GcnParams::init(3, 4, rng);
    let h = random_matrix(v, 3, rng);
    let c = random_matrix(v, 4, rng);
    let act = Activation::Tanh;
    let out = gcn_forward(&h, &a_hat, &params, act)?;
    let (gh, gp) = gcn_backward(&h, &a_hat, &params, act, &out, &c)?;
    Ok(GradProblem {
        point: with_input(&params, &h),
        analytic: with_input(&gp, &gh),
        loss: Box::new(move |flat| {
            let (p, h) = split_input(&params, &h, flat);
            gcn_forward(&h, &a_hat, &p, act).map_or(f64::NAN, |o| weighted_sum(&o, &c))
        }),
    })
}

fn sage_problem(rng: &mut SimRng) -> Result<GradProblem> {
    let v = 6;
    let nbrs = random_adjacency(v, rng);
    // a fixed neighbor sample of at most two per node
    let sampled: Vec<Vec<usize>> = nbrs.iter().map(|n| n.iter().copied().take(2).collect()).collect();
    let params = SageParams::init(3, 4, rng);
    let h = random_matrix(v, 3, rng);
    let c = random_matrix(v, 4, rng);
    let act = Activation::Tanh;
    let fwd = sage_forward(&h, &sampled, &params, act)?;
    let (gh, gp) = sage_backward(&h, &sampled, &params, act, &fwd, &c)?;
    Ok(GradProblem {
        point: with_input(&params, &h),
        analytic: with_input(&gp, &gh),
        loss: Box::new(move |flat| {
            let (p, h) = split_input(&params, &h, flat);
            sage_forward(&h, &sampled, &p, act).map_or(f64::NAN, |o| weighted_sum(&o.out, &c))
        }),
    })
}

/// Random gated in-edge lists over `v` nodes, gates in (0.2, 1].
pub fn random_gated_edges(v: usize, rng: &mut SimRng) -> Vec<Vec<(usize, f64)>> {
    random_adjacency(v, rng)
        .into_iter()
        .map(|ns| ns.into_iter().map(|j| (j, rng.random_range(0.2..=1.0))).collect())
        .collect()
}

fn gat_problem(rng: &mut SimRng) -> Result<GradProblem> {
    let v = 5;
    let edges = random_gated_edges(v, rng);
    let params = GatParams::init(3, 4, rng);
    let h = random_matrix(v, 3, rng);
    let c = random_matrix(v, 4, rng);
    let act = Activation::Tanh;
    let fwd = gat_forward_gated(&h, &edges, &params, act)?;
    let grads = gat_backward(&h, &params, act, &fwd, &c)?;
    Ok(GradProblem {
        point: with_input(&params, &h),
        analytic: with_input(&grads.params, &grads.h),
        loss: Box::new(move |flat| {
            let (p, h) = split_input(&params, &h, flat);
            gat_forward_gated(&h, &edges, &p, act).map_or(f64::NAN, |o| weighted_sum(&o.out, &c))
        }),
    })
}

/// Three agents in two groups on a complete route set, learned gates relaxed
/// to their probabilities, loss `Σ c·a + λ·mean p`.
fn actor_problem(rng: &mut SimRng) -> Result<GradProblem> {
    let mut cfg = ActorConfig::new(4, 2, 2);
    cfg.head_hidden = vec![6];
    cfg.protocol.encoder_hidden = vec![6];
    cfg.protocol.embed_dim = 5;
    cfg.protocol.attn_dim = 3;
    cfg.protocol.msg_dim = 3;
    cfg.protocol.integrate_dim = 4;
    let actor = Actor::new(&cfg, rng);
    let groups = vec![0, 1, 0];
    let routes: Vec<(usize, usize)> = (0..3)
        .flat_map(|d| (0..3).filter(move |&s| s != d).map(move |s| (s, d)))
        .collect();
    let obs: Vec<Vec<f64>> = (0..3).map(|_| random_vec(4, rng)).collect();
    let c: Vec<Vec<f64>> = (0..3).map(|_| random_vec(2, rng)).collect();
    let lambda = 0.3;
    let policy = GatePolicy::new(CommMode::Learned, Phase::Relaxed);
    let mut scratch = rng.clone();
    let round = actor.forward(&obs, &groups, &routes, policy, &mut scratch)?;
    let mut grads = actor.zeros_like();
    let d_p = vec![lambda / routes.len() as f64; routes.len()];
    actor.backward(&round, &groups, &c, &d_p, &mut grads)?;
    Ok(GradProblem {
        point: actor.to_flat(),
        analytic: grads.to_flat(),
        loss: Box::new(move |flat| {
            let mut a = actor.clone();
            a.set_flat(flat);
            let mut r = scratch.clone();
            match a.forward(&obs, &groups, &routes, policy, &mut r) {
                Ok(round) => {
                    let acts = round.actions();
                    let dot: f64 = acts.iter().flatten().zip(c.iter().flatten()).map(|(x, y)| x * y).sum();
                    dot + lambda * round.comm.gates.mean_p()
                }
                Err(_) => f64::NAN,
            }
        }),
    })
}

fn critic_problem(rng: &mut SimRng) -> Result<GradProblem> {
    let obs: Vec<Vec<f64>> = (0..3).map(|_| random_vec(4, rng)).collect();
    let actions: Vec<Vec<f64>> = (0..3).map(|_| random_vec(2, rng)).collect();
    let input = joint_input(&obs, &actions);
    let critic = Critic::new(input.len(), &[8, 8], rng);
    let trace = critic.trace(&input)?;
    let mut grads = critic.zeros_like();
    let d_in = critic.backward(&trace, 1.0, &mut grads)?;
    let mut point = critic.to_flat();
    point.extend_from_slice(&input);
    let mut analytic = grads.to_flat();
    analytic.extend(d_in);
    let n = critic.num_params();
    Ok(GradProblem {
        point,
        analytic,
        loss: Box::new(move |flat| {
            let mut c = critic.clone();
            c.set_flat(&flat[..n]);
            c.q(&flat[n..]).unwrap_or(f64::NAN)
        }),
    })
}

/// Every component the suite checks, in report order.
pub fn registered_components() -> Vec<GradComponent> {
    vec![
        GradComponent { name: "dense", build: dense_problem },
        GradComponent { name: "gcn", build: gcn_problem },
        GradComponent { name: "sage", build: sage_problem },
        GradComponent { name: "gat", build: gat_problem },
        GradComponent { name: "actor", build: actor_problem },
        GradComponent { name: "critic", build: critic_problem },
    ]
}

/// Check each component with its own seeded stream; one report per component.
pub fn run_gradcheck(components: &[GradComponent], seed: u64) -> Result<Vec<ComponentReport>> {
    let cfg = GradCheckConfig::default();
    components
        .iter()
        .enumerate()
        .map(|(i, comp)| {
            let mut rng = stream(seed.wrapping_add(i as u64), purpose::INIT);
            let problem = (comp.build)(&mut rng)?;
            let report = grad_check(&*problem.loss, &problem.point, &problem.analytic, &cfg, &mut rng)?;
            Ok(ComponentReport {
                name: comp.name,
                max_rel_error: report.max_rel_error,
                worst_index: report.worst_index,
                passed: report.max_rel_error < GRADCHECK_TOLERANCE,
            })
        })
        .collect()
}

pub fn gradcheck_suite(seed: u64) -> Result<Vec<ComponentReport>> {
    run_gradcheck(&registered_components(), seed)
}

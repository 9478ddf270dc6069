//! Cross-checks between the two-variable recursions and their one-line
//! forms. The one-line forms are written out here with dense matrices and
//! share nothing with the steppers beyond the problem's gradients.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::{AlgoConfig, AlgorithmId, Beta, Env, Solver};
use crate::error::Result;
use crate::oracles::{exact_scaled_stack, Oracle, OracleSpec};
use crate::problems::{Problem, QuadSample};
use crate::topology::{explicit_mixing, Graph, GraphKind, Topology};

pub const EQUIVALENCE_AGENTS: usize = 8;
pub const EQUIVALENCE_DIM: usize = 3;
pub const EQUIVALENCE_ITERS: usize = 50;
pub const EQUIVALENCE_TOL: f64 = 1e-10;

/// Largest entrywise gap between paired trajectories over all iterations.
#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceReport {
    /// Prox-GPDA against its one-line recursion.
    pub prox_gpda_one_line: f64,
    /// EXTRA against Prox-GPDA with `Υ + 2cD = α⁻¹I`, `W = I - 2cαL`.
    pub extra_prox_gpda: f64,
    /// Gradient tracking against its one-line recursion.
    pub gt_one_line: f64,
    pub tolerance: f64,
}

impl EquivalenceReport {
    pub fn pass(&self) -> bool {
        [self.prox_gpda_one_line, self.extra_prox_gpda, self.gt_one_line]
            .iter()
            .all(|&d| d <= self.tolerance)
    }
}

/// Path `0 - 1 - … - (n-1)` plus the chord `(0, n/2)`.
pub fn path_with_chord(n: usize) -> Result<Graph> {
    let mut edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
    edges.push((0, n / 2));
    Graph::from_edges(n, &edges, GraphKind::Custom)
}

fn random_instance(seed: u64) -> Result<(Problem, Graph, DMatrix<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..EQUIVALENCE_AGENTS)
        .map(|_| {
            let a = rng.random_range(-0.3..1.5);
            let b: Vec<f64> = (0..EQUIVALENCE_DIM).map(|_| rng.sample(StandardNormal)).collect();
            vec![QuadSample::new(a, &b)]
        })
        .collect();
    let problem = Problem::quadratic(samples)?;
    let graph = path_with_chord(EQUIVALENCE_AGENTS)?;
    let theta0 = DMatrix::from_fn(EQUIVALENCE_AGENTS, EQUIVALENCE_DIM, |_, _| rng.sample(StandardNormal));
    Ok((problem, graph, theta0))
}

fn run(config: &AlgoConfig, problem: &Problem, topology: &Topology, theta0: &DMatrix<f64>) -> Result<Vec<DMatrix<f64>>> {
    let mut oracle = Oracle::new(OracleSpec::batch(), problem, 0)?;
    let mut env = Env { problem, topology, oracle: &mut oracle };
    let mut solver = Solver::new(config, &mut env, theta0.clone(), EQUIVALENCE_ITERS)?;
    let mut out = vec![theta0.clone()];
    for _ in 0..EQUIVALENCE_ITERS {
        solver.step(&mut env)?;
        out.push(solver.theta().clone());
    }
    Ok(out)
}

fn max_gap(a: &[DMatrix<f64>], b: &[DMatrix<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).amax()).fold(0.0, f64::max)
}

/// `θ¹ = θ⁰ - K⁻¹(∇f⁰ + p⁰ + cLθ⁰)`, then
/// `θ^{t+1} = (I - cK⁻¹L)(2θ^t - θ^{t-1}) - K⁻¹(∇f^t - ∇f^{t-1})`.
fn prox_gpda_one_line(
    problem: &Problem,
    lap: &DMatrix<f64>,
    k_diag: &DVector<f64>,
    c: f64,
    p0: &DMatrix<f64>,
    theta0: &DMatrix<f64>,
) -> Vec<DMatrix<f64>> {
    let n = lap.nrows();
    let k_inv = DMatrix::from_diagonal(&k_diag.map(|k| 1.0 / k));
    let m = DMatrix::identity(n, n) - &k_inv * lap * c;
    let g0 = exact_scaled_stack(problem, theta0);
    let theta1 = theta0 - &k_inv * (&g0 + p0 + lap * theta0 * c);
    let mut out = vec![theta0.clone(), theta1];
    let mut g_prev = g0;
    for t in 1..EQUIVALENCE_ITERS {
        let g = exact_scaled_stack(problem, &out[t]);
        let next = &m * (&out[t] * 2.0 - &out[t - 1]) - &k_inv * (&g - &g_prev);
        out.push(next);
        g_prev = g;
    }
    out
}

/// `θ¹ = Wθ⁰ - α∇f⁰`, then
/// `θ^{t+1} = 2Wθ^t - W²θ^{t-1} - α(∇f^t - ∇f^{t-1})`.
fn gt_one_line(problem: &Problem, w: &DMatrix<f64>, alpha: f64, theta0: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
    let w2 = w * w;
    let g0 = exact_scaled_stack(problem, theta0);
    let theta1 = w * theta0 - &g0 * alpha;
    let mut out = vec![theta0.clone(), theta1];
    let mut g_prev = g0;
    for t in 1..EQUIVALENCE_ITERS {
        let g = exact_scaled_stack(problem, &out[t]);
        let next = w * &out[t] * 2.0 - &w2 * &out[t - 1] - (&g - &g_prev) * alpha;
        out.push(next);
        g_prev = g;
    }
    out
}

/// Runs the three equivalence pairs on a seeded random quadratic instance
/// (8 agents, 3 coordinates, path plus one chord, 50 iterations).
pub fn verify_equivalences(seed: u64) -> Result<EquivalenceReport> {
    let (problem, graph, theta0) = random_instance(seed)?;
    let n = graph.n();
    let lap = graph.laplacian();
    let inc = graph.incidence();
    let degrees = DVector::from_iterator(n, graph.degrees().iter().map(|&d| d as f64));

    // Prox-GPDA with non-uniform β and random initial duals.
    let (c, beta) = (0.6, 1.3);
    let topo = Topology::with_max_degree(graph.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED);
    let mu0 = DMatrix::from_fn(graph.num_edges(), EQUIVALENCE_DIM, |_, _| rng.sample::<f64, _>(StandardNormal));
    let betas: Vec<f64> = (0..n).map(|i| beta + 0.1 * i as f64).collect();
    let mut cfg = AlgoConfig::new(AlgorithmId::ProxGpda);
    cfg.c = Some(c);
    cfg.beta = Some(Beta::PerAgent(betas.clone()));
    cfg.initial_duals = Some(mu0.row_iter().map(|r| r.iter().copied().collect()).collect());
    let two_var = run(&cfg, &problem, &topo, &theta0)?;
    let k_diag = DVector::from_iterator(n, (0..n).map(|i| betas[i] + 2.0 * c * degrees[i]));
    let one_line = prox_gpda_one_line(&problem, &lap, &k_diag, c, &(inc.transpose() * &mu0), &theta0);
    let prox_gpda_one_line = max_gap(&two_var, &one_line);

    // EXTRA with W = I - 2cαL against Prox-GPDA with β_i = 1/α - 2c d_i and
    // μ⁰ = cAθ⁰.
    let (c, alpha) = (1.0, 0.1);
    let w = DMatrix::identity(n, n) - &lap * (2.0 * c * alpha);
    let topo_w = Topology::new(graph.clone(), explicit_mixing(&graph, w.clone())?)?;
    let extra = run(&AlgoConfig::new(AlgorithmId::Extra).with_alpha(alpha), &problem, &topo_w, &theta0)?;
    let mut cfg = AlgoConfig::new(AlgorithmId::ProxGpda);
    cfg.c = Some(c);
    cfg.beta = Some(Beta::PerAgent((0..n).map(|i| 1.0 / alpha - 2.0 * c * degrees[i]).collect()));
    let mu0 = &inc * &theta0 * c;
    cfg.initial_duals = Some(mu0.row_iter().map(|r| r.iter().copied().collect()).collect());
    let pd = run(&cfg, &problem, &topo_w, &theta0)?;
    let extra_prox_gpda = max_gap(&extra, &pd);

    // Gradient tracking on the max-degree weights.
    let alpha = 0.2;
    let gt = run(&AlgoConfig::new(AlgorithmId::Gt).with_alpha(alpha), &problem, &topo, &theta0)?;
    let one_line = gt_one_line(&problem, topo.mixing().entries(), alpha, &theta0);
    let gt_one_line = max_gap(&gt, &one_line);

    Ok(EquivalenceReport { prox_gpda_one_line, extra_prox_gpda, gt_one_line, tolerance: EQUIVALENCE_TOL })
}

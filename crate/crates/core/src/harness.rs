//! Experiment configs, replicate runs, verification suites and sweeps.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::accounting::Counters;
use crate::algorithms::{verify_equivalences, AlgoConfig, AlgorithmId, Env, Solver, StepSize};
use crate::error::{Error, Result};
use crate::metrics::{save_csv, Recorder, RunRecord, Status, DIVERGENCE_THRESHOLD};
use crate::oracles::{covariance_trace, unbiasedness_check, Oracle, OracleSpec};
use crate::problems::{
    example3, example4, generate_synthetic, load_labeled_csv, FamilyKind, Heterogeneity, Problem, SyntheticSpec,
    EXAMPLE4_SHIFTS,
};
use crate::topology::{build_graph, explicit_mixing, lazy_mixing, GraphSpec, Topology};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "DECOPT_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "runs";
pub const STOCHASTIC_REPLICATES: usize = 5;

pub fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum ProblemSpec {
    Synthetic(SyntheticSpec),
    /// `label,feature_1..feature_d,agent` rows.
    Csv {
        family: FamilyKind,
        path: PathBuf,
        #[serde(default = "default_lambda")]
        lambda: f64,
        #[serde(default = "default_rho")]
        rho: f64,
        #[serde(default = "default_hidden")]
        hidden: Vec<usize>,
    },
    /// Two-agent instance where DGD diverges; carries its own graph.
    Example3,
    /// Three-node instance where D² diverges; carries its own graph.
    Example4 {
        #[serde(default = "default_shifts")]
        shifts: [f64; 3],
    },
}

fn default_lambda() -> f64 {
    0.01
}
fn default_rho() -> f64 {
    1.0
}
fn default_hidden() -> Vec<usize> {
    vec![16, 8]
}
fn default_shifts() -> [f64; 3] {
    EXAMPLE4_SHIFTS
}

/// Initial stack `θ⁰`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitSpec {
    Zeros,
    Constant { value: f64 },
    /// Gaussian entries scaled by `scale`; with `consensual` every agent
    /// starts from the same draw.
    Gaussian {
        scale: f64,
        #[serde(default = "yes")]
        consensual: bool,
    },
    /// One row per agent.
    Rows { values: Vec<Vec<f64>> },
}

fn yes() -> bool {
    true
}

impl Default for InitSpec {
    fn default() -> Self {
        InitSpec::Gaussian { scale: 0.1, consensual: true }
    }
}

impl InitSpec {
    pub fn build(&self, n: usize, d: usize, seed: u64) -> Result<DMatrix<f64>> {
        Ok(match self {
            InitSpec::Zeros => DMatrix::zeros(n, d),
            InitSpec::Constant { value } => DMatrix::from_element(n, d, *value),
            InitSpec::Gaussian { scale, consensual } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                if *consensual {
                    let row: Vec<f64> = (0..d).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect();
                    DMatrix::from_fn(n, d, |_, k| row[k])
                } else {
                    DMatrix::from_fn(n, d, |_, _| scale * rng.sample::<f64, _>(StandardNormal))
                }
            }
            InitSpec::Rows { values } => {
                if values.len() != n || values.iter().any(|r| r.len() != d) {
                    return Err(Error::Config(format!("init rows must be {n}x{d}")));
                }
                DMatrix::from_fn(n, d, |i, k| values[i][k])
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixingRule {
    MaxDegree,
    /// `(I + W)/2` on the max-degree weights.
    Lazy,
}

/// `"max_degree"`, `"lazy"` or explicit rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MixingChoice {
    Rule(MixingRule),
    Explicit(Vec<Vec<f64>>),
}

/// One experiment: a problem on a graph, an oracle and an algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    /// Required unless the problem carries its own graph.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphSpec>,
    /// Max-degree weights when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mixing: Option<MixingChoice>,
    #[serde(default)]
    pub oracle: OracleSpec,
    #[serde(flatten)]
    pub algo: AlgoConfig,
    pub iters: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_eps: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    /// Defaults to 5 for stochastic oracles and 1 otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicates: Option<usize>,
    #[serde(default = "one")]
    pub record_every: usize,
    #[serde(default = "default_threshold")]
    pub divergence_threshold: f64,
    #[serde(default)]
    pub init: InitSpec,
    /// The run is a counterexample; divergence is the expected outcome.
    #[serde(default)]
    pub expect_divergence: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

fn one() -> usize {
    1
}
fn default_threshold() -> f64 {
    DIVERGENCE_THRESHOLD
}

impl ExperimentConfig {
    pub fn new(problem: ProblemSpec, graph: Option<GraphSpec>, algo: AlgoConfig, iters: usize) -> ExperimentConfig {
        ExperimentConfig {
            problem,
            graph,
            mixing: None,
            oracle: OracleSpec::batch(),
            algo,
            iters,
            target_eps: None,
            seed: 0,
            replicates: None,
            record_every: 1,
            divergence_threshold: DIVERGENCE_THRESHOLD,
            init: InitSpec::default(),
            expect_divergence: false,
            output: None,
        }
    }

    pub fn from_json(text: &str) -> Result<ExperimentConfig> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
        ExperimentConfig::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn replicate_count(&self) -> usize {
        self.replicates
            .unwrap_or(if self.oracle.is_stochastic() { STOCHASTIC_REPLICATES } else { 1 })
            .max(1)
    }

    /// Builds the problem and its network.
    pub fn instantiate(&self) -> Result<(Problem, Topology)> {
        let (problem, topology) = match &self.problem {
            ProblemSpec::Example3 => example3(),
            ProblemSpec::Example4 { shifts } => example4(*shifts),
            ProblemSpec::Synthetic(spec) => (generate_synthetic(spec)?, self.topology()?),
            ProblemSpec::Csv { family, path, lambda, rho, hidden } => {
                let data = load_labeled_csv(path, None)?;
                let problem = match family {
                    FamilyKind::NcvxLogistic => Problem::ncvx_logistic(data, *lambda, *rho)?,
                    FamilyKind::TinyMlp => Problem::tiny_mlp(data, hidden)?,
                    FamilyKind::Quadratic => {
                        return Err(Error::Config("CSV data supports the logistic and MLP families".into()))
                    }
                };
                (problem, self.topology()?)
            }
        };
        let topology = match &self.mixing {
            None | Some(MixingChoice::Rule(MixingRule::MaxDegree)) => topology,
            Some(MixingChoice::Rule(MixingRule::Lazy)) => {
                let w = lazy_mixing(topology.graph());
                Topology::new(topology.graph().clone(), w)?
            }
            Some(MixingChoice::Explicit(rows)) => {
                let n = topology.n();
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(Error::Config(format!("mixing must be {n}x{n}")));
                }
                let w = explicit_mixing(topology.graph(), DMatrix::from_fn(n, n, |i, j| rows[i][j]))?;
                Topology::new(topology.graph().clone(), w)?
            }
        };
        if topology.n() != problem.n() {
            return Err(Error::Config(format!(
                "graph has {} nodes but the problem has {} agents",
                topology.n(),
                problem.n()
            )));
        }
        Ok((problem, topology))
    }

    fn topology(&self) -> Result<Topology> {
        let spec = self.graph.as_ref().ok_or_else(|| Error::Config("missing graph".into()))?;
        Ok(Topology::with_max_degree(build_graph(spec)?))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunResult {
    pub replicate: usize,
    pub seed: u64,
    pub status: Status,
    pub iterations: usize,
    pub final_gap: f64,
    /// Last finite gap; differs from `final_gap` after divergence.
    pub last_finite_gap: Option<f64>,
    pub counters: Counters,
    /// Stacked-gradient Lipschitz estimate at `θ⁰`.
    pub lipschitz: f64,
    /// Step size at the first iteration.
    pub alpha0: f64,
    pub chebyshev_order: usize,
    pub inner_residual_warning: bool,
    #[serde(skip)]
    pub records: Vec<RunRecord>,
    #[serde(skip)]
    pub theta: DMatrix<f64>,
}

impl RunResult {
    /// First record with `gap <= eps`.
    pub fn first_below(&self, eps: f64) -> Option<&RunRecord> {
        self.records.iter().find(|r| r.gap <= eps)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub algorithm: AlgorithmId,
    pub replicates: usize,
    pub median_final_gap: f64,
    pub diverged: usize,
    pub converged: usize,
    pub expect_divergence: bool,
    pub unexpected_divergence: bool,
    pub runs: Vec<RunResult>,
}

fn median(mut xs: Vec<f64>) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.sort_by(f64::total_cmp);
    let k = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[k]
    } else {
        0.5 * (xs[k - 1] + xs[k])
    }
}

/// One replicate on an already-built instance. Oracle streams and the
/// initial point are seeded with `seed`.
pub fn run_single(
    config: &ExperimentConfig,
    problem: &Problem,
    topology: &Topology,
    replicate: usize,
    seed: u64,
) -> Result<RunResult> {
    config.oracle.validate(problem)?;
    if config.record_every == 0 {
        return Err(Error::Config("record_every must be at least 1".into()));
    }
    let mut oracle = Oracle::new(config.oracle, problem, seed)?;
    let mut env = Env { problem, topology, oracle: &mut oracle };
    let theta0 = config.init.build(problem.n(), problem.dim(), seed)?;
    let mut solver = Solver::new(&config.algo, &mut env, theta0, config.iters)?;
    let mut recorder = Recorder::new(problem.total_samples(), config.target_eps, config.divergence_threshold);

    let mut status = recorder.record(problem, 0, solver.counters(), solver.theta())?;
    let mut t = 0;
    while !status.is_terminal() && t < config.iters {
        match solver.step(&mut env) {
            Ok(()) => {}
            Err(Error::NonFinite { .. } | Error::NonFiniteGradient { .. }) => {
                recorder.mark_diverged();
                status = Status::Diverged;
                break;
            }
            Err(e) => return Err(e),
        }
        t += 1;
        if t % config.record_every == 0 || t == config.iters {
            status = recorder.record(problem, t, solver.counters(), solver.theta())?;
        }
    }
    if !status.is_terminal() {
        status = Status::MaxIters;
        recorder.finish(status);
    }
    let last_finite_gap = recorder.last_finite_gap();
    let records = recorder.into_records();
    let final_gap = records.last().map_or(f64::NAN, |r| r.gap);
    Ok(RunResult {
        replicate,
        seed,
        status,
        iterations: t,
        final_gap,
        last_finite_gap,
        counters: solver.counters(),
        lipschitz: solver.params().lipschitz,
        alpha0: solver.params().stepsize.at(0),
        chebyshev_order: solver.params().q,
        inner_residual_warning: solver.state().inner_warning,
        records,
        theta: solver.theta().clone(),
    })
}

/// Runs every replicate (in parallel) and summarizes them.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Summary> {
    let (problem, topology) = config.instantiate()?;
    let reps = config.replicate_count();
    let runs = (0..reps)
        .into_par_iter()
        .map(|r| run_single(config, &problem, &topology, r, config.seed.wrapping_add(r as u64)))
        .collect::<Result<Vec<_>>>()?;
    let diverged = runs.iter().filter(|r| r.status == Status::Diverged).count();
    let converged = runs.iter().filter(|r| r.status == Status::Converged).count();
    Ok(Summary {
        algorithm: config.algo.algorithm,
        replicates: reps,
        median_final_gap: median(runs.iter().map(|r| r.final_gap).collect()),
        diverged,
        converged,
        expect_divergence: config.expect_divergence,
        unexpected_divergence: diverged > 0 && !config.expect_divergence,
        runs,
    })
}

/// Writes `<algorithm>_r<k>.csv` per replicate and `summary.json` into `dir`.
pub fn write_outputs(summary: &Summary, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for run in &summary.runs {
        save_csv(&run.records, dir.join(format!("{}_r{}.csv", summary.algorithm.name(), run.replicate)))?;
    }
    std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(summary)?)?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, pass: bool, detail: String) -> Check {
        Check { name: name.into(), pass, detail }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Equivalence,
    Counterexamples,
    Gradients,
    Oracles,
    Topology,
    All,
}

impl Suite {
    pub fn parse(s: &str) -> Result<Suite> {
        serde_json::from_value(serde_json::Value::String(s.into()))
            .map_err(|_| Error::Config(format!("unknown suite {s:?}")))
    }
}

pub fn verify(suite: Suite) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let all = suite == Suite::All;
    if all || suite == Suite::Equivalence {
        checks.extend(verify_equivalence()?);
    }
    if all || suite == Suite::Counterexamples {
        checks.extend(verify_counterexamples()?);
    }
    if all || suite == Suite::Gradients {
        checks.extend(verify_gradients()?);
    }
    if all || suite == Suite::Oracles {
        checks.extend(verify_oracles()?);
    }
    if all || suite == Suite::Topology {
        checks.extend(verify_topology()?);
    }
    Ok(checks)
}

fn verify_equivalence() -> Result<Vec<Check>> {
    (0..3)
        .map(|seed| {
            let r = verify_equivalences(seed)?;
            Ok(Check::new(
                &format!("equivalence seed {seed}"),
                r.pass(),
                format!(
                    "prox-gpda one-line {:.2e}, extra/prox-gpda {:.2e}, gt one-line {:.2e}",
                    r.prox_gpda_one_line, r.extra_prox_gpda, r.gt_one_line
                ),
            ))
        })
        .collect()
}

/// DGD step size that reproduces the unscaled map `θ ↦ Wθ - γ∇f(θ)` on the
/// two-agent instance (the oracle returns `∇f_i / n`).
pub fn example3_dgd_alpha(gamma: f64) -> f64 {
    2.0 * gamma
}

/// `M(γ) = W - γ diag(1, -1)`.
pub fn example3_map(gamma: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[0.5 - gamma, 0.5, 0.5, 0.5 + gamma])
}

fn run_example(problem: ProblemSpec, algo: AlgoConfig, iters: usize, init: InitSpec, eps: Option<f64>) -> Result<RunResult> {
    let mut cfg = ExperimentConfig::new(problem, None, algo, iters);
    cfg.init = init;
    cfg.target_eps = eps;
    let (p, t) = cfg.instantiate()?;
    run_single(&cfg, &p, &t, 0, 0)
}

fn verify_counterexamples() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let init = InitSpec::Rows { values: vec![vec![1.0], vec![1.0]] };
    for gamma in [1.0, 0.1, 0.01] {
        let rho = example3_map(gamma).symmetric_eigenvalues().amax();
        checks.push(Check::new(
            &format!("example 3 spectral radius gamma={gamma}"),
            rho > 1.0,
            format!("rho(M) = {rho:.8}"),
        ));
        // The growth rate is 1 + O(γ²); give small γ a long enough horizon.
        let iters = if gamma < 0.05 { 200_000 } else { 10_000 };
        let algo = AlgoConfig::new(AlgorithmId::Dgd).with_alpha(example3_dgd_alpha(gamma));
        let run = run_example(ProblemSpec::Example3, algo, iters, init.clone(), None)?;
        checks.push(Check::new(
            &format!("example 3 dgd diverges gamma={gamma}"),
            run.status == Status::Diverged,
            format!("{:?} after {} iterations", run.status, run.iterations),
        ));
    }
    // (1, 1) is already stationary for these methods.
    let start = InitSpec::Rows { values: vec![vec![1.0], vec![-0.5]] };
    for algo in [AlgorithmId::ProxGpda, AlgorithmId::Extra, AlgorithmId::Gt] {
        let run = run_example(ProblemSpec::Example3, AlgoConfig::new(algo), 10_000, start.clone(), Some(1e-8))?;
        checks.push(Check::new(
            &format!("example 3 {} converges", algo.name()),
            run.status == Status::Converged,
            format!("gap {:.3e} after {} iterations", run.final_gap, run.iterations),
        ));
    }

    let (_, topo) = example4(EXAMPLE4_SHIFTS);
    let eig = topo.mixing().eigenvalues().to_vec();
    checks.push(Check::new(
        "example 4 mixing spectrum",
        eig.iter().zip([-0.5, 0.5, 1.0]).all(|(a, b)| (a - b).abs() <= 1e-10),
        format!("{eig:?}"),
    ));
    let ex4 = ProblemSpec::Example4 { shifts: EXAMPLE4_SHIFTS };
    for step in [StepSize::Constant { alpha: 0.25 }, StepSize::OneOverT { c: 1.0 }] {
        let algo = AlgoConfig::new(AlgorithmId::D2).with_stepsize(step).forced();
        let run = run_example(ex4.clone(), algo, 10_000, InitSpec::Zeros, None)?;
        checks.push(Check::new(
            &format!("example 4 d2 diverges {step:?}"),
            run.status == Status::Diverged,
            format!("{:?} after {} iterations", run.status, run.iterations),
        ));
    }
    for algo in [AlgorithmId::Gt, AlgorithmId::Gnsd] {
        let run = run_example(ex4.clone(), AlgoConfig::new(algo).with_alpha(0.05), 10_000, InitSpec::Zeros, Some(1e-8))?;
        checks.push(Check::new(
            &format!("example 4 {} converges", algo.name()),
            run.status == Status::Converged,
            format!("gap {:.3e} after {} iterations", run.final_gap, run.iterations),
        ));
    }
    Ok(checks)
}

/// Central-difference check of every family's local gradient at random points.
pub fn gradient_check(problem: &Problem, points: usize, h: f64, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for k in 0..points {
        let agent = k % problem.n();
        let theta = DVector::from_fn(problem.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
        let g = problem.local_grad(agent, &theta);
        let fd = DVector::from_fn(problem.dim(), |j, _| {
            let mut up = theta.clone();
            let mut dn = theta.clone();
            up[j] += h;
            dn[j] -= h;
            (problem.local_cost(agent, &up) - problem.local_cost(agent, &dn)) / (2.0 * h)
        });
        worst = worst.max((&g - &fd).norm() / g.norm().max(fd.norm()).max(1e-12));
    }
    worst
}

fn verify_gradients() -> Result<Vec<Check>> {
    [FamilyKind::Quadratic, FamilyKind::NcvxLogistic, FamilyKind::TinyMlp]
        .into_iter()
        .map(|family| {
            let mut spec = SyntheticSpec::new(family, 4, 10, 50, 3);
            spec.hidden = vec![6, 4];
            let problem = generate_synthetic(&spec)?;
            let err = gradient_check(&problem, 20, 1e-6, 11);
            Ok(Check::new(&format!("finite differences {family:?}"), err <= 1e-5, format!("max rel error {err:.2e}")))
        })
        .collect()
}

fn verify_oracles() -> Result<Vec<Check>> {
    let mut spec = SyntheticSpec::new(FamilyKind::NcvxLogistic, 4, 5, 200, 9);
    spec.heterogeneity = Heterogeneity::Disjoint { clusters: 8 };
    let problem = generate_synthetic(&spec)?;
    let theta = DMatrix::from_fn(4, 5, |i, j| 0.1 * (i as f64 - j as f64));
    let mut checks = Vec::new();
    for oracle in [OracleSpec::minibatch(8), OracleSpec::streaming(8, None), OracleSpec::streaming(8, Some(0.5))] {
        let r = unbiasedness_check(&problem, oracle, &theta, 20_000, 5)?;
        checks.push(Check::new(
            &format!("unbiased {:?}", oracle.mode),
            r.pass,
            format!("max z {:.2} over {} trials", r.max_z, r.trials),
        ));
    }
    let v8 = covariance_trace(&problem, OracleSpec::minibatch(8), &theta, 20_000, 6)?;
    let v16 = covariance_trace(&problem, OracleSpec::minibatch(16), &theta, 20_000, 7)?;
    let ratio = v8 / v16;
    checks.push(Check::new(
        "variance halves when m doubles",
        (ratio - 2.0).abs() <= 0.4,
        format!("tr Cov(m=8)/tr Cov(m=16) = {ratio:.3}"),
    ));
    Ok(checks)
}

fn verify_topology() -> Result<Vec<Check>> {
    let specs = [
        GraphSpec::Complete { n: 8 },
        GraphSpec::Cycle { n: 9 },
        GraphSpec::Path { n: 6 },
        GraphSpec::Star { n: 7 },
        GraphSpec::Hypercube { n: 16 },
        GraphSpec::RandomRegular { n: 32, degree: 5, seed: 1 },
    ];
    specs
        .iter()
        .map(|spec| {
            let topo = Topology::with_max_degree(build_graph(spec)?);
            let r = topo.mixing().report();
            let detail = format!("lambda_min {:.4}, lambda_2 {:.4}", r.lambda_min, r.lambda_second);
            Ok(Check::new(&format!("mixing {spec:?}"), r.is_valid(), detail))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Algorithm,
    Graph,
    BatchSize,
    N,
    Heterogeneity,
}

impl SweepAxis {
    pub fn parse(s: &str) -> Result<SweepAxis> {
        serde_json::from_value(serde_json::Value::String(s.into()))
            .map_err(|_| Error::Config(format!("unknown sweep axis {s:?}")))
    }
}

/// Graph families for the `graph` axis: `complete`, `cycle`, `path`,
/// `star`, `hypercube`, `random_regular:<degree>`.
fn graph_value(value: &str, n: usize, seed: u64) -> Result<GraphSpec> {
    let (name, arg) = value.split_once(':').unwrap_or((value, ""));
    Ok(match name {
        "complete" => GraphSpec::Complete { n },
        "cycle" => GraphSpec::Cycle { n },
        "path" | "line" => GraphSpec::Path { n },
        "star" => GraphSpec::Star { n },
        "hypercube" => GraphSpec::Hypercube { n },
        "random_regular" => GraphSpec::RandomRegular {
            n,
            degree: arg.parse().map_err(|_| Error::Config(format!("bad degree in {value:?}")))?,
            seed,
        },
        _ => return Err(Error::Config(format!("unknown graph family {value:?}"))),
    })
}

fn parse_usize(axis: &str, v: &str) -> Result<usize> {
    v.parse().map_err(|_| Error::Config(format!("{axis} value {v:?} is not an integer")))
}

/// The config with one axis set to `value`.
pub fn sweep_variant(base: &ExperimentConfig, axis: SweepAxis, value: &str) -> Result<ExperimentConfig> {
    let mut cfg = base.clone();
    let n = match (&cfg.problem, &cfg.graph) {
        (ProblemSpec::Synthetic(s), _) => s.n,
        (_, Some(g)) => g.n(),
        _ => 0,
    };
    let graph_seed = match &cfg.graph {
        Some(GraphSpec::RandomRegular { seed, .. }) => *seed,
        _ => cfg.seed,
    };
    match axis {
        SweepAxis::Algorithm => cfg.algo.algorithm = AlgorithmId::parse(value)?,
        SweepAxis::Graph => cfg.graph = Some(graph_value(value, n, graph_seed)?),
        SweepAxis::BatchSize => {
            let m = parse_usize("batch_size", value)?;
            if !cfg.oracle.is_stochastic() {
                cfg.oracle = OracleSpec::minibatch(m);
            } else {
                cfg.oracle.batch_size = Some(m);
            }
        }
        SweepAxis::N => {
            let n = parse_usize("n", value)?;
            match &mut cfg.problem {
                ProblemSpec::Synthetic(s) => s.n = n,
                _ => return Err(Error::Config("the n axis needs a synthetic problem".into())),
            }
            cfg.graph = cfg.graph.as_ref().map(|g| g.with_n(n));
        }
        SweepAxis::Heterogeneity => {
            let h = match value.split_once(':') {
                None if value == "homogeneous" => Heterogeneity::Homogeneous,
                Some(("disjoint", k)) => Heterogeneity::Disjoint { clusters: parse_usize("clusters", k)? },
                _ => return Err(Error::Config(format!("heterogeneity {value:?}: use homogeneous or disjoint:<k>"))),
            };
            match &mut cfg.problem {
                ProblemSpec::Synthetic(s) => s.heterogeneity = h,
                _ => return Err(Error::Config("the heterogeneity axis needs a synthetic problem".into())),
            }
        }
    }
    Ok(cfg)
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepEntry {
    pub axis: SweepAxis,
    pub value: String,
    pub summary: Summary,
}

/// Runs one variant per value in parallel; outputs go to
/// `<out>/<axis>=<value>/` when `out` is set.
pub fn sweep(base: &ExperimentConfig, axis: SweepAxis, values: &[String], out: Option<&Path>) -> Result<Vec<SweepEntry>> {
    let variants = values
        .iter()
        .map(|v| Ok((v.clone(), sweep_variant(base, axis, v)?)))
        .collect::<Result<Vec<_>>>()?;
    let entries = variants
        .into_par_iter()
        .map(|(value, cfg)| {
            let summary = run_experiment(&cfg)?;
            if let Some(dir) = out {
                let axis_name = serde_json::to_value(axis)?.as_str().unwrap_or_default().to_string();
                write_outputs(&summary, &dir.join(format!("{axis_name}={}", value.replace([':', '/'], "_"))))?;
            }
            Ok(SweepEntry { axis, value, summary })
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("sweep_summary.json"), serde_json::to_string_pretty(&entries)?)?;
    }
    Ok(entries)
}

//! Per-agent data oracles `DO_i(θ_i)`.
//!
//! The oracle returns the *scaled* stack: row `i` estimates `n⁻¹ ∇f_i(θ_i)`.
//! Every algorithm consumes this scaled stack, so the `1/n` factor lives here
//! and nowhere else.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::accounting::Counters;
use crate::error::{dim_check, Error, Result};
use crate::problems::Problem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OracleMode {
    /// Exact local gradient over the full local dataset.
    #[default]
    Batch,
    /// Uniform sampling with replacement of `batch_size` local samples.
    Minibatch,
    /// `batch_size` i.i.d. draws per call. With `sigma` set, the draw is the
    /// exact gradient plus `N(0, σ²/m · I)`; without it, samples are drawn
    /// from the local dataset.
    Streaming,
}

/// `{"mode": "...", "batch_size": m, "sigma": s}`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct OracleSpec {
    #[serde(default)]
    pub mode: OracleMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
}

impl OracleSpec {
    pub fn batch() -> OracleSpec {
        OracleSpec::default()
    }

    pub fn minibatch(m: usize) -> OracleSpec {
        OracleSpec { mode: OracleMode::Minibatch, batch_size: Some(m), sigma: None }
    }

    pub fn streaming(m: usize, sigma: Option<f64>) -> OracleSpec {
        OracleSpec { mode: OracleMode::Streaming, batch_size: Some(m), sigma }
    }

    pub fn is_stochastic(&self) -> bool {
        self.mode != OracleMode::Batch
    }

    pub fn validate(&self, problem: &Problem) -> Result<()> {
        if self.mode == OracleMode::Batch {
            return Ok(());
        }
        let m = self
            .batch_size
            .ok_or_else(|| Error::Oracle(format!("{:?} mode needs a batch_size", self.mode)))?;
        if m == 0 {
            return Err(Error::Oracle("batch_size must be positive".into()));
        }
        if let Some(s) = self.sigma {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::Oracle(format!("sigma must be a nonnegative number, got {s}")));
            }
        }
        if self.mode == OracleMode::Minibatch {
            for i in 0..problem.n() {
                if m > problem.num_samples(i) {
                    return Err(Error::Oracle(format!(
                        "batch_size {m} exceeds the {} samples of agent {i}",
                        problem.num_samples(i)
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Scaled gradient stack and the per-sample gradient evaluations behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientEstimate {
    pub stack: DMatrix<f64>,
    pub sample_evals: u64,
}

/// A data oracle bound to a problem, with one random stream per agent.
#[derive(Debug, Clone)]
pub struct Oracle {
    spec: OracleSpec,
    streams: Vec<ChaCha8Rng>,
    agent_evals: Vec<u64>,
}

impl Oracle {
    pub fn new(spec: OracleSpec, problem: &Problem, seed: u64) -> Result<Oracle> {
        spec.validate(problem)?;
        let streams = (0..problem.n())
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64);
                rng
            })
            .collect();
        Ok(Oracle { spec, streams, agent_evals: vec![0; problem.n()] })
    }

    pub fn spec(&self) -> &OracleSpec {
        &self.spec
    }

    /// Per-sample gradient evaluations charged to each agent so far.
    pub fn agent_evals(&self) -> &[u64] {
        &self.agent_evals
    }

    /// One draw of `n⁻¹ DO_i(θ_i)` for a single agent, consuming only that
    /// agent's stream.
    pub fn evaluate_agent(&mut self, problem: &Problem, agent: usize, theta: &DVector<f64>) -> Result<(DVector<f64>, u64)> {
        let scale = 1.0 / problem.n() as f64;
        let rng = &mut self.streams[agent];
        let m = self.spec.batch_size.unwrap_or(1);
        let (grad, cost) = match (self.spec.mode, self.spec.sigma) {
            (OracleMode::Batch, _) => (problem.local_grad(agent, theta), problem.num_samples(agent) as u64),
            (OracleMode::Streaming, Some(sigma)) => {
                let mut g = problem.local_grad(agent, theta);
                if sigma > 0.0 {
                    let sd = sigma / (m as f64).sqrt();
                    for v in g.iter_mut() {
                        let z: f64 = StandardNormal.sample(rng);
                        *v += sd * z;
                    }
                }
                (g, m as u64)
            }
            (OracleMode::Minibatch, _) | (OracleMode::Streaming, None) => {
                let total = problem.num_samples(agent);
                let idx: Vec<usize> = (0..m).map(|_| rng.random_range(0..total)).collect();
                (problem.sample_grad(agent, theta, &idx), m as u64)
            }
        };
        if grad.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteGradient { agent });
        }
        self.agent_evals[agent] += cost;
        Ok((grad * scale, cost))
    }

    /// Scaled estimate for the whole stack; charges one gradient round.
    pub fn evaluate(&mut self, problem: &Problem, theta: &DMatrix<f64>, counters: &mut Counters) -> Result<GradientEstimate> {
        dim_check("parameter stack", (problem.n(), problem.dim()), theta.shape())?;
        let mut stack = DMatrix::zeros(problem.n(), problem.dim());
        let mut total = 0;
        for i in 0..problem.n() {
            let (g, cost) = self.evaluate_agent(problem, i, &theta.row(i).transpose())?;
            stack.set_row(i, &g.transpose());
            total += cost;
        }
        counters.charge_grad(total);
        Ok(GradientEstimate { stack, sample_evals: total })
    }
}

/// Exact scaled stack `n⁻¹(∇f_1(θ_1), …, ∇f_n(θ_n))`.
pub fn exact_scaled_stack(problem: &Problem, theta: &DMatrix<f64>) -> DMatrix<f64> {
    problem.local_grad_stack(theta) / problem.n() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnbiasednessReport {
    pub trials: usize,
    /// Largest `|mean - exact|` over all stack entries.
    pub max_deviation: f64,
    /// Largest deviation measured in standard errors.
    pub max_z: f64,
    pub pass: bool,
}

/// Compares the empirical mean of `trials` draws with `exact`, entry by
/// entry. Passes when every deviation is within four standard errors.
pub fn check_unbiased(exact: &DMatrix<f64>, trials: usize, mut draw: impl FnMut() -> Result<DMatrix<f64>>) -> Result<UnbiasednessReport> {
    let (mean, var) = welford(exact.shape(), trials, &mut draw)?;
    let mut max_deviation: f64 = 0.0;
    let mut max_z: f64 = 0.0;
    let mut pass = true;
    for k in 0..exact.len() {
        let dev = (mean[k] - exact[k]).abs();
        let se = var[k].sqrt() / (trials as f64).sqrt();
        max_deviation = max_deviation.max(dev);
        if dev > 4.0 * se {
            pass = false;
        }
        if se > 0.0 {
            max_z = max_z.max(dev / se);
        } else if dev > 0.0 {
            max_z = f64::INFINITY;
        }
    }
    Ok(UnbiasednessReport { trials, max_deviation, max_z, pass })
}

fn welford(
    shape: (usize, usize),
    trials: usize,
    draw: &mut impl FnMut() -> Result<DMatrix<f64>>,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let mut mean = DMatrix::zeros(shape.0, shape.1);
    let mut m2 = DMatrix::zeros(shape.0, shape.1);
    for t in 0..trials {
        let x = draw()?;
        let delta = &x - &mean;
        mean += &delta / (t + 1) as f64;
        m2 += delta.component_mul(&(&x - &mean));
    }
    let var = if trials > 1 { m2 / (trials - 1) as f64 } else { m2 };
    Ok((mean, var))
}

/// Runs [`check_unbiased`] on a fresh oracle built from `spec`.
pub fn unbiasedness_check(
    problem: &Problem,
    spec: OracleSpec,
    theta: &DMatrix<f64>,
    trials: usize,
    seed: u64,
) -> Result<UnbiasednessReport> {
    let exact = exact_scaled_stack(problem, theta);
    let mut oracle = Oracle::new(spec, problem, seed)?;
    let mut counters = Counters::default();
    check_unbiased(&exact, trials, || Ok(oracle.evaluate(problem, theta, &mut counters)?.stack))
}

/// Trace of the empirical covariance of the scaled estimate at `theta`.
pub fn covariance_trace(problem: &Problem, spec: OracleSpec, theta: &DMatrix<f64>, trials: usize, seed: u64) -> Result<f64> {
    let mut oracle = Oracle::new(spec, problem, seed)?;
    let mut counters = Counters::default();
    let (_, var) = welford(theta.shape(), trials, &mut || Ok(oracle.evaluate(problem, theta, &mut counters)?.stack))?;
    Ok(var.sum())
}

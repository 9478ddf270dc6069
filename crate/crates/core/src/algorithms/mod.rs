//! Decentralized first-order methods behind one synchronous stepper.
//!
//! Batch methods: DGD, Prox-GPDA, EXTRA, gradient tracking (GT) and xFILTER.
//! Streaming methods: DSGD, D² and GNSD. Each [`Solver::step`] advances one
//! outer iteration and charges exactly the communication rounds and oracle
//! calls the method needs:
//!
//! | method    | comm rounds | gradient rounds |
//! |-----------|-------------|-----------------|
//! | DGD, DSGD | 1           | 1               |
//! | Prox-GPDA | 1           | 1               |
//! | EXTRA, D² | 1           | 1               |
//! | GT, GNSD  | 2           | 1               |
//! | xFILTER   | Q           | 1               |
//!
//! Recursions are written for scalar agents and applied column-wise: `W`
//! acts on the agent axis, gradients on the coordinate axis.

mod chebyshev;
mod equivalence;
mod steps;

pub use chebyshev::{chebyshev_solve, ChebyshevOutcome};
pub use equivalence::{path_with_chord, verify_equivalences, EquivalenceReport};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::accounting::Counters;
use crate::error::{Error, Result};
use crate::oracles::Oracle;
use crate::problems::{estimate_stacked_lipschitz, Problem};
use crate::topology::Topology;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmId {
    Dgd,
    ProxGpda,
    Extra,
    Gt,
    Xfilter,
    Dsgd,
    D2,
    Gnsd,
}

impl AlgorithmId {
    pub const ALL: [AlgorithmId; 8] = [
        AlgorithmId::Dgd,
        AlgorithmId::ProxGpda,
        AlgorithmId::Extra,
        AlgorithmId::Gt,
        AlgorithmId::Xfilter,
        AlgorithmId::Dsgd,
        AlgorithmId::D2,
        AlgorithmId::Gnsd,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            AlgorithmId::Dgd => "dgd",
            AlgorithmId::ProxGpda => "prox_gpda",
            AlgorithmId::Extra => "extra",
            AlgorithmId::Gt => "gt",
            AlgorithmId::Xfilter => "xfilter",
            AlgorithmId::Dsgd => "dsgd",
            AlgorithmId::D2 => "d2",
            AlgorithmId::Gnsd => "gnsd",
        }
    }

    pub fn parse(s: &str) -> Result<AlgorithmId> {
        AlgorithmId::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown algorithm {s:?}")))
    }

    /// Methods designed around a stochastic oracle.
    pub fn is_streaming(&self) -> bool {
        matches!(self, AlgorithmId::Dsgd | AlgorithmId::D2 | AlgorithmId::Gnsd)
    }

    /// Communication rounds charged per outer iteration (`q` for xFILTER).
    pub fn comm_rounds_per_iter(&self, q: usize) -> u64 {
        match self {
            AlgorithmId::Gt | AlgorithmId::Gnsd => 2,
            AlgorithmId::Xfilter => q as u64,
            _ => 1,
        }
    }
}

/// Step-size schedule `α^t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepSize {
    Constant { alpha: f64 },
    /// `α^t = c / t` counting iterations from 1, i.e. `c / (t + 1)` for the
    /// 0-based iteration index `t`.
    OneOverT { c: f64 },
    /// `α = κ √(n / (σ² T))`, constant over a run of `T` iterations.
    Horizon {
        kappa: f64,
        sigma: f64,
        #[serde(default)]
        n: usize,
        #[serde(default)]
        iters: usize,
    },
}

impl StepSize {
    pub fn at(&self, t: usize) -> f64 {
        match *self {
            StepSize::Constant { alpha } => alpha,
            StepSize::OneOverT { c } => c / (t + 1) as f64,
            StepSize::Horizon { kappa, sigma, n, iters } => kappa * (n as f64 / (sigma * sigma * iters as f64)).sqrt(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            StepSize::Constant { alpha } => alpha > 0.0 && alpha.is_finite(),
            StepSize::OneOverT { c } => c > 0.0 && c.is_finite(),
            StepSize::Horizon { kappa, sigma, n, iters } => kappa > 0.0 && sigma > 0.0 && n > 0 && iters > 0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("step size {self:?} is not positive for all t")))
        }
    }

    /// Fills in the network size and horizon of a horizon schedule.
    pub fn bind(self, n: usize, iters: usize) -> StepSize {
        match self {
            StepSize::Horizon { kappa, sigma, n: m, iters: t } => StepSize::Horizon {
                kappa,
                sigma,
                n: if m == 0 { n } else { m },
                iters: if t == 0 { iters } else { t },
            },
            other => other,
        }
    }
}

/// Proximal weights `β_i`, either one value for every agent or one per agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Beta {
    Uniform(f64),
    PerAgent(Vec<f64>),
}

impl Beta {
    fn expand(&self, n: usize) -> Result<DVector<f64>> {
        match self {
            Beta::Uniform(b) => Ok(DVector::from_element(n, *b)),
            Beta::PerAgent(v) if v.len() == n => Ok(DVector::from_column_slice(v)),
            Beta::PerAgent(v) => Err(Error::Config(format!("{} beta values for {n} agents", v.len()))),
        }
    }
}

/// Algorithm choice and tuning knobs; unset fields take defaults derived from
/// the problem and the graph (see [`Solver::new`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgoConfig {
    pub algorithm: AlgorithmId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stepsize: Option<StepSize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Beta>,
    #[serde(default, rename = "Q", alias = "q", skip_serializing_if = "Option::is_none")]
    pub q: Option<usize>,
    /// Run D² even when `λ_min(W) <= -1/3`.
    #[serde(default)]
    pub force: bool,
    /// Replaces `(I + W)/2` in EXTRA's `θ^{t-1}` term (generalized EXTRA).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extra_tilde: Option<Vec<Vec<f64>>>,
    /// Prox-GPDA / xFILTER initial edge duals (`|E| × d`, row-major);
    /// zero when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_duals: Option<Vec<Vec<f64>>>,
}

impl AlgoConfig {
    pub fn new(algorithm: AlgorithmId) -> AlgoConfig {
        AlgoConfig {
            algorithm,
            stepsize: None,
            c: None,
            beta: None,
            q: None,
            force: false,
            extra_tilde: None,
            initial_duals: None,
        }
    }

    pub fn with_stepsize(mut self, s: StepSize) -> AlgoConfig {
        self.stepsize = Some(s);
        self
    }

    pub fn with_alpha(self, alpha: f64) -> AlgoConfig {
        self.with_stepsize(StepSize::Constant { alpha })
    }

    pub fn with_penalty(mut self, c: f64, beta: f64) -> AlgoConfig {
        self.c = Some(c);
        self.beta = Some(Beta::Uniform(beta));
        self
    }

    pub fn with_q(mut self, q: usize) -> AlgoConfig {
        self.q = Some(q);
        self
    }

    pub fn forced(mut self) -> AlgoConfig {
        self.force = true;
        self
    }
}

/// Default inner order `⌈1/√ξ(L_G)⌉`.
pub fn default_chebyshev_order(topology: &Topology) -> usize {
    (1.0 / topology.laplacian_ratio().sqrt()).ceil() as usize
}

/// Concrete parameters after defaults are filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub algorithm: AlgorithmId,
    pub stepsize: StepSize,
    pub c: f64,
    pub beta: DVector<f64>,
    pub q: usize,
    /// Stacked-gradient Lipschitz estimate used for defaults.
    pub lipschitz: f64,
    pub extra_tilde: Option<DMatrix<f64>>,
}

/// Per-algorithm iterate memory and run counters.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgoState {
    pub theta: DMatrix<f64>,
    /// `θ^{t-1}` (EXTRA, D²).
    pub theta_prev: Option<DMatrix<f64>>,
    /// Edge duals `μ`, `|E| × d` (Prox-GPDA, xFILTER).
    pub mu: Option<DMatrix<f64>>,
    /// `p = Aᵀμ` (Prox-GPDA, xFILTER).
    pub p: Option<DMatrix<f64>>,
    /// Gradient tracker `g` (GT, GNSD).
    pub tracker: Option<DMatrix<f64>>,
    /// Oracle output at `θ^t` for GT/GNSD, at `θ^{t-1}` for EXTRA/D².
    pub grad_memory: Option<DMatrix<f64>>,
    /// Cached `L θ^t` from the last exchange (Prox-GPDA, xFILTER).
    pub laplacian_theta: Option<DMatrix<f64>>,
    pub t: usize,
    pub counters: Counters,
    /// Set when an xFILTER inner solve ended with a larger residual than it
    /// started with.
    pub inner_warning: bool,
}

impl AlgoState {
    fn fresh(theta: DMatrix<f64>) -> AlgoState {
        AlgoState {
            theta,
            theta_prev: None,
            mu: None,
            p: None,
            tracker: None,
            grad_memory: None,
            laplacian_theta: None,
            t: 0,
            counters: Counters::default(),
            inner_warning: false,
        }
    }
}

/// Borrowed environment for one step.
pub struct Env<'a> {
    pub problem: &'a Problem,
    pub topology: &'a Topology,
    pub oracle: &'a mut Oracle,
}

/// An algorithm bound to its resolved parameters and current state.
#[derive(Debug, Clone)]
pub struct Solver {
    params: Resolved,
    state: AlgoState,
}

impl Solver {
    /// Validates the configuration, fills in defaults and performs the
    /// method's initialization (charged to the state's counters).
    ///
    /// Defaults: batch methods use `α = 1/(4L̂)` with `L̂` a power-iteration
    /// estimate of the stacked-gradient Lipschitz constant at `θ⁰`; streaming
    /// methods use the horizon schedule with `κ = 1` when the oracle declares
    /// `σ`, else the same `1/(4L̂)`. Prox-GPDA uses `c = β = L̂`; xFILTER uses
    /// `c = 2L̂`, `Υ = cI` and `Q = ⌈1/√ξ(L_G)⌉`.
    pub fn new(config: &AlgoConfig, env: &mut Env<'_>, theta0: DMatrix<f64>, iters: usize) -> Result<Solver> {
        let (n, d) = (env.problem.n(), env.problem.dim());
        crate::error::dim_check("initial stack", (n, d), theta0.shape())?;
        if env.topology.n() != n {
            return Err(Error::Config(format!("graph has {} nodes but the problem has {n} agents", env.topology.n())));
        }
        if theta0.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("initial stack is not finite".into()));
        }
        let lipschitz = estimate_stacked_lipschitz(env.problem, &theta0, 30).max(f64::MIN_POSITIVE);
        let params = resolve(config, env, lipschitz, iters)?;
        let mut state = AlgoState::fresh(theta0);
        steps::initialize(&params, &mut state, env, config)?;
        Ok(Solver { params, state })
    }

    pub fn params(&self) -> &Resolved {
        &self.params
    }

    pub fn state(&self) -> &AlgoState {
        &self.state
    }

    pub fn theta(&self) -> &DMatrix<f64> {
        &self.state.theta
    }

    pub fn iteration(&self) -> usize {
        self.state.t
    }

    pub fn counters(&self) -> Counters {
        self.state.counters
    }

    /// Advances one outer iteration. On a non-finite result the state is
    /// left at the last finite iterate and [`Error::NonFinite`] is returned.
    pub fn step(&mut self, env: &mut Env<'_>) -> Result<()> {
        let mut next = self.state.clone();
        steps::step(&self.params, &mut next, env)?;
        if next.theta.iter().any(|v| !v.is_finite())
            || next.tracker.as_ref().is_some_and(|g| g.iter().any(|v| !v.is_finite()))
            || next.p.as_ref().is_some_and(|p| p.iter().any(|v| !v.is_finite()))
        {
            self.state.counters = next.counters;
            return Err(Error::NonFinite { iter: next.t });
        }
        self.state = next;
        Ok(())
    }
}

fn resolve(config: &AlgoConfig, env: &Env<'_>, lipschitz: f64, iters: usize) -> Result<Resolved> {
    let n = env.problem.n();
    let algo = config.algorithm;
    let oracle_sigma = env.oracle.spec().sigma.filter(|s| *s > 0.0);

    let stepsize = match config.stepsize {
        Some(s) => s.bind(n, iters.max(1)),
        None if algo.is_streaming() && oracle_sigma.is_some() => {
            StepSize::Horizon { kappa: 1.0, sigma: oracle_sigma.unwrap(), n, iters: iters.max(1) }
        }
        None => StepSize::Constant { alpha: 1.0 / (4.0 * lipschitz) },
    };
    stepsize.validate()?;

    let (default_c, default_beta) = match algo {
        AlgorithmId::Xfilter => (2.0 * lipschitz, None),
        _ => (lipschitz, Some(lipschitz)),
    };
    let c = config.c.unwrap_or(default_c);
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Config(format!("penalty c must be positive, got {c}")));
    }
    let beta = match &config.beta {
        Some(b) => b.expand(n)?,
        None => DVector::from_element(n, default_beta.unwrap_or(c)),
    };

    let degrees = env.topology.graph().degrees();
    match algo {
        AlgorithmId::ProxGpda => {
            for (i, &d) in degrees.iter().enumerate() {
                if beta[i] + 2.0 * c * d as f64 <= 0.0 {
                    return Err(Error::Config(format!("beta_{i} + 2 c d_{i} must be positive")));
                }
            }
        }
        AlgorithmId::Xfilter => {
            if beta.iter().any(|&b| b <= 0.0) {
                return Err(Error::Config("xFILTER needs positive beta".into()));
            }
        }
        AlgorithmId::D2 => {
            let w = env.topology.mixing();
            if !w.satisfies_d2_condition() {
                let msg = format!("D² needs lambda_min(W) > -1/3, got {}", w.lambda_min());
                if config.force {
                    log::warn!("{msg} (forced)");
                } else {
                    return Err(Error::Precondition(msg));
                }
            }
        }
        _ => {}
    }

    let q = match config.q {
        Some(0) => return Err(Error::Config("Q must be at least 1".into())),
        Some(q) => q,
        None => default_chebyshev_order(env.topology),
    };

    let extra_tilde = match &config.extra_tilde {
        None => None,
        Some(rows) => {
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(Error::Config(format!("extra_tilde must be {n}x{n}")));
            }
            Some(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
        }
    };

    Ok(Resolved { algorithm: algo, stepsize, c, beta, q, lipschitz, extra_tilde })
}

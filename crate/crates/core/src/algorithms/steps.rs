use nalgebra::DMatrix;

use super::chebyshev::chebyshev_solve;
use super::{AlgoConfig, AlgoState, AlgorithmId, Env, Resolved};
use crate::error::{Error, Result};

pub(super) fn initialize(params: &Resolved, state: &mut AlgoState, env: &mut Env<'_>, config: &AlgoConfig) -> Result<()> {
    match params.algorithm {
        AlgorithmId::ProxGpda | AlgorithmId::Xfilter => {
            let (m, d) = (env.topology.graph().num_edges(), env.problem.dim());
            let mu = match &config.initial_duals {
                None => DMatrix::zeros(m, d),
                Some(rows) => {
                    if rows.len() != m || rows.iter().any(|r| r.len() != d) {
                        return Err(Error::Config(format!("initial_duals must be {m}x{d}")));
                    }
                    DMatrix::from_fn(m, d, |e, k| rows[e][k])
                }
            };
            state.p = Some(env.topology.incidence().tr_mul(&mu));
            state.mu = Some(mu);
            state.laplacian_theta = Some(env.topology.apply_laplacian(&state.theta, &mut state.counters)?);
        }
        AlgorithmId::Gt | AlgorithmId::Gnsd => {
            let g = env.oracle.evaluate(env.problem, &state.theta, &mut state.counters)?.stack;
            state.tracker = Some(g.clone());
            state.grad_memory = Some(g);
        }
        _ => {}
    }
    Ok(())
}

pub(super) fn step(params: &Resolved, state: &mut AlgoState, env: &mut Env<'_>) -> Result<()> {
    let alpha = params.stepsize.at(state.t);
    match params.algorithm {
        AlgorithmId::Dgd | AlgorithmId::Dsgd => dgd(alpha, state, env)?,
        AlgorithmId::ProxGpda => prox_gpda(params, state, env)?,
        AlgorithmId::Extra => extra(params, alpha, state, env)?,
        AlgorithmId::Gt | AlgorithmId::Gnsd => tracking(alpha, state, env)?,
        AlgorithmId::D2 => d2(alpha, state, env)?,
        AlgorithmId::Xfilter => xfilter(params, state, env)?,
    }
    state.t += 1;
    Ok(())
}

fn dgd(alpha: f64, s: &mut AlgoState, env: &mut Env<'_>) -> Result<()> {
    let g = env.oracle.evaluate(env.problem, &s.theta, &mut s.counters)?.stack;
    let mut next = env.topology.mix(&s.theta, &mut s.counters)?;
    next -= &g * alpha;
    s.theta = next;
    Ok(())
}

/// `Σ_{j∈N(i)} (θ_i + θ_j) = (2Dθ - Lθ)_i`.
fn neighbor_sum(env: &Env<'_>, theta: &DMatrix<f64>, lap_theta: &DMatrix<f64>) -> DMatrix<f64> {
    let deg = env.topology.graph().degrees();
    let mut out = -lap_theta;
    for (i, mut row) in out.row_iter_mut().enumerate() {
        row += theta.row(i) * (2.0 * deg[i] as f64);
    }
    out
}

/// Closes an iteration of the primal-dual methods: exchanges `θ^{t+1}` once,
/// caches `Lθ^{t+1}` and moves the duals by `c A θ^{t+1}`.
fn dual_ascent(c: f64, theta: &DMatrix<f64>, s: &mut AlgoState, env: &mut Env<'_>) -> Result<DMatrix<f64>> {
    let lap = env.topology.apply_laplacian(theta, &mut s.counters)?;
    let mu = s.mu.as_mut().expect("duals initialized");
    mu.gemm(c, env.topology.incidence(), theta, 1.0);
    let p = s.p.as_mut().expect("duals initialized");
    *p += &lap * c;
    Ok(lap)
}

fn prox_gpda(params: &Resolved, s: &mut AlgoState, env: &mut Env<'_>) -> Result<()> {
    let c = params.c;
    let g = env.oracle.evaluate(env.problem, &s.theta, &mut s.counters)?.stack;
    let lap = s.laplacian_theta.as_ref().expect("initialized");
    let p = s.p.as_ref().expect("initialized");
    let deg = env.topology.graph().degrees();

    let mut next = neighbor_sum(env, &s.theta, lap) * c - &g - p;
    for (i, mut row) in next.row_iter_mut().enumerate() {
        let b = params.beta[i];
        row += s.theta.row(i) * b;
        row /= b + 2.0 * c * deg[i] as f64;
    }
    let lap_next = dual_ascent(c, &next, s, env)?;
    s.laplacian_theta = Some(lap_next);
    s.theta = next;
    Ok(())
}

fn extra(params: &Resolved, alpha: f64, s: &mut AlgoState, env: &mut Env<'_>) -> Result<()> {
    let g = env.oracle.evaluate(env.problem, &s.theta, &mut s.counters)?.stack;
    let next = match (&s.theta_prev, &s.grad_memory) {
        (Some(prev), Some(g_prev)) => {
            let delta = &g - g_prev;
            match &params.extra_tilde {
                None => {
                    let u = &s.theta - prev * 0.5;
                    let wu = env.topology.mix(&u, &mut s.counters)?;
                    u + wu - delta * alpha
                }
                Some(tilde) => {
                    let w_theta = env.topology.mix(&s.theta, &mut s.counters)?;
                    s.counters.charge_comm(1);
                    &s.theta + w_theta - tilde * prev - delta * alpha
                }
            }
        }
        _ => {
            let mut first = env.topology.mix(&s.theta, &mut s.counters)?;
            first -= &g * alpha;
            first
        }
    };
    s.theta_prev = Some(std::mem::replace(&mut s.theta, next));
    s.grad_memory = Some(g);
    Ok(())
}

fn tracking(alpha: f64, s: &mut AlgoState, env: &mut Env<'_>) -> Result<()> {
    let tracker = s.tracker.take().expect("initialized");
    let g_old = s.grad_memory.take().expect("initialized");
    let mut next = env.topology.mix(&s.theta, &mut s.counters)?;
    next -= &tracker * alpha;
    let g_new = env.oracle.evaluate(env.problem, &next, &mut s.counters)?.stack;
    let tracker_next = env.topology.mix(&tracker, &mut s.counters)? + &g_new - g_old;
    s.theta = next;
    s.tracker = Some(tracker_next);
    s.grad_memory = Some(g_new);
    Ok(())
}

fn d2(alpha: f64, s: &mut AlgoState, env: &mut Env<'_>) -> Result<()> {
    let g = env.oracle.evaluate(env.problem, &s.theta, &mut s.counters)?.stack;
    let next = match (&s.theta_prev, &s.grad_memory) {
        (Some(prev), Some(g_prev)) => {
            let v = &s.theta * 2.0 - prev - (&g - g_prev) * alpha;
            env.topology.mix(&v, &mut s.counters)?
        }
        _ => {
            let mut first = env.topology.mix(&s.theta, &mut s.counters)?;
            first -= &g * alpha;
            first
        }
    };
    s.theta_prev = Some(std::mem::replace(&mut s.theta, next));
    s.grad_memory = Some(g);
    Ok(())
}

/// Inexact primal step: `Q` Chebyshev iterations on
/// `(cL + Υ) θ = Υθ^t - DO(θ^t) - p^t`, warm-started at `θ^t`. The starting
/// residual reuses the cached `Lθ^t`, the `Q-1` inner products with `L` are
/// exchanges, and the final exchange of `θ^{t+1}` doubles as the next cache
/// and the dual update.
fn xfilter(params: &Resolved, s: &mut AlgoState, env: &mut Env<'_>) -> Result<()> {
    let c = params.c;
    let beta = &params.beta;
    let g = env.oracle.evaluate(env.problem, &s.theta, &mut s.counters)?.stack;
    let lap = s.laplacian_theta.as_ref().expect("initialized");
    let p = s.p.as_ref().expect("initialized");

    let scale_rows = |x: &DMatrix<f64>| {
        let mut y = x.clone();
        for (i, mut row) in y.row_iter_mut().enumerate() {
            row *= beta[i];
        }
        y
    };
    let rhs = scale_rows(&s.theta) - &g - p;
    let r0 = -(&g + p + lap * c);
    let lo = beta.min();
    let hi = c * env.topology.laplacian_lambda_max() + beta.max();

    let topology = env.topology;
    let counters = &mut s.counters;
    let outcome = chebyshev_solve(
        |x| Ok(topology.apply_laplacian(x, counters)? * c + scale_rows(x)),
        &s.theta,
        r0,
        lo,
        hi,
        params.q,
    )?;
    let next = outcome.solution;
    let lap_next = dual_ascent(c, &next, s, env)?;

    let residual = (rhs - (&lap_next * c + scale_rows(&next))).norm();
    if residual > outcome.initial_residual_norm {
        if !s.inner_warning {
            log::warn!(
                "xFILTER inner residual grew at iteration {}: {:.3e} -> {:.3e}",
                s.t,
                outcome.initial_residual_norm,
                residual
            );
        }
        s.inner_warning = true;
    }
    s.laplacian_theta = Some(lap_next);
    s.theta = next;
    Ok(())
}

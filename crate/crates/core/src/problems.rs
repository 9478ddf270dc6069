//! Local cost families with analytic gradients, synthetic data and the
//! two small counterexample instances.
//!
//! Every agent `i` holds `M_i` samples and its local cost is the sample
//! average `f_i(θ) = M_i⁻¹ Σ_ℓ F_i(θ; ξ_iℓ)`. Gradients returned here are the
//! plain `∇f_i`; the `1/n` factor of the stacked gradient is applied by the
//! oracle.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::{build_graph, explicit_mixing, GraphSpec, Topology};

/// Clamp applied to sigmoid outputs before taking logarithms.
pub const SIGMOID_CLAMP: f64 = 1e-12;

/// One quadratic sample `a·‖θ − b‖²/2`. The curvature may be negative.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadSample {
    pub curvature: f64,
    pub shift: DVector<f64>,
}

impl QuadSample {
    pub fn new(curvature: f64, shift: &[f64]) -> QuadSample {
        QuadSample { curvature, shift: DVector::from_row_slice(shift) }
    }
}

/// Features (`M × d`, one sample per row) with labels in `{-1, +1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledData {
    pub features: DMatrix<f64>,
    pub labels: Vec<f64>,
}

impl LabeledData {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Quadratic,
    NcvxLogistic,
    TinyMlp,
}

/// Cost family and per-agent data.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Quadratic { samples: Vec<Vec<QuadSample>> },
    /// Logistic loss plus `λ Σ_s ρθ_s²/(1+ρθ_s²)`.
    NcvxLogistic { data: Vec<LabeledData>, lambda: f64, rho: f64 },
    /// Fully connected sigmoid network; `widths` runs from input to the
    /// single output unit.
    TinyMlp { data: Vec<LabeledData>, widths: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    n: usize,
    dim: usize,
    family: Family,
    smoothness: f64,
}

impl Problem {
    pub fn quadratic(samples: Vec<Vec<QuadSample>>) -> Result<Problem> {
        let n = samples.len();
        if n < 2 {
            return Err(Error::Problem("need at least two agents".into()));
        }
        if samples.iter().any(|s| s.is_empty()) {
            return Err(Error::Problem("every agent needs at least one sample".into()));
        }
        let dim = samples[0][0].shift.len();
        if samples.iter().flatten().any(|s| s.shift.len() != dim) {
            return Err(Error::Problem("inconsistent shift dimensions".into()));
        }
        let smoothness = samples
            .iter()
            .flatten()
            .map(|s| s.curvature.abs())
            .fold(0.0, f64::max);
        Ok(Problem { n, dim, family: Family::Quadratic { samples }, smoothness })
    }

    pub fn ncvx_logistic(data: Vec<LabeledData>, lambda: f64, rho: f64) -> Result<Problem> {
        if lambda < 0.0 || rho <= 0.0 {
            return Err(Error::Problem(format!("need lambda >= 0 and rho > 0 (got {lambda}, {rho})")));
        }
        let dim = check_data(&data)?;
        let smoothness = data
            .iter()
            .map(|ds| {
                let gram = ds.features.transpose() * &ds.features;
                let top = nalgebra::SymmetricEigen::new(gram).eigenvalues.max();
                top / (4.0 * ds.len() as f64)
            })
            .fold(0.0, f64::max)
            + 2.0 * lambda * rho;
        Ok(Problem { n: data.len(), dim, family: Family::NcvxLogistic { data, lambda, rho }, smoothness })
    }

    pub fn tiny_mlp(data: Vec<LabeledData>, hidden: &[usize]) -> Result<Problem> {
        let input = check_data(&data)?;
        if hidden.contains(&0) {
            return Err(Error::Problem("hidden layers must be non-empty".into()));
        }
        let mut widths = vec![input];
        widths.extend_from_slice(hidden);
        widths.push(1);
        let dim = mlp_param_count(&widths);
        let mut p = Problem { n: data.len(), dim, family: Family::TinyMlp { data, widths }, smoothness: 0.0 };
        // no closed form; use a curvature estimate at a fixed random point
        let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
        let theta = DMatrix::from_fn(p.n, dim, |_, _| 0.5 * rng.sample::<f64, _>(StandardNormal));
        p.smoothness = p.n as f64 * estimate_stacked_lipschitz(&p, &theta, 20);
        Ok(p)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Parameter dimension `d`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn kind(&self) -> FamilyKind {
        match self.family {
            Family::Quadratic { .. } => FamilyKind::Quadratic,
            Family::NcvxLogistic { .. } => FamilyKind::NcvxLogistic,
            Family::TinyMlp { .. } => FamilyKind::TinyMlp,
        }
    }

    /// Per-agent smoothness constant `L`: analytic for quadratic and
    /// logistic families, a power-iteration estimate for the network.
    pub fn smoothness(&self) -> f64 {
        self.smoothness
    }

    pub fn num_samples(&self, agent: usize) -> usize {
        match &self.family {
            Family::Quadratic { samples } => samples[agent].len(),
            Family::NcvxLogistic { data, .. } | Family::TinyMlp { data, .. } => data[agent].len(),
        }
    }

    pub fn total_samples(&self) -> usize {
        (0..self.n).map(|i| self.num_samples(i)).sum()
    }

    pub fn local_cost(&self, agent: usize, theta: &DVector<f64>) -> f64 {
        if let Family::NcvxLogistic { data, lambda, rho } = &self.family {
            let ds = &data[agent];
            let z = &ds.features * theta;
            let loss = z.iter().zip(&ds.labels).map(|(z, y)| softplus(-y * z)).sum::<f64>() / ds.len() as f64;
            return loss + ncvx_regularizer(theta, *lambda, *rho);
        }
        let m = self.num_samples(agent);
        let all: Vec<usize> = (0..m).collect();
        self.sample_cost(agent, theta, &all)
    }

    pub fn local_grad(&self, agent: usize, theta: &DVector<f64>) -> DVector<f64> {
        if let Family::NcvxLogistic { data, lambda, rho } = &self.family {
            let ds = &data[agent];
            let m = ds.len() as f64;
            let mut coef = &ds.features * theta;
            for (c, y) in coef.iter_mut().zip(&ds.labels) {
                *c = -y * sigmoid(-y * *c) / m;
            }
            return ds.features.tr_mul(&coef) + ncvx_regularizer_grad(theta, *lambda, *rho);
        }
        let m = self.num_samples(agent);
        let all: Vec<usize> = (0..m).collect();
        self.sample_grad(agent, theta, &all)
    }

    /// Average of `F_i(θ; ξ_iℓ)` over the listed sample indices (repeats
    /// allowed).
    pub fn sample_cost(&self, agent: usize, theta: &DVector<f64>, idx: &[usize]) -> f64 {
        let m = idx.len() as f64;
        match &self.family {
            Family::Quadratic { samples } => {
                idx.iter()
                    .map(|&l| {
                        let s = &samples[agent][l];
                        0.5 * s.curvature * (theta - &s.shift).norm_squared()
                    })
                    .sum::<f64>()
                    / m
            }
            Family::NcvxLogistic { data, lambda, rho } => {
                let ds = &data[agent];
                let loss: f64 = idx
                    .iter()
                    .map(|&l| {
                        let z = ds.features.row(l).transpose().dot(theta);
                        softplus(-ds.labels[l] * z)
                    })
                    .sum::<f64>()
                    / m;
                loss + ncvx_regularizer(theta, *lambda, *rho)
            }
            Family::TinyMlp { data, widths } => {
                let ds = &data[agent];
                let mut scratch = MlpScratch::new(widths);
                idx.iter()
                    .map(|&l| {
                        let x: Vec<f64> = ds.features.row(l).iter().copied().collect();
                        let h = scratch.forward(widths, theta.as_slice(), &x);
                        logistic_loss(h, ds.labels[l])
                    })
                    .sum::<f64>()
                    / m
            }
        }
    }

    /// Average of `∇F_i(θ; ξ_iℓ)` over the listed sample indices.
    pub fn sample_grad(&self, agent: usize, theta: &DVector<f64>, idx: &[usize]) -> DVector<f64> {
        let m = idx.len() as f64;
        match &self.family {
            Family::Quadratic { samples } => {
                let mut g = DVector::zeros(self.dim);
                for &l in idx {
                    let s = &samples[agent][l];
                    g += s.curvature * (theta - &s.shift);
                }
                g / m
            }
            Family::NcvxLogistic { data, lambda, rho } => {
                let ds = &data[agent];
                let mut g = DVector::zeros(self.dim);
                for &l in idx {
                    let x = ds.features.row(l);
                    let y = ds.labels[l];
                    let z = x.transpose().dot(theta);
                    // d/dz log(1 + exp(-yz)) = -y σ(-yz)
                    let coef = -y * sigmoid(-y * z);
                    g.axpy(coef, &x.transpose(), 1.0);
                }
                g /= m;
                g + ncvx_regularizer_grad(theta, *lambda, *rho)
            }
            Family::TinyMlp { data, widths } => {
                let ds = &data[agent];
                let mut scratch = MlpScratch::new(widths);
                let mut g = vec![0.0; self.dim];
                for &l in idx {
                    let x: Vec<f64> = ds.features.row(l).iter().copied().collect();
                    scratch.accumulate_grad(widths, theta.as_slice(), &x, ds.labels[l], &mut g);
                }
                DVector::from_vec(g) / m
            }
        }
    }

    /// `f(θ) = n⁻¹ Σ_i f_i(θ)` at a common point.
    pub fn average_cost(&self, theta: &DVector<f64>) -> f64 {
        (0..self.n).map(|i| self.local_cost(i, theta)).sum::<f64>() / self.n as f64
    }

    /// `n⁻¹ Σ_i ∇f_i(θ)` at a common point.
    pub fn average_grad(&self, theta: &DVector<f64>) -> DVector<f64> {
        let mut g = DVector::zeros(self.dim);
        for i in 0..self.n {
            g += self.local_grad(i, theta);
        }
        g / self.n as f64
    }

    /// Unscaled local gradients at each agent's own row, as an `n × d` stack.
    pub fn local_grad_stack(&self, theta: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.n, self.dim);
        for i in 0..self.n {
            let g = self.local_grad(i, &theta.row(i).transpose());
            out.set_row(i, &g.transpose());
        }
        out
    }

    /// Same problem with agents relabelled: agent `i` becomes agent `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Problem {
        fn apply<T: Clone>(v: &[T], perm: &[usize]) -> Vec<T> {
            let mut out = v.to_vec();
            for (i, &p) in perm.iter().enumerate() {
                out[p] = v[i].clone();
            }
            out
        }
        let family = match &self.family {
            Family::Quadratic { samples } => Family::Quadratic { samples: apply(samples, perm) },
            Family::NcvxLogistic { data, lambda, rho } => {
                Family::NcvxLogistic { data: apply(data, perm), lambda: *lambda, rho: *rho }
            }
            Family::TinyMlp { data, widths } => Family::TinyMlp { data: apply(data, perm), widths: widths.clone() },
        };
        Problem { family, ..self.clone() }
    }
}

fn check_data(data: &[LabeledData]) -> Result<usize> {
    if data.len() < 2 {
        return Err(Error::Problem("need at least two agents".into()));
    }
    let d = data[0].features.ncols();
    for (i, ds) in data.iter().enumerate() {
        if ds.is_empty() {
            return Err(Error::Problem(format!("agent {i} holds no samples")));
        }
        if ds.features.ncols() != d || ds.features.nrows() != ds.labels.len() {
            return Err(Error::Problem(format!("agent {i} has inconsistent feature dimensions")));
        }
        if let Some(y) = ds.labels.iter().find(|&&y| y != 1.0 && y != -1.0) {
            return Err(Error::Problem(format!("label {y} outside {{-1, +1}}")));
        }
    }
    Ok(d)
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(z))` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

pub fn ncvx_regularizer(theta: &DVector<f64>, lambda: f64, rho: f64) -> f64 {
    lambda * theta.iter().map(|&t| rho * t * t / (1.0 + rho * t * t)).sum::<f64>()
}

pub fn ncvx_regularizer_grad(theta: &DVector<f64>, lambda: f64, rho: f64) -> DVector<f64> {
    theta.map(|t| {
        let q = 1.0 + rho * t * t;
        lambda * 2.0 * rho * t / (q * q)
    })
}

/// Cross-entropy of the clamped sigmoid output against `y ∈ {-1, +1}`.
fn logistic_loss(h: f64, y: f64) -> f64 {
    let h = h.clamp(SIGMOID_CLAMP, 1.0 - SIGMOID_CLAMP);
    if y > 0.0 {
        -h.ln()
    } else {
        -(1.0 - h).ln()
    }
}

/// Parameter layout: for each layer, the `out × in` weight matrix in
/// row-major order followed by the `out` biases.
pub fn mlp_param_count(widths: &[usize]) -> usize {
    widths.windows(2).map(|w| w[1] * w[0] + w[1]).sum()
}

struct MlpScratch {
    acts: Vec<Vec<f64>>,
    deltas: Vec<Vec<f64>>,
}

impl MlpScratch {
    fn new(widths: &[usize]) -> MlpScratch {
        MlpScratch {
            acts: widths.iter().map(|&w| vec![0.0; w]).collect(),
            deltas: widths.iter().map(|&w| vec![0.0; w]).collect(),
        }
    }

    /// Returns the network output in `(0, 1)`.
    fn forward(&mut self, widths: &[usize], params: &[f64], x: &[f64]) -> f64 {
        self.acts[0].copy_from_slice(x);
        let mut off = 0;
        for l in 1..widths.len() {
            let (fan_in, fan_out) = (widths[l - 1], widths[l]);
            let (prev, cur) = self.acts.split_at_mut(l);
            let prev = &prev[l - 1];
            let bias = off + fan_out * fan_in;
            for o in 0..fan_out {
                let row = &params[off + o * fan_in..off + (o + 1) * fan_in];
                let z: f64 = row.iter().zip(prev).map(|(w, a)| w * a).sum::<f64>() + params[bias + o];
                cur[0][o] = sigmoid(z);
            }
            off = bias + fan_out;
        }
        self.acts[widths.len() - 1][0]
    }

    fn accumulate_grad(&mut self, widths: &[usize], params: &[f64], x: &[f64], y: f64, grad: &mut [f64]) {
        let h = self.forward(widths, params, x);
        let last = widths.len() - 1;
        let y01 = if y > 0.0 { 1.0 } else { 0.0 };
        self.deltas[last][0] = h - y01;

        let mut offsets = Vec::with_capacity(widths.len());
        let mut off = 0;
        for l in 1..widths.len() {
            offsets.push(off);
            off += widths[l] * widths[l - 1] + widths[l];
        }

        for l in (1..widths.len()).rev() {
            let (fan_in, fan_out) = (widths[l - 1], widths[l]);
            let off = offsets[l - 1];
            let bias = off + fan_out * fan_in;
            for o in 0..fan_out {
                let d = self.deltas[l][o];
                for k in 0..fan_in {
                    grad[off + o * fan_in + k] += d * self.acts[l - 1][k];
                }
                grad[bias + o] += d;
            }
            if l > 1 {
                for k in 0..fan_in {
                    let back: f64 = (0..fan_out).map(|o| params[off + o * fan_in + k] * self.deltas[l][o]).sum();
                    let a = self.acts[l - 1][k];
                    self.deltas[l - 1][k] = back * a * (1.0 - a);
                }
            }
        }
    }
}

/// Largest-magnitude curvature of the scaled stacked gradient
/// `θ ↦ n⁻¹(∇f_1(θ_1), …, ∇f_n(θ_n))` near `theta`, by power iteration on
/// finite-difference Hessian-vector products.
pub fn estimate_stacked_lipschitz(problem: &Problem, theta: &DMatrix<f64>, iters: usize) -> f64 {
    let n = problem.n() as f64;
    let base = problem.local_grad_stack(theta);
    let mut rng = ChaCha8Rng::seed_from_u64(0x11D5);
    let mut v = DMatrix::from_fn(theta.nrows(), theta.ncols(), |_, _| rng.sample::<f64, _>(StandardNormal));
    v /= v.norm();
    let mut estimate = 0.0;
    let scale = 1e-5 * (1.0 + theta.norm() / (theta.len() as f64).sqrt());
    for _ in 0..iters.max(1) {
        let probe = theta + &v * scale;
        let hv = (problem.local_grad_stack(&probe) - &base) / (scale * n);
        let norm = hv.norm();
        if norm == 0.0 || !norm.is_finite() {
            break;
        }
        estimate = norm;
        v = hv / norm;
    }
    estimate
}

/// How agents' data relate to each other in synthetic problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Heterogeneity {
    /// Every agent samples from the same distribution.
    #[default]
    Homogeneous,
    /// `clusters` classes, each owned by exactly one agent; agents hold
    /// contiguous blocks of classes.
    Disjoint { clusters: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub family: FamilyKind,
    pub n: usize,
    pub d: usize,
    pub samples_per_agent: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub heterogeneity: Heterogeneity,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default = "default_hidden")]
    pub hidden: Vec<usize>,
    /// Standard deviation of the noise added to the planted score before
    /// taking its sign.
    #[serde(default = "default_label_noise")]
    pub label_noise: f64,
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
fn default_label_noise() -> f64 {
    1.0
}

impl SyntheticSpec {
    pub fn new(family: FamilyKind, n: usize, d: usize, samples_per_agent: usize, seed: u64) -> SyntheticSpec {
        SyntheticSpec {
            family,
            n,
            d,
            samples_per_agent,
            seed,
            heterogeneity: Heterogeneity::Homogeneous,
            lambda: default_lambda(),
            rho: default_rho(),
            hidden: default_hidden(),
            label_noise: default_label_noise(),
        }
    }
}

/// Agent that owns `cluster` under a disjoint split into `clusters` classes.
pub fn cluster_owner(clusters: usize, n: usize, cluster: usize) -> usize {
    cluster * n / clusters
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Problem> {
    let (n, d, m) = (spec.n, spec.d, spec.samples_per_agent);
    if n < 2 || d == 0 || m == 0 {
        return Err(Error::Problem(format!("invalid sizes n={n}, d={d}, samples_per_agent={m}")));
    }
    if let Heterogeneity::Disjoint { clusters } = spec.heterogeneity {
        if clusters < n {
            return Err(Error::Problem(format!(
                "{clusters} clusters cannot be held exclusively by {n} agents"
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let normal = |rng: &mut ChaCha8Rng| -> f64 { StandardNormal.sample(rng) };

    match spec.family {
        FamilyKind::Quadratic => {
            let centers = sample_centers(spec, &mut rng);
            let samples = (0..n)
                .map(|i| {
                    let a = rng.random_range(0.5..1.5);
                    (0..m)
                        .map(|_| {
                            let c = pick_cluster(spec, i, &mut rng);
                            let shift = DVector::from_fn(d, |k, _| centers[(c, k)] + normal(&mut rng));
                            QuadSample { curvature: a, shift }
                        })
                        .collect()
                })
                .collect();
            Problem::quadratic(samples)
        }
        FamilyKind::NcvxLogistic | FamilyKind::TinyMlp => {
            let separator = DVector::from_fn(d, |_, _| normal(&mut rng));
            let centers = sample_centers(spec, &mut rng);
            let data = (0..n)
                .map(|i| {
                    let mut features = DMatrix::zeros(m, d);
                    let mut labels = Vec::with_capacity(m);
                    for l in 0..m {
                        match spec.heterogeneity {
                            Heterogeneity::Homogeneous => {
                                let x = DVector::from_fn(d, |_, _| normal(&mut rng));
                                let score = separator.dot(&x) + spec.label_noise * normal(&mut rng);
                                features.set_row(l, &x.transpose());
                                labels.push(if score >= 0.0 { 1.0 } else { -1.0 });
                            }
                            Heterogeneity::Disjoint { .. } => {
                                let c = pick_cluster(spec, i, &mut rng);
                                let x = DVector::from_fn(d, |k, _| centers[(c, k)] + normal(&mut rng));
                                features.set_row(l, &x.transpose());
                                labels.push(if c % 2 == 1 { 1.0 } else { -1.0 });
                            }
                        }
                    }
                    LabeledData { features, labels }
                })
                .collect();
            if spec.family == FamilyKind::NcvxLogistic {
                Problem::ncvx_logistic(data, spec.lambda, spec.rho)
            } else {
                Problem::tiny_mlp(data, &spec.hidden)
            }
        }
    }
}

/// Cluster centers, one row per cluster (a single zero row when homogeneous).
fn sample_centers(spec: &SyntheticSpec, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    match spec.heterogeneity {
        Heterogeneity::Homogeneous => DMatrix::zeros(1, spec.d),
        Heterogeneity::Disjoint { clusters } => {
            DMatrix::from_fn(clusters, spec.d, |_, _| 2.0 * rng.sample::<f64, _>(StandardNormal))
        }
    }
}

fn pick_cluster(spec: &SyntheticSpec, agent: usize, rng: &mut ChaCha8Rng) -> usize {
    match spec.heterogeneity {
        Heterogeneity::Homogeneous => 0,
        Heterogeneity::Disjoint { clusters } => {
            let lo = (agent * clusters).div_ceil(spec.n);
            let hi = ((agent + 1) * clusters).div_ceil(spec.n);
            rng.random_range(lo..hi)
        }
    }
}

/// Two agents on one edge with `f_1 = θ²/2`, `f_2 = -θ²/2` and
/// `W = [[.5, .5], [.5, .5]]`.
pub fn example3() -> (Problem, Topology) {
    let problem = Problem::quadratic(vec![
        vec![QuadSample::new(1.0, &[0.0])],
        vec![QuadSample::new(-1.0, &[0.0])],
    ])
    .expect("valid instance");
    let graph = build_graph(&GraphSpec::Path { n: 2 }).expect("valid graph");
    let w = explicit_mixing(&graph, DMatrix::from_element(2, 2, 0.5)).expect("valid mixing");
    (problem, Topology::new(graph, w).expect("matching shapes"))
}

/// Default shifts for [`example4`].
pub const EXAMPLE4_SHIFTS: [f64; 3] = [0.0, 1.0, 2.0];

/// Three-node line with `f_i(x) = (x - b_i)²` and the mixing matrix
/// `[[.5, .5, 0], [.5, 0, .5], [0, .5, .5]]` (eigenvalues -0.5, 0.5, 1).
pub fn example4(shifts: [f64; 3]) -> (Problem, Topology) {
    let problem = Problem::quadratic(shifts.iter().map(|&b| vec![QuadSample::new(2.0, &[b])]).collect())
        .expect("valid instance");
    let graph = build_graph(&GraphSpec::Path { n: 3 }).expect("valid graph");
    let w = explicit_mixing(
        &graph,
        DMatrix::from_row_slice(3, 3, &[0.5, 0.5, 0.0, 0.5, 0.0, 0.5, 0.0, 0.5, 0.5]),
    )
    .expect("valid mixing");
    (problem, Topology::new(graph, w).expect("matching shapes"))
}

/// Reads `label,feature_1..feature_d,agent` rows. Labels must be `-1` or
/// `+1`; agents are 0-indexed and every agent from 0 to the largest index
/// must hold at least one row.
pub fn load_labeled_csv(path: impl AsRef<Path>, expected_dim: Option<usize>) -> Result<Vec<LabeledData>> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let cols: Vec<&str> = headers.iter().map(str::trim).collect();
    if cols.len() < 3 || cols[0] != "label" || cols[cols.len() - 1] != "agent" {
        return Err(Error::Problem("CSV header must be label,feature_1..feature_d,agent".into()));
    }
    let d = cols.len() - 2;
    for (k, c) in cols[1..=d].iter().enumerate() {
        if *c != format!("feature_{}", k + 1) {
            return Err(Error::Problem(format!("unexpected column {c:?}")));
        }
    }
    if let Some(e) = expected_dim {
        if e != d {
            return Err(Error::Problem(format!("CSV has {d} features, expected {e}")));
        }
    }
    let mut rows: Vec<(usize, f64, Vec<f64>)> = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec?;
        let parse = |s: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Problem(format!("row {}: cannot parse {s:?}", line + 1)))
        };
        if rec.len() != d + 2 {
            return Err(Error::Problem(format!("row {} has {} fields, expected {}", line + 1, rec.len(), d + 2)));
        }
        let label = parse(&rec[0])?;
        if label != 1.0 && label != -1.0 {
            return Err(Error::Problem(format!("row {}: label {label} outside {{-1, +1}}", line + 1)));
        }
        let x = (1..=d).map(|k| parse(&rec[k])).collect::<Result<Vec<_>>>()?;
        let agent = rec[d + 1]
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::Problem(format!("row {}: bad agent index", line + 1)))?;
        rows.push((agent, label, x));
    }
    let n = rows.iter().map(|r| r.0 + 1).max().unwrap_or(0);
    let mut out = Vec::with_capacity(n);
    for a in 0..n {
        let mine: Vec<_> = rows.iter().filter(|r| r.0 == a).collect();
        if mine.is_empty() {
            return Err(Error::Problem(format!("agent {a} has no rows")));
        }
        let features = DMatrix::from_fn(mine.len(), d, |r, c| mine[r].2[c]);
        let labels = mine.iter().map(|r| r.1).collect();
        out.push(LabeledData { features, labels });
    }
    Ok(out)
}

//! Undirected communication graphs, their incidence and Laplacian matrices,
//! and symmetric doubly stochastic mixing matrices.
//!
//! A mixing matrix `W` is accepted when
//!
//! * `null(I - W) = span(1)` (the eigenvalue 1 is simple),
//! * `-I <= W <= I`,
//! * `W_ij > 0` exactly on the edges of the graph for `i != j`,
//!
//! and its rows sum to one. Every product `W X` or `L X` stands for one
//! synchronous round of neighbor message exchange and is charged to the
//! caller's [`Counters`].

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::accounting::Counters;
use crate::error::{dim_check, Error, Result};

/// Retry budget for random regular graph generation.
pub const RANDOM_REGULAR_RETRIES: usize = 1000;

/// Spectral tolerance for mixing matrix validation.
pub const SPECTRAL_TOL: f64 = 1e-10;

/// Tolerance on row sums and symmetry.
pub const ENTRY_TOL: f64 = 1e-12;

/// Graph family as written in experiment configs, e.g.
/// `{"type": "random_regular", "n": 32, "degree": 5, "seed": 7}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GraphSpec {
    Complete { n: usize },
    Cycle { n: usize },
    Path { n: usize },
    Line { n: usize },
    Star { n: usize },
    Hypercube { n: usize },
    RandomRegular { n: usize, degree: usize, #[serde(default)] seed: u64 },
    /// Explicit edge list, 0-indexed.
    Edges { n: usize, edges: Vec<(usize, usize)> },
}

impl GraphSpec {
    pub fn n(&self) -> usize {
        match *self {
            GraphSpec::Complete { n }
            | GraphSpec::Cycle { n }
            | GraphSpec::Path { n }
            | GraphSpec::Line { n }
            | GraphSpec::Star { n }
            | GraphSpec::Hypercube { n }
            | GraphSpec::RandomRegular { n, .. }
            | GraphSpec::Edges { n, .. } => n,
        }
    }

    /// Same family with a different node count.
    pub fn with_n(&self, n: usize) -> GraphSpec {
        let mut out = self.clone();
        match &mut out {
            GraphSpec::Complete { n: m }
            | GraphSpec::Cycle { n: m }
            | GraphSpec::Path { n: m }
            | GraphSpec::Line { n: m }
            | GraphSpec::Star { n: m }
            | GraphSpec::Hypercube { n: m }
            | GraphSpec::RandomRegular { n: m, .. }
            | GraphSpec::Edges { n: m, .. } => *m = n,
        }
        out
    }

    pub fn build(&self) -> Result<Graph> {
        build_graph(self)
    }
}

/// Label recorded on a constructed graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphKind {
    Complete,
    Cycle,
    Path,
    Star,
    Hypercube,
    RandomRegular { degree: usize, seed: u64 },
    Custom,
}

/// A connected undirected simple graph on nodes `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    degrees: Vec<usize>,
    kind: GraphKind,
}

impl Graph {
    /// Validates and normalizes an edge list: pairs are reordered to `i < j`
    /// and sorted lexicographically.
    pub fn from_edges(n: usize, edges: &[(usize, usize)], kind: GraphKind) -> Result<Graph> {
        if n < 2 {
            return Err(Error::InvalidGraph(format!("need at least 2 nodes, got {n}")));
        }
        let mut set = BTreeSet::new();
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidGraph(format!("edge ({a},{b}) out of range for n={n}")));
            }
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop at node {a}")));
            }
            let e = (a.min(b), a.max(b));
            if !set.insert(e) {
                return Err(Error::InvalidGraph(format!("duplicate edge {e:?}")));
            }
        }
        let edges: Vec<_> = set.into_iter().collect();
        let mut degrees = vec![0; n];
        for &(a, b) in &edges {
            degrees[a] += 1;
            degrees[b] += 1;
        }
        let g = Graph { n, edges, degrees, kind };
        if !g.is_connected() {
            return Err(Error::InvalidGraph("graph is not connected".into()));
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Edges `(i, j)` with `i < j` in lexicographic order. Row `e` of the
    /// incidence matrix corresponds to `edges()[e]`.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn max_degree(&self) -> usize {
        self.degrees.iter().copied().max().unwrap_or(0)
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut nb = vec![Vec::new(); self.n];
        for &(a, b) in &self.edges {
            nb[a].push(b);
            nb[b].push(a);
        }
        nb
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.binary_search(&(a.min(b), a.max(b))).is_ok()
    }

    fn is_connected(&self) -> bool {
        let nb = self.neighbors();
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &nb[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == self.n
    }

    pub fn is_bipartite(&self) -> bool {
        let nb = self.neighbors();
        let mut color = vec![-1i8; self.n];
        color[0] = 0;
        let mut queue = VecDeque::from([0]);
        while let Some(u) = queue.pop_front() {
            for &v in &nb[u] {
                if color[v] < 0 {
                    color[v] = 1 - color[u];
                    queue.push_back(v);
                } else if color[v] == color[u] {
                    return false;
                }
            }
        }
        true
    }

    /// `|E| x n` matrix with `+1` at `(e, i)` and `-1` at `(e, j)` for
    /// `e = (i, j)`, `i < j`.
    pub fn incidence(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.edges.len(), self.n);
        for (e, &(i, j)) in self.edges.iter().enumerate() {
            a[(e, i)] = 1.0;
            a[(e, j)] = -1.0;
        }
        a
    }

    pub fn adjacency(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for &(i, j) in &self.edges {
            m[(i, j)] = 1.0;
            m[(j, i)] = 1.0;
        }
        m
    }

    /// `D - Adj`, which equals `AᵀA` for the incidence matrix `A`.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let mut l = -self.adjacency();
        for (i, &d) in self.degrees.iter().enumerate() {
            l[(i, i)] = d as f64;
        }
        l
    }

    /// Ascending Laplacian eigenvalues.
    pub fn laplacian_spectrum(&self) -> Vec<f64> {
        sorted_eigenvalues(self.laplacian())
    }

    /// One `"i j"` pair per line, 0-indexed.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for &(i, j) in &self.edges {
            writeln!(out, "{i} {j}")?;
        }
        Ok(())
    }

    pub fn save_edge_list(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_edge_list(std::io::BufWriter::new(file))?;
        Ok(())
    }

    /// Relabels node `i` as `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Graph> {
        let edges: Vec<_> = self.edges.iter().map(|&(a, b)| (perm[a], perm[b])).collect();
        Graph::from_edges(self.n, &edges, GraphKind::Custom)
    }
}

pub fn build_graph(spec: &GraphSpec) -> Result<Graph> {
    let n = spec.n();
    if n < 2 {
        return Err(Error::InvalidGraph(format!("need at least 2 nodes, got {n}")));
    }
    match spec {
        GraphSpec::Complete { .. } => {
            let edges: Vec<_> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
            Graph::from_edges(n, &edges, GraphKind::Complete)
        }
        GraphSpec::Cycle { .. } => {
            if n < 3 {
                return Err(Error::InvalidGraph("cycle needs at least 3 nodes".into()));
            }
            let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
            Graph::from_edges(n, &edges, GraphKind::Cycle)
        }
        GraphSpec::Path { .. } | GraphSpec::Line { .. } => {
            let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
            Graph::from_edges(n, &edges, GraphKind::Path)
        }
        GraphSpec::Star { .. } => {
            let edges: Vec<_> = (1..n).map(|i| (0, i)).collect();
            Graph::from_edges(n, &edges, GraphKind::Star)
        }
        GraphSpec::Hypercube { .. } => {
            if !n.is_power_of_two() {
                return Err(Error::InvalidGraph(format!("hypercube needs a power-of-two node count, got {n}")));
            }
            let dim = n.trailing_zeros();
            let edges: Vec<_> = (0..n)
                .flat_map(|i| (0..dim).map(move |k| (i, i ^ (1 << k))))
                .filter(|&(i, j)| i < j)
                .collect();
            Graph::from_edges(n, &edges, GraphKind::Hypercube)
        }
        GraphSpec::RandomRegular { degree, seed, .. } => random_regular(n, *degree, *seed),
        GraphSpec::Edges { edges, .. } => Graph::from_edges(n, edges, GraphKind::Custom),
    }
}

/// Random `degree`-regular graph by the pairing model. Stubs that would form
/// a self-loop or a repeated edge are re-paired among themselves; a pairing
/// that gets stuck, or a disconnected result, restarts from scratch.
pub fn random_regular(n: usize, degree: usize, seed: u64) -> Result<Graph> {
    if degree == 0 || degree >= n || !(n * degree).is_multiple_of(2) {
        return Err(Error::InvalidGraph(format!(
            "random regular graph needs 0 < degree < n and n*degree even (n={n}, degree={degree})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..RANDOM_REGULAR_RETRIES {
        let Some(edges) = try_pairing(n, degree, &mut rng) else { continue };
        let edges: Vec<_> = edges.into_iter().collect();
        match Graph::from_edges(n, &edges, GraphKind::RandomRegular { degree, seed }) {
            Ok(g) => return Ok(g),
            Err(_) => continue,
        }
    }
    Err(Error::Disconnected { retries: RANDOM_REGULAR_RETRIES })
}

fn try_pairing(n: usize, degree: usize, rng: &mut ChaCha8Rng) -> Option<BTreeSet<(usize, usize)>> {
    let mut edges = BTreeSet::new();
    let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, degree)).collect();
    while !stubs.is_empty() {
        let mut leftover: HashMap<usize, usize> = HashMap::new();
        stubs.shuffle(rng);
        for pair in stubs.chunks_exact(2) {
            let (a, b) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if a != b && !edges.contains(&(a, b)) {
                edges.insert((a, b));
            } else {
                *leftover.entry(a).or_default() += 1;
                *leftover.entry(b).or_default() += 1;
            }
        }
        if leftover.is_empty() {
            break;
        }
        let mut nodes: Vec<_> = leftover.keys().copied().collect();
        nodes.sort_unstable();
        let pairable = nodes
            .iter()
            .enumerate()
            .any(|(k, &a)| nodes[k + 1..].iter().any(|&b| !edges.contains(&(a, b))));
        if !pairable {
            return None;
        }
        stubs = nodes
            .iter()
            .flat_map(|&v| std::iter::repeat_n(v, leftover[&v]))
            .collect();
    }
    Some(edges)
}

fn sorted_eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// `λ_min,nonzero(L) / λ_max(L)` of the graph Laplacian, in `(0, 1]` for a
/// connected graph.
pub fn laplacian_ratio(g: &Graph) -> f64 {
    let ev = g.laplacian_spectrum();
    // connected: exactly one zero eigenvalue, at the front
    ev[1] / ev[ev.len() - 1]
}

/// Outcome of checking a candidate mixing matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixingReport {
    pub symmetric: bool,
    pub rows_sum_to_one: bool,
    /// Eigenvalue 1 is simple.
    pub p1: bool,
    /// All eigenvalues in `[-1, 1]`.
    pub p2: bool,
    /// Sparsity and positivity match the graph.
    pub p3: bool,
    /// `λ_min(W) = -1` (allowed, but consumed by the D² precondition).
    pub bipartite_boundary: bool,
    pub lambda_min: f64,
    /// Second-largest eigenvalue.
    pub lambda_second: f64,
    pub violations: Vec<String>,
}

impl MixingReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// A validated symmetric mixing matrix with its cached spectrum.
#[derive(Debug, Clone)]
pub struct MixingMatrix {
    entries: DMatrix<f64>,
    eigenvalues: Vec<f64>,
    report: MixingReport,
}

impl MixingMatrix {
    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn report(&self) -> &MixingReport {
        &self.report
    }

    /// The D² condition `λ_min(W) > -1/3`.
    pub fn satisfies_d2_condition(&self) -> bool {
        self.lambda_min() > -1.0 / 3.0
    }

    /// Whether `W ⪰ W² ⪰ 2W - I` holds spectrally, i.e. every eigenvalue lies
    /// in `[0, 1]`. Diagnostic only.
    pub fn generalized_extra_relation(&self) -> bool {
        self.eigenvalues.iter().all(|l| (-SPECTRAL_TOL..=1.0 + SPECTRAL_TOL).contains(l))
    }
}

fn validate(g: &Graph, w: &DMatrix<f64>) -> (Vec<f64>, MixingReport) {
    let n = g.n();
    let mut violations = Vec::new();

    let symmetric = (0..n).all(|i| (0..n).all(|j| (w[(i, j)] - w[(j, i)]).abs() <= ENTRY_TOL));
    if !symmetric {
        violations.push("matrix is not symmetric".to_string());
    }
    let rows_sum_to_one = (0..n).all(|i| (w.row(i).sum() - 1.0).abs() <= ENTRY_TOL);
    if !rows_sum_to_one {
        violations.push("rows do not sum to one".to_string());
    }

    let mut p3 = true;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let on_edge = g.has_edge(i, j);
            let v = w[(i, j)];
            if on_edge && v <= 0.0 {
                p3 = false;
                violations.push(format!("W[{i},{j}] = {v} must be positive on an edge"));
            } else if !on_edge && v != 0.0 {
                p3 = false;
                violations.push(format!("W[{i},{j}] = {v} must be zero off the graph"));
            }
        }
    }

    // symmetrize before the eigen-solve so a slightly asymmetric input still
    // yields real eigenvalues for the report
    let sym = (w + w.transpose()) * 0.5;
    let ev = sorted_eigenvalues(sym);
    let lambda_min = ev[0];
    let lambda_max = ev[n - 1];
    let lambda_second = ev[n - 2];
    let p1 = (lambda_max - 1.0).abs() <= SPECTRAL_TOL && lambda_second < 1.0 - SPECTRAL_TOL;
    if !p1 {
        violations.push(format!(
            "eigenvalue 1 is not simple (largest {lambda_max}, second {lambda_second})"
        ));
    }
    let p2 = lambda_min >= -1.0 - SPECTRAL_TOL && lambda_max <= 1.0 + SPECTRAL_TOL;
    if !p2 {
        violations.push(format!("spectrum [{lambda_min}, {lambda_max}] leaves [-1, 1]"));
    }
    let bipartite_boundary = lambda_min <= -1.0 + SPECTRAL_TOL;

    let report = MixingReport {
        symmetric,
        rows_sum_to_one,
        p1,
        p2,
        p3,
        bipartite_boundary,
        lambda_min,
        lambda_second,
        violations,
    };
    (ev, report)
}

/// `W_ij = 1/d_max` on edges and `W_ii = 1 - d_i/d_max`. The validation
/// report is attached rather than turned into an error.
pub fn max_degree_mixing(g: &Graph) -> MixingMatrix {
    let n = g.n();
    let dmax = g.max_degree() as f64;
    let mut w = DMatrix::zeros(n, n);
    for &(i, j) in g.edges() {
        w[(i, j)] = 1.0 / dmax;
        w[(j, i)] = 1.0 / dmax;
    }
    for (i, &d) in g.degrees().iter().enumerate() {
        w[(i, i)] = 1.0 - d as f64 / dmax;
    }
    let (eigenvalues, report) = validate(g, &w);
    if !report.is_valid() {
        log::warn!("max-degree mixing matrix fails validation: {:?}", report.violations);
    }
    if report.bipartite_boundary {
        log::warn!("max-degree mixing matrix has eigenvalue -1 (bipartite graph)");
    }
    MixingMatrix { entries: w, eigenvalues, report }
}

/// `(I + W)/2` for the max-degree `W`; the spectrum moves into `[0, 1]`.
pub fn lazy_mixing(g: &Graph) -> MixingMatrix {
    let n = g.n();
    let w = (max_degree_mixing(g).entries + DMatrix::identity(n, n)) * 0.5;
    let (eigenvalues, report) = validate(g, &w);
    MixingMatrix { entries: w, eigenvalues, report }
}

/// Validates user-supplied entries against the graph.
pub fn explicit_mixing(g: &Graph, entries: DMatrix<f64>) -> Result<MixingMatrix> {
    dim_check("mixing matrix", (g.n(), g.n()), entries.shape())?;
    let (eigenvalues, report) = validate(g, &entries);
    if !report.is_valid() {
        return Err(Error::InvalidMixing(report.violations.join("; ")));
    }
    Ok(MixingMatrix { entries, eigenvalues, report })
}

/// `W X`, charging one communication round.
pub fn mix(w: &MixingMatrix, x: &DMatrix<f64>, counters: &mut Counters) -> Result<DMatrix<f64>> {
    dim_check("stack", (w.n(), x.ncols()), x.shape())?;
    counters.charge_comm(1);
    Ok(w.entries() * x)
}

/// Everything an algorithm needs to know about the network.
#[derive(Debug, Clone)]
pub struct Topology {
    graph: Graph,
    incidence: DMatrix<f64>,
    laplacian: DMatrix<f64>,
    laplacian_spectrum: Vec<f64>,
    mixing: MixingMatrix,
}

impl Topology {
    pub fn new(graph: Graph, mixing: MixingMatrix) -> Result<Topology> {
        dim_check("mixing matrix", (graph.n(), graph.n()), mixing.entries().shape())?;
        let incidence = graph.incidence();
        let laplacian = graph.laplacian();
        let laplacian_spectrum = graph.laplacian_spectrum();
        Ok(Topology { graph, incidence, laplacian, laplacian_spectrum, mixing })
    }

    /// Graph with its max-degree mixing matrix.
    pub fn with_max_degree(graph: Graph) -> Topology {
        let mixing = max_degree_mixing(&graph);
        Topology::new(graph, mixing).expect("max-degree mixing has matching shape")
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn incidence(&self) -> &DMatrix<f64> {
        &self.incidence
    }

    pub fn laplacian(&self) -> &DMatrix<f64> {
        &self.laplacian
    }

    pub fn mixing(&self) -> &MixingMatrix {
        &self.mixing
    }

    pub fn laplacian_lambda_max(&self) -> f64 {
        *self.laplacian_spectrum.last().unwrap()
    }

    pub fn laplacian_ratio(&self) -> f64 {
        self.laplacian_spectrum[1] / self.laplacian_lambda_max()
    }

    pub fn mix(&self, x: &DMatrix<f64>, counters: &mut Counters) -> Result<DMatrix<f64>> {
        mix(&self.mixing, x, counters)
    }

    /// `L X`, charging one communication round.
    pub fn apply_laplacian(&self, x: &DMatrix<f64>, counters: &mut Counters) -> Result<DMatrix<f64>> {
        dim_check("stack", (self.n(), x.ncols()), x.shape())?;
        counters.charge_comm(1);
        Ok(&self.laplacian * x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lazy_weights_nonnegative_spectrum() {
        let g = build_graph(&GraphSpec::Cycle { n: 8 }).unwrap();
        let w = lazy_mixing(&g);
        assert!(w.report().is_valid());
        assert!(w.lambda_min() >= -1e-12);
        assert!(w.generalized_extra_relation());
        assert!((w.entries()[(0, 1)] - 0.25).abs() < 1e-15);
    }
    use approx::assert_abs_diff_eq;

    fn example4_graph() -> Graph {
        build_graph(&GraphSpec::Path { n: 3 }).unwrap()
    }

    #[test]
    fn cycle_of_four() {
        let g = build_graph(&GraphSpec::Cycle { n: 4 }).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (0, 3), (1, 2), (2, 3)]);
        assert_eq!(g.degrees(), &[2, 2, 2, 2]);
    }

    #[test]
    fn complete_of_three() {
        let g = build_graph(&GraphSpec::Complete { n: 3 }).unwrap();
        assert_eq!(g.num_edges(), 3);
        assert!(g.degrees().iter().all(|&d| d == 2));
    }

    #[test]
    fn random_regular_32_5() {
        for seed in 0..20 {
            let g = build_graph(&GraphSpec::RandomRegular { n: 32, degree: 5, seed }).unwrap();
            assert_eq!(g.num_edges(), 80);
            assert!(g.degrees().iter().all(|&d| d == 5));
        }
    }

    #[test]
    fn random_regular_is_seeded() {
        let a = random_regular(20, 3, 11).unwrap();
        let b = random_regular(20, 3, 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn infeasible_parameters() {
        assert!(random_regular(5, 3, 0).is_err());
        assert!(random_regular(4, 4, 0).is_err());
        assert!(build_graph(&GraphSpec::Hypercube { n: 6 }).is_err());
        assert!(build_graph(&GraphSpec::Cycle { n: 2 }).is_err());
        assert!(build_graph(&GraphSpec::Complete { n: 1 }).is_err());
        assert!(Graph::from_edges(4, &[(0, 1), (2, 3)], GraphKind::Custom).is_err());
    }

    #[test]
    fn hypercube_degrees() {
        let g = build_graph(&GraphSpec::Hypercube { n: 32 }).unwrap();
        assert!(g.degrees().iter().all(|&d| d == 5));
        assert_eq!(g.num_edges(), 80);
    }

    #[test]
    fn incidence_gram_is_laplacian() {
        let g = random_regular(16, 3, 2).unwrap();
        let a = g.incidence();
        for r in 0..a.nrows() {
            let row = a.row(r);
            assert_eq!(row.iter().filter(|&&v| v == 1.0).count(), 1);
            assert_eq!(row.iter().filter(|&&v| v == -1.0).count(), 1);
        }
        assert_eq!(a.transpose() * &a, g.laplacian());
    }

    #[test]
    fn max_degree_complete_three() {
        let g = build_graph(&GraphSpec::Complete { n: 3 }).unwrap();
        let w = max_degree_mixing(&g);
        let expect = DMatrix::from_row_slice(3, 3, &[0.0, 0.5, 0.5, 0.5, 0.0, 0.5, 0.5, 0.5, 0.0]);
        assert_eq!(w.entries(), &expect);
        assert!(w.report().is_valid());
    }

    #[test]
    fn max_degree_two_node_path_is_flagged() {
        let g = build_graph(&GraphSpec::Path { n: 2 }).unwrap();
        let w = max_degree_mixing(&g);
        assert_eq!(w.entries(), &DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        assert_abs_diff_eq!(w.lambda_min(), -1.0, epsilon = 1e-12);
        assert!(w.report().bipartite_boundary);
        assert!(!w.satisfies_d2_condition());
    }

    #[test]
    fn example4_matrix_is_accepted() {
        let g = example4_graph();
        let w = explicit_mixing(
            &g,
            DMatrix::from_row_slice(3, 3, &[0.5, 0.5, 0.0, 0.5, 0.0, 0.5, 0.0, 0.5, 0.5]),
        )
        .unwrap();
        let ev = w.eigenvalues();
        assert_abs_diff_eq!(ev[0], -0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(ev[1], 0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(ev[2], 1.0, epsilon = 1e-10);
        assert!(!w.satisfies_d2_condition());
    }

    #[test]
    fn explicit_rejects_bad_entries() {
        let g = example4_graph();
        let off_graph = DMatrix::from_row_slice(3, 3, &[0.4, 0.5, 0.1, 0.5, 0.0, 0.5, 0.1, 0.5, 0.4]);
        assert!(matches!(explicit_mixing(&g, off_graph), Err(Error::InvalidMixing(_))));
        let asym = DMatrix::from_row_slice(3, 3, &[0.5, 0.5, 0.0, 0.4, 0.1, 0.5, 0.0, 0.5, 0.5]);
        assert!(matches!(explicit_mixing(&g, asym), Err(Error::InvalidMixing(_))));
        assert!(matches!(explicit_mixing(&g, DMatrix::identity(2, 2)), Err(Error::Dimension { .. })));
    }

    #[test]
    fn laplacian_ratios() {
        let p2 = build_graph(&GraphSpec::Path { n: 2 }).unwrap();
        assert_abs_diff_eq!(laplacian_ratio(&p2), 1.0, epsilon = 1e-12);
        let c4 = build_graph(&GraphSpec::Cycle { n: 4 }).unwrap();
        let ev = c4.laplacian_spectrum();
        for (got, want) in ev.iter().zip([0.0, 2.0, 2.0, 4.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(laplacian_ratio(&c4), 0.5, epsilon = 1e-12);
        for n in 2..9 {
            let k = build_graph(&GraphSpec::Complete { n }).unwrap();
            assert_abs_diff_eq!(laplacian_ratio(&k), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn mix_counts_and_multiplies() {
        let g = build_graph(&GraphSpec::Path { n: 2 }).unwrap();
        let w = explicit_mixing(&g, DMatrix::from_element(2, 2, 0.5)).unwrap();
        let mut c = Counters::default();
        let out = mix(&w, &DMatrix::from_column_slice(2, 1, &[1.0, 3.0]), &mut c).unwrap();
        assert_eq!(out.as_slice(), &[2.0, 2.0]);
        let ones = mix(&w, &DMatrix::from_element(2, 1, 1.0), &mut c).unwrap();
        assert_eq!(ones.as_slice(), &[1.0, 1.0]);
        assert_eq!(c.comm_rounds, 2);
        assert!(mix(&w, &DMatrix::zeros(3, 1), &mut c).is_err());
        assert_eq!(c.comm_rounds, 2);
    }

    #[test]
    fn edge_list_export() {
        let g = build_graph(&GraphSpec::Star { n: 3 }).unwrap();
        let mut buf = Vec::new();
        g.write_edge_list(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "0 1\n0 2\n");
    }

    #[test]
    fn graph_spec_json() {
        let spec: GraphSpec =
            serde_json::from_str(r#"{"type": "random_regular", "n": 32, "degree": 5, "seed": 3}"#).unwrap();
        assert_eq!(spec, GraphSpec::RandomRegular { n: 32, degree: 5, seed: 3 });
    }
}

//! Stationarity gap, per-iteration records and CSV output.
//!
//! Metric evaluations use exact gradients and are never charged to the run's
//! counters.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::accounting::Counters;
use crate::error::{dim_check, Result};
use crate::problems::Problem;

pub const CSV_HEADER: [&str; 10] = [
    "iter",
    "comm_rounds",
    "grad_eval_rounds",
    "sample_grad_evals",
    "gap",
    "consensus_error",
    "avg_grad_norm_sq",
    "avg_cost",
    "epoch",
    "status",
];

/// Default gap above which a run is declared divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct Gap {
    /// `‖n⁻¹ Σ_j ∇f_j(θ̄)‖² + Σ_j ‖θ_j - θ̄‖²`.
    pub gap: f64,
    pub avg_grad_norm_sq: f64,
    pub consensus_error: f64,
    pub average: DVector<f64>,
}

pub fn average_iterate(theta: &DMatrix<f64>) -> DVector<f64> {
    theta.row_mean().transpose()
}

/// Consensus error `Σ_j ‖θ_j - θ̄‖²`.
pub fn consensus_error(theta: &DMatrix<f64>) -> f64 {
    let avg = theta.row_mean();
    theta.row_iter().map(|r| (r - &avg).norm_squared()).sum()
}

pub fn stationarity_gap(problem: &Problem, theta: &DMatrix<f64>) -> Result<Gap> {
    dim_check("stack", (problem.n(), problem.dim()), theta.shape())?;
    let average = average_iterate(theta);
    let avg_grad_norm_sq = problem.average_grad(&average).norm_squared();
    let consensus_error = consensus_error(theta);
    Ok(Gap { gap: avg_grad_norm_sq + consensus_error, avg_grad_norm_sq, consensus_error, average })
}

/// Gradient heterogeneity `n⁻¹ Σ_i ‖∇f_i(θ) - ∇f(θ)‖²` at a common point.
pub fn heterogeneity_at(problem: &Problem, theta: &DVector<f64>) -> f64 {
    let grads: Vec<_> = (0..problem.n()).map(|i| problem.local_grad(i, theta)).collect();
    let mean = grads.iter().fold(DVector::zeros(theta.len()), |acc, g| acc + g) / problem.n() as f64;
    grads.iter().map(|g| (g - &mean).norm_squared()).sum::<f64>() / problem.n() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Running,
    Converged,
    Diverged,
    MaxIters,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Running => "running",
            Status::Converged => "converged",
            Status::Diverged => "diverged",
            Status::MaxIters => "max_iters",
        }
    }

    pub fn is_terminal(&self) -> bool {
        !matches!(self, Status::Running)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub iter: usize,
    pub comm_rounds: u64,
    pub grad_eval_rounds: u64,
    pub sample_grad_evals: u64,
    pub gap: f64,
    pub consensus_error: f64,
    pub avg_grad_norm_sq: f64,
    pub avg_cost: f64,
    pub epoch: f64,
    pub status: Status,
}

/// Builds [`RunRecord`]s and decides convergence or divergence.
#[derive(Debug, Clone)]
pub struct Recorder {
    total_samples: usize,
    target_eps: Option<f64>,
    divergence_threshold: f64,
    records: Vec<RunRecord>,
    last_finite_gap: Option<f64>,
}

impl Recorder {
    pub fn new(total_samples: usize, target_eps: Option<f64>, divergence_threshold: f64) -> Recorder {
        Recorder { total_samples, target_eps, divergence_threshold, records: Vec::new(), last_finite_gap: None }
    }

    pub fn records(&self) -> &[RunRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<RunRecord> {
        self.records
    }

    pub fn last_finite_gap(&self) -> Option<f64> {
        self.last_finite_gap
    }

    /// Evaluates the metrics at `theta` and appends a record.
    pub fn record(&mut self, problem: &Problem, iter: usize, counters: Counters, theta: &DMatrix<f64>) -> Result<Status> {
        let gap = stationarity_gap(problem, theta)?;
        let avg_cost = problem.average_cost(&gap.average);
        let status = if !gap.gap.is_finite() || gap.gap > self.divergence_threshold {
            Status::Diverged
        } else if self.target_eps.is_some_and(|eps| gap.gap <= eps) {
            Status::Converged
        } else {
            Status::Running
        };
        if gap.gap.is_finite() {
            self.last_finite_gap = Some(gap.gap);
        }
        self.records.push(RunRecord {
            iter,
            comm_rounds: counters.comm_rounds,
            grad_eval_rounds: counters.grad_eval_rounds,
            sample_grad_evals: counters.sample_grad_evals,
            gap: gap.gap,
            consensus_error: gap.consensus_error,
            avg_grad_norm_sq: gap.avg_grad_norm_sq,
            avg_cost,
            epoch: counters.sample_grad_evals as f64 / self.total_samples as f64,
            status,
        });
        Ok(status)
    }

    /// Marks the run divergent without a new evaluation (non-finite iterate).
    pub fn mark_diverged(&mut self) {
        if let Some(last) = self.records.last_mut() {
            last.status = Status::Diverged;
        }
    }

    /// Sets the status of the final record once the run stops.
    pub fn finish(&mut self, status: Status) {
        if let Some(last) = self.records.last_mut() {
            if !last.status.is_terminal() {
                last.status = status;
            }
        }
    }
}

pub fn write_csv<W: Write>(records: &[RunRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.iter.to_string(),
            r.comm_rounds.to_string(),
            r.grad_eval_rounds.to_string(),
            r.sample_grad_evals.to_string(),
            format!("{:.16e}", r.gap),
            format!("{:.16e}", r.consensus_error),
            format!("{:.16e}", r.avg_grad_norm_sq),
            format!("{:.16e}", r.avg_cost),
            format!("{:.16e}", r.epoch),
            r.status.as_str().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_csv(records: &[RunRecord], path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_csv(records, std::io::BufWriter::new(file))
}

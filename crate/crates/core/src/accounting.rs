//! Cost counters owned by a run context.

use serde::{Deserialize, Serialize};

/// Cumulative communication and computation charged to one run.
///
/// A communication round is one network-wide multiplication by `W` or by the
/// graph Laplacian. A gradient round is one oracle call at every agent;
/// `sample_grad_evals` counts individual per-sample gradients behind those
/// calls.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub comm_rounds: u64,
    pub grad_eval_rounds: u64,
    pub sample_grad_evals: u64,
}

impl Counters {
    pub fn charge_comm(&mut self, rounds: u64) {
        self.comm_rounds += rounds;
    }

    pub fn charge_grad(&mut self, samples: u64) {
        self.grad_eval_rounds += 1;
        self.sample_grad_evals += samples;
    }

    /// Component-wise difference `self - earlier`.
    pub fn since(&self, earlier: &Counters) -> Counters {
        Counters {
            comm_rounds: self.comm_rounds - earlier.comm_rounds,
            grad_eval_rounds: self.grad_eval_rounds - earlier.grad_eval_rounds,
            sample_grad_evals: self.sample_grad_evals - earlier.sample_grad_evals,
        }
    }
}

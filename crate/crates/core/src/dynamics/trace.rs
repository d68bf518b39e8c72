use serde::{Deserialize, Serialize};

use crate::samples::SampleMatrix;

/// Which branch of the two-phase schedule produced a step.
///
/// `Sampling` marks post-burn-in steps that carry no repulsive force
/// (plain Langevin, or a self-repulsive chain with `alpha = 0`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Burnin,
    Repulsive,
    Sampling,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Burnin => "burnin",
            Phase::Repulsive => "repulsive",
            Phase::Sampling => "sampling",
        }
    }

    pub fn parse(s: &str) -> Option<Phase> {
        match s {
            "burnin" => Some(Phase::Burnin),
            "repulsive" => Some(Phase::Repulsive),
            "sampling" => Some(Phase::Sampling),
            _ => None,
        }
    }
}

/// Per-step record for the update `theta_k -> theta_{k+1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub phase: Phase,
    /// Kernel bandwidth, when the repulsive term was evaluated.
    pub bandwidth: Option<f64>,
    pub grad_norm: f64,
    /// `|g(theta_k; window)|`; zero when no repulsive term was evaluated.
    pub velocity_norm: f64,
    /// Norm of the deterministic drift direction, e.g. `|-∇V + alpha g|`.
    pub drift_norm: f64,
}

/// Kept chain states with their iteration indices, plus one record per step.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    dim: usize,
    iters: Vec<usize>,
    states: Vec<f64>,
    steps: Vec<StepRecord>,
}

impl Trace {
    pub(crate) fn new(dim: usize) -> Self {
        Self {
            dim,
            iters: Vec::new(),
            states: Vec::new(),
            steps: Vec::new(),
        }
    }

    pub(crate) fn push_state(&mut self, iter: usize, state: &[f64]) {
        debug_assert!(self.iters.last().is_none_or(|&last| last < iter));
        self.iters.push(iter);
        self.states.extend_from_slice(state);
    }

    pub(crate) fn push_step(&mut self, rec: StepRecord) {
        self.steps.push(rec);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of kept states.
    pub fn len(&self) -> usize {
        self.iters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iters.is_empty()
    }

    pub fn iters(&self) -> &[usize] {
        &self.iters
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i * self.dim..(i + 1) * self.dim]
    }

    pub fn states(&self) -> std::slice::ChunksExact<'_, f64> {
        self.states.chunks_exact(self.dim)
    }

    pub fn steps(&self) -> &[StepRecord] {
        &self.steps
    }

    /// Phase of iteration `k`: the branch that updates `theta_k`.
    /// The final state takes the phase of the last step.
    pub fn phase_of(&self, k: usize) -> Option<Phase> {
        if self.steps.is_empty() {
            return None;
        }
        Some(self.steps[k.min(self.steps.len() - 1)].phase)
    }

    /// Kept states as a matrix.
    pub fn samples(&self) -> SampleMatrix {
        SampleMatrix::new(self.dim, self.states.clone()).expect("trace rows share one dimension")
    }

    /// Kept states with iteration index `>= start`.
    pub fn samples_from(&self, start: usize) -> SampleMatrix {
        let first = self.iters.partition_point(|&k| k < start);
        SampleMatrix::new(self.dim, self.states[first * self.dim..].to_vec())
            .expect("trace rows share one dimension")
    }

    /// Iteration index of the first step tagged `phase`.
    pub fn first_step_in(&self, phase: Phase) -> Option<usize> {
        self.steps.iter().position(|s| s.phase == phase)
    }
}

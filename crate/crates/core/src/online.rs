//! One-dual-step-per-sample topology tracker.
//!
//! Each incoming snapshot updates the running dissimilarity first, then the
//! dual variable takes a single proximal-gradient step against the updated
//! cost, and the estimate is read off the new dual point:
//!
//! ```text
//! e_{1:t}   <- absorb(e_{1:t-1}, x_t)
//! lambda_t  <- dual_step(lambda_{t-1}; e_{1:t})
//! w_hat_t    = max(0, (S^T lambda_t - 2 e_{1:t}) / (2 beta))
//! ```
//!
//! Time and memory per step are `O(N^2)` and independent of `t`.

use crate::dissimilarity::{DissimilarityState, MemoryMode};
use crate::dual::{lipschitz_constant, write_primal, DualInit, Params, StepWorkspace};
use crate::edges::{EdgeVector, PairIndex};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct Tracker {
    index: PairIndex,
    params: Params,
    lipschitz: f64,
    inner_steps: usize,
    dissim: DissimilarityState,
    lambda: Vec<f64>,
    workspace: StepWorkspace,
    estimate: Vec<f64>,
    t: u64,
}

impl Tracker {
    pub fn new(n_nodes: usize, params: Params, mode: MemoryMode, init: DualInit) -> Result<Self> {
        let index = PairIndex::new(n_nodes)?;
        let lipschitz = lipschitz_constant(n_nodes, params.beta())?;
        let lambda = init.build(n_nodes)?.as_slice().to_vec();
        Ok(Self {
            index,
            params,
            lipschitz,
            inner_steps: 1,
            dissim: DissimilarityState::new(n_nodes, mode)?,
            lambda,
            workspace: StepWorkspace::new(n_nodes),
            estimate: vec![0.0; index.n_pairs()],
            t: 0,
        })
    }

    /// Number of dual steps taken per sample. Defaults to one.
    pub fn with_inner_steps(mut self, inner_steps: usize) -> Result<Self> {
        if inner_steps == 0 {
            return Err(Error::InvalidParameter("inner_steps must be at least 1".into()));
        }
        self.inner_steps = inner_steps;
        Ok(self)
    }

    pub fn n_nodes(&self) -> usize {
        self.index.n_nodes()
    }

    pub fn params(&self) -> Params {
        self.params
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// Number of processed samples.
    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn dissimilarity(&self) -> &DissimilarityState {
        &self.dissim
    }

    /// Processes one snapshot and returns the updated estimate.
    pub fn step(&mut self, x: &[f64]) -> Result<EdgeVector> {
        self.step_in_place(x)?;
        Ok(EdgeVector::from_raw(self.index, self.estimate.clone()))
    }

    /// As [`Tracker::step`], borrowing the estimate instead of copying it.
    pub fn step_in_place(&mut self, x: &[f64]) -> Result<&[f64]> {
        self.dissim.absorb_signal(x)?;
        self.advance();
        Ok(&self.estimate)
    }

    /// Processes a precomputed per-snapshot dissimilarity `e_t`.
    pub fn step_dissimilarity(&mut self, e_t: &[f64]) -> Result<&[f64]> {
        self.dissim.absorb(e_t)?;
        self.advance();
        Ok(&self.estimate)
    }

    fn advance(&mut self) {
        let e = self.dissim.running();
        for _ in 0..self.inner_steps {
            self.workspace
                .step(self.params, self.lipschitz, e, &mut self.lambda);
        }
        write_primal(self.params.beta(), e, &self.lambda, &mut self.estimate);
        self.t += 1;
    }

    /// The estimate after the last step.
    pub fn current_estimate(&self) -> Result<EdgeVector> {
        if self.t == 0 {
            return Err(Error::NotStarted);
        }
        Ok(EdgeVector::from_raw(self.index, self.estimate.clone()))
    }

    /// Bytes held on the heap by the tracker's buffers.
    pub fn heap_bytes(&self) -> usize {
        self.dissim.heap_bytes()
            + self.workspace.heap_bytes()
            + (self.lambda.capacity() + self.estimate.capacity()) * std::mem::size_of::<f64>()
    }
}

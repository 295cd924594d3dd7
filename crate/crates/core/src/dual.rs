//! Batch dual proximal-gradient solver.
//!
//! Splitting `d = S w` and dualizing gives the problem
//! `min_lambda F(lambda) + G(lambda)` with
//!
//! * `F(lambda) = max_{w >= 0} <S^T lambda, w> - 2 w^T e - beta ||w||^2`,
//!   smooth with a `(N-1)/beta`-Lipschitz gradient `S v(lambda)`, where
//!   `v(lambda) = max(0, (S^T lambda - 2e) / (2 beta))`;
//! * `G(lambda) = -alpha sum log(lambda_i)` up to a constant, whose prox is
//!   the positive root of a scalar quadratic.
//!
//! One proximal-gradient step with step `1/L` is [`dual_step`]. The online
//! tracker calls the same kernel once per sample; [`solve_batch`] iterates it
//! to convergence.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::edges::{apply_s, apply_s_transpose, pair_count, EdgeVector, PairIndex};
use crate::{check_finite, Error, Result};

/// Default `alpha`, the winner of the F-measure grid search on the
/// stationary ER scenario (see `data/grid_er/best.json` in the CLI crate).
pub const DEFAULT_ALPHA: f64 = 0.3;
/// Default `beta`, from the same grid search as [`DEFAULT_ALPHA`].
pub const DEFAULT_BETA: f64 = 0.01;

/// Regularization weights: `alpha` on the degree log-barrier, `beta` on the
/// squared norm of the weights.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Params {
    alpha: f64,
    beta: f64,
}

impl Params {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        // beta = 0 would make the dual gradient non-Lipschitz
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "beta must be positive, got {beta}"
            )));
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// `L = (N - 1) / beta`, the Lipschitz constant of the dual gradient.
pub fn lipschitz_constant(n_nodes: usize, beta: f64) -> Result<f64> {
    if n_nodes < 2 {
        return Err(Error::InvalidParameter(format!(
            "a graph needs at least 2 nodes, got {n_nodes}"
        )));
    }
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "beta must be positive, got {beta}"
        )));
    }
    Ok((n_nodes as f64 - 1.0) / beta)
}

/// A fixed instance of the problem: weights plus the dissimilarity vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    index: PairIndex,
    params: Params,
    e: Vec<f64>,
}

impl Objective {
    pub fn new(n_nodes: usize, params: Params, e: Vec<f64>) -> Result<Self> {
        let index = PairIndex::new(n_nodes)?;
        if e.len() != index.n_pairs() {
            return Err(Error::DimensionMismatch {
                expected: index.n_pairs(),
                found: e.len(),
            });
        }
        check_finite(&e)?;
        if let Some(k) = e.iter().position(|v| *v < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "dissimilarity entry {k} is negative"
            )));
        }
        Ok(Self { index, params, e })
    }

    pub fn n_nodes(&self) -> usize {
        self.index.n_nodes()
    }

    pub fn params(&self) -> Params {
        self.params
    }

    pub fn e(&self) -> &[f64] {
        &self.e
    }

    pub fn lipschitz(&self) -> f64 {
        (self.n_nodes() as f64 - 1.0) / self.params.beta
    }

    fn check_lambda(&self, lambda: &[f64]) -> Result<()> {
        if lambda.len() != self.n_nodes() {
            return Err(Error::DimensionMismatch {
                expected: self.n_nodes(),
                found: lambda.len(),
            });
        }
        check_finite(lambda)
    }

    /// Primal cost `2 w^T e + beta ||w||^2 - alpha sum log(S w)`.
    ///
    /// Infinite when some degree is not strictly positive.
    pub fn primal_value(&self, w: &EdgeVector) -> Result<f64> {
        if w.len() != self.e.len() {
            return Err(Error::DimensionMismatch {
                expected: self.e.len(),
                found: w.len(),
            });
        }
        Ok(primal_value(self.params, &self.e, w.as_slice()))
    }

    /// Dual cost `F(lambda) + G(lambda)` without the additive constant of `G`.
    ///
    /// Infinite unless `lambda > 0`.
    pub fn dual_value(&self, lambda: &[f64]) -> Result<f64> {
        self.check_lambda(lambda)?;
        let mut st = vec![0.0; self.e.len()];
        apply_s_transpose(lambda, &mut st);
        let beta = self.params.beta;
        let conj: f64 = st
            .iter()
            .zip(&self.e)
            .map(|(s, e)| {
                let r = (s - 2.0 * e).max(0.0);
                r * r / (4.0 * beta)
            })
            .sum();
        if lambda.iter().any(|l| *l <= 0.0) {
            return Ok(f64::INFINITY);
        }
        let barrier: f64 = lambda.iter().map(|l| l.ln()).sum();
        Ok(conj - self.params.alpha * barrier)
    }

    /// Gradient of the smooth dual part, `S v(lambda)`.
    pub fn dual_gradient(&self, lambda: &[f64]) -> Result<Vec<f64>> {
        let v = primal_from_dual(&DualState::from_vec(lambda.to_vec())?, self)?;
        Ok(v.degrees())
    }
}

pub(crate) fn primal_value(params: Params, e: &[f64], w: &[f64]) -> f64 {
    let n = crate::edges::nodes_from_pair_count(w.len()).expect("valid pair count");
    let mut d = vec![0.0; n];
    apply_s(n, w, &mut d);
    if d.iter().any(|v| *v <= 0.0) {
        return f64::INFINITY;
    }
    let lin: f64 = w.iter().zip(e).map(|(w, e)| 2.0 * w * e + params.beta * w * w).sum();
    lin - params.alpha * d.iter().map(|v| v.ln()).sum::<f64>()
}

/// Multipliers on the degree constraint `d = S w`, one per node.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
#[serde(transparent)]
pub struct DualState {
    lambda: Vec<f64>,
}

impl DualState {
    pub fn ones(n_nodes: usize) -> Self {
        Self {
            lambda: vec![1.0; n_nodes],
        }
    }

    /// Entries drawn uniformly from `[0, 2)`, reproducible for a seed.
    pub fn random(n_nodes: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            lambda: (0..n_nodes).map(|_| 2.0 * rng.random::<f64>()).collect(),
        }
    }

    pub fn from_vec(lambda: Vec<f64>) -> Result<Self> {
        check_finite(&lambda)?;
        Ok(Self { lambda })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.lambda
    }

    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }
}

/// How the dual variable starts.
#[derive(Debug, Clone, Default, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DualInit {
    #[default]
    Ones,
    Random { seed: u64 },
    Given(Vec<f64>),
}

impl DualInit {
    pub fn build(&self, n_nodes: usize) -> Result<DualState> {
        match self {
            DualInit::Ones => Ok(DualState::ones(n_nodes)),
            DualInit::Random { seed } => Ok(DualState::random(n_nodes, *seed)),
            DualInit::Given(l) => {
                if l.len() != n_nodes {
                    return Err(Error::DimensionMismatch {
                        expected: n_nodes,
                        found: l.len(),
                    });
                }
                DualState::from_vec(l.clone())
            }
        }
    }
}

/// Writes `v = max(0, (S^T lambda - 2e) / (2 beta))` into `v`.
pub(crate) fn write_primal(beta: f64, e: &[f64], lambda: &[f64], v: &mut [f64]) {
    apply_s_transpose(lambda, v);
    let scale = 1.0 / (2.0 * beta);
    for (vk, ek) in v.iter_mut().zip(e) {
        *vk = ((*vk - 2.0 * ek) * scale).max(0.0);
    }
}

/// `u = (m + sqrt(m^2 + 4 alpha L)) / 2` without cancellation for `m < 0`.
#[inline]
pub(crate) fn aux_degree(m: f64, alpha_l: f64) -> f64 {
    let root = (m * m + 4.0 * alpha_l).sqrt();
    if m >= 0.0 {
        0.5 * (m + root)
    } else {
        2.0 * alpha_l / (root - m)
    }
}

/// Scratch buffers for one dual step; sized once per problem.
#[derive(Debug, Clone)]
pub(crate) struct StepWorkspace {
    pub(crate) v: Vec<f64>,
    pub(crate) sv: Vec<f64>,
}

impl StepWorkspace {
    pub(crate) fn new(n_nodes: usize) -> Self {
        Self {
            v: vec![0.0; pair_count(n_nodes)],
            sv: vec![0.0; n_nodes],
        }
    }

    /// One proximal-gradient step on the dual, in place.
    ///
    /// On return `self.v` holds `v(lambda_old)`; `lambda` holds
    /// `lambda_old - (S v - u) / L`.
    pub(crate) fn step(&mut self, params: Params, lipschitz: f64, e: &[f64], lambda: &mut [f64]) {
        let n = lambda.len();
        write_primal(params.beta, e, lambda, &mut self.v);
        apply_s(n, &self.v, &mut self.sv);
        let alpha_l = params.alpha * lipschitz;
        for (l, sv) in lambda.iter_mut().zip(&self.sv) {
            let m = sv - lipschitz * *l;
            let u = aux_degree(m, alpha_l);
            *l -= (sv - u) / lipschitz;
        }
    }

    pub(crate) fn heap_bytes(&self) -> usize {
        (self.v.capacity() + self.sv.capacity()) * std::mem::size_of::<f64>()
    }
}

/// The primal point `v(lambda) = max(0, (S^T lambda - 2e) / (2 beta))`
/// attaining the maximum that defines `F(lambda)`.
pub fn primal_from_dual(lambda: &DualState, obj: &Objective) -> Result<EdgeVector> {
    obj.check_lambda(lambda.as_slice())?;
    let mut v = vec![0.0; obj.e.len()];
    write_primal(obj.params.beta, &obj.e, lambda.as_slice(), &mut v);
    Ok(EdgeVector::from_raw(obj.index, v))
}

/// One step `lambda' = prox_{G/L}(lambda - grad F(lambda) / L)`.
///
/// Returns the new dual point and `v(lambda)`, the primal point at the old
/// dual point.
pub fn dual_step(lambda: &DualState, obj: &Objective) -> Result<(DualState, EdgeVector)> {
    obj.check_lambda(lambda.as_slice())?;
    let mut ws = StepWorkspace::new(obj.n_nodes());
    let mut next = lambda.lambda.clone();
    ws.step(obj.params, obj.lipschitz(), &obj.e, &mut next);
    Ok((
        DualState { lambda: next },
        EdgeVector::from_raw(obj.index, ws.v),
    ))
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SolveOptions {
    /// Relative change threshold on both the primal and dual iterates.
    pub tol: f64,
    pub max_iter: usize,
    pub init: DualInit,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 50_000,
            init: DualInit::Ones,
        }
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct SolveReport {
    #[serde(skip)]
    pub w_star: EdgeVector,
    pub lambda_final: DualState,
    pub iterations: usize,
    /// `||v_k - v_{k-1}|| / max(1, ||v_{k-1}||)` per iteration.
    pub primal_change_history: Vec<f64>,
    pub converged: bool,
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn rel_change(new: &[f64], old: &[f64]) -> f64 {
    let diff = new
        .iter()
        .zip(old)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    diff / norm(old).max(1.0)
}

/// Iterates [`dual_step`] until the relative change of both `v` and `lambda`
/// drops below `tol`, or `max_iter` steps were taken.
///
/// Running out of iterations is reported through `converged = false`.
pub fn solve_batch(obj: &Objective, opts: &SolveOptions) -> Result<SolveReport> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {}",
            opts.tol
        )));
    }
    let n = obj.n_nodes();
    let mut lambda = opts.init.build(n)?.lambda;
    let lipschitz = obj.lipschitz();
    let mut ws = StepWorkspace::new(n);
    let mut prev_v = vec![0.0; obj.e.len()];
    write_primal(obj.params.beta, &obj.e, &lambda, &mut prev_v);
    let mut prev_lambda = lambda.clone();

    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        ws.step(obj.params, lipschitz, &obj.e, &mut lambda);
        iterations += 1;
        // v at the new dual point, which the next step would compute first
        write_primal(obj.params.beta, &obj.e, &lambda, &mut ws.v);
        let dv = rel_change(&ws.v, &prev_v);
        let dl = rel_change(&lambda, &prev_lambda);
        history.push(dv);
        if dv <= opts.tol && dl <= opts.tol {
            converged = true;
            break;
        }
        prev_v.copy_from_slice(&ws.v);
        prev_lambda.copy_from_slice(&lambda);
    }
    write_primal(obj.params.beta, &obj.e, &lambda, &mut ws.v);
    Ok(SolveReport {
        w_star: EdgeVector::from_raw(obj.index, ws.v),
        lambda_final: DualState { lambda },
        iterations,
        primal_change_history: history,
        converged,
    })
}

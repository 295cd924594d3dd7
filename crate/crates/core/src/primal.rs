//! Online projected-gradient tracker working directly on the edge weights.
//!
//! Used as the comparison baseline for the dual tracker. It consumes the same
//! dissimilarity stream and costs the same `O(N^2)` per sample: one `S^T` and
//! one `S` application.
//!
//! Each sample takes one step on the smooth part
//! `h(w) = 2 e^T w + beta ||w||^2 - alpha 1^T log(S w)`
//! followed by clamping at zero. A step that would push some degree to or
//! below `degree_floor` is retried with half the step size, up to
//! `max_backtracks` times; after that the weights are left as they were.

use crate::dissimilarity::{DissimilarityState, MemoryMode};
use crate::dual::Params;
use crate::edges::{apply_s, apply_s_transpose, EdgeVector, PairIndex};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PrimalOptions {
    /// Gradient step; `None` means `beta / (N - 1)`.
    pub step_size: Option<f64>,
    pub degree_floor: f64,
    pub max_backtracks: usize,
    /// Every weight starts at this value.
    pub initial_weight: f64,
}

impl Default for PrimalOptions {
    fn default() -> Self {
        Self {
            step_size: None,
            degree_floor: 1e-9,
            max_backtracks: 50,
            initial_weight: 1.0,
        }
    }
}

/// What happened to the weights during one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepOutcome {
    pub accepted: bool,
    /// Number of step-size halvings needed.
    pub halvings: usize,
}

/// Gradient of `h` at `w`. Requires strictly positive degrees.
pub fn smooth_gradient(params: Params, e: &[f64], w: &[f64]) -> Result<Vec<f64>> {
    let n = crate::edges::nodes_from_pair_count(w.len()).ok_or(Error::DimensionMismatch {
        expected: e.len(),
        found: w.len(),
    })?;
    if e.len() != w.len() {
        return Err(Error::DimensionMismatch {
            expected: w.len(),
            found: e.len(),
        });
    }
    let mut d = vec![0.0; n];
    let mut g = vec![0.0; w.len()];
    apply_s(n, w, &mut d);
    if d.iter().any(|v| *v <= 0.0) {
        return Err(Error::InvalidParameter("degrees must be strictly positive".into()));
    }
    write_gradient(params, e, w, &mut d, &mut g);
    Ok(g)
}

// `d` holds S w on entry and is overwritten with 1/(S w).
fn write_gradient(params: Params, e: &[f64], w: &[f64], d: &mut [f64], g: &mut [f64]) {
    d.iter_mut().for_each(|v| *v = 1.0 / *v);
    apply_s_transpose(d, g);
    let (alpha, beta) = (params.alpha(), params.beta());
    for ((gk, ek), wk) in g.iter_mut().zip(e).zip(w) {
        *gk = 2.0 * ek + 2.0 * beta * wk - alpha * *gk;
    }
}

#[derive(Debug, Clone)]
pub struct PrimalTracker {
    index: PairIndex,
    params: Params,
    step_size: f64,
    options: PrimalOptions,
    dissim: DissimilarityState,
    w: Vec<f64>,
    grad: Vec<f64>,
    candidate: Vec<f64>,
    degrees: Vec<f64>,
    t: u64,
    rejected: u64,
}

impl PrimalTracker {
    pub fn new(n_nodes: usize, params: Params, mode: MemoryMode, options: PrimalOptions) -> Result<Self> {
        let index = PairIndex::new(n_nodes)?;
        let step_size = options
            .step_size
            .unwrap_or(params.beta() / (n_nodes as f64 - 1.0));
        if !(step_size.is_finite() && step_size > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "step size must be positive, got {step_size}"
            )));
        }
        if !(options.initial_weight.is_finite() && options.initial_weight > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "initial weight must be positive, got {}",
                options.initial_weight
            )));
        }
        if !(options.degree_floor >= 0.0) {
            return Err(Error::InvalidParameter("degree floor must be nonnegative".into()));
        }
        let m = index.n_pairs();
        Ok(Self {
            index,
            params,
            step_size,
            options,
            dissim: DissimilarityState::new(n_nodes, mode)?,
            w: vec![options.initial_weight; m],
            grad: vec![0.0; m],
            candidate: vec![0.0; m],
            degrees: vec![0.0; n_nodes],
            t: 0,
            rejected: 0,
        })
    }

    pub fn step_size(&self) -> f64 {
        self.step_size
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    /// Steps whose backtracking budget ran out.
    pub fn rejected_steps(&self) -> u64 {
        self.rejected
    }

    pub fn dissimilarity(&self) -> &DissimilarityState {
        &self.dissim
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn current_estimate(&self) -> EdgeVector {
        EdgeVector::from_raw(self.index, self.w.clone())
    }

    /// Absorbs `x` and takes one projected-gradient step.
    ///
    /// A rejected step keeps the weights but the sample stays absorbed.
    pub fn step(&mut self, x: &[f64]) -> Result<StepOutcome> {
        self.dissim.absorb_signal(x)?;
        Ok(self.advance())
    }

    pub fn step_dissimilarity(&mut self, e_t: &[f64]) -> Result<StepOutcome> {
        self.dissim.absorb(e_t)?;
        Ok(self.advance())
    }

    fn advance(&mut self) -> StepOutcome {
        let n = self.index.n_nodes();
        let e = self.dissim.running();
        apply_s(n, &self.w, &mut self.degrees);
        write_gradient(self.params, e, &self.w, &mut self.degrees, &mut self.grad);

        let mut eta = self.step_size;
        let mut outcome = StepOutcome {
            accepted: false,
            halvings: 0,
        };
        loop {
            for ((c, w), g) in self.candidate.iter_mut().zip(&self.w).zip(&self.grad) {
                *c = (w - eta * g).max(0.0);
            }
            apply_s(n, &self.candidate, &mut self.degrees);
            let feasible = self
                .degrees
                .iter()
                .all(|d| *d > self.options.degree_floor);
            if feasible {
                std::mem::swap(&mut self.w, &mut self.candidate);
                outcome.accepted = true;
                break;
            }
            if outcome.halvings == self.options.max_backtracks {
                self.rejected += 1;
                break;
            }
            eta *= 0.5;
            outcome.halvings += 1;
        }
        self.t += 1;
        outcome
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dual::{primal_value, solve_batch, Objective, SolveOptions};
    use crate::edges::pair_count;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rng_vec(seed: u64, len: usize, lo: f64, hi: f64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..len).map(|_| lo + (hi - lo) * rng.random::<f64>()).collect()
    }

    #[test]
    fn default_step_is_reciprocal_lipschitz() {
        let p = Params::new(1.0, 2.0).unwrap();
        let tr = PrimalTracker::new(5, p, MemoryMode::Infinite, PrimalOptions::default()).unwrap();
        assert_eq!(tr.step_size(), 0.5);
        assert!(PrimalTracker::new(
            5,
            p,
            MemoryMode::Infinite,
            PrimalOptions {
                step_size: Some(0.0),
                ..Default::default()
            }
        )
        .is_err());
    }

    #[test]
    fn gradient_matches_central_differences() {
        let n = 6;
        let p = Params::new(0.8, 0.6).unwrap();
        for seed in 0..20 {
            let e = rng_vec(seed, pair_count(n), 0.0, 2.0);
            let w = rng_vec(seed + 100, pair_count(n), 0.1, 1.5);
            let g = smooth_gradient(p, &e, &w).unwrap();
            let h = 1e-6;
            for k in 0..w.len() {
                let mut wp = w.clone();
                let mut wm = w.clone();
                wp[k] += h;
                wm[k] -= h;
                let fd = (primal_value(p, &e, &wp) - primal_value(p, &e, &wm)) / (2.0 * h);
                let rel = (fd - g[k]).abs() / g[k].abs().max(1.0);
                assert!(rel <= 1e-5, "seed {seed} k {k}: {fd} vs {}", g[k]);
            }
        }
        assert!(smooth_gradient(p, &[0.0; 15], &[0.0; 15]).is_err());
    }

    #[test]
    fn optimum_is_stationary() {
        let n = 5;
        let p = Params::new(1.0, 0.5).unwrap();
        let e = rng_vec(8, pair_count(n), 0.0, 1.5);
        let obj = Objective::new(n, p, e.clone()).unwrap();
        let star = solve_batch(&obj, &SolveOptions { tol: 1e-14, max_iter: 500_000, ..Default::default() }).unwrap();
        let mut tr = PrimalTracker::new(n, p, MemoryMode::Infinite, PrimalOptions::default()).unwrap();
        tr.w.copy_from_slice(star.w_star.as_slice());
        let out = tr.step_dissimilarity(&e).unwrap();
        assert!(out.accepted);
        let moved: f64 = tr
            .weights()
            .iter()
            .zip(star.w_star.as_slice())
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(moved <= 1e-6, "{moved}");
    }

    #[test]
    fn huge_step_triggers_backtracking() {
        let n = 4;
        let p = Params::new(1.0, 1.0).unwrap();
        let mut tr = PrimalTracker::new(
            n,
            p,
            MemoryMode::Infinite,
            PrimalOptions {
                step_size: Some(1e6),
                ..Default::default()
            },
        )
        .unwrap();
        let out = tr.step_dissimilarity(&[50.0; 6]).unwrap();
        assert!(out.accepted);
        assert!(out.halvings > 0);
        assert!(tr.current_estimate().degrees().iter().all(|d| *d > 1e-9));
    }

    #[test]
    fn exhausted_backtracking_rejects_the_step() {
        let p = Params::new(1.0, 1.0).unwrap();
        let mut tr = PrimalTracker::new(
            3,
            p,
            MemoryMode::Infinite,
            PrimalOptions {
                step_size: Some(1e6),
                max_backtracks: 2,
                ..Default::default()
            },
        )
        .unwrap();
        let before = tr.weights().to_vec();
        let out = tr.step_dissimilarity(&[50.0; 3]).unwrap();
        assert_eq!(out, StepOutcome { accepted: false, halvings: 2 });
        assert_eq!(tr.weights(), &before[..]);
        assert_eq!(tr.rejected_steps(), 1);
        assert_eq!(tr.dissimilarity().count(), 1);
    }

    #[test]
    fn objective_decreases_with_frozen_data() {
        for seed in 0..10u64 {
            let n = 3 + (seed as usize % 6);
            let p = Params::new(1.0, 1.0).unwrap();
            let e = rng_vec(seed, pair_count(n), 0.0, 2.0);
            let mut tr = PrimalTracker::new(
                n,
                p,
                MemoryMode::Infinite,
                PrimalOptions {
                    step_size: Some(0.01),
                    ..Default::default()
                },
            )
            .unwrap();
            let mut prev = primal_value(p, &e, tr.weights());
            for _ in 0..200 {
                let out = tr.step_dissimilarity(&e).unwrap();
                assert!(out.accepted);
                let min_deg = tr.current_estimate().degrees().into_iter().fold(f64::INFINITY, f64::min);
                assert!(min_deg > 1e-9);
                let cur = primal_value(p, &e, tr.weights());
                assert!(cur <= prev + 1e-12 * prev.abs().max(1.0), "seed {seed}: {cur} > {prev}");
                prev = cur;
            }
        }
    }
}

//! Running pairwise dissimilarity `e_{1:t}` over a stream of graph signals.
//!
//! Each snapshot `x_t` contributes `e_t[k] = (x_t[i] - x_t[j])^2` for the pair
//! `(i, j)` at `k`. Snapshots are folded in one at a time, either as a plain
//! running mean (static graphs) or as an exponentially weighted moving average
//! with discount `gamma` (drifting graphs).

use crate::edges::{pair_count, PairIndex};
use crate::{check_finite, Error, Result};

/// Discount used when none is configured.
pub const DEFAULT_GAMMA: f64 = 0.002;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum MemoryMode {
    /// Arithmetic mean of every absorbed snapshot.
    Infinite,
    /// `e <- (1 - gamma) e + gamma e_t`, `gamma` in `(0, 1)`.
    ///
    /// With `debias` the gain at step `t` is `gamma / (1 - (1 - gamma)^t)`,
    /// so the state is always the normalized discounted average of the
    /// samples seen so far. Without it the first sample seeds the state and
    /// the plain recursion runs from there, which leaves that sample with
    /// weight `(1 - gamma)^(t-1)`.
    Ewma {
        gamma: f64,
        #[serde(default = "default_debias")]
        debias: bool,
    },
}

fn default_debias() -> bool {
    true
}

impl MemoryMode {
    /// Debiased EWMA with discount `gamma`.
    pub fn ewma(gamma: f64) -> Result<Self> {
        let mode = MemoryMode::Ewma { gamma, debias: true };
        mode.validate()?;
        Ok(mode)
    }

    /// EWMA seeded with the first sample and run with a constant gain.
    pub fn ewma_seeded(gamma: f64) -> Result<Self> {
        let mode = MemoryMode::Ewma { gamma, debias: false };
        mode.validate()?;
        Ok(mode)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            MemoryMode::Infinite => Ok(()),
            MemoryMode::Ewma { gamma, .. } if gamma > 0.0 && gamma < 1.0 => Ok(()),
            MemoryMode::Ewma { gamma, .. } => Err(Error::InvalidParameter(format!(
                "discount factor must lie in (0, 1), got {gamma}"
            ))),
        }
    }
}

/// Squared differences of one snapshot over all node pairs.
pub fn snapshot_dissimilarity(x: &[f64]) -> Result<Vec<f64>> {
    PairIndex::new(x.len())?;
    check_finite(x)?;
    let mut out = vec![0.0; pair_count(x.len())];
    write_snapshot_dissimilarity(x, &mut out);
    Ok(out)
}

pub(crate) fn write_snapshot_dissimilarity(x: &[f64], out: &mut [f64]) {
    let mut k = 0;
    for (i, xi) in x.iter().enumerate() {
        for xj in &x[i + 1..] {
            let d = xi - xj;
            out[k] = d * d;
            k += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DissimilarityState {
    n_nodes: usize,
    mode: MemoryMode,
    count: u64,
    running: Vec<f64>,
    // scratch for the current snapshot, reused across steps
    scratch: Vec<f64>,
}

impl DissimilarityState {
    pub fn new(n_nodes: usize, mode: MemoryMode) -> Result<Self> {
        let index = PairIndex::new(n_nodes)?;
        mode.validate()?;
        Ok(Self {
            n_nodes,
            mode,
            count: 0,
            running: vec![0.0; index.n_pairs()],
            scratch: vec![0.0; index.n_pairs()],
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn mode(&self) -> MemoryMode {
        self.mode
    }

    /// Number of absorbed snapshots.
    pub fn count(&self) -> u64 {
        self.count
    }

    /// The current `e_{1:t}`. All zeros before the first absorb.
    pub fn running(&self) -> &[f64] {
        &self.running
    }

    /// Folds a precomputed per-snapshot dissimilarity into the running value.
    pub fn absorb(&mut self, e_t: &[f64]) -> Result<()> {
        if e_t.len() != self.running.len() {
            return Err(Error::DimensionMismatch {
                expected: self.running.len(),
                found: e_t.len(),
            });
        }
        check_finite(e_t)?;
        if let Some(k) = e_t.iter().position(|v| *v < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "dissimilarity entry {k} is negative"
            )));
        }
        fold(self.mode, self.count, &mut self.running, e_t);
        self.count += 1;
        Ok(())
    }

    /// Computes the snapshot's dissimilarity and absorbs it.
    pub fn absorb_signal(&mut self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_nodes {
            return Err(Error::DimensionMismatch {
                expected: self.n_nodes,
                found: x.len(),
            });
        }
        check_finite(x)?;
        write_snapshot_dissimilarity(x, &mut self.scratch);
        fold(self.mode, self.count, &mut self.running, &self.scratch);
        self.count += 1;
        Ok(())
    }

    pub(crate) fn heap_bytes(&self) -> usize {
        (self.running.capacity() + self.scratch.capacity()) * std::mem::size_of::<f64>()
    }
}

fn fold(mode: MemoryMode, count: u64, running: &mut [f64], e_t: &[f64]) {
    if count == 0 {
        // both modes start from the first sample
        running.copy_from_slice(e_t);
        return;
    }
    let t = (count + 1) as f64;
    let gain = match mode {
        // (e_t + (t-1) r) / t
        MemoryMode::Infinite => 1.0 / t,
        MemoryMode::Ewma { gamma, debias: false } => gamma,
        // 1 - (1 - gamma)^t, without cancellation for small gamma
        MemoryMode::Ewma { gamma, debias: true } => gamma / -(t * (-gamma).ln_1p()).exp_m1(),
    };
    // incremental form keeps r = e_t an exact fixed point
    for (r, e) in running.iter_mut().zip(e_t) {
        *r += gain * (e - *r);
    }
}

/// Pairwise squared row distances `||x_i - x_j||^2` of a node-by-time matrix
/// given as rows of snapshots (one `Vec` per time sample).
pub fn batch_dissimilarity(snapshots: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = snapshots.first().map(Vec::len).unwrap_or(0);
    let mut total = vec![0.0; pair_count(n)];
    let mut scratch = vec![0.0; total.len()];
    PairIndex::new(n)?;
    for x in snapshots {
        if x.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: x.len(),
            });
        }
        check_finite(x)?;
        write_snapshot_dissimilarity(x, &mut scratch);
        total.iter_mut().zip(&scratch).for_each(|(a, b)| *a += b);
    }
    Ok(total)
}

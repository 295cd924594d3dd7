//! Seeded ground-truth graphs and smooth Gaussian signal streams.
//!
//! Graphs are binary (0/1 weights) draws from an Erdős–Rényi or stochastic
//! block model, redrawn until connected. A scenario may switch topology at
//! given times; each later segment rewires a fraction of the previous
//! segment's edges while keeping the edge count.
//!
//! Signals follow `x ~ N(0, L^+ + sigma^2 I)` where `L^+` is the
//! pseudoinverse of the Laplacian of the current graph.

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::edges::{EdgeVector, PairIndex};
use crate::{Error, Result};

/// Attempts allowed when drawing a connected graph.
pub const MAX_GRAPH_RETRIES: usize = 100;

/// Eigenvalues below this fraction of the largest count as zero.
const EIGEN_REL_THRESHOLD: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphModel {
    Er { p: f64 },
    Sbm { blocks: Vec<usize>, p_in: f64, p_out: f64 },
}

impl GraphModel {
    fn validate(&self, n_nodes: usize) -> Result<()> {
        let check_p = |name: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must lie in [0, 1], got {p}")))
            }
        };
        match self {
            GraphModel::Er { p } => {
                check_p("p", *p)?;
                if *p == 0.0 {
                    return Err(Error::InvalidParameter(
                        "an empty ER model can never be connected".into(),
                    ));
                }
            }
            GraphModel::Sbm { blocks, p_in, p_out } => {
                check_p("p_in", *p_in)?;
                check_p("p_out", *p_out)?;
                let total: usize = blocks.iter().sum();
                if total != n_nodes || blocks.contains(&0) {
                    return Err(Error::InvalidParameter(format!(
                        "block sizes {blocks:?} must be positive and sum to {n_nodes}"
                    )));
                }
                if blocks.len() > 1 && *p_out == 0.0 {
                    return Err(Error::InvalidParameter(
                        "p_out = 0 leaves the blocks disconnected".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Connection probability of the pair `(i, j)`.
    fn probability(&self, block_of: &[usize], i: usize, j: usize) -> f64 {
        match self {
            GraphModel::Er { p } => *p,
            GraphModel::Sbm { p_in, p_out, .. } => {
                if block_of[i] == block_of[j] {
                    *p_in
                } else {
                    *p_out
                }
            }
        }
    }

    fn block_labels(&self, n_nodes: usize) -> Vec<usize> {
        match self {
            GraphModel::Er { .. } => vec![0; n_nodes],
            GraphModel::Sbm { blocks, .. } => blocks
                .iter()
                .enumerate()
                .flat_map(|(b, size)| std::iter::repeat_n(b, *size))
                .collect(),
        }
    }
}

/// A fully seeded description of a ground-truth graph sequence and the
/// signals observed on it.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GraphScenario {
    pub model: GraphModel,
    pub n_nodes: usize,
    /// Last time index of every segment but the final one. A switch at 1000
    /// means samples `1..=1000` come from the first graph.
    pub switch_times: Vec<u64>,
    pub resample_fraction: f64,
    pub noise_sigma: f64,
    pub horizon: u64,
    pub seed: u64,
}

impl GraphScenario {
    /// Static ER graph, N = 100, p = 0.2, 2000 samples.
    pub fn stationary_er(seed: u64) -> Self {
        Self {
            model: GraphModel::Er { p: 0.2 },
            n_nodes: 100,
            switch_times: vec![],
            resample_fraction: 0.1,
            noise_sigma: 0.01,
            horizon: 2000,
            seed,
        }
    }

    /// ER graph, N = 50, p = 0.2, rewired at t = 1000 of 2000.
    pub fn dynamic_er(seed: u64) -> Self {
        Self {
            n_nodes: 50,
            switch_times: vec![1000],
            ..Self::stationary_er(seed)
        }
    }

    /// Two equal blocks, N = 100, p_in = 0.3, p_out = 0.05, rewired at t = 1000.
    pub fn dynamic_sbm(seed: u64) -> Self {
        Self {
            model: GraphModel::Sbm {
                blocks: vec![50, 50],
                p_in: 0.3,
                p_out: 0.05,
            },
            n_nodes: 100,
            switch_times: vec![1000],
            ..Self::stationary_er(seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        PairIndex::new(self.n_nodes)?;
        self.model.validate(self.n_nodes)?;
        if !(0.0..=1.0).contains(&self.resample_fraction) {
            return Err(Error::InvalidParameter(format!(
                "resample_fraction must lie in [0, 1], got {}",
                self.resample_fraction
            )));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "noise_sigma must be nonnegative, got {}",
                self.noise_sigma
            )));
        }
        if self.horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be positive".into()));
        }
        let mut prev = 0;
        for &s in &self.switch_times {
            if s <= prev || s >= self.horizon {
                return Err(Error::InvalidParameter(format!(
                    "switch times must increase strictly within (0, {}), got {:?}",
                    self.horizon, self.switch_times
                )));
            }
            prev = s;
        }
        Ok(())
    }

    pub fn n_segments(&self) -> usize {
        self.switch_times.len() + 1
    }

    /// Inclusive `(first, last)` time index of each segment, 1-based.
    pub fn segments(&self) -> Vec<(u64, u64)> {
        let mut out = Vec::with_capacity(self.n_segments());
        let mut start = 1;
        for &s in &self.switch_times {
            out.push((start, s));
            start = s + 1;
        }
        out.push((start, self.horizon));
        out
    }

    /// Segment containing time `t` (1-based).
    pub fn segment_of(&self, t: u64) -> usize {
        self.switch_times.iter().filter(|s| t > **s).count()
    }

    /// The ground-truth graph of every segment, in order.
    pub fn graphs(&self) -> Result<Vec<EdgeVector>> {
        self.validate()?;
        let mut graphs = Vec::with_capacity(self.n_segments());
        let first = draw_connected(&self.model, self.n_nodes, derive_seed(self.seed, 0))?;
        graphs.push(first);
        for k in 1..self.n_segments() {
            let next = resample_edges(
                &graphs[k - 1],
                self.resample_fraction,
                derive_seed(self.seed, k as u64),
            )?;
            graphs.push(next);
        }
        Ok(graphs)
    }

    /// Builds the signal stream for this scenario.
    pub fn stream(&self) -> Result<SignalStream> {
        let graphs = self.graphs()?;
        let samplers = graphs
            .iter()
            .map(|g| SignalSampler::new(g, self.noise_sigma))
            .collect::<Result<Vec<_>>>()?;
        Ok(SignalStream {
            scenario: self.clone(),
            graphs,
            samplers,
            signal_seed: derive_seed(self.seed, u64::MAX),
        })
    }
}

/// splitmix64 mixing of a base seed and a tag.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The ground truth of `scenario` for one segment.
pub fn generate_graph(scenario: &GraphScenario, segment_index: usize) -> Result<EdgeVector> {
    if segment_index >= scenario.n_segments() {
        return Err(Error::InvalidParameter(format!(
            "segment {segment_index} out of range, scenario has {}",
            scenario.n_segments()
        )));
    }
    Ok(scenario.graphs()?.swap_remove(segment_index))
}

/// One independent draw of the model, connected or not.
pub fn draw_graph(model: &GraphModel, n_nodes: usize, rng: &mut impl Rng) -> Result<EdgeVector> {
    model.validate(n_nodes)?;
    let index = PairIndex::new(n_nodes)?;
    let blocks = model.block_labels(n_nodes);
    let weights = index
        .pairs()
        .map(|(i, j)| {
            let p = model.probability(&blocks, i, j);
            if rng.random::<f64>() < p {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    EdgeVector::new(n_nodes, weights)
}

fn draw_connected(model: &GraphModel, n_nodes: usize, seed: u64) -> Result<EdgeVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_GRAPH_RETRIES {
        let g = draw_graph(model, n_nodes, &mut rng)?;
        if is_connected(&g, 0.0) {
            return Ok(g);
        }
    }
    Err(Error::Disconnected(MAX_GRAPH_RETRIES))
}

/// Whether the graph restricted to edges heavier than `threshold` is connected.
pub fn is_connected(w: &EdgeVector, threshold: f64) -> bool {
    component_labels(w, threshold).iter().all(|c| *c == 0)
}

/// Connected component id of every node (ids in order of first appearance).
pub fn component_labels(w: &EdgeVector, threshold: f64) -> Vec<usize> {
    let n = w.n_nodes();
    let adj = w.to_adjacency();
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    let mut stack = Vec::new();
    for root in 0..n {
        if label[root] != usize::MAX {
            continue;
        }
        label[root] = next;
        stack.push(root);
        while let Some(u) = stack.pop() {
            for v in 0..n {
                if label[v] == usize::MAX && adj[u * n + v] > threshold {
                    label[v] = next;
                    stack.push(v);
                }
            }
        }
        next += 1;
    }
    label
}

fn moved_count(fraction: f64, n_edges: usize) -> usize {
    // tolerate representation error such as 0.1 * 30 = 3.0000000000000004
    ((fraction * n_edges as f64) - 1e-9).ceil().max(0.0) as usize
}

/// Moves `ceil(fraction * |E|)` edges of a binary graph: removes that many
/// existing edges and adds as many previously absent pairs, both uniformly at
/// random. The result is redrawn until connected.
pub fn resample_edges(w: &EdgeVector, fraction: f64, seed: u64) -> Result<EdgeVector> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidParameter(format!(
            "fraction must lie in [0, 1], got {fraction}"
        )));
    }
    let present: Vec<usize> = (0..w.len()).filter(|k| w.as_slice()[*k] > 0.0).collect();
    let absent: Vec<usize> = (0..w.len()).filter(|k| w.as_slice()[*k] <= 0.0).collect();
    let k = moved_count(fraction, present.len());
    if k == 0 {
        return Ok(w.clone());
    }
    if absent.len() < k {
        return Err(Error::InvalidParameter(format!(
            "cannot move {k} edges: only {} absent pairs",
            absent.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_GRAPH_RETRIES {
        let mut weights = w.as_slice().to_vec();
        for i in sample(&mut rng, present.len(), k) {
            weights[present[i]] = 0.0;
        }
        for i in sample(&mut rng, absent.len(), k) {
            weights[absent[i]] = 1.0;
        }
        let g = EdgeVector::new(w.n_nodes(), weights)?;
        if is_connected(&g, 0.0) {
            return Ok(g);
        }
    }
    Err(Error::Disconnected(MAX_GRAPH_RETRIES))
}

/// Deletes edges of a binary graph, keeping `round(keep * |E|)` of them and
/// staying connected.
pub fn thin_edges(w: &EdgeVector, keep: f64, seed: u64) -> Result<EdgeVector> {
    if !(0.0..=1.0).contains(&keep) {
        return Err(Error::InvalidParameter(format!(
            "keep fraction must lie in [0, 1], got {keep}"
        )));
    }
    let present: Vec<usize> = (0..w.len()).filter(|k| w.as_slice()[*k] > 0.0).collect();
    let n_keep = (keep * present.len() as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_GRAPH_RETRIES {
        let mut weights = vec![0.0; w.len()];
        for i in sample(&mut rng, present.len(), n_keep) {
            weights[present[i]] = w.as_slice()[present[i]];
        }
        let g = EdgeVector::new(w.n_nodes(), weights)?;
        if is_connected(&g, 0.0) {
            return Ok(g);
        }
    }
    Err(Error::Disconnected(MAX_GRAPH_RETRIES))
}

/// Draws `x = V f(Lambda) z + sigma z'` for a fixed graph, where
/// `L = V Lambda V^T` and `f` inverts the square root of nonzero eigenvalues.
#[derive(Debug, Clone)]
pub struct SignalSampler {
    factor: DMatrix<f64>,
    noise_sigma: f64,
}

impl SignalSampler {
    pub fn new(w: &EdgeVector, noise_sigma: f64) -> Result<Self> {
        if !(noise_sigma.is_finite() && noise_sigma >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "noise_sigma must be nonnegative, got {noise_sigma}"
            )));
        }
        let n = w.n_nodes();
        let lap = DMatrix::from_row_slice(n, n, &w.to_laplacian());
        let eig = lap.symmetric_eigen();
        if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("Laplacian eigendecomposition failed".into()));
        }
        let top = eig.eigenvalues.max();
        let cutoff = EIGEN_REL_THRESHOLD * top.max(0.0);
        let scales = eig
            .eigenvalues
            .map(|v| if v > cutoff { 1.0 / v.sqrt() } else { 0.0 });
        let factor = eig.eigenvectors * DMatrix::from_diagonal(&scales);
        Ok(Self {
            factor,
            noise_sigma,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.factor.nrows()
    }

    /// The covariance `L^+ + sigma^2 I` this sampler draws from, row-major.
    pub fn covariance(&self) -> Vec<f64> {
        let n = self.n_nodes();
        let mut c = &self.factor * self.factor.transpose();
        for i in 0..n {
            c[(i, i)] += self.noise_sigma * self.noise_sigma;
        }
        c.transpose().as_slice().to_vec()
    }

    /// The sample indexed by `t` of the stream seeded with `seed`.
    pub fn sample(&self, seed: u64, t: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(t);
        self.sample_with(&mut rng)
    }

    pub fn sample_with(&self, rng: &mut impl Rng) -> Vec<f64> {
        let n = self.n_nodes();
        let z = DVector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let mut x = &self.factor * z;
        if self.noise_sigma > 0.0 {
            for v in x.iter_mut() {
                *v += self.noise_sigma * rng.sample::<f64, _>(StandardNormal);
            }
        }
        x.as_slice().to_vec()
    }
}

/// Signals of a scenario, indexed `t = 1..=horizon`.
#[derive(Debug, Clone)]
pub struct SignalStream {
    scenario: GraphScenario,
    graphs: Vec<EdgeVector>,
    samplers: Vec<SignalSampler>,
    signal_seed: u64,
}

impl SignalStream {
    pub fn scenario(&self) -> &GraphScenario {
        &self.scenario
    }

    /// Ground truth per segment.
    pub fn graphs(&self) -> &[EdgeVector] {
        &self.graphs
    }

    /// Ground truth in force at time `t`.
    pub fn graph_at(&self, t: u64) -> &EdgeVector {
        &self.graphs[self.scenario.segment_of(t)]
    }

    pub fn sample(&self, t: u64) -> Vec<f64> {
        self.samplers[self.scenario.segment_of(t)].sample(self.signal_seed, t)
    }

    /// All samples in time order.
    pub fn samples(&self) -> Vec<Vec<f64>> {
        (1..=self.scenario.horizon).map(|t| self.sample(t)).collect()
    }
}

/// A stand-in for a recording with a connectivity drop: `before` samples on a
/// connected ER graph, then `after` samples on the same graph with only a
/// `keep` fraction of its edges. Returns the samples and the index of the
/// first post-drop row.
pub fn connectivity_drop(
    n_nodes: usize,
    p: f64,
    keep: f64,
    before: usize,
    after: usize,
    noise_sigma: f64,
    seed: u64,
) -> Result<(Vec<Vec<f64>>, usize)> {
    let dense = draw_connected(&GraphModel::Er { p }, n_nodes, derive_seed(seed, 0))?;
    let sparse = thin_edges(&dense, keep, derive_seed(seed, 1))?;
    let first = SignalSampler::new(&dense, noise_sigma)?;
    let second = SignalSampler::new(&sparse, noise_sigma)?;
    let signal_seed = derive_seed(seed, 2);
    let rows = (0..before + after)
        .map(|t| {
            let s = if t < before { &first } else { &second };
            s.sample(signal_seed, t as u64)
        })
        .collect();
    Ok((rows, before))
}

//! Compact edge parametrization of undirected, loop-free graphs.
//!
//! A graph on `N` nodes is stored as a vector of `N(N-1)/2` weights, one per
//! unordered pair `(i, j)` with `i < j`, in lexicographic order
//! `(0,1), (0,2), ..., (0,N-1), (1,2), ...`. Node indices are 0-based here and
//! 1-based only in files and display.
//!
//! The degree operator `S` maps edge weights to node degrees (`d = S w`). It is
//! never materialized; [`apply_s`] and [`apply_s_transpose`] are index loops
//! costing `O(N^2)`.

use crate::{Error, Result};

/// Bijection between pair indices `k` and node pairs `(i, j)`, `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct PairIndex {
    n_nodes: usize,
}

impl PairIndex {
    pub fn new(n_nodes: usize) -> Result<Self> {
        if n_nodes < 2 {
            return Err(Error::InvalidParameter(format!(
                "a graph needs at least 2 nodes, got {n_nodes}"
            )));
        }
        Ok(Self { n_nodes })
    }

    #[inline]
    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// Number of node pairs, `N(N-1)/2`.
    #[inline]
    pub fn n_pairs(&self) -> usize {
        pair_count(self.n_nodes)
    }

    /// Index of the pair `{i, j}`. Order of the endpoints does not matter.
    ///
    /// Panics if `i == j` or either endpoint is out of range.
    #[inline]
    pub fn index_of(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        assert!(i != j && j < self.n_nodes, "invalid pair ({i}, {j})");
        i * self.n_nodes - i * (i + 1) / 2 + (j - i - 1)
    }

    /// Inverse of [`PairIndex::index_of`].
    pub fn pair_of(&self, k: usize) -> (usize, usize) {
        assert!(k < self.n_pairs(), "pair index {k} out of range");
        let n = self.n_nodes;
        // row i starts at i*n - i*(i+1)/2; walk rows, at most n-1 of them
        let mut i = 0;
        let mut start = 0;
        loop {
            let row_len = n - i - 1;
            if k < start + row_len {
                return (i, i + 1 + (k - start));
            }
            start += row_len;
            i += 1;
        }
    }

    /// Iterates over all pairs in canonical order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.n_nodes;
        (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
    }
}

#[inline]
pub fn pair_count(n_nodes: usize) -> usize {
    n_nodes * n_nodes.saturating_sub(1) / 2
}

/// Recovers `N` from a pair count `N(N-1)/2`, if the count is valid.
pub fn nodes_from_pair_count(n_pairs: usize) -> Option<usize> {
    // N = (1 + sqrt(1 + 8m)) / 2
    let n = ((1.0 + (1.0 + 8.0 * n_pairs as f64).sqrt()) / 2.0).round() as usize;
    (n >= 2 && pair_count(n) == n_pairs).then_some(n)
}

/// Nonnegative edge weights over the canonical pair order.
///
/// Serializes as the flat weight sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeVector {
    index: PairIndex,
    weights: Vec<f64>,
}

impl EdgeVector {
    pub fn zeros(n_nodes: usize) -> Result<Self> {
        let index = PairIndex::new(n_nodes)?;
        Ok(Self {
            index,
            weights: vec![0.0; index.n_pairs()],
        })
    }

    /// Wraps `weights`, checking length and nonnegativity.
    pub fn new(n_nodes: usize, weights: Vec<f64>) -> Result<Self> {
        let index = PairIndex::new(n_nodes)?;
        if weights.len() != index.n_pairs() {
            return Err(Error::DimensionMismatch {
                expected: index.n_pairs(),
                found: weights.len(),
            });
        }
        if let Some(k) = weights.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "edge weight {k} is {}, expected a finite nonnegative value",
                weights[k]
            )));
        }
        Ok(Self { index, weights })
    }

    /// Wraps weights already known to be valid (kernel outputs).
    pub(crate) fn from_raw(index: PairIndex, weights: Vec<f64>) -> Self {
        debug_assert_eq!(weights.len(), index.n_pairs());
        debug_assert!(weights.iter().all(|w| *w >= 0.0));
        Self { index, weights }
    }

    /// Builds the edge vector of a symmetric adjacency matrix given row-major.
    ///
    /// Only the strict upper triangle is read.
    pub fn from_adjacency(n_nodes: usize, adjacency: &[f64]) -> Result<Self> {
        if adjacency.len() != n_nodes * n_nodes {
            return Err(Error::DimensionMismatch {
                expected: n_nodes * n_nodes,
                found: adjacency.len(),
            });
        }
        let index = PairIndex::new(n_nodes)?;
        let weights = index
            .pairs()
            .map(|(i, j)| adjacency[i * n_nodes + j])
            .collect();
        Self::new(n_nodes, weights)
    }

    #[inline]
    pub fn index(&self) -> PairIndex {
        self.index
    }

    #[inline]
    pub fn n_nodes(&self) -> usize {
        self.index.n_nodes
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.weights
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[self.index.index_of(i, j)]
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Number of entries strictly above `threshold`.
    pub fn support_size(&self, threshold: f64) -> usize {
        self.weights.iter().filter(|w| **w > threshold).count()
    }

    /// Node degrees `S w`.
    pub fn degrees(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n_nodes()];
        apply_s(self.n_nodes(), &self.weights, &mut d);
        d
    }

    /// Dense symmetric adjacency matrix, row-major, zero diagonal.
    pub fn to_adjacency(&self) -> Vec<f64> {
        let n = self.n_nodes();
        let mut a = vec![0.0; n * n];
        for ((i, j), w) in self.index.pairs().zip(&self.weights) {
            a[i * n + j] = *w;
            a[j * n + i] = *w;
        }
        a
    }

    /// Dense Laplacian `diag(S w) - W`, row-major.
    pub fn to_laplacian(&self) -> Vec<f64> {
        let n = self.n_nodes();
        let mut l = self.to_adjacency();
        l.iter_mut().for_each(|v| *v = -*v);
        for (i, d) in self.degrees().into_iter().enumerate() {
            l[i * n + i] = d;
        }
        l
    }

    /// Iterates `(i, j, weight)` in canonical order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.index
            .pairs()
            .zip(&self.weights)
            .map(|((i, j), w)| (i, j, *w))
    }
}

impl serde::Serialize for EdgeVector {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.weights.serialize(serializer)
    }
}

/// Writes `S w` into `degrees`: `degrees[i]` is the sum of the weights of all
/// pairs containing `i`.
pub fn apply_s(n_nodes: usize, w: &[f64], degrees: &mut [f64]) {
    assert_eq!(w.len(), pair_count(n_nodes));
    assert_eq!(degrees.len(), n_nodes);
    degrees.fill(0.0);
    let mut k = 0;
    for i in 0..n_nodes {
        let mut row = 0.0;
        for j in i + 1..n_nodes {
            let wk = w[k];
            row += wk;
            degrees[j] += wk;
            k += 1;
        }
        degrees[i] += row;
    }
}

/// Writes `S^T lambda` into `out`: entry `k` is `lambda[i] + lambda[j]` for
/// the pair `(i, j)` at `k`.
pub fn apply_s_transpose(lambda: &[f64], out: &mut [f64]) {
    let n = lambda.len();
    assert_eq!(out.len(), pair_count(n));
    let mut k = 0;
    for i in 0..n {
        let li = lambda[i];
        for lj in &lambda[i + 1..] {
            out[k] = li + lj;
            k += 1;
        }
    }
}

/// Dirichlet energy `x^T L x = sum over pairs of w_ij (x_i - x_j)^2`.
pub fn total_variation(w: &EdgeVector, x: &[f64]) -> Result<f64> {
    let n = w.n_nodes();
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: x.len(),
        });
    }
    let mut tv = 0.0;
    let mut k = 0;
    let ws = w.as_slice();
    for i in 0..n {
        for j in i + 1..n {
            let diff = x[i] - x[j];
            tv += ws[k] * diff * diff;
            k += 1;
        }
    }
    Ok(tv)
}

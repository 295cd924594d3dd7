//! Evaluation of learned graphs: tracking error, edge-set F-measure, the
//! hyperparameter grid search, and weighted closeness centrality.

use petgraph::algo::dijkstra;
use petgraph::graph::{NodeIndex, UnGraph};
use rayon::prelude::*;

use crate::dissimilarity::MemoryMode;
use crate::dual::{DualInit, Params};
use crate::edges::EdgeVector;
use crate::online::Tracker;
use crate::synth::GraphScenario;
use crate::{Error, Result};

/// Relative edge-presence threshold: an edge counts when its weight exceeds
/// this fraction of the largest weight.
pub const DEFAULT_REL_THRESHOLD: f64 = 1e-4;

/// `DEFAULT_REL_THRESHOLD * max(w)`.
pub fn default_threshold(w: &[f64]) -> f64 {
    DEFAULT_REL_THRESHOLD * w.iter().copied().fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Dpg,
    PrimalPg,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Dpg => "dpg",
            Method::PrimalPg => "primal_pg",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One row of a tracking run: `t,method,error,total_weight,f_measure`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TrackRecord {
    pub t: u64,
    pub method: Method,
    pub error: Option<f64>,
    pub total_weight: f64,
    pub f_measure: Option<f64>,
}

/// `||w_hat - w_star||_2`.
pub fn tracking_error(w_hat: &[f64], w_star: &[f64]) -> Result<f64> {
    if w_hat.len() != w_star.len() {
        return Err(Error::DimensionMismatch {
            expected: w_star.len(),
            found: w_hat.len(),
        });
    }
    Ok(w_hat
        .iter()
        .zip(w_star)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct EdgeScore {
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
}

/// Scores the edges `{k : w_hat[k] > threshold}` against the support of
/// `truth`.
pub fn f_measure(w_hat: &[f64], truth: &[f64], threshold: f64) -> Result<EdgeScore> {
    if w_hat.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            found: w_hat.len(),
        });
    }
    let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
    for (w, g) in w_hat.iter().zip(truth) {
        match (*w > threshold, *g > 0.0) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fneg += 1,
            (false, false) => {}
        }
    }
    let ratio = |a: usize, b: usize| if a + b == 0 { 0.0 } else { a as f64 / (a + b) as f64 };
    let precision = ratio(tp, fp);
    let recall = ratio(tp, fneg);
    let f_measure = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(EdgeScore {
        precision,
        recall,
        f_measure,
    })
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Closeness {
    /// `1 / sum_j d(i, j)` over the nodes reachable from `i`; 0 for isolated
    /// nodes.
    pub centrality: Vec<f64>,
    /// False when some pair of nodes is mutually unreachable.
    pub connected: bool,
}

/// Closeness centrality with edge length `1 / w` over edges heavier than
/// `threshold`. Distances are only summed within a node's own component.
pub fn closeness_centrality(w: &EdgeVector, threshold: f64) -> Closeness {
    let n = w.n_nodes();
    let mut g = UnGraph::<(), f64>::with_capacity(n, 0);
    let nodes: Vec<NodeIndex> = (0..n).map(|_| g.add_node(())).collect();
    for (i, j, wt) in w.edges() {
        if wt > threshold && wt > 0.0 {
            g.add_edge(nodes[i], nodes[j], 1.0 / wt);
        }
    }
    let mut connected = true;
    let centrality = nodes
        .iter()
        .map(|&src| {
            let dist = dijkstra(&g, src, None, |e| *e.weight());
            if dist.len() < n {
                connected = false;
            }
            let total: f64 = dist.values().sum();
            if total > 0.0 {
                1.0 / total
            } else {
                0.0
            }
        })
        .collect();
    Closeness {
        centrality,
        connected,
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GridOptions {
    pub memory: MemoryMode,
    /// Fraction of the horizon, at the end, over which F-measure is averaged.
    pub window_fraction: f64,
    pub rel_threshold: f64,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self {
            memory: MemoryMode::Infinite,
            window_fraction: 0.1,
            rel_threshold: DEFAULT_REL_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GridPoint {
    pub alpha: f64,
    pub beta: f64,
    pub f_measure: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct GridResult {
    /// One entry per `(alpha, beta)`, alpha-major in grid order.
    pub scores: Vec<GridPoint>,
    pub best: GridPoint,
}

/// Runs the online tracker for every `(alpha, beta)` on the scenario and
/// returns the pair with the best mean F-measure over the final window.
///
/// Ties go to the smaller `beta`, then the smaller `alpha`.
pub fn grid_search(
    scenario: &GraphScenario,
    alphas: &[f64],
    betas: &[f64],
    options: &GridOptions,
) -> Result<GridResult> {
    if alphas.is_empty() || betas.is_empty() {
        return Err(Error::InvalidParameter("grid must not be empty".into()));
    }
    if !(options.window_fraction > 0.0 && options.window_fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "window_fraction must lie in (0, 1], got {}",
            options.window_fraction
        )));
    }
    let grid: Vec<Params> = alphas
        .iter()
        .flat_map(|a| betas.iter().map(move |b| Params::new(*a, *b)))
        .collect::<Result<_>>()?;
    let stream = scenario.stream()?;
    let samples = stream.samples();
    let horizon = samples.len();
    let window = ((options.window_fraction * horizon as f64).ceil() as usize).clamp(1, horizon);

    let scores = grid
        .par_iter()
        .map(|p| -> Result<GridPoint> {
            let mut tracker = Tracker::new(scenario.n_nodes, *p, options.memory, DualInit::Ones)?;
            let mut total = 0.0;
            for (t0, x) in samples.iter().enumerate() {
                let w = tracker.step_in_place(x)?;
                if t0 + window >= horizon {
                    let truth = stream.graph_at(t0 as u64 + 1);
                    let thr = options.rel_threshold * w.iter().copied().fold(0.0, f64::max);
                    total += f_measure(w, truth.as_slice(), thr)?.f_measure;
                }
            }
            Ok(GridPoint {
                alpha: p.alpha(),
                beta: p.beta(),
                f_measure: total / window as f64,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let best = *scores
        .iter()
        .min_by(|a, b| {
            b.f_measure
                .total_cmp(&a.f_measure)
                .then(a.beta.total_cmp(&b.beta))
                .then(a.alpha.total_cmp(&b.alpha))
        })
        .expect("grid is non-empty");
    Ok(GridResult { scores, best })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::edges::PairIndex;
    use proptest::prelude::*;

    #[test]
    fn tracking_error_examples() {
        assert_eq!(tracking_error(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(tracking_error(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 2f64.sqrt());
        assert!(tracking_error(&[1.0], &[0.0, 1.0]).is_err());
        let a = [0.3, 1.2, 0.0];
        let b = [1.0, 0.2, 0.5];
        let c = -2.5;
        let sa: Vec<f64> = a.iter().map(|v| c * v).collect();
        let sb: Vec<f64> = b.iter().map(|v| c * v).collect();
        let base = tracking_error(&a, &b).unwrap();
        assert!((tracking_error(&sa, &sb).unwrap() - c.abs() * base).abs() < 1e-12);
    }

    #[test]
    fn f_measure_examples() {
        let truth = [1.0, 0.0, 1.0, 1.0, 0.0, 1.0];
        let perfect = f_measure(&[0.5, 0.0, 2.0, 0.1, 0.0, 0.3], &truth, 1e-3).unwrap();
        assert_eq!(perfect.f_measure, 1.0);

        let empty = f_measure(&[0.0; 6], &truth, 1e-3).unwrap();
        assert_eq!(empty.f_measure, 0.0);

        let half = f_measure(&[0.5, 0.0, 0.4, 0.0, 0.0, 0.0], &truth, 1e-3).unwrap();
        assert_eq!(half.precision, 1.0);
        assert_eq!(half.recall, 0.5);
        assert!((half.f_measure - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn closeness_on_path_and_complete_graphs() {
        // path 1-2-3
        let path = EdgeVector::new(3, vec![1.0, 0.0, 1.0]).unwrap();
        let c = closeness_centrality(&path, 0.0);
        assert!(c.connected);
        assert!((c.centrality[1] - 0.5).abs() < 1e-15);
        assert!((c.centrality[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((c.centrality[2] - 1.0 / 3.0).abs() < 1e-15);

        let n = 7;
        let complete = EdgeVector::new(n, vec![1.0; 21]).unwrap();
        for v in closeness_centrality(&complete, 0.0).centrality {
            assert!((v - 1.0 / (n as f64 - 1.0)).abs() < 1e-15);
        }

        let scaled = EdgeVector::new(3, vec![4.0, 0.0, 4.0]).unwrap();
        let cs = closeness_centrality(&scaled, 0.0);
        for (a, b) in cs.centrality.iter().zip(&c.centrality) {
            assert!((a - 4.0 * b).abs() < 1e-12);
        }
    }

    #[test]
    fn closeness_handles_disconnection() {
        // edge 0-1, node 2 isolated, edge 3-4 below threshold
        let idx = PairIndex::new(5).unwrap();
        let mut w = vec![0.0; 10];
        w[idx.index_of(0, 1)] = 2.0;
        w[idx.index_of(3, 4)] = 1e-6;
        let c = closeness_centrality(&EdgeVector::new(5, w).unwrap(), 1e-3);
        assert!(!c.connected);
        assert_eq!(c.centrality[0], 2.0);
        assert_eq!(c.centrality[2], 0.0);
        assert_eq!(c.centrality[3], 0.0);
    }

    #[test]
    fn closeness_constant_on_cycle() {
        let n = 8;
        let idx = PairIndex::new(n).unwrap();
        let mut w = vec![0.0; idx.n_pairs()];
        for i in 0..n {
            w[idx.index_of(i, (i + 1) % n)] = 0.7;
        }
        let c = closeness_centrality(&EdgeVector::new(n, w).unwrap(), 0.0);
        for v in &c.centrality {
            assert!((v - c.centrality[0]).abs() < 1e-12);
        }
    }

    fn small_scenario() -> GraphScenario {
        GraphScenario {
            n_nodes: 12,
            horizon: 300,
            ..GraphScenario::stationary_er(3)
        }
    }

    #[test]
    fn grid_search_contract() {
        let s = small_scenario();
        let opts = GridOptions::default();
        let single = grid_search(&s, &[1.0], &[0.5], &opts).unwrap();
        assert_eq!((single.best.alpha, single.best.beta), (1.0, 0.5));
        assert!(grid_search(&s, &[], &[0.5], &opts).is_err());

        let a = grid_search(&s, &[0.5, 2.0], &[0.1, 1.0], &opts).unwrap();
        let b = grid_search(&s, &[2.0, 0.5], &[1.0, 0.1], &opts).unwrap();
        assert_eq!(a.best, b.best);
        let again = grid_search(&s, &[0.5, 2.0], &[0.1, 1.0], &opts).unwrap();
        assert_eq!(a, again);
    }

    #[test]
    fn degenerate_beta_loses() {
        let s = small_scenario();
        let r = grid_search(&s, &[1.0], &[0.1, 1e6], &GridOptions::default()).unwrap();
        assert_eq!(r.best.beta, 0.1, "{:?}", r.scores);
    }

    proptest! {
        #[test]
        fn f_measure_invariant_under_relabeling(
            n in 3usize..8,
            seed in 0u64..1000,
        ) {
            let idx = PairIndex::new(n).unwrap();
            let m = idx.n_pairs();
            let mut s = seed;
            let mut next = || { s = s.wrapping_mul(6364136223846793005).wrapping_add(1); (s >> 33) as f64 / (1u64 << 31) as f64 };
            let w: Vec<f64> = (0..m).map(|_| if next() < 0.5 { 0.0 } else { next() }).collect();
            let truth: Vec<f64> = (0..m).map(|_| if next() < 0.4 { 1.0 } else { 0.0 }).collect();
            // reverse node order
            let perm = |v: &[f64]| {
                let mut out = vec![0.0; m];
                for (k, (i, j)) in idx.pairs().enumerate() {
                    out[idx.index_of(n - 1 - i, n - 1 - j)] = v[k];
                }
                out
            };
            let a = f_measure(&w, &truth, 0.1).unwrap();
            let b = f_measure(&perm(&w), &perm(&truth), 0.1).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}

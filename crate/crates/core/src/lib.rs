//! Learning and tracking undirected weighted graphs from
//! streaming smooth graph signals.
//!
//! The learned graph minimizes, over nonnegative edge weights `w`,
//!
//! ```text
//! 2 w^T e + beta ||w||^2 - alpha 1^T log(S w)
//! ```
//!
//! where `e` holds pairwise squared differences of the observed signals and
//! `S` maps edge weights to node degrees. The crate provides:
//!
//! - [`edges`]: the compact edge parametrization and the degree operator.
//! - [`dissimilarity`]: running pairwise dissimilarities under infinite memory
//!   or exponential forgetting.
//! - [`dual`]: the batch dual proximal-gradient solver and its step kernel.
//! - [`online`]: the one-step-per-sample tracker built on that kernel.
//! - [`primal`]: a primal projected-gradient tracker of matching cost, used as
//!   a comparison baseline.
//! - [`synth`]: seeded ER/SBM graphs and smooth Gaussian signal streams.
//! - [`metrics`]: tracking error, F-measure, grid search, closeness
//!   centrality.
//! - [`io`]: the CSV layouts shared by the library and the CLI.
//!
//! ```
//! use topotrack::{dissimilarity::MemoryMode, online::Tracker, dual::Params};
//!
//! let params = Params::new(1.0, 0.5).unwrap();
//! let mut tracker = Tracker::new(4, params, MemoryMode::Infinite, Default::default()).unwrap();
//! let w_hat = tracker.step(&[0.1, 0.2, -0.3, 0.0]).unwrap();
//! assert_eq!(w_hat.len(), 6);
//! ```

pub mod dissimilarity;
pub mod dual;
pub mod edges;
pub mod io;
pub mod metrics;
pub mod online;
pub mod primal;
pub mod synth;

pub use edges::{EdgeVector, PairIndex};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("non-finite value at position {0}")]
    NonFinite(usize),
    #[error("no step has been taken yet")]
    NotStarted,
    #[error("could not draw a connected graph after {0} attempts")]
    Disconnected(usize),
    #[error("{0}")]
    Data(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_finite(x: &[f64]) -> Result<()> {
    match x.iter().position(|v| !v.is_finite()) {
        Some(k) => Err(Error::NonFinite(k)),
        None => Ok(()),
    }
}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/edge-space.md")]
    mod edge_space {}
    #[doc = include_str!("../../../book/src/dissimilarity.md")]
    mod dissimilarity {}
    #[doc = include_str!("../../../book/src/dual-solver.md")]
    mod dual_solver {}
    #[doc = include_str!("../../../book/src/online-tracking.md")]
    mod online_tracking {}
    #[doc = include_str!("../../../book/src/baseline.md")]
    mod baseline {}
    #[doc = include_str!("../../../book/src/synthetic-data.md")]
    mod synthetic_data {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
}

use topotrack::dissimilarity::MemoryMode;
use topotrack::metrics::Method;
use topotrack::online::Tracker;
use topotrack::primal::PrimalTracker;
use topotrack::synth::derive_seed;

use crate::config::Config;
use crate::error::{config_err, data_err, CliResult};

/// Seed tag for a random initial dual point.
const INIT_TAG: u64 = 0x1417;

/// One of the two online methods behind a common step interface.
pub enum Estimator {
    Dpg(Tracker),
    PrimalPg(PrimalTracker),
}

impl Estimator {
    pub fn new(method: Method, n_nodes: usize, cfg: &Config, memory: MemoryMode) -> CliResult<Self> {
        let params = cfg.solver.params();
        Ok(match method {
            Method::Dpg => Estimator::Dpg(
                Tracker::new(
                    n_nodes,
                    params,
                    memory,
                    cfg.solver.dual_init(derive_seed(cfg.seed, INIT_TAG)),
                )
                .and_then(|t| t.with_inner_steps(cfg.solver.inner_steps.0))
                .map_err(config_err)?,
            ),
            Method::PrimalPg => Estimator::PrimalPg(
                PrimalTracker::new(n_nodes, params, memory, cfg.baseline.options())
                    .map_err(config_err)?,
            ),
        })
    }

    pub fn step(&mut self, x: &[f64]) -> CliResult<&[f64]> {
        match self {
            Estimator::Dpg(t) => t.step_in_place(x).map_err(data_err),
            Estimator::PrimalPg(p) => {
                p.step(x).map_err(data_err)?;
                Ok(p.weights())
            }
        }
    }

    pub fn rejected_steps(&self) -> u64 {
        match self {
            Estimator::Dpg(_) => 0,
            Estimator::PrimalPg(p) => p.rejected_steps(),
        }
    }
}

/// Centers every column and scales it to unit variance. Constant columns
/// are only centered.
pub fn zscore(rows: &mut [Vec<f64>]) {
    let Some(width) = rows.first().map(Vec::len) else {
        return;
    };
    let n = rows.len() as f64;
    for c in 0..width {
        let mean = rows.iter().map(|r| r[c]).sum::<f64>() / n;
        let var = rows.iter().map(|r| (r[c] - mean).powi(2)).sum::<f64>() / n;
        let scale = if var > 0.0 { 1.0 / var.sqrt() } else { 1.0 };
        for r in rows.iter_mut() {
            r[c] = (r[c] - mean) * scale;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zscore_columns() {
        let mut rows = vec![vec![1.0, 5.0], vec![3.0, 5.0], vec![5.0, 5.0]];
        zscore(&mut rows);
        let col: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        let mean: f64 = col.iter().sum::<f64>() / 3.0;
        let var: f64 = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 3.0;
        assert!(mean.abs() < 1e-15 && (var - 1.0).abs() < 1e-12);
        assert!(rows.iter().all(|r| r[1] == 0.0));
    }
}

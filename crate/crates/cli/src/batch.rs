//! `batch`: solve the full problem once on a file's mean dissimilarity.

use std::fs::File;
use std::io::Read;

use serde::Serialize;

use topotrack::dissimilarity::batch_dissimilarity;
use topotrack::dual::{solve_batch, DualInit, DualState, Objective};
use topotrack::io::{read_edge_list, read_edge_vector, read_signal_matrix};
use topotrack::synth::derive_seed;
use topotrack::EdgeVector;

use crate::config::{Config, Data, DataKind};
use crate::error::{data_err, CliError, CliResult};
use crate::output::{file_name, write_edges, write_json};

/// Seed tag for a random initial dual point.
const INIT_TAG: u64 = 0xba7c;

#[derive(Debug, Clone, Serialize)]
pub struct BatchReport {
    pub command: &'static str,
    pub n_nodes: usize,
    pub alpha: f64,
    pub beta: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub init: DualInit,
    /// Inclusive 1-based rows averaged into `e`, when the input is signals.
    pub rows: Option<(usize, usize)>,
    pub iterations: usize,
    pub converged: bool,
    pub objective: f64,
    pub min_degree: f64,
    pub lambda_final: DualState,
    pub primal_change_history: Vec<f64>,
    pub files: Vec<String>,
    #[serde(skip)]
    pub w_star: Option<EdgeVector>,
}

/// Node count, mean dissimilarity and the 1-based row range averaged.
pub type LoadedDissimilarity = (usize, Vec<f64>, Option<(usize, usize)>);

/// Mean dissimilarity of the configured input, and the row range used.
pub fn load_dissimilarity(data: &Data) -> CliResult<LoadedDissimilarity> {
    let mut text = String::new();
    File::open(&data.path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", data.path.display())))?;
    let ctx = |e: topotrack::Error| match e {
        topotrack::Error::Data(m) => CliError::Data(format!("{}: {m}", data.path.display())),
        other => data_err(other),
    };
    match data.kind {
        DataKind::Dissimilarity => {
            let header = text.lines().next().unwrap_or("").trim();
            let e = if header.starts_with("i,") {
                read_edge_list(text.as_bytes())
            } else {
                read_edge_vector(text.as_bytes())
            }
            .map_err(ctx)?;
            Ok((e.n_nodes(), e.into_vec(), None))
        }
        DataKind::Signals => {
            let mut m = read_signal_matrix(text.as_bytes()).map_err(ctx)?;
            if data.zscore {
                crate::runner::zscore(&mut m.rows);
            }
            let total = m.rows.len();
            let (first, last) = data.rows.unwrap_or((1, total));
            if last > total {
                return Err(CliError::Config(format!(
                    "data.rows ends at {last} but the file has {total} rows"
                )));
            }
            let rows = &m.rows[first - 1..last];
            let mut e = batch_dissimilarity(rows).map_err(ctx)?;
            let count = rows.len() as f64;
            e.iter_mut().for_each(|v| *v /= count);
            Ok((m.n_channels(), e, Some((first, last))))
        }
    }
}

pub fn cmd_batch(cfg: &Config) -> CliResult<BatchReport> {
    let data = cfg.require_data()?;
    let (n, e, rows) = load_dissimilarity(data)?;
    let params = cfg.solver.params();
    let obj = Objective::new(n, params, e).map_err(data_err)?;
    let options = cfg.solver.solve_options(derive_seed(cfg.seed, INIT_TAG));
    let report = solve_batch(&obj, &options).map_err(data_err)?;
    let w = &report.w_star;

    std::fs::create_dir_all(&cfg.out)?;
    let edges = write_edges(&cfg.out, "w_star", cfg.format, w)?;
    let out = BatchReport {
        command: "batch",
        n_nodes: n,
        alpha: params.alpha(),
        beta: params.beta(),
        tol: options.tol,
        max_iter: options.max_iter,
        init: options.init.clone(),
        rows,
        iterations: report.iterations,
        converged: report.converged,
        objective: obj.primal_value(w).map_err(data_err)?,
        min_degree: w.degrees().into_iter().fold(f64::INFINITY, f64::min),
        lambda_final: report.lambda_final.clone(),
        primal_change_history: report.primal_change_history.clone(),
        files: vec![file_name(&edges), "report.json".into()],
        w_star: Some(w.clone()),
    };
    write_json(&cfg.out.join("report.json"), &out)?;
    if !out.converged {
        return Err(CliError::NotConverged(format!(
            "no convergence within {} iterations; report written",
            out.max_iter
        )));
    }
    Ok(out)
}

//! `synth`: simulate a scenario, track it with every configured method and
//! score the estimates against per-segment batch references.

use rayon::prelude::*;
use serde::Serialize;

use topotrack::dissimilarity::{batch_dissimilarity, MemoryMode};
use topotrack::dual::{solve_batch, Objective, SolveOptions, SolveReport};
use topotrack::io::{write_signal_matrix, SignalMatrix};
use topotrack::metrics::{f_measure, tracking_error, Method, TrackRecord};
use topotrack::synth::{GraphScenario, SignalStream};
use topotrack::EdgeVector;

use crate::config::Config;
use crate::error::{config_err, data_err, CliError, CliResult};
use crate::output::{create, file_name, write_edges, write_json, write_table};
use crate::plot::error_svg;
use crate::runner::Estimator;

/// Batch solutions on the mean dissimilarity of each segment.
pub fn segment_references(
    scenario: &GraphScenario,
    samples: &[Vec<f64>],
    params: topotrack::dual::Params,
    options: &SolveOptions,
) -> CliResult<Vec<SolveReport>> {
    scenario
        .segments()
        .par_iter()
        .map(|&(first, last)| {
            let seg = &samples[(first - 1) as usize..last as usize];
            let mut e = batch_dissimilarity(seg).map_err(data_err)?;
            let count = seg.len() as f64;
            e.iter_mut().for_each(|v| *v /= count);
            let obj = Objective::new(scenario.n_nodes, params, e).map_err(data_err)?;
            solve_batch(&obj, options).map_err(data_err)
        })
        .collect()
}

/// Runs one method over the stream and scores every step.
pub fn track_scenario(
    cfg: &Config,
    method: Method,
    memory: MemoryMode,
    stream: &SignalStream,
    samples: &[Vec<f64>],
    references: &[EdgeVector],
) -> CliResult<(Vec<TrackRecord>, u64)> {
    let scenario = stream.scenario();
    let rel = cfg.solver.rel_threshold.0;
    let mut est = Estimator::new(method, scenario.n_nodes, cfg, memory)?;
    let mut records = Vec::with_capacity(samples.len());
    for (k, x) in samples.iter().enumerate() {
        let t = k as u64 + 1;
        let w = est.step(x)?;
        let reference = &references[scenario.segment_of(t)];
        let max = w.iter().copied().fold(0.0, f64::max);
        records.push(TrackRecord {
            t,
            method,
            error: Some(tracking_error(w, reference.as_slice()).map_err(data_err)?),
            total_weight: w.iter().sum(),
            f_measure: Some(
                f_measure(w, stream.graph_at(t).as_slice(), rel * max)
                    .map_err(data_err)?
                    .f_measure,
            ),
        });
    }
    Ok((records, est.rejected_steps()))
}

#[derive(Debug, Clone, Serialize)]
pub struct ReferenceSummary {
    pub segment: usize,
    pub first_t: u64,
    pub last_t: u64,
    pub iterations: usize,
    pub converged: bool,
    pub f_measure: f64,
    pub total_weight: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodSummary {
    pub method: Method,
    pub final_error: Option<f64>,
    pub final_f_measure: Option<f64>,
    pub rejected_steps: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SynthSummary {
    pub command: &'static str,
    pub seed: u64,
    pub scenario: GraphScenario,
    pub alpha: f64,
    pub beta: f64,
    pub memory: MemoryMode,
    pub references: Vec<ReferenceSummary>,
    pub methods: Vec<MethodSummary>,
    /// File names written into the output directory.
    pub files: Vec<String>,
    #[serde(skip)]
    pub records: Vec<TrackRecord>,
}

pub fn cmd_synth(cfg: &Config) -> CliResult<SynthSummary> {
    let scenario = cfg.require_scenario()?;
    let graph = &scenario.graph;
    let methods = cfg.methods_or(&[Method::Dpg, Method::PrimalPg]);
    let memory = cfg.solver.memory_mode(!graph.switch_times.is_empty());
    let params = cfg.solver.params();

    let stream = graph.stream().map_err(config_err)?;
    let samples = stream.samples();
    let refs = segment_references(graph, &samples, params, &cfg.solver.solve_options(cfg.seed))?;
    let ref_weights: Vec<EdgeVector> = refs.iter().map(|r| r.w_star.clone()).collect();

    let runs: Vec<(Vec<TrackRecord>, u64)> = methods
        .par_iter()
        .map(|m| track_scenario(cfg, *m, memory, &stream, &samples, &ref_weights))
        .collect::<CliResult<_>>()?;
    // rows ordered by t, then by method in configured order
    let horizon = samples.len();
    let mut records = Vec::with_capacity(horizon * methods.len());
    for k in 0..horizon {
        records.extend(runs.iter().map(|(r, _)| r[k].clone()));
    }

    std::fs::create_dir_all(&cfg.out)?;
    let mut files = vec![write_table(&cfg.out, "track", cfg.format, &records)?];
    for (k, (r, truth)) in refs.iter().zip(stream.graphs()).enumerate() {
        files.push(write_edges(&cfg.out, &format!("reference_seg{k}"), cfg.format, &r.w_star)?);
        files.push(write_edges(&cfg.out, &format!("truth_seg{k}"), cfg.format, truth)?);
    }
    let svg = cfg.out.join("error.svg");
    std::fs::write(&svg, error_svg(&records)?)?;
    files.push(svg);
    if scenario.export_signals {
        let path = cfg.out.join("signals.csv");
        let matrix = SignalMatrix {
            channels: Some((1..=graph.n_nodes).map(|i| format!("x{i}")).collect()),
            rows: samples,
        };
        let mut out = create(&path)?;
        write_signal_matrix(&matrix, &mut out).map_err(data_err)?;
        files.push(path);
    }

    let rel = cfg.solver.rel_threshold.0;
    let references = refs
        .iter()
        .zip(graph.segments())
        .zip(stream.graphs())
        .enumerate()
        .map(|(k, ((r, (first_t, last_t)), truth))| {
            let w = r.w_star.as_slice();
            let max = w.iter().copied().fold(0.0, f64::max);
            Ok(ReferenceSummary {
                segment: k,
                first_t,
                last_t,
                iterations: r.iterations,
                converged: r.converged,
                f_measure: f_measure(w, truth.as_slice(), rel * max).map_err(data_err)?.f_measure,
                total_weight: r.w_star.total_weight(),
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let method_summaries = methods
        .iter()
        .zip(&runs)
        .map(|(m, (r, rejected))| MethodSummary {
            method: *m,
            final_error: r.last().and_then(|x| x.error),
            final_f_measure: r.last().and_then(|x| x.f_measure),
            rejected_steps: *rejected,
        })
        .collect();
    files.push(cfg.out.join("run.json"));
    let summary = SynthSummary {
        command: "synth",
        seed: cfg.seed,
        scenario: graph.clone(),
        alpha: params.alpha(),
        beta: params.beta(),
        memory,
        references,
        methods: method_summaries,
        files: files.iter().map(|p| file_name(p)).collect(),
        records,
    };
    write_json(&cfg.out.join("run.json"), &summary)?;

    if let Some(r) = summary.references.iter().find(|r| !r.converged) {
        return Err(CliError::NotConverged(format!(
            "reference for segment {} stopped after {} iterations",
            r.segment, r.iterations
        )));
    }
    Ok(summary)
}

//! `track`: run the online tracker over a recorded signal matrix.

use std::fs::File;

use serde::{Deserialize, Serialize};

use topotrack::io::read_signal_matrix;
use topotrack::metrics::{closeness_centrality, Method};
use topotrack::EdgeVector;

use crate::config::{Config, DataKind};
use crate::error::{data_err, CliError, CliResult};
use crate::output::{file_name, write_edges, write_json, write_table};
use crate::plot::weights_svg;
use crate::runner::{zscore, Estimator};

/// One row of `weights.csv`: `t,time_s,method,total_weight,event`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightRecord {
    pub t: u64,
    pub time_s: f64,
    pub method: Method,
    pub total_weight: f64,
    /// Label of the event first reached at this row, else empty.
    pub event: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentralityRow {
    pub node: usize,
    pub channel: String,
    pub degree: f64,
    pub closeness: f64,
    /// False when the thresholded graph has several components.
    pub connected: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SnapshotSummary {
    pub index: usize,
    pub requested_time_s: f64,
    pub t: u64,
    pub time_s: f64,
    pub total_weight: f64,
    pub connected: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrackSummary {
    pub command: &'static str,
    pub n_channels: usize,
    pub n_rows: usize,
    pub alpha: f64,
    pub beta: f64,
    pub memory: topotrack::dissimilarity::MemoryMode,
    pub zscore: bool,
    pub snapshots: Vec<SnapshotSummary>,
    pub files: Vec<String>,
    #[serde(skip)]
    pub records: Vec<WeightRecord>,
}

/// First row (0-based) whose time is at or after `time_s`.
fn row_at(times: &[f64], time_s: f64) -> Option<usize> {
    times.iter().position(|t| *t >= time_s - 1e-9)
}

pub fn cmd_track(cfg: &Config) -> CliResult<TrackSummary> {
    let data = cfg.require_data()?;
    if data.kind != DataKind::Signals {
        return Err(CliError::Config("track needs data.kind = \"signals\"".into()));
    }
    let file = File::open(&data.path)
        .map_err(|e| CliError::Data(format!("cannot open {}: {e}", data.path.display())))?;
    let mut matrix = read_signal_matrix(file).map_err(|e| match e {
        topotrack::Error::Data(m) => CliError::Data(format!("{}: {m}", data.path.display())),
        other => data_err(other),
    })?;
    if data.zscore {
        zscore(&mut matrix.rows);
    }
    let n = matrix.n_channels();
    let channels: Vec<String> = matrix
        .channels
        .clone()
        .unwrap_or_else(|| (1..=n).map(|i| format!("ch{i}")).collect());
    let times: Vec<f64> = (0..matrix.rows.len())
        .map(|k| data.start_time_s + k as f64 / data.sampling_rate_hz)
        .collect();

    let mut event_rows = vec![String::new(); times.len()];
    for (time, label) in &data.events {
        let r = row_at(&times, *time).ok_or_else(|| {
            CliError::Config(format!("event '{label}' at {time} s lies after the last row"))
        })?;
        if !event_rows[r].is_empty() {
            event_rows[r].push(';');
        }
        event_rows[r].push_str(label);
    }
    let mut snapshot_rows = Vec::new();
    for &s in &data.snapshot_times_s {
        let r = row_at(&times, s).ok_or_else(|| {
            CliError::Config(format!("snapshot time {s} s lies after the last row"))
        })?;
        snapshot_rows.push((s, r));
    }

    let methods = cfg.methods_or(&[Method::Dpg]);
    let memory = cfg.solver.memory_mode(true);
    let params = cfg.solver.params();

    let mut records = Vec::with_capacity(times.len() * methods.len());
    // snapshots come from the first configured method
    let mut snapshots: Vec<Option<EdgeVector>> = vec![None; snapshot_rows.len()];
    let mut ests = methods
        .iter()
        .map(|m| Estimator::new(*m, n, cfg, memory))
        .collect::<CliResult<Vec<_>>>()?;
    for (k, x) in matrix.rows.iter().enumerate() {
        for (mi, (m, est)) in methods.iter().zip(ests.iter_mut()).enumerate() {
            let w = est.step(x)?;
            records.push(WeightRecord {
                t: k as u64 + 1,
                time_s: times[k],
                method: *m,
                total_weight: w.iter().sum(),
                event: event_rows[k].clone(),
            });
            if mi == 0 {
                for (slot, (_, r)) in snapshots.iter_mut().zip(&snapshot_rows) {
                    if *r == k {
                        *slot = Some(EdgeVector::new(n, w.to_vec()).map_err(data_err)?);
                    }
                }
            }
        }
    }

    std::fs::create_dir_all(&cfg.out)?;
    let mut files = vec![write_table(&cfg.out, "weights", cfg.format, &records)?];
    let mut summaries = Vec::new();
    for (i, (w, (requested, r))) in snapshots.iter().zip(&snapshot_rows).enumerate() {
        let w = w.as_ref().expect("every snapshot row is visited");
        let k = i + 1;
        files.push(write_edges(&cfg.out, &format!("snapshot_{k}"), cfg.format, w)?);
        let max = w.as_slice().iter().copied().fold(0.0, f64::max);
        let close = closeness_centrality(w, cfg.solver.rel_threshold.0 * max);
        let degrees = w.degrees();
        let rows: Vec<CentralityRow> = (0..n)
            .map(|node| CentralityRow {
                node: node + 1,
                channel: channels[node].clone(),
                degree: degrees[node],
                closeness: close.centrality[node],
                connected: close.connected,
            })
            .collect();
        files.push(write_table(&cfg.out, &format!("centrality_{k}"), cfg.format, &rows)?);
        summaries.push(SnapshotSummary {
            index: k,
            requested_time_s: *requested,
            t: *r as u64 + 1,
            time_s: times[*r],
            total_weight: w.total_weight(),
            connected: close.connected,
        });
    }
    let svg = cfg.out.join("weights.svg");
    std::fs::write(&svg, weights_svg(&records)?)?;
    files.push(svg);
    files.push(cfg.out.join("run.json"));

    let summary = TrackSummary {
        command: "track",
        n_channels: n,
        n_rows: times.len(),
        alpha: params.alpha(),
        beta: params.beta(),
        memory,
        zscore: data.zscore,
        snapshots: summaries,
        files: files.iter().map(|p| file_name(p)).collect(),
        records,
    };
    write_json(&cfg.out.join("run.json"), &summary)?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_lookup() {
        let times = [0.0, 0.5, 1.0, 1.5];
        assert_eq!(row_at(&times, -3.0), Some(0));
        assert_eq!(row_at(&times, 0.7), Some(2));
        assert_eq!(row_at(&times, 1.5), Some(3));
        assert_eq!(row_at(&times, 1.6), None);
    }
}

//! `gridsearch`: pick `(alpha, beta)` by the final-window F-measure.

use serde::Serialize;

use topotrack::dissimilarity::MemoryMode;
use topotrack::metrics::{grid_search, GridPoint};
use topotrack::synth::GraphScenario;

use crate::config::Config;
use crate::error::{config_err, CliResult};
use crate::output::{write_json, write_table};

#[derive(Debug, Clone, Serialize)]
pub struct GridSummary {
    pub command: &'static str,
    pub best: GridPoint,
    pub scenario: GraphScenario,
    pub memory: MemoryMode,
    pub window_fraction: f64,
    pub rel_threshold: f64,
    #[serde(skip)]
    pub scores: Vec<GridPoint>,
}

pub fn cmd_gridsearch(cfg: &Config) -> CliResult<GridSummary> {
    let scenario = &cfg.require_scenario()?.graph;
    let grid = cfg.require_grid()?;
    let options = cfg
        .grid_options(!scenario.switch_times.is_empty())
        .expect("grid table present");
    let result =
        grid_search(scenario, &grid.alphas, &grid.betas, &options).map_err(config_err)?;

    std::fs::create_dir_all(&cfg.out)?;
    write_table(&cfg.out, "grid_scores", cfg.format, &result.scores)?;
    let summary = GridSummary {
        command: "gridsearch",
        best: result.best,
        scenario: scenario.clone(),
        memory: options.memory,
        window_fraction: options.window_fraction,
        rel_threshold: options.rel_threshold,
        scores: result.scores,
    };
    write_json(&cfg.out.join("best.json"), &summary)?;
    Ok(summary)
}

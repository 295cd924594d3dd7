//! Experiment configuration, read from TOML.
//!
//! Unknown keys are rejected. Range violations are reported by the parser
//! with the line and column of the offending value; checks spanning several
//! keys are reported at the line of the key they name.

use std::ops::Range;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use toml::Spanned;

use topotrack::dissimilarity::{MemoryMode, DEFAULT_GAMMA};
use topotrack::dual::{DualInit, Params, SolveOptions, DEFAULT_ALPHA, DEFAULT_BETA};
use topotrack::metrics::{GridOptions, Method, DEFAULT_REL_THRESHOLD};
use topotrack::primal::PrimalOptions;
use topotrack::synth::{GraphModel, GraphScenario};

use crate::error::{CliError, CliResult};

macro_rules! checked_f64 {
    ($name:ident, $ok:expr, $what:literal) => {
        #[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Deserialize)]
        #[serde(try_from = "f64")]
        pub struct $name(pub f64);

        impl TryFrom<f64> for $name {
            type Error = String;
            fn try_from(v: f64) -> Result<Self, String> {
                let ok: fn(f64) -> bool = $ok;
                if ok(v) {
                    Ok(Self(v))
                } else {
                    Err(format!(concat!("expected ", $what, ", got {}"), v))
                }
            }
        }
    };
}

checked_f64!(Positive, |v| v.is_finite() && v > 0.0, "a positive number");
checked_f64!(NonNegative, |v| v.is_finite() && v >= 0.0, "a nonnegative number");
checked_f64!(Probability, |v| (0.0..=1.0).contains(&v), "a probability in [0, 1]");
checked_f64!(Discount, |v| v > 0.0 && v < 1.0, "a discount factor in (0, 1)");
checked_f64!(Window, |v| v > 0.0 && v <= 1.0, "a fraction in (0, 1]");
checked_f64!(Finite, |v| v.is_finite(), "a finite number");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(try_from = "u64")]
pub struct AtLeastOne(pub usize);

impl TryFrom<u64> for AtLeastOne {
    type Error = String;
    fn try_from(v: u64) -> Result<Self, String> {
        if v >= 1 {
            Ok(Self(v as usize))
        } else {
            Err("expected an integer >= 1, got 0".into())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemoryKind {
    Infinite,
    Ewma,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    #[default]
    Ones,
    Random,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub alpha: Positive,
    pub beta: Positive,
    /// Unset: EWMA for `track` and for scenarios with switch times,
    /// infinite memory otherwise.
    pub memory: Option<MemoryKind>,
    pub gamma: Discount,
    pub debias: bool,
    pub tol: Positive,
    pub max_iter: AtLeastOne,
    pub inner_steps: AtLeastOne,
    pub init: InitKind,
    pub rel_threshold: Positive,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            alpha: Positive(DEFAULT_ALPHA),
            beta: Positive(DEFAULT_BETA),
            memory: None,
            gamma: Discount(DEFAULT_GAMMA),
            debias: true,
            tol: Positive(1e-8),
            max_iter: AtLeastOne(50_000),
            inner_steps: AtLeastOne(1),
            init: InitKind::Ones,
            rel_threshold: Positive(DEFAULT_REL_THRESHOLD),
        }
    }
}

impl SolverConfig {
    pub fn params(&self) -> Params {
        Params::new(self.alpha.0, self.beta.0).expect("validated at parse time")
    }

    pub fn memory_mode(&self, dynamic: bool) -> MemoryMode {
        let kind = self.memory.unwrap_or(if dynamic {
            MemoryKind::Ewma
        } else {
            MemoryKind::Infinite
        });
        match kind {
            MemoryKind::Infinite => MemoryMode::Infinite,
            MemoryKind::Ewma => MemoryMode::Ewma {
                gamma: self.gamma.0,
                debias: self.debias,
            },
        }
    }

    pub fn dual_init(&self, seed: u64) -> DualInit {
        match self.init {
            InitKind::Ones => DualInit::Ones,
            InitKind::Random => DualInit::Random { seed },
        }
    }

    pub fn solve_options(&self, seed: u64) -> SolveOptions {
        SolveOptions {
            tol: self.tol.0,
            max_iter: self.max_iter.0,
            init: self.dual_init(seed),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BaselineConfig {
    /// Unset: `beta / (N - 1)`.
    pub step_size: Option<Positive>,
    pub degree_floor: Positive,
    pub max_backtracks: usize,
    pub initial_weight: Positive,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        let d = PrimalOptions::default();
        Self {
            step_size: None,
            degree_floor: Positive(d.degree_floor),
            max_backtracks: d.max_backtracks,
            initial_weight: Positive(d.initial_weight),
        }
    }
}

impl BaselineConfig {
    pub fn options(&self) -> PrimalOptions {
        PrimalOptions {
            step_size: self.step_size.map(|s| s.0),
            degree_floor: self.degree_floor.0,
            max_backtracks: self.max_backtracks,
            initial_weight: self.initial_weight.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Er,
    Sbm,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub model: Spanned<ModelKind>,
    pub n_nodes: Spanned<usize>,
    pub p: Option<Probability>,
    pub blocks: Option<Spanned<Vec<usize>>>,
    pub p_in: Option<Probability>,
    pub p_out: Option<Probability>,
    #[serde(default)]
    pub switch_times: Option<Spanned<Vec<u64>>>,
    #[serde(default = "default_resample")]
    pub resample_fraction: Probability,
    #[serde(default = "default_sigma")]
    pub noise_sigma: NonNegative,
    #[serde(default)]
    pub horizon: Option<Spanned<u64>>,
    #[serde(default)]
    pub export_signals: bool,
}

fn default_resample() -> Probability {
    Probability(0.1)
}

fn default_sigma() -> NonNegative {
    NonNegative(0.01)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataKind {
    /// One row per time sample, one column per node.
    #[default]
    Signals,
    /// A precomputed dissimilarity: edge vector (`weight`) or edge list
    /// (`i,j,weight`).
    Dissimilarity,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventConfig {
    pub time_s: Finite,
    #[serde(default = "default_event_label")]
    pub label: String,
}

fn default_event_label() -> String {
    "event".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub path: Spanned<PathBuf>,
    #[serde(default)]
    pub kind: DataKind,
    /// Only used to put rows on a time axis.
    #[serde(default)]
    pub sampling_rate_hz: Option<Positive>,
    /// Time of the first row.
    #[serde(default)]
    pub start_time_s: Option<Finite>,
    #[serde(default)]
    pub zscore: bool,
    /// Inclusive 1-based row range used by `batch`.
    #[serde(default)]
    pub rows: Option<Spanned<[usize; 2]>>,
    #[serde(default)]
    pub events: Vec<EventConfig>,
    /// Absolute times at which `track` exports the learned graph.
    #[serde(default)]
    pub snapshot_times_s: Vec<Finite>,
    /// Export times relative to the first event.
    #[serde(default)]
    pub snapshot_offsets_s: Option<Spanned<Vec<Finite>>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub alpha: Spanned<Vec<Positive>>,
    pub beta: Spanned<Vec<Positive>>,
    #[serde(default = "default_window")]
    pub window_fraction: Window,
}

fn default_window() -> Window {
    Window(0.1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(&self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<Format>,
    #[serde(default)]
    pub methods: Option<Spanned<Vec<Method>>>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub baseline: BaselineConfig,
    #[serde(default)]
    pub scenario: Option<ScenarioConfig>,
    #[serde(default)]
    pub data: Option<DataConfig>,
    #[serde(default)]
    pub grid: Option<GridConfig>,
}

/// A parsed and cross-checked configuration.
#[derive(Debug, Clone)]
pub struct Config {
    pub seed: u64,
    pub out: PathBuf,
    pub format: Format,
    /// Unset: both methods, except `track` which runs DPG only.
    pub methods: Option<Vec<Method>>,
    pub solver: SolverConfig,
    pub baseline: BaselineConfig,
    pub scenario: Option<Scenario>,
    pub data: Option<Data>,
    pub grid: Option<Grid>,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub graph: GraphScenario,
    pub export_signals: bool,
}

#[derive(Debug, Clone)]
pub struct Data {
    /// Resolved against the config file's directory.
    pub path: PathBuf,
    pub kind: DataKind,
    pub sampling_rate_hz: f64,
    pub start_time_s: f64,
    pub zscore: bool,
    pub rows: Option<(usize, usize)>,
    pub events: Vec<(f64, String)>,
    pub snapshot_times_s: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Grid {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub window_fraction: f64,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

pub const DEFAULT_SEED: u64 = 1;
/// Output directory, relative to the configuration file, when none is given.
pub const DEFAULT_OUT: &str = "results";

struct Source<'a> {
    name: &'a str,
    text: &'a str,
}

impl Source<'_> {
    fn error(&self, span: Range<usize>, msg: impl std::fmt::Display) -> CliError {
        let before = &self.text[..span.start.min(self.text.len())];
        let line = before.matches('\n').count() + 1;
        let col = before.len() - before.rfind('\n').map(|i| i + 1).unwrap_or(0) + 1;
        CliError::Config(format!("{}: line {line}, column {col}: {msg}", self.name))
    }
}

impl Config {
    pub fn load(path: &Path, overrides: &Overrides) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, &path.display().to_string(), base, overrides)
    }

    /// Parses `text`; relative paths in the file resolve against `base`.
    pub fn parse(text: &str, name: &str, base: &Path, overrides: &Overrides) -> CliResult<Self> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| CliError::Config(format!("{name}: {e}")))?;
        let src = Source { name, text };
        let seed = overrides.seed.or(raw.seed).unwrap_or(DEFAULT_SEED);

        let methods = match &raw.methods {
            None => None,
            Some(m) if m.get_ref().is_empty() => {
                return Err(src.error(m.span(), "methods must not be empty"))
            }
            Some(m) => {
                let mut seen = Vec::new();
                for x in m.get_ref() {
                    if seen.contains(x) {
                        return Err(src.error(m.span(), format!("method {x} listed twice")));
                    }
                    seen.push(*x);
                }
                Some(seen)
            }
        };

        let scenario = raw
            .scenario
            .as_ref()
            .map(|s| build_scenario(&src, s, seed))
            .transpose()?;
        let data = raw.data.as_ref().map(|d| build_data(&src, d, base)).transpose()?;
        let grid = match &raw.grid {
            None => None,
            Some(g) => {
                for (name, v) in [("alpha", &g.alpha), ("beta", &g.beta)] {
                    if v.get_ref().is_empty() {
                        return Err(src.error(v.span(), format!("grid.{name} must not be empty")));
                    }
                }
                Some(Grid {
                    alphas: g.alpha.get_ref().iter().map(|v| v.0).collect(),
                    betas: g.beta.get_ref().iter().map(|v| v.0).collect(),
                    window_fraction: g.window_fraction.0,
                })
            }
        };

        Ok(Config {
            seed,
            out: overrides
                .out
                .clone()
                .or(raw.out.map(|o| base.join(o)))
                .unwrap_or_else(|| base.join(DEFAULT_OUT)),
            format: overrides.format.or(raw.format).unwrap_or_default(),
            methods,
            solver: raw.solver,
            baseline: raw.baseline,
            scenario,
            data,
            grid,
        })
    }

    pub fn methods_or(&self, default: &[Method]) -> Vec<Method> {
        self.methods.clone().unwrap_or_else(|| default.to_vec())
    }

    pub fn grid_options(&self, dynamic: bool) -> Option<GridOptions> {
        self.grid.as_ref().map(|g| GridOptions {
            memory: self.solver.memory_mode(dynamic),
            window_fraction: g.window_fraction,
            rel_threshold: self.solver.rel_threshold.0,
        })
    }

    pub fn require_scenario(&self) -> CliResult<&Scenario> {
        self.scenario
            .as_ref()
            .ok_or_else(|| CliError::Config("this command needs a [scenario] table".into()))
    }

    pub fn require_data(&self) -> CliResult<&Data> {
        self.data
            .as_ref()
            .ok_or_else(|| CliError::Config("this command needs a [data] table".into()))
    }

    pub fn require_grid(&self) -> CliResult<&Grid> {
        self.grid
            .as_ref()
            .ok_or_else(|| CliError::Config("this command needs a [grid] table".into()))
    }
}

fn build_scenario(src: &Source, s: &ScenarioConfig, seed: u64) -> CliResult<Scenario> {
    let n = *s.n_nodes.get_ref();
    if n < 2 {
        return Err(src.error(s.n_nodes.span(), "n_nodes must be at least 2"));
    }
    let model = match s.model.get_ref() {
        ModelKind::Er => {
            if s.blocks.is_some() || s.p_in.is_some() || s.p_out.is_some() {
                return Err(src.error(
                    s.model.span(),
                    "model \"er\" takes p only; blocks, p_in and p_out belong to \"sbm\"",
                ));
            }
            let p = s
                .p
                .ok_or_else(|| src.error(s.model.span(), "model \"er\" needs p"))?;
            if p.0 == 0.0 {
                return Err(src.error(s.model.span(), "p = 0 can never give a connected graph"));
            }
            GraphModel::Er { p: p.0 }
        }
        ModelKind::Sbm => {
            if s.p.is_some() {
                return Err(src.error(s.model.span(), "model \"sbm\" takes p_in and p_out, not p"));
            }
            let blocks = s
                .blocks
                .as_ref()
                .ok_or_else(|| src.error(s.model.span(), "model \"sbm\" needs blocks"))?;
            let total: usize = blocks.get_ref().iter().sum();
            if total != n || blocks.get_ref().contains(&0) {
                return Err(src.error(
                    blocks.span(),
                    format!("block sizes must be positive and sum to n_nodes = {n}"),
                ));
            }
            let (p_in, p_out) = match (s.p_in, s.p_out) {
                (Some(a), Some(b)) => (a.0, b.0),
                _ => return Err(src.error(s.model.span(), "model \"sbm\" needs p_in and p_out")),
            };
            GraphModel::Sbm {
                blocks: blocks.get_ref().clone(),
                p_in,
                p_out,
            }
        }
    };
    let horizon = s.horizon.as_ref().map(|h| *h.get_ref()).unwrap_or(2000);
    if horizon == 0 {
        let span = s.horizon.as_ref().map(|h| h.span()).unwrap_or(0..0);
        return Err(src.error(span, "horizon must be positive"));
    }
    let switch_times = s
        .switch_times
        .as_ref()
        .map(|v| v.get_ref().clone())
        .unwrap_or_default();
    let graph = GraphScenario {
        model,
        n_nodes: n,
        switch_times,
        resample_fraction: s.resample_fraction.0,
        noise_sigma: s.noise_sigma.0,
        horizon,
        seed,
    };
    if let Err(e) = graph.validate() {
        let span = s
            .switch_times
            .as_ref()
            .map(|v| v.span())
            .unwrap_or_else(|| s.model.span());
        return Err(src.error(span, e));
    }
    Ok(Scenario {
        graph,
        export_signals: s.export_signals,
    })
}

fn build_data(src: &Source, d: &DataConfig, base: &Path) -> CliResult<Data> {
    let path = base.join(d.path.get_ref());
    if !path.is_file() {
        return Err(src.error(
            d.path.span(),
            format!("data file {} does not exist", path.display()),
        ));
    }
    let rows = match &d.rows {
        None => None,
        Some(r) => {
            let [a, b] = *r.get_ref();
            if a == 0 || b < a {
                return Err(src.error(r.span(), "rows must be [first, last] with 1 <= first <= last"));
            }
            Some((a, b))
        }
    };
    let events: Vec<(f64, String)> = d.events.iter().map(|e| (e.time_s.0, e.label.clone())).collect();
    let mut snapshot_times_s: Vec<f64> = d.snapshot_times_s.iter().map(|v| v.0).collect();
    if let Some(offsets) = &d.snapshot_offsets_s {
        let anchor = events.first().map(|e| e.0).ok_or_else(|| {
            src.error(offsets.span(), "snapshot_offsets_s needs at least one event")
        })?;
        snapshot_times_s.extend(offsets.get_ref().iter().map(|o| anchor + o.0));
    }
    Ok(Data {
        path,
        kind: d.kind,
        sampling_rate_hz: d.sampling_rate_hz.map(|v| v.0).unwrap_or(1.0),
        start_time_s: d.start_time_s.map(|v| v.0).unwrap_or(0.0),
        zscore: d.zscore,
        rows,
        events,
        snapshot_times_s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> CliResult<Config> {
        Config::parse(text, "test.toml", Path::new("."), &Overrides::default())
    }

    fn message(text: &str) -> String {
        match parse(text) {
            Err(CliError::Config(m)) => m,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn defaults() {
        let c = parse("").unwrap();
        assert_eq!(c.seed, DEFAULT_SEED);
        assert_eq!(c.methods, None);
        assert_eq!(c.methods_or(&[Method::Dpg]), vec![Method::Dpg]);
        assert_eq!(c.solver.alpha.0, DEFAULT_ALPHA);
        assert_eq!(c.solver.beta.0, DEFAULT_BETA);
        assert_eq!(c.format, Format::Csv);
        assert_eq!(c.solver.memory_mode(false), MemoryMode::Infinite);
        assert_eq!(
            c.solver.memory_mode(true),
            MemoryMode::Ewma {
                gamma: 0.002,
                debias: true
            }
        );
    }

    #[test]
    fn unknown_key_reports_its_line() {
        let m = message("seed = 3\n\n[solver]\nalpha = 1.0\nalpah = 2.0\n");
        assert!(m.contains("line 5"), "{m}");
        assert!(m.contains("alpah"), "{m}");
    }

    #[test]
    fn range_errors_report_their_line() {
        let m = message("[solver]\nbeta = 0.5\ngamma = 1.5\n");
        assert!(m.contains("line 3"), "{m}");
        assert!(m.contains("(0, 1)"), "{m}");
        let m = message("[solver]\nalpha = -1\n");
        assert!(m.contains("line 2") && m.contains("positive"), "{m}");
        let m = message("[solver]\ninner_steps = 0\n");
        assert!(m.contains("line 2"), "{m}");
    }

    #[test]
    fn cross_field_errors_report_their_line() {
        let m = message(
            "[scenario]\nmodel = \"sbm\"\nn_nodes = 10\nblocks = [4, 4]\np_in = 0.5\np_out = 0.1\n",
        );
        assert!(m.contains("line 4") && m.contains("sum to"), "{m}");
        let m = message("[scenario]\nmodel = \"er\"\nn_nodes = 10\n");
        assert!(m.contains("line 2") && m.contains("needs p"), "{m}");
        let m = message(
            "[scenario]\nmodel = \"er\"\np = 0.2\nn_nodes = 10\nhorizon = 100\nswitch_times = [100]\n",
        );
        assert!(m.contains("line 6"), "{m}");
        let m = message("methods = [\"dpg\", \"dpg\"]\n");
        assert!(m.contains("line 1") && m.contains("twice"), "{m}");
    }

    #[test]
    fn missing_data_file_is_a_config_error() {
        let m = message("[data]\npath = \"/definitely/not/here.csv\"\n");
        assert!(m.contains("line 2") && m.contains("does not exist"), "{m}");
    }

    #[test]
    fn overrides_win() {
        let o = Overrides {
            seed: Some(9),
            out: Some("elsewhere".into()),
            format: Some(Format::Json),
        };
        let c = Config::parse("seed = 3\nout = \"here\"\nformat = \"csv\"\n", "t", Path::new("."), &o)
            .unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.out, PathBuf::from("elsewhere"));
        assert_eq!(c.format, Format::Json);
        let c = Config::parse("out = \"here\"\n", "t", Path::new("base"), &Overrides::default())
            .unwrap();
        assert_eq!(c.out, Path::new("base").join("here"));
        let c = Config::parse("", "t", Path::new("base"), &Overrides::default()).unwrap();
        assert_eq!(c.out, Path::new("base").join(DEFAULT_OUT));
    }

    #[test]
    fn scenario_seed_follows_run_seed() {
        let text = "seed = 4\n[scenario]\nmodel = \"sbm\"\nn_nodes = 6\nblocks = [3, 3]\np_in = 0.9\np_out = 0.2\nswitch_times = [50]\nhorizon = 100\n";
        let c = parse(text).unwrap();
        let s = &c.scenario.unwrap().graph;
        assert_eq!(s.seed, 4);
        assert_eq!(s.segments(), vec![(1, 50), (51, 100)]);
    }
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use topotrack::io::{read_edge_list, write_signal_matrix, SignalMatrix};
use topotrack::metrics::TrackRecord;
use topotrack::synth::connectivity_drop;
use topotrack_cli::batch::cmd_batch;
use topotrack_cli::config::{Config, Overrides};
use topotrack_cli::output::{read_table, EdgeRow};
use topotrack_cli::synth::cmd_synth;
use topotrack_cli::track::{cmd_track, CentralityRow, WeightRecord};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn config(dir: &Path, text: &str) -> Config {
    Config::parse(text, "test.toml", dir, &Overrides::default()).unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path
}

fn topotrack(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_topotrack"))
        .args(args)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn signals(dir: &Path, n: usize, rows: usize) -> PathBuf {
    let (rows, _) = connectivity_drop(n, 0.5, 0.5, rows / 2, rows - rows / 2, 0.01, 3).unwrap();
    let path = dir.join("signals.csv");
    write_signal_matrix(&SignalMatrix { channels: None, rows }, fs::File::create(&path).unwrap())
        .unwrap();
    path
}

const SMALL_SCENARIO: &str = r#"
[scenario]
model = "er"
p = 0.5
n_nodes = 10
horizon = 200
"#;

#[test]
fn exit_code_for_config_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "seed = 3\n[solver]\nalpah = 1.0\n");
    let out = topotrack(&["synth", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let msg = stderr(&out);
    assert!(msg.contains("line 3"), "{msg}");
    assert!(msg.contains("alpah"), "{msg}");

    let out = topotrack(&["synth"]);
    assert_eq!(out.status.code(), Some(2));

    let cfg = write_config(tmp.path(), "[solver]\nbeta = -1.0\n");
    assert_eq!(topotrack(&["batch", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn exit_code_for_data_errors() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("signals.csv"), "1,2,3\n4,oops,6\n").unwrap();
    let cfg = write_config(
        tmp.path(),
        "[data]\npath = \"signals.csv\"\nkind = \"signals\"\n",
    );
    let out = topotrack(&["track", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let msg = stderr(&out);
    assert!(msg.contains("signals.csv") && msg.contains("line 2"), "{msg}");
}

#[test]
fn exit_code_for_non_convergence() {
    let tmp = tempfile::tempdir().unwrap();
    fs::copy(fixtures().join("batch_n5/e.csv"), tmp.path().join("e.csv")).unwrap();
    let cfg = write_config(
        tmp.path(),
        "[solver]\nmax_iter = 3\n[data]\npath = \"e.csv\"\nkind = \"dissimilarity\"\n",
    );
    let out = topotrack(&["batch", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    // the report is still written
    assert!(tmp.path().join("results/report.json").exists());
}

#[test]
fn batch_matches_independent_solution() {
    let tmp = tempfile::tempdir().unwrap();
    let e = fixtures().join("batch_n5/e.csv");
    let cfg = config(
        tmp.path(),
        &format!(
            "[solver]\nalpha = 1.0\nbeta = 0.5\ntol = 1e-12\n[data]\npath = {:?}\nkind = \"dissimilarity\"\n",
            e.display().to_string()
        ),
    );
    let report = cmd_batch(&cfg).unwrap();
    assert!(report.converged);
    let expected =
        read_edge_list(fs::File::open(fixtures().join("batch_n5/w_star.csv")).unwrap()).unwrap();
    let written = read_edge_list(fs::File::open(cfg.out.join("w_star.csv")).unwrap()).unwrap();
    for (a, b) in written.as_slice().iter().zip(expected.as_slice()) {
        assert!((a - b).abs() <= 1e-6, "{a} vs {b}");
    }
}

#[test]
fn batch_restarts_agree() {
    let tmp = tempfile::tempdir().unwrap();
    signals(tmp.path(), 8, 300);
    let text = "[solver]\ninit = \"random\"\ntol = 1e-12\n[data]\npath = \"signals.csv\"\nkind = \"signals\"\n";
    let solve = |seed| {
        let cfg = Config::parse(
            text,
            "t.toml",
            tmp.path(),
            &Overrides {
                seed: Some(seed),
                out: Some(tmp.path().join(format!("out{seed}"))),
                ..Default::default()
            },
        )
        .unwrap();
        cmd_batch(&cfg).unwrap().w_star.unwrap()
    };
    let (a, b) = (solve(1), solve(2));
    let gap = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    assert!(gap <= 1e-6, "{gap}");
}

#[test]
fn constant_signals_keep_every_degree_positive() {
    let tmp = tempfile::tempdir().unwrap();
    let rows = vec![vec![0.5, 0.5, 0.5, 0.5, 0.5]; 40];
    write_signal_matrix(
        &SignalMatrix { channels: None, rows },
        fs::File::create(tmp.path().join("flat.csv")).unwrap(),
    )
    .unwrap();
    let cfg = config(tmp.path(), "[data]\npath = \"flat.csv\"\nkind = \"signals\"\n");
    let report = cmd_batch(&cfg).unwrap();
    assert!(report.converged);
    assert!(report.min_degree > 0.0);

    let cfg = config(
        tmp.path(),
        "methods = [\"dpg\", \"primal_pg\"]\n[data]\npath = \"flat.csv\"\nkind = \"signals\"\nsnapshot_times_s = [39]\n",
    );
    let summary = cmd_track(&cfg).unwrap();
    assert!(summary.records.iter().all(|r| r.total_weight > 0.0));
    let centrality: Vec<CentralityRow> = read_table(&cfg.out.join("centrality_1.csv")).unwrap();
    assert!(centrality.iter().all(|r| r.degree > 0.0));
}

#[test]
fn track_replays_exported_synth_signals() {
    let tmp = tempfile::tempdir().unwrap();
    let synth = config(
        tmp.path(),
        &format!("out = \"synth\"\nmethods = [\"dpg\"]\n[solver]\nmemory = \"infinite\"\n{SMALL_SCENARIO}export_signals = true\n"),
    );
    let s = cmd_synth(&synth).unwrap();
    let track = config(
        tmp.path(),
        "out = \"track\"\n[solver]\nmemory = \"infinite\"\n[data]\npath = \"synth/signals.csv\"\nkind = \"signals\"\n",
    );
    let t = cmd_track(&track).unwrap();
    let a: Vec<f64> = s.records.iter().map(|r| r.total_weight).collect();
    let b: Vec<f64> = t.records.iter().map(|r| r.total_weight).collect();
    assert_eq!(a, b);
}

#[test]
fn emitted_tables_parse_back() {
    let tmp = tempfile::tempdir().unwrap();
    signals(tmp.path(), 6, 120);
    let synth = config(tmp.path(), &format!("out = \"synth\"\n{SMALL_SCENARIO}"));
    let s = cmd_synth(&synth).unwrap();
    let track: Vec<TrackRecord> = read_table(&synth.out.join("track.csv")).unwrap();
    assert_eq!(track, s.records);
    for name in ["reference_seg0.csv", "truth_seg0.csv"] {
        let rows: Vec<EdgeRow> = read_table(&synth.out.join(name)).unwrap();
        assert_eq!(rows.len(), 45);
    }
    let run: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(synth.out.join("run.json")).unwrap()).unwrap();
    for f in run["files"].as_array().unwrap() {
        assert!(synth.out.join(f.as_str().unwrap()).exists(), "{f}");
    }

    for format in ["csv", "json"] {
        let cfg = config(
            tmp.path(),
            &format!(
                "out = \"track_{format}\"\nformat = \"{format}\"\n[data]\npath = \"signals.csv\"\nkind = \"signals\"\nsampling_rate_hz = 10\nevents = [{{ time_s = 6.0, label = \"marker\" }}]\nsnapshot_times_s = [3.0]\n"
            ),
        );
        let t = cmd_track(&cfg).unwrap();
        let rows: Vec<WeightRecord> = read_table(&cfg.out.join(format!("weights.{format}"))).unwrap();
        assert_eq!(rows, t.records);
        assert_eq!(rows.iter().filter(|r| r.event == "marker").count(), 1);
        assert_eq!(rows.iter().find(|r| r.event == "marker").unwrap().t, 61);
        let c: Vec<CentralityRow> = read_table(&cfg.out.join(format!("centrality_1.{format}"))).unwrap();
        assert_eq!(c.len(), 6);
        let e: Vec<EdgeRow> = read_table(&cfg.out.join(format!("snapshot_1.{format}"))).unwrap();
        assert_eq!(e.len(), 15);
    }
}

#[test]
fn plot_redraws_from_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let synth = config(tmp.path(), &format!("out = \"synth\"\nformat = \"json\"\n{SMALL_SCENARIO}"));
    cmd_synth(&synth).unwrap();
    let before = fs::read_to_string(synth.out.join("error.svg")).unwrap();
    fs::remove_file(synth.out.join("error.svg")).unwrap();
    let table = synth.out.join("track.json");
    let out = topotrack(&["plot", table.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(fs::read_to_string(synth.out.join("error.svg")).unwrap(), before);

    signals(tmp.path(), 5, 60);
    let cfg = config(tmp.path(), "out = \"track\"\n[data]\npath = \"signals.csv\"\nkind = \"signals\"\n");
    cmd_track(&cfg).unwrap();
    let redraw = tmp.path().join("redraw");
    let out = topotrack(&[
        "plot",
        cfg.out.join("weights.csv").to_str().unwrap(),
        "--out",
        redraw.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(fs::read_to_string(redraw.join("weights.svg")).unwrap().starts_with("<svg"));

    let out = topotrack(&["plot", tmp.path().join("signals.csv").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn seed_flag_overrides_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &format!("seed = 5\n{SMALL_SCENARIO}"));
    let run = |seed: &str, out: &str| {
        let o = topotrack(&["synth", "--config", cfg.to_str().unwrap(), "--seed", seed, "--out", out]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        fs::read(Path::new(out).join("track.csv")).unwrap()
    };
    let dir = |s: &str| tmp.path().join(s).to_string_lossy().into_owned();
    let a = run("5", &dir("a"));
    let b = run("6", &dir("b"));
    let c = run("5", &dir("c"));
    assert_ne!(a, b);
    assert_eq!(a, c);
}

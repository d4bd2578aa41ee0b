use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tfrcast::evaluate::{SCORES_HEADER, SUMMARY_HEADER};
use tfrcast::pipeline::{country_code, member_file, FORECASTS_FILE, MANIFEST_FILE, PANEL_FILE, SCORES_FILE, SUMMARY_FILE};
use tfrcast::project::{read_forecasts, write_forecasts, ForecastRecord, FORECAST_HEADER};

const TINY_CONFIG: &str = "\
# small enough for a test run
l_enc=8
l_pred=15
d_emb=0
hidden_dim=8
n_layers=1
batch_size=32
lr=0.005
max_epochs=3
members=2
";

fn tfrcast(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tfrcast"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = tfrcast(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Run {
    _dir: tempfile::TempDir,
    root: PathBuf,
}

impl Run {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        std::fs::write(root.join("config.txt"), TINY_CONFIG).unwrap();
        Run { _dir: dir, root }
    }

    fn p(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    fn config(&self) -> String {
        s(&self.p("config.txt")).to_string()
    }

    /// synth → ingest → train (holdout) → evaluate.
    fn holdout_chain(&self, comparators: &[PathBuf]) {
        let cfg = self.config();
        ok(&["synth", "--config", &cfg, "--countries", "8", "--years", "60", "--out", s(&self.p("raw.csv"))]);
        ok(&["ingest", "--config", &cfg, "--raw", s(&self.p("raw.csv")), "--out", s(&self.p("ingest"))]);
        let panel = self.p("ingest").join(PANEL_FILE);
        ok(&["train", "--config", &cfg, "--panel", s(&panel), "--out", s(&self.p("model"))]);
        let mut args = vec![
            "evaluate".to_string(),
            "--panel".into(),
            s(&panel).into(),
            "--model".into(),
            s(&self.p("model")).into(),
            "--out".into(),
            s(&self.p("eval")).into(),
        ];
        for c in comparators {
            args.push("--comparators".into());
            args.push(s(c).into());
        }
        ok(&args.iter().map(String::as_str).collect::<Vec<_>>());
    }
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

#[test]
fn version_and_usage_errors() {
    assert!(ok(&["--version"]).contains("schema 1"));
    let out = tfrcast(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[usage]"));
}

#[test]
fn missing_input_is_an_input_error() {
    let out = tfrcast(&["ingest", "--raw", "/nonexistent/raw.csv", "--out", "/tmp/never"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[input]"));
}

#[test]
fn bad_config_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.txt");
    std::fs::write(&cfg, "hidden_dim=8\nhiden=3\n").unwrap();
    let out = tfrcast(&["gradcheck", "--config", s(&cfg), "--coordinates", "5"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error[config]") && err.contains("line 2"), "{err}");
}

#[test]
fn gradcheck_passes() {
    let out = ok(&["gradcheck", "--coordinates", "60"]);
    assert!(out.contains("checked 60 coordinates"), "{out}");
}

#[test]
fn synth_is_byte_identical_for_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (dir.path().join("a.csv"), dir.path().join("b.csv"), dir.path().join("c.csv"));
    ok(&["synth", "--countries", "5", "--years", "30", "--out", s(&a)]);
    ok(&["synth", "--countries", "5", "--years", "30", "--out", s(&b)]);
    ok(&["synth", "--countries", "5", "--years", "30", "--seed", "8", "--out", s(&c)]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());
}

#[test]
fn holdout_chain_writes_scores_and_summary() {
    let run = Run::new();
    // Constant comparator for every synthetic country over the held-out years.
    let comp = run.p("flat.csv");
    let recs: Vec<ForecastRecord> = (0..8)
        .flat_map(|i| (2009..2024).map(move |y| ForecastRecord::point(&country_code(i), "flat", y, 1.8)))
        .collect();
    write_forecasts(&comp, &recs).unwrap();
    run.holdout_chain(&[comp]);

    let scores = read(&run.p("eval").join(SCORES_FILE));
    let mut lines = scores.lines();
    assert_eq!(lines.next(), Some(SCORES_HEADER));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert!(rows.iter().all(|r| r.len() == 9));
    for model in ["neural", "drift", "flat"] {
        assert_eq!(rows.iter().filter(|r| r[1] == model).count(), 8, "{model}");
    }

    let summary = read(&run.p("eval").join(SUMMARY_FILE));
    assert_eq!(summary.lines().next(), Some(SUMMARY_HEADER));
    // 7 metrics × 3 models.
    assert_eq!(summary.lines().count(), 1 + 21);

    let manifest: serde_json::Value = serde_json::from_str(&read(&run.p("eval").join(MANIFEST_FILE))).unwrap();
    assert_eq!(manifest["command"], "evaluate");
    assert_eq!(manifest["schema_version"], 1);
}

#[test]
fn training_is_reproducible() {
    let (a, b) = (Run::new(), Run::new());
    a.holdout_chain(&[]);
    b.holdout_chain(&[]);
    for i in 0..2 {
        let f = member_file(i);
        assert_eq!(std::fs::read(a.p("model").join(&f)).unwrap(), std::fs::read(b.p("model").join(&f)).unwrap());
    }
    for f in ["eval/forecasts_holdout.csv", "eval/scores.csv", "eval/summary.csv"] {
        assert_eq!(read(&a.p(f)), read(&b.p(f)), "{f}");
    }
}

#[test]
fn evaluate_rejects_full_sample_model() {
    let run = Run::new();
    let cfg = run.config();
    ok(&["synth", "--countries", "6", "--years", "60", "--out", s(&run.p("raw.csv"))]);
    ok(&["ingest", "--raw", s(&run.p("raw.csv")), "--out", s(&run.p("ingest"))]);
    let panel = run.p("ingest").join(PANEL_FILE);
    ok(&["train", "--config", &cfg, "--panel", s(&panel), "--out", s(&run.p("model")), "--full-sample"]);
    let out = tfrcast(&["evaluate", "--panel", s(&panel), "--model", s(&run.p("model")), "--out", s(&run.p("eval"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[config]"));
}

#[test]
fn forecast_and_report_chain() {
    let run = Run::new();
    let cfg = run.config();
    ok(&["synth", "--countries", "6", "--years", "60", "--out", s(&run.p("raw.csv"))]);
    ok(&["ingest", "--raw", s(&run.p("raw.csv")), "--out", s(&run.p("ingest"))]);
    let panel = run.p("ingest").join(PANEL_FILE);
    ok(&["train", "--config", &cfg, "--panel", s(&panel), "--out", s(&run.p("model")), "--full-sample"]);
    ok(&["forecast", "--panel", s(&panel), "--model", s(&run.p("model")), "--out", s(&run.p("fc")), "--end-year", "2040"]);

    let fc = run.p("fc").join(FORECASTS_FILE);
    assert_eq!(read(&fc).lines().next(), Some(FORECAST_HEADER.join(",").as_str()));
    let recs = read_forecasts(&fc).unwrap();
    // 6 countries × 2024..=2040 for each model.
    assert_eq!(recs.iter().filter(|r| r.model == "neural").count(), 6 * 17);
    assert_eq!(recs.iter().filter(|r| r.model == "drift").count(), 6 * 17);
    assert!(recs.iter().all(|r| r.is_monotone() && r.quantiles.iter().all(|v| *v > 0.0)));

    let weights = run.p("w.csv");
    std::fs::write(&weights, "country_code,weight\nS000,3\nS001,1\n").unwrap();
    let regions = run.p("r.csv");
    std::fs::write(&regions, "country_code,region\nS000,a\nS001,a\nS002,b\n").unwrap();
    ok(&[
        "report",
        "--comparators",
        s(&fc),
        "--weights",
        s(&weights),
        "--regions",
        s(&regions),
        "--out",
        s(&run.p("rep")),
    ]);
    let agg = read(&run.p("rep").join("aggregate.csv"));
    assert!(agg.lines().count() > 1);
    let json: serde_json::Value = serde_json::from_str(&read(&run.p("rep").join("report.json"))).unwrap();
    assert_eq!(json["endpoint_year"], 2040);

    let bad = run.p("bad_w.csv");
    std::fs::write(&bad, "country_code,weight\nS000,-1\n").unwrap();
    let out = tfrcast(&["report", "--comparators", s(&fc), "--weights", s(&bad), "--out", s(&run.p("rep2"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[parse]"));
}

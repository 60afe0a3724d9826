mod common;

use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;

use evd_select::pipeline::{
    emit_report, ingest_csv, parse_csv, read_json, run_inference, run_pipeline, write_json,
    PipelineRun, RunConfig, SelectionStage, Stamped, DRAWS_FILE, PREDICTIVE_FILE, REPORT_FILE,
};
use evd_select::{Error, Stage};
use serde_json::Value;

use common::*;

/// A reduced configuration: three candidate sizes, 2·10^4 importance draws
/// and short chains. Everything else is the case-study default.
const SMALL: &str = r#"{
  "schema_version": 1,
  "candidate_ms": [4, 5, 6],
  "is": {"kappa_mu": 0.0, "sigma_mu": 50.0, "rho_xi": 2.0, "n_draws": 20000},
  "compat_draws": 20000,
  "mcmc": {"chains": 2, "iterations": 6000, "burn_in": 2000, "thin": 1,
           "independence_prob": 0.3, "pilot_iterations": 2000},
  "seed": 7
}"#;

fn small() -> RunConfig {
    RunConfig::from_json(SMALL).unwrap()
}

fn small_run() -> &'static PipelineRun {
    static RUN: OnceLock<PipelineRun> = OnceLock::new();
    RUN.get_or_init(|| run_pipeline(&small(), &corsica()).unwrap())
}

#[test]
fn fixture_has_the_published_extremes() {
    let d = corsica();
    assert_eq!(d.len(), 29);
    assert_eq!(d.records().first().unwrap().label, "1987");
    assert_eq!(d.records().last().unwrap().label, "2015");
    let max = d.max();
    assert_eq!((max.label.as_str(), max.value), ("1993", 316.1));
    let min = d.min();
    assert_eq!((min.label.as_str(), min.value), ("2009", 51.2));
}

#[test]
fn malformed_rows_report_their_line() {
    let e = parse_csv("year,value\n1990,10\n1991,ten\n".as_bytes()).unwrap_err();
    assert!(matches!(e, Error::DataLine { line: 3, .. }), "{e}");
    let e = parse_csv("1990,10,3\n".as_bytes()).unwrap_err();
    assert!(matches!(e, Error::DataLine { line: 1, .. }), "{e}");
    assert!(matches!(parse_csv("".as_bytes()), Err(Error::Data(_))));
    assert!(matches!(parse_csv("year,value\n".as_bytes()), Err(Error::Data(_))));
    assert!(ingest_csv("no/such/file.csv").is_err());
}

#[test]
fn default_expert_quantiles_are_the_quartiles() {
    for cfg in [RunConfig::default(), RunConfig::load(fixture_path("corsica.json")).unwrap()] {
        assert_eq!(cfg.expert.orders(), vec![0.25, 0.5, 0.75]);
        assert_eq!(cfg.expert.values(), vec![75.0, 100.0, 150.0]);
        assert_eq!(cfg.mu_inf, 0.0);
        assert_eq!(cfg.gumbel_m, 3);
    }
}

#[test]
fn configuration_errors_are_caught_before_running() {
    for bad in [
        r#"{"schema_version": 2}"#,
        r#"{"schema_version": 1, "gumbel_m": 4}"#,
        r#"{"schema_version": 1, "candidate_ms": []}"#,
        r#"{"schema_version": 1, "prior_weights": [0.5, 0.5, 0.5]}"#,
        r#"{"schema_version": 1, "mcmc": {"iterations": 10, "burn_in": 10}}"#,
        r#"{"schema_version": 1, "is": {"n_draws": 10}}"#,
        r#"{"schema_version": 1, "no_such_field": 0}"#,
        r#"{"#,
    ] {
        assert!(matches!(RunConfig::from_json(bad), Err(Error::Config(_))), "{bad}");
    }
}

#[test]
fn report_round_trips_with_normalized_probabilities() {
    let run = small_run();
    let dir = tempfile::tempdir().unwrap();
    emit_report(&run.report, &run.draws, dir.path()).unwrap();
    let v: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join(REPORT_FILE)).unwrap()).unwrap();
    let probs: Vec<f64> = v["model_probs"].as_array().unwrap().iter().map(|p| p.as_f64().unwrap()).collect();
    assert_eq!(probs.len(), 3);
    assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    assert_eq!(v["provenance"]["seed"], 7);
    assert_eq!(v["provenance"]["config_digest"], small().digest());
    for key in ["models", "verdict", "return_levels", "diagnostics", "flags"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    let draws = std::fs::read_to_string(dir.path().join(DRAWS_FILE)).unwrap();
    assert_eq!(draws.lines().count(), 1 + run.draws.len());
    let curve = std::fs::read_to_string(dir.path().join(PREDICTIVE_FILE)).unwrap();
    let levels: Vec<f64> = curve.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(levels.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn return_levels_strictly_increase() {
    let r = &small_run().report;
    let periods: Vec<f64> = r.return_levels.iter().map(|l| l.period).collect();
    assert_eq!(periods, vec![10.0, 50.0, 100.0]);
    assert!(r.return_levels.windows(2).all(|w| w[0].level < w[1].level));
}

#[test]
fn selected_sizes_come_from_the_candidates() {
    let run = small_run();
    for c in [&run.selection.frechet, &run.selection.weibull] {
        assert!([4.0, 5.0, 6.0].contains(&(c.m_star as f64)));
        assert_eq!(c.entries.len(), 3);
    }
    assert_eq!(run.selection.priors.frechet.m, run.selection.frechet.m_star as f64);
}

#[test]
fn pipeline_is_deterministic() {
    let a = serde_json::to_string(&small_run().report).unwrap();
    let b = serde_json::to_string(&run_pipeline(&small(), &corsica()).unwrap().report).unwrap();
    assert_eq!(a, b);
}

/// Inference replayed from the persisted stage-3 output equals the fresh run.
#[test]
fn inference_replays_from_the_persisted_selection() {
    let run = small_run();
    let cfg = small();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("selection.json");
    write_json(&Stamped::new(&cfg, &run.selection), &path).unwrap();
    let back: Stamped<SelectionStage> = read_json(&path).unwrap();
    assert!(back.matches(&cfg));
    assert_eq!(back.output, run.selection);
    let draws = run_inference(&cfg, &corsica(), &back.output).unwrap();
    assert_eq!(draws.states, run.draws.states);
    assert_eq!(draws.weights, run.draws.weights);
}

#[test]
fn failures_carry_their_stage() {
    let mut cfg = small();
    // a Fréchet location bound above every expert value admits no anchors
    cfg.mu_inf = 1000.0;
    let e = run_pipeline(&cfg, &corsica()).unwrap_err();
    match e {
        Error::Stage { stage, .. } => assert!(matches!(stage, Stage::VirtualSizeCalibration), "{stage}"),
        e => panic!("untagged error {e}"),
    }
}

// ----------------------------------------------------------------------- CLI

fn evdsel(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_evdsel")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();
    let bad_cfg = write(dir.path(), "bad.json", r#"{"schema_version": 1, "gumbel_m": 5}"#);
    let (code, err) = evdsel(&["calibrate", "--config", &bad_cfg, "--out", out]);
    assert_eq!(code, 2, "{err}");

    let cfg = write(dir.path(), "small.json", SMALL);
    let bad_data = write(dir.path(), "bad.csv", "year,value\n1990,12\n1991,oops\n");
    let (code, err) = evdsel(&["run", "--config", &cfg, "--data", &bad_data, "--out", out]);
    assert_eq!(code, 3, "{err}");
    assert!(err.contains("line 3"), "{err}");
    let failure: Value = serde_json::from_str(&std::fs::read_to_string(Path::new(out).join("failure.json")).unwrap()).unwrap();
    assert_eq!(failure["status"], "failed");

    let (code, err) = evdsel(&["report", "--config", &cfg, "--data", fixture_path("corsica.csv").to_str().unwrap(), "--out", out]);
    assert_eq!(code, 2, "report without a selection: {err}");
}

#[test]
fn cli_runs_the_stages_separately() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = out.to_str().unwrap();
    let cfg = write(dir.path(), "small.json", SMALL);
    let data = fixture_path("corsica.csv");
    let data = data.to_str().unwrap();
    let (code, err) = evdsel(&["select", "--config", &cfg, "--out", o]);
    assert_eq!(code, 0, "{err}");
    assert!(out.join("calibration.json").exists() && out.join("selection.json").exists());
    let (code, err) = evdsel(&["report", "--config", &cfg, "--data", data, "--out", o]);
    assert!(code == 0 || code == 4, "{err}");
    let staged = std::fs::read_to_string(out.join(REPORT_FILE)).unwrap();
    let fresh: Value = serde_json::from_str(&staged).unwrap();
    let direct = serde_json::to_value(&small_run().report).unwrap();
    assert_eq!(fresh, direct);
}

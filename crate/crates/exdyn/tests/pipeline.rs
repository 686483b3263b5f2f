//! End-to-end checks that cross module boundaries: synthetic samples through
//! the fitting chain, and the CLI binary driven as a subprocess.

use std::path::Path;
use std::process::{Command, Output};

use exdyn::extremes::block_maxima;
use exdyn::gevfit::{fit_with_uncertainty, sample_gev, GevParams};
use exdyn::harness::export::{
    read_series, report_to_json, sweep_from_json, write_series, CSV_HEADER,
};
use exdyn::harness::{run_sweep, ExperimentConfig, PredictionRequest, SweepSpec};
use exdyn::observables::{Observable, SignForm};
use exdyn::dynamics::SystemSpec;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_exdyn"))
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawn exdyn");
    assert!(
        out.status.success(),
        "command failed ({:?}): {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn exit_code(cmd: &mut Command) -> i32 {
    let out = cmd.output().expect("spawn exdyn");
    out.status.code().expect("exit code")
}

#[test]
fn exact_gev_sample_round_trips_through_the_fit() {
    let truth = GevParams::new(1.0, 2.0, -0.4).unwrap();
    let sample = sample_gev(&truth, 10_000, 7);
    let bm = block_maxima(&sample, 1).unwrap();
    let report = fit_with_uncertainty(&bm, 100).unwrap();

    assert!((report.xi_hat - truth.xi).abs() < 0.05, "xi_hat {}", report.xi_hat);
    assert!((report.mu_hat - truth.mu).abs() < 0.05, "mu_hat {}", report.mu_hat);
    assert!((report.sigma_hat - truth.sigma).abs() < 0.05, "sigma_hat {}", report.sigma_hat);
    assert!(report.xi_sd > 0.0 && report.mu_sd > 0.0 && report.sigma_sd > 0.0);
    assert_eq!(report.per_subsample.len(), 100);
    assert_eq!(report.n_bmax, 10_000);
    assert_eq!(report.n_blocklen, 1);
}

#[test]
fn cli_simulate_then_fit_matches_the_library_fit() {
    let dir = tempfile::tempdir().unwrap();
    let series_path = dir.path().join("series.txt");
    let fit_path = dir.path().join("fit.json");
    let observable = r#"{"family":"dist_power","center":[0.9,0.51],"alpha":1.0}"#;

    run_ok(bin()
        .args(["simulate", "--system", "thom", "--observable", observable])
        .args(["--n", "9000", "--seed", "3", "--transient", "1000"])
        .arg("--out")
        .arg(&series_path));

    run_ok(bin()
        .args(["fit", "--blocklen", "30", "--nsamp", "50"])
        .arg("--in")
        .arg(&series_path)
        .arg("--out")
        .arg(&fit_path));

    // The binary and the library must agree byte for byte on the same input.
    let series = read_series(&series_path).unwrap();
    assert_eq!(series.len(), 9000);
    let bm = block_maxima(&series, 30).unwrap();
    let report = fit_with_uncertainty(&bm, 50).unwrap();
    let from_cli = std::fs::read_to_string(&fit_path).unwrap();
    assert_eq!(from_cli, report_to_json(&report).unwrap());
}

fn sweep_config() -> ExperimentConfig {
    ExperimentConfig {
        system: SystemSpec::thom(),
        observable: Observable::dist_power(&[0.9, 0.510001], 1.0, SignForm::OneMinus).unwrap(),
        n_blocklen: 200,
        n_bmax: 1000,
        n_samp: 50,
        seed: 5,
        transient: 2000,
        dt: None,
        substeps: None,
        sweep: Some(SweepSpec {
            param: "blocklen".into(),
            values: vec![200.0, 400.0],
        }),
        prediction: Some(PredictionRequest::ThomDistance),
    }
}

#[test]
fn cli_sweep_is_deterministic_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = sweep_config();
    let cfg_path = dir.path().join("experiment.json");
    std::fs::write(&cfg_path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();

    let csv_a = dir.path().join("a.csv");
    let csv_b = dir.path().join("b.csv");
    for out in [&csv_a, &csv_b] {
        run_ok(bin()
            .arg("sweep")
            .arg("--config")
            .arg(&cfg_path)
            .arg("--out")
            .arg(out));
    }
    let text_a = std::fs::read_to_string(&csv_a).unwrap();
    let text_b = std::fs::read_to_string(&csv_b).unwrap();
    assert_eq!(text_a, text_b, "repeat runs must be byte-identical");

    let lines: Vec<&str> = text_a.lines().collect();
    assert_eq!(lines[0], CSV_HEADER);
    assert_eq!(lines.len(), 3);
    for row in &lines[1..] {
        assert_eq!(row.split(',').count(), 9);
    }

    // JSON export parses back into exactly the rows the library computes.
    let json_path = dir.path().join("rows.json");
    run_ok(bin()
        .arg("sweep")
        .arg("--config")
        .arg(&cfg_path)
        .args(["--format", "json"])
        .arg("--out")
        .arg(&json_path));
    let from_cli = sweep_from_json(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    let from_lib = run_sweep(&cfg).unwrap();
    assert_eq!(from_cli, from_lib);
    assert_eq!(from_cli[0].sweep_value, 200.0);
    assert_eq!(from_cli[1].sweep_value, 400.0);
    // Interior distance centre: predicted shape is -alpha/2.
    for row in &from_cli {
        assert_eq!(row.predicted_xi, Some(-0.5));
    }
    assert_eq!(from_cli[0].n_iterates, 200 * 1000);
}

#[test]
fn cli_exit_codes_separate_usage_from_numerics() {
    // 0: a closed-form prediction.
    let obs = r#"{"family":"power_sum","center":[0.51,0.509],"a":2.0,"b":4.0}"#;
    let out = run_ok(bin().args(["predict", "--system", "thom", "--observable", obs]));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["rule"], "thom_power_sum");
    assert_eq!(doc["neg_inv_xi"].as_f64().unwrap(), 0.75);

    assert_eq!(exit_code(bin().arg("--help")), 0);

    // 1: configuration and usage problems.
    assert_eq!(exit_code(bin().args(["sweep", "--config", "/no/such/file.json"])), 1);
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"system":{"system_id":"thom"},"bogus":1}"#).unwrap();
    assert_eq!(
        exit_code(bin().arg("sweep").arg("--config").arg(&bad)),
        1
    );
    assert_eq!(exit_code(bin().args(["simulate", "--system", "nonesuch", "--observable", obs])), 1);

    // 2: numerical failure (constant series has a degenerate fit).
    let flat = dir.path().join("flat.txt");
    write_series(&flat, &[], &vec![1.0; 100]).unwrap();
    assert_eq!(
        exit_code(
            bin()
                .args(["fit", "--blocklen", "10", "--nsamp", "2"])
                .arg("--in")
                .arg(&flat)
        ),
        2
    );
}

#[test]
fn cli_diagnose_emits_kde_and_qq_tables() {
    let dir = tempfile::tempdir().unwrap();
    let maxima_path = dir.path().join("maxima.txt");
    let truth = GevParams::new(0.0, 1.0, -0.3).unwrap();
    write_series(&maxima_path, &[], &sample_gev(&truth, 400, 9)).unwrap();

    let json_path = dir.path().join("diag.json");
    run_ok(bin()
        .args(["diagnose", "--grid", "64"])
        .arg("--in")
        .arg(&maxima_path)
        .arg("--out")
        .arg(&json_path));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    assert!(doc["bandwidth"].as_f64().unwrap() > 0.0);
    assert_eq!(doc["kde"]["x"].as_array().unwrap().len(), 64);
    assert_eq!(doc["qq"]["empirical"].as_array().unwrap().len(), 400);
    assert!(doc["fit"]["xi"].as_f64().unwrap() < 0.0);

    let prefix = dir.path().join("diag");
    run_ok(bin()
        .args(["diagnose", "--grid", "64", "--format", "csv"])
        .arg("--in")
        .arg(&maxima_path)
        .arg("--out")
        .arg(&prefix));
    let kde = std::fs::read_to_string(dir.path().join("diag.kde.csv")).unwrap();
    let qq = std::fs::read_to_string(dir.path().join("diag.qq.csv")).unwrap();
    assert!(kde.starts_with("x,density\n"));
    assert_eq!(kde.lines().count(), 65);
    assert!(qq.starts_with("empirical,theoretical\n"));
    assert_eq!(qq.lines().count(), 401);

    // CSV mode with nowhere to write is a usage error.
    assert_eq!(
        exit_code(
            bin()
                .args(["diagnose", "--format", "csv"])
                .arg("--in")
                .arg(&maxima_path)
        ),
        1
    );
}

#[test]
fn cli_lyapunov_reports_the_torus_spectrum() {
    let out = run_ok(bin().args(["lyapunov", "--system", "thom", "--steps", "5000"]));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let exps = doc["exponents"].as_array().unwrap();
    let golden = ((3.0 + 5.0f64.sqrt()) / 2.0).ln();
    assert!((exps[0].as_f64().unwrap() - golden).abs() < 1e-12);
    assert!((exps[1].as_f64().unwrap() + golden).abs() < 1e-12);
    assert_eq!(doc["dimension"].as_f64().unwrap(), 2.0);
    assert_eq!(doc["skipped"], 0);
}

#[test]
fn series_files_survive_a_comment_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path: &Path = &dir.path().join("vals.txt");
    let values = vec![1.5, -2.25, 3.0e-7, 4.0];
    write_series(path, &["written by the pipeline test".into()], &values).unwrap();
    assert_eq!(read_series(path).unwrap(), values);
}

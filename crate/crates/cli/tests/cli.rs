use std::path::Path;
use std::process::{Command, Output};

use floquet_core::perturbation::{FourierPerturbation, MatrixSlice};
use floquet_core::presets::default_grid;
use floquet_core::spectrum::TruncationWindow;

const SMALL: &str = r#"
[windows]
ladder = [[3, 4], [5, 6]]

[run]
betas = [1e-3, 1e-2, 3]
deltas = [1e-2, 1e-3]
samples = 40
k_max = 200
checkpoints = [10, 100]
cutoff_levels = [10]
thetas = [0.3]
"#;

fn floquet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_floquet")).args(args).output().expect("binary runs")
}

fn run_in(dir: &Path, config: &str, args: &[&str]) -> Output {
    let cfg = dir.join("config.toml");
    std::fs::write(&cfg, config).unwrap();
    let out = dir.join("out");
    let mut all = vec!["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    all.extend_from_slice(args);
    floquet(&all)
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join("out").join(name)).unwrap()
}

/// Data rows of a CSV artifact, split into fields.
fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn reruns_are_byte_identical() {
    for args in [["density-appendix-a", "--seed", "7"], ["eigen-verify", "--threads", "2"]] {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        assert!(run_in(a.path(), SMALL, &args).status.success());
        assert!(run_in(b.path(), SMALL, &args).status.success());
        let name = format!("{}.csv", args[0]);
        assert_eq!(read(a.path(), &name), read(b.path(), &name));
    }
}

#[test]
fn header_records_hash_seed_and_window() {
    let d = tempfile::tempdir().unwrap();
    assert!(run_in(d.path(), SMALL, &["counterexample", "--seed", "11"]).status.success());
    let text = read(d.path(), "counterexample-divergence.csv");
    use sha2::Digest;
    let hash = hex::encode(sha2::Sha256::digest(SMALL.as_bytes()));
    assert!(text.contains(&format!("# config-sha256 {hash}")));
    assert!(text.contains("# seed 11"));
    assert!(text.starts_with(&format!("# floquet counterexample {}", env!("CARGO_PKG_VERSION"))));
    let r = rows(&text);
    assert_eq!(r.len(), 2);
    assert!(r[1][2].parse::<f64>().unwrap() > 0.0);
}

#[test]
fn zero_perturbation_has_zero_residuals() {
    let d = tempfile::tempdir().unwrap();
    let config = format!("{SMALL}\n[perturbation]\nkind = \"zero\"\n");
    let out = run_in(d.path(), &config, &["eigen-verify"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = read(d.path(), "eigen-verify.csv");
    assert!(text.contains("# window 5x6"));
    let r = rows(&text);
    assert_eq!(r.len(), 6);
    for row in r {
        assert_eq!(row[3], "true");
        assert_eq!(row[4].parse::<f64>().unwrap(), 0.0);
        assert_eq!(row[2].parse::<f64>().unwrap(), 0.0);
        assert_eq!(row[1].parse::<f64>().unwrap(), default_grid().reference_value().unwrap());
    }
}

#[test]
fn rs_compute_matches_the_second_order_sum() {
    let d = tempfile::tempdir().unwrap();
    let out = run_in(d.path(), SMALL, &["rs-compute"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_str(&read(d.path(), "rs-compute.json")).unwrap();
    let lambdas: Vec<f64> = json["lambdas"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert_eq!(json["ell"], 4);
    assert_eq!(json["method"], "recursive");
    assert_eq!(lambdas[0], 0.0);
    assert!(json["agreement"].as_f64().unwrap() < 1e-10);
    assert_eq!(json["tail"].as_array().unwrap().len(), 4);

    // lambda_2 = -sum_{n != eta} |V_{n eta}|^2 / (F_n - F)
    let grid = default_grid();
    let w = TruncationWindow::new(5, 6).unwrap();
    let v = FourierPerturbation::band(vec![0.1, 0.2], 2.0, 0.0).unwrap();
    let m = MatrixSlice::build(&v, w).unwrap();
    let eta = w.index_of(grid.eta).unwrap();
    let expect: f64 = w
        .points()
        .enumerate()
        .filter(|&(i, _)| i != eta)
        .map(|(i, n)| -m.entries[(i, eta)].norm_sqr() / grid.detuning(n).unwrap())
        .sum();
    assert!((lambdas[1] - expect).abs() <= 1e-12 * expect.abs(), "{} vs {expect}", lambdas[1]);
}

#[test]
fn remaining_subcommands_write_their_artifacts() {
    let d = tempfile::tempdir().unwrap();
    let config = format!("{SMALL}\n[frequency]\nscan = [1.2, 1.8, 3]\n");
    for (cmd, file) in [
        ("spectrum-check", "spectrum-check.json"),
        ("dioph-scan", "dioph-scan.csv"),
        ("domain-density", "domain-density.csv"),
    ] {
        let out = run_in(d.path(), &config, &[cmd]);
        assert!(out.status.success(), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8_lossy(&out.stdout).trim().ends_with(file));
    }
    let scan = rows(&read(d.path(), "dioph-scan.csv"));
    assert_eq!(scan.len(), 6);
    let density = rows(&read(d.path(), "domain-density.csv"));
    assert_eq!(density.len(), 2);
    assert!(density.iter().all(|r| (0.0..=1.0).contains(&r[1].parse::<f64>().unwrap())));
    let check: serde_json::Value = serde_json::from_str(&read(d.path(), "spectrum-check.json")).unwrap();
    assert_eq!(check["gap_condition_holds"], true);
    assert_eq!(check["decay"]["violations"], 0);
}

#[test]
fn stochastic_commands_need_a_seed() {
    let d = tempfile::tempdir().unwrap();
    let out = run_in(d.path(), SMALL, &["density-appendix-a"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("run.seed"));
}

#[test]
fn config_errors_name_the_field() {
    let d = tempfile::tempdir().unwrap();
    let out = run_in(d.path(), "[run]\nsamples = 0\n", &["domain-density"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("run.samples"));
    let out = run_in(d.path(), "[spectrum]\nkind = \"cubic\"\n", &["spectrum-check"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn module_errors_propagate_with_their_name() {
    let d = tempfile::tempdir().unwrap();
    // the tree formula stops at order 6
    let out = run_in(d.path(), "[run]\nell = 7\nmethod = \"tree\"\n", &["rs-compute"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("guard-overflow"), "{}", String::from_utf8_lossy(&out.stderr));
}

use std::path::Path;
use std::process::{Command, Output};

use irs_core::analysis::eta;
use irs_sim::run::read_csv;

fn irs_sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_irs-sim")).args(args).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn eta_run_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "experiment = \"eta_validation\"\ntrials = 400\nseed = 3\n[system]\nm_y = 16\nm_z = 16\n",
    );
    let out = dir.path().join("results");
    let o = irs_sim(&["run", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_csv(&out.join("eta_validation.csv")).unwrap();
    for b in 1..=3 {
        let emp = rows.iter().find(|r| r.x == b as f64 && r.variant == "empirical").unwrap();
        assert!((emp.value - eta(b)).abs() < 0.03, "b={b}: {}", emp.value);
    }
    assert!(out.join("eta_validation.meta.toml").exists());
}

#[test]
fn element_run_emits_one_row_per_pair() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "experiment = \"snr_vs_elements\"\ntrials = 5\nsweep = [10, 20, 30, 40]\n");
    let out = dir.path().join("o");
    let o = irs_sim(&["run", &cfg, "--set", "variants=[\"b1\",\"continuous\"]", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_csv(&out.join("snr_vs_elements.csv")).unwrap();
    assert_eq!(rows.len(), 4 * 2);
    assert!(rows.iter().all(|r| r.trials == 5));
}

#[test]
fn sidecar_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "experiment = \"outage_vs_blockage\"\ntrials = 6\nsweep = [0.0, 0.5, 1.0]\n[outage]\ninner_samples = 10\n");
    let first = dir.path().join("a");
    let second = dir.path().join("b");
    assert!(irs_sim(&["run", &cfg, "--set", "seed=77", "--out", first.to_str().unwrap()]).status.success());
    let meta = first.join("outage_vs_blockage.meta.toml");
    assert!(std::fs::read_to_string(&meta).unwrap().contains("seed = 77"));
    assert!(irs_sim(&["run", meta.to_str().unwrap(), "--out", second.to_str().unwrap()]).status.success());
    assert_eq!(
        std::fs::read(first.join("outage_vs_blockage.csv")).unwrap(),
        std::fs::read(second.join("outage_vs_blockage.csv")).unwrap()
    );
}

#[test]
fn invalid_config_fails_with_message() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[system]\nb = 0\n");
    let o = irs_sim(&["run", &cfg]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("b must be ≥ 1 or 'continuous'"));

    let o = irs_sim(&["run", dir.path().join("missing.toml").to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing.toml"));
}

#[test]
fn unwritable_output_reports_path() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let cfg = write_config(dir.path(), "trials = 1\nsweep = [20.0]\n");
    let o = irs_sim(&["run", &cfg, "--out", blocker.join("sub").to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("file"));
}

#[test]
fn selfcheck_passes() {
    let o = irs_sim(&["selfcheck"]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.lines().filter(|l| l.starts_with("PASS")).count() >= 8);
    assert!(!text.contains("FAIL"));
}

#[test]
fn eta_table_prints_requested_bits() {
    let o = irs_sim(&["eta", "--bits", "1,2,3"]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("0.405285") && text.contains("0.810569") && text.contains("0.949641"), "{text}");
    assert!(text.contains("-3.9224") && text.contains("-0.9121"));
    assert!(!irs_sim(&["eta", "--bits", "0"]).status.success());
}

use std::process::Command;

const BIN: &str = env!("CARGO_BIN_EXE_cellmatch");
const FIXTURE: &str = concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/tests/fixtures/three_users_two_cells.toml"
);

fn run(args: &[&str]) -> std::process::Output {
    Command::new(BIN)
        .args(args)
        .env_remove("CELLMATCH_SEED")
        .output()
        .expect("binary runs")
}

#[test]
fn fixture_report_is_byte_identical() {
    let a = run(&["solve", "--fixture", FIXTURE]);
    let b = run(&["solve", "--fixture", FIXTURE]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.contains("converged: true"));
    assert!(text.contains("cell 0: 1/1 [0]"));

    let json = run(&["solve", "--fixture", FIXTURE, "--format", "json-lines"]);
    let line = String::from_utf8(json.stdout).unwrap();
    let report = cellmatch::SolveReport::from_record_line(line.trim()).unwrap();
    assert_eq!(report.matching.assignment(), &[Some(0), Some(1), None]);
}

#[test]
fn seed_changes_report_deterministically() {
    let a = run(&["solve", "--seed", "1", "--format", "json-lines"]);
    let b = run(&["solve", "--seed", "2", "--format", "json-lines"]);
    let a2 = run(&["solve", "--seed", "1", "--format", "json-lines"]);
    assert!(a.status.success() && b.status.success());
    assert_ne!(a.stdout, b.stdout);
    assert_eq!(a.stdout, a2.stdout);

    let env = Command::new(BIN)
        .args(["solve", "--format", "json-lines"])
        .env("CELLMATCH_SEED", "1")
        .output()
        .unwrap();
    assert_eq!(env.stdout, a.stdout);
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(
        run(&["solve", "--fixture", "/no/such/fixture.toml"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(run(&["sweep"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{ "scenario": { "n_users": 10, "colour": 3 } }"#).unwrap();
    let out = run(&["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}

#[test]
fn sweep_writes_csv_and_labels_multiple_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig2.csv");
    let status = run(&[
        "sweep",
        "--preset",
        "fig2",
        "--replicas",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(status.status.success());
    assert!(status.stdout.is_empty());
    let rows = cellmatch::experiment::read_csv(&out).unwrap();
    assert_eq!(rows.len(), 8);

    let base = dir.path().join("fig4.csv");
    let status = run(&[
        "sweep",
        "--preset",
        "fig4",
        "--replicas",
        "2",
        "--out",
        base.to_str().unwrap(),
    ]);
    assert!(status.status.success());
    assert!(dir.path().join("fig4_p10.csv").exists());
    assert!(dir.path().join("fig4_p20.csv").exists());

    let json = run(&[
        "sweep",
        "--preset",
        "fig3",
        "--replicas",
        "2",
        "--format",
        "json-lines",
    ]);
    let text = String::from_utf8(json.stdout).unwrap();
    assert_eq!(text.lines().count(), 20);
    assert!(text
        .lines()
        .all(|l| l.contains("\"mean_all_user_utility\"")));
}

#[test]
fn validate_passes() {
    let out = run(&["validate", "--samples", "200000"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 8);
}

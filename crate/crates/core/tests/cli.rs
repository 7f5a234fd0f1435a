use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rtscts::experiment::{
    emit, parse_json_lines, run_sweep, to_json_lines, EmitError, ExperimentConfig, OutputFormat,
};
use tempfile::TempDir;

const BASE: &str = r#"
[network]
unit = "m"
d = 2.0
r_cs = 2.0
r_tx = 1.0
p_t = 1.0
alpha = 4.0
amplitude = 1.0

[quadrature]
r_max = 12.0
n_r = 8
n_phi = 16
n_theta = 8
refine_levels = 2
rel_tol = 0.05

[simulation]
replications = 50
seed = 5

[sweep]
lambda_p = [0.01, 0.05, 0.1]
"#;

fn rtscts(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rtscts"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("sweep.toml");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn analytic_sweep_writes_one_row_per_point_and_type() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(tmp.path(), BASE);
    let out = tmp.path().join("out");
    let res = rtscts(&[
        "run",
        "--config",
        &config,
        "--analytic-only",
        "--out",
        out.to_str().unwrap(),
    ]);
    // Type II on this geometry never converges, which is reported with exit code 3.
    assert_eq!(
        res.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let csv = fs::read_to_string(out.join("results.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "# schema=1");
    assert!(lines[1].starts_with("thinning,lambda_p,d,r_cs,r_tx,alpha"));
    assert_eq!(lines.len(), 2 + 6);
    for row in &lines[2..] {
        let cells: Vec<&str> = row.split(',').collect();
        assert_eq!(cells.len(), 22);
        // No empirical columns in an analytic-only run.
        assert!(cells[10].is_empty() && cells[14].is_empty() && cells[18].is_empty());
        assert_eq!(cells[12].is_empty(), cells[0] == "type2");
    }
}

#[test]
fn converging_sweep_exits_cleanly() {
    let tmp = TempDir::new().unwrap();
    let text = BASE
        .replace("r_cs = 2.0", "r_cs = 3.0")
        .replace("[0.01, 0.05, 0.1]", "[0.05]");
    let config = write_config(tmp.path(), &text);
    let res = rtscts(&[
        "run",
        "--config",
        &config,
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(
        res.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
}

#[test]
fn invalid_geometry_is_rejected_before_running() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(tmp.path(), &BASE.replace("r_tx = 1.0", "r_tx = 2.0"));
    let out = tmp.path().join("never");
    let res = rtscts(&["run", "--config", &config, "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("network.r_tx"));
    assert!(!out.exists());
}

#[test]
fn empty_sweep_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(tmp.path(), &BASE.replace("[0.01, 0.05, 0.1]", "[]"));
    let res = rtscts(&[
        "run",
        "--config",
        &config,
        "--out",
        tmp.path().join("x").to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(1));
    assert!(!tmp.path().join("x").exists());
}

#[test]
fn same_seed_gives_identical_bytes_for_any_worker_count() {
    let tmp = TempDir::new().unwrap();
    let text = BASE.replace("[0.01, 0.05, 0.1]", "[0.05]");
    let config = write_config(tmp.path(), &text);
    let mut files = Vec::new();
    for (name, workers) in [("a", "1"), ("b", "3")] {
        let out = tmp.path().join(name);
        rtscts(&[
            "run",
            "--config",
            &config,
            "--workers",
            workers,
            "--out",
            out.to_str().unwrap(),
        ]);
        files.push(fs::read(out.join("results.csv")).unwrap());
    }
    assert_eq!(files[0], files[1]);
}

#[test]
fn json_lines_round_trip() {
    let cfg =
        ExperimentConfig::from_toml(&BASE.replace("[0.01, 0.05, 0.1]", "[0.02, 0.05]")).unwrap();
    let records = run_sweep(&cfg.points().unwrap(), true, 2).unwrap();
    let text = to_json_lines(&records).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert_eq!(parse_json_lines(&text).unwrap(), records);

    let tmp = TempDir::new().unwrap();
    let path = emit(&records, OutputFormat::JsonLines, tmp.path()).unwrap();
    assert_eq!(
        parse_json_lines(&fs::read_to_string(path).unwrap()).unwrap(),
        records
    );
}

#[test]
fn emit_refuses_empty_and_reports_unwritable_paths() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("empty");
    assert!(matches!(
        emit(&[], OutputFormat::Csv, &dir),
        Err(EmitError::Empty)
    ));
    assert!(!dir.exists());

    let cfg = ExperimentConfig::from_toml(&BASE.replace("[0.01, 0.05, 0.1]", "[0.05]")).unwrap();
    let mut points = cfg.points().unwrap();
    points.truncate(1);
    points[0].sim = None;
    let records = run_sweep(&points, false, 1).unwrap();
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "").unwrap();
    match emit(&records, OutputFormat::Csv, &blocker.join("sub")) {
        Err(EmitError::Write { .. }) => {}
        other => panic!("expected a write error, got {other:?}"),
    }
}

#[test]
fn quick_verification_subcommands() {
    let tmp = TempDir::new().unwrap();
    let a = tmp.path().join("a.csv");
    let b = tmp.path().join("b.csv");
    let first = rtscts(&[
        "verify-geometry",
        "--quick",
        "--seed",
        "9",
        "--workers",
        "1",
        "--out",
        a.to_str().unwrap(),
    ]);
    assert_eq!(
        first.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&first.stdout)
    );
    rtscts(&[
        "verify-geometry",
        "--quick",
        "--seed",
        "9",
        "--workers",
        "2",
        "--out",
        b.to_str().unwrap(),
    ]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use gsocp_cli::ConvergenceReport;

fn gsocp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gsocp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn converge_to(path: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "converge",
        "--n-list",
        "8,16,32",
        "--out",
        path.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    gsocp(&args)
}

#[test]
fn converge_writes_a_parseable_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gheat.csv");
    let out = converge_to(&path, &[]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(out.stdout.is_empty());

    let text = fs::read_to_string(&path).unwrap();
    let report = ConvergenceReport::read_csv(text.as_bytes()).unwrap();
    assert_eq!(
        report.rows.iter().map(|r| r.n).collect::<Vec<_>>(),
        vec![8, 16, 32]
    );
    assert!(report.rows.iter().all(|r| r.wall_time_ms == 0.0));
    assert!((report.rows[1].abs_error - 3.217e-3).abs() < 1e-5);
    assert_eq!(report.to_csv_string(), text);
}

#[test]
fn identical_configs_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    let extra = [
        "--problem",
        "lq",
        "--scheme",
        "gauss_hermite",
        "--controls",
        "17",
    ];
    assert!(converge_to(&a, &extra).status.success());
    assert!(converge_to(&b, &extra).status.success());
    assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "problem = \"lq\"\nn_list = [4, 8]\ncontrols = 5\n").unwrap();
    let out = gsocp(&[
        "converge",
        "--config",
        cfg.to_str().unwrap(),
        "--n-list",
        "4",
    ]);
    assert!(out.status.success());
    let report = ConvergenceReport::read_csv(&out.stdout[..]).unwrap();
    assert_eq!(report.rows.len(), 1);
    assert!((report.rows[0].exact - 0.7618952).abs() < 1e-7);
    assert_eq!(report.rate, None);
}

#[test]
fn solve_summary_and_field_dump() {
    let dir = tempfile::tempdir().unwrap();
    let field = dir.path().join("field.csv");
    let out = gsocp(&["solve", "--n-list", "16", "--out", field.to_str().unwrap()]);
    assert!(out.status.success());
    let summary = String::from_utf8(out.stdout).unwrap();
    let value: f64 = summary
        .lines()
        .find_map(|l| l.strip_prefix("value_at_start,"))
        .unwrap()
        .parse()
        .unwrap();
    assert!((value - 0.1562969).abs() < 4e-3);
    let dump = fs::read_to_string(field).unwrap();
    assert!(dump.starts_with("x,value,argmax_control,argmax_sigma\n"));
    // time 0 holds x0 and one neighbour on each side
    assert_eq!(dump.lines().count(), 4);
}

#[test]
fn residual_and_oracle_modes() {
    let out = gsocp(&["residual", "--problem", "sine"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 27);
    let max: f64 = text
        .lines()
        .last()
        .unwrap()
        .strip_prefix("max_abs,")
        .unwrap()
        .parse()
        .unwrap();
    assert!(max <= 1e-4);

    let out = gsocp(&[
        "oracle",
        "--problem",
        "lq",
        "--n-list",
        "32",
        "--paths",
        "2000",
        "--seed",
        "3",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let fields: Vec<f64> = text
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|s| s.parse().unwrap())
        .collect();
    let (value, mean, stderr) = (fields[4], fields[5], fields[6]);
    assert!(mean - 3.0 * stderr <= value + 0.01);
}

#[test]
fn errors_go_to_stderr_with_failure_status() {
    for args in [
        &["converge", "--problem", "heston"][..],
        &["converge", "--sigma-hi", "1.5"],
        &["converge", "--n-list", "32,16"],
        &["solve", "--interp", "spline"],
        &[
            "converge",
            "--problem",
            "lq",
            "--kappa",
            "0.06",
            "--r0",
            "0.03",
        ],
        &["oracle", "--theta", "3"],
        &["converge", "--config", "/nonexistent/run.toml"],
    ] {
        let out = gsocp(args);
        assert!(!out.status.success(), "{args:?} succeeded");
        assert!(out.stdout.is_empty(), "{args:?} wrote to stdout");
        assert!(
            String::from_utf8_lossy(&out.stderr).starts_with("error: "),
            "{args:?}"
        );
    }
}

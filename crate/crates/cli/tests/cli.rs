use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn iterint(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_iterint"))
        .args(args)
        .env("RUST_LOG", "off")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn coeffs_unit_weights() {
    let out = iterint(&["coeffs", "--p1", "1", "--p2", "1"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("j1,j2,c\n"));
    let expect = [
        (0, 0, 0.5),
        (0, 1, 0.5 / 3f64.sqrt()),
        (1, 0, -0.5 / 3f64.sqrt()),
        (1, 1, 0.0),
    ];
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 4);
    for (row, (j1, j2, c)) in rows.iter().zip(expect) {
        assert_eq!(row[0].parse::<usize>().unwrap(), j1);
        assert_eq!(row[1].parse::<usize>().unwrap(), j2);
        assert!((row[2].parse::<f64>().unwrap() - c).abs() < 1e-14);
    }
}

#[test]
fn trace_gap_shrinks() {
    let out = iterint(&[
        "trace",
        "--p",
        "6",
        "--w1",
        "poly:0,1",
        "--format",
        "json",
        "--no-timestamp",
    ]);
    assert!(out.status.success());
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["schema_version"], "1");
    assert_eq!(v["config"]["tol"], 1e-12);
    let rows = v["result"].as_array().unwrap();
    assert_eq!(rows.len(), 7);
    let gaps: Vec<f64> = rows.iter().map(|r| r["gap"].as_f64().unwrap()).collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]));
    assert!((rows[0]["target"].as_f64().unwrap() - 0.25).abs() < 1e-15);
}

#[test]
fn bad_weight_is_config_error() {
    for w in ["poly:0,x", "const:", "exp:1", "poly:"] {
        let out = iterint(&["coeffs", "--w1", w]);
        assert_eq!(out.status.code(), Some(1), "weight {w}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains("--w1"), "{err}");
    }
}

#[test]
fn invalid_fields_exit_one() {
    let cases: &[&[&str]] = &[
        &["coeffs", "--t0", "1", "--t1", "0"],
        &["coeffs", "--basis", "chebyshev"],
        &["coeffs", "--tol", "0"],
        &["sample", "--i1", "3", "--m", "2"],
        &["mc-validate", "--grid", "100"],
        &["mc-validate", "--paths", "1"],
        &["remainder-grid", "--grid", "0"],
        &["coeffs", "--threads", "0"],
        &["no-such-command"],
    ];
    for args in cases {
        assert_eq!(iterint(args).status.code(), Some(1), "{args:?}");
    }
}

#[test]
fn quadrature_failure_exits_two() {
    // A tolerance below what double precision can confirm.
    let out = iterint(&[
        "coeffs",
        "--p1",
        "3",
        "--p2",
        "3",
        "--w1",
        "poly:0.3,1.7,-2.2",
        "--basis",
        "trig",
        "--tol",
        "1e-30",
    ]);
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn same_seed_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let p = path.to_str().unwrap();
        let args = [
            "mc-validate",
            "--p1",
            "1",
            "--p2",
            "1",
            "--i1",
            "1",
            "--i2",
            "2",
            "--paths",
            "400",
            "--grid",
            "64",
            "--seed",
            "11",
            "--no-timestamp",
            "--out",
            p,
        ];
        let out = iterint(&args);
        assert!(out.status.code() == Some(0) || out.status.code() == Some(2));
        std::fs::read(&path).unwrap()
    };
    let a = run("a.json");
    let b = run("b.json");
    assert_eq!(a, b);
    let v: Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(v["config"]["seed"], 11);
    assert_eq!(v["config"]["pair"]["m"], 2);
    for key in ["mean_sq_diff", "stderr", "theory", "bias_check"] {
        assert!(!v["result"][key].is_null(), "{key}");
    }
    assert!(v.get("generated_unix").is_none());

    let thread_counts = ["1", "3"].map(|t| {
        let out = iterint(&[
            "sample",
            "--paths",
            "50",
            "--seed",
            "9",
            "--p1",
            "2",
            "--p2",
            "2",
            "--threads",
            t,
        ]);
        stdout(&out)
    });
    assert_eq!(thread_counts[0], thread_counts[1]);
}

#[test]
fn csv_out_writes_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("grid.csv");
    let out = iterint(&[
        "remainder-grid",
        "--p1",
        "2",
        "--p2",
        "2",
        "--grid",
        "4",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("x1,x2,remainder\n"));
    assert_eq!(csv_rows(&text).len(), 16);
    let meta: Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("grid.csv.meta.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(meta["schema_version"], "1");
    assert_eq!(meta["config"]["grid"], 4);
    assert!(meta["generated_unix"].is_u64());
    let leftovers: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(
        leftovers.len(),
        2,
        "temp files left in {}",
        Path::display(dir.path())
    );
}

#[test]
fn error_curve_distinct_components() {
    let out = iterint(&[
        "error-curve",
        "--p1",
        "3",
        "--p2",
        "3",
        "--i1",
        "1",
        "--i2",
        "2",
        "--square",
        "--format",
        "json",
    ]);
    assert!(out.status.success());
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let rows = v["result"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    for r in rows {
        let p = r["p1"].as_f64().unwrap();
        let expect = 0.25 / (2.0 * p + 1.0);
        let got = r["ms_exact_offdiag"].as_f64().unwrap();
        assert!((got - expect).abs() < 1e-12, "p={p}: {got} vs {expect}");
    }
}

#[test]
fn mc_sweep_csv() {
    let out = iterint(&[
        "mc-validate",
        "--sweep",
        "0,2",
        "--i1",
        "1",
        "--i2",
        "2",
        "--paths",
        "300",
        "--grid",
        "64",
        "--seed",
        "3",
    ]);
    assert!(out.status.code() == Some(0) || out.status.code() == Some(2));
    let text = stdout(&out);
    assert!(text.starts_with("p1,p2,mean_sq_diff,stderr,theory,theory_kind,"));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1][0], "2");
    assert_eq!(rows[0][5], "exact");
}

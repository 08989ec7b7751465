use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plcp-load"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Data lines of a CSV table, header first.
fn body(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn no_vehicles_gives_single_row() {
    let o = run(&["pmf-typical", "--lambda-v", "0", "--samples", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = body(&stdout(&o));
    assert_eq!(rows[0], ["m", "p_analytic_disc"]);
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1], ["0", "1.0"]);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&["pmf-typical", "--alpha", "2"]).status.code(), Some(2));
    assert_eq!(run(&["pmf-typical", "--lambda-b", "-1"]).status.code(), Some(2));
    assert_eq!(run(&["pmf-typical", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(run(&["rate-coverage", "--thresholds", "-5"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"lambda_b": 1.0, "lambda_vv": 2.0}"#).unwrap();
    assert_eq!(run(&["pmf-tagged", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn config_file_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"lambda_v": 0.5, "m_max": 30, "format": "json"}"#).unwrap();
    let o = run(&["pmf-tagged", "--config", cfg.to_str().unwrap(), "--m-max", "20"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["params"]["lambda_v"], 0.5);
    assert_eq!(v["m_max"], 20);
}

#[test]
fn perturbed_perimeter_law_fails_validation() {
    let o = run(&["validate", "--perturb-perimeter", "1.05", "--samples", "0"]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    let line = text.lines().find(|l| l.starts_with("norm_perimeter,")).unwrap();
    assert!(line.ends_with(",false"), "{line}");
    assert!(String::from_utf8_lossy(&o.stderr).contains("norm_perimeter"));
}

#[test]
fn analytic_validation_passes() {
    let o = run(&["validate", "--samples", "0"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn typical_pmf_validates_against_simulation() {
    let o = run(&[
        "pmf-typical", "--lambda-b", "1", "--mu-l", "5", "--lambda-v", "2", "--m-max", "40", "--samples", "100000",
        "--seed", "7", "--validate",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("# check: tv_disc_empirical"));
    assert_eq!(body(&text)[0], ["m", "p_analytic_disc", "p_empirical", "abs_diff"]);
}

#[test]
fn full_validation_passes() {
    let o = run(&["validate"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("tv_tagged_empirical"));
}

#[test]
fn output_is_reproducible_across_runs_and_threads() {
    let base = ["pmf-tagged", "--samples", "3000", "--seed", "11", "--m-max", "60"];
    let a = run(&[&base[..], &["--threads", "1"]].concat());
    let b = run(&[&base[..], &["--threads", "4"]].concat());
    let c = run(&[&base[..], &["--threads", "1"]].concat());
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
    let d = run(&["pmf-tagged", "--samples", "3000", "--seed", "12", "--m-max", "60"]);
    assert_ne!(a.stdout, d.stdout);
}

#[test]
fn rate_coverage_table() {
    let o = run(&["rate-coverage", "--thresholds", "0,1e6,3e5", "--samples", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = body(&stdout(&o));
    assert_eq!(rows[0], ["T_bps", "Rc_analytic", "tail_mass"]);
    let value = |r: &Vec<String>| r[1].parse::<f64>().unwrap();
    let tail: f64 = rows[1][2].parse().unwrap();
    // at T = 0 every load covers
    assert!((value(&rows[1]) - (1.0 - tail)).abs() < 1e-9);
    assert!(value(&rows[2]) < value(&rows[3]));
}

#[test]
fn json_mirrors_csv() {
    let args = ["pmf-tagged", "--samples", "0", "--m-max", "30"];
    let csv = stdout(&run(&args));
    let json = stdout(&run(&[&args[..], &["--format", "json"]].concat()));
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    let rows = body(&csv);
    assert_eq!(v["columns"].as_array().unwrap().len(), rows[0].len());
    let jrows = v["rows"].as_array().unwrap();
    assert_eq!(jrows.len(), rows.len() - 1);
    for (j, c) in jrows.iter().zip(&rows[1..]) {
        // same float parser on both sides
        let p: f64 = serde_json::from_str(&c[1]).unwrap();
        assert_eq!(j[1].as_f64().unwrap(), p);
    }
}

#[test]
fn raw_dump_and_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("raw.csv");
    let out = dir.path().join("out.csv");
    let o = run(&[
        "pmf-typical", "--samples", "200", "--raw-out", raw.to_str().unwrap(), "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let raw = std::fs::read_to_string(raw).unwrap();
    let mut lines = raw.lines();
    assert!(lines.next().unwrap().starts_with("replication,load"));
    assert!(lines.count() >= 190);
    assert!(std::fs::read_to_string(out).unwrap().contains("p_empirical"));
}

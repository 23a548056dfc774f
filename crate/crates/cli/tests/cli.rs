use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn dsym(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dsym"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

#[test]
fn check_exit_codes() {
    let ok = dsym(&["check", "--scheme", "DSYS", "--fields", "L0", "--manifold", "solution", "--samples", "200", "--tol", "1e-9"]);
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stderr));
    let v = json(&ok);
    assert_eq!(v["seed"], 42);
    assert_eq!(v["report"]["pass"], true);
    assert_eq!(v["report"]["fields"].as_array().unwrap().len(), 7);

    let bad = dsym(&["check", "--scheme", "DSYS", "--fields", "X8", "--function", "I3", "--manifold", "solution"]);
    assert_eq!(code(&bad), 1);
    assert_eq!(json(&bad)["report"]["pass"], false);

    assert_eq!(code(&dsym(&["check", "--scheme", "NOPE"])), 2);
    assert_eq!(code(&dsym(&["check", "--scheme", "DSYS", "--fields", "X99"])), 2);
    assert_eq!(code(&dsym(&["check", "--scheme", "DSYS", "--samples", "0"])), 2);
    assert_eq!(code(&dsym(&["check", "--scheme", "DSYS", "--tol", "-1"])), 2);
    assert_eq!(code(&dsym(&["frobnicate"])), 2);
}

#[test]
fn rank_expectations() {
    for (manifold, fields, rank) in [
        ("generic", "L0", 7),
        ("weak", "L0", 5),
        ("continuous-generic", "L0", 7),
        ("continuous-system", "L0", 5),
    ] {
        let expect = rank.to_string();
        let o = dsym(&["rank", "--fields", fields, "--manifold", manifold, "--samples", "40", "--expect", &expect]);
        assert_eq!(code(&o), 0, "{manifold}");
        assert_eq!(json(&o)["report"]["ranks"][&expect], 40);
    }
    let o = dsym(&["rank", "--manifold", "weak", "--samples", "10", "--expect", "7"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn solve_writes_quadratic_csv() {
    let o = dsym(&["solve", "--c", "2", "--h0", "1", "--count", "6", "--init", "0,1,9"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("# seed=42 config="));
    let t = dsym::Trajectory64::read_csv(text.as_bytes()).unwrap();
    assert_eq!(t.xs(), &[0.0, 1.0, 3.0, 7.0, 15.0, 31.0]);
    for (x, u) in t.xs().iter().zip(t.us()) {
        assert!((u - x * x).abs() < 1e-12);
    }
    assert_eq!(code(&dsym(&["solve", "--init", "0,1"])), 2);
    assert_eq!(code(&dsym(&["solve", "--c", "0"])), 2);
}

#[test]
fn flow_report() {
    let o = dsym(&["flow", "--field", "X7d", "--lambda", "0.1", "--scheme", "DS3"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    let r = &v["report"];
    assert!(r["trajectory"]["max_residual"].as_f64().unwrap() < 1e-10);
    assert!(r["trajectory"]["ratio_change"].as_f64().unwrap() < 1e-12);
    assert!(r["base_point"]["discrepancy"].as_f64().unwrap() < 1e-8);
    // the flow is singular once 1 + λ p2 ≤ 0; here p2 = 4/15
    let o = dsym(&["flow", "--field", "X7d", "--lambda=-4", "--scheme", "DS3"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("singular"));

    let o = dsym(&["flow", "--field", "X5", "--lambda", "0.3", "--scheme", "DS3", "--method", "numeric"]);
    assert_eq!(code(&o), 0);
    assert_eq!(code(&dsym(&["flow", "--field", "X5", "--method", "closed"])), 2);
}

#[test]
fn flow_from_trajectory_file() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("t.csv");
    let out = dir.path().join("flow.json");
    let s = dsym(&["solve", "--c", "1.2", "--count", "6", "--init", "1,0,2", "--out", csv.to_str().unwrap()]);
    assert_eq!(code(&s), 0);
    assert!(s.stdout.is_empty());
    let o = dsym(&["flow", "--trajectory", csv.to_str().unwrap(), "--c", "1.2", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["report"]["field"], "X7d");

    fs::write(&csv, "x,u\n0,0\n1,1\n2,8\n3,27\n").unwrap();
    let o = dsym(&["flow", "--trajectory", csv.to_str().unwrap(), "--c", "1", "--method", "closed"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("off the solution set"));
}

#[test]
fn limit_orders() {
    let o = dsym(&["limit", "--field", "X7d", "--u", "x^3", "--h", "0.1,0.05,0.025,0.0125"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 4);
    for r in &rows {
        let h: f64 = r[0].parse().unwrap();
        let e: f64 = r[1].parse().unwrap();
        assert!((e / (2.0 * h * h) - 1.0).abs() < 1e-8);
        let order: f64 = r[2].parse().unwrap();
        assert!((order - 2.0).abs() < 1e-6);
    }
    assert_eq!(code(&dsym(&["limit", "--u", "y^2"])), 2);
    assert_eq!(code(&dsym(&["limit", "--u", "x^2 +"])), 2);
}

#[test]
fn classify_verdicts() {
    for (field, scheme, verdict) in [
        ("X3", "DS3", "point"),
        ("X7d", "DS3", "contact-internal"),
        ("X7d", "Q2EQ1", "not-a-symmetry"),
    ] {
        let o = dsym(&["classify", "--field", field, "--scheme", scheme]);
        assert_eq!(code(&o), 0);
        assert_eq!(json(&o)["report"]["verdict"], verdict, "{field} on {scheme}");
    }
}

#[test]
fn field_file_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fields.json");
    fs::write(
        &path,
        r#"[{"name": "T", "xi": "1", "phi": "0", "psi": null},
            {"name": "S", "xi": "x", "phi": "u", "psi": "0"}]"#,
    )
    .unwrap();
    let args = ["check", "--scheme", "DSYS", "--fields", path.to_str().unwrap(), "--samples", "25", "--seed", "7"];
    let a = dsym(&args);
    let b = dsym(&args);
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["seed"], 7);
    assert_eq!(v["config"]["samples"], 25);
    // 17 significant digits on every non-integer number
    let tol = v["config"]["tol"].to_string();
    assert_eq!(tol, "1.0000000000000001e-9");
}

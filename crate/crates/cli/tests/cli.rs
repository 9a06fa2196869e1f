use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_fattail"));
    c.env_remove("FATTAIL_WORKERS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let o = run(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).expect("valid JSON")
}

fn temp_csv(name: &str, body: &str) -> PathBuf {
    let p = std::env::temp_dir().join(format!("fattail-cli-{}-{name}.csv", std::process::id()));
    std::fs::write(&p, body).unwrap();
    p
}

fn pareto_csv(name: &str, n: usize) -> PathBuf {
    let o = run(&["dist", "--dist", "pareto", "--alpha", "1.5", "--n", &n.to_string(), "--seed", "3", "--output", "plotdata"]);
    let body: String = String::from_utf8(o.stdout)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| format!("{}\n", l.split(',').nth(1).unwrap()))
        .collect();
    temp_csv(name, &format!("value\n{body}"))
}

#[test]
fn kappa_pareto_two() {
    let v = json(&["kappa", "--dist", "pareto", "--alpha", "2", "--n", "2", "--paths", "100000", "--seed", "7"]);
    let k = v["results"]["kappa"][0].as_f64().unwrap();
    let se = v["results"]["mc_stderr"][0].as_f64().unwrap();
    assert!((k - 0.594).abs() < 4.0 * se + 0.005, "{k} ± {se}");
    assert_eq!(v["config"]["seed"], 7);
    assert_eq!(v["config"]["args"]["paths"], 100000);
    assert_eq!(v["schema_version"], 1);
}

#[test]
fn tailprice_implied_l() {
    let v = json(&["tailprice", "--alpha", "2", "--anchor-k", "2", "--anchor-c", "0.125", "--strikes", "3,4,5"]);
    assert_eq!(v["results"]["curve"]["implied_l"].as_f64(), Some(0.5));
    let p: Vec<f64> = v["results"]["curve"]["prices"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    for (k, p) in [3.0, 4.0, 5.0].iter().zip(p) {
        assert!((p - 0.25 / k).abs() < 1e-16);
    }
    assert_eq!(v["results"]["diagnostics"]["ok"], true);
}

#[test]
fn diag_ms_curve() {
    let f = pareto_csv("diag", 500);
    let v = json(&["diag", "--input", f.to_str().unwrap(), "--ms-p", "4"]);
    let c = &v["results"]["ms_curves"][0];
    assert_eq!(c["p"].as_f64(), Some(4.0));
    assert_eq!(c["ratios"].as_array().unwrap().len(), 500);
    assert_eq!(v["config"]["input_path"], f.to_str().unwrap());
}

#[test]
fn every_subcommand_runs() {
    let f = pareto_csv("all", 2000);
    let p = f.to_str().unwrap();
    for args in [
        vec!["tailfit", "--input", p, "--hill-k", "50,100", "--gpd-u", "3"],
        vec!["shadow", "--input", p, "--lower", "1", "--upper", "1e9", "--lstar", "2"],
        vec!["gini", "--input", p, "--tail-alpha", "1.5", "--mle-l", "2"],
        vec!["gini", "--dist", "pareto", "--alpha", "1.5", "--n", "1000"],
        vec!["kq", "--input", p, "--q", "0.05", "--split", "4"],
        vec!["pvmeta", "--p-median", "0.12", "--simulate", "1000"],
        vec!["pvmeta", "--p-median", "0.12", "--n", "15"],
        vec!["tailprice", "--alpha", "2", "--anchor-k", "0.6", "--anchor-c", "0.01", "--side", "put-on-return", "--strikes", "0.2,0.4,0.6"],
        vec!["dist", "--dist-json", r#"{"kind":"gaussian","mu":0,"sigma":1}"#, "--n", "5"],
    ] {
        let v = json(&args);
        assert_eq!(v["command"], args[0]);
    }
}

#[test]
fn pvmeta_headline_share() {
    let v = json(&["pvmeta", "--p-median", "0.12", "--k", "0.05"]);
    let c = v["results"]["cdf"][0]["cdf"].as_f64().unwrap();
    assert!((c - 0.319).abs() < 1e-3);
}

#[test]
fn same_bytes_across_worker_counts() {
    let f = pareto_csv("det", 3000);
    let cases: [&[&str]; 3] = [
        &["kappa", "--dist", "student", "--alpha", "3", "--n", "2,10", "--paths", "50000", "--seed", "11"],
        &["kappa", "--input", f.to_str().unwrap(), "--n", "5", "--paths", "20000"],
        &["shadow", "--input", f.to_str().unwrap(), "--lower", "1", "--upper", "1e9", "--lstar", "2", "--bootstrap", "30"],
    ];
    for args in cases {
        let outs: Vec<Vec<u8>> = ["1", "2", "8"]
            .iter()
            .map(|w| {
                let o = bin().args(args).env("FATTAIL_WORKERS", w).output().unwrap();
                assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
                o.stdout
            })
            .collect();
        assert!(outs.windows(2).all(|w| w[0] == w[1]), "{args:?}");
        let flag = run(&[args, &["--workers", "3"]].concat()).stdout;
        assert_eq!(flag, outs[0]);
    }
}

#[test]
fn floats_have_seventeen_digits() {
    let o = run(&["tailprice", "--alpha", "3", "--anchor-k", "2", "--anchor-c", "0.1", "--strikes", "3,4,5"]);
    let text = String::from_utf8(o.stdout).unwrap();
    let line = text.lines().find(|l| l.contains("\"implied_l\"")).unwrap();
    let num = line.split(": ").nth(1).unwrap().trim_end_matches(',');
    let mantissa = num.split('e').next().unwrap();
    assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17, "{num}");
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["nonsense"]).status.code(), Some(2));
    assert_eq!(run(&["kappa", "--bogus"]).status.code(), Some(2));
    assert_eq!(run(&["kappa"]).status.code(), Some(2));
    let bad = temp_csv("nan", "1\nNaN\n2\n");
    let o = run(&["diag", "--input", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
    let empty = temp_csv("empty", "");
    assert_eq!(run(&["diag", "--input", empty.to_str().unwrap()]).status.code(), Some(3));
    assert_eq!(run(&["diag", "--input", "/nonexistent/x.csv"]).status.code(), Some(3));
    // the bound is only defined for calls on returns
    let o = run(&["tailprice", "--alpha", "2", "--anchor-k", "2", "--anchor-c", "0.125", "--strikes", "3,4,5", "--bs-sigma", "0.2"]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(run(&["kappa", "--help"]).status.success());
}

#[test]
fn numeric_failure_exit_code() {
    // a smile this steep makes the call increase in strike: no bound exists
    let o = run(&[
        "tailprice", "--alpha", "3", "--anchor-k", "2", "--anchor-c", "0.01", "--side", "call-on-return", "--strikes", "2,3,4",
        "--bs-sigma", "0.2", "--bs-sigma-slope", "50",
    ]);
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn plotdata_and_csv_modes() {
    let o = run(&["tailprice", "--alpha", "2", "--anchor-k", "2", "--anchor-c", "0.125", "--strikes", "3,4", "--output", "plotdata"]);
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,y,series"));
    assert_eq!(lines.next(), Some("3.0000000000000000e0,8.3333333333333329e-2,price"));
    let o = run(&["pvmeta", "--p-median", "0.2", "--output", "csv"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("path,value\n"));
    assert!(text.lines().any(|l| l.starts_with("results.mean,")));
}

#[test]
fn out_file() {
    let p = std::env::temp_dir().join(format!("fattail-cli-{}-out.json", std::process::id()));
    let o = run(&["pvmeta", "--p-median", "0.2", "--out", p.to_str().unwrap()]);
    assert!(o.status.success() && o.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap();
    assert_eq!(v["command"], "pvmeta");
}

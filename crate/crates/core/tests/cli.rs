use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use pofdecomp::Form;
use tempfile::TempDir;

fn pofdecomp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pofdecomp")).args(args).output().expect("binary runs")
}

fn write_form(dir: &Path, name: &str, f: &Form) -> String {
    let p = dir.join(name);
    fs::write(&p, serde_json::to_string(f).unwrap()).unwrap();
    p.to_str().unwrap().to_owned()
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_owned()
}

#[test]
fn generated_special_instance_is_proved() {
    let dir = TempDir::new().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = pofdecomp(&["gen", "--kind", "special", "--n", "4", "--out-dir", d]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let res = path(&dir, "res.json");
    let out = pofdecomp(&["decompose", &path(&dir, "f2.json"), &path(&dir, "f3.json"), "--out", &res]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&res).unwrap()).unwrap();
    assert_eq!(v["unique_proved"], true);
    assert_eq!(v["m"], 3);
    assert_eq!(v["addends"].as_array().unwrap().len(), 3);
}

#[test]
fn hypothesis_failure_exits_with_two() {
    let dir = TempDir::new().unwrap();
    let x = Form::variable(2, 0);
    let y = Form::variable(2, 1);
    let f2 = write_form(dir.path(), "f2.json", &x.power(4).add(&y.power(4)).unwrap());
    let f3 = write_form(dir.path(), "f3.json", &x.power(6).add(&y.power(6)).unwrap());
    let out = pofdecomp(&["decompose", &f2, &f3]);
    assert_eq!(out.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["relation_ok"], false);
    assert!(String::from_utf8_lossy(&out.stderr).contains("hypothesis failure"));
}

#[test]
fn malformed_input_exits_with_one() {
    let dir = TempDir::new().unwrap();
    let bad = path(&dir, "bad.json");
    fs::write(&bad, "{ not json").unwrap();
    let out = pofdecomp(&["certify", &bad]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());

    let missing = path(&dir, "missing.json");
    assert_eq!(pofdecomp(&["certify", &missing]).status.code(), Some(1));
}

#[test]
fn mismatched_degrees_exit_with_one() {
    let dir = TempDir::new().unwrap();
    let x = Form::variable(2, 0);
    let f2 = write_form(dir.path(), "f2.json", &x.power(4));
    let f3 = write_form(dir.path(), "f3.json", &x.power(5));
    assert_eq!(pofdecomp(&["decompose", &f2, &f3]).status.code(), Some(1));
}

#[test]
fn study_writes_one_row_per_n() {
    let dir = TempDir::new().unwrap();
    let csv = path(&dir, "study.csv");
    let out = pofdecomp(&["study", "--kind", "special", "--n-range", "4:8", "--trials", "1", "--out", &csv]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,m,trials,unique,dual_nondeg,failures,mean_seconds");
    assert_eq!(lines.len(), 6);
    for (line, n) in lines[1..].iter().zip(4..) {
        assert!(line.starts_with(&format!("{n},{},1,1,", n - 1)), "{line}");
    }
}

#[test]
fn seed_fixes_the_study() {
    let run = |seed: &str| {
        let out = pofdecomp(&[
            "study", "--kind", "gaussian_trace_free", "--n-range", "3,4", "--trials", "3", "--seed", seed, "--trace-convention", "normalized",
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        // drop the timing column
        String::from_utf8(out.stdout).unwrap().lines().map(|l| l.rsplit_once(',').unwrap().0.to_owned()).collect::<Vec<_>>()
    };
    assert_eq!(run("17"), run("17"));
}

#[test]
fn seed_fixes_generated_instances() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for d in [&a, &b] {
        let out = pofdecomp(&["gen", "--kind", "generic_gaussian", "--n", "3", "--m", "2", "--seed", "5", "--out-dir", d.path().to_str().unwrap()]);
        assert!(out.status.success());
    }
    assert_eq!(fs::read(a.path().join("f3.json")).unwrap(), fs::read(b.path().join("f3.json")).unwrap());
}

#[test]
fn squares_family_verifies_at_seven() {
    let out = pofdecomp(&["verify", "--family", "4.2", "--n", "7"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["m"], 12);
    assert_eq!(v["relation_dim_3"], 364);
    assert_eq!(v["relation_ok"], true);
}

#[test]
fn bad_options_exit_with_one() {
    assert_eq!(pofdecomp(&["study", "--kind", "nonsense", "--n-range", "3:4"]).status.code(), Some(1));
    assert_eq!(pofdecomp(&["study", "--kind", "special", "--n-range", "5:3"]).status.code(), Some(1));
    assert_eq!(pofdecomp(&["verify", "--family", "4.2", "--n", "4", "--tol-rank", "0"]).status.code(), Some(1));
}

#[test]
fn mixture_round_trip() {
    let dir = TempDir::new().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = pofdecomp(&["gen", "--kind", "mixture", "--n", "3", "--m", "2", "--convention", "raw", "--out-dir", d]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = pofdecomp(&["gmm", &path(&dir, "moments.json")]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["m"], 2);
    assert_eq!(v["unique_proved"], true);
}

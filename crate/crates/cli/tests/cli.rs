use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn agmonlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_agmonlab")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn well_file(dir: &Path) -> String {
    let graph = dir.join("well.json");
    let g = graph.to_str().unwrap().to_string();
    let o = agmonlab(&["gen", "--lattice", "1", "--radius", "80", "--well", "-1.5", "--out", &g]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    g
}

#[test]
fn well_below_ess_passes() {
    let dir = tempfile::tempdir().unwrap();
    let g = well_file(dir.path());
    let out = dir.path().join("r.json");
    let o = agmonlab(&["verify", "--graph", &g, "--suite", "below-ess", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&out);
    assert_eq!(r["status"], "pass");
    assert_eq!(r["config"]["suite"], "below-ess");
    assert_eq!(r["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn doctored_rhs_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let g = well_file(dir.path());
    let out = dir.path().join("r.json");
    let o = agmonlab(&[
        "verify", "--graph", &g, "--suite", "below-ess", "--doctor-rhs", "1e-6", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 1);
    assert_eq!(read_json(&out)["status"], "violation");
}

#[test]
fn spectrum_of_p3() {
    let o = agmonlab(&["spectrum", "--family", "path:3", "--k", "3"]);
    assert_eq!(code(&o), 0);
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    let ev: Vec<f64> = r["eigenvalues"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    for (got, want) in ev.iter().zip([0.0, 1.0, 3.0]) {
        assert!((got - want).abs() < 1e-12, "{ev:?}");
    }
}

#[test]
fn reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = agmonlab(&[
            "verify", "--lattice", "2", "--radius", "6", "--suite", "rellich", "--trials", "3", "--seed", "9", "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read(out).unwrap()
    };
    assert_eq!(run("a.json"), run("b.json"));
}

#[test]
fn every_suite_is_reachable() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.json");
    let gs = g.to_str().unwrap();
    assert_eq!(code(&agmonlab(&["gen", "--lattice", "1", "--radius", "30", "--out", gs])), 0);
    for suite in ["rellich", "agmon-metric", "below-ess", "sparse", "cheeger", "supersolution", "two-sided"] {
        let o = agmonlab(&["verify", "--graph", gs, "--suite", suite, "--out", dir.path().join("r.json").to_str().unwrap()]);
        let c = code(&o);
        assert!((0..=2).contains(&c), "{suite}: exit {c}, {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn report_merges_and_takes_worst_status() {
    let dir = tempfile::tempdir().unwrap();
    let g = well_file(dir.path());
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    agmonlab(&["verify", "--graph", &g, "--suite", "below-ess", "--out", a.to_str().unwrap()]);
    agmonlab(&["verify", "--graph", &g, "--suite", "rellich", "--out", b.to_str().unwrap()]);
    let s = dir.path().join("s.json");
    let o = agmonlab(&["report", a.to_str().unwrap(), b.to_str().unwrap(), "--out", s.to_str().unwrap()]);
    // the well has negative potential, so the Green-function suite cannot run
    assert_eq!(code(&o), 2);
    let sum = read_json(&s);
    assert_eq!(sum["entries"][0]["status"], "pass");
    assert_eq!(sum["entries"][1]["status"], "hypothesis_failed");
    assert_eq!(sum["reports"].as_array().unwrap().len(), 2);
}

#[test]
fn csv_outputs() {
    let o = agmonlab(&["hardy", "--lattice", "3", "--radius", "4"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("vertex,label,v,w,v_alpha,norm,w_norm2\n"));
    assert_eq!(text.lines().count(), 1 + 7 * 7 * 7);
    let o = agmonlab(&["agmon-metric", "--lattice", "1", "--radius", "10", "--weight-const", "0.25"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("vertex,label,distance,predecessor\n"));
    assert_eq!(text.lines().count(), 22);
}

#[test]
fn bad_input_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"vertices\": [{\"id\": 0}], \"edges\": 7}").unwrap();
    let o = agmonlab(&["verify", "--graph", bad.to_str().unwrap(), "--suite", "sparse"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
    assert_eq!(code(&agmonlab(&["verify", "--lattice", "1", "--radius", "5", "--suite", "nope"])), 3);
    assert_eq!(code(&agmonlab(&["spectrum", "--graph", "/nonexistent/g.json"])), 3);
    assert_eq!(code(&agmonlab(&["verify", "--suite"])), 3);
    assert_eq!(code(&agmonlab(&["--help"])), 0);
}

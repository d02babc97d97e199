use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_seqgauss"));
    c.env_remove("SEQGAUSS_SEED");
    c
}

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn verify_core_passes() {
    let o = run(&["verify", "--suite", "core", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("checks passed"));
}

#[test]
fn impossible_tolerance_fails_with_code_one() {
    let o = run(&["verify", "--suite", "hermite", "--tol", "hermite_orthogonality=1e-30"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("orthogonality_matrix"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["verify", "--suite", "nope"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--suite", "core", "--tol", "bogus=1"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--suite", "core", "--tol", "closure"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn seed_is_read_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let p1 = dir.path().join("a.csv");
    let p2 = dir.path().join("b.csv");
    let cfg = config("sample.json");
    let o = bin()
        .env("SEQGAUSS_SEED", "9")
        .args(["sample", "--config", cfg.to_str().unwrap(), "--out", p1.to_str().unwrap(), "--count", "50"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = run(&["sample", "--config", cfg.to_str().unwrap(), "--out", p2.to_str().unwrap(), "--count", "50", "--seed", "9"]);
    assert_eq!(o.status.code(), Some(0));
    let a = std::fs::read_to_string(&p1).unwrap();
    assert_eq!(a, std::fs::read_to_string(&p2).unwrap());
    let mut lines = a.lines();
    assert_eq!(lines.next(), Some("w_0_0,w_0_1,w_0_2,w_1_0,w_1_1,w_1_2"));
    assert_eq!(lines.count(), 50);
}

#[test]
fn condexp_worked_example() {
    let o = run(&["condexp", "--config", config("condexp.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let json: serde_json::Value = serde_json::from_str(&text[text.find('{').unwrap()..]).unwrap();
    let pf: Vec<Vec<f64>> = serde_json::from_value(json["Pf"].clone()).unwrap();
    let expected = [[2.0, 0.0, 0.0], [-0.75, 0.0, 0.0]];
    for (row, exp) in pf.iter().zip(expected) {
        for (v, e) in row.iter().zip(exp) {
            assert!((v - e).abs() < 1e-12, "{pf:?}");
        }
    }
}

#[test]
fn closure_writes_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["closure_pn.json", "closure_op.json"] {
        let out = dir.path().join("snap.csv");
        let o = run(&["closure", "--config", config(name).to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let csv = std::fs::read_to_string(&out).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("t,x,I_0,I_1,I_2,I_3"));
        // 100 steps, stride 20: initial plus 5 snapshots of 100 cells
        assert_eq!(lines.count(), 6 * 100);
    }
}

#[test]
fn bad_config_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let mut doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(config("closure_pn.json")).unwrap()).unwrap();
    doc.as_object_mut().unwrap().remove("J");
    let path = dir.path().join("bad.json");
    std::fs::write(&path, doc.to_string()).unwrap();
    let out = dir.path().join("o.csv");
    let o = run(&["closure", "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`J`"), "{}", stderr(&o));

    let o = run(&["condexp", "--config", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn hermite_table() {
    let o = run(&["hermite", "--max-n", "3", "--points", "3", "--x-min", "-1", "--x-max", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,x,value");
    assert_eq!(lines.len(), 1 + 4 * 3);
    // He_3(1) = 1 - 3 = -2, He_2(0) = -1
    assert!(lines.contains(&"3,1,-2"));
    assert!(lines.contains(&"2,0,-1"));

    let o = run(&["hermite", "--max-n", "2", "--convention", "phys", "--points", "1", "--x-min", "1", "--x-max", "1"]);
    // H_2(1) = 4 - 2
    assert!(stdout(&o).contains("2,1,2"));
}

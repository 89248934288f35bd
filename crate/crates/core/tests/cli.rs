//! End-to-end exit-code contract: 0 success, 1 hypothesis failure, 2
//! conclusion failure, 64 usage/parse error.

use std::path::Path;
use std::process::Command;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_jordan-ext")
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(bin()).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn gen_instance(dir: &Path, seed: u64) -> String {
    let inst = dir.join("inst.json").display().to_string();
    let (code, _, _) = run(&["gen", "--seed", &seed.to_string(), "--out", &inst]);
    assert_eq!(code, 0);
    inst
}

#[test]
fn gen_extend_certify_verify_succeed() {
    let dir = tempfile::tempdir().unwrap();
    let inst = gen_instance(dir.path(), 1);
    let res = dir.path().join("res.json").display().to_string();
    let (code, stdout, _) = run(&["extend", "--in", &inst, "--out", &res, "--samples", "50"]);
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.contains("all checks passed"));
    let text = std::fs::read_to_string(&res).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["command"], "extend");
    assert_eq!(v["overall"], true);
    assert!(v["reports"][0]["result"]["phi"]["matrix"].is_array());

    let (code, _, _) = run(&["certify", "--in", &inst, "--samples", "50"]);
    assert_eq!(code, 0);
    let (code, _, _) = run(&["verify", "--in", &inst, "--samples", "50"]);
    assert_eq!(code, 0);
}

#[test]
fn hypothesis_failure_exits_one() {
    // U(x) = trace(x) * e11 collapses all projections: orthogonal
    // additivity fails
    let dir = tempfile::tempdir().unwrap();
    let problem = serde_json::json!({
        "source": {"blocks": [{"dim": 2, "weight": 1.0}]},
        "target": {"blocks": [{"dim": 2, "weight": 1.0}]},
        "u_map": {
            "domain": {"blocks": [{"dim": 2, "weight": 1.0}]},
            "codomain": {"blocks": [{"dim": 2, "weight": 1.0}]},
            // rows of the 4x4 matrix on column-stacked M2: image is
            // (x00 + x11) * e11
            "matrix": [
                [[1.0,0.0],[0.0,0.0],[0.0,0.0],[1.0,0.0]],
                [[0.0,0.0],[0.0,0.0],[0.0,0.0],[0.0,0.0]],
                [[0.0,0.0],[0.0,0.0],[0.0,0.0],[0.0,0.0]],
                [[0.0,0.0],[0.0,0.0],[0.0,0.0],[0.0,0.0]]
            ]
        }
    });
    let path = dir.path().join("bad.json");
    std::fs::write(&path, serde_json::to_string(&problem).unwrap()).unwrap();
    let out = dir.path().join("rep.json").display().to_string();
    let (code, stdout, _) = run(&[
        "extend",
        "--in",
        &path.display().to_string(),
        "--out",
        &out,
        "--samples",
        "50",
    ]);
    assert_eq!(code, 1, "{stdout}");
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["overall"], false);
    assert_eq!(v["reports"][0]["kind"], "hypothesis_failure");
    // the failing sample is named in the embedded context
    assert!(v["reports"][0]["context"].as_str().unwrap().contains("sample"));
}

#[test]
fn conclusion_failure_exits_two() {
    // shrinking the tolerances below the rounding floor of the conclusion
    // residuals (while staying above the hypothesis-check residuals, which
    // are exact by construction) turns honest rounding into
    // conclusion-check failures
    let dir = tempfile::tempdir().unwrap();
    let inst = gen_instance(dir.path(), 3);
    let (code, stdout, _) = run(&[
        "extend",
        "--in",
        &inst,
        "--samples",
        "50",
        "--tolerance-scale",
        "1e-4",
    ]);
    assert_eq!(code, 2, "{stdout}");
    assert!(!stdout.contains("hypothesis"), "{stdout}");
}

#[test]
fn usage_and_parse_errors_exit_sixtyfour() {
    let (code, _, _) = run(&["bogus-subcommand"]);
    assert_eq!(code, 64);

    let (code, _, _) = run(&["extend", "--in", "/nonexistent/file.json"]);
    assert_eq!(code, 64);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("garbage.json");
    std::fs::write(&path, "{ not json").unwrap();
    let (code, _, stderr) = run(&["extend", "--in", &path.display().to_string()]);
    assert_eq!(code, 64);
    assert!(stderr.contains("garbage.json"));

    let (code, _, _) = run(&["counterexample", "--profile", "spiral"]);
    assert_eq!(code, 64);

    let inst = gen_instance(dir.path(), 1);
    let (code, _, _) = run(&["extend", "--in", &inst, "--tolerance-scale", "0"]);
    assert_eq!(code, 64);
}

#[test]
fn counterexample_profiles() {
    let (code, stdout, _) = run(&["counterexample", "--profile", "sin", "--samples", "200"]);
    assert_eq!(code, 0);
    assert!(stdout.contains("nonextendability_witness"));

    let (code, _, _) = run(&["counterexample", "--profile", "zero", "--samples", "100"]);
    assert_eq!(code, 0);
    let (code, _, _) = run(&["counterexample", "--profile", "constant:0.9", "--samples", "100"]);
    assert_eq!(code, 0);
}

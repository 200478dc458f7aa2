//! End-to-end tests of the jetconn binary: exit-code contract, machine
//! report determinism, and the headline subcommand outputs.

use std::process::{Command, Output};

fn jetconn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jetconn"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).to_string()
}

#[test]
fn check_flat_hypergeometric_exits_zero() {
    let out = jetconn(&["check-flat", "--preset", "hypergeometric"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_str(&out);
    assert!(text.contains("flat: true"), "{text}");
}

#[test]
fn check_flat_reports_witness_and_exit_one() {
    // A non-flat two-base connection through a spec file.
    let dir = std::env::temp_dir().join("jetconn-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("nonflat.json");
    std::fs::write(
        &path,
        br#"{
            "base_vars": ["x", "y"],
            "param_vars": [],
            "group": {"family": "GL", "n": 2},
            "matrices": {
                "x": [["0", "y"], ["0", "0"]],
                "y": [["0", "0"], ["0", "0"]]
            }
        }"#,
    )
    .unwrap();
    let out = jetconn(&["check-flat", "--spec", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout_str(&out);
    assert!(text.contains("flat: false"), "{text}");
    assert!(text.contains("witness"), "{text}");
}

#[test]
fn usage_errors_exit_two() {
    // Unknown preset.
    let out = jetconn(&["check-flat", "--preset", "nope"]);
    assert_eq!(out.status.code(), Some(2));
    // Unknown subcommand (clap).
    let out = jetconn(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    // Malformed expression.
    let out = jetconn(&[
        "invariants-verify",
        "--preset",
        "hypergeometric-det",
        "--order",
        "2",
        "--expr",
        "w_aa/w - ",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invariants_verify_distinguishes_integrals() {
    let ok = jetconn(&[
        "invariants-verify",
        "--preset",
        "hypergeometric-det",
        "--order",
        "2",
        "--expr",
        "w_aa/w - w_a^2/w^2",
    ]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(stdout_str(&ok).contains("is_first_integral: true"));

    let bad = jetconn(&[
        "invariants-verify",
        "--preset",
        "hypergeometric-det",
        "--order",
        "1",
        "--expr",
        "w_a",
    ]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stdout_str(&bad).contains("is_first_integral: false"));
}

#[test]
fn machine_reports_are_byte_identical() {
    let args = [
        "monodromy",
        "--preset",
        "hypergeometric",
        "--alpha",
        "1/2",
        "--beta",
        "1/3",
        "--gamma",
        "1/5",
        "--loop",
        "0",
        "--format",
        "machine",
    ];
    let a = jetconn(&args);
    let b = jetconn(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout, "machine reports must be deterministic");
    // Round-trips as a report document.
    let report: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(report["status"], "ok");
    assert!(report.get("timing_ms").is_none());
}

#[test]
fn monodromy_eigenvalues_match_loop_zero() {
    let out = jetconn(&[
        "monodromy",
        "--preset",
        "hypergeometric",
        "--alpha",
        "1/2",
        "--beta",
        "1/3",
        "--gamma",
        "1/5",
        "--loop",
        "0",
        "--format",
        "machine",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let eigs = report["payload"]["eigenvalues"].as_array().unwrap();
    assert_eq!(eigs.len(), 2);
    // Expected set {1, e^{-2 pi i / 5}} in any order.
    let want = [
        (1.0, 0.0),
        (
            (-2.0 * std::f64::consts::PI / 5.0).cos(),
            (-2.0 * std::f64::consts::PI / 5.0).sin(),
        ),
    ];
    for (wr, wi) in want {
        let hit = eigs.iter().any(|e| {
            let re = e[0].as_f64().unwrap();
            let im = e[1].as_f64().unwrap();
            ((re - wr).powi(2) + (im - wi).powi(2)).sqrt() < 1e-6
        });
        assert!(hit, "eigenvalue ({wr}, {wi}) missing in {eigs:?}");
    }
}

#[test]
fn scalar_spec_file_round_trips_through_lax() {
    let dir = std::env::temp_dir().join("jetconn-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("scalar.json");
    std::fs::write(
        &path,
        br#"{
            "base_vars": ["x"],
            "param_vars": ["s"],
            "group": {"family": "scalar", "n": 1},
            "matrices": {"x": [["s"]]}
        }"#,
    )
    .unwrap();
    let out = jetconn(&["lax", "--spec", path.to_str().unwrap(), "--format", "machine"]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["payload"]["matrices"][0]["matrix"][0][0], "s");
}

#[test]
fn hypergeometric_galois_exits_zero_with_family_check() {
    let out = jetconn(&["hypergeometric-galois", "--format", "machine"]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(
        report["payload"]["solution_family"]["satisfies_constraints"],
        true
    );
    assert_eq!(
        report["payload"]["det_constraints"].as_array().unwrap().len(),
        5
    );
}

#[test]
fn extended_curvature_perturbed_exits_one() {
    let out = jetconn(&["extended-curvature", "--n", "2", "--k", "2", "--perturb"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout_str(&out).contains("all_zero: false"));
}

#[test]
fn isomonodromy_test_runs_on_small_preset() {
    let out = jetconn(&[
        "isomonodromy-test",
        "--n", "2", "--k", "2",
        "--direction", "a1",
        "--length", "0.05",
        "--checkpoints", "2",
        "--tol", "1e-8",
        "--param", "a1=0", "--param", "a2=1",
        "--param", "p1=1/4", "--param", "q1=1/3", "--param", "r1=-1/5",
        "--param", "p2=-1/6", "--param", "q2=1/2", "--param", "r2=1/7",
        "--format", "machine",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let drift = report["payload"]["max_trace_drift"].as_f64().unwrap();
    assert!(drift < 1e-5, "drift {drift}");
}

#[test]
fn schwarzian_numeric_check_via_cli() {
    let out = jetconn(&[
        "schwarzian",
        "--preset", "hypergeometric",
        "--alpha", "1/2", "--beta", "1/3", "--gamma", "1/5",
        "--x0", "0.4",
        "--format", "machine",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let residual = report["payload"]["numeric_check"]["residual"].as_f64().unwrap();
    assert!(residual <= 1e-5, "residual {residual}");
}

#[test]
fn lemma3_and_independence() {
    let out = jetconn(&["lemma3", "--a", "3/10", "--b", "7/10"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout_str(&out).contains("solves_system: true"));

    let out = jetconn(&["independence", "--alpha", "0.1", "--beta", "0.2", "--gamma", "0.7"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout_str(&out).contains("rank: 3"));
}

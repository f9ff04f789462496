//! End-to-end runs of the `finfold` binary.

use std::io::Write;
use std::process::{Command, Output, Stdio};

use finfold::ensystem::EnSystem;
use finfold::fexplorer::FReport;
use finfold::gadgets::GadgetSystem;
use finfold::reducer::CompilationResult;
use finfold::solver::SolveReport;
use serde_json::{json, Value};

fn finfold(args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_finfold"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary runs");
    child
        .stdin
        .take()
        .unwrap()
        .write_all(stdin.as_bytes())
        .unwrap();
    child.wait_with_output().unwrap()
}

fn ok(args: &[&str], stdin: &str) -> String {
    let out = finfold(args, stdin);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

const IDEMPOTENT: &str = r#"{"n":1,"equations":[{"k":"mul","i":1,"j":1,"o":1}]}"#;

#[test]
fn solve_idempotent_matches_golden() {
    let out: Value = serde_json::from_str(&ok(&["solve", "--domain", "z"], IDEMPOTENT)).unwrap();
    assert_eq!(
        out,
        json!({"status": "exact", "count": 2, "bound": 10, "certified": true, "solutions": [[0], [1]]})
    );
}

#[test]
fn explore_f_one() {
    let report: FReport = serde_json::from_str(&ok(&["explore-f", "--n", "1"], "")).unwrap();
    assert_eq!(report.best_count, 2);
    assert!(report.exhaustive);
    assert_eq!(
        report.witness,
        serde_json::from_str::<EnSystem>(IDEMPOTENT).unwrap()
    );
}

#[test]
fn tower_then_solve() {
    let tower = ok(&["gadget", "tower", "--s", "3"], "");
    let gadget: GadgetSystem = serde_json::from_str(&tower).unwrap();
    let report: SolveReport = serde_json::from_str(&ok(&["solve"], &tower)).unwrap();
    assert_eq!(report.count, 1);
    assert_eq!(
        report.solutions[0][gadget.index("x1").unwrap() - 1],
        256.into()
    );
}

#[test]
fn eight_square_pins_by_role() {
    for (v, expected) in [("0", 1), ("1", 16), ("2", 112)] {
        let pin = format!("x2={v}");
        let gadget = ok(&["gadget", "eight-square", "--pin", &pin], "");
        let report: SolveReport =
            serde_json::from_str(&ok(&["solve", "--witness-cap", "0"], &gadget)).unwrap();
        assert_eq!(report.count, expected, "x2 = {v}");
        let again: SolveReport = serde_json::from_str(&ok(
            &["solve", "--witness-cap", "0", "--pin", &pin],
            &ok(&["gadget", "eight-square"], ""),
        ))
        .unwrap();
        assert_eq!(again.count, expected);
    }
}

#[test]
fn compile_output_reads_back() {
    let text = ok(&["compile", "--poly", "x1*x2 - 3"], "");
    let result = CompilationResult::from_json(serde_json::from_str(&text).unwrap()).unwrap();
    assert_eq!(result.p, 2);
    // the embedded system solves directly
    let report: SolveReport = serde_json::from_str(&ok(&["solve"], &text)).unwrap();
    assert_eq!(report.count, 4);
    assert!(report.certified);
}

#[test]
fn lift_and_emit() {
    let lifted = ok(&["lift"], IDEMPOTENT);
    let system: EnSystem = serde_json::from_str(&lifted).unwrap();
    assert_eq!(system.n(), 2);
    let report: SolveReport = serde_json::from_str(&ok(&["solve"], &lifted)).unwrap();
    assert_eq!(report.count, 4);
    let equation = ok(&["emit-equation"], IDEMPOTENT);
    assert_eq!(
        equation.trim(),
        finfold::polyalg::parse_polynomial("(x1*x1 - x1)^2")
            .unwrap()
            .canonical_text()
    );
}

#[test]
fn files_and_config() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("system.json");
    let output = dir.path().join("report.json");
    let config = dir.path().join("config.json");
    std::fs::write(&input, IDEMPOTENT).unwrap();
    std::fs::write(&config, r#"{"domain": "n+", "bound": 5}"#).unwrap();
    let args = [
        "solve",
        "--config",
        config.to_str().unwrap(),
        "-i",
        input.to_str().unwrap(),
        "-o",
        output.to_str().unwrap(),
    ];
    assert_eq!(ok(&args, ""), "");
    let report: SolveReport =
        serde_json::from_str(&std::fs::read_to_string(&output).unwrap()).unwrap();
    assert_eq!(report.count, 1);
    // explicit flags win over the config file
    let mut flagged = args.to_vec();
    flagged.extend(["--domain", "z"]);
    ok(&flagged, "");
    let report: SolveReport =
        serde_json::from_str(&std::fs::read_to_string(&output).unwrap()).unwrap();
    assert_eq!(report.count, 2);
}

#[test]
fn reruns_are_byte_identical() {
    let runs: [&[&str]; 4] = [
        &["explore-f", "--n", "2", "--workers", "4"],
        &["verify", "--random", "4", "--seed", "11"],
        &["gadget", "system-s", "--poly", "x1-x2"],
        &[
            "majorant",
            "--delta",
            "table:1=4,2=10,default=x1+1",
            "--n",
            "5",
        ],
    ];
    for args in runs {
        assert_eq!(ok(args, ""), ok(args, ""), "{args:?}");
    }
    let one = ok(&["explore-f", "--n", "2", "--workers", "1"], "");
    assert_eq!(one, ok(&["explore-f", "--n", "2", "--workers", "3"], ""));
}

#[test]
fn gadget_output_reads_back() {
    let text = ok(&["gadget", "system-s", "--poly", "x1-x2"], "");
    let value: Value = serde_json::from_str(&text).unwrap();
    let gadget: GadgetSystem = serde_json::from_value(value.clone()).unwrap();
    let s = value["s"].as_u64().unwrap() as usize;
    assert_eq!(gadget.system.n(), 2 * s + 23);
    assert_eq!(
        serde_json::to_value(&gadget).unwrap()["roles"],
        value["roles"]
    );
}

#[test]
fn psi_and_majorant() {
    let psi: Value = serde_json::from_str(&ok(&["psi", "--n", "1"], "")).unwrap();
    assert_eq!(psi, json!({"n": 1, "psi": 37}));
    let m: Value = serde_json::from_str(&ok(&["majorant", "--n", "10"], "")).unwrap();
    let g: Vec<u64> = serde_json::from_value(m["g"].clone()).unwrap();
    assert!(g.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn exit_codes() {
    assert_eq!(finfold(&["frobnicate"], "").status.code(), Some(1));
    assert_eq!(
        finfold(&["solve", "--workers", "0"], IDEMPOTENT)
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        finfold(&["solve", "-i", "/nonexistent/system.json"], "")
            .status
            .code(),
        Some(1)
    );
    assert_eq!(finfold(&["solve"], "{not json").status.code(), Some(2));
    assert_eq!(
        finfold(&["compile", "--poly", "x1**"], "").status.code(),
        Some(2)
    );
    assert_eq!(finfold(&["psi", "--n", "40"], "").status.code(), Some(3));
    let budgeted = finfold(&["explore-f", "--n", "2", "--budget", "10"], "");
    assert_eq!(budgeted.status.code(), Some(3));
    // the partial report is still written
    let partial: FReport = serde_json::from_slice(&budgeted.stdout).unwrap();
    assert!(!partial.exhaustive);
    assert_eq!(
        finfold(&["majorant", "--delta", "5-x1", "--n", "3"], "")
            .status
            .code(),
        Some(4)
    );
}

#[test]
fn progress_goes_to_stderr() {
    let out = finfold(&["explore-f", "--n", "2", "--progress", "1"], "");
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("examined"));
    serde_json::from_slice::<FReport>(&out.stdout).unwrap();
}

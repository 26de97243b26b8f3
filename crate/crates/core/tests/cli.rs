use std::process::{Command, Output};

use ncx_core::construct::complementary_violations;
use ncx_core::harness::Instance;
use ncx_core::matrix::MatrixC;
use ncx_core::opfunc::{FnDocument, TrigFn};
use serde_json::Value;

fn ncx(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ncx")).args(args).env_remove("NCX_SEED").output().unwrap()
}

#[test]
fn selftest_passes() {
    let out = ncx(&["selftest"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(!String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn norm_solve_on_a_scalar_pair() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("c.json");
    std::fs::write(&file, r#"{"dim": 1, "items": [[[3, 0]], [[4, 0]]]}"#).unwrap();
    let out = ncx(&["norm", "solve", file.to_str().unwrap()]);
    assert!(out.status.success());
    let cert: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((cert["value"].as_f64().unwrap() - 5.0).abs() <= 1e-4 * 6.0);
}

#[test]
fn verify_writes_one_row_per_instance() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("rows.json");
    let args = ["verify", "khintchine", "--dim", "2", "--terms", "4", "--count", "20", "--seed", "7"];
    let out = ncx(&[&args[..], &["--out", file.to_str().unwrap()]].concat());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows: Vec<Value> = serde_json::from_slice(&std::fs::read(&file).unwrap()).unwrap();
    assert_eq!(rows.len(), 20);
    for row in &rows {
        assert!(row["ratio_construction"].as_f64().unwrap() <= 2.0 * (1.0 + 1e-6));
        assert!(row["ratio_solver"].as_f64().unwrap() <= row["ratio_construction"].as_f64().unwrap() + 1e-6);
    }
}

#[test]
fn csv_output_has_a_header() {
    let out = ncx(&["verify", "paley2", "--dim", "1", "--terms", "2", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("id,"));
    assert_eq!(lines.count(), 1);
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(ncx(&["verify", "nonsense"]).status.code(), Some(64));
    assert_eq!(ncx(&["verify", "khintchine", "--dim", "0"]).status.code(), Some(64));
    assert_eq!(ncx(&["verify", "paley2", "--kset", "1,3,4"]).status.code(), Some(2));
}

#[test]
fn hypothesis_failure_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("inst.json");
    let out = ncx(&["gen", file.to_str().unwrap(), "--kind", "paley2", "--dim", "2", "--terms", "3", "--seed", "3"]);
    assert!(out.status.success());
    let mut inst: Instance = serde_json::from_slice(&std::fs::read(&file).unwrap()).unwrap();
    let FnDocument::Trig(f) = &inst.function else { panic!("trigonometric instance expected") };
    let k = inst.kset.clone().unwrap();
    let bumped = (0..=k.max() as i64)
        .map(|n| {
            let mut coeffs = inst.coefficients.clone();
            coeffs.push((n, MatrixC::identity(2)));
            TrigFn::from_coefficients(f.gridsize(), 2, &coeffs).unwrap()
        })
        .find(|g| !complementary_violations(g, &k).unwrap().is_empty())
        .expect("some frequency in range is not admissible");
    inst.function = FnDocument::Trig(bumped);
    std::fs::write(&file, serde_json::to_vec(&inst).unwrap()).unwrap();
    let out = ncx(&["split", file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

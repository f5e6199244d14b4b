use std::path::PathBuf;
use std::process::{Command, Output};

fn twistor(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twistor"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn spec_path(name: &str) -> String {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../specs").join(name);
    root.to_string_lossy().into_owned()
}

#[test]
fn classify_flat_passes() {
    let o = twistor(&["classify", "--builtin", "flat", "--t", "1", "--samples", "10"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.contains("J1_integrable = true"));
    assert!(out.contains("kahler_J1 = false"));
}

#[test]
fn space_form_is_kahler_at_negative_t() {
    let o = twistor(&[
        "classify",
        "--builtin",
        "constcurv:1",
        "--t",
        "-1",
        "--samples",
        "10",
        "--json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("\"kahler_J1\": true"), "{out}");
    assert!(out.contains("\"almost_kahler_J2\": false"), "{out}");
}

#[test]
fn classify_with_oracle_cross_checks() {
    let args = [
        "classify",
        "--builtin",
        "perturbed-nonsd",
        "--t",
        "0.5",
        "--oracle",
        "--samples",
        "5",
    ];
    let o = twistor(&args);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("J1_integrable = false"));
}

#[test]
fn json_report_has_schema_fields() {
    let o = twistor(&[
        "curvature",
        "--builtin",
        "constcurv:1",
        "--samples",
        "5",
        "--seed",
        "7",
        "--json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    for key in [
        "\"version\"",
        "\"spec\"",
        "\"seed\": 7",
        "\"checks\"",
        "\"residual\"",
        "\"tolerance\"",
        "\"pass\"",
        "\"anchor\"",
    ] {
        assert!(out.contains(key), "missing {key} in {out}");
    }
}

#[test]
fn reports_are_reproducible() {
    let args = [
        "twistor-check",
        "--builtin",
        "constcurv:1",
        "--oracle",
        "--samples",
        "6",
        "--seed",
        "3",
        "--json",
    ];
    assert_eq!(stdout(&twistor(&args)), stdout(&twistor(&args)));
}

#[test]
fn twistor_check_with_oracle() {
    let o = twistor(&[
        "twistor-check",
        "--builtin",
        "perturbed-nonsd",
        "--oracle",
        "--samples",
        "8",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("nijenhuis_formula_vs_oracle"));
}

#[test]
fn petean_suite_passes() {
    let o = twistor(&["petean", "--f", "1+x1^2+x2^2", "--samples", "20"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let o = twistor(&["petean", "--f", "2.5", "--samples", "20"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("cr_G3"));
}

#[test]
fn hyperhermitian_from_spec_file() {
    let path = spec_path("conformal.toml");
    let o = twistor(&["hyperhermitian", "--metric", &path, "--samples", "10"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.contains("integrable_all_Jy = true"));
    assert!(out.contains("hyperkahler = false"));
}

#[test]
fn spec_file_with_builtin() {
    let path = spec_path("space-form.toml");
    let o = twistor(&["classify", "--metric", &path, "--t", "1", "--samples", "10"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("almost_kahler_J2 = true"));
}

#[test]
fn parse_errors_exit_2() {
    let o = twistor(&["petean", "--f", "1+x1^"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));

    let dir = std::env::temp_dir().join(format!("twistor-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.toml");
    std::fs::write(&bad, "name = \"x\"\n[chart\n").unwrap();
    let o = twistor(&["curvature", "--metric", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
    std::fs::remove_dir_all(&dir).ok();

    assert_eq!(
        twistor(&["classify", "--builtin", "nowhere", "--t", "1"]).status.code(),
        Some(2)
    );
    assert_eq!(twistor(&["classify", "--builtin", "flat"]).status.code(), Some(2));
    assert_eq!(twistor(&["curvature"]).status.code(), Some(2));
}

#[test]
fn higher_dimension_is_rejected() {
    let o = twistor(&["classify", "--builtin", "flat", "--t", "1", "--dim", "8"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("out of scope"));
}

#[test]
fn verdict_failure_exits_1() {
    let dir = std::env::temp_dir().join(format!("twistor-cli-fail-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("scaled.toml");
    let text = std::fs::read_to_string(spec_path("conformal.toml")).unwrap().replace(
        "J2 = [[\"0\", \"0\", \"1\", \"0\"]",
        "J2 = [[\"0\", \"0\", \"2\", \"0\"]",
    );
    std::fs::write(&path, text).unwrap();
    let o = twistor(&["hyperhermitian", "--metric", path.to_str().unwrap(), "--samples", "5"]);
    std::fs::remove_dir_all(&dir).ok();
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert!(stdout(&o).contains("FAIL triple_algebra"));
}

#[test]
fn selftest_passes() {
    let o = twistor(&["selftest"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let out = stdout(&o);
    assert!(out.contains("c9_deterministic"));
    assert!(!out.contains("FAIL"));
}

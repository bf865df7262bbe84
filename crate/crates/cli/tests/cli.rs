use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name).display().to_string()
}

fn qlevy(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qlevy")).args(args).env_remove("QLEVY_TOL").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(r.headers().unwrap().iter().collect::<Vec<_>>(), ["basis_label", "t", "re", "im", "method", "tail_bound"]);
    r.records().map(|rec| rec.unwrap().iter().map(str::to_owned).collect()).collect()
}

#[test]
fn markov_semigroup_value() {
    let out = qlevy(&["evaluate", &fixture("z2_gns.json"), "--t", "1", "--f", "const0", "--g", "const0", "--a", "L1"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let rows = csv_rows(&stdout(&out));
    assert_eq!(rows.len(), 1);
    let value: f64 = rows[0][2].parse().unwrap();
    assert!((value - (-1.0f64).exp()).abs() < 1e-12);
    assert_eq!(rows[0][4], "semigroup");
    assert_eq!(rows[0][5], "");
}

#[test]
fn validation_names_the_failed_axiom() {
    let out = qlevy(&["validate", &fixture("perturbed_coassoc.json")]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("coassociativity"));
    let report: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["report"]["checks"]["coassociativity"]["passed"], Value::Bool(false));
    assert_eq!(qlevy(&["validate", &fixture("z2_group.json")]).status.code(), Some(0));
}

#[test]
fn invalid_bialgebras_are_input_errors_unless_allowed() {
    let out = qlevy(&["haar", &fixture("perturbed_coassoc.json")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("coassociativity"));
    let lenient = qlevy(&["--allow-invalid", "haar", &fixture("perturbed_coassoc.json")]);
    assert_ne!(lenient.status.code(), Some(2), "{}", stderr(&lenient));
}

#[test]
fn dilation_of_the_z2_tuple() {
    let out = qlevy(&["dilate", &fixture("z2_cpc_tuple.json")]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["kind"], "dilation");
    assert_eq!(v["noise_dim"], 3);
    for name in ["homprecise_i", "homprecise_ii", "homprecise_iii", "homprecise_iv", "homprecise_v"] {
        assert!(v["residuals"][name].as_f64().unwrap() < 1e-12, "{name}");
    }
    // enlarged d̃ = (√3/2, −1/2, 0)
    let d = &v["tuple"]["d_vec"];
    assert!((d[0][0].as_f64().unwrap() - 0.75f64.sqrt()).abs() < 1e-15);
    assert!((d[1][0].as_f64().unwrap() + 0.5).abs() < 1e-15);
    assert_eq!(d[2][0].as_f64().unwrap(), 0.0);
}

#[test]
fn stinespring_on_the_z2_tuple() {
    let out = qlevy(&["stinespring", &fixture("z2_cpc_tuple.json")]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["report"]["passed"], Value::Bool(true));
    assert!(v["contraction_max_eigenvalue"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn weyl_shift_of_the_z2_triple() {
    let out = qlevy(&["perturb", &fixture("z2_gns.json"), "--euclidean", &fixture("weyl_shift.json")]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let gamma = v["triple"]["gamma"][1][0].as_f64().unwrap();
    assert!((gamma - (-1.0 + 2.0 * 2f64.sqrt() - 2.0)).abs() < 1e-12);
    let delta = v["triple"]["delta"][1][0][0].as_f64().unwrap().abs();
    assert!((delta - (2.0 - 2f64.sqrt())).abs() < 1e-12);
}

#[test]
fn table_shapes() {
    // 3 basis elements × 2 times, one route
    let out = qlevy(&["expstar", &fixture("s3_functions_gns.json"), "--t", "0.5,1", "--method", "semigroup"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(csv_rows(&stdout(&out)).len(), 12);
    let both = qlevy(&["evaluate", &fixture("z2_gns.json"), "--t", "0.2,0.6,1", "--method", "both"]);
    assert_eq!(both.status.code(), Some(0), "{}", stderr(&both));
    let rows = csv_rows(&stdout(&both));
    assert_eq!(rows.len(), 2 * 3 * 2);
    assert!(rows.iter().filter(|r| r[4] == "guichardet").all(|r| !r[5].is_empty()));
    // 17 significant digits
    assert!(rows.iter().all(|r| r[2].split('e').next().unwrap().trim_start_matches('-').len() == 18));
}

#[test]
fn opposite_routes_agree_and_cocommutative_case_is_noted() {
    let s3 = fixture("s3_functions_gns.json");
    let f = fixture("s3_two_noise.json");
    let out = qlevy(&["opposite-check", &s3, "--t", "0.4,0.9", "--f", &f, "--g", &f]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(csv_rows(&stdout(&out)).len(), 6 * 2 * 3);
    let z2 = qlevy(&["opposite-check", &fixture("z2_gns.json"), "--t", "1"]);
    assert_eq!(z2.status.code(), Some(0));
    assert!(stderr(&z2).contains("cocommutative"));
}

#[test]
fn tolerance_comes_from_the_environment() {
    let args = ["expstar", &fixture("z2_gns.json"), "--t", "1.5"];
    assert_eq!(qlevy(&args).status.code(), Some(0));
    let strict = Command::new(env!("CARGO_BIN_EXE_qlevy")).args(args).env("QLEVY_TOL", "1e-30").output().unwrap();
    assert_eq!(strict.status.code(), Some(1));
    assert!(stderr(&strict).contains("routes differ"));
    let flag_wins = Command::new(env!("CARGO_BIN_EXE_qlevy"))
        .args(["--tol", "1e-9"])
        .args(args)
        .env("QLEVY_TOL", "1e-30")
        .output()
        .unwrap();
    assert_eq!(flag_wins.status.code(), Some(0));
    let garbage = Command::new(env!("CARGO_BIN_EXE_qlevy")).args(args).env("QLEVY_TOL", "tight").output().unwrap();
    assert_eq!(garbage.status.code(), Some(2));
}

#[test]
fn malformed_inputs_exit_with_status_two() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, text: &str| {
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p.display().to_string()
    };
    let syntax = write("syntax.json", "{\n  \"kind\": \"group_bialgebra\",\n  \"table\": [[0, 1], [1, 0]\n}\n");
    let out = qlevy(&["validate", &syntax]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 4"), "{}", stderr(&out));

    let decreasing = write(
        "steps.json",
        r#"{"kind": "step_function", "breakpoints": [0, 2, 1], "values": [[[1, 0]], [[2, 0]]]}"#,
    );
    let out = qlevy(&["evaluate", &fixture("z2_gns.json"), "--t", "1", "--f", &decreasing]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("breakpoints not strictly increasing"), "{}", stderr(&out));

    let missing = write("missing.json", r#"{"kind": "functional"}"#);
    let out = qlevy(&["reconstruct", &missing]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("values"), "{}", stderr(&out));

    let out = qlevy(&["evaluate", &fixture("z2_gns.json"), "--t", "1", "--a", "L7"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(qlevy(&["evaluate", &fixture("z2_group.json"), "--t", "1"]).status.code(), Some(2));
    assert_eq!(qlevy(&["dilate", &dir.path().join("absent.json").display().to_string()]).status.code(), Some(2));
}

#[test]
fn non_positive_generators_fail_the_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    std::fs::write(
        &p,
        r#"{"kind": "functional", "values": [[0, 0], [1, 0]], "algebra": {"kind": "group_bialgebra", "table": [[0, 1], [1, 0]]}}"#,
    )
    .unwrap();
    let out = qlevy(&["reconstruct", &p.display().to_string()]);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["conditionally_positive"], Value::Bool(false));
}

#[test]
fn multiplicativity_and_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mult.json");
    let out = qlevy(&["check-multiplicative", &fixture("z2_gns.json"), "--n-max", "4", "--out", &path.display().to_string()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["report"]["passed"], Value::Bool(true));
    assert!(v["report"]["checks"]["level_4"]["residual"].as_f64().unwrap() < 1e-10);
}

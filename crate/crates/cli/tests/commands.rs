use std::path::PathBuf;
use std::process::{Command, Output};

use genprob_cli::input::ScenarioFile;
use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn genprob(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_genprob")).args(args).output().expect("binary runs")
}

fn json(args: &[&str]) -> (i32, Value) {
    let mut full = args.to_vec();
    full.push("--machine-readable");
    let out = genprob(&full);
    let text = String::from_utf8(out.stdout).unwrap();
    let value = serde_json::from_str(&text).unwrap_or_else(|e| panic!("{e}: {text}"));
    (out.status.code().unwrap(), value)
}

fn with_file(cmd: &str, name: &str) -> (i32, Value) {
    let path = fixture(name);
    json(&[cmd, "--file", path.to_str().unwrap()])
}

fn row(rows: &Value, label: &str) -> f64 {
    rows.as_array().unwrap().iter().find(|r| r["label"] == label).unwrap()["value"].as_f64().unwrap()
}

#[test]
fn predict_two_thirds() {
    let (code, v) = with_file("predict", "two_thirds.toml");
    assert_eq!(code, 0);
    let p = &v["results"]["probabilities"];
    assert!((row(p, "m0") - 2.0 / 3.0).abs() <= 1e-15);
    assert!((row(p, "m1") - 1.0 / 3.0).abs() <= 1e-15);
    assert_eq!(v["results"]["standard"], false);
    assert!(v["input_digest"].as_str().unwrap().starts_with("sha256:"));
    assert_eq!(v["tolerances"]["positive"], 1e-10);
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(v["command"][1], "predict");
}

#[test]
fn predict_human_output_uses_twelve_digits() {
    let path = fixture("two_thirds.toml");
    let out = genprob(&["predict", "--file", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("0.666666666667"), "{text}");
    assert!(text.contains("0.333333333333"));
    assert!(text.contains("standard: no"));
    assert!(text.contains("sha256:"));
    assert!(text.contains("tolerances: herm=1e-12"));
}

#[test]
fn predict_single_outcome_is_one() {
    let (code, v) = with_file("predict", "single_outcome.toml");
    assert_eq!(code, 0);
    assert_eq!(row(&v["results"]["probabilities"], "only"), 1.0);
}

#[test]
fn predict_povm_gives_born_and_k() {
    let (code, v) = with_file("predict", "born_povm.toml");
    assert_eq!(code, 0);
    assert!((row(&v["results"]["probabilities"], "up") - 0.36).abs() <= 1e-15);
    assert!((row(&v["results"]["probabilities"], "down") - 0.64).abs() <= 1e-15);
    assert_eq!(v["results"]["standard"], true);
    assert!((v["results"]["k"].as_f64().unwrap() - 1.0).abs() <= 1e-15);
}

#[test]
fn predict_reports_posterior_for_ensembles() {
    let (code, v) = with_file("predict", "post_selection.toml");
    assert_eq!(code, 0);
    let post = v["results"]["posterior"].as_array().unwrap();
    // Tr(X|0><0|) = 3/2, Tr(X|+><+|) = 3/2
    assert!((post[0]["posterior"].as_f64().unwrap() - 0.5).abs() <= 1e-12);
}

#[test]
fn retrodict_orthogonal_ensemble_is_certain() {
    let (code, v) = with_file("retrodict", "orthogonal_ensemble.toml");
    assert_eq!(code, 0);
    let r = &v["results"];
    assert_eq!(row(&r["retrodict"], "s0"), 1.0);
    assert_eq!(row(&r["retrodict"], "s1"), 0.0);
    assert!(r["max_discrepancy"].as_f64().unwrap() <= 1e-12);
}

#[test]
fn retrodict_zero_plus() {
    let (code, v) = with_file("retrodict", "zero_plus.toml");
    assert_eq!(code, 0);
    for route in ["retrodict", "via_duality"] {
        assert!((row(&v["results"][route], "s0") - 2.0 / 3.0).abs() <= 1e-12);
        assert!((row(&v["results"][route], "s1") - 1.0 / 3.0).abs() <= 1e-12);
    }
}

#[test]
fn retrodict_identity_outcome_echoes_priors() {
    let (code, v) = with_file("retrodict", "identity_outcome.toml");
    assert_eq!(code, 0);
    for (l, p) in [("a", 0.2), ("b", 0.3), ("c", 0.5)] {
        assert!((row(&v["results"]["retrodict"], l) - p).abs() <= 1e-12);
    }
}

#[test]
fn retrodict_impossible_outcome_is_a_domain_failure() {
    let (code, v) = with_file("retrodict", "incompatible.toml");
    assert_eq!(code, 2);
    assert!(v["error"].as_str().unwrap().contains("impossible"), "{v}");
}

#[test]
fn predict_incompatible_state_is_a_domain_failure() {
    let path = fixture("incompatible.toml");
    let out = genprob(&["predict", "--file", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().starts_with("error:"));
}

#[test]
fn simulate_all_recorded_povm_is_consistent() {
    let (code, v) = with_file("simulate", "povm_all_recorded.toml");
    assert_eq!(code, 0, "{v}");
    assert_eq!(v["results"]["status"], "consistent");
    assert_eq!(v["results"]["simulation"]["accepted_count"], 100000);
    // the trine is already complete: no sink outcome is added
    assert_eq!(v["results"]["full_povm"].as_array().unwrap().len(), 3);
}

#[test]
fn simulate_post_selection_is_consistent() {
    let (code, v) = with_file("simulate", "post_selection.toml");
    assert_eq!(code, 0, "{v}");
    let full = v["results"]["full_povm"].as_array().unwrap();
    assert_eq!(full.last().unwrap(), "⊥");
    let cmp = v["results"]["simulation"]["analytic_comparison"].as_array().unwrap();
    let p0 = cmp.iter().find(|c| c["quantity"] == "p(m0)").unwrap();
    // ρ̄ = (|0><0| + |+><+|)/2: Tr(M0 ρ̄) = 3/4, Tr(X ρ̄) = 3/2
    assert!((p0["analytic"].as_f64().unwrap() - 0.5).abs() <= 1e-12);
}

#[test]
fn simulate_single_recorded_is_exactly_one() {
    let (code, v) = with_file("simulate", "single_recorded.toml");
    assert_eq!(code, 0);
    assert_eq!(v["results"]["simulation"]["outcome_frequencies"][0]["frequency"], 1.0);
}

#[test]
fn simulate_corrupted_target_is_inconsistent() {
    let path = fixture("povm_all_recorded.toml");
    let (code, v) = json(&["simulate", "--file", path.to_str().unwrap(), "--corrupt-analytic", "10"]);
    assert_eq!(code, 3);
    assert_eq!(v["results"]["status"], "inconsistent");
    let first = &v["results"]["simulation"]["analytic_comparison"][0];
    assert!((first["z"].as_f64().unwrap() - 10.0).abs() < 1e-9);
}

#[test]
fn simulate_without_acceptance_is_inconclusive() {
    let (code, v) = with_file("simulate", "never_accepted.toml");
    assert_eq!(code, 4);
    assert_eq!(v["results"]["status"], "inconclusive");
}

#[test]
fn simulate_is_deterministic_and_mode_independent() {
    let path = fixture("post_selection.toml");
    let p = path.to_str().unwrap();
    let a = genprob(&["simulate", "--file", p, "--machine-readable", "--seed", "9", "--samples", "30000"]);
    let b = genprob(&["simulate", "--file", p, "--machine-readable", "--seed", "9", "--samples", "30000", "--sequential"]);
    let (va, vb): (Value, Value) =
        (serde_json::from_slice(&a.stdout).unwrap(), serde_json::from_slice(&b.stdout).unwrap());
    assert_eq!(va["results"], vb["results"]);
    assert_eq!(va["results"]["simulation"]["samples"], 30000);
}

#[test]
fn verify_default_dims_pass() {
    let (code, v) = json(&["verify"]);
    assert_eq!(code, 0, "{v}");
    let checks = v["results"]["battery"]["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 3 * 8);
    assert!(checks.iter().all(|c| c["passed"] == true));
}

#[test]
fn verify_dimension_one_passes() {
    let (code, v) = json(&["verify", "--dims", "1"]);
    assert_eq!(code, 0, "{v}");
}

#[test]
fn verify_reports_injected_non_additive_frame() {
    let (code, v) = json(&["verify", "--dims", "2", "--inject-frame", "trace-squared"]);
    assert_eq!(code, 2);
    let checks = v["results"]["battery"]["checks"].as_array().unwrap();
    let additivity = checks.iter().find(|c| c["property"] == "additivity").unwrap();
    assert_eq!(additivity["passed"], false);
    let replay = additivity["replay"].clone();
    assert_eq!(replay["fixture"], "trace_squared");

    let (code, again) = json(&["verify", "--replay", &replay.to_string()]);
    assert_eq!(code, 2);
    assert_eq!(again["results"]["violation"], additivity["max_violation"]);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(genprob(&[]).status.code(), Some(1));
    assert_eq!(genprob(&["predict"]).status.code(), Some(1));
    assert_eq!(genprob(&["verify", "--dims", "two"]).status.code(), Some(1));
    assert_eq!(genprob(&["verify", "--dims", "0"]).status.code(), Some(1));
    assert_eq!(genprob(&["predict", "--file", "/nonexistent/file.toml"]).status.code(), Some(1));
    let path = fixture("two_thirds.toml");
    let bad = genprob(&["predict", "--file", path.to_str().unwrap(), "--tolerance-overrides", "psd"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(genprob(&["--help"]).status.code(), Some(0));
    let v = genprob(&["--version"]);
    assert_eq!(v.status.code(), Some(0));
    assert!(String::from_utf8(v.stdout).unwrap().contains(env!("CARGO_PKG_VERSION")));
}

#[test]
fn parse_errors_name_line_and_field() {
    let path = fixture("bad_matrix.toml");
    let out = genprob(&["predict", "--file", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("outcomes[0].matrix"), "{err}");
    assert!(err.contains("line 6"), "{err}");
}

#[test]
fn tolerance_overrides_are_reported() {
    let path = fixture("two_thirds.toml");
    let (code, v) = json(&["predict", "--file", path.to_str().unwrap(), "--tolerance-overrides", "psd=1e-8,den=1e-14"]);
    assert_eq!(code, 0);
    assert_eq!(v["tolerances"]["positive"], 1e-8);
    assert_eq!(v["tolerances"]["denominator"], 1e-14);
}

#[test]
fn reports_round_trip_to_the_same_numbers() {
    for name in ["two_thirds.toml", "born_povm.toml", "post_selection.toml", "identity_outcome.toml"] {
        let (_, v) = with_file("predict", name);
        let text = std::fs::read_to_string(fixture(name)).unwrap();
        let f = ScenarioFile::parse(&text).unwrap();
        assert_eq!(v["input_digest"], f.digest);
        let direct = genprob_cli::predict(&f).unwrap();
        for r in &direct.probabilities {
            assert_eq!(row(&v["results"]["probabilities"], &r.label), r.value, "{name}");
        }
        assert_eq!(v["results"]["denominator"].as_f64().unwrap(), direct.denominator);
    }
}

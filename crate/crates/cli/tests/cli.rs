//! End-to-end CLI tests: exit codes, report schema stability (golden
//! files), determinism, and the interchange formats.

use std::path::{Path, PathBuf};
use std::process::Command;

fn qstar() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qstar"))
}

fn tmp_path(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qstar-cli-tests-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn read_json(path: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(path).unwrap_or_else(|e| {
        panic!("cannot read {}: {e}", path.display());
    });
    serde_json::from_str(&text).expect("valid JSON report")
}

/// Structural + numeric comparison with a tolerance, skipping volatile
/// fields (wall clock).
fn assert_json_close(actual: &serde_json::Value, expected: &serde_json::Value, path: &str) {
    use serde_json::Value;
    match (actual, expected) {
        (Value::Object(a), Value::Object(b)) => {
            let keys_a: Vec<&String> = a.keys().collect();
            let keys_b: Vec<&String> = b.keys().collect();
            assert_eq!(keys_a, keys_b, "object keys differ at {path}");
            for (k, vb) in b {
                if k == "wall_clock_seconds" {
                    continue;
                }
                assert_json_close(&a[k], vb, &format!("{path}.{k}"));
            }
        }
        (Value::Array(a), Value::Array(b)) => {
            assert_eq!(a.len(), b.len(), "array length differs at {path}");
            for (i, (va, vb)) in a.iter().zip(b).enumerate() {
                assert_json_close(va, vb, &format!("{path}[{i}]"));
            }
        }
        (Value::Number(a), Value::Number(b)) => {
            let (x, y) = (a.as_f64().unwrap(), b.as_f64().unwrap());
            assert!(
                (x - y).abs() <= 1e-9 * y.abs().max(1.0),
                "number differs at {path}: {x} vs {y}"
            );
        }
        (a, b) => assert_eq!(a, b, "value differs at {path}"),
    }
}

fn golden_check(name: &str, report_path: &Path) {
    let golden_path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name);
    let actual = read_json(report_path);
    if std::env::var("QSTAR_BLESS").is_ok() {
        std::fs::write(&golden_path, serde_json::to_string_pretty(&actual).unwrap()).unwrap();
        return;
    }
    let expected = read_json(&golden_path);
    assert_json_close(&actual, &expected, name);
}

#[test]
fn chsh_report_schema_and_golden() {
    let out = tmp_path("chsh.json");
    let csv = tmp_path("chsh.csv");
    let status = qstar()
        .args([
            "chsh", "--points", "4", "--shots", "1000", "--seed", "7",
            "--out", out.to_str().unwrap(), "--csv", csv.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let report = read_json(&out);
    assert_eq!(report["experiment"], "chsh");
    assert_eq!(report["results"].as_array().unwrap().len(), 4);
    let point = &report["results"][0];
    for key in ["theta", "estimate", "theory", "correlators", "violation"] {
        assert!(point.get(key).is_some(), "missing key {key}");
    }
    let csv_text = std::fs::read_to_string(&csv).unwrap();
    assert!(csv_text.starts_with("theta,estimate,stderr,theory,violation"));
    assert_eq!(csv_text.lines().count(), 5);
    golden_check("chsh.json", &out);
}

#[test]
fn reports_are_deterministic_for_a_fixed_seed() {
    let out_a = tmp_path("det_a.json");
    let out_b = tmp_path("det_b.json");
    for out in [&out_a, &out_b] {
        let status = qstar()
            .args([
                "neutrino", "--points", "5", "--shots", "800", "--seed", "123",
                "--out", out.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success());
    }
    let mut a = read_json(&out_a);
    let mut b = read_json(&out_b);
    a["wall_clock_seconds"] = 0.into();
    b["wall_clock_seconds"] = 0.into();
    assert_eq!(a, b);
}

#[test]
fn unknown_flag_exits_with_code_2() {
    let output = qstar().args(["chsh", "--bogus"]).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("--bogus") || stderr.to_lowercase().contains("usage"));
}

#[test]
fn config_with_unknown_key_exits_with_code_2() {
    let cfg = tmp_path("bad_config.json");
    std::fs::write(&cfg, r#"{"experiment": "chsh", "bogus": 1}"#).unwrap();
    let output = qstar()
        .args(["chsh", "--config", cfg.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn config_experiment_mismatch_exits_with_code_2() {
    let cfg = tmp_path("mismatch.json");
    std::fs::write(&cfg, r#"{"experiment": "vqe"}"#).unwrap();
    let output = qstar()
        .args(["chsh", "--config", cfg.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn config_file_values_are_used_and_flags_override() {
    let cfg = tmp_path("chsh_config.json");
    std::fs::write(
        &cfg,
        r#"{"experiment": "chsh", "seed": 9, "shots": 500, "params": {"points": 3}}"#,
    )
    .unwrap();
    let out = tmp_path("chsh_cfg.json");
    let status = qstar()
        .args([
            "chsh", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let report = read_json(&out);
    assert_eq!(report["seed"], 9);
    assert_eq!(report["shots"], 500);
    assert_eq!(report["results"].as_array().unwrap().len(), 3);

    // A flag overrides the config value.
    let status = qstar()
        .args([
            "chsh", "--config", cfg.to_str().unwrap(), "--shots", "200",
            "--out", out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(read_json(&out)["shots"], 200);
}

#[test]
fn mermin_golden() {
    let out = tmp_path("mermin.json");
    let status = qstar()
        .args([
            "mermin", "--shots", "600", "--seed", "11", "--out", out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let report = read_json(&out);
    assert_eq!(report["results"]["monomials"].as_array().unwrap().len(), 16);
    golden_check("mermin.json", &out);
}

#[test]
fn ghz_golden() {
    let out = tmp_path("ghz.json");
    let status = qstar()
        .args([
            "ghz", "--shots-per-setting", "400", "--seed", "5",
            "--out", out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let report = read_json(&out);
    assert!(report["results"]["entropy"]["s_12"].as_f64().is_some());
    golden_check("ghz.json", &out);
}

#[test]
fn maxcut_golden() {
    let graph = tmp_path("graph.txt");
    std::fs::write(&graph, "1 2\n2 3\n1 3\n3 4\n4 5\n2 6\n").unwrap();
    let out = tmp_path("maxcut.json");
    let status = qstar()
        .args([
            "maxcut", "--graph", graph.to_str().unwrap(), "--shots", "1024",
            "--seed", "3", "--out", out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let report = read_json(&out);
    let brute = report["results"]["brute_force_cut"].as_u64().unwrap();
    assert!(brute >= 4);
    golden_check("maxcut.json", &out);
}

#[test]
fn qscore_small_golden() {
    let out = tmp_path("qscore.json");
    let csv = tmp_path("qscore.csv");
    let status = qstar()
        .args([
            "qscore", "--sizes", "2..3", "--instances", "4", "--shots", "512",
            "--seed", "17", "--out", out.to_str().unwrap(), "--csv", csv.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let report = read_json(&out);
    assert_eq!(report["results"]["entries"].as_array().unwrap().len(), 2);
    golden_check("qscore.json", &out);
}

#[test]
fn neutrino_golden() {
    let out = tmp_path("neutrino.json");
    let csv = tmp_path("neutrino.csv");
    let status = qstar()
        .args([
            "neutrino", "--points", "4", "--shots", "800", "--seed", "23",
            "--out", out.to_str().unwrap(), "--csv", csv.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let csv_text = std::fs::read_to_string(&csv).unwrap();
    assert!(csv_text.starts_with(
        "L_over_E,p_e,p_mu,p_tau,stderr_e,stderr_mu,stderr_tau,theory_e,theory_mu,theory_tau"
    ));
    golden_check("neutrino.json", &out);
}

#[test]
fn jones_golden() {
    let out = tmp_path("jones.json");
    let csv = tmp_path("jones.csv");
    let status = qstar()
        .args([
            "jones", "--knot", "hopf", "--thetas", "3", "--shots", "1500",
            "--seed", "29", "--rem-shots", "2000", "--bootstrap", "100",
            "--out", out.to_str().unwrap(), "--csv", csv.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let report = read_json(&out);
    assert_eq!(report["results"]["writhe"], 2);
    // The default mitigation stack is the full experiment recipe.
    assert_eq!(report["mitigation"]["rc"], 30);
    assert_eq!(report["mitigation"]["zne"], serde_json::json!([1, 3, 5]));
    assert!(report["results"]["points"][0]["rc_zne"].is_object());
    let csv_text = std::fs::read_to_string(&csv).unwrap();
    assert!(csv_text.starts_with("theta,re_raw,re_raw_err,im_raw,im_raw_err,re_rem"));
    golden_check("jones.json", &out);
}

#[test]
fn jones_raw_only_skips_mitigation() {
    let out = tmp_path("jones_raw.json");
    let status = qstar()
        .args([
            "jones", "--knot", "hopf", "--thetas", "2", "--shots", "500",
            "--seed", "29", "--raw-only", "--out", out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let report = read_json(&out);
    assert_eq!(report["mitigation"]["rc"], 0);
    assert!(report["results"]["points"][0]["rc_zne"].is_null());
}

#[test]
fn jones_word_spelling() {
    let out = tmp_path("jones_word.json");
    let status = qstar()
        .args([
            "jones", "--knot", "word=1,1,1", "--thetas", "2", "--shots", "500",
            "--seed", "31", "--out", out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(read_json(&out)["results"]["writhe"], 3);

    let output = qstar().args(["jones", "--knot", "granny"]).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn vqe_exact_golden() {
    let out = tmp_path("vqe.json");
    let csv = tmp_path("vqe.csv");
    let status = qstar()
        .args([
            "vqe", "--exact", "--max-iters", "50", "--seed", "37",
            "--out", out.to_str().unwrap(), "--csv", csv.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let report = read_json(&out);
    let final_energy = report["results"]["final_energy"].as_f64().unwrap();
    let exact = report["results"]["exact_energy"].as_f64().unwrap();
    assert!((final_energy - exact).abs() / exact.abs() < 0.05);
    golden_check("vqe.json", &out);
}

#[test]
fn qutrit_fit_golden() {
    let out = tmp_path("qutrit.json");
    let status = qstar()
        .args([
            "qutrit-fit", "--delays", "20", "--seed", "41", "--out", out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let report = read_json(&out);
    let t10 = report["results"]["inverse_rates_us"][0].as_f64().unwrap();
    assert!((t10 - 44.4).abs() / 44.4 < 0.01);
    golden_check("qutrit.json", &out);
}

#[test]
fn transpile_json_and_qasm_round_trip() {
    // A Bell circuit in the JSON schema.
    let circuit = tmp_path("bell.json");
    std::fs::write(
        &circuit,
        r#"{"num_qubits": 2, "gates": [
            {"kind": "h", "qubits": [0]},
            {"kind": "cnot", "qubits": [0, 1]}
        ]}"#,
    )
    .unwrap();
    let out = tmp_path("transpile.json");
    let qasm_out = tmp_path("native.qasm");
    let status = qstar()
        .args([
            "transpile", "--input", circuit.to_str().unwrap(),
            "--out", out.to_str().unwrap(), "--qasm-out", qasm_out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let report = read_json(&out);
    assert_eq!(report["results"]["cz_count"], 1);
    let qasm = std::fs::read_to_string(&qasm_out).unwrap();
    assert!(qasm.contains("OPENQASM 2.0"));
    assert!(qasm.contains("cz "));

    // The QASM output parses back in.
    let out2 = tmp_path("transpile2.json");
    let status = qstar()
        .args([
            "transpile", "--input", qasm_out.to_str().unwrap(),
            "--out", out2.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    golden_check("transpile.json", &out);
}

#[test]
fn noise_profile_flag_is_honored() {
    let profile = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../profiles/good_calibration.json");
    let out = tmp_path("chsh_noisy.json");
    let status = qstar()
        .args([
            "chsh", "--points", "2", "--shots", "400", "--seed", "3",
            "--profile", profile.to_str().unwrap(), "--out", out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(read_json(&out)["backend"], "good calibration");

    let output = qstar()
        .args(["chsh", "--profile", "/nonexistent.json"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn bundled_profiles_parse_and_match_constructors() {
    use qstar_core::noise::NoiseProfile;
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../profiles");
    let good =
        NoiseProfile::from_json(&std::fs::read_to_string(dir.join("good_calibration.json")).unwrap())
            .unwrap();
    assert_eq!(good, NoiseProfile::good_calibration());
    let degraded = NoiseProfile::from_json(
        &std::fs::read_to_string(dir.join("degraded_calibration.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(degraded, NoiseProfile::degraded_calibration());
    // The degraded set has exactly one hot coupler.
    assert_eq!(degraded.depolarizing_2q_overrides.len(), 1);
}

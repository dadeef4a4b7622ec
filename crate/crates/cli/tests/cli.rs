//! End-to-end tests against the compiled `meltsim` binary.

use std::path::Path;
use std::process::{Command, Output};

fn meltsim(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_meltsim"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, content: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, content).unwrap();
    path.to_string_lossy().into_owned()
}

fn basic_config() -> &'static str {
    r#"
[material]
builtin = "ti6al4v"

[geometry]
a_mm = 0.1
b_mm = 0.05
c_mm = 0.03

[process]
power_w = 150.0
speed_mm_s = 210.0
ambient_c = 20.0

[scan]
track_length_mm = 1.0
"#
}

fn dataset_csv() -> &'static str {
    "material,power_w,speed_mm_s,depth_um,width_um,length_um,source\n\
     Ti-6Al-4V,95,210,53,137,169,cheng2018\n\
     Ti-6Al-4V,150,210,84,181,246,cheng2018\n\
     Ti-6Al-4V,122.5,210,74,162,216,cheng2018\n"
}

#[test]
fn simulate_is_deterministic_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "run.toml", basic_config());
    let first = meltsim(&["simulate", "--config", &config], dir.path());
    let second = meltsim(&["simulate", "--config", &config], dir.path());
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    assert_eq!(first.stdout, second.stdout);
    let text = String::from_utf8(first.stdout).unwrap();
    assert!(text.contains("\"length_mm\""));
    assert!(text.contains("\"peak_t_c\""));
    let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(parsed["material"], "Ti-6Al-4V");
    assert!(parsed["melted"].as_bool().unwrap());
}

#[test]
fn missing_config_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = meltsim(&["simulate", "--config", "absent.toml"], dir.path());
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn invalid_config_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "bad.toml", "this is not a config");
    let out = meltsim(&["simulate", "--config", &config], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn ambient_above_liquidus_is_rejected_before_simulation() {
    let dir = tempfile::tempdir().unwrap();
    let config = basic_config().replace("ambient_c = 20.0", "ambient_c = 2000.0");
    let config = write(dir.path(), "hot.toml", &config);
    let out = meltsim(&["simulate", "--config", &config], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("liquidus"));
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = format!("{}\n[extras]\nfoo = 1\n", basic_config());
    let config = write(dir.path(), "extra.toml", &config);
    let out = meltsim(&["simulate", "--config", &config], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn contour_export_has_schema_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "run.toml", basic_config());
    let out = meltsim(
        &[
            "contour", "--config", &config, "--plane", "top", "--res", "24x16",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("contour_top.csv")).unwrap();
    assert!(csv.lines().any(|l| l.starts_with("# config_sha256: ")));
    assert!(csv.lines().any(|l| l == "x_mm,y_mm,T_c"));
    let rows = csv.lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(rows, 1 + 24 * 16);

    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("contour_top.json")).unwrap())
            .unwrap();
    assert_eq!(json["n1"], 24);
    assert_eq!(json["n2"], 16);
    assert_eq!(json["temperatures_c"].as_array().unwrap().len(), 24 * 16);
}

#[test]
fn contour_hash_changes_with_config() {
    let dir = tempfile::tempdir().unwrap();
    let config_a = write(dir.path(), "a.toml", basic_config());
    let changed = basic_config().replace("power_w = 150.0", "power_w = 140.0");
    let config_b = write(dir.path(), "b.toml", &changed);
    for (config, out_dir) in [(&config_a, "out_a"), (&config_b, "out_b")] {
        let out = meltsim(
            &[
                "contour", "--config", config, "--plane", "side", "--res", "16x12", "--out",
                out_dir,
            ],
            dir.path(),
        );
        assert!(out.status.success());
    }
    let hash = |p: &str| {
        let text = std::fs::read_to_string(dir.path().join(p)).unwrap();
        text.lines()
            .find(|l| l.starts_with("# config_sha256: "))
            .unwrap()
            .to_string()
    };
    assert_ne!(hash("out_a/contour_side.csv"), hash("out_b/contour_side.csv"));
}

#[test]
fn side_view_header_uses_z() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "run.toml", basic_config());
    let out = meltsim(
        &[
            "contour", "--config", &config, "--plane", "side", "--res", "16x12",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("contour_side.csv")).unwrap();
    assert!(csv.lines().any(|l| l == "x_mm,z_mm,T_c"));
}

#[test]
fn sweep_rows_are_independent_of_the_spec_subset() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "run.toml", basic_config());
    let full = write(
        dir.path(),
        "full.toml",
        "powers_w = [95.0, 150.0]\nspeeds_mm_s = [210.0]\ngeometries_mm = [[0.1, 0.05, 0.03]]\n",
    );
    let sub = write(
        dir.path(),
        "sub.toml",
        "powers_w = [150.0]\nspeeds_mm_s = [210.0]\ngeometries_mm = [[0.1, 0.05, 0.03]]\n",
    );
    let full_out = meltsim(&["sweep", "--config", &config, "--spec", &full], dir.path());
    let sub_out = meltsim(&["sweep", "--config", &config, "--spec", &sub], dir.path());
    assert!(full_out.status.success());
    assert!(sub_out.status.success());
    let full_text = String::from_utf8(full_out.stdout).unwrap();
    let sub_text = String::from_utf8(sub_out.stdout).unwrap();
    let row = sub_text.lines().nth(1).unwrap();
    assert!(row.starts_with("0.1,0.05,0.03,150,210,"));
    assert!(full_text.lines().any(|l| l == row));
}

#[test]
fn sweep_labels_cold_rows_no_melt() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "run.toml", basic_config());
    let spec = write(
        dir.path(),
        "spec.toml",
        "powers_w = [1.0]\nspeeds_mm_s = [210.0]\ngeometries_mm = [[0.1, 0.05, 0.03]]\n",
    );
    let out = meltsim(&["sweep", "--config", &config, "--spec", &spec], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().nth(1).unwrap().ends_with("no-melt"));
}

#[test]
fn empty_sweep_spec_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "run.toml", basic_config());
    let spec = write(
        dir.path(),
        "spec.toml",
        "powers_w = []\nspeeds_mm_s = [210.0]\ngeometries_mm = [[0.1, 0.05, 0.03]]\n",
    );
    let out = meltsim(&["sweep", "--config", &config, "--spec", &spec], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn validate_writes_report_with_mape_fields() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "run.toml", basic_config());
    let data = write(dir.path(), "data.csv", dataset_csv());
    let out = meltsim(&["validate", "--config", &config, "--data", &data], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("MAPE"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("validation.json")).unwrap())
            .unwrap();
    assert!(report["mape_length"].as_f64().unwrap() >= 0.0);
    assert_eq!(report["record_count"], 3);
}

#[test]
fn validate_missing_dataset_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "run.toml", basic_config());
    let out = meltsim(
        &["validate", "--config", &config, "--data", "absent.csv"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(4));
    assert!(!dir.path().join("validation.json").exists());
}

#[test]
fn calibrate_smoke_on_tiny_budget() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "run.toml", basic_config());
    let data = write(dir.path(), "data.csv", dataset_csv());
    let bounds = write(
        dir.path(),
        "bounds.toml",
        "lower_mm = [0.08, 0.04, 0.02]\nupper_mm = [0.12, 0.06, 0.04]\nmax_iterations = 3\n",
    );
    let out = meltsim(
        &[
            "calibrate", "--config", &config, "--data", &data, "--bounds", &bounds,
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("calibration.json")).unwrap(),
    )
    .unwrap();
    let fitted = report["fitted_geometry_mm"].as_array().unwrap();
    assert_eq!(fitted.len(), 3);
    for (value, (lo, hi)) in fitted.iter().zip([(0.08, 0.12), (0.04, 0.06), (0.02, 0.04)]) {
        let v = value.as_f64().unwrap();
        assert!(v >= lo && v <= hi);
    }
}

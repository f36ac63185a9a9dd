//! End-to-end tests of the binary: exit codes, file layout, determinism,
//! and the verification suites' pass/fail behavior.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_moment-lab"))
}

/// Fresh per-test directory under the target tmpdir.
fn workdir(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    if dir.exists() {
        fs::remove_dir_all(&dir).unwrap();
    }
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, text).unwrap();
    path
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn two_engine_config(out_dir: &Path) -> String {
    format!(
        r#"{{
            "potential": {{"profile": {{"type": "sinusoidal", "omega0": 1.0, "epsilon": 0.3, "big_omega": 2.0}}}},
            "initial": {{"type": "gaussian", "q": 1.0, "p": 0.5, "alpha": 0.5, "beta": 0.0}},
            "run": {{"t0": 0.0, "t1": 2.0, "dt": 0.001, "n_max": 3, "sample_stride": 200}},
            "engines": ["hierarchy", "closed_form"],
            "output": {{"directory": {:?}, "formats": ["csv", "json"]}}
        }}"#,
        out_dir.to_str().unwrap()
    )
}

#[test]
fn run_writes_series_comparison_and_summary() {
    let dir = workdir("run_basic");
    let out = dir.join("out");
    let cfg = write_config(&dir, &two_engine_config(&out));

    let result = bin().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(result.status.code(), Some(0), "{}", stderr_of(&result));

    let csv = fs::read_to_string(out.join("hierarchy.csv")).unwrap();
    assert!(csv.starts_with("# engine: hierarchy\n"));
    let header = csv.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(
        header,
        "t,O0_0,O1_0,O1_1,O2_0,O2_1,O2_2,O3_0,O3_1,O3_2,O3_3,C,Delta,C2"
    );

    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let comparisons = summary["comparisons"].as_array().unwrap();
    assert_eq!(comparisons.len(), 1);
    assert_eq!(comparisons[0]["a"], "hierarchy");
    assert_eq!(comparisons[0]["b"], "closed_form");
    assert!(comparisons[0]["overall"].as_f64().unwrap() < 1e-7);

    let engine_json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("closed_form.json")).unwrap()).unwrap();
    let times = engine_json["times"].as_array().unwrap();
    assert_eq!(times.len(), 11);
    assert_eq!(engine_json["layers"]["3"].as_array().unwrap().len(), 11);
    assert_eq!(engine_json["invariants"]["C"].as_array().unwrap().len(), 11);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = workdir("run_determinism");
    let (out_a, out_b) = (dir.join("a"), dir.join("b"));
    let cfg = write_config(&dir, &two_engine_config(&dir.join("unused")));

    for out in [&out_a, &out_b] {
        let result = bin().arg("run").arg(&cfg).arg("--out").arg(out).output().unwrap();
        assert_eq!(result.status.code(), Some(0), "{}", stderr_of(&result));
    }
    for name in ["hierarchy.csv", "closed_form.csv", "hierarchy.json", "summary.json"] {
        let a = fs::read(out_a.join(name)).unwrap();
        let b = fs::read(out_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

#[test]
fn out_flag_beats_config_and_env() {
    let dir = workdir("run_out_precedence");
    let cfg = write_config(&dir, &two_engine_config(&dir.join("from_config")));

    let flag_dir = dir.join("from_flag");
    let result = bin()
        .arg("run")
        .arg(&cfg)
        .arg("--out")
        .arg(&flag_dir)
        .env("MOMENT_LAB_OUT", dir.join("from_env"))
        .output()
        .unwrap();
    assert_eq!(result.status.code(), Some(0), "{}", stderr_of(&result));
    assert!(flag_dir.join("summary.json").exists());
    assert!(!dir.join("from_config").exists());
    assert!(!dir.join("from_env").exists());
}

#[test]
fn env_var_supplies_output_directory() {
    let dir = workdir("run_env_out");
    let cfg = write_config(
        &dir,
        r#"{
            "potential": {"profile": {"type": "constant", "omega0": 1.0}},
            "initial": {"type": "moments", "layers": [{"n": 2, "values": [1.0, 0.3, 0.9]}]},
            "run": {"t0": 0.0, "t1": 1.0, "dt": 0.001, "n_max": 2, "sample_stride": 500},
            "engines": ["hierarchy", "closed_form"]
        }"#,
    );
    let env_dir = dir.join("from_env");
    let result = bin()
        .arg("run")
        .arg(&cfg)
        .env("MOMENT_LAB_OUT", &env_dir)
        .current_dir(&dir)
        .output()
        .unwrap();
    assert_eq!(result.status.code(), Some(0), "{}", stderr_of(&result));
    assert!(env_dir.join("hierarchy.csv").exists());

    // Moment-seeded runs track no first-degree layer, so Delta is absent.
    let csv = fs::read_to_string(env_dir.join("hierarchy.csv")).unwrap();
    let header = csv.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "t,O2_0,O2_1,O2_2,C,C2");
}

#[test]
fn single_engine_run_has_no_comparison() {
    let dir = workdir("run_single");
    let out = dir.join("out");
    let cfg = write_config(
        &dir,
        &format!(
            r#"{{
                "potential": {{"profile": {{"type": "constant", "omega0": 1.0}}}},
                "initial": {{"type": "gaussian", "q": 0.0, "p": 0.0, "alpha": 0.8, "beta": 0.1}},
                "run": {{"t0": 0.0, "t1": 0.5, "dt": 0.0005, "n_max": 2, "sample_stride": 250}},
                "engines": ["pde"],
                "grid": {{"x_min": -12.0, "x_max": 12.0, "n": 256}},
                "output": {{"directory": {:?}}}
            }}"#,
            out.to_str().unwrap()
        ),
    );
    let result = bin().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(result.status.code(), Some(0), "{}", stderr_of(&result));
    assert!(out.join("pde.csv").exists());
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["comparisons"].as_array().unwrap().len(), 0);
}

#[test]
fn zero_dt_is_a_validation_error() {
    let dir = workdir("run_bad_dt");
    let cfg = write_config(
        &dir,
        r#"{
            "potential": {"profile": {"type": "constant", "omega0": 1.0}},
            "initial": {"type": "gaussian", "q": 0.0, "p": 0.0, "alpha": 0.7, "beta": 0.0},
            "run": {"t0": 0.0, "t1": 1.0, "dt": 0.0, "n_max": 2},
            "engines": ["hierarchy"]
        }"#,
    );
    let result = bin().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(result.status.code(), Some(2));
    assert!(
        stderr_of(&result).contains("run.dt must be positive"),
        "stderr: {}",
        stderr_of(&result)
    );
}

#[test]
fn inverted_regime_is_gated_by_flag() {
    let dir = workdir("run_inverted");
    let cfg = write_config(
        &dir,
        &format!(
            r#"{{
                "potential": {{"profile": {{"type": "sinusoidal", "omega0": 1.0, "epsilon": 1.2, "big_omega": 2.0}}}},
                "initial": {{"type": "gaussian", "q": 0.2, "p": 0.0, "alpha": 0.7, "beta": 0.0}},
                "run": {{"t0": 0.0, "t1": 1.0, "dt": 0.001, "n_max": 2, "sample_stride": 500}},
                "engines": ["hierarchy"],
                "output": {{"directory": {:?}}}
            }}"#,
            dir.join("out").to_str().unwrap()
        ),
    );
    let refused = bin().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(refused.status.code(), Some(2), "{}", stderr_of(&refused));

    let allowed = bin().arg("run").arg(&cfg).arg("--allow-inverted").output().unwrap();
    assert_eq!(allowed.status.code(), Some(0), "{}", stderr_of(&allowed));
}

#[test]
fn width_collapse_trips_the_guard_exit_code() {
    let dir = workdir("run_collapse");
    let cfg = write_config(
        &dir,
        r#"{
            "potential": {"profile": {"type": "constant", "omega0": 1.0}},
            "initial": {"type": "gaussian", "q": 0.0, "p": 0.0, "alpha": 1.0, "beta": -1000000.0},
            "run": {"t0": 0.0, "t1": 1.0, "dt": 0.01, "n_max": 2},
            "engines": ["gaussian"]
        }"#,
    );
    let result = bin().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(result.status.code(), Some(3), "{}", stderr_of(&result));
    assert!(
        stderr_of(&result).contains("gaussian_effective"),
        "guard message should name the module: {}",
        stderr_of(&result)
    );
}

#[test]
fn sweep_writes_member_directories_and_summary() {
    let dir = workdir("sweep_basic");
    let out = dir.join("out");
    let cfg = write_config(
        &dir,
        r#"{
            "potential": {"profile": {"type": "sinusoidal", "omega0": 1.0, "epsilon": 0.1, "big_omega": 2.0}},
            "initial": {"type": "gaussian", "q": 1.0, "p": 0.0, "alpha": 0.5, "beta": 0.0},
            "run": {"t0": 0.0, "t1": 1.0, "dt": 0.001, "n_max": 2, "sample_stride": 500},
            "engines": ["hierarchy", "gaussian"]
        }"#,
    );
    let result = bin()
        .arg("sweep")
        .arg(&cfg)
        .arg("--param")
        .arg("potential.profile.epsilon")
        .arg("--values")
        .arg("0.1,0.4")
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(result.status.code(), Some(0), "{}", stderr_of(&result));

    for value in ["0.1", "0.4"] {
        let member = out.join(format!("potential.profile.epsilon={value}"));
        assert!(member.join("hierarchy.csv").exists());
        assert!(member.join("summary.json").exists());
    }
    let summary = fs::read_to_string(out.join("sweep_summary.csv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines[0], "param,value,engine,samples,final_t,C2_final,vs_first_overall");
    assert_eq!(lines.len(), 5, "one row per (value, engine): {summary}");
}

#[test]
fn sweep_with_bad_path_fails_before_running() {
    let dir = workdir("sweep_bad_path");
    let cfg = write_config(
        &dir,
        r#"{
            "potential": {"profile": {"type": "constant", "omega0": 1.0}},
            "initial": {"type": "gaussian", "q": 0.0, "p": 0.0, "alpha": 0.7, "beta": 0.0},
            "run": {"t0": 0.0, "t1": 1.0, "dt": 0.001, "n_max": 2},
            "engines": ["hierarchy"]
        }"#,
    );
    let result = bin()
        .arg("sweep")
        .arg(&cfg)
        .arg("--param")
        .arg("potential.profile.no_such_knob")
        .arg("--values")
        .arg("1,2")
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap();
    assert_eq!(result.status.code(), Some(2), "{}", stderr_of(&result));
}

#[test]
fn verify_algebra_suite_passes() {
    let result = bin().arg("verify").arg("algebra").output().unwrap();
    assert_eq!(result.status.code(), Some(0), "{}", stderr_of(&result));
    let stdout = String::from_utf8_lossy(&result.stdout);
    assert!(stdout.contains("PASS algebra/ladder-relations"), "{stdout}");
    assert!(!stdout.contains("FAIL"), "{stdout}");
}

#[test]
fn verify_oracle_rejects_a_coarse_grid() {
    let result = bin()
        .arg("verify")
        .arg("oracle")
        .arg("--grid-n")
        .arg("64")
        .output()
        .unwrap();
    assert_eq!(result.status.code(), Some(1), "{}", stderr_of(&result));
    let stdout = String::from_utf8_lossy(&result.stdout);
    assert!(stdout.contains("FAIL oracle/"), "{stdout}");
}

#[test]
fn unknown_suite_is_a_usage_error() {
    let result = bin().arg("verify").arg("no-such-suite").output().unwrap();
    assert_eq!(result.status.code(), Some(2));
}

//! End-to-end checks of the installed binary: exit codes, artifact sets,
//! JSON output and determinism.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn turbkeps(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_turbkeps"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON: {e}\n{}",
            String::from_utf8_lossy(&out.stdout)
        )
    })
}

const DECAY_ORACLE: &str = "\
[model]
t_final = 0.25
[domain]
resolution = 8
[truncation]
level = 4
velocity_modes = 2
scalar_modes = 3
[integrator]
rel_tol = 1e-8
abs_tol = 1e-10
[output]
sample_count = 3
geometric_samples = false
[initial]
velocity = { coefficients = [0.5] }
tke = 0.5
";

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn run_produces_the_artifact_set_and_a_small_energy_residual() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", DECAY_ORACLE);
    let out_dir = dir.path().join("out");
    let out = turbkeps(&["run", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    for f in ["trajectory.tkef", "diagnostics.csv", "audit.json", "audit.csv"] {
        assert!(out_dir.join(f).is_file(), "missing {f}");
    }
    let audit: Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("audit.json")).unwrap())
            .unwrap();
    let residual = audit["records"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["name"] == "energy_identity_residual")
        .expect("residual record present");
    assert!(residual["lhs"].as_f64().unwrap() < 1e-6);
    assert_eq!(residual["verdict"], "holds");
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", DECAY_ORACLE);
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    assert_eq!(
        code(&turbkeps(&["run", "--config", &cfg, "--out", out_a.to_str().unwrap()])),
        0
    );
    assert_eq!(
        code(&turbkeps(&["run", "--config", &cfg, "--out", out_b.to_str().unwrap()])),
        0
    );
    for f in ["trajectory.tkef", "audit.json", "diagnostics.csv"] {
        assert_eq!(
            std::fs::read(out_a.join(f)).unwrap(),
            std::fs::read(out_b.join(f)).unwrap(),
            "{f} differs between reruns"
        );
    }
}

#[test]
fn json_flag_emits_valid_json_on_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", DECAY_ORACLE);
    let out_dir = dir.path().join("out");
    let out = turbkeps(&[
        "run",
        "--config",
        &cfg,
        "--out",
        out_dir.to_str().unwrap(),
        "--json",
    ]);
    assert_eq!(code(&out), 0);
    let doc = stdout_json(&out);
    assert!(doc["audit"]["records"].as_array().unwrap().len() > 10);
    assert!(doc["files"]["trajectory"].as_str().unwrap().ends_with("trajectory.tkef"));
}

#[test]
fn inadmissible_config_is_rejected_naming_the_condition() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.toml",
        "[model]\ndimension = 3\neta = 2.0\nzeta = 0.0\n",
    );
    let out_dir = dir.path().join("out");
    let out = turbkeps(&["run", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("Cond1"), "{err}");
    assert!(err.contains("1.666666666666666"), "{err}");
}

#[test]
fn override_flag_accepts_the_same_config_with_a_warning() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.toml",
        "[model]\ndimension = 3\neta = 2.0\nzeta = 0.0\nt_final = 0.05\n\
         [domain]\nresolution = 8\n[truncation]\nlevel = 4\nvelocity_modes = 2\nscalar_modes = 3\n\
         [output]\nsample_count = 2\ngeometric_samples = false\n[initial]\ntke = 0.25\n",
    );
    let out_dir = dir.path().join("out");
    let out = turbkeps(&["run", "--config", &cfg, "--out", out_dir.to_str().unwrap(), "--override-admissibility"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("warning") && err.contains("Cond1"), "{err}");
}

#[test]
fn unknown_keys_are_syntax_errors_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "typo.toml", "[model]\nalpa = 2.0\n");
    let out = turbkeps(&["run", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("alpa"), "{err}");
    assert!(err.contains("line 2") || err.contains("2:"), "{err}");
}

#[test]
fn unwritable_out_dir_exits_2_without_partial_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", DECAY_ORACLE);
    let blocker = dir.path().join("blocker");
    std::fs::write(&blocker, b"not a directory").unwrap();
    let out_dir = blocker.join("out");
    let out = turbkeps(&["run", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(!out_dir.exists());
}

#[test]
fn sweep_with_a_divergent_level_exits_3_and_marks_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "sweep.toml",
        &format!("{DECAY_ORACLE}[sweep]\naxis = \"scalar-modes\"\nlevels = [2, 3, 100000]\n"),
    );
    let out_dir = dir.path().join("out");
    let out = turbkeps(&[
        "sweep",
        "--config",
        &cfg,
        "--out",
        out_dir.to_str().unwrap(),
        "--jobs",
        "2",
        "--json",
    ]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    let doc = stdout_json(&out);
    assert_eq!(doc["uniformity"]["failures"][0]["level"], 100000);
    assert!(out_dir.join("uniformity.json").is_file());
    assert!(out_dir.join("level-2/trajectory.tkef").is_file());
}

#[test]
fn exponents_reports_exact_fractions_and_floats() {
    let out = turbkeps(&[
        "exponents", "--d", "3", "--alpha", "2", "--beta", "1", "--gamma", "3/10", "--eta", "0",
        "--zeta", "0", "--theta", "0", "--json",
    ]);
    assert_eq!(code(&out), 0);
    let doc = stdout_json(&out);
    assert_eq!(doc["exact"]["exponents"]["r_u"], "10/3");
    assert_eq!(doc["exact"]["exponents"]["rho0"], "10/9");
    assert_eq!(doc["admissibility"]["admissible"], true);
    assert!((doc["exponents"]["r_u"].as_f64().unwrap() - 10.0 / 3.0).abs() < 1e-15);

    let out = turbkeps(&["exponents", "--d", "2", "--alpha", "3", "--json"]);
    assert_eq!(stdout_json(&out)["exact"]["exponents"]["r_u"], "4");

    let bad = turbkeps(&["exponents", "--alpha", "two"]);
    assert_eq!(code(&bad), 1);
}

#[test]
fn audit_replays_a_dump() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", DECAY_ORACLE);
    let out_dir = dir.path().join("out");
    assert_eq!(
        code(&turbkeps(&["run", "--config", &cfg, "--out", out_dir.to_str().unwrap()])),
        0
    );
    let replay_dir = dir.path().join("replay");
    let out = turbkeps(&[
        "audit",
        "--config",
        &cfg,
        "--trajectory",
        out_dir.join("trajectory.tkef").to_str().unwrap(),
        "--out",
        replay_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(replay_dir.join("audit.json").is_file());

    let missing = turbkeps(&[
        "audit",
        "--config",
        &cfg,
        "--trajectory",
        dir.path().join("nope.tkef").to_str().unwrap(),
        "--out",
        replay_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&missing), 2);
}

#[test]
fn log_env_var_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", DECAY_ORACLE);
    let out_dir = dir.path().join("out");
    let out = Command::new(env!("CARGO_BIN_EXE_turbkeps"))
        .args(["run", "--config", &cfg, "--out", out_dir.to_str().unwrap()])
        .env("TURBKEPS_LOG", "info")
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("running"), "{err}");
}

#[test]
fn missing_subcommand_or_flags_exit_1() {
    assert_eq!(code(&turbkeps(&[])), 1);
    assert_eq!(code(&turbkeps(&["run"])), 1);
    assert_eq!(code(&turbkeps(&["--help"])), 0);
}

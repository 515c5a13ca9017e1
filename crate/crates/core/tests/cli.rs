use std::path::Path;
use std::process::Command;

const SMALL: &str = "\
grid.cells = 64
grid.half_width = 4
solver.horizon = 0.1
solver.snapshots = 2
ensemble.paths = 4
check.boundary_paths = 2
check.contraction_cells = 32,64
check.contraction_paths = 2,4
check.viscosity_cells = 32,64,128
check.jump_u_points = 21
check.jump_z_points = 5
";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_levy-renorm"))
}

fn write_config(dir: &Path, extra: &str) -> std::path::PathBuf {
    let p = dir.join("run.cfg");
    std::fs::write(&p, format!("{SMALL}{extra}")).unwrap();
    p
}

#[test]
fn simulate_writes_manifest_and_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let out = dir.path().join("out");
    let st = bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .args(["--seed", "9", "--workers", "2", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(st.status.success());
    for f in ["manifest.json", "stats.csv", "energy.csv", "bands.csv", "config.cfg"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["base_seed"], 9);
    assert_eq!(m["paths"].as_array().unwrap().len(), 4);
}

#[test]
fn env_override_applies() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let out = dir.path().join("out");
    let st = bin()
        .env("LEVY_RENORM_ENSEMBLE_PATHS", "2")
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(st.status.success());
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["paths"].as_array().unwrap().len(), 2);
}

#[test]
fn recipe_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let out = dir.path().join("out");
    let o = bin().args(["recipe", "jump-sign", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("verdicts/jump-sign.json")).unwrap()).unwrap();
    let recs = v.as_array().unwrap();
    assert!(recs.iter().all(|r| r["verdict"] == "PASS"));
    for k in ["check", "parameters", "mean", "se", "budget", "verdict"] {
        assert!(recs[0].get(k).is_some(), "verdict field {k}");
    }
    let o = bin().args(["report", "--out"]).arg(&out).output().unwrap();
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("jump-sign-negative-control"));
}

#[test]
fn failing_validation_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "problem.eta = decreasing\n");
    let out = dir.path().join("out");
    let o = bin().args(["validate", "--probes", "200", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL A6"));
    assert!(out.join("validate.json").is_file());
}

#[test]
fn errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let out = dir.path().join("out");
    let o = bin().args(["recipe", "no-such-recipe", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "grid.cells = many\n").unwrap();
    let o = bin().args(["simulate", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));
}

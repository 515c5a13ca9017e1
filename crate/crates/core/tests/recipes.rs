use levy_renorm::harness::{read_verdicts, run_recipe, ExperimentConfig};

fn small() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.grid.cells = 64;
    cfg.solver.horizon = 0.1;
    cfg.solver.snapshots = 4;
    cfg.ensemble.paths = 8;
    cfg.check.boundary_paths = 4;
    cfg.check.contraction_cells = vec![32, 64];
    cfg.check.contraction_paths = vec![4, 8];
    cfg
}

#[test]
fn l1_bound_is_exact_without_dynamics() {
    let mut cfg = small();
    for (k, v) in [
        ("problem.flux", "zero"),
        ("problem.diffusion", "zero"),
        ("problem.sigma", "zero"),
        ("problem.eta", "zero"),
        ("solver.eps", "0"),
    ] {
        cfg.set(k, v).unwrap();
    }
    let dir = tempfile::tempdir().unwrap();
    let r = run_recipe("l1-bound", &cfg, dir.path()).unwrap();
    assert!(r[0].passed());
    let csv = std::fs::read_to_string(dir.path().join("tables/l1-bound.csv")).unwrap();
    let l1: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(l1.iter().all(|&x| x == l1[0]), "{l1:?}");
}

#[test]
fn dissipation_reaches_zero_past_the_data() {
    let cfg = small();
    let dir = tempfile::tempdir().unwrap();
    let recs = run_recipe("dissipation", &cfg, dir.path()).unwrap();
    assert!(recs.iter().all(|r| r.passed()), "{recs:?}");
}

#[test]
fn gronwall_schedules_contraction() {
    let cfg = small();
    let dir = tempfile::tempdir().unwrap();
    let recs = run_recipe("gronwall", &cfg, dir.path()).unwrap();
    assert_eq!(recs.len(), 1);
    assert!(dir.path().join("tables/contraction_constant.json").is_file());
    assert!(dir.path().join("verdicts/contraction.json").is_file());
    let all = read_verdicts(dir.path()).unwrap();
    assert!(all.iter().any(|r| r.check == "contraction-deterministic" && r.passed()));
}

#[test]
fn unknown_recipe_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_recipe("nope", &small(), dir.path()).is_err());
}

#[test]
fn shipped_configs_parse() {
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["default.cfg", "entropy-residual.cfg", "cauchy.cfg", "viscosity.cfg", "smoke-2d.cfg"] {
        ExperimentConfig::load(&root.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
    assert_eq!(ExperimentConfig::load(&root.join("default.cfg")).unwrap(), ExperimentConfig::default());
}

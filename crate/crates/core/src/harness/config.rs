//! Flat `key = value` experiment configuration with dotted section keys.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Number, Value};

use crate::error::{Error, Result};
use crate::model::ProblemConfig;
use crate::solver::{Grid, SolveOptions};

/// Environment variables `LEVY_RENORM_<KEY>` override keys, with the key
/// upper-cased and `.`/`-` replaced by `_` (e.g. `LEVY_RENORM_SOLVER_EPS`).
pub const ENV_PREFIX: &str = "LEVY_RENORM_";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub cells: usize,
    pub half_width: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub eps: f64,
    pub horizon: f64,
    pub dt_max: Option<f64>,
    pub min_steps: usize,
    /// Stored times are k·T/snapshots, k = 0..=snapshots.
    pub snapshots: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub paths: usize,
    pub seed: u64,
    pub workers: usize,
    /// Number of leading paths whose snapshots are written to disk.
    pub save_paths: usize,
}

/// Check parameters. Levels, widths and truncation levels marked "factor"
/// are multiples of ‖u₀‖∞.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckConfig {
    pub l1_slack: f64,
    /// factor
    pub energy_levels: Vec<f64>,
    pub energy_slack: f64,
    /// factor
    pub dissipation_levels: Vec<f64>,
    /// factor
    pub widths: Vec<f64>,
    pub dissipation_ratio: f64,
    /// Leading paths that also stream the boundary-layer terms E₂, E₃
    /// (0 disables them).
    pub boundary_paths: usize,
    /// Defect-measure constant K; `none` uses sup|β′| of the entropy.
    pub bound: Option<f64>,
    pub kruzkov_count: usize,
    pub xi: f64,
    /// Frozen constant of the discretization budget C_bud·(Δx + √dt).
    pub c_bud: f64,
    /// Truncation level as a multiple of sup|u| over the study.
    pub residual_level: f64,
    /// Band width, same units.
    pub residual_width: f64,
    pub psi_radius: f64,
    pub psi_lo: f64,
    pub psi_hi: f64,
    pub psi_count: usize,
    pub contraction_cells: Vec<usize>,
    pub contraction_paths: Vec<usize>,
    pub contraction_scale: f64,
    pub contraction_stability: f64,
    pub cauchy_levels: Vec<f64>,
    pub viscosity_eps: Vec<f64>,
    pub viscosity_cells: Vec<usize>,
    pub viscosity_samples: usize,
    /// factor
    pub gronwall_level: f64,
    pub gronwall_m: f64,
    pub gronwall_theta: f64,
    pub gronwall_samples: usize,
    pub jump_levels: Vec<f64>,
    pub jump_u_points: usize,
    pub jump_z_points: usize,
    pub jump_xi: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputConfig {
    pub dir: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    pub grid: GridConfig,
    pub solver: SolverConfig,
    pub ensemble: EnsembleConfig,
    pub check: CheckConfig,
    pub output: OutputConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problem: ProblemConfig::default(),
            grid: GridConfig {
                cells: 512,
                half_width: 4.0,
            },
            solver: SolverConfig {
                eps: 0.05,
                horizon: 0.5,
                dt_max: None,
                min_steps: 64,
                snapshots: 10,
            },
            ensemble: EnsembleConfig {
                paths: 256,
                seed: 20_251_016,
                workers: 1,
                save_paths: 1,
            },
            check: CheckConfig {
                l1_slack: 0.02,
                energy_levels: vec![0.5, 1.0, 2.0],
                energy_slack: 0.05,
                dissipation_levels: vec![0.5, 0.75, 1.0, 1.25, 1.5, 2.0, 2.5, 3.0, 4.0],
                widths: vec![0.2, 0.1, 0.05],
                dissipation_ratio: 1e-3,
                boundary_paths: 32,
                bound: None,
                kruzkov_count: 17,
                xi: 0.05,
                c_bud: 0.15,
                residual_level: 2.0,
                residual_width: 0.5,
                psi_radius: 0.4,
                psi_lo: -1.4,
                psi_hi: 0.8,
                psi_count: 12,
                contraction_cells: vec![256, 512],
                contraction_paths: vec![128, 256],
                contraction_scale: 0.5,
                contraction_stability: 0.1,
                cauchy_levels: vec![1.0, 2.0, 4.0, 8.0],
                viscosity_eps: vec![0.2, 0.1, 0.05],
                viscosity_cells: vec![256, 512, 1024],
                viscosity_samples: 16,
                gronwall_level: 0.5,
                gronwall_m: 1.0,
                gronwall_theta: 0.5,
                gronwall_samples: 10,
                jump_levels: vec![0.25, 0.5, 1.0, 2.0],
                jump_u_points: 101,
                jump_z_points: 25,
                jump_xi: vec![0.01, 0.05, 0.5],
            },
            output: OutputConfig { dir: "out".into() },
        }
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, Value)>) {
    match v {
        Value::Object(m) => {
            for (k, child) in m {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, child, out);
            }
        }
        other => out.push((prefix.to_string(), other.clone())),
    }
}

fn render(v: &Value) -> String {
    match v {
        Value::Null => "none".into(),
        Value::String(s) => s.clone(),
        Value::Array(xs) => xs.iter().map(render).collect::<Vec<_>>().join(","),
        other => other.to_string(),
    }
}

fn parse_number(text: &str, like: &Value) -> std::result::Result<Value, String> {
    let integer = matches!(like, Value::Number(n) if !n.is_f64());
    if integer {
        text.parse::<u64>().map(Value::from).map_err(|e| format!("expected an integer: {e}"))
    } else {
        let x: f64 = text.parse().map_err(|e| format!("expected a number: {e}"))?;
        Number::from_f64(x).map(Value::Number).ok_or_else(|| "number must be finite".into())
    }
}

/// Parses `text` with the type of the default value `like`.
fn parse_value(text: &str, like: &Value) -> std::result::Result<Value, String> {
    match like {
        Value::String(_) => Ok(Value::String(text.to_string())),
        Value::Bool(_) => text.parse::<bool>().map(Value::Bool).map_err(|e| e.to_string()),
        Value::Null => {
            if text == "none" {
                Ok(Value::Null)
            } else {
                parse_number(text, &Value::from(0.5))
            }
        }
        Value::Array(xs) => {
            let elem = xs.first().cloned().unwrap_or(Value::from(0.5));
            text.split(',')
                .map(|t| parse_number(t.trim(), &elem))
                .collect::<std::result::Result<Vec<_>, _>>()
                .map(Value::Array)
        }
        Value::Number(_) => parse_number(text, like),
        Value::Object(_) => Err("not a leaf key".into()),
    }
}

fn set_path(root: &mut Value, key: &str, v: Value) {
    let mut cur = root;
    for part in key.split('.') {
        cur = cur
            .as_object_mut()
            .expect("flattened keys follow objects")
            .entry(part.to_string())
            .or_insert(Value::Object(Map::new()));
    }
    *cur = v;
}

impl ExperimentConfig {
    fn template() -> Vec<(String, Value)> {
        let mut out = Vec::new();
        flatten("", &serde_json::to_value(Self::default()).expect("config serializes"), &mut out);
        out
    }

    /// Every key in the order `emit` writes them.
    pub fn keys() -> Vec<String> {
        Self::template().into_iter().map(|(k, _)| k).collect()
    }

    /// One `key = value` line per key, sorted by key.
    pub fn emit(&self) -> String {
        let mut flat = Vec::new();
        flatten("", &serde_json::to_value(self).expect("config serializes"), &mut flat);
        let mut s = String::new();
        for (k, v) in flat {
            s.push_str(&format!("{k} = {}\n", render(&v)));
        }
        s
    }

    /// (key, rendered value) pairs, as echoed into manifests.
    pub fn entries(&self) -> Vec<(String, String)> {
        let mut flat = Vec::new();
        flatten("", &serde_json::to_value(self).expect("config serializes"), &mut flat);
        flat.into_iter().map(|(k, v)| (k, render(&v))).collect()
    }

    /// Defaults overridden by the lines of `text`. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Config {
                line: i + 1,
                message: format!("expected key = value, got {line:?}"),
            })?;
            cfg.set(k.trim(), v.trim()).map_err(|e| match e {
                Error::Config { message, .. } => Error::Config { line: i + 1, message },
                other => other,
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Sets one dotted key from its text form.
    pub fn set(&mut self, key: &str, text: &str) -> Result<()> {
        let bad = |message: String| Error::Config { line: 0, message };
        let mut root = serde_json::to_value(&*self)?;
        let template = Self::template();
        let like = template
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v)
            .ok_or_else(|| bad(format!("unknown key {key:?}")))?;
        let value = parse_value(text, like).map_err(|m| bad(format!("{key}: {m}")))?;
        set_path(&mut root, key, value);
        *self = serde_json::from_value(root).map_err(|e| bad(format!("{key}: {e}")))?;
        Ok(())
    }

    /// Applies `LEVY_RENORM_*` variables from `vars`; returns the keys set.
    pub fn apply_env<I>(&mut self, vars: I) -> Result<Vec<String>>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let vars: Vec<(String, String)> = vars.into_iter().filter(|(k, _)| k.starts_with(ENV_PREFIX)).collect();
        let mut applied = Vec::new();
        for key in Self::keys() {
            let name = env_name(&key);
            if let Some((_, v)) = vars.iter().find(|(k, _)| *k == name) {
                self.set(&key, v)?;
                applied.push(key);
            }
        }
        self.validate()?;
        Ok(applied)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config { line: 0, message: m.to_string() });
        fn increasing(xs: &[f64]) -> bool {
            !xs.is_empty() && xs.windows(2).all(|w| w[1] > w[0]) && xs[0] > 0.0
        }
        fn decreasing(xs: &[f64]) -> bool {
            !xs.is_empty() && xs.windows(2).all(|w| w[1] < w[0]) && *xs.last().unwrap() > 0.0
        }
        let c = &self.check;
        if self.ensemble.paths == 0 {
            return fail("ensemble.paths must be >= 1");
        }
        if !(self.solver.horizon >= 0.0) || !(self.solver.eps >= 0.0) {
            return fail("solver.horizon and solver.eps must be >= 0");
        }
        if self.solver.snapshots == 0 {
            return fail("solver.snapshots must be >= 1");
        }
        if !increasing(&c.energy_levels) || !increasing(&c.dissipation_levels) || !increasing(&c.cauchy_levels) {
            return fail("level ladders must be nonempty, positive and increasing");
        }
        if !increasing(&c.jump_levels) {
            return fail("check.jump_levels must be nonempty, positive and increasing");
        }
        if !decreasing(&c.widths) || !decreasing(&c.viscosity_eps) {
            return fail("check.widths and check.viscosity_eps must be positive and decreasing");
        }
        if c.viscosity_cells.len() != c.viscosity_eps.len() {
            return fail("check.viscosity_cells must match check.viscosity_eps");
        }
        let inc_usize = |xs: &[usize]| !xs.is_empty() && xs.windows(2).all(|w| w[1] > w[0]) && xs[0] > 0;
        if !inc_usize(&c.viscosity_cells) || !inc_usize(&c.contraction_cells) || !inc_usize(&c.contraction_paths) {
            return fail("cell and path ladders must be nonempty and increasing");
        }
        if c.jump_xi.is_empty() || c.jump_xi.iter().any(|&x| !(x > 0.0)) {
            return fail("check.jump_xi must be nonempty and positive");
        }
        if c.kruzkov_count < 2 || c.psi_count == 0 {
            return fail("check.kruzkov_count must be >= 2 and check.psi_count >= 1");
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.problem.dimension, self.grid.cells, self.grid.half_width)
    }

    /// Solver options with stored times k·T/snapshots.
    pub fn solve_options(&self) -> SolveOptions {
        let mut opts = SolveOptions::new(self.solver.eps, self.solver.horizon).min_steps(self.solver.min_steps);
        if let Some(dt) = self.solver.dt_max {
            opts = opts.dt_max(dt);
        }
        opts.store(crate::solver::StoreTimes::At(self.store_times()))
    }

    pub fn store_times(&self) -> Vec<f64> {
        let t = self.solver.horizon;
        if t == 0.0 {
            return vec![0.0];
        }
        let n = self.solver.snapshots;
        (0..=n).map(|k| t * k as f64 / n as f64).collect()
    }
}

pub fn env_name(key: &str) -> String {
    format!("{ENV_PREFIX}{}", key.to_uppercase().replace(['.', '-'], "_"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn default_round_trip() {
        let c = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::parse(&c.emit()).unwrap(), c);
    }

    #[test]
    fn parse_overrides_and_errors() {
        let c = ExperimentConfig::parse("# comment\nsolver.eps = 0.1\nsolver.dt_max = 0.001\ncheck.widths=0.3,0.2\n").unwrap();
        assert_eq!(c.solver.eps, 0.1);
        assert_eq!(c.solver.dt_max, Some(0.001));
        assert_eq!(c.check.widths, vec![0.3, 0.2]);
        assert!(matches!(ExperimentConfig::parse("solver.bogus = 1"), Err(Error::Config { line: 1, .. })));
        assert!(matches!(ExperimentConfig::parse("\nensemble.paths = -3"), Err(Error::Config { line: 2, .. })));
        assert!(ExperimentConfig::parse("ensemble.paths = 0").is_err());
        assert!(ExperimentConfig::parse("check.widths = 0.1,0.2").is_err());
    }

    #[test]
    fn env_overrides() {
        let mut c = ExperimentConfig::default();
        let applied = c
            .apply_env(vec![
                ("LEVY_RENORM_SOLVER_EPS".to_string(), "0.2".to_string()),
                ("LEVY_RENORM_PROBLEM_FLUX".to_string(), "zero".to_string()),
                ("OTHER".to_string(), "1".to_string()),
            ])
            .unwrap();
        assert_eq!(applied.len(), 2);
        assert_eq!(c.solver.eps, 0.2);
        assert_eq!(c.problem.flux, "zero");
        assert_eq!(env_name("grid.half_width"), "LEVY_RENORM_GRID_HALF_WIDTH");
    }

    proptest! {
        #[test]
        fn round_trip(eps in 0.0..1.0f64, t in 0.0..2.0f64, seed in any::<u64>(), w in prop::collection::vec(0.001..1.0f64, 1..5),
                      dt in prop::option::of(1e-6..1e-2f64), flux in prop::sample::select(vec!["burgers", "zero"])) {
            let mut c = ExperimentConfig::default();
            c.solver.eps = eps;
            c.solver.horizon = t;
            c.solver.dt_max = dt;
            c.ensemble.seed = seed;
            let mut w = w;
            w.sort_by(|a, b| b.partial_cmp(a).unwrap());
            w.dedup();
            c.check.widths = w;
            c.problem.flux = flux.to_string();
            prop_assert_eq!(ExperimentConfig::parse(&c.emit()).unwrap(), c);
        }
    }
}

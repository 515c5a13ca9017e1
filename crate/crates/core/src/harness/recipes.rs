//! Named end-to-end checks writing verdict JSON and CSV tables.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::json;

use super::ensemble::{ensemble_stats, EnsembleStats};
use super::output::OutputDir;
use super::ExperimentConfig;
use crate::error::{Error, Result};
use crate::functionals::dissipation_from_terms;
use crate::model::{make_entropy_triple, EntropyFn, ProblemConfig, TruncationFamily, CATALOG_ETA};
use crate::noise::SeedKey;
use crate::solver::{solve, Field, Grid, PathSample, StoreTimes};
use crate::verify::{
    discretization_budget, gronwall_stability, jump_sign_check, paired_ratios, residual_terms, scan_grid,
    truncated_data_cauchy, viscosity_convergence, Ensemble, Rung, Temporal, TestFunction, Verdict,
};

pub const RECIPES: [&str; 9] = [
    "l1-bound",
    "kirchhoff-bound",
    "dissipation",
    "entropy-residual",
    "contraction",
    "cauchy-truncation",
    "viscosity-limit",
    "jump-sign",
    "gronwall",
];

/// One line of a verdict file. For upper bounds `mean` is the estimate and
/// `budget` the bound; PASS means the inequality holds within
/// budget + 5·SE.
#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct VerdictRecord {
    pub check: String,
    pub parameters: serde_json::Value,
    pub mean: f64,
    pub se: f64,
    pub budget: f64,
    pub verdict: String,
}

impl VerdictRecord {
    fn new(check: impl Into<String>, parameters: serde_json::Value, mean: f64, se: f64, budget: f64, v: Verdict) -> Self {
        Self {
            check: check.into(),
            parameters,
            mean,
            se,
            budget,
            verdict: v.to_string(),
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == "PASS"
    }
}

/// Runs recipes against one configuration and output directory, sharing
/// the ensemble statistics and the contraction constant between them.
pub struct RecipeRunner<'a> {
    cfg: &'a ExperimentConfig,
    dir: OutputDir,
    stats: Option<EnsembleStats>,
    c_emp: Option<f64>,
    /// Every record produced so far, prerequisites included.
    pub records: Vec<VerdictRecord>,
}

impl<'a> RecipeRunner<'a> {
    pub fn new(cfg: &'a ExperimentConfig, out: &Path) -> Result<Self> {
        Ok(Self {
            cfg,
            dir: OutputDir::create(out)?,
            stats: None,
            c_emp: None,
            records: Vec::new(),
        })
    }

    pub fn run(&mut self, name: &str) -> Result<Vec<VerdictRecord>> {
        let records = match name {
            "l1-bound" => self.l1_bound()?,
            "kirchhoff-bound" => self.kirchhoff_bound()?,
            "dissipation" => self.dissipation()?,
            "entropy-residual" => self.entropy_residual()?,
            "contraction" => self.contraction()?,
            "cauchy-truncation" => self.cauchy()?,
            "viscosity-limit" => self.viscosity()?,
            "jump-sign" => self.jump_sign()?,
            "gronwall" => self.gronwall()?,
            other => return Err(Error::UnknownRecipe(other.to_string())),
        };
        self.dir.write_json(&format!("verdicts/{name}.json"), &records)?;
        self.records.extend(records.iter().cloned());
        Ok(records)
    }

    fn stats(&mut self) -> Result<&EnsembleStats> {
        if self.stats.is_none() {
            let s = ensemble_stats(self.cfg)?;
            self.dir.write("tables/stats.csv", s.stats_csv())?;
            self.stats = Some(s);
        }
        Ok(self.stats.as_ref().expect("just computed"))
    }

    /// C_emp from an earlier contraction run in this directory, running the
    /// contraction recipe first if there is none.
    fn contraction_constant(&mut self) -> Result<f64> {
        if let Some(c) = self.c_emp {
            return Ok(c);
        }
        let path = self.dir.root().join("tables/contraction_constant.json");
        if let Ok(text) = std::fs::read_to_string(&path) {
            let v: serde_json::Value = serde_json::from_str(&text)?;
            if v["config_hash"] == json!(super::sha256_hex(self.cfg.emit().as_bytes())) {
                if let Some(c) = v["c_emp"].as_f64() {
                    self.c_emp = Some(c);
                    return Ok(c);
                }
            }
        }
        self.run("contraction")?;
        self.c_emp.ok_or_else(|| Error::invalid("contraction recipe did not produce C_emp"))
    }

    fn ensemble(&self, paths: usize) -> Result<Ensemble> {
        Ensemble::new(paths, self.cfg.ensemble.seed, self.cfg.ensemble.workers)
    }

    fn l1_bound(&mut self) -> Result<Vec<VerdictRecord>> {
        let slack = self.cfg.check.l1_slack;
        let s = self.stats()?.clone();
        let bound = s.initial_l1 * (1.0 + slack);
        let mut csv = String::from("time,l1_mean,l1_se,bound\n");
        let mut worst = 0;
        for (k, m) in s.l1.iter().enumerate() {
            let _ = writeln!(csv, "{:.10e},{:.16e},{:.16e},{:.16e}", s.times[k], m.mean, m.se, bound);
            let margin = |m: &crate::stats::MeanSe| bound + 5.0 * m.se - m.mean;
            if margin(m) < margin(&s.l1[worst]) {
                worst = k;
            }
        }
        self.dir.write("tables/l1-bound.csv", csv)?;
        let ok = s.l1.iter().all(|m| m.mean <= bound + 5.0 * m.se);
        let w = s.l1[worst];
        Ok(vec![VerdictRecord::new(
            "l1-bound",
            json!({"initial_l1": s.initial_l1, "slack": slack, "paths": s.paths, "worst_time": s.times[worst]}),
            w.mean,
            w.se,
            bound,
            Verdict::from_bool(ok),
        )])
    }

    fn kirchhoff_bound(&mut self) -> Result<Vec<VerdictRecord>> {
        let slack = self.cfg.check.energy_slack;
        let horizon = self.cfg.solver.horizon;
        let s = self.stats()?.clone();
        let l2 = s.sup_l2_sq();
        let mut csv = String::from("level,energy_mean,energy_se,c_level\n");
        let mut out = Vec::new();
        for (l, e) in s.energy_levels.iter().zip(&s.energy) {
            let c = l * s.initial_l1 + horizon * l2;
            let _ = writeln!(csv, "{l:.10e},{:.16e},{:.16e},{c:.16e}", e.mean, e.se);
            let bound = c * (1.0 + slack);
            out.push(VerdictRecord::new(
                format!("kirchhoff-bound[{l:.4}]"),
                json!({"level": l, "initial_l1": s.initial_l1, "sup_l2_sq": l2, "horizon": horizon, "slack": slack}),
                e.mean,
                e.se,
                bound,
                Verdict::from_bool(e.mean <= bound + 5.0 * e.se),
            ));
        }
        self.dir.write("tables/kirchhoff-bound.csv", csv)?;
        Ok(out)
    }

    fn dissipation(&mut self) -> Result<Vec<VerdictRecord>> {
        let ratio_max = self.cfg.check.dissipation_ratio;
        let s = self.stats()?.clone();
        self.dir.write("tables/dissipation.csv", s.bands_csv())?;
        let mut out = Vec::new();
        for (wi, &w) in s.band_widths.iter().enumerate() {
            let row = &s.bands[wi];
            let (first, last) = (row[0], row[row.len() - 1]);
            let ratio = if first.mean > 0.0 { last.mean / first.mean } else { 0.0 };
            let monotone = row.windows(2).all(|p| p[1].mean <= p[0].mean + 5.0 * p[1].se);
            out.push(VerdictRecord::new(
                format!("dissipation[{w:.4}]"),
                json!({
                    "width": w,
                    "levels": s.band_levels,
                    "masses": row.iter().map(|m| m.mean).collect::<Vec<_>>(),
                    "monotone": monotone,
                }),
                ratio,
                if first.mean > 0.0 { last.se / first.mean } else { 0.0 },
                ratio_max,
                Verdict::from_bool(ratio < ratio_max && monotone),
            ));
            if !s.e2.is_empty() {
                let e2: Vec<f64> = s.e2[wi].iter().map(|m| m.mean).collect();
                let e3: Vec<f64> = s.e3[wi].iter().map(|m| m.mean).collect();
                let rep = dissipation_from_terms(&s.band_levels, w, &s.e1, &e2, &e3);
                let (ok, params, top) = match &rep {
                    Ok(r) => (r.end_to_end_decrease, serde_json::to_value(r)?, r.entries.last().map_or(0.0, |e| e.total)),
                    Err(e) => (false, json!({"error": e.to_string()}), f64::NAN),
                };
                let base = s.e1[0] + e2[0] + e3[0];
                out.push(VerdictRecord::new(
                    format!("boundary-layer[{w:.4}]"),
                    params,
                    top,
                    0.0,
                    base * crate::functionals::DISSIPATION_THRESHOLDS[0],
                    Verdict::from_bool(ok),
                ));
            }
        }
        Ok(out)
    }

    fn entropy_residual(&mut self) -> Result<Vec<VerdictRecord>> {
        let cfg = self.cfg;
        let study = residual_study(cfg)?;
        let mut csv = String::from("c,psi_center,residual_solution,residual_injected\n");
        for r in &study.rows {
            let _ = writeln!(csv, "{:.6},{:.6},{:.16e},{:.16e}", r.c, r.center, r.solution, r.injected);
        }
        self.dir.write("tables/entropy-residual.csv", csv)?;
        let params = json!({
            "c_bud": cfg.check.c_bud, "dx": study.dx, "dt": study.dt,
            "kruzkov_count": cfg.check.kruzkov_count, "xi": cfg.check.xi, "psi_count": cfg.check.psi_count,
        });
        let min_sol = study.rows.iter().map(|r| r.solution).fold(f64::INFINITY, f64::min);
        let min_inj = study.rows.iter().map(|r| r.injected).fold(f64::INFINITY, f64::min);
        Ok(vec![
            VerdictRecord::new(
                "entropy-residual-solution",
                params.clone(),
                min_sol,
                0.0,
                study.budget,
                Verdict::from_bool(min_sol >= -study.budget),
            ),
            VerdictRecord::new(
                "entropy-residual-detector",
                params,
                min_inj,
                0.0,
                study.budget,
                Verdict::from_bool(min_inj < -study.budget),
            ),
        ])
    }

    fn contraction(&mut self) -> Result<Vec<VerdictRecord>> {
        let cfg = self.cfg;
        let spec = cfg.problem.build()?;
        let opts = cfg.solve_options().store(StoreTimes::At(vec![0.0]));
        let mut out = Vec::new();

        let det = cfg.problem.deterministic().build()?;
        let grid = cfg.grid()?;
        let (u0, v0) = paired_data(&det, &grid, cfg.check.contraction_scale);
        let curve = paired_ratios(&det, &u0, &v0, &grid, &opts, self.ensemble(1)?)?.curve(1);
        self.dir.write("tables/contraction-deterministic.csv", curve.to_csv())?;
        out.push(VerdictRecord::new(
            "contraction-deterministic",
            json!({"cells": grid.cells_per_side, "max_ratio": curve.c_emp}),
            curve.max_step_increase,
            0.0,
            1e-12,
            Verdict::from_bool(curve.is_contractive(1e-12)),
        ));

        let max_paths = *cfg.check.contraction_paths.iter().max().expect("validated nonempty");
        let mut table = String::from("cells,paths,c_emp\n");
        let mut constants = Vec::new();
        for &cells in &cfg.check.contraction_cells {
            let g = Grid::new(spec.dimension, cells, cfg.grid.half_width)?;
            let (u0, v0) = paired_data(&spec, &g, cfg.check.contraction_scale);
            let runs = paired_ratios(&spec, &u0, &v0, &g, &opts, self.ensemble(max_paths)?)?;
            for &m in &cfg.check.contraction_paths {
                let c = runs.curve(m);
                let _ = writeln!(table, "{cells},{m},{:.16e}", c.c_emp);
                if m == max_paths {
                    self.dir.write(&format!("tables/contraction-{cells}.csv"), c.to_csv())?;
                }
                constants.push((cells, m, c.c_emp));
            }
        }
        self.dir.write("tables/contraction.csv", table)?;
        let lo = constants.iter().map(|c| c.2).fold(f64::INFINITY, f64::min);
        let hi = constants.iter().map(|c| c.2).fold(0.0, f64::max);
        let spread = if lo > 0.0 { hi / lo - 1.0 } else { f64::INFINITY };
        out.push(VerdictRecord::new(
            "contraction-stability",
            json!({"c_emp": constants, "scale": cfg.check.contraction_scale}),
            spread,
            0.0,
            cfg.check.contraction_stability,
            Verdict::from_bool(hi.is_finite() && spread <= cfg.check.contraction_stability),
        ));
        self.c_emp = Some(hi);
        self.dir.write_json(
            "tables/contraction_constant.json",
            &json!({"c_emp": hi, "config_hash": super::sha256_hex(cfg.emit().as_bytes())}),
        )?;
        Ok(out)
    }

    fn cauchy(&mut self) -> Result<Vec<VerdictRecord>> {
        let c_emp = self.contraction_constant()?;
        let cfg = self.cfg;
        let spec = cfg.problem.build()?;
        let grid = cfg.grid()?;
        let opts = cfg.solve_options().store(StoreTimes::At(vec![0.0]));
        let t = truncated_data_cauchy(
            &spec,
            &cfg.check.cauchy_levels,
            &grid,
            &opts,
            self.ensemble(cfg.ensemble.paths)?,
            c_emp,
        )?;
        self.dir.write("tables/cauchy-truncation.csv", t.to_csv())?;
        let mut out: Vec<VerdictRecord> = t
            .rows
            .iter()
            .map(|r| {
                VerdictRecord::new(
                    format!("cauchy-truncation[{},{}]", r.n1, r.n2),
                    json!({"c_emp": c_emp, "data_distance": r.data_distance}),
                    r.sup_mean,
                    r.se,
                    c_emp * r.data_distance,
                    Verdict::from_bool(r.within_bound),
                )
            })
            .collect();
        let consecutive: Vec<f64> = t.levels.windows(2).filter_map(|w| t.row(w[0], w[1]).map(|r| r.sup_mean)).collect();
        out.push(VerdictRecord::new(
            "cauchy-truncation-monotone",
            json!({"levels": t.levels, "consecutive": consecutive}),
            *consecutive.last().unwrap_or(&0.0),
            0.0,
            0.0,
            Verdict::from_bool(t.consecutive_decrease),
        ));
        Ok(out)
    }

    fn viscosity(&mut self) -> Result<Vec<VerdictRecord>> {
        let cfg = self.cfg;
        let spec = cfg.problem.build()?;
        let rungs: Vec<Rung> = cfg
            .check
            .viscosity_eps
            .iter()
            .zip(&cfg.check.viscosity_cells)
            .map(|(&epsilon, &cells)| Rung { epsilon, cells })
            .collect();
        let t = viscosity_convergence(
            &spec,
            &rungs,
            cfg.grid.half_width,
            cfg.solver.horizon,
            self.ensemble(cfg.ensemble.paths)?,
            cfg.check.viscosity_samples,
        )?;
        self.dir.write("tables/viscosity-limit.csv", t.to_csv())?;
        let last = t.distances.last().expect("at least two rungs");
        Ok(vec![VerdictRecord::new(
            "viscosity-limit",
            json!({
                "distances": t.distances.iter().map(|d| d.mean).collect::<Vec<_>>(),
                "orders": t.distances.iter().map(|d| d.order).collect::<Vec<_>>(),
                "flagged_rungs": t.rungs.iter().filter(|r| r.flagged).map(|r| r.epsilon).collect::<Vec<_>>(),
            }),
            last.mean,
            last.se,
            0.0,
            t.verdict,
        )])
    }

    fn jump_sign(&mut self) -> Result<Vec<VerdictRecord>> {
        let cfg = self.cfg;
        let samples = scan_grid(
            &cfg.check.jump_levels,
            cfg.check.jump_u_points,
            (cfg.problem.mark_lo, cfg.problem.mark_hi),
            cfg.check.jump_z_points,
        );
        let mut out = Vec::new();
        let mut csv = String::from("eta,beta,max,u,z,level\n");
        let mut control_failed = true;
        for name in CATALOG_ETA {
            let spec = ProblemConfig {
                eta: name.to_string(),
                ..cfg.problem.clone()
            }
            .build()?;
            let control = *name == "decreasing";
            for &xi in &cfg.check.jump_xi {
                let r = jump_sign_check(&samples, &EntropyFn::smooth_abs(xi), &spec.eta)?;
                let (u, z, l) = r.argmax.map_or((0.0, 0.0, 0.0), |s| (s.u, s.z, s.level));
                let _ = writeln!(csv, "{},{},{:.16e},{u},{z},{l}", r.eta, r.beta, r.max);
                if control {
                    control_failed &= !r.verdict.passed();
                    continue;
                }
                out.push(VerdictRecord::new(
                    format!("jump-sign[{name},{xi}]"),
                    json!({"samples": r.count, "argmax": r.argmax}),
                    r.max,
                    0.0,
                    crate::verify::SIGN_TOLERANCE,
                    r.verdict,
                ));
            }
        }
        self.dir.write("tables/jump-sign.csv", csv)?;
        out.push(VerdictRecord::new(
            "jump-sign-negative-control",
            json!({"eta": "decreasing", "samples": samples.len()}),
            0.0,
            0.0,
            crate::verify::SIGN_TOLERANCE,
            Verdict::from_bool(control_failed),
        ));
        Ok(out)
    }

    fn gronwall(&mut self) -> Result<Vec<VerdictRecord>> {
        let c_emp = self.contraction_constant()?;
        let cfg = self.cfg;
        let spec = cfg.problem.build()?;
        let grid = cfg.grid()?;
        let sup = grid.sample(&spec.initial).sup();
        let level = cfg.check.gronwall_level * if sup > 0.0 { sup } else { 1.0 };
        let weight = TestFunction::weighted_ramp(cfg.check.gronwall_m, cfg.check.gronwall_theta, cfg.solver.horizon, 1.0)?;
        let opts = cfg.solve_options().store(StoreTimes::At(vec![0.0]));
        let t = gronwall_stability(
            &spec,
            level,
            &grid,
            &opts,
            self.ensemble(cfg.ensemble.paths)?,
            c_emp,
            &weight,
            cfg.check.gronwall_samples,
        )?;
        self.dir.write("tables/gronwall.csv", t.to_csv())?;
        let worst = t
            .rows
            .iter()
            .min_by(|a, b| a.margin.total_cmp(&b.margin))
            .expect("at least one row");
        Ok(vec![VerdictRecord::new(
            "gronwall",
            json!({"level": level, "c_emp": c_emp, "data_distance": t.data_distance, "worst_time": worst.time}),
            worst.lhs_mean,
            worst.lhs_se,
            worst.rhs,
            t.verdict,
        )])
    }
}

fn paired_data(spec: &crate::model::ProblemSpec, grid: &Grid, scale: f64) -> (Field, Field) {
    let u0 = grid.sample(&spec.initial);
    let v0 = Field::new(u0.values.iter().map(|v| scale * v).collect(), 0.0);
    (u0, v0)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualRow {
    pub c: f64,
    pub center: f64,
    pub solution: f64,
    pub injected: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualStudy {
    pub dx: f64,
    pub dt: f64,
    pub budget: f64,
    pub rows: Vec<ResidualRow>,
}

/// The data translated at the Rankine–Hugoniot speed f(A)/A of a jump from
/// A = ‖u₀‖∞ down to 0. For indicator-like data and convex flux the trailing
/// edge is an expansion shock.
pub fn injected_expansion_shock(
    spec: &crate::model::ProblemSpec,
    grid: &Grid,
    dt: f64,
    steps: usize,
) -> Result<PathSample> {
    let u0 = grid.sample(&spec.initial);
    let a = u0.sup();
    let speed = if a > 0.0 { spec.flux[0].eval(a) / a } else { 0.0 };
    let fields = (0..=steps)
        .map(|k| {
            let t = k as f64 * dt;
            let vals = grid
                .centres()
                .map(|x| {
                    let mut y = x;
                    y[0] -= speed * t;
                    spec.initial.eval(&y[..grid.dimension])
                })
                .collect();
            Field::new(vals, t)
        })
        .collect();
    PathSample::from_fields(spec, *grid, 0.0, dt, fields)
}

/// Kružkov-type residuals of the deterministic problem and of the injected
/// expansion shock over the (c, ψ) family of the configuration.
pub fn residual_study(cfg: &ExperimentConfig) -> Result<ResidualStudy> {
    let spec = cfg.problem.deterministic().build()?;
    let grid = cfg.grid()?;
    let opts = cfg
        .solve_options()
        .store(StoreTimes::EveryStep);
    let path = solve(&spec, &grid, &opts, SeedKey::new(cfg.ensemble.seed, 0), None, &mut [])?;
    let injected = injected_expansion_shock(&spec, &grid, path.dt, path.steps)?;
    let sup = path.snapshots.iter().chain(&injected.snapshots).fold(0.0f64, |s, f| s.max(f.sup()));
    let scale = if sup > 0.0 { sup } else { 1.0 };
    let trunc = TruncationFamily::new(cfg.check.residual_level * scale, cfg.check.residual_width * scale)?;
    let range = (trunc.level + trunc.width + scale).max(spec.constants.state_bound);
    let cs: Vec<f64> = (0..cfg.check.kruzkov_count)
        .map(|j| -scale + 2.0 * scale * j as f64 / (cfg.check.kruzkov_count - 1) as f64)
        .collect();
    let centers: Vec<f64> = (0..cfg.check.psi_count)
        .map(|j| {
            if cfg.check.psi_count == 1 {
                cfg.check.psi_lo
            } else {
                cfg.check.psi_lo + (cfg.check.psi_hi - cfg.check.psi_lo) * j as f64 / (cfg.check.psi_count - 1) as f64
            }
        })
        .collect();
    let mut rows = Vec::new();
    for &c in &cs {
        let beta = EntropyFn::smooth_abs(cfg.check.xi).shifted(c);
        let triple = make_entropy_triple(&spec, beta, (-range, range), 256, true)?;
        let bound = cfg.check.bound.unwrap_or(triple.bound);
        for &x in &centers {
            let psi = TestFunction::bump([x, 0.0], cfg.check.psi_radius, Temporal::Constant)?;
            let a = residual_terms(&path, &triple, trunc, bound, &psi)?.total();
            let b = residual_terms(&injected, &triple, trunc, bound, &psi)?.total();
            rows.push(ResidualRow {
                c,
                center: x,
                solution: a,
                injected: b,
            });
        }
    }
    Ok(ResidualStudy {
        dx: grid.dx(),
        dt: path.dt,
        budget: discretization_budget(cfg.check.c_bud, grid.dx(), path.dt),
        rows,
    })
}

/// Runs `name` into `out` and returns its records (prerequisites excluded).
pub fn run_recipe(name: &str, cfg: &ExperimentConfig, out: &Path) -> Result<Vec<VerdictRecord>> {
    let mut runner = RecipeRunner::new(cfg, out)?;
    runner.run(name)
}

/// All verdict records under `out/verdicts`, in file-name order.
pub fn read_verdicts(out: &Path) -> Result<Vec<VerdictRecord>> {
    let dir = out.join("verdicts");
    let mut names: Vec<_> = std::fs::read_dir(&dir)
        .map_err(|e| Error::io(&dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    names.sort();
    let mut out = Vec::new();
    for p in names {
        let text = std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
        let mut recs: Vec<VerdictRecord> = serde_json::from_str(&text)?;
        out.append(&mut recs);
    }
    Ok(out)
}

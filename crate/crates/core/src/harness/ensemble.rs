//! Ensemble runs: per-path observers, ordered reductions, manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use super::output::{sha256_hex, FileEntry, OutputDir};
use super::ExperimentConfig;
use crate::error::{Error, Result};
use crate::functionals::{data_tail_mass, KirchhoffEnergy, LevelBands};
use crate::model::ProblemSpec;
use crate::noise::{SeedKey, BROWNIAN_STREAM, JUMP_STREAM};
use crate::solver::{snapshot_to_string, solve, Field, Grid};
use crate::stats::{parallel_map, MeanSe};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathSeed {
    pub index: usize,
    pub brownian_stream: u64,
    pub jump_stream: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub code_version: String,
    pub config: BTreeMap<String, String>,
    pub base_seed: u64,
    pub paths: Vec<PathSeed>,
    pub dt: f64,
    pub steps: usize,
    pub wall_clock_seconds: f64,
    pub files: Vec<FileEntry>,
}

/// What one path contributes to the ensemble statistics.
#[derive(Clone, Debug)]
struct PathSummary {
    /// (l1, l2², mass, sup) per stored time.
    norms: Vec<[f64; 4]>,
    energy: Vec<f64>,
    /// [width][level]
    bands: Vec<Vec<f64>>,
    e2: Vec<Vec<f64>>,
    e3: Vec<Vec<f64>>,
    dt: f64,
    steps: usize,
    snapshots: Option<Vec<Field>>,
}

/// Ensemble means and standard errors of one configuration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnsembleStats {
    pub paths: usize,
    pub dt: f64,
    pub steps: usize,
    pub times: Vec<f64>,
    pub initial_l1: f64,
    pub initial_sup: f64,
    pub l1: Vec<MeanSe>,
    pub l2_sq: Vec<MeanSe>,
    pub mass: Vec<MeanSe>,
    pub sup: Vec<MeanSe>,
    pub energy_levels: Vec<f64>,
    pub energy: Vec<MeanSe>,
    pub band_levels: Vec<f64>,
    pub band_widths: Vec<f64>,
    /// [width][level]
    pub bands: Vec<Vec<MeanSe>>,
    /// Boundary-layer terms over the first `boundary_paths` paths,
    /// [width][level]; empty when none.
    pub e2: Vec<Vec<MeanSe>>,
    pub e3: Vec<Vec<MeanSe>>,
    /// E₁ per level.
    pub e1: Vec<f64>,
}

impl EnsembleStats {
    pub fn stats_csv(&self) -> String {
        let mut s = String::from("time,l1_mean,l1_se,l2sq_mean,l2sq_se,mass_mean,mass_se,sup_mean,sup_se\n");
        for (k, t) in self.times.iter().enumerate() {
            let _ = writeln!(
                s,
                "{:.10e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                t,
                self.l1[k].mean,
                self.l1[k].se,
                self.l2_sq[k].mean,
                self.l2_sq[k].se,
                self.mass[k].mean,
                self.mass[k].se,
                self.sup[k].mean,
                self.sup[k].se
            );
        }
        s
    }

    pub fn energy_csv(&self) -> String {
        let mut s = String::from("level,energy_mean,energy_se\n");
        for (l, e) in self.energy_levels.iter().zip(&self.energy) {
            let _ = writeln!(s, "{l:.10e},{:.16e},{:.16e}", e.mean, e.se);
        }
        s
    }

    pub fn bands_csv(&self) -> String {
        let mut s = String::from("width,level,mass_mean,mass_se,e1,e2_mean,e3_mean\n");
        for (wi, (w, row)) in self.band_widths.iter().zip(&self.bands).enumerate() {
            for (li, (l, m)) in self.band_levels.iter().zip(row).enumerate() {
                let e2 = self.e2.get(wi).map_or(f64::NAN, |r| r[li].mean);
                let e3 = self.e3.get(wi).map_or(f64::NAN, |r| r[li].mean);
                let _ = writeln!(
                    s,
                    "{w:.10e},{l:.10e},{:.16e},{:.16e},{:.16e},{e2:.16e},{e3:.16e}",
                    m.mean, m.se, self.e1[li]
                );
            }
        }
        s
    }

    /// sup over stored t of E‖u(t)‖₂².
    pub fn sup_l2_sq(&self) -> f64 {
        self.l2_sq.iter().map(|m| m.mean).fold(0.0, f64::max)
    }
}

fn path_summary(
    spec: &ProblemSpec,
    grid: &Grid,
    cfg: &ExperimentConfig,
    energy_levels: &[f64],
    band_levels: &[f64],
    widths: &[f64],
    index: usize,
) -> Result<PathSummary> {
    let opts = cfg.solve_options();
    let mut energy = KirchhoffEnergy::new(spec, *grid, energy_levels.to_vec())?;
    let mut bands = LevelBands::new(spec, *grid, opts.epsilon, band_levels.to_vec(), widths.to_vec(), index < cfg.check.boundary_paths)?;
    let key = SeedKey::new(cfg.ensemble.seed, index as u64);
    let path = solve(spec, grid, &opts, key, None, &mut [&mut energy, &mut bands])?;
    let norms = path
        .snapshots
        .iter()
        .map(|f| [f.l1(grid), f.l2_sq(grid), f.mass(grid), f.sup()])
        .collect();
    Ok(PathSummary {
        norms,
        energy: energy.totals,
        bands: bands.mass,
        e2: bands.e2,
        e3: bands.e3,
        dt: path.dt,
        steps: path.steps,
        snapshots: (index < cfg.ensemble.save_paths).then_some(path.snapshots),
    })
}

fn collect(
    cfg: &ExperimentConfig,
    paths: usize,
    workers: usize,
) -> Result<(EnsembleStats, Vec<Vec<Field>>)> {
    let spec = cfg.problem.build()?;
    let grid = cfg.grid()?;
    let u0 = grid.sample(&spec.initial);
    let sup0 = u0.sup();
    let scale = if sup0 > 0.0 { sup0 } else { 1.0 };
    let energy_levels: Vec<f64> = cfg.check.energy_levels.iter().map(|f| f * scale).collect();
    let band_levels: Vec<f64> = cfg.check.dissipation_levels.iter().map(|f| f * scale).collect();
    let widths: Vec<f64> = cfg.check.widths.iter().map(|f| f * scale).collect();
    let summaries = parallel_map(paths, workers, |i| {
        path_summary(&spec, &grid, cfg, &energy_levels, &band_levels, &widths, i)
    })?;
    let col = |f: &dyn Fn(&PathSummary) -> f64| {
        let xs: Vec<f64> = summaries.iter().map(f).collect();
        MeanSe::of(&xs)
    };
    let boundary = cfg.check.boundary_paths.min(paths);
    let col_b = |f: &dyn Fn(&PathSummary) -> f64| {
        let xs: Vec<f64> = summaries[..boundary].iter().map(f).collect();
        MeanSe::of(&xs)
    };
    let times = cfg.store_times();
    let norm = |j: usize| -> Vec<MeanSe> { (0..times.len()).map(|k| col(&|p| p.norms[k][j])).collect() };
    let stats = EnsembleStats {
        paths,
        dt: summaries[0].dt,
        steps: summaries[0].steps,
        initial_l1: u0.l1(&grid),
        initial_sup: sup0,
        l1: norm(0),
        l2_sq: norm(1),
        mass: norm(2),
        sup: norm(3),
        energy: (0..energy_levels.len()).map(|l| col(&|p| p.energy[l])).collect(),
        bands: (0..widths.len())
            .map(|w| (0..band_levels.len()).map(|l| col(&|p| p.bands[w][l])).collect())
            .collect(),
        e2: if boundary > 0 {
            (0..widths.len())
                .map(|w| (0..band_levels.len()).map(|l| col_b(&|p| p.e2[w][l])).collect())
                .collect()
        } else {
            Vec::new()
        },
        e3: if boundary > 0 {
            (0..widths.len())
                .map(|w| (0..band_levels.len()).map(|l| col_b(&|p| p.e3[w][l])).collect())
                .collect()
        } else {
            Vec::new()
        },
        e1: band_levels.iter().map(|&l| data_tail_mass(&u0, &grid, l)).collect(),
        times,
        energy_levels,
        band_levels,
        band_widths: widths,
    };
    let saved = summaries.into_iter().filter_map(|p| p.snapshots).collect();
    Ok((stats, saved))
}

/// Ensemble statistics without writing files.
pub fn ensemble_stats(cfg: &ExperimentConfig) -> Result<EnsembleStats> {
    Ok(collect(cfg, cfg.ensemble.paths, cfg.ensemble.workers)?.0)
}

/// Runs the configured ensemble and writes `config.cfg`, `stats.csv`,
/// `energy.csv`, `bands.csv`, snapshots of the first `save_paths` paths and
/// `manifest.json` into `out`. An unstable path aborts the run and leaves
/// `failure.json` with its seed.
pub fn run_ensemble(cfg: &ExperimentConfig, out: &Path) -> Result<(RunManifest, EnsembleStats)> {
    let start = Instant::now();
    let mut dir = OutputDir::create(out)?;
    let config_text = cfg.emit();
    dir.write("config.cfg", &config_text)?;
    let (stats, saved) = match collect(cfg, cfg.ensemble.paths, cfg.ensemble.workers) {
        Ok(v) => v,
        Err(e) => {
            if let Error::Instability { time, path_index } = e {
                let failure = serde_json::json!({
                    "error": "instability",
                    "base_seed": cfg.ensemble.seed,
                    "path_index": path_index,
                    "time": time,
                });
                dir.write_json("failure.json", &failure)?;
            }
            return Err(e);
        }
    };
    dir.write("stats.csv", stats.stats_csv())?;
    dir.write("energy.csv", stats.energy_csv())?;
    dir.write("bands.csv", stats.bands_csv())?;
    let grid = cfg.grid()?;
    for (i, snaps) in saved.iter().enumerate() {
        for (k, f) in snaps.iter().enumerate() {
            dir.write(&format!("snapshots/path{i:04}_t{k:03}.txt"), snapshot_to_string(&grid, f))?;
        }
    }
    let manifest = RunManifest {
        config_hash: sha256_hex(config_text.as_bytes()),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.entries().into_iter().collect(),
        base_seed: cfg.ensemble.seed,
        paths: (0..cfg.ensemble.paths)
            .map(|i| {
                let key = SeedKey::new(cfg.ensemble.seed, i as u64);
                PathSeed {
                    index: i,
                    brownian_stream: key.stream_id(BROWNIAN_STREAM),
                    jump_stream: key.stream_id(JUMP_STREAM),
                }
            })
            .collect(),
        dt: stats.dt,
        steps: stats.steps,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        files: dir.inventory.clone(),
    };
    dir.write_json("manifest.json", &manifest)?;
    Ok((manifest, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::read_snapshot;

    fn small() -> ExperimentConfig {
        let mut c = ExperimentConfig::default();
        c.grid.cells = 64;
        c.solver.horizon = 0.1;
        c.ensemble.paths = 6;
        c
    }

    #[test]
    fn zero_horizon_snapshot_is_initial_data() {
        let mut c = small();
        c.solver.horizon = 0.0;
        c.ensemble.paths = 1;
        let dir = tempfile::tempdir().unwrap();
        let (m, _) = run_ensemble(&c, dir.path()).unwrap();
        let snaps: Vec<_> = m.files.iter().filter(|f| f.name.starts_with("snapshots/")).collect();
        assert_eq!(snaps.len(), 1);
        let (g, f) = read_snapshot(&dir.path().join(&snaps[0].name)).unwrap();
        let spec = c.problem.build().unwrap();
        assert_eq!(f.values, g.sample(&spec.initial).values);
    }

    #[test]
    fn repeated_runs_agree_except_clock() {
        let c = small();
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let (mut m1, _) = run_ensemble(&c, a.path()).unwrap();
        let mut c2 = c.clone();
        c2.ensemble.workers = 3;
        let (mut m2, _) = run_ensemble(&c, b.path()).unwrap();
        m1.wall_clock_seconds = 0.0;
        m2.wall_clock_seconds = 0.0;
        assert_eq!(m1, m2);
        let (_, s3) = run_ensemble(&c2, b.path()).unwrap();
        assert_eq!(s3.stats_csv(), std::fs::read_to_string(a.path().join("stats.csv")).unwrap());
    }
}

//! Paired-noise L¹ stability checks: contraction, truncated-data Cauchy
//! property and the Gronwall trace.

use serde::Serialize;

use super::{TestFunction, Verdict};
use crate::error::{Error, Result};
use crate::model::ProblemSpec;
use crate::noise::SeedKey;
use crate::solver::{solve_coupled, Field, Grid, SolveOptions};
use crate::stats::{column_stats, parallel_map, MeanSe};

/// Ensemble of paired runs sharing one noise path each.
#[derive(Clone, Copy, Debug)]
pub struct Ensemble {
    pub paths: usize,
    pub base_seed: u64,
    pub workers: usize,
}

impl Ensemble {
    pub fn new(paths: usize, base_seed: u64, workers: usize) -> Result<Self> {
        if paths == 0 {
            return Err(Error::invalid("ensemble needs at least one path"));
        }
        Ok(Self {
            paths,
            base_seed,
            workers,
        })
    }

    pub fn key(&self, index: usize) -> SeedKey {
        SeedKey::new(self.base_seed, index as u64)
    }
}

/// t ↦ E‖u(t)−v(t)‖₁ / ‖u₀−v₀‖₁ on every time step.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContractionCurve {
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    pub se: Vec<f64>,
    pub data_distance: f64,
    /// sup_t of the mean ratio.
    pub c_emp: f64,
    /// Largest single-step increase of the ratio over all paths.
    pub max_step_increase: f64,
    pub dt: f64,
}

impl ContractionCurve {
    /// Ratio ≤ 1 and nonincreasing on every path, up to `tol` per step.
    pub fn is_contractive(&self, tol: f64) -> bool {
        self.max_step_increase <= tol && self.mean.iter().all(|&r| r <= 1.0 + tol)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("time,ratio_mean,ratio_se\n");
        for i in 0..self.times.len() {
            s.push_str(&format!("{:.10e},{:.16e},{:.16e}\n", self.times[i], self.mean[i], self.se[i]));
        }
        s
    }
}

/// Per-path ratio curves of a paired contraction run.
#[derive(Clone, Debug, PartialEq)]
pub struct PairedRatios {
    pub times: Vec<f64>,
    /// rows[path][step]
    pub rows: Vec<Vec<f64>>,
    pub data_distance: f64,
    pub dt: f64,
}

impl PairedRatios {
    /// Curve from the first `paths` rows.
    pub fn curve(&self, paths: usize) -> ContractionCurve {
        let rows = &self.rows[..paths.min(self.rows.len())];
        let mut max_step_increase = 0.0f64;
        for r in rows {
            for w in r.windows(2) {
                max_step_increase = max_step_increase.max(w[1] - w[0]);
            }
        }
        let stats = column_stats(rows);
        let mean: Vec<f64> = stats.iter().map(|s| s.mean).collect();
        ContractionCurve {
            c_emp: mean.iter().copied().fold(0.0, f64::max),
            se: stats.iter().map(|s| s.se).collect(),
            mean,
            times: self.times.clone(),
            data_distance: self.data_distance,
            max_step_increase,
            dt: self.dt,
        }
    }
}

pub fn paired_ratios(
    spec: &ProblemSpec,
    u0: &Field,
    v0: &Field,
    grid: &Grid,
    opts: &SolveOptions,
    ens: Ensemble,
) -> Result<PairedRatios> {
    let d0 = u0.l1_distance(v0, grid);
    let runs = parallel_map(ens.paths, ens.workers, |i| {
        let mut ratios = Vec::new();
        let mut times = Vec::new();
        let dt = solve_coupled(spec, grid, opts, ens.key(i), vec![u0.clone(), v0.clone()], |_, t, s| {
            let d = s[0].l1_distance(&s[1], grid);
            ratios.push(if d0 > 0.0 { d / d0 } else { 0.0 });
            times.push(t);
        })?;
        Ok((ratios, times, dt))
    })?;
    Ok(PairedRatios {
        times: runs[0].1.clone(),
        dt: runs[0].2,
        data_distance: d0,
        rows: runs.into_iter().map(|(r, _, _)| r).collect(),
    })
}

pub fn contraction_check(
    spec: &ProblemSpec,
    u0: &Field,
    v0: &Field,
    grid: &Grid,
    opts: &SolveOptions,
    ens: Ensemble,
) -> Result<ContractionCurve> {
    Ok(paired_ratios(spec, u0, v0, grid, opts, ens)?.curve(ens.paths))
}

/// Runs T_n(u₀) for every level under shared noise and returns, per path and
/// step, the distance of every pair (a < b).
fn truncated_pair_distances(
    spec: &ProblemSpec,
    levels: &[f64],
    grid: &Grid,
    opts: &SolveOptions,
    ens: Ensemble,
) -> Result<Vec<Vec<Vec<f64>>>> {
    let u0 = grid.sample(&spec.initial);
    let fields: Vec<Field> = levels.iter().map(|&n| u0.truncated(n)).collect();
    let m = fields.len();
    parallel_map(ens.paths, ens.workers, |i| {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        solve_coupled(spec, grid, opts, ens.key(i), fields.clone(), |_, _, s| {
            let mut row = Vec::with_capacity(m * (m - 1) / 2);
            for a in 0..m {
                for b in a + 1..m {
                    row.push(s[a].l1_distance(&s[b], grid));
                }
            }
            rows.push(row);
        })?;
        Ok(rows)
    })
}

fn pair_index(m: usize, a: usize, b: usize) -> usize {
    // Row-major position of (a, b), a < b, among the m(m−1)/2 pairs.
    a * (2 * m - a - 1) / 2 + (b - a - 1)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CauchyRow {
    pub n1: f64,
    pub n2: f64,
    /// sup over t of E‖u_{n₁}(t) − u_{n₂}(t)‖₁.
    pub sup_mean: f64,
    /// Standard error at the maximising time.
    pub se: f64,
    pub data_distance: f64,
    /// C_emp·‖T_{n₁}u₀ − T_{n₂}u₀‖₁ + 5·SE.
    pub bound: f64,
    pub within_bound: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CauchyTable {
    pub levels: Vec<f64>,
    pub c_emp: f64,
    pub rows: Vec<CauchyRow>,
    /// Distances of consecutive levels strictly decrease, or are both 0.
    pub consecutive_decrease: bool,
    pub verdict: Verdict,
}

impl CauchyTable {
    pub fn row(&self, n1: f64, n2: f64) -> Option<&CauchyRow> {
        self.rows.iter().find(|r| r.n1 == n1 && r.n2 == n2)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("n1,n2,sup_mean,se,data_distance,bound,within_bound\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
                r.n1, r.n2, r.sup_mean, r.se, r.data_distance, r.bound, r.within_bound
            ));
        }
        s
    }
}

pub fn truncated_data_cauchy(
    spec: &ProblemSpec,
    levels: &[f64],
    grid: &Grid,
    opts: &SolveOptions,
    ens: Ensemble,
    c_emp: f64,
) -> Result<CauchyTable> {
    if levels.len() < 2 || levels.windows(2).any(|w| !(w[1] > w[0])) || !(levels[0] > 0.0) {
        return Err(Error::invalid("truncation levels must be positive and strictly increasing"));
    }
    let runs = truncated_pair_distances(spec, levels, grid, opts, ens)?;
    let m = levels.len();
    let steps = runs[0].len();
    let u0 = grid.sample(&spec.initial);
    let mut rows = Vec::new();
    for a in 0..m {
        for b in a + 1..m {
            let p = pair_index(m, a, b);
            let mut best = MeanSe::default();
            for k in 0..steps {
                let col: Vec<f64> = runs.iter().map(|r| r[k][p]).collect();
                let s = MeanSe::of(&col);
                if k == 0 || s.mean > best.mean {
                    best = s;
                }
            }
            let data = u0.truncated(levels[a]).l1_distance(&u0.truncated(levels[b]), grid);
            let bound = c_emp * data + 5.0 * best.se;
            rows.push(CauchyRow {
                n1: levels[a],
                n2: levels[b],
                sup_mean: best.mean,
                se: best.se,
                data_distance: data,
                bound,
                within_bound: best.mean <= bound,
            });
        }
    }
    let consecutive: Vec<f64> = (0..m - 1).map(|a| rows[pair_index(m, a, a + 1)].sup_mean).collect();
    // Exact zeros (both levels above the data) count as converged.
    let consecutive_decrease = consecutive.windows(2).all(|w| w[1] < w[0] || (w[0] == 0.0 && w[1] == 0.0));
    let ok = consecutive_decrease && rows.iter().all(|r| r.within_bound);
    Ok(CauchyTable {
        levels: levels.to_vec(),
        c_emp,
        rows,
        consecutive_decrease,
        verdict: Verdict::from_bool(ok),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GronwallRow {
    pub time: f64,
    pub lhs_mean: f64,
    pub lhs_se: f64,
    /// E∫φ_m|u_n − u| dx.
    pub weighted_lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GronwallTrace {
    pub level: f64,
    pub c_emp: f64,
    pub data_distance: f64,
    pub rows: Vec<GronwallRow>,
    pub verdict: Verdict,
}

impl GronwallTrace {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("time,lhs_mean,lhs_se,weighted_lhs,rhs,margin\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{:.10e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                r.time, r.lhs_mean, r.lhs_se, r.weighted_lhs, r.rhs, r.margin
            ));
        }
        s
    }
}

/// Checks E‖u_n(t) − u(t)‖₁ ≤ e^{C t}(5·SE(t) + C·‖T_n u₀ − u₀‖₁) at `samples`
/// equally spaced times, with u the run from untruncated data under the
/// same noise and C = `c_emp`.
pub fn gronwall_stability(
    spec: &ProblemSpec,
    level: f64,
    grid: &Grid,
    opts: &SolveOptions,
    ens: Ensemble,
    c_emp: f64,
    weight: &TestFunction,
    samples: usize,
) -> Result<GronwallTrace> {
    if !(level > 0.0) {
        return Err(Error::invalid(format!("truncation level must be > 0, got {level}")));
    }
    let u0 = grid.sample(&spec.initial);
    let start = u0.truncated(level);
    let d0 = start.l1_distance(&u0, grid);
    let phi: Vec<f64> = grid
        .centres()
        .map(|x| weight.spatial_parts(&x[..grid.dimension]).0)
        .collect();
    let vol = grid.cell_volume();
    let samples = samples.max(1);
    let runs = parallel_map(ens.paths, ens.workers, |i| {
        let mut out = Vec::new();
        let mut next = 0usize;
        solve_coupled(spec, grid, opts, ens.key(i), vec![start.clone(), u0.clone()], |_, t, s| {
            let target = next as f64 * opts.horizon / samples as f64;
            if next <= samples && t >= target - 1e-12 {
                let plain = s[0].l1_distance(&s[1], grid);
                let weighted = vol
                    * s[0]
                        .values
                        .iter()
                        .zip(&s[1].values)
                        .zip(&phi)
                        .map(|((a, b), w)| (a - b).abs() * w)
                        .sum::<f64>();
                out.push((t, plain, weighted));
                next += 1;
            }
        })?;
        Ok(out)
    })?;
    let n = runs[0].len();
    let mut rows = Vec::with_capacity(n);
    for j in 0..n {
        let plain: Vec<f64> = runs.iter().map(|r| r[j].1).collect();
        let weighted: Vec<f64> = runs.iter().map(|r| r[j].2).collect();
        let s = MeanSe::of(&plain);
        let t = runs[0][j].0;
        let rhs = (c_emp * t).exp() * (5.0 * s.se + c_emp * d0);
        rows.push(GronwallRow {
            time: t,
            lhs_mean: s.mean,
            lhs_se: s.se,
            weighted_lhs: MeanSe::of(&weighted).mean,
            rhs,
            margin: rhs - s.mean,
        });
    }
    let ok = rows.iter().all(|r| r.margin >= 0.0);
    Ok(GronwallTrace {
        level,
        c_emp,
        data_distance: d0,
        rows,
        verdict: Verdict::from_bool(ok),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ProblemConfig;
    use crate::solver::solve_path;

    fn grid() -> Grid {
        Grid::new(1, 128, 4.0).unwrap()
    }

    #[test]
    fn coupled_run_matches_single_solve() {
        let spec = ProblemConfig::default().build().unwrap();
        let g = grid();
        let opts = SolveOptions::new(0.05, 0.2);
        let key = SeedKey::new(5, 2);
        let single = solve_path(&spec, &g, &opts, key).unwrap();
        let mut last = None;
        solve_coupled(&spec, &g, &opts, key, vec![g.sample(&spec.initial)], |_, _, s| last = Some(s[0].clone()))
            .unwrap();
        assert_eq!(last.unwrap().values, single.last().values);
    }

    #[test]
    fn equal_data_gives_zero_ratio() {
        let spec = ProblemConfig::default().build().unwrap();
        let g = grid();
        let u0 = g.sample(&spec.initial);
        let c = contraction_check(&spec, &u0, &u0, &g, &SolveOptions::new(0.05, 0.1), Ensemble::new(3, 1, 1).unwrap())
            .unwrap();
        assert!(c.mean.iter().all(|&r| r == 0.0));
        assert_eq!(c.c_emp, 0.0);
    }

    #[test]
    fn deterministic_scheme_contracts() {
        let spec = ProblemConfig::default().deterministic().build().unwrap();
        let g = grid();
        let u0 = g.sample(&spec.initial);
        let v0 = Field::new(u0.values.iter().map(|v| 0.5 * v + 0.1 * v * v).collect(), 0.0);
        let c = contraction_check(&spec, &u0, &v0, &g, &SolveOptions::new(0.05, 0.5), Ensemble::new(1, 1, 1).unwrap())
            .unwrap();
        assert!(c.is_contractive(1e-12), "{}", c.max_step_increase);
        assert_eq!(c.mean[0], 1.0);
    }

    #[test]
    fn cauchy_levels_above_sup_coincide() {
        let spec = ProblemConfig::default().build().unwrap();
        let t = truncated_data_cauchy(
            &spec,
            &[0.25, 0.5, 2.0, 3.0],
            &grid(),
            &SolveOptions::new(0.05, 0.1),
            Ensemble::new(4, 9, 1).unwrap(),
            1.0,
        )
        .unwrap();
        assert_eq!(t.row(2.0, 3.0).unwrap().sup_mean, 0.0);
        let d = |a, b| t.row(a, b).unwrap();
        // triangle inequality up to Monte Carlo error
        let lhs = d(0.25, 2.0).sup_mean;
        let rhs = d(0.25, 0.5).sup_mean + d(0.5, 2.0).sup_mean;
        assert!(lhs <= rhs + 2.0 * d(0.25, 2.0).se + 1e-12);
    }

    #[test]
    fn gronwall_starts_at_data_distance() {
        let spec = ProblemConfig::default().build().unwrap();
        let g = grid();
        let w = TestFunction::weighted_ramp(1.0, 0.5, 0.1, 0.1).unwrap();
        let tr = gronwall_stability(&spec, 0.5, &g, &SolveOptions::new(0.05, 0.1), Ensemble::new(3, 2, 1).unwrap(), 1.2, &w, 4)
            .unwrap();
        assert_eq!(tr.rows.len(), 5);
        assert_eq!(tr.rows[0].lhs_mean, tr.data_distance);
        assert!(tr.verdict.passed());
        let huge = gronwall_stability(&spec, 50.0, &g, &SolveOptions::new(0.05, 0.1), Ensemble::new(2, 2, 1).unwrap(), 1.2, &w, 4)
            .unwrap();
        assert!(huge.rows.iter().all(|r| r.lhs_mean == 0.0) && huge.verdict.passed());
    }
}

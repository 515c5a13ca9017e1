//! Vanishing-viscosity Cauchy ladder: E‖u_ε − u_{ε/2}‖_{L¹(Π_T)} on jointly
//! refined grids under shared noise.

use serde::Serialize;

use super::contraction::Ensemble;
use super::Verdict;
use crate::error::{Error, Result};
use crate::model::ProblemSpec;
use crate::solver::{solve_path, Field, Grid, SolveOptions, StoreTimes};
use crate::stats::{parallel_map, MeanSe};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Rung {
    pub epsilon: f64,
    pub cells: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RungInfo {
    pub epsilon: f64,
    pub cells: usize,
    pub dx: f64,
    /// Δx·max|f′(u)|/2 over the visited states.
    pub scheme_viscosity: f64,
    /// Scheme viscosity exceeds ε/4, so the rung does not resolve ε.
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistanceRow {
    pub coarse: usize,
    pub fine: usize,
    pub mean: f64,
    pub se: f64,
    /// log₂ of the previous distance over this one.
    pub order: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ViscosityTable {
    pub rungs: Vec<RungInfo>,
    pub distances: Vec<DistanceRow>,
    pub strictly_decreasing: bool,
    pub verdict: Verdict,
}

impl ViscosityTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("eps_coarse,eps_fine,cells_coarse,cells_fine,mean,se,order,flagged\n");
        for d in &self.distances {
            let (a, b) = (&self.rungs[d.coarse], &self.rungs[d.fine]);
            s.push_str(&format!(
                "{},{},{},{},{:.16e},{:.16e},{},{}\n",
                a.epsilon,
                b.epsilon,
                a.cells,
                b.cells,
                d.mean,
                d.se,
                d.order.map_or(String::new(), |o| format!("{o:.6}")),
                a.flagged || b.flagged
            ));
        }
        s
    }
}

/// Cell averages of `fine` on the coarser grid.
pub fn restrict(fine: &[f64], fine_grid: &Grid, coarse_grid: &Grid) -> Result<Vec<f64>> {
    let (nf, nc) = (fine_grid.cells_per_side, coarse_grid.cells_per_side);
    if fine_grid.dimension != coarse_grid.dimension || nf % nc != 0 || fine.len() != fine_grid.len() {
        return Err(Error::invalid(format!("cannot restrict {nf} cells onto {nc}")));
    }
    let r = nf / nc;
    let mut out = vec![0.0; coarse_grid.len()];
    if fine_grid.dimension == 1 {
        for (i, o) in out.iter_mut().enumerate() {
            *o = fine[i * r..(i + 1) * r].iter().sum::<f64>() / r as f64;
        }
    } else {
        for j in 0..nf {
            for i in 0..nf {
                out[(j / r) * nc + i / r] += fine[j * nf + i];
            }
        }
        let w = (r * r) as f64;
        out.iter_mut().for_each(|v| *v /= w);
    }
    Ok(out)
}

fn max_wave_speed(spec: &ProblemSpec, sup: f64) -> f64 {
    let n = 64;
    let mut m = 0.0f64;
    for comp in &spec.flux {
        if comp.map.is_zero() {
            continue;
        }
        for i in 0..=n {
            let u = -sup + 2.0 * sup * i as f64 / n as f64;
            m = m.max(comp.map.slope(u).abs());
        }
    }
    m
}

/// Runs every rung on each path with the same seed and compares consecutive
/// rungs on the coarser grid, integrating in time by the trapezoid rule over
/// `samples + 1` equally spaced times.
pub fn viscosity_convergence(
    spec: &ProblemSpec,
    rungs: &[Rung],
    half_width: f64,
    horizon: f64,
    ens: Ensemble,
    samples: usize,
) -> Result<ViscosityTable> {
    if rungs.len() < 2 {
        return Err(Error::invalid("need at least two rungs"));
    }
    if rungs.windows(2).any(|w| !(w[1].epsilon < w[0].epsilon) || w[1].cells % w[0].cells != 0) {
        return Err(Error::invalid("rungs need decreasing eps and nested grids"));
    }
    let grids = rungs
        .iter()
        .map(|r| Grid::new(spec.dimension, r.cells, half_width))
        .collect::<Result<Vec<_>>>()?;
    let samples = samples.max(1);
    let times: Vec<f64> = (0..=samples).map(|k| horizon * k as f64 / samples as f64).collect();
    let h = horizon / samples as f64;

    let per_path = parallel_map(ens.paths, ens.workers, |i| {
        let mut runs: Vec<Vec<Field>> = Vec::with_capacity(rungs.len());
        let mut sup = 0.0f64;
        for (r, g) in rungs.iter().zip(&grids) {
            let opts = SolveOptions::new(r.epsilon, horizon).store(StoreTimes::At(times.clone()));
            let p = solve_path(spec, g, &opts, ens.key(i))?;
            sup = p.snapshots.iter().fold(sup, |s, f| s.max(f.sup()));
            runs.push(p.snapshots);
        }
        let mut dists = Vec::with_capacity(rungs.len() - 1);
        for k in 0..rungs.len() - 1 {
            let (gc, gf) = (&grids[k], &grids[k + 1]);
            let mut acc = 0.0;
            for (j, (a, b)) in runs[k].iter().zip(&runs[k + 1]).enumerate() {
                let coarse = restrict(&b.values, gf, gc)?;
                let d = gc.cell_volume() * a.values.iter().zip(&coarse).map(|(x, y)| (x - y).abs()).sum::<f64>();
                let w = if j == 0 || j == samples { 0.5 } else { 1.0 };
                acc += w * h * d;
            }
            dists.push(acc);
        }
        Ok((dists, sup))
    })?;

    let sup = per_path.iter().fold(0.0f64, |s, (_, v)| s.max(*v));
    let speed = max_wave_speed(spec, sup);
    let infos: Vec<RungInfo> = rungs
        .iter()
        .zip(&grids)
        .map(|(r, g)| {
            let sv = 0.5 * g.dx() * speed;
            RungInfo {
                epsilon: r.epsilon,
                cells: r.cells,
                dx: g.dx(),
                scheme_viscosity: sv,
                flagged: sv > 0.25 * r.epsilon,
            }
        })
        .collect();
    let mut distances: Vec<DistanceRow> = Vec::new();
    for k in 0..rungs.len() - 1 {
        let col: Vec<f64> = per_path.iter().map(|(d, _)| d[k]).collect();
        let s = MeanSe::of(&col);
        let order = distances
            .last()
            .and_then(|p| (p.mean > 0.0 && s.mean > 0.0).then(|| (p.mean / s.mean).log2()));
        distances.push(DistanceRow {
            coarse: k,
            fine: k + 1,
            mean: s.mean,
            se: s.se,
            order,
        });
    }
    let strictly_decreasing = distances.windows(2).all(|w| w[1].mean < w[0].mean);
    Ok(ViscosityTable {
        rungs: infos,
        distances,
        strictly_decreasing,
        verdict: Verdict::from_bool(strictly_decreasing),
    })
}

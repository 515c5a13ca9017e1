use serde::Serialize;

use crate::error::Result;
use crate::model::{KirchhoffTable, ProblemSpec};
use crate::solver::{replay, Field, Grid, PathSample, StepObserver, StepView};

use super::forward_grad_sq;

/// Norms of one stored state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NormRow {
    pub time: f64,
    pub l1: f64,
    pub l2_sq: f64,
}

pub fn norm_table(path: &PathSample) -> Vec<NormRow> {
    path.snapshots
        .iter()
        .map(|f: &Field| NormRow {
            time: f.time,
            l1: f.l1(&path.grid),
            l2_sq: f.l2_sq(&path.grid),
        })
        .collect()
}

/// Streams Σ_k dt Δx^d Σ_i |D_h G(T_ℓ(u^k))_i|² for several levels ℓ, with
/// forward differences.
pub struct KirchhoffEnergy {
    grid: Grid,
    levels: Vec<f64>,
    table: KirchhoffTable,
    /// G(u) on the grid, then G(T_ℓ u) per level.
    full: Vec<f64>,
    buf: Vec<f64>,
    pub totals: Vec<f64>,
}

impl KirchhoffEnergy {
    pub fn new(spec: &ProblemSpec, grid: Grid, levels: Vec<f64>) -> Result<Self> {
        let top = levels.iter().cloned().fold(1.0, f64::max);
        Ok(Self {
            table: KirchhoffTable::new(spec, top)?,
            totals: vec![0.0; levels.len()],
            full: vec![0.0; grid.len()],
            buf: vec![0.0; grid.len()],
            grid,
            levels,
        })
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }
}

impl StepObserver for KirchhoffEnergy {
    fn on_step(&mut self, v: &StepView) {
        let w = v.dt * self.grid.cell_volume();
        for (g, &u) in self.full.iter_mut().zip(v.state) {
            *g = self.table.eval(u);
        }
        // G is nondecreasing, so G(T_ℓ u) = clamp(G(u), G(−ℓ), G(ℓ)).
        for (l, &level) in self.levels.iter().enumerate() {
            let (lo, hi) = (self.table.eval(-level), self.table.eval(level));
            for (b, &g) in self.buf.iter_mut().zip(&self.full) {
                *b = g.clamp(lo, hi);
            }
            let s: f64 = (0..self.grid.len()).map(|k| forward_grad_sq(&self.grid, &self.buf, k)).sum();
            self.totals[l] += w * s;
        }
    }

}

/// Truncated Kirchhoff energy of a stored every-step path.
pub fn kirchhoff_energy(path: &PathSample, level: f64) -> Result<f64> {
    let mut obs = KirchhoffEnergy::new(&path.spec, path.grid, vec![level])?;
    replay(path, &mut [&mut obs])?;
    Ok(obs.totals[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{InitialData, ScalarMap};
    use crate::solver::Field;

    #[test]
    fn heat_energy_of_linear_ramp() {
        let spec = ProblemSpec::zero(1, InitialData::zero())
            .unwrap()
            .with_diffusion(ScalarMap::new("id", |r| r).with_slope(|_| 1.0));
        let grid = Grid::new(1, 16, 1.0).unwrap();
        // u_i = 0.1 i: only the wrap-around difference exceeds the slope
        let f = Field::new((0..16).map(|i| 0.1 * i as f64).collect(), 0.0);
        let path = PathSample::from_fields(&spec, grid, 0.0, 0.5, vec![f.clone(), f]).unwrap();
        let dx = grid.dx();
        let e = kirchhoff_energy(&path, 10.0).unwrap();
        let oracle = 0.5 * dx * (15.0 * (0.1 / dx).powi(2) + (1.5 / dx).powi(2));
        assert!((e - oracle).abs() < 1e-9 * oracle, "{e} vs {oracle}");
        // truncation at 0.5 flattens everything above
        let e2 = kirchhoff_energy(&path, 0.5).unwrap();
        let oracle2 = 0.5 * dx * (5.0 * (0.1 / dx).powi(2) + (0.5 / dx).powi(2));
        assert!((e2 - oracle2).abs() < 1e-9 * oracle2);
    }
}

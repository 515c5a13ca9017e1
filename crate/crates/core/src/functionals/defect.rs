use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{KirchhoffTable, ProblemSpec};
use crate::solver::{replay, Grid, PathSample, StepObserver, StepView};

use super::forward_grad_sq;

/// |D_h G(u)|² + ε|D_h u|² + σ²(u)/2 at cell `k`, forward differences.
#[inline]
pub(crate) fn band_bracket(
    spec: &ProblemSpec,
    table: &KirchhoffTable,
    grid: &Grid,
    epsilon: f64,
    u: &[f64],
    k: usize,
) -> f64 {
    let dx = grid.dx();
    let gk = table.eval(u[k]);
    let mut s = 0.0;
    for axis in 0..grid.dimension {
        let j = grid.neighbour(k, axis, 1);
        let dg = (table.eval(u[j]) - gk) / dx;
        s += dg * dg;
    }
    if epsilon > 0.0 {
        s += epsilon * forward_grad_sq(grid, u, k);
    }
    let sig = spec.sigma.eval(u[k]);
    s + 0.5 * sig * sig
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DefectCell {
    pub step: usize,
    pub cell: usize,
    pub density: f64,
}

/// Space-time histogram of (K/δ)·1_{ℓ<|u|<ℓ+δ}·(|D_h G(u)|² + ε|D_h u|² +
/// σ²(u)/2) over the left points of every step.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DefectMeasure {
    pub level: f64,
    pub width: f64,
    pub bound: f64,
    pub epsilon: f64,
    pub dt: f64,
    pub cell_volume: f64,
    /// Nonzero cells only.
    pub cells: Vec<DefectCell>,
    /// Δx^d·dt·Σ density.
    pub total_mass: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DefectSummary {
    pub level: f64,
    pub width: f64,
    pub bound: f64,
    pub epsilon: f64,
    pub total_mass: f64,
    pub standard_error: f64,
}

struct Collector<'a> {
    spec: &'a ProblemSpec,
    grid: Grid,
    epsilon: f64,
    table: KirchhoffTable,
    level: f64,
    width: f64,
    scale: f64,
    cells: Vec<DefectCell>,
}

impl StepObserver for Collector<'_> {
    fn on_step(&mut self, v: &StepView) {
        for (k, &u) in v.state.iter().enumerate() {
            let a = u.abs();
            if a > self.level && a < self.level + self.width {
                let b = band_bracket(self.spec, &self.table, &self.grid, self.epsilon, v.state, k);
                self.cells.push(DefectCell {
                    step: v.index,
                    cell: k,
                    density: self.scale * b,
                });
            }
        }
    }
}

/// Defect measure of a stored every-step path.
pub fn defect_measure(path: &PathSample, level: f64, width: f64, bound: f64) -> Result<DefectMeasure> {
    if !(level > 0.0 && width > 0.0 && bound > 0.0) {
        return Err(Error::invalid("defect measure needs level, width and K > 0"));
    }
    let mut c = Collector {
        spec: &path.spec,
        grid: path.grid,
        epsilon: path.epsilon,
        table: KirchhoffTable::new(&path.spec, level + width)?,
        level,
        width,
        scale: bound / width,
        cells: Vec::new(),
    };
    replay(path, &mut [&mut c])?;
    let vol = path.grid.cell_volume();
    let total = vol * path.dt * c.cells.iter().map(|d| d.density).sum::<f64>();
    Ok(DefectMeasure {
        level,
        width,
        bound,
        epsilon: path.epsilon,
        dt: path.dt,
        cell_volume: vol,
        cells: c.cells,
        total_mass: total,
    })
}

impl DefectMeasure {
    /// ∫ψ dμ with ψ evaluated at the left time point and cell centre.
    pub fn integrate(&self, mut psi: impl FnMut(f64, usize) -> f64) -> f64 {
        self.cell_volume
            * self.dt
            * self
                .cells
                .iter()
                .map(|c| c.density * psi(c.step as f64 * self.dt, c.cell))
                .sum::<f64>()
    }

    /// CSV with header `step,cell,density` (2-D: `step,i,j,density`).
    pub fn histogram_csv(&self, grid: &Grid) -> String {
        let mut out = String::new();
        if grid.dimension == 1 {
            out.push_str("step,cell,density\n");
            for c in &self.cells {
                let _ = writeln!(out, "{},{},{:.16e}", c.step, c.cell, c.density);
            }
        } else {
            out.push_str("step,i,j,density\n");
            let n = grid.cells_per_side;
            for c in &self.cells {
                let _ = writeln!(out, "{},{},{},{:.16e}", c.step, c.cell / n, c.cell % n, c.density);
            }
        }
        out
    }

    pub fn summary(&self, standard_error: f64) -> DefectSummary {
        DefectSummary {
            level: self.level,
            width: self.width,
            bound: self.bound,
            epsilon: self.epsilon,
            total_mass: self.total_mass,
            standard_error,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{InitialData, ScalarMap};
    use crate::solver::Field;

    fn const_sigma_spec(c: f64) -> ProblemSpec {
        ProblemSpec::zero(1, InitialData::zero())
            .unwrap()
            .with_sigma(ScalarMap::new("const", move |_| c).with_slope(|_| 0.0))
    }

    #[test]
    fn bounded_path_has_no_mass() {
        let spec = const_sigma_spec(1.0);
        let grid = Grid::new(1, 16, 1.0).unwrap();
        let f = Field::new(vec![0.3; 16], 0.0);
        let path = PathSample::from_fields(&spec, grid, 0.1, 0.01, vec![f.clone(), f.clone(), f]).unwrap();
        assert_eq!(defect_measure(&path, 0.5, 0.1, 1.0).unwrap().total_mass, 0.0);
    }

    #[test]
    fn single_cell_step_in_band() {
        let c = 0.7;
        let spec = const_sigma_spec(c);
        let grid = Grid::new(1, 16, 1.0).unwrap();
        let mut f0 = Field::zeros(&grid);
        f0.values[3] = 1.05;
        let f1 = Field::zeros(&grid);
        let dt = 0.01;
        let path = PathSample::from_fields(&spec, grid, 0.0, dt, vec![f0, f1.clone(), f1]).unwrap();
        // Φ = 0 so the gradient part vanishes
        let (k, d) = (2.0, 0.1);
        let mu = defect_measure(&path, 1.0, d, k).unwrap();
        let oracle = (k / d) * (c * c / 2.0) * grid.dx() * dt;
        assert!((mu.total_mass - oracle).abs() < 1e-15);
        assert_eq!(mu.cells.len(), 1);
        let mu2 = defect_measure(&path, 1.0, d, 2.0 * k).unwrap();
        assert!((mu2.total_mass - 2.0 * mu.total_mass).abs() < 1e-15);
        assert!(mu.histogram_csv(&grid).starts_with("step,cell,density\n0,3,"));
    }
}

use serde::Serialize;

use crate::error::Result;
use crate::model::{EntropyTriple, KirchhoffTable, ProblemSpec};
use crate::solver::{replay, solve, Field, Grid, JumpView, PathSample, SolveOptions, StepObserver, StepView};
use crate::noise::SeedKey;
use crate::stats::{parallel_map, MeanSe};
use crate::verify::{Ensemble, PsiCell, TestFunction};

use super::centred_grad_sq;

/// Cells of the box boundary ring that ψ must avoid.
pub const BOUNDARY_RING: usize = 2;

/// Terms of the discrete Itô–Lévy identity for ∫S(u)ψ dx:
/// terminal − initial = time + diffusion + flux + brownian + ito
/// + jump_martingale + jump_correction − dissipation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ItoReport {
    pub time: f64,
    pub diffusion: f64,
    pub flux: f64,
    pub brownian: f64,
    pub ito: f64,
    pub jump_martingale: f64,
    pub jump_correction: f64,
    pub dissipation: f64,
    pub initial: f64,
    pub terminal: f64,
}

impl ItoReport {
    /// Signed residual; zero for an exact solution of the continuum problem.
    pub fn total(&self) -> f64 {
        self.time + self.diffusion + self.flux + self.brownian + self.ito + self.jump_martingale
            + self.jump_correction
            - self.dissipation
            + self.initial
            - self.terminal
    }
}

/// Streaming evaluation of the identity on one path. Stochastic integrals
/// are left-point sums against the path's increments and jump events.
pub struct ItoLevyResidual<'a> {
    spec: &'a ProblemSpec,
    grid: Grid,
    epsilon: f64,
    triple: &'a EntropyTriple,
    psi: TestFunction,
    cells: Vec<PsiCell>,
    /// Cells whose G value is needed for the dissipation gradients.
    stencil: Vec<usize>,
    table: KirchhoffTable,
    gbuf: Vec<f64>,
    dt: f64,
    pub report: ItoReport,
}

impl<'a> ItoLevyResidual<'a> {
    pub fn new(
        spec: &'a ProblemSpec,
        grid: Grid,
        epsilon: f64,
        triple: &'a EntropyTriple,
        psi: TestFunction,
    ) -> Result<Self> {
        let cells = psi.cells(&grid, BOUNDARY_RING)?;
        let mut stencil: Vec<usize> = Vec::with_capacity(cells.len() * 5);
        for c in &cells {
            stencil.push(c.index);
            for axis in 0..grid.dimension {
                stencil.push(grid.neighbour(c.index, axis, 1));
                stencil.push(grid.neighbour(c.index, axis, -1));
            }
        }
        stencil.sort_unstable();
        stencil.dedup();
        Ok(Self {
            spec,
            grid,
            epsilon,
            triple,
            psi,
            cells,
            stencil,
            table: KirchhoffTable::new(spec, spec.constants.state_bound)?,
            gbuf: vec![0.0; grid.len()],
            dt: 0.0,
            report: ItoReport::default(),
        })
    }

    fn pairing(&self, u: &[f64], t: f64) -> f64 {
        let (theta, _) = self.psi.temporal.eval(t);
        let s = &self.triple.beta;
        self.grid.cell_volume() * theta * self.cells.iter().map(|c| s.value(u[c.index]) * c.value).sum::<f64>()
    }
}

impl StepObserver for ItoLevyResidual<'_> {
    fn on_step(&mut self, v: &StepView) {
        if v.index == 0 {
            self.report.initial = self.pairing(v.state, v.time);
        }
        self.dt = v.dt;
        let (theta, dtheta) = self.psi.temporal.eval(v.time);
        if theta == 0.0 && dtheta == 0.0 {
            return;
        }
        let spec = self.spec;
        let beta = &self.triple.beta;
        let vol = self.grid.cell_volume();
        let dt = v.dt;
        let eps = self.epsilon;
        let d = self.grid.dimension;
        for &k in &self.stencil {
            self.gbuf[k] = self.table.eval(v.state[k]);
        }
        let jumps = spec.has_jumps();
        let r = &mut self.report;
        for c in &self.cells {
            let u = v.state[c.index];
            let (s, s1, s2) = (beta.value(u), beta.slope(u), beta.curvature(u));
            let w = vol * c.value;
            r.time += dt * vol * s * c.value * dtheta;
            r.diffusion += dt * vol * (self.triple.nu(u) + eps * s) * c.lap * theta;
            let mut fl = 0.0;
            for axis in 0..d {
                fl += self.triple.zeta(axis, u) * c.grad[axis];
            }
            r.flux += dt * vol * fl * theta;
            let sig = spec.sigma.eval(u);
            r.brownian += w * theta * sig * s1 * v.dw;
            r.ito += dt * w * theta * 0.5 * sig * sig * s2;
            if jumps {
                let mut comp = 0.0;
                let mut corr = 0.0;
                for &(z, wz) in spec.marks.nodes() {
                    let eta = spec.eta.eval(u, z);
                    let ds = beta.value(u + eta) - s;
                    comp += wz * ds;
                    corr += wz * (ds - eta * s1);
                }
                r.jump_martingale -= dt * w * theta * comp;
                r.jump_correction += dt * w * theta * corr;
            }
            if s2 != 0.0 {
                let mut g2 = centred_grad_sq(&self.grid, &self.gbuf, c.index);
                if eps > 0.0 {
                    g2 += eps * centred_grad_sq(&self.grid, v.state, c.index);
                }
                r.dissipation += dt * w * theta * s2 * g2;
            }
        }
    }

    fn on_jump(&mut self, j: &JumpView) {
        let (theta, _) = self.psi.temporal.eval(j.step as f64 * self.dt);
        if theta == 0.0 {
            return;
        }
        let beta = &self.triple.beta;
        let vol = self.grid.cell_volume();
        let mut acc = 0.0;
        for c in &self.cells {
            let u = j.pre[c.index];
            let eta = self.spec.eta.eval(u, j.mark);
            acc += (beta.value(u + eta) - beta.value(u)) * c.value;
        }
        self.report.jump_martingale += vol * theta * acc;
    }

    fn finish(&mut self, last: &Field) {
        self.report.terminal = self.pairing(&last.values, last.time);
    }
}

/// Residual of the discrete Itô–Lévy identity on a stored every-step path,
/// with S = `triple.beta`.
pub fn ito_levy_residual(path: &PathSample, triple: &EntropyTriple, psi: &TestFunction) -> Result<ItoReport> {
    let mut obs = ItoLevyResidual::new(&path.spec, path.grid, path.epsilon, triple, *psi)?;
    replay(path, &mut [&mut obs])?;
    Ok(obs.report)
}

/// Identity residual streamed along a fresh solve with the noise of `ens`,
/// one report per path.
pub fn ito_levy_ensemble(
    spec: &ProblemSpec,
    grid: &Grid,
    opts: &SolveOptions,
    ens: Ensemble,
    triple: &EntropyTriple,
    psi: &TestFunction,
) -> Result<(MeanSe, Vec<ItoReport>)> {
    let reports = parallel_map(ens.paths, ens.workers, |i| {
        let mut obs = ItoLevyResidual::new(spec, *grid, opts.epsilon, triple, *psi)?;
        solve(spec, grid, opts, ens.key(i), None, &mut [&mut obs])?;
        Ok(obs.report)
    })?;
    let totals: Vec<f64> = reports.iter().map(ItoReport::total).collect();
    Ok((MeanSe::of(&totals), reports))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LadderRung {
    pub cells: usize,
    pub dx: f64,
    pub dt: f64,
    /// dt + Δx².
    pub h: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ItoLadder {
    pub rungs: Vec<LadderRung>,
    /// log|residual| against log h between consecutive rungs.
    pub orders: Vec<f64>,
    /// Least-squares slope over all rungs.
    pub order: f64,
}

/// Residual of one noise-free path per grid in `cells`.
pub fn ito_levy_ladder(
    spec: &ProblemSpec,
    cells: &[usize],
    half_width: f64,
    opts: &SolveOptions,
    triple: &EntropyTriple,
    psi: &TestFunction,
) -> Result<ItoLadder> {
    if spec.has_noise() {
        return Err(crate::error::Error::invalid("the refinement ladder needs a noise-free problem"));
    }
    let mut rungs = Vec::with_capacity(cells.len());
    for &n in cells {
        let grid = Grid::new(spec.dimension, n, half_width)?;
        let mut obs = ItoLevyResidual::new(spec, grid, opts.epsilon, triple, *psi)?;
        let dt = solve(spec, &grid, opts, SeedKey::new(0, 0), None, &mut [&mut obs])?.dt;
        let dx = grid.dx();
        rungs.push(LadderRung {
            cells: n,
            dx,
            dt,
            h: dt + dx * dx,
            residual: obs.report.total(),
        });
    }
    let slope = |a: &LadderRung, b: &LadderRung| (a.residual.abs() / b.residual.abs()).ln() / (a.h / b.h).ln();
    let orders = rungs.windows(2).map(|w| slope(&w[0], &w[1])).collect();
    let xs: Vec<f64> = rungs.iter().map(|r| r.h.ln()).collect();
    let ys: Vec<f64> = rungs.iter().map(|r| r.residual.abs().ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(ItoLadder {
        rungs,
        orders,
        order: sxy / sxx,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_entropy_triple, EntropyFn, ProblemConfig};
    use crate::noise::SeedKey;
    use crate::solver::{solve, SolveOptions, StoreTimes};
    use crate::verify::Temporal;

    fn path() -> PathSample {
        let spec = ProblemConfig::default().build().unwrap();
        let grid = Grid::new(1, 64, 4.0).unwrap();
        let opts = SolveOptions::new(0.05, 0.2).store(StoreTimes::EveryStep);
        solve(&spec, &grid, &opts, SeedKey::new(31, 0), None, &mut []).unwrap()
    }

    #[test]
    fn zero_entropy_gives_zero() {
        let p = path();
        let t = make_entropy_triple(&p.spec, EntropyFn::zero(), (-2.5, 2.5), 64, true).unwrap();
        let psi = TestFunction::bump([0.0, 0.0], 1.5, Temporal::Constant).unwrap();
        let r = ito_levy_residual(&p, &t, &psi).unwrap();
        assert_eq!(r.total(), 0.0);
    }

    #[test]
    fn linear_in_entropy() {
        let p = path();
        let s1 = EntropyFn::quadratic();
        let s2 = EntropyFn::smooth_abs(0.2).shifted(0.3);
        let t1 = make_entropy_triple(&p.spec, s1.clone(), (-2.5, 2.5), 64, false).unwrap();
        let t2 = make_entropy_triple(&p.spec, s2.clone(), (-2.5, 2.5), 64, false).unwrap();
        let t12 = make_entropy_triple(&p.spec, s1.add(&s2), (-2.5, 2.5), 64, false).unwrap();
        let psi = TestFunction::bump([0.2, 0.0], 1.5, Temporal::Ramp { hold: 0.05, ramp: 0.1 }).unwrap();
        let a = ito_levy_residual(&p, &t1, &psi).unwrap().total();
        let b = ito_levy_residual(&p, &t2, &psi).unwrap().total();
        let c = ito_levy_residual(&p, &t12, &psi).unwrap().total();
        assert!((a + b - c).abs() < 1e-9 * (1.0 + c.abs()), "{a} + {b} vs {c}");
    }

    #[test]
    fn rejects_support_near_boundary() {
        let p = path();
        let t = make_entropy_triple(&p.spec, EntropyFn::quadratic(), (-2.5, 2.5), 64, true).unwrap();
        let psi = TestFunction::bump([3.5, 0.0], 1.0, Temporal::Constant).unwrap();
        assert!(ito_levy_residual(&p, &t, &psi).is_err());
    }
}

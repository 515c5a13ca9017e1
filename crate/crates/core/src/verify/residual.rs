//! Renormalized entropy-inequality residuals.

use serde::Serialize;

use super::{PsiCell, TestFunction};
use crate::error::{Error, Result};
use crate::functionals::{centred_grad_sq, forward_grad_sq};
use crate::model::{EntropyTriple, KirchhoffTable, ProblemSpec, TruncationFamily};
use crate::solver::{replay, Field, Grid, JumpView, PathSample, StepObserver, StepView};
use crate::stats::MeanSe;

const BOUNDARY_RING: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(if self.passed() { "PASS" } else { "FAIL" })
    }
}

/// C_bud·(Δx + √dt).
pub fn discretization_budget(c_bud: f64, dx: f64, dt: f64) -> f64 {
    c_bud * (dx + dt.sqrt())
}

/// Terms of the renormalized inequality, LHS minus RHS:
/// time + diffusion + flux + brownian + ito + jump_martingale +
/// jump_correction − dissipation + initial + measure − terminal.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ResidualTerms {
    pub time: f64,
    pub diffusion: f64,
    pub flux: f64,
    pub brownian: f64,
    pub ito: f64,
    pub jump_martingale: f64,
    pub jump_correction: f64,
    pub dissipation: f64,
    pub initial: f64,
    pub measure: f64,
    pub terminal: f64,
}

impl ResidualTerms {
    pub fn total(&self) -> f64 {
        self.time + self.diffusion + self.flux + self.brownian + self.ito + self.jump_martingale
            + self.jump_correction
            - self.dissipation
            + self.initial
            + self.measure
            - self.terminal
    }

    fn add_scaled(&mut self, o: &ResidualTerms, s: f64) {
        self.time += s * o.time;
        self.diffusion += s * o.diffusion;
        self.flux += s * o.flux;
        self.brownian += s * o.brownian;
        self.ito += s * o.ito;
        self.jump_martingale += s * o.jump_martingale;
        self.jump_correction += s * o.jump_correction;
        self.dissipation += s * o.dissipation;
        self.initial += s * o.initial;
        self.measure += s * o.measure;
        self.terminal += s * o.terminal;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualReport {
    /// Ensemble means of the individual terms.
    pub terms: ResidualTerms,
    pub per_path: Vec<f64>,
    pub mean: f64,
    pub se: f64,
    pub budget: f64,
    pub verdict: Verdict,
}

impl ResidualReport {
    pub fn from_paths(per_path: Vec<ResidualTerms>, budget: f64) -> Self {
        let totals: Vec<f64> = per_path.iter().map(|t| t.total()).collect();
        let stats = MeanSe::of(&totals);
        let mut terms = ResidualTerms::default();
        let m = per_path.len().max(1) as f64;
        for t in &per_path {
            terms.add_scaled(t, 1.0 / m);
        }
        Self {
            terms,
            per_path: totals,
            mean: stats.mean,
            se: stats.se,
            budget,
            verdict: Verdict::from_bool(stats.mean >= -(budget + 5.0 * stats.se)),
        }
    }
}

/// Streaming evaluation of the renormalized inequality for β(T_ℓ u) on one
/// path, with the defect measure μ^K_{ℓ,δ} as allowance.
pub struct RenormalizedResidual<'a> {
    spec: &'a ProblemSpec,
    grid: Grid,
    epsilon: f64,
    triple: &'a EntropyTriple,
    trunc: TruncationFamily,
    bound: f64,
    psi: TestFunction,
    cells: Vec<PsiCell>,
    stencil: Vec<usize>,
    table: KirchhoffTable,
    g_trunc: Vec<f64>,
    g_full: Vec<f64>,
    pub terms: ResidualTerms,
}

impl<'a> RenormalizedResidual<'a> {
    pub fn new(
        spec: &'a ProblemSpec,
        grid: Grid,
        epsilon: f64,
        triple: &'a EntropyTriple,
        trunc: TruncationFamily,
        bound: f64,
        psi: TestFunction,
    ) -> Result<Self> {
        if triple.bound > bound * (1.0 + 1e-12) {
            return Err(Error::BoundMismatch {
                triple_bound: triple.bound,
                measure_bound: bound,
            });
        }
        if !triple.convex {
            return Err(Error::NotConvex { at: f64::NAN, value: f64::NAN });
        }
        // β′(0) = 0 is what the jump terms need; without jumps the shifted
        // Kružkov-type entropies are admissible.
        if spec.has_jumps() && !triple.zero_slope_at_origin {
            return Err(Error::NonzeroSlopeAtOrigin(triple.beta.slope(0.0)));
        }
        let cells = psi.cells(&grid, BOUNDARY_RING)?;
        let mut stencil = Vec::with_capacity(cells.len() * 5);
        for c in &cells {
            stencil.push(c.index);
            for axis in 0..grid.dimension {
                stencil.push(grid.neighbour(c.index, axis, 1));
                stencil.push(grid.neighbour(c.index, axis, -1));
            }
        }
        stencil.sort_unstable();
        stencil.dedup();
        let range = spec.constants.state_bound.max(trunc.level + trunc.width);
        Ok(Self {
            spec,
            grid,
            epsilon,
            triple,
            trunc,
            bound,
            psi,
            cells,
            stencil,
            table: KirchhoffTable::new(spec, range)?,
            g_trunc: vec![0.0; grid.len()],
            g_full: vec![0.0; grid.len()],
            terms: ResidualTerms::default(),
        })
    }

    fn pairing(&self, u: &[f64], t: f64) -> f64 {
        let (theta, _) = self.psi.temporal.eval(t);
        if theta == 0.0 {
            return 0.0;
        }
        let b = &self.triple.beta;
        self.grid.cell_volume()
            * theta
            * self.cells.iter().map(|c| b.value(self.trunc.truncate(u[c.index])) * c.value).sum::<f64>()
    }
}

impl StepObserver for RenormalizedResidual<'_> {
    fn on_step(&mut self, v: &StepView) {
        if v.index == 0 {
            self.terms.initial = self.pairing(v.state, v.time);
        }
        let (theta, dtheta) = self.psi.temporal.eval(v.time);
        if theta == 0.0 && dtheta == 0.0 {
            return;
        }
        let spec = self.spec;
        let beta = &self.triple.beta;
        let vol = self.grid.cell_volume();
        let dt = v.dt;
        let eps = self.epsilon;
        let (lvl, width) = (self.trunc.level, self.trunc.width);
        for &k in &self.stencil {
            let u = v.state[k];
            self.g_full[k] = self.table.eval(u);
            self.g_trunc[k] = self.table.eval(self.trunc.truncate(u));
        }
        let jumps = spec.has_jumps();
        let scale = self.bound / width;
        let t = &mut self.terms;
        for c in &self.cells {
            let u = v.state[c.index];
            let w = vol * c.value;
            let x = self.trunc.truncate(u);
            let (b, b1, b2) = (beta.value(x), beta.slope(x), beta.curvature(x));
            t.time += dt * vol * b * c.value * dtheta;
            t.diffusion += dt * vol * (self.triple.nu(x) + eps * b) * c.lap * theta;
            let mut fl = 0.0;
            for axis in 0..self.grid.dimension {
                fl += self.triple.zeta(axis, x) * c.grad[axis];
            }
            t.flux += dt * vol * fl * theta;
            let sig = spec.sigma.eval(x);
            t.brownian += w * theta * sig * b1 * v.dw;
            t.ito += dt * w * theta * 0.5 * sig * sig * b2;
            if jumps {
                let mut comp = 0.0;
                let mut corr = 0.0;
                for &(z, wz) in spec.marks.nodes() {
                    let eta = spec.eta.eval(x, z);
                    let db = beta.value(x + eta) - b;
                    comp += wz * db;
                    corr += wz * (db - eta * b1);
                }
                t.jump_martingale -= dt * w * theta * comp;
                t.jump_correction += dt * w * theta * corr;
            }
            if b2 != 0.0 {
                t.dissipation += dt * w * theta * b2 * centred_grad_sq(&self.grid, &self.g_trunc, c.index);
            }
            let a = u.abs();
            if a > lvl && a < lvl + width {
                let mut br = forward_grad_sq(&self.grid, &self.g_full, c.index);
                if eps > 0.0 {
                    br += eps * forward_grad_sq(&self.grid, v.state, c.index);
                }
                let s = spec.sigma.eval(u);
                br += 0.5 * s * s;
                t.measure += dt * w * theta * scale * br;
            }
        }
    }

    fn on_jump(&mut self, j: &JumpView) {
        let (theta, _) = self.psi.temporal.eval(j.time);
        if theta == 0.0 {
            return;
        }
        let beta = &self.triple.beta;
        let mut acc = 0.0;
        for c in &self.cells {
            let x = self.trunc.truncate(j.pre[c.index]);
            let eta = self.spec.eta.eval(x, j.mark);
            acc += (beta.value(x + eta) - beta.value(x)) * c.value;
        }
        self.terms.jump_martingale += self.grid.cell_volume() * theta * acc;
    }

    fn finish(&mut self, last: &Field) {
        self.terms.terminal = self.pairing(&last.values, last.time);
    }
}

/// Terms of the renormalized inequality on one stored path.
pub fn residual_terms(
    path: &PathSample,
    triple: &EntropyTriple,
    trunc: TruncationFamily,
    bound: f64,
    psi: &TestFunction,
) -> Result<ResidualTerms> {
    let mut obs = RenormalizedResidual::new(&path.spec, path.grid, path.epsilon, triple, trunc, bound, *psi)?;
    replay(path, &mut [&mut obs])?;
    Ok(obs.terms)
}

/// Ensemble-mean residual with verdict PASS iff
/// mean ≥ −(C_bud(Δx + √dt) + 5·SE).
pub fn renormalized_residual(
    ensemble: &[PathSample],
    triple: &EntropyTriple,
    trunc: TruncationFamily,
    psi: &TestFunction,
    bound: f64,
    c_bud: f64,
) -> Result<ResidualReport> {
    let first = ensemble.first().ok_or_else(|| Error::invalid("empty ensemble"))?;
    let per_path = ensemble
        .iter()
        .map(|p| residual_terms(p, triple, trunc, bound, psi))
        .collect::<Result<Vec<_>>>()?;
    let budget = discretization_budget(c_bud, first.grid.dx(), first.dt);
    Ok(ResidualReport::from_paths(per_path, budget))
}

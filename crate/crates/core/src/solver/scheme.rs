use super::{Field, Grid};
use crate::error::{Error, Result};
use crate::model::ProblemSpec;

pub const CFL_HYPERBOLIC: f64 = 0.4;
pub const CFL_PARABOLIC: f64 = 0.4;

/// Largest step for which the deterministic update is monotone:
/// min(0.4Δx/(d·L_f), 0.4Δx²/(2d(L_Φ+ε)), T/min_steps).
pub fn stable_dt(spec: &ProblemSpec, grid: &Grid, epsilon: f64, horizon: f64, min_steps: usize) -> Result<f64> {
    if !(epsilon >= 0.0) {
        return Err(Error::invalid(format!("viscosity must be >= 0, got {epsilon}")));
    }
    if !(horizon > 0.0) || min_steps == 0 {
        return Err(Error::invalid("need T > 0 and at least one step"));
    }
    let d = grid.dimension as f64;
    let dx = grid.dx();
    let mut dt = horizon / min_steps as f64;
    let lf = spec.constants.lip_flux.abs();
    if lf > 0.0 {
        dt = dt.min(CFL_HYPERBOLIC * dx / (d * lf));
    }
    let lp = spec.constants.lip_diffusion.abs() + epsilon;
    if lp > 0.0 {
        dt = dt.min(CFL_PARABOLIC * dx * dx / (2.0 * d * lp));
    }
    Ok(dt)
}

/// One explicit time step of the viscous scheme with reusable scratch space.
pub struct Stepper<'a> {
    spec: &'a ProblemSpec,
    grid: Grid,
    epsilon: f64,
    dt: f64,
    has_flux: bool,
    has_diffusion: bool,
    has_sigma: bool,
    has_compensator: bool,
    plus: Vec<Vec<f64>>,
    minus: Vec<Vec<f64>>,
    potential: Vec<f64>,
    next: Vec<f64>,
}

impl<'a> Stepper<'a> {
    pub fn new(spec: &'a ProblemSpec, grid: Grid, epsilon: f64, dt: f64) -> Result<Self> {
        if spec.dimension != grid.dimension {
            return Err(Error::invalid("grid and problem dimensions differ"));
        }
        if !(dt > 0.0) || !(epsilon >= 0.0) {
            return Err(Error::invalid(format!("need dt > 0 and eps >= 0, got {dt}, {epsilon}")));
        }
        let n = grid.len();
        let has_flux = spec.flux.iter().any(|c| !c.map.is_zero());
        Ok(Self {
            spec,
            grid,
            epsilon,
            dt,
            has_flux,
            has_diffusion: !spec.diffusion.is_zero() || epsilon > 0.0,
            has_sigma: !spec.sigma.is_zero(),
            has_compensator: spec.has_jumps(),
            plus: vec![vec![0.0; n]; if has_flux { grid.dimension } else { 0 }],
            minus: vec![vec![0.0; n]; if has_flux { grid.dimension } else { 0 }],
            potential: vec![0.0; n],
            next: vec![0.0; n],
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Flux, diffusion, Brownian and compensator part of the update.
    pub fn drift(&mut self, u: &mut [f64], dw: f64) {
        let spec = self.spec;
        let grid = self.grid;
        let n = grid.cells_per_side;
        let dt = self.dt;
        let dx = grid.dx();
        let lam = dt / dx;
        let mu = dt / (dx * dx);
        let eps = self.epsilon;

        if self.has_flux {
            for (axis, comp) in spec.flux.iter().enumerate() {
                for (k, &v) in u.iter().enumerate() {
                    self.plus[axis][k] = comp.plus(v);
                    self.minus[axis][k] = comp.minus(v);
                }
            }
        }
        if self.has_diffusion {
            for (p, &v) in self.potential.iter_mut().zip(u.iter()) {
                *p = spec.diffusion.eval(v) + eps * v;
            }
        }

        for k in 0..u.len() {
            let v = u[k];
            let mut acc = v;
            for axis in 0..grid.dimension {
                let (right, left) = if grid.dimension == 1 {
                    ((k + 1) % n, (k + n - 1) % n)
                } else {
                    (grid.neighbour(k, axis, 1), grid.neighbour(k, axis, -1))
                };
                if self.has_flux {
                    let (fp, fm) = (&self.plus[axis], &self.minus[axis]);
                    let out = fp[k] + fm[right];
                    let inflow = fp[left] + fm[k];
                    acc -= lam * (out - inflow);
                }
                if self.has_diffusion {
                    let p = &self.potential;
                    acc += mu * (p[right] - 2.0 * p[k] + p[left]);
                }
            }
            if self.has_sigma {
                acc += spec.sigma.eval(v) * dw;
            }
            if self.has_compensator {
                acc -= dt * spec.compensator(v);
            }
            self.next[k] = acc;
        }
        u.copy_from_slice(&self.next);
    }

    /// u ← u + η(u; z) in every cell.
    pub fn jump(&self, u: &mut [f64], mark: f64) {
        for v in u.iter_mut() {
            *v += self.spec.eta.eval(*v, mark);
        }
    }

    /// Full step: drift, then the jumps of this step in order.
    pub fn step(&mut self, state: &mut Field, dw: f64, marks: &[f64]) -> Result<()> {
        self.drift(&mut state.values, dw);
        for &z in marks {
            self.jump(&mut state.values, z);
        }
        state.time += self.dt;
        if !state.is_finite() {
            return Err(Error::Instability {
                time: state.time,
                path_index: 0,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Constants, InitialData, ProblemConfig, ScalarMap};

    fn zero_spec() -> ProblemSpec {
        ProblemSpec::zero(1, InitialData::zero()).unwrap()
    }

    #[test]
    fn stable_dt_formula() {
        let spec = zero_spec().with_constants(Constants {
            lip_flux: 1.0,
            ..Default::default()
        });
        let grid = Grid::new(1, 20, 1.0).unwrap();
        // oracle: 0.4 * 0.1 / 1
        assert!((stable_dt(&spec, &grid, 0.0, 10.0, 1).unwrap() - 0.04).abs() < 1e-15);
        assert_eq!(stable_dt(&zero_spec(), &grid, 0.0, 1.0, 16).unwrap(), 1.0 / 16.0);
        assert!(stable_dt(&spec, &grid, -0.1, 1.0, 1).is_err());
    }

    #[test]
    fn stable_dt_scaling() {
        let spec = ProblemConfig {
            diffusion: "zero".into(),
            sigma: "zero".into(),
            eta: "zero".into(),
            ..Default::default()
        }
        .build()
        .unwrap();
        let g1 = Grid::new(1, 64, 1.0).unwrap();
        let g2 = Grid::new(1, 128, 1.0).unwrap();
        let h1 = stable_dt(&spec, &g1, 0.0, 100.0, 1).unwrap();
        let h2 = stable_dt(&spec, &g2, 0.0, 100.0, 1).unwrap();
        assert!((h1 / h2 - 2.0).abs() < 1e-12);
        let heat = zero_spec().with_diffusion(ScalarMap::new("id", |r| r).with_slope(|_| 1.0));
        let heat = heat.with_constants(Constants {
            lip_diffusion: 1.0,
            ..Default::default()
        });
        let p1 = stable_dt(&heat, &g1, 0.0, 100.0, 1).unwrap();
        let p2 = stable_dt(&heat, &g2, 0.0, 100.0, 1).unwrap();
        assert!((p1 / p2 - 4.0).abs() < 1e-12);
    }

    #[test]
    fn zero_coefficients_leave_state_unchanged() {
        let spec = zero_spec();
        let grid = Grid::new(1, 16, 1.0).unwrap();
        let mut f = Field::new((0..16).map(|i| (i as f64).sin()).collect(), 0.0);
        let before = f.values.clone();
        let mut st = Stepper::new(&spec, grid, 0.0, 0.01).unwrap();
        st.step(&mut f, 0.3, &[]).unwrap();
        assert_eq!(f.values, before);
    }

    #[test]
    fn advection_conserves_mass() {
        let spec = ProblemConfig {
            flux: "linear-advection".into(),
            diffusion: "zero".into(),
            sigma: "zero".into(),
            eta: "zero".into(),
            ..Default::default()
        }
        .build()
        .unwrap();
        let grid = Grid::new(1, 32, 1.0).unwrap();
        let mut f = Field::new((0..32).map(|i| ((i * 7) % 5) as f64).collect(), 0.0);
        let m0 = f.mass(&grid);
        let mut st = Stepper::new(&spec, grid, 0.0, 0.02).unwrap();
        st.step(&mut f, 0.0, &[]).unwrap();
        assert!((f.mass(&grid) - m0).abs() < 1e-13);
    }

    #[test]
    fn heat_spike_matches_explicit_update() {
        let spec = zero_spec().with_diffusion(ScalarMap::new("id", |r| r).with_slope(|_| 1.0));
        let grid = Grid::new(1, 16, 1.0).unwrap();
        let mut f = Field::zeros(&grid);
        f.values[5] = 1.0;
        let dt = 0.4 * grid.dx().powi(2) / 2.0;
        let mut st = Stepper::new(&spec, grid, 0.0, dt).unwrap();
        st.step(&mut f, 0.0, &[]).unwrap();
        let mu = dt / grid.dx().powi(2);
        // oracle: u_i + mu (u_{i+1} - 2u_i + u_{i-1})
        assert!((f.values[5] - (1.0 - 2.0 * mu)).abs() < 1e-15);
        assert!((f.values[4] - mu).abs() < 1e-15 && (f.values[6] - mu).abs() < 1e-15);
        assert!((f.values.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(f.l1(&grid) <= grid.dx() + 1e-15);
    }

    #[test]
    fn two_dimensional_advection_conserves_mass() {
        let spec = ProblemConfig {
            dimension: 2,
            flux: "burgers".into(),
            sigma: "zero".into(),
            eta: "zero".into(),
            ..Default::default()
        }
        .build()
        .unwrap();
        let grid = Grid::new(2, 16, 2.0).unwrap();
        let mut f = grid.sample(&spec.initial);
        let m0 = f.mass(&grid);
        let dt = stable_dt(&spec, &grid, 0.01, 1.0, 1).unwrap();
        let mut st = Stepper::new(&spec, grid, 0.01, dt).unwrap();
        for _ in 0..10 {
            st.step(&mut f, 0.0, &[]).unwrap();
        }
        assert!((f.mass(&grid) - m0).abs() < 1e-12);
    }
}

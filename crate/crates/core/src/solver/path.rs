use super::{scheme::stable_dt, Field, Grid, Stepper};
use crate::error::{Error, Result};
use crate::model::ProblemSpec;
use crate::noise::{self, NoisePath, SeedKey};

/// Which states of a trajectory are kept.
#[derive(Clone, Debug, PartialEq)]
pub enum StoreTimes {
    /// Every step, including the states just before each jump.
    EveryStep,
    /// The steps nearest to the given times in [0, T].
    At(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveOptions {
    pub epsilon: f64,
    pub horizon: f64,
    /// Upper bound on dt in addition to the stability bound.
    pub dt_max: Option<f64>,
    /// At least this many steps are taken.
    pub min_steps: usize,
    pub store: StoreTimes,
}

impl SolveOptions {
    pub fn new(epsilon: f64, horizon: f64) -> Self {
        Self {
            epsilon,
            horizon,
            dt_max: None,
            min_steps: 64,
            store: StoreTimes::At(vec![0.0, horizon]),
        }
    }

    pub fn store(mut self, store: StoreTimes) -> Self {
        self.store = store;
        self
    }

    pub fn dt_max(mut self, dt: f64) -> Self {
        self.dt_max = Some(dt);
        self
    }

    pub fn min_steps(mut self, n: usize) -> Self {
        self.min_steps = n;
        self
    }

    /// Evenly spaced store times 0, T/k, ..., T.
    pub fn store_every(self, k: usize) -> Self {
        let t = self.horizon;
        let times = (0..=k).map(|i| t * i as f64 / k as f64).collect();
        self.store(StoreTimes::At(times))
    }
}

/// State at the start of step `index`, with the Brownian increment that
/// drives it.
pub struct StepView<'a> {
    pub index: usize,
    pub time: f64,
    pub dt: f64,
    pub state: &'a [f64],
    pub dw: f64,
}

/// A jump of mark `mark` applied at `time` to the state `pre`.
pub struct JumpView<'a> {
    pub step: usize,
    pub time: f64,
    pub mark: f64,
    pub pre: &'a [f64],
}

/// Streaming consumer of a trajectory. `on_step` sees u^k for k = 0..n−1,
/// `on_jump` the pre-jump states of step k after its drift, and `finish` the
/// final state u^n.
pub trait StepObserver {
    fn on_step(&mut self, view: &StepView);
    fn on_jump(&mut self, _view: &JumpView) {}
    fn finish(&mut self, _last: &Field) {}
}

/// One noise realisation's trajectory.
#[derive(Clone, Debug)]
pub struct PathSample {
    pub spec: ProblemSpec,
    pub epsilon: f64,
    pub grid: Grid,
    pub dt: f64,
    pub steps: usize,
    pub noise: NoisePath,
    pub snapshots: Vec<Field>,
    /// True when `snapshots[k]` is u^k for every k.
    pub every_step: bool,
    /// States just before each jump, aligned with `noise.jumps`; only kept
    /// in every-step mode.
    pub pre_jump: Vec<Vec<f64>>,
}

impl PathSample {
    /// Wraps a prescribed sequence of fields u^0..u^n as a noise-free path,
    /// e.g. an exact or deliberately wrong solution to feed the checks.
    pub fn from_fields(spec: &ProblemSpec, grid: Grid, epsilon: f64, dt: f64, fields: Vec<Field>) -> Result<Self> {
        if fields.is_empty() {
            return Err(Error::invalid("need at least one field"));
        }
        if fields.iter().any(|f| f.values.len() != grid.len()) {
            return Err(Error::invalid("field size does not match grid"));
        }
        let steps = fields.len() - 1;
        Ok(Self {
            spec: spec.clone(),
            epsilon,
            grid,
            dt,
            steps,
            noise: NoisePath {
                horizon: dt * steps as f64,
                dt,
                brownian: vec![0.0; steps],
                jumps: Vec::new(),
                key: SeedKey::new(0, 0),
            },
            snapshots: fields,
            every_step: true,
            pre_jump: Vec::new(),
        })
    }

    pub fn initial(&self) -> &Field {
        &self.snapshots[0]
    }

    pub fn last(&self) -> &Field {
        self.snapshots.last().expect("nonempty")
    }

    pub fn horizon(&self) -> f64 {
        self.dt * self.steps as f64
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|f| f.time).collect()
    }
}

/// Feeds a stored every-step path through observers.
pub fn replay(path: &PathSample, observers: &mut [&mut dyn StepObserver]) -> Result<()> {
    if !path.every_step {
        return Err(Error::NeedsEveryStep("replay"));
    }
    let by_step = path.noise.jumps_by_step();
    for k in 0..path.steps {
        let view = StepView {
            index: k,
            time: k as f64 * path.dt,
            dt: path.dt,
            state: &path.snapshots[k].values,
            dw: path.noise.brownian[k],
        };
        for o in observers.iter_mut() {
            o.on_step(&view);
        }
        for j in by_step[k].clone() {
            let ev = &path.noise.jumps[j];
            let jv = JumpView {
                step: k,
                time: ev.time,
                mark: ev.mark,
                pre: &path.pre_jump[j],
            };
            for o in observers.iter_mut() {
                o.on_jump(&jv);
            }
        }
    }
    for o in observers.iter_mut() {
        o.finish(path.last());
    }
    Ok(())
}

/// Advances the scheme from `initial` (default: u₀ on the grid) with the
/// noise of `key`, streaming every step through `observers`.
pub fn solve(
    spec: &ProblemSpec,
    grid: &Grid,
    opts: &SolveOptions,
    key: SeedKey,
    initial: Option<Field>,
    observers: &mut [&mut dyn StepObserver],
) -> Result<PathSample> {
    let mut state = match initial {
        Some(f) => {
            if f.values.len() != grid.len() {
                return Err(Error::invalid("initial field size does not match grid"));
            }
            Field::new(f.values, 0.0)
        }
        None => grid.sample(&spec.initial),
    };
    if !state.is_finite() {
        return Err(Error::invalid("initial data is not finite on the grid"));
    }
    let horizon = opts.horizon;
    if !(horizon >= 0.0) {
        return Err(Error::invalid(format!("horizon must be >= 0, got {horizon}")));
    }
    if let StoreTimes::At(ts) = &opts.store {
        if let Some(t) = ts.iter().find(|&&t| !(t >= -1e-12 && t <= horizon * (1.0 + 1e-12) + 1e-12)) {
            return Err(Error::invalid(format!("store time {t} outside [0, {horizon}]")));
        }
    }

    if horizon == 0.0 {
        let snapshots = match &opts.store {
            StoreTimes::EveryStep => vec![state.clone()],
            StoreTimes::At(ts) => vec![state.clone(); ts.len()],
        };
        for o in observers.iter_mut() {
            o.finish(&state);
        }
        return Ok(PathSample {
            spec: spec.clone(),
            epsilon: opts.epsilon,
            grid: *grid,
            dt: 0.0,
            steps: 0,
            noise: NoisePath {
                horizon: 0.0,
                dt: 0.0,
                brownian: Vec::new(),
                jumps: Vec::new(),
                key,
            },
            snapshots,
            every_step: matches!(opts.store, StoreTimes::EveryStep),
            pre_jump: Vec::new(),
        });
    }

    let mut dt = stable_dt(spec, grid, opts.epsilon, horizon, opts.min_steps.max(1))?;
    if let Some(cap) = opts.dt_max {
        dt = dt.min(cap);
    }
    let noise = noise::generate_for_spec(spec, horizon, dt, key)?;
    let dt = noise.dt;
    let steps = noise.steps();
    let mut stepper = Stepper::new(spec, *grid, opts.epsilon, dt)?;

    let every_step = matches!(opts.store, StoreTimes::EveryStep);
    let wanted: Vec<usize> = match &opts.store {
        StoreTimes::EveryStep => Vec::new(),
        StoreTimes::At(ts) => ts
            .iter()
            .map(|t| ((t / dt).round() as usize).min(steps))
            .collect(),
    };
    let mut stored: Vec<Option<Field>> = vec![None; wanted.len()];
    let mut all: Vec<Field> = Vec::new();
    let mut pre_jump: Vec<Vec<f64>> = Vec::new();
    let capture = |k: usize, state: &Field, stored: &mut Vec<Option<Field>>, all: &mut Vec<Field>| {
        if every_step {
            all.push(state.clone());
        } else {
            for (slot, &w) in stored.iter_mut().zip(&wanted) {
                if w == k {
                    *slot = Some(state.clone());
                }
            }
        }
    };
    capture(0, &state, &mut stored, &mut all);

    let by_step = noise.jumps_by_step();
    for k in 0..steps {
        let view = StepView {
            index: k,
            time: k as f64 * dt,
            dt,
            state: &state.values,
            dw: noise.brownian[k],
        };
        for o in observers.iter_mut() {
            o.on_step(&view);
        }
        stepper.drift(&mut state.values, noise.brownian[k]);
        for j in by_step[k].clone() {
            let ev = &noise.jumps[j];
            if every_step {
                pre_jump.push(state.values.clone());
            }
            if !observers.is_empty() {
                let jv = JumpView {
                    step: k,
                    time: ev.time,
                    mark: ev.mark,
                    pre: &state.values,
                };
                for o in observers.iter_mut() {
                    o.on_jump(&jv);
                }
            }
            stepper.jump(&mut state.values, ev.mark);
        }
        state.time = (k + 1) as f64 * dt;
        if !state.is_finite() {
            return Err(Error::Instability {
                time: state.time,
                path_index: key.path_index,
            });
        }
        capture(k + 1, &state, &mut stored, &mut all);
    }
    for o in observers.iter_mut() {
        o.finish(&state);
    }

    let snapshots = if every_step {
        all
    } else {
        stored.into_iter().map(|s| s.expect("every wanted step is reached")).collect()
    };
    Ok(PathSample {
        spec: spec.clone(),
        epsilon: opts.epsilon,
        grid: *grid,
        dt,
        steps,
        noise,
        snapshots,
        every_step,
        pre_jump,
    })
}

/// Runs several initial fields under one shared noise realisation and calls
/// `visit(k, t_k, states)` for k = 0..=n. Returns the time step.
pub fn solve_coupled<F>(
    spec: &ProblemSpec,
    grid: &Grid,
    opts: &SolveOptions,
    key: SeedKey,
    mut states: Vec<Field>,
    mut visit: F,
) -> Result<f64>
where
    F: FnMut(usize, f64, &[Field]),
{
    if states.iter().any(|f| f.values.len() != grid.len() || !f.is_finite()) {
        return Err(Error::invalid("coupled initial fields must be finite and match the grid"));
    }
    for f in states.iter_mut() {
        f.time = 0.0;
    }
    visit(0, 0.0, &states);
    if opts.horizon == 0.0 {
        return Ok(0.0);
    }
    let mut dt = stable_dt(spec, grid, opts.epsilon, opts.horizon, opts.min_steps.max(1))?;
    if let Some(cap) = opts.dt_max {
        dt = dt.min(cap);
    }
    let noise = noise::generate_for_spec(spec, opts.horizon, dt, key)?;
    let dt = noise.dt;
    let mut stepper = Stepper::new(spec, *grid, opts.epsilon, dt)?;
    let by_step = noise.jumps_by_step();
    for k in 0..noise.steps() {
        let marks: Vec<f64> = noise.jumps[by_step[k].clone()].iter().map(|j| j.mark).collect();
        for f in states.iter_mut() {
            stepper.step(f, noise.brownian[k], &marks).map_err(|e| match e {
                Error::Instability { time, .. } => Error::Instability {
                    time,
                    path_index: key.path_index,
                },
                other => other,
            })?;
            f.time = (k + 1) as f64 * dt;
        }
        visit(k + 1, (k + 1) as f64 * dt, &states);
    }
    Ok(dt)
}

pub fn solve_path(spec: &ProblemSpec, grid: &Grid, opts: &SolveOptions, key: SeedKey) -> Result<PathSample> {
    solve(spec, grid, opts, key, None, &mut [])
}

/// Same as [`solve_path`] with initial field T_n(u₀).
pub fn solve_truncated_data(
    spec: &ProblemSpec,
    level: f64,
    grid: &Grid,
    opts: &SolveOptions,
    key: SeedKey,
) -> Result<PathSample> {
    if !(level > 0.0) {
        return Err(Error::invalid(format!("truncation level must be > 0, got {level}")));
    }
    let init = grid.sample(&spec.initial).truncated(level);
    solve(spec, grid, opts, key, Some(init), &mut [])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ProblemConfig;

    fn det_burgers() -> ProblemSpec {
        ProblemConfig {
            flux: "burgers".into(),
            diffusion: "zero".into(),
            sigma: "zero".into(),
            eta: "zero".into(),
            initial: "riemann".into(),
            initial_width: 2.0,
            ..Default::default()
        }
        .build()
        .unwrap()
    }

    #[test]
    fn zero_horizon_returns_data() {
        let spec = ProblemConfig::default().build().unwrap();
        let grid = Grid::new(1, 64, 4.0).unwrap();
        let p = solve_path(&spec, &grid, &SolveOptions::new(0.05, 0.0), SeedKey::new(1, 0)).unwrap();
        assert_eq!(p.snapshots.len(), 2);
        assert_eq!(p.snapshots[0], grid.sample(&spec.initial));
    }

    #[test]
    fn burgers_shock_speed() {
        let spec = det_burgers();
        let grid = Grid::new(1, 800, 4.0).unwrap();
        let t = 1.0;
        let p = solve_path(&spec, &grid, &SolveOptions::new(0.0, t), SeedKey::new(1, 0)).unwrap();
        // oracle: rarefaction from x=-2 (fan to x=-2+t), plateau 1, shock at t/2
        let exact = |x: f64| {
            if x < -2.0 {
                0.0
            } else if x < -2.0 + t {
                (x + 2.0) / t
            } else if x < 0.5 * t {
                1.0
            } else {
                0.0
            }
        };
        let err: f64 = (0..grid.len())
            .map(|i| (p.last().values[i] - exact(grid.coord(i))).abs())
            .sum::<f64>()
            * grid.dx();
        assert!(err < 2.0 * grid.dx().sqrt(), "L1 error {err}");
        assert!(err < 0.05, "L1 error {err}");
    }

    #[test]
    fn truncation_examples() {
        let spec = ProblemConfig::default().build().unwrap();
        let grid = Grid::new(1, 64, 4.0).unwrap();
        let opts = SolveOptions::new(0.05, 0.1);
        let key = SeedKey::new(4, 2);
        let full = solve_path(&spec, &grid, &opts, key).unwrap();
        let trunc = solve_truncated_data(&spec, 5.0, &grid, &opts, key).unwrap();
        assert_eq!(full.snapshots, trunc.snapshots);

        let constant = ProblemConfig {
            initial: "constant".into(),
            initial_amplitude: 5.0,
            ..Default::default()
        }
        .build()
        .unwrap();
        let p = solve_truncated_data(&constant, 1.0, &grid, &opts, key).unwrap();
        assert!(p.initial().values.iter().all(|&v| v == 1.0));
        assert!(solve_truncated_data(&constant, 0.0, &grid, &opts, key).is_err());
    }

    #[test]
    fn store_times_and_replay() {
        let spec = ProblemConfig::default().build().unwrap();
        let grid = Grid::new(1, 32, 4.0).unwrap();
        let key = SeedKey::new(12, 0);
        let opts = SolveOptions::new(0.05, 0.25).store_every(4);
        let p = solve_path(&spec, &grid, &opts, key).unwrap();
        assert_eq!(p.snapshots.len(), 5);
        assert!(solve_path(&spec, &grid, &SolveOptions::new(0.05, 0.25).store(StoreTimes::At(vec![0.3])), key).is_err());

        struct Collect(Vec<Vec<f64>>, usize);
        impl StepObserver for Collect {
            fn on_step(&mut self, v: &StepView) {
                self.0.push(v.state.to_vec());
            }
            fn on_jump(&mut self, _v: &JumpView) {
                self.1 += 1;
            }
        }
        let full = solve_path(&spec, &grid, &opts.clone().store(StoreTimes::EveryStep), key).unwrap();
        assert_eq!(full.snapshots.len(), full.steps + 1);
        assert_eq!(full.pre_jump.len(), full.noise.jumps.len());
        let mut live = Collect(Vec::new(), 0);
        solve(&spec, &grid, &opts, key, None, &mut [&mut live]).unwrap();
        let mut again = Collect(Vec::new(), 0);
        replay(&full, &mut [&mut again]).unwrap();
        assert_eq!(live.0, again.0);
        assert_eq!(live.1, full.noise.jumps.len());
        assert_eq!(again.1, live.1);
        assert!(replay(&p, &mut [&mut again]).is_err());
    }

    #[test]
    fn reproducible_per_seed() {
        let spec = ProblemConfig::default().build().unwrap();
        let grid = Grid::new(1, 64, 4.0).unwrap();
        let opts = SolveOptions::new(0.05, 0.2);
        let a = solve_path(&spec, &grid, &opts, SeedKey::new(5, 1)).unwrap();
        let b = solve_path(&spec, &grid, &opts, SeedKey::new(5, 1)).unwrap();
        assert_eq!(a.snapshots, b.snapshots);
    }
}

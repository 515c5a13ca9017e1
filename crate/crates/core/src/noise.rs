//! Seeded Brownian increments and compound-Poisson jump events.
//!
//! Every path draws from two ChaCha8 streams keyed by
//! `(base_seed, path_index, stream)`, so a path does not depend on how many
//! other paths exist or in which order they run. Brownian paths are built by
//! dyadic midpoint refinement from W(T): the path on 2^j steps is a prefix of
//! the path on 2^(j+1) steps, which lets runs on different grids share one
//! noise realisation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{MarkMeasure, ProblemSpec};

pub const STREAMS_PER_PATH: u64 = 4;
pub const BROWNIAN_STREAM: u64 = 0;
pub const JUMP_STREAM: u64 = 1;

/// Identifies one path's randomness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct SeedKey {
    pub base_seed: u64,
    pub path_index: u64,
}

impl SeedKey {
    pub fn new(base_seed: u64, path_index: u64) -> Self {
        Self { base_seed, path_index }
    }

    pub fn stream_id(&self, stream: u64) -> u64 {
        self.path_index * STREAMS_PER_PATH + stream
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.base_seed);
        rng.set_stream(self.stream_id(stream));
        rng
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct JumpEvent {
    /// Index of the step whose drift update precedes the jump.
    pub step: usize,
    pub time: f64,
    pub mark: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NoisePath {
    pub horizon: f64,
    pub dt: f64,
    /// ΔW_k for k = 0..steps.
    pub brownian: Vec<f64>,
    /// Sorted by time.
    pub jumps: Vec<JumpEvent>,
    pub key: SeedKey,
}

/// Smallest power of two n with T/n ≤ dt_max.
pub fn dyadic_steps(horizon: f64, dt_max: f64) -> Result<usize> {
    if !(dt_max > 0.0) || !(horizon > 0.0) {
        return Err(Error::invalid(format!(
            "need dt > 0 and T > 0, got dt = {dt_max}, T = {horizon}"
        )));
    }
    if dt_max > horizon {
        return Err(Error::invalid(format!("dt = {dt_max} exceeds horizon T = {horizon}")));
    }
    let mut n = 1usize;
    while horizon / n as f64 > dt_max {
        n *= 2;
        if n > 1 << 30 {
            return Err(Error::invalid("time step too small"));
        }
    }
    Ok(n)
}

impl NoisePath {
    pub fn steps(&self) -> usize {
        self.brownian.len()
    }

    /// Jump events grouped by step: `jumps_at(k)` is the slice for step k.
    pub fn jumps_by_step(&self) -> Vec<std::ops::Range<usize>> {
        let mut ranges = vec![0..0; self.steps()];
        let mut i = 0;
        for (k, r) in ranges.iter_mut().enumerate() {
            let start = i;
            while i < self.jumps.len() && self.jumps[i].step == k {
                i += 1;
            }
            *r = start..i;
        }
        ranges
    }

    pub fn brownian_total(&self) -> f64 {
        self.brownian.iter().sum()
    }
}

/// Generates W on the dyadic grid T/2^j with 2^j the smallest power of two
/// such that T/2^j ≤ `dt`, and the jump events on [0, T].
pub fn generate_path(rate: f64, horizon: f64, dt: f64, marks: &MarkMeasure, key: SeedKey) -> Result<NoisePath> {
    if !(rate >= 0.0) {
        return Err(Error::invalid(format!("jump rate must be >= 0, got {rate}")));
    }
    let steps = dyadic_steps(horizon, dt)?;
    let dt = horizon / steps as f64;

    let mut rng = key.rng(BROWNIAN_STREAM);
    // values of W at the dyadic nodes, refined level by level
    let mut w = vec![0.0f64; steps + 1];
    w[steps] = horizon.sqrt() * rng.sample::<f64, _>(StandardNormal);
    let mut stride = steps;
    while stride > 1 {
        let half = stride / 2;
        let sd = (0.25 * stride as f64 * dt).sqrt();
        let mut a = 0;
        while a < steps {
            let z: f64 = rng.sample(StandardNormal);
            w[a + half] = 0.5 * (w[a] + w[a + stride]) + sd * z;
            a += stride;
        }
        stride = half;
    }
    let brownian: Vec<f64> = w.windows(2).map(|p| p[1] - p[0]).collect();

    let mut jumps = Vec::new();
    if rate > 0.0 {
        let mut rng = key.rng(JUMP_STREAM);
        let exp = Exp::new(rate).map_err(|e| Error::invalid(e.to_string()))?;
        let mut t = 0.0;
        loop {
            t += exp.sample(&mut rng);
            if t >= horizon {
                break;
            }
            let v: f64 = rng.random();
            let step = ((t / dt) as usize).min(steps - 1);
            jumps.push(JumpEvent {
                step,
                time: t,
                mark: marks.sample_from_uniform(v),
            });
        }
    }
    Ok(NoisePath {
        horizon,
        dt,
        brownian,
        jumps,
        key,
    })
}

/// Noise for a spec: the jump part is dropped when η ≡ 0.
pub fn generate_for_spec(spec: &ProblemSpec, horizon: f64, dt: f64, key: SeedKey) -> Result<NoisePath> {
    let rate = if spec.eta.is_zero() { 0.0 } else { spec.marks.rate() };
    generate_path(rate, horizon, dt, &spec.marks, key)
}

/// ∫_E η(u; z) m(dz).
pub fn compensator(spec: &ProblemSpec, u: f64) -> f64 {
    spec.compensator(u)
}

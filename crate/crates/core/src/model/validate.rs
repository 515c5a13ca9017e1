//! Probe-based checks of the structural assumptions on the coefficients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::ProblemSpec;
use crate::error::{Error, Result};

const TOL: f64 = 1e-9;

/// Worst probe found for one assumption.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Witness {
    pub u: f64,
    pub v: f64,
    pub z: f64,
    /// Amount by which the inequality is violated (≤ 0 when satisfied).
    pub excess: f64,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct AssumptionCheck {
    pub id: &'static str,
    pub statement: &'static str,
    pub passed: bool,
    pub worst: Option<Witness>,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ValidationReport {
    pub probes: usize,
    pub seed: u64,
    pub checks: Vec<AssumptionCheck>,
    /// Coefficients whose derivative falls back to central differences.
    pub finite_difference_slopes: Vec<String>,
    /// Discrete L¹ norm of the data on a reference grid over [−8, 8]^d.
    pub initial_l1: f64,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, id: &str) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.id == id)
    }
}

struct Tracker {
    worst: Option<Witness>,
}

impl Tracker {
    fn new() -> Self {
        Self { worst: None }
    }

    fn record(&mut self, u: f64, v: f64, z: f64, excess: f64) {
        if self.worst.as_ref().is_none_or(|w| excess > w.excess) {
            self.worst = Some(Witness { u, v, z, excess });
        }
    }

    fn finish(self, id: &'static str, statement: &'static str) -> AssumptionCheck {
        let passed = self.worst.as_ref().is_none_or(|w| w.excess <= 0.0);
        AssumptionCheck {
            id,
            statement,
            passed,
            worst: self.worst,
        }
    }
}

fn finite(name: &str, at: f64, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonEvaluable {
            name: name.to_string(),
            at,
        })
    }
}

/// Probes A1–A7 on random pairs (u, v) in [−R, R]² and marks in the mark
/// interval, plus the endpoints. Deterministic for a fixed seed.
pub fn validate_assumptions(spec: &ProblemSpec, probe_count: usize, seed: u64) -> Result<ValidationReport> {
    if probe_count < 100 {
        return Err(Error::invalid(format!("need at least 100 probes, got {probe_count}")));
    }
    if spec.marks.rate() < 0.0 {
        return Err(Error::invalid("negative jump rate"));
    }
    let c = spec.constants;
    let r = c.state_bound;
    let (zlo, zhi) = spec.marks.interval();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut probes: Vec<(f64, f64, f64)> = Vec::with_capacity(probe_count + 9);
    for &u in &[-r, 0.0, r] {
        for &z in &[zlo, zhi] {
            probes.push((u, -u, z));
        }
    }
    while probes.len() < probe_count {
        probes.push((
            rng.random_range(-r..=r),
            rng.random_range(-r..=r),
            rng.random_range(zlo..=zhi),
        ));
    }

    let scale = |x: f64| TOL * (1.0 + x.abs());
    let mut a2 = Tracker::new();
    let mut a3 = Tracker::new();
    let mut a4 = Tracker::new();
    let mut a5 = Tracker::new();
    let mut a6 = Tracker::new();
    let mut a7 = Tracker::new();

    let phi0 = finite(spec.diffusion.label(), 0.0, spec.diffusion.eval(0.0))?;
    a2.record(0.0, 0.0, 0.0, phi0.abs() - TOL);
    for comp in &spec.flux {
        let f0 = finite(comp.map.label(), 0.0, comp.eval(0.0))?;
        a3.record(0.0, 0.0, 0.0, f0.abs() - TOL);
    }
    let s0 = finite(spec.sigma.label(), 0.0, spec.sigma.eval(0.0))?;
    a4.record(0.0, 0.0, 0.0, s0.abs() - TOL);

    for &(u, v, z) in &probes {
        let du = (u - v).abs();

        let dphi = finite(spec.diffusion.label(), u, spec.diffusion.slope(u))?;
        a2.record(u, u, z, -dphi - TOL);
        let pu = finite(spec.diffusion.label(), u, spec.diffusion.eval(u))?;
        let pv = finite(spec.diffusion.label(), v, spec.diffusion.eval(v))?;
        a2.record(u, v, z, (pu - pv).abs() - c.lip_diffusion * du - scale(pu));

        for comp in &spec.flux {
            let fu = finite(comp.map.label(), u, comp.eval(u))?;
            let fv = finite(comp.map.label(), v, comp.eval(v))?;
            a3.record(u, v, z, (fu - fv).abs() - c.lip_flux * du - scale(fu));
        }

        let su = finite(spec.sigma.label(), u, spec.sigma.eval(u))?;
        let sv = finite(spec.sigma.label(), v, spec.sigma.eval(v))?;
        a4.record(u, v, z, (su - sv).abs() - c.lip_sigma * du - scale(su));
        a7.record(u, v, z, su.abs() - c.sigma_bound - scale(su));

        let h = finite(spec.profile.label(), z, spec.profile.eval(z))?;
        let eu = finite(spec.eta.label(), u, spec.eta.eval(u, z))?;
        let ev = finite(spec.eta.label(), v, spec.eta.eval(v, z))?;
        let e0 = finite(spec.eta.label(), 0.0, spec.eta.eval(0.0, z))?;
        a5.record(0.0, 0.0, z, e0.abs() - TOL);
        a5.record(u, v, z, (-h).max(h - 1.0) - TOL);
        a5.record(u, v, z, (eu - ev).abs() - c.lip_eta * du * h - scale(eu));
        let (lo, hi, elo, ehi) = if u <= v { (u, v, eu, ev) } else { (v, u, ev, eu) };
        a6.record(lo, hi, z, elo - ehi - scale(elo));
        a7.record(u, v, z, eu.abs() - c.eta_bound * h - scale(eu));
    }

    let mut fd = Vec::new();
    for comp in &spec.flux {
        if !comp.map.has_analytic_slope() {
            fd.push(comp.map.label().to_string());
        }
    }
    if !spec.diffusion.has_analytic_slope() {
        fd.push(spec.diffusion.label().to_string());
    }

    let initial_l1 = reference_l1(spec);
    let mut a1 = Tracker::new();
    a1.record(0.0, 0.0, 0.0, if initial_l1.is_finite() { -1.0 } else { f64::INFINITY });

    Ok(ValidationReport {
        probes: probes.len(),
        seed,
        checks: vec![
            a1.finish("A1", "u0 has finite L1 norm"),
            a2.finish("A2", "Phi(0)=0, Phi nondecreasing and L_Phi-Lipschitz"),
            a3.finish("A3", "f_k(0)=0 and f is L_f-Lipschitz"),
            a4.finish("A4", "sigma(0)=0 and sigma is L_sigma-Lipschitz"),
            a5.finish("A5", "eta(0,z)=0, 0<=h<=1, |eta(u,z)-eta(v,z)| <= L_eta|u-v|h(z)"),
            a6.finish("A6", "eta nondecreasing in u"),
            a7.finish("A7", "|sigma| <= sigma_b and |eta| <= eta_b h(z)"),
        ],
        finite_difference_slopes: fd,
        initial_l1,
    })
}

fn reference_l1(spec: &ProblemSpec) -> f64 {
    let n: usize = if spec.dimension == 1 { 2048 } else { 256 };
    let dx = 16.0 / n as f64;
    let centre = |i: usize| -8.0 + (i as f64 + 0.5) * dx;
    let mut sum = 0.0;
    if spec.dimension == 1 {
        for i in 0..n {
            sum += spec.initial.eval(&[centre(i)]).abs();
        }
        sum * dx
    } else {
        for i in 0..n {
            for j in 0..n {
                sum += spec.initial.eval(&[centre(i), centre(j)]).abs();
            }
        }
        sum * dx * dx
    }
}

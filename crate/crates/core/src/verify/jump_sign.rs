//! Pointwise sign of the jump truncation error
//! β(T_ℓ(u + η(u;z))) − β(T_ℓ(u) + η(T_ℓ(u);z)).

use serde::Serialize;

use super::Verdict;
use crate::error::{Error, Result};
use crate::model::{truncate, EntropyFn, JumpCoeff};

pub const SIGN_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct JumpSample {
    pub u: f64,
    pub z: f64,
    pub level: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JumpSignReport {
    pub eta: String,
    pub beta: String,
    pub count: usize,
    pub max: f64,
    pub argmax: Option<JumpSample>,
    pub verdict: Verdict,
}

#[inline]
pub fn jump_integrand(beta: &EntropyFn, eta: &JumpCoeff, s: JumpSample) -> f64 {
    let t = truncate(s.level, s.u);
    beta.value(truncate(s.level, s.u + eta.eval(s.u, s.z))) - beta.value(t + eta.eval(t, s.z))
}

/// Maximum of the integrand over `samples`; PASS iff it is ≤ 1e−12.
pub fn jump_sign_check(samples: &[JumpSample], beta: &EntropyFn, eta: &JumpCoeff) -> Result<JumpSignReport> {
    let s0 = beta.slope(0.0);
    if s0.abs() > SIGN_TOLERANCE {
        return Err(Error::NonzeroSlopeAtOrigin(s0));
    }
    let mut max = f64::NEG_INFINITY;
    let mut argmax = None;
    for &s in samples {
        let v = jump_integrand(beta, eta, s);
        if v > max || argmax.is_none() {
            max = v;
            argmax = Some(s);
        }
    }
    if argmax.is_none() {
        max = 0.0;
    }
    Ok(JumpSignReport {
        eta: eta.label().to_string(),
        beta: beta.label().to_string(),
        count: samples.len(),
        max,
        argmax,
        verdict: Verdict::from_bool(max <= SIGN_TOLERANCE),
    })
}

/// Tensor grid u ∈ [−3ℓ, 3ℓ] × z ∈ [lo, hi] for every ℓ in `levels`, with
/// the end points included.
pub fn scan_grid(levels: &[f64], u_points: usize, marks: (f64, f64), z_points: usize) -> Vec<JumpSample> {
    let (nu, nz) = (u_points.max(2), z_points.max(2));
    let mut out = Vec::with_capacity(levels.len() * nu * nz);
    for &level in levels {
        for i in 0..nu {
            let u = -3.0 * level + 6.0 * level * i as f64 / (nu - 1) as f64;
            for j in 0..nz {
                let z = marks.0 + (marks.1 - marks.0) * j as f64 / (nz - 1) as f64;
                out.push(JumpSample { u, z, level });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ProblemConfig, CATALOG_ETA};
    use proptest::prelude::*;

    fn eta(name: &str) -> JumpCoeff {
        ProblemConfig {
            eta: name.into(),
            ..ProblemConfig::default()
        }
        .build()
        .unwrap()
        .eta
    }

    fn betas() -> Vec<EntropyFn> {
        vec![EntropyFn::smooth_abs(0.05), EntropyFn::smooth_abs(0.5), EntropyFn::quadratic()]
    }

    #[test]
    fn origin_is_zero() {
        let e = eta("truncated-linear");
        for b in betas() {
            assert_eq!(jump_integrand(&b, &e, JumpSample { u: 0.0, z: 0.7, level: 1.0 }), 0.0);
        }
    }

    #[test]
    fn above_level_case() {
        // u > ℓ and η ≥ 0: the integrand is β(ℓ) − β(ℓ + η(ℓ; z)) ≤ 0.
        let e = eta("truncated-linear");
        let b = EntropyFn::smooth_abs(0.1);
        let (l, z) = (0.8, 0.6);
        let s = JumpSample { u: l + 1.0, z, level: l };
        let expect = b.value(l) - b.value(l + e.eval(l, z));
        assert!((jump_integrand(&b, &e, s) - expect).abs() < 1e-15);
        assert!(expect < 0.0);
    }

    #[test]
    fn catalog_scan_and_negative_control() {
        let samples = scan_grid(&[0.25, 0.5, 1.0, 2.0], 101, (0.0, 1.0), 25);
        assert!(samples.len() >= 10_000);
        for name in CATALOG_ETA {
            let e = eta(name);
            for b in betas() {
                let r = jump_sign_check(&samples, &b, &e).unwrap();
                assert_eq!(r.verdict.passed(), *name != "decreasing", "{name} {}: {r:?}", b.label());
            }
        }
    }

    #[test]
    fn rejects_shifted_entropy() {
        let b = EntropyFn::smooth_abs(0.1).shifted(0.3);
        assert!(jump_sign_check(&[], &b, &eta("tanh")).is_err());
    }

    proptest! {
        #[test]
        fn nonpositive_for_monotone_eta(u in -6.0..6.0f64, z in 0.0..1.0f64, level in 0.05..2.0f64, xi in 0.01..1.0f64) {
            let b = EntropyFn::smooth_abs(xi);
            for name in ["truncated-linear", "tanh"] {
                let v = jump_integrand(&b, &eta(name), JumpSample { u, z, level });
                prop_assert!(v <= SIGN_TOLERANCE, "{name}: {v}");
            }
        }
    }
}

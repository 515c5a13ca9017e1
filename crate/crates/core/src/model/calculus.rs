//! Truncations, their smoothed versions, Kirchhoff functions and the smooth
//! approximation of |r|.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::LazyLock;

use super::{EntropyFn, ProblemSpec};
use crate::error::{Error, Result};
use crate::quadrature::{self, CumulativeTable};

/// Tolerance below zero at which Φ′ is still treated as zero.
const NEG_SLOPE_TOL: f64 = 1e-12;

/// Clipping of `u` to [−ℓ, ℓ].
#[inline]
pub fn truncate(level: f64, u: f64) -> f64 {
    u.clamp(-level, level)
}

/// The C¹ approximation h_{ℓ,δ} of T_ℓ: slope 1 on |r| ≤ ℓ, decaying
/// linearly to 0 across the band ℓ < |r| < ℓ+δ, flat beyond.
/// Returns (value, derivative).
#[inline]
pub fn h_smooth(level: f64, width: f64, r: f64) -> (f64, f64) {
    let a = r.abs();
    let s = r.signum();
    if a <= level {
        (r, 1.0)
    } else if a < level + width {
        let e = a - level;
        (s * (level + e - 0.5 * e * e / width), (level + width - a) / width)
    } else {
        (s * (level + 0.5 * width), 0.0)
    }
}

/// Second derivative of h_{ℓ,δ} (zero off the band).
#[inline]
fn h_curvature(level: f64, width: f64, r: f64) -> f64 {
    let a = r.abs();
    if a > level && a < level + width {
        -r.signum() / width
    } else {
        0.0
    }
}

/// The pair (ℓ, δ) indexing T_ℓ, h_{ℓ,δ} and S_{β,h_{ℓ,δ}}.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncationFamily {
    pub level: f64,
    pub width: f64,
}

impl TruncationFamily {
    pub fn new(level: f64, width: f64) -> Result<Self> {
        if !(level > 0.0 && width > 0.0) {
            return Err(Error::invalid(format!(
                "truncation needs level > 0 and width > 0, got ({level}, {width})"
            )));
        }
        Ok(Self { level, width })
    }

    pub fn truncate(&self, u: f64) -> f64 {
        truncate(self.level, u)
    }

    pub fn h(&self, r: f64) -> (f64, f64) {
        h_smooth(self.level, self.width, r)
    }

    /// (S, S′, S″) for S = S_{β,h_{ℓ,δ}}.
    pub fn s(&self, beta: &EntropyFn, r: f64) -> (f64, f64, f64) {
        s_beta_h(beta, self.level, self.width, r)
    }

    /// S_{β,h_{ℓ,δ}} packaged as an entropy-like function of u.
    pub fn s_function(&self, beta: &EntropyFn) -> EntropyFn {
        let (b1, b2, b3) = (beta.clone(), beta.clone(), beta.clone());
        let t = *self;
        EntropyFn::new(
            format!("S[{}; l={}, d={}]", beta.label(), t.level, t.width),
            move |r| t.s(&b1, r).0,
            move |r| t.s(&b2, r).1,
            move |r| t.s(&b3, r).2,
        )
    }
}

/// S_{β,h}(r) = ∫₀ʳ β′(s) h′_{ℓ,δ}(s) ds with its first two derivatives.
///
/// On |r| ≤ ℓ this is β(r) exactly; the band piece uses 8-point
/// Gauss–Legendre.
pub fn s_beta_h(beta: &EntropyFn, level: f64, width: f64, r: f64) -> (f64, f64, f64) {
    let (_, hp) = h_smooth(level, width, r);
    let slope = beta.slope(r) * hp;
    let curv = beta.curvature(r) * hp + beta.slope(r) * h_curvature(level, width, r);
    let a = r.abs();
    if a <= level {
        return (beta.value(r), slope, curv);
    }
    let top = a.min(level + width);
    let weight = |s: f64| (level + width - s) / width;
    let value = if r > 0.0 {
        beta.value(level) + quadrature::gauss_legendre_8(level, top, |s| beta.slope(s) * weight(s))
    } else {
        beta.value(-level)
            - quadrature::gauss_legendre_8(-top, -level, |s| beta.slope(s) * weight(-s))
    };
    (value, slope, curv)
}

/// G(x) = ∫₀ˣ √Φ′(r) dr by composite Simpson with the default cell density.
pub fn kirchhoff(spec: &ProblemSpec, x: f64) -> Result<f64> {
    let phi = &spec.diffusion;
    if x == 0.0 {
        return Ok(0.0);
    }
    let n = quadrature::cell_count(x);
    let h = x / n as f64;
    let root = |r: f64| -> Result<f64> {
        let d = phi.slope(r);
        if !d.is_finite() {
            return Err(Error::NonEvaluable {
                name: phi.label().to_string(),
                at: r,
            });
        }
        if d < -NEG_SLOPE_TOL {
            return Err(Error::Quadrature {
                name: phi.label().to_string(),
                node: r,
                value: d,
            });
        }
        Ok(d.max(0.0).sqrt())
    };
    let mut acc = 0.0;
    let mut left = root(0.0)?;
    for i in 0..n {
        let a = i as f64 * h;
        let right = root(a + h)?;
        acc += left + 4.0 * root(a + 0.5 * h)? + right;
        left = right;
    }
    Ok(acc * h / 6.0)
}

/// Tabulated Kirchhoff function for repeated evaluation on fields.
#[derive(Clone, Debug)]
pub struct KirchhoffTable {
    table: Option<CumulativeTable>,
    spec_phi: super::ScalarMap,
}

impl KirchhoffTable {
    pub fn new(spec: &ProblemSpec, range: f64) -> Result<Self> {
        let phi = spec.diffusion.clone();
        let range = range.max(1.0);
        // Validate the nodes once; the table itself clamps small negatives.
        let cells = quadrature::cell_count(2.0 * range);
        let dx = 2.0 * range / cells as f64;
        let mut degenerate = true;
        for i in 0..=cells {
            let r = -range + i as f64 * dx;
            let d = phi.slope(r);
            if d < -NEG_SLOPE_TOL || !d.is_finite() {
                return Err(Error::Quadrature {
                    name: phi.label().to_string(),
                    node: r,
                    value: d,
                });
            }
            degenerate &= d == 0.0;
        }
        if degenerate {
            return Ok(Self {
                table: None,
                spec_phi: phi,
            });
        }
        let p = phi.clone();
        let table = CumulativeTable::build(-range, range, cells, move |r| p.slope(r).max(0.0).sqrt());
        Ok(Self {
            table: Some(table),
            spec_phi: phi,
        })
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        match &self.table {
            None => 0.0,
            Some(t) => {
                let phi = &self.spec_phi;
                t.eval_with(u, |r| phi.slope(r).max(0.0).sqrt())
            }
        }
    }
}

/// Reference β with β′(r) = sin(πr/2) on [−1, 1] and ±1 outside.
/// Returns (β, β′, β″).
#[inline]
pub fn reference_beta(r: f64) -> (f64, f64, f64) {
    let a = r.abs();
    if a <= 1.0 {
        let c = (FRAC_PI_2 * r).cos();
        (2.0 / PI * (1.0 - c), (FRAC_PI_2 * r).sin(), FRAC_PI_2 * c)
    } else {
        (2.0 / PI + (a - 1.0), r.signum(), 0.0)
    }
}

static REFERENCE_BOUNDS: LazyLock<(f64, f64)> = LazyLock::new(|| {
    let n = 200_000;
    let mut m1 = 0.0f64;
    let mut m2 = 0.0f64;
    for i in 0..=n {
        let r = -3.0 + 6.0 * i as f64 / n as f64;
        let (v, _, c) = reference_beta(r);
        m1 = m1.max(r.abs() - v);
        m2 = m2.max(c.abs());
    }
    (m1, m2)
});

/// (M₁, M₂) with |r| − M₁ξ ≤ β_ξ(r) ≤ |r| and |β_ξ″| ≤ M₂/ξ, found by a
/// dense scan of the reference β.
pub fn reference_bounds() -> (f64, f64) {
    *REFERENCE_BOUNDS
}

/// β_ξ(r) = ξ β(r/ξ): (value, first, second derivative).
#[inline]
pub fn beta_smooth_abs(xi: f64, r: f64) -> (f64, f64, f64) {
    let (v, d, c) = reference_beta(r / xi);
    (xi * v, d, c / xi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{InitialData, ScalarMap};
    use proptest::prelude::*;

    fn spec_with_phi(phi: ScalarMap) -> ProblemSpec {
        ProblemSpec::zero(1, InitialData::zero()).unwrap().with_diffusion(phi)
    }

    #[test]
    fn truncate_branches() {
        assert_eq!(truncate(2.0, 3.0), 2.0);
        assert_eq!(truncate(2.0, 0.0), 0.0);
        assert_eq!(truncate(1.0, -5.0), -1.0);
    }

    #[test]
    fn h_smooth_branches() {
        assert_eq!(h_smooth(1.0, 0.5, 0.5), (0.5, 1.0));
        assert_eq!(h_smooth(1.0, 0.5, 2.0).1, 0.0);
        // oracle: (l + d - |r|)/d
        assert!((h_smooth(1.0, 0.5, 1.25).1 - (1.0 + 0.5 - 1.25) / 0.5).abs() < 1e-15);
    }

    #[test]
    fn h_smooth_error_halves_with_width() {
        let max_err = |d: f64| {
            (0..=4000)
                .map(|i| -3.0 + 6.0 * i as f64 / 4000.0)
                .map(|r| (h_smooth(1.0, d, r).0 - truncate(1.0, r)).abs())
                .fold(0.0, f64::max)
        };
        let e1 = max_err(0.4);
        let e2 = max_err(0.2);
        assert!(e1 <= 0.4 && e2 <= 0.2);
        let ratio = e1 / e2;
        assert!((ratio - 2.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn kirchhoff_examples() {
        let id = spec_with_phi(ScalarMap::new("id", |r| r).with_slope(|_| 1.0));
        assert!((kirchhoff(&id, 3.0).unwrap() - 3.0).abs() < 1e-12);
        let zero = spec_with_phi(ScalarMap::zero());
        assert_eq!(kirchhoff(&zero, 1.7).unwrap(), 0.0);
        let cubic = spec_with_phi(ScalarMap::new("r^3/3", |r| r * r * r / 3.0).with_slope(|r| r * r));
        // oracle: integral of |r| over [0, 2]
        let oracle = {
            let n = 100_000;
            let h = 2.0 / n as f64;
            (0..n).map(|i| 0.5 * h * (i as f64 * h + (i + 1) as f64 * h)).sum::<f64>()
        };
        assert!((kirchhoff(&cubic, 2.0).unwrap() - oracle).abs() < 1e-8);
        assert!((kirchhoff(&cubic, -2.0).unwrap() + 2.0).abs() < 1e-8);
    }

    #[test]
    fn kirchhoff_rejects_negative_slope() {
        let bad = spec_with_phi(ScalarMap::new("-r", |r| -r).with_slope(|_| -1.0));
        assert!(matches!(kirchhoff(&bad, 1.0), Err(Error::Quadrature { .. })));
        assert!(KirchhoffTable::new(&bad, 2.0).is_err());
    }

    #[test]
    fn kirchhoff_table_matches_direct() {
        let pm = spec_with_phi(
            ScalarMap::new("pm2", |r| 0.3 * r * r.abs()).with_slope(|r| 0.6 * r.abs()),
        );
        let table = KirchhoffTable::new(&pm, 2.0).unwrap();
        for x in [-3.0f64, -1.1, 0.0, 0.013, 0.9, 1.99, 2.5] {
            let exact = x.signum() * 0.6f64.sqrt() * (2.0 / 3.0) * x.abs().powf(1.5);
            assert!((table.eval(x) - exact).abs() < 1e-6, "x={x}");
            assert!((kirchhoff(&pm, x).unwrap() - exact).abs() < 1e-6, "x={x}");
        }
    }

    #[test]
    fn smooth_abs_examples() {
        assert_eq!(beta_smooth_abs(0.1, 5.0).1, 1.0);
        assert_eq!(beta_smooth_abs(0.37, 0.0).0, 0.0);
        let (m1, m2) = reference_bounds();
        assert!(beta_smooth_abs(1.0, 0.5).2 <= m2);
        assert!((m1 - (1.0 - 2.0 / PI)).abs() < 1e-12);
        assert!((m2 - FRAC_PI_2).abs() < 1e-9);
    }

    #[test]
    fn reference_beta_is_c2_at_one() {
        let (v0, d0, c0) = reference_beta(1.0);
        let (v1, d1, c1) = reference_beta(1.0 + 1e-9);
        assert!((v0 - v1).abs() < 1e-8 && (d0 - d1).abs() < 1e-8 && (c0 - c1).abs() < 1e-8);
    }

    #[test]
    fn s_beta_h_converges_to_beta_of_truncation() {
        let beta = EntropyFn::smooth_abs(0.3).shifted(0.4);
        let errs: Vec<f64> = [0.4, 0.2, 0.1, 0.05]
            .iter()
            .map(|&d| {
                (0..=600)
                    .map(|i| -3.0 + 6.0 * i as f64 / 600.0)
                    .map(|r| (s_beta_h(&beta, 1.0, d, r).0 - beta.value(truncate(1.0, r))).abs())
                    .fold(0.0, f64::max)
            })
            .collect();
        for w in errs.windows(2) {
            assert!(w[1] < w[0], "{errs:?}");
        }
    }

    #[test]
    fn s_beta_h_derivative_matches_difference() {
        let beta = EntropyFn::quadratic();
        for r in [-1.6, -1.2, -0.3, 0.8, 1.1, 1.3, 1.45, 2.0] {
            let h = 1e-6;
            let fd = (s_beta_h(&beta, 1.0, 0.5, r + h).0 - s_beta_h(&beta, 1.0, 0.5, r - h).0) / (2.0 * h);
            assert!((fd - s_beta_h(&beta, 1.0, 0.5, r).1).abs() < 1e-6, "r={r}");
        }
        assert_eq!(s_beta_h(&beta, 1.0, 0.5, 0.0).0, 0.0);
    }

    proptest! {
        #[test]
        fn truncate_is_one_lipschitz(l in 0.01f64..10.0, a in -50.0f64..50.0, b in -50.0f64..50.0) {
            prop_assert!((truncate(l, a) - truncate(l, b)).abs() <= (a - b).abs());
            prop_assert!(truncate(l, a).abs() <= l);
        }

        #[test]
        fn h_smooth_close_to_truncation(l in 0.1f64..5.0, d in 0.01f64..2.0, r in -20.0f64..20.0) {
            let (v, dv) = h_smooth(l, d, r);
            prop_assert!((v - truncate(l, r)).abs() <= 0.5 * d + 1e-12);
            prop_assert!((0.0..=1.0).contains(&dv));
        }

        #[test]
        fn kirchhoff_nondecreasing(x in -3.0f64..3.0, y in -3.0f64..3.0) {
            let spec = spec_with_phi(ScalarMap::new("pm", |r| r * r.abs()).with_slope(|r| 2.0 * r.abs()));
            let (a, b) = if x <= y { (x, y) } else { (y, x) };
            prop_assert!(kirchhoff(&spec, a).unwrap() <= kirchhoff(&spec, b).unwrap() + 1e-12);
        }

        #[test]
        fn smooth_abs_bounds(xi in 0.01f64..2.0, r in -10.0f64..10.0) {
            let (m1, m2) = reference_bounds();
            let (v, d, c) = beta_smooth_abs(xi, r);
            prop_assert!(v <= r.abs() + 1e-12);
            prop_assert!(v >= r.abs() - m1 * xi - 1e-12);
            prop_assert!(c.abs() <= m2 / xi + 1e-12);
            prop_assert!(d.abs() <= 1.0);
            if r.abs() > xi { prop_assert_eq!(c, 0.0); }
        }
    }
}

//! Entropy functions β and their flux companions ζ, ν.

use std::fmt;
use std::sync::Arc;

use super::{calculus::beta_smooth_abs, Fn1, ProblemSpec};
use crate::error::{Error, Result};
use crate::quadrature::{self, CumulativeTable};

/// A twice-differentiable scalar function given by value, slope and
/// curvature closures.
#[derive(Clone)]
pub struct EntropyFn {
    label: String,
    value: Fn1,
    slope: Fn1,
    curvature: Fn1,
}

impl fmt::Debug for EntropyFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "EntropyFn({})", self.label)
    }
}

impl EntropyFn {
    pub fn new(
        label: impl Into<String>,
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        slope: impl Fn(f64) -> f64 + Send + Sync + 'static,
        curvature: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            value: Arc::new(value),
            slope: Arc::new(slope),
            curvature: Arc::new(curvature),
        }
    }

    pub fn zero() -> Self {
        Self::new("zero", |_| 0.0, |_| 0.0, |_| 0.0)
    }

    /// β(r) = r².
    pub fn quadratic() -> Self {
        Self::new("r^2", |r| r * r, |r| 2.0 * r, |_| 2.0)
    }

    /// β_ξ, the smooth approximation of |r|.
    pub fn smooth_abs(xi: f64) -> Self {
        Self::new(
            format!("beta_xi[{xi}]"),
            move |r| beta_smooth_abs(xi, r).0,
            move |r| beta_smooth_abs(xi, r).1,
            move |r| beta_smooth_abs(xi, r).2,
        )
    }

    /// r ↦ β(r − c) − β(−c), which keeps the value 0 at the origin.
    pub fn shifted(&self, c: f64) -> Self {
        let (v, s, k) = (self.value.clone(), self.slope.clone(), self.curvature.clone());
        let base = v(-c);
        Self::new(
            format!("{}(. - {c})", self.label),
            move |r| v(r - c) - base,
            move |r| s(r - c),
            move |r| k(r - c),
        )
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let (v, s, k) = (self.value.clone(), self.slope.clone(), self.curvature.clone());
        Self::new(
            format!("{factor}*{}", self.label),
            move |r| factor * v(r),
            move |r| factor * s(r),
            move |r| factor * k(r),
        )
    }

    pub fn add(&self, other: &EntropyFn) -> Self {
        let (v1, s1, k1) = (self.value.clone(), self.slope.clone(), self.curvature.clone());
        let (v2, s2, k2) = (other.value.clone(), other.slope.clone(), other.curvature.clone());
        Self::new(
            format!("{}+{}", self.label, other.label),
            move |r| v1(r) + v2(r),
            move |r| s1(r) + s2(r),
            move |r| k1(r) + k2(r),
        )
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    #[inline]
    pub fn value(&self, r: f64) -> f64 {
        (self.value)(r)
    }

    #[inline]
    pub fn slope(&self, r: f64) -> f64 {
        (self.slope)(r)
    }

    #[inline]
    pub fn curvature(&self, r: f64) -> f64 {
        (self.curvature)(r)
    }
}

/// (β, ζ, ν) with ζ′_k = β′f′_k and ν′ = β′Φ′, tabulated from 0.
#[derive(Clone, Debug)]
pub struct EntropyTriple {
    pub beta: EntropyFn,
    zeta: Vec<(CumulativeTable, super::ScalarMap)>,
    nu: (CumulativeTable, super::ScalarMap),
    /// max |β′| over the table.
    pub bound: f64,
    pub convex: bool,
    pub zero_slope_at_origin: bool,
    range: (f64, f64),
}

const CONVEX_TOL: f64 = 1e-12;

impl EntropyTriple {
    pub fn range(&self) -> (f64, f64) {
        self.range
    }

    pub fn dimension(&self) -> usize {
        self.zeta.len()
    }

    #[inline]
    pub fn zeta(&self, axis: usize, r: f64) -> f64 {
        let (table, f) = &self.zeta[axis];
        let b = &self.beta;
        table.eval_with(r, |s| b.slope(s) * f.slope(s))
    }

    #[inline]
    pub fn nu(&self, r: f64) -> f64 {
        let (table, phi) = &self.nu;
        let b = &self.beta;
        table.eval_with(r, |s| b.slope(s) * phi.slope(s))
    }

    /// Node spacing of the ζ/ν tables.
    pub fn spacing(&self) -> f64 {
        self.nu.0.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        self.nu.0.nodes().collect()
    }
}

/// Builds the triple for `beta` on `range`. `nodes` is a lower bound on the
/// table resolution; the default density of the composite rule is used when
/// it is finer.
pub fn make_entropy_triple(
    spec: &ProblemSpec,
    beta: EntropyFn,
    range: (f64, f64),
    nodes: usize,
    require_convex: bool,
) -> Result<EntropyTriple> {
    if nodes < 64 {
        return Err(Error::invalid(format!("entropy tables need >= 64 nodes, got {nodes}")));
    }
    let (lo, hi) = (range.0.min(0.0), range.1.max(0.0));
    if !(hi > lo) {
        return Err(Error::invalid("entropy table range is empty"));
    }
    let cells = nodes.max(quadrature::cell_count(hi - lo));
    let spacing = (hi - lo) / cells as f64;

    let b0 = beta.value(0.0);
    if b0.abs() > 1e-14 {
        return Err(Error::invalid(format!("entropy must vanish at 0, beta(0) = {b0}")));
    }
    let mut bound = 0.0f64;
    let mut convex = true;
    let mut worst = (0.0, 0.0);
    for i in 0..=cells {
        let r = lo + i as f64 * spacing;
        let s = beta.slope(r);
        let c = beta.curvature(r);
        if !(s.is_finite() && c.is_finite()) {
            return Err(Error::NonEvaluable {
                name: beta.label().to_string(),
                at: r,
            });
        }
        bound = bound.max(s.abs());
        if c < -CONVEX_TOL {
            if convex || c < worst.1 {
                worst = (r, c);
            }
            convex = false;
        }
    }
    if require_convex && !convex {
        return Err(Error::NotConvex {
            at: worst.0,
            value: worst.1,
        });
    }

    let zeta = spec
        .flux
        .iter()
        .map(|comp| {
            let (b, f) = (beta.clone(), comp.map.clone());
            let table = CumulativeTable::build(lo, hi, cells, move |s| b.slope(s) * f.slope(s));
            (table, comp.map.clone())
        })
        .collect();
    let (b, phi) = (beta.clone(), spec.diffusion.clone());
    let nu_table = CumulativeTable::build(lo, hi, cells, move |s| b.slope(s) * phi.slope(s));
    let zero_slope_at_origin = beta.slope(0.0).abs() <= 1e-14;

    Ok(EntropyTriple {
        beta,
        zeta,
        nu: (nu_table, spec.diffusion.clone()),
        bound,
        convex,
        zero_slope_at_origin,
        range: (lo, hi),
    })
}

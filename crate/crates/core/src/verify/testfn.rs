//! Space-time test functions ψ(t, x) = φ(x)·θ(t) in physical coordinates.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::solver::Grid;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Spatial {
    /// (1 − |x−c|²/r²)³ inside the ball, 0 outside; C² with closed-form
    /// derivatives.
    Bump { center: [f64; 2], radius: f64 },
    /// 1 on |x| < m, (m/|x|)^a outside, a = d/2 + θ.
    Weighted { m: f64, theta: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Temporal {
    Constant,
    /// 1 up to `hold`, then linearly down to 0 at `hold + ramp`.
    Ramp { hold: f64, ramp: f64 },
}

impl Temporal {
    /// (θ(s), θ′(s)).
    #[inline]
    pub fn eval(&self, s: f64) -> (f64, f64) {
        match *self {
            Temporal::Constant => (1.0, 0.0),
            Temporal::Ramp { hold, ramp } => {
                if s <= hold {
                    (1.0, 0.0)
                } else if s < hold + ramp {
                    ((ramp - s + hold) / ramp, -1.0 / ramp)
                } else {
                    (0.0, 0.0)
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TestFunction {
    pub spatial: Spatial,
    pub temporal: Temporal,
}

/// ψ's spatial data at one cell centre.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PsiCell {
    pub index: usize,
    pub value: f64,
    pub grad: [f64; 2],
    pub lap: f64,
}

impl TestFunction {
    pub fn bump(center: [f64; 2], radius: f64, temporal: Temporal) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::invalid(format!("bump radius must be > 0, got {radius}")));
        }
        Self::check_temporal(&temporal)?;
        Ok(Self {
            spatial: Spatial::Bump { center, radius },
            temporal,
        })
    }

    /// φ_m(x)·φ_h^t(s).
    pub fn weighted_ramp(m: f64, theta: f64, hold: f64, ramp: f64) -> Result<Self> {
        if !(m > 0.0 && theta > 0.0) {
            return Err(Error::invalid("weighted test function needs m > 0 and theta > 0"));
        }
        let temporal = Temporal::Ramp { hold, ramp };
        Self::check_temporal(&temporal)?;
        Ok(Self {
            spatial: Spatial::Weighted { m, theta },
            temporal,
        })
    }

    fn check_temporal(t: &Temporal) -> Result<()> {
        if let Temporal::Ramp { hold, ramp } = *t {
            if !(ramp > 0.0 && hold >= 0.0) {
                return Err(Error::invalid("ramp needs hold >= 0 and width > 0"));
            }
        }
        Ok(())
    }

    /// φ(x), ∇φ(x), Δφ(x) for x ∈ ℝ^d (d = x.len()).
    pub fn spatial_parts(&self, x: &[f64]) -> (f64, [f64; 2], f64) {
        let d = x.len();
        match self.spatial {
            Spatial::Bump { center, radius } => {
                let r2 = radius * radius;
                let mut diff = [0.0; 2];
                let mut s = 0.0;
                for k in 0..d {
                    diff[k] = x[k] - center[k];
                    s += diff[k] * diff[k];
                }
                s /= r2;
                if s >= 1.0 {
                    return (0.0, [0.0; 2], 0.0);
                }
                let q = 1.0 - s;
                let g = -6.0 * q * q / r2;
                let grad = [g * diff[0], g * diff[1]];
                let lap = -6.0 / r2 * (d as f64 * q * q - 4.0 * q * s);
                (q * q * q, grad, lap)
            }
            Spatial::Weighted { m, theta } => {
                let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                let a = 0.5 * d as f64 + theta;
                let v = if r < m { 1.0 } else { (m / r).powf(a) };
                (v, [0.0; 2], 0.0)
            }
        }
    }

    pub fn value(&self, t: f64, x: &[f64]) -> f64 {
        self.spatial_parts(x).0 * self.temporal.eval(t).0
    }

    /// Cells where φ is nonzero, with its derivatives. Fails if any of them
    /// lies within `ring` cells of the box boundary.
    pub fn cells(&self, grid: &Grid, ring: usize) -> Result<Vec<PsiCell>> {
        let d = grid.dimension;
        let mut out = Vec::new();
        for k in 0..grid.len() {
            let c = grid.centre(k);
            let (value, grad, lap) = self.spatial_parts(&c[..d]);
            if value != 0.0 || grad != [0.0; 2] || lap != 0.0 {
                if grid.in_boundary_ring(k, ring) {
                    return Err(Error::SupportTouchesBoundary);
                }
                out.push(PsiCell {
                    index: k,
                    value,
                    grad,
                    lap,
                });
            }
        }
        Ok(out)
    }
}

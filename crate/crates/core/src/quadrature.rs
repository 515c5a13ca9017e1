//! Fixed-rule quadrature used by the scalar calculus kernels.
//!
//! Integrands in this crate are at worst Lipschitz, so composite rules on a
//! uniform partition are adequate. Cumulative tables store node values and
//! node derivatives and interpolate with cubic Hermite polynomials.

/// Cells per unit length for composite rules.
pub const CELLS_PER_UNIT: usize = 1024;

const GL8_NODES: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329_0,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];

const GL8_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_3,
    0.222_381_034_453_374_5,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362_0,
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// 8-point Gauss–Legendre rule on `[a, b]`.
pub fn gauss_legendre_8(a: f64, b: f64, mut g: impl FnMut(f64) -> f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    GL8_NODES
        .iter()
        .zip(GL8_WEIGHTS.iter())
        .map(|(x, w)| w * g(mid + half * x))
        .sum::<f64>()
        * half
}

/// Nodes and weights of the 8-point rule mapped to `[a, b]`.
pub fn gauss_legendre_8_nodes(a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    GL8_NODES
        .iter()
        .zip(GL8_WEIGHTS.iter())
        .map(move |(x, w)| (mid + half * x, w * half))
}

/// Number of composite cells used on an interval of the given length.
pub fn cell_count(length: f64) -> usize {
    ((length.abs() * CELLS_PER_UNIT as f64).ceil() as usize).max(16)
}

/// Composite Simpson (trapezoid plus midpoint) integral of `g` from 0 to `x`.
pub fn integrate_from_zero(x: f64, g: impl Fn(f64) -> f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let n = cell_count(x);
    let h = x / n as f64;
    let mut acc = 0.0;
    let mut left = g(0.0);
    for i in 0..n {
        let a = i as f64 * h;
        let right = g(a + h);
        acc += left + 4.0 * g(a + 0.5 * h) + right;
        left = right;
    }
    acc * h / 6.0
}

/// Antiderivative of a function, tabulated on a uniform grid and anchored to
/// vanish at the origin.
#[derive(Debug, Clone)]
pub struct CumulativeTable {
    lo: f64,
    spacing: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl CumulativeTable {
    /// Tabulates `∫₀^r g` on `[lo, hi]` with `cells` uniform cells. The range
    /// is widened to contain 0 when needed.
    pub fn build(lo: f64, hi: f64, cells: usize, g: impl Fn(f64) -> f64) -> Self {
        let lo = lo.min(0.0);
        let hi = hi.max(0.0);
        let cells = cells.max(2);
        let spacing = if hi > lo { (hi - lo) / cells as f64 } else { 1.0 };
        let nodes: Vec<f64> = (0..=cells).map(|i| lo + i as f64 * spacing).collect();
        let slopes: Vec<f64> = nodes.iter().map(|&r| g(r)).collect();

        // Integrate cellwise from the node nearest 0, then correct by the
        // offset between that node and 0.
        let anchor = (((0.0 - lo) / spacing).round() as usize).min(cells);
        let mut values = vec![0.0; cells + 1];
        for i in anchor..cells {
            let mid = g(nodes[i] + 0.5 * spacing);
            values[i + 1] = values[i] + spacing / 6.0 * (slopes[i] + 4.0 * mid + slopes[i + 1]);
        }
        for i in (0..anchor).rev() {
            let mid = g(nodes[i] + 0.5 * spacing);
            values[i] = values[i + 1] - spacing / 6.0 * (slopes[i] + 4.0 * mid + slopes[i + 1]);
        }
        let offset = nodes[anchor];
        if offset != 0.0 {
            let shift = gauss_legendre_8(0.0, offset, &g);
            for v in values.iter_mut() {
                *v += shift;
            }
        }
        Self {
            lo,
            spacing,
            values,
            slopes,
        }
    }

    pub fn range(&self) -> (f64, f64) {
        (self.lo, self.lo + self.spacing * (self.values.len() - 1) as f64)
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |i| self.lo + i as f64 * self.spacing)
    }

    pub fn node_values(&self) -> &[f64] {
        &self.values
    }

    /// Cubic Hermite interpolation inside the table; outside the range the
    /// caller supplies the integrand for an explicit tail integral.
    pub fn eval_with(&self, r: f64, g: impl Fn(f64) -> f64) -> f64 {
        let (lo, hi) = self.range();
        if r < lo {
            return self.values[0] - integrate_segment(r, lo, &g);
        }
        if r > hi {
            let last = self.values.len() - 1;
            return self.values[last] + integrate_segment(hi, r, &g);
        }
        self.interpolate(r)
    }

    /// Interpolates inside the tabulated range, clamping outside it.
    pub fn interpolate(&self, r: f64) -> f64 {
        let last = self.values.len() - 1;
        let s = ((r - self.lo) / self.spacing).clamp(0.0, last as f64);
        let i = (s.floor() as usize).min(last - 1);
        let t = s - i as f64;
        let h = self.spacing;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1
    }
}

fn integrate_segment(a: f64, b: f64, g: &impl Fn(f64) -> f64) -> f64 {
    let panels = ((b - a).abs() * 64.0).ceil().max(1.0) as usize;
    let w = (b - a) / panels as f64;
    (0..panels)
        .map(|p| gauss_legendre_8(a + p as f64 * w, a + (p + 1) as f64 * w, g))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_exact_for_degree_fifteen() {
        let v = gauss_legendre_8(-1.0, 2.0, |x| x.powi(15) + x.powi(4));
        let exact = (2f64.powi(16) - 1.0) / 16.0 + (32.0 + 1.0) / 5.0;
        assert!((v - exact).abs() < 1e-9 * exact.abs());
    }

    #[test]
    fn simpson_exact_on_cubics() {
        let v = integrate_from_zero(-1.5, |x| 3.0 * x * x * x - x);
        let exact = 3.0 * 1.5f64.powi(4) / 4.0 - 1.5 * 1.5 / 2.0;
        assert!((v - exact).abs() < 1e-12);
    }

    #[test]
    fn table_anchored_at_zero_off_node() {
        // 0 is not a node of this partition
        let t = CumulativeTable::build(-1.3, 2.1, 77, |x| x.cos());
        for r in [-1.2, -0.4, 0.0, 0.7, 2.0] {
            assert!((t.interpolate(r) - r.sin()).abs() < 1e-7, "r = {r}");
        }
        assert!((t.eval_with(3.0, |x| x.cos()) - 3f64.sin()).abs() < 1e-7);
        assert!((t.eval_with(-2.5, |x| x.cos()) - (-2.5f64).sin()).abs() < 1e-7);
    }
}

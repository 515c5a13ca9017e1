use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{KirchhoffTable, ProblemSpec};
use crate::solver::{replay, Field, Grid, PathSample, StepObserver, StepView};

use super::defect::band_bracket;

/// Thresholds, relative to Ē at the smallest level, at which a dissipating
/// level is selected.
pub const DISSIPATION_THRESHOLDS: [f64; 6] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6];

/// ∫₀¹ (1−λ)·1{ℓ < |u+λη| < ℓ+δ} dλ in closed form.
pub(crate) fn band_lambda_weight(u: f64, eta: f64, level: f64, width: f64) -> f64 {
    if eta == 0.0 {
        let a = u.abs();
        return if a > level && a < level + width { 0.5 } else { 0.0 };
    }
    let f = |l: f64| l - 0.5 * l * l;
    let mut acc = 0.0;
    for (lo, hi) in [(level, level + width), (-level - width, -level)] {
        let (mut a, mut b) = ((lo - u) / eta, (hi - u) / eta);
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        let (a, b) = (a.max(0.0), b.min(1.0));
        if b > a {
            acc += f(b) - f(a);
        }
    }
    acc
}

/// E₁(ℓ) = Δx^d Σ_{|u₀|>ℓ} |u₀|.
pub fn data_tail_mass(initial: &Field, grid: &Grid, level: f64) -> f64 {
    grid.cell_volume() * initial.values.iter().filter(|u| u.abs() > level).fold(0.0, |s, u| s + u.abs())
}

/// Streams, for every (δ, ℓ) pair on the ladders, the unit-K defect mass
/// (1/δ)∬ 1_band (|D_hG|² + ε|D_hu|² + σ²/2) and optionally the boundary
/// terms E₂ = (1/δ)∬ 1_band σ² and
/// E₃ = (1/δ)∬∫_E η² ∫₀¹(1−λ) 1{ℓ<|u+λη|<ℓ+δ} dλ m(dz).
/// Arrays are indexed `[width][level]`.
pub struct LevelBands<'a> {
    spec: &'a ProblemSpec,
    grid: Grid,
    epsilon: f64,
    table: KirchhoffTable,
    pub levels: Vec<f64>,
    pub widths: Vec<f64>,
    boundary_terms: bool,
    /// c with |η(u; z)| ≤ c·|u| on the mark nodes, if known.
    eta_growth: Option<f64>,
    pub mass: Vec<Vec<f64>>,
    pub e2: Vec<Vec<f64>>,
    pub e3: Vec<Vec<f64>>,
}

impl<'a> LevelBands<'a> {
    pub fn new(
        spec: &'a ProblemSpec,
        grid: Grid,
        epsilon: f64,
        levels: Vec<f64>,
        widths: Vec<f64>,
        boundary_terms: bool,
    ) -> Result<Self> {
        if levels.is_empty() || widths.is_empty() {
            return Err(Error::invalid("level and width ladders must be nonempty"));
        }
        if levels.windows(2).any(|w| !(w[1] > w[0])) || levels[0] <= 0.0 {
            return Err(Error::invalid("levels must be positive and strictly increasing"));
        }
        if widths.iter().any(|&d| !(d > 0.0)) {
            return Err(Error::invalid("band widths must be > 0"));
        }
        let top = levels.last().unwrap() + widths.iter().cloned().fold(0.0, f64::max);
        let zeros = vec![vec![0.0; levels.len()]; widths.len()];
        // |η(u;z)| ≤ L_η·h(z)·|u| when η(0;z) = 0, by the Lipschitz bound.
        let nodes = spec.marks.nodes();
        let eta_growth = nodes.iter().all(|&(z, _)| spec.eta.eval(0.0, z) == 0.0).then(|| {
            let h = nodes.iter().map(|&(z, _)| spec.profile.eval(z).abs()).fold(0.0, f64::max);
            spec.constants.lip_eta * h
        });
        Ok(Self {
            spec,
            grid,
            epsilon,
            table: KirchhoffTable::new(spec, top.max(spec.constants.state_bound))?,
            levels,
            widths,
            boundary_terms,
            eta_growth,
            mass: zeros.clone(),
            e2: zeros.clone(),
            e3: zeros,
        })
    }

    /// Indices of levels ℓ with lo < ℓ < hi.
    #[inline]
    fn level_range(&self, lo: f64, hi: f64) -> std::ops::Range<usize> {
        let a = self.levels.partition_point(|&l| l <= lo);
        let b = self.levels.partition_point(|&l| l < hi);
        a..b.max(a)
    }
}

impl StepObserver for LevelBands<'_> {
    fn on_step(&mut self, v: &StepView) {
        let w = v.dt * self.grid.cell_volume();
        let jumps = self.boundary_terms && self.spec.has_jumps();
        let lmin = self.levels[0];
        let reach = self.eta_growth.map_or(f64::INFINITY, |g| 1.0 + g);
        for (k, &u) in v.state.iter().enumerate() {
            let a = u.abs();
            let mut bracket = None;
            for (wi, &delta) in self.widths.iter().enumerate() {
                let range = self.level_range(a - delta, a);
                if range.is_empty() {
                    continue;
                }
                let b = *bracket.get_or_insert_with(|| {
                    band_bracket(self.spec, &self.table, &self.grid, self.epsilon, v.state, k)
                });
                let s2 = if self.boundary_terms {
                    let s = self.spec.sigma.eval(u);
                    s * s
                } else {
                    0.0
                };
                for l in range {
                    self.mass[wi][l] += w * b / delta;
                    self.e2[wi][l] += w * s2 / delta;
                }
            }
            if !jumps || a * reach <= lmin {
                continue;
            }
            for &(z, wz) in self.spec.marks.nodes() {
                let eta = self.spec.eta.eval(u, z);
                if eta == 0.0 {
                    continue;
                }
                let end = u + eta;
                let vmax = a.max(end.abs());
                let vmin = if u * end <= 0.0 { 0.0 } else { a.min(end.abs()) };
                for (wi, &delta) in self.widths.iter().enumerate() {
                    for l in self.level_range(vmin - delta, vmax) {
                        let lw = band_lambda_weight(u, eta, self.levels[l], delta);
                        self.e3[wi][l] += w * wz * eta * eta * lw / delta;
                    }
                }
            }
        }
    }
}

/// (E₁, E₂, E₃) at one (ℓ, δ), ensemble means.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundaryLayer {
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
}

impl BoundaryLayer {
    pub fn total(&self) -> f64 {
        self.e1 + self.e2 + self.e3
    }
}

fn ensemble_bands(ensemble: &[PathSample], levels: &[f64], width: f64) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let first = ensemble.first().ok_or_else(|| Error::invalid("empty ensemble"))?;
    let m = ensemble.len() as f64;
    let mut e1 = vec![0.0; levels.len()];
    let mut e2 = vec![0.0; levels.len()];
    let mut e3 = vec![0.0; levels.len()];
    for path in ensemble {
        let mut bands = LevelBands::new(&path.spec, path.grid, path.epsilon, levels.to_vec(), vec![width], true)?;
        replay(path, &mut [&mut bands])?;
        for l in 0..levels.len() {
            e1[l] += data_tail_mass(path.initial(), &first.grid, levels[l]) / m;
            e2[l] += bands.e2[0][l] / m;
            e3[l] += bands.e3[0][l] / m;
        }
    }
    Ok((e1, e2, e3))
}

/// Boundary-layer terms of stored every-step paths at one (ℓ, δ).
pub fn boundary_layer_mass(ensemble: &[PathSample], level: f64, width: f64) -> Result<BoundaryLayer> {
    let (e1, e2, e3) = ensemble_bands(ensemble, &[level], width)?;
    Ok(BoundaryLayer {
        e1: e1[0],
        e2: e2[0],
        e3: e3[0],
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LevelEntry {
    pub level: f64,
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    pub total: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DissipationReport {
    pub width: f64,
    pub entries: Vec<LevelEntry>,
    /// For each relative threshold, the first level with Ē ≤ threshold·Ē(ℓ₀).
    pub selected: Vec<(f64, Option<f64>)>,
    /// Ē at the largest level does not exceed Ē at the smallest.
    pub end_to_end_decrease: bool,
}

/// Selects dissipating levels from precomputed ensemble means.
pub fn dissipation_from_terms(
    levels: &[f64],
    width: f64,
    e1: &[f64],
    e2: &[f64],
    e3: &[f64],
) -> Result<DissipationReport> {
    let entries: Vec<LevelEntry> = (0..levels.len())
        .map(|l| LevelEntry {
            level: levels[l],
            e1: e1[l],
            e2: e2[l],
            e3: e3[l],
            total: e1[l] + e2[l] + e3[l],
        })
        .collect();
    let base = entries[0].total;
    let selected: Vec<(f64, Option<f64>)> = DISSIPATION_THRESHOLDS
        .iter()
        .map(|&t| (t, entries.iter().find(|e| e.total <= t * base).map(|e| e.level)))
        .collect();
    if selected[0].1.is_none() {
        return Err(Error::InsufficientLevels {
            threshold: DISSIPATION_THRESHOLDS[0],
        });
    }
    Ok(DissipationReport {
        width,
        end_to_end_decrease: entries.last().unwrap().total <= base,
        entries,
        selected,
    })
}

/// Ē(ℓ) = E₁ + E₂ + E₃ over the level grid and the selected dissipating
/// levels. The grid must cover [‖u₀‖∞/2, 4‖u₀‖∞].
pub fn find_dissipating_levels(ensemble: &[PathSample], levels: &[f64], width: f64) -> Result<DissipationReport> {
    let first = ensemble.first().ok_or_else(|| Error::invalid("empty ensemble"))?;
    let sup = first.initial().sup();
    if levels.is_empty() || levels[0] > 0.5 * sup * (1.0 + 1e-9) || *levels.last().unwrap() < 4.0 * sup * (1.0 - 1e-9) {
        return Err(Error::invalid(format!(
            "level grid must cover [{}, {}]",
            0.5 * sup,
            4.0 * sup
        )));
    }
    let (e1, e2, e3) = ensemble_bands(ensemble, levels, width)?;
    dissipation_from_terms(levels, width, &e1, &e2, &e3)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{InitialData, ProblemConfig};
    use crate::noise::SeedKey;
    use crate::quadrature::gauss_legendre_8;
    use crate::solver::{solve, SolveOptions, StoreTimes};

    #[test]
    fn lambda_weight_matches_quadrature() {
        for &(u, eta) in &[(0.9, 0.3), (1.3, -0.5), (-1.1, 0.4), (0.2, -1.5), (1.05, 0.0)] {
            let exact = band_lambda_weight(u, eta, 1.0, 0.1);
            // oracle: fine composite rule on the discontinuous integrand
            let n = 20_000;
            let quad: f64 = (0..n)
                .map(|i| {
                    let a = i as f64 / n as f64;
                    gauss_legendre_8(a, a + 1.0 / n as f64, |l| {
                        let v = (u + l * eta).abs();
                        if v > 1.0 && v < 1.1 {
                            1.0 - l
                        } else {
                            0.0
                        }
                    })
                })
                .sum();
            assert!((exact - quad).abs() < 1e-4, "u={u} eta={eta}: {exact} vs {quad}");
        }
    }

    #[test]
    fn tail_mass_of_indicator() {
        let spec = ProblemSpec::zero(1, InitialData::new("2*1[-1,1]", |x| if x[0].abs() < 1.0 { 2.0 } else { 0.0 }))
            .unwrap();
        let grid = Grid::new(1, 64, 2.0).unwrap();
        let u0 = grid.sample(&spec.initial);
        assert!((data_tail_mass(&u0, &grid, 1.0) - 4.0).abs() < 1e-12);
        assert_eq!(data_tail_mass(&u0, &grid, 2.0), 0.0);
    }

    fn run(cfg: &ProblemConfig, m: u64) -> Vec<PathSample> {
        let spec = cfg.build().unwrap();
        let grid = Grid::new(1, 64, 4.0).unwrap();
        let opts = SolveOptions::new(0.05, 0.2).store(StoreTimes::EveryStep);
        (0..m)
            .map(|i| solve(&spec, &grid, &opts, SeedKey::new(2, i), None, &mut []).unwrap())
            .collect()
    }

    #[test]
    fn zero_noise_leaves_only_data_tail() {
        let cfg = ProblemConfig::default().deterministic();
        let ens = run(&cfg, 2);
        let sup = ens[0].initial().sup();
        let levels: Vec<f64> = (1..=8).map(|i| 0.5 * sup * i as f64).collect();
        let rep = find_dissipating_levels(&ens, &levels, 0.1).unwrap();
        for e in &rep.entries {
            assert_eq!(e.e2, 0.0);
            assert_eq!(e.e3, 0.0);
            assert!((e.e1 - data_tail_mass(ens[0].initial(), &ens[0].grid, e.level)).abs() < 1e-15);
        }
        assert_eq!(rep.entries.last().unwrap().total, 0.0);
        assert!(rep.end_to_end_decrease);
    }

    #[test]
    fn high_level_vanishes_for_bounded_paths() {
        let ens = run(&ProblemConfig::default(), 3);
        let top = ens
            .iter()
            .flat_map(|p| p.snapshots.iter().map(|f| f.sup()))
            .fold(0.0, f64::max);
        let bl = boundary_layer_mass(&ens, top + 1.0, 0.1).unwrap();
        assert_eq!(bl, BoundaryLayer { e1: 0.0, e2: 0.0, e3: 0.0 });
        let low = boundary_layer_mass(&ens, 0.5, 0.1).unwrap();
        assert!(low.e2 > 0.0 && low.e3 > 0.0);
    }

    #[test]
    fn level_grid_must_cover_range() {
        let ens = run(&ProblemConfig::default().deterministic(), 1);
        assert!(find_dissipating_levels(&ens, &[0.5, 1.0], 0.1).is_err());
    }
}

//! A-priori quantities along paths: norms, truncated Kirchhoff energies,
//! defect measures, boundary-layer masses and the discrete Itô–Lévy
//! identity.

mod boundary;
mod defect;
mod energy;
mod ito;

pub use boundary::{
    boundary_layer_mass, data_tail_mass, dissipation_from_terms, find_dissipating_levels, BoundaryLayer,
    DissipationReport, LevelBands, LevelEntry, DISSIPATION_THRESHOLDS,
};
pub use defect::{defect_measure, DefectCell, DefectMeasure, DefectSummary};
pub use energy::{kirchhoff_energy, norm_table, KirchhoffEnergy, NormRow};
pub use ito::{ito_levy_ensemble, ito_levy_ladder, ito_levy_residual, ItoLadder, ItoLevyResidual, ItoReport, LadderRung};

use crate::solver::Grid;

/// Σ over axes of the squared forward difference of `v` at cell `k`.
#[inline]
pub(crate) fn forward_grad_sq(grid: &Grid, v: &[f64], k: usize) -> f64 {
    let dx = grid.dx();
    (0..grid.dimension)
        .map(|axis| {
            let d = (v[grid.neighbour(k, axis, 1)] - v[k]) / dx;
            d * d
        })
        .sum()
}

/// Average of the squared forward and backward differences, summed over
/// axes; second-order accurate for |∇v|² at the cell centre.
#[inline]
pub(crate) fn centred_grad_sq(grid: &Grid, v: &[f64], k: usize) -> f64 {
    let dx = grid.dx();
    (0..grid.dimension)
        .map(|axis| {
            let f = (v[grid.neighbour(k, axis, 1)] - v[k]) / dx;
            let b = (v[k] - v[grid.neighbour(k, axis, -1)]) / dx;
            0.5 * (f * f + b * b)
        })
        .sum()
}

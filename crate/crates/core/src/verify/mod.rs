//! Entropy-inequality residuals, stability checks and the jump-sign scan.

mod contraction;
mod jump_sign;
mod residual;
mod testfn;
mod viscosity;

pub use contraction::{
    contraction_check, gronwall_stability, paired_ratios, truncated_data_cauchy, CauchyRow, CauchyTable, ContractionCurve, Ensemble,
    GronwallRow, GronwallTrace, PairedRatios,
};
pub use jump_sign::{jump_integrand, jump_sign_check, scan_grid, JumpSample, JumpSignReport, SIGN_TOLERANCE};
pub use residual::{
    discretization_budget, renormalized_residual, residual_terms, RenormalizedResidual, ResidualReport,
    ResidualTerms, Verdict,
};
pub use testfn::{PsiCell, Spatial, Temporal, TestFunction};
pub use viscosity::{restrict, viscosity_convergence, DistanceRow, Rung, RungInfo, ViscosityTable};

//! Configuration, ensemble runs, recipes and result files.

mod config;
mod ensemble;
mod output;
mod recipes;

pub use config::{
    env_name, CheckConfig, EnsembleConfig, ExperimentConfig, GridConfig, OutputConfig, SolverConfig, ENV_PREFIX,
};
pub use ensemble::{ensemble_stats, run_ensemble, EnsembleStats, PathSeed, RunManifest};
pub use output::{sha256_hex, FileEntry, OutputDir};
pub use recipes::{
    injected_expansion_shock, read_verdicts, residual_study, run_recipe, RecipeRunner, ResidualRow, ResidualStudy,
    VerdictRecord, RECIPES,
};

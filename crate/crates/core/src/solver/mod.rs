//! Explicit finite-volume scheme for the viscous problem on a periodic box.

mod grid;
mod io;
mod path;
mod scheme;

pub use grid::{Field, Grid};
pub use io::{read_snapshot, snapshot_to_string, parse_snapshot, write_snapshot};
pub use path::{
    replay, solve, solve_coupled, solve_path, solve_truncated_data, JumpView, PathSample, SolveOptions, StepObserver,
    StepView, StoreTimes,
};
pub use scheme::{stable_dt, Stepper, CFL_HYPERBOLIC, CFL_PARABOLIC};

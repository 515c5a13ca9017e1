//! L¹ contraction under shared noise, and the Gronwall trace that turns it
//! into stability with respect to truncated data.
//!
//!     cargo run --release --example contraction

use levy_renorm::model::ProblemConfig;
use levy_renorm::solver::{Field, Grid, SolveOptions, StoreTimes};
use levy_renorm::verify::{contraction_check, gronwall_stability, Ensemble, TestFunction};

fn main() -> levy_renorm::Result<()> {
    let cfg = ProblemConfig::default();
    let grid = Grid::new(1, 256, 4.0)?;
    let opts = SolveOptions::new(0.05, 0.5).store(StoreTimes::At(vec![0.0]));

    for (name, spec) in [("deterministic", cfg.deterministic().build()?), ("full noise", cfg.build()?)] {
        let u0 = grid.sample(&spec.initial);
        let v0 = Field::new(u0.values.iter().map(|v| 0.5 * v).collect(), 0.0);
        let paths = if spec.has_noise() { 64 } else { 1 };
        let c = contraction_check(&spec, &u0, &v0, &grid, &opts, Ensemble::new(paths, 3, 4)?)?;
        let n = c.times.len();
        println!(
            "{name}: |u0-v0|_1 {:.4}, ratio at T {:.4} ± {:.1e}, sup ratio {:.4}, largest step increase {:.2e}",
            c.data_distance,
            c.mean[n - 1],
            c.se[n - 1],
            c.c_emp,
            c.max_step_increase
        );
    }

    let spec = cfg.build()?;
    let weight = TestFunction::weighted_ramp(1.0, 0.5, 0.5, 1.0)?;
    let c_emp = 1.05;
    let g = gronwall_stability(&spec, 0.5, &grid, &opts, Ensemble::new(64, 3, 4)?, c_emp, &weight, 5)?;
    println!("gronwall at level {}: |T_n u0 - u0|_1 = {:.4}", g.level, g.data_distance);
    for r in &g.rows {
        println!("  t={:.2}  lhs {:.4e} ± {:.1e}  rhs {:.4e}  margin {:+.3e}", r.time, r.lhs_mean, r.lhs_se, r.rhs, r.margin);
    }
    println!("  {}", g.verdict);
    Ok(())
}

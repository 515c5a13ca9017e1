//! Heavy-tailed initial data |x|^(-1/2)(1+|x|)^(-2): solutions from the
//! truncations T_n u0 form a Cauchy sequence, each pairwise distance
//! controlled by the data distance.
//!
//!     cargo run --release --example truncated_data

use levy_renorm::harness::ExperimentConfig;
use levy_renorm::solver::StoreTimes;
use levy_renorm::verify::{truncated_data_cauchy, Ensemble};

fn main() -> levy_renorm::Result<()> {
    let mut cfg = ExperimentConfig::parse(include_str!("../../../configs/cauchy.cfg"))?;
    cfg.ensemble.paths = 16;
    let spec = cfg.problem.build()?;
    let grid = cfg.grid()?;
    let opts = cfg.solve_options().store(StoreTimes::At(vec![0.0]));
    let u0 = grid.sample(&spec.initial);
    println!("|u0|_1 = {:.4}, |u0|_inf = {:.3} on the grid", u0.l1(&grid), u0.sup());
    let c_emp = 1.05;
    let t = truncated_data_cauchy(&spec, &cfg.check.cauchy_levels, &grid, &opts, Ensemble::new(16, cfg.ensemble.seed, 4)?, c_emp)?;
    print!("{}", t.to_csv());
    println!("consecutive distances decrease: {}  ({})", t.consecutive_decrease, t.verdict);
    Ok(())
}

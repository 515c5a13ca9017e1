//! Inviscid Burgers with Riemann data 1 on [−1, 0): a shock moving at speed
//! 1/2 and a rarefaction fan behind it. Compares the scheme to the exact
//! solution in L¹ on a sequence of grids.
//!
//!     cargo run --release --example burgers_riemann

use levy_renorm::model::ProblemConfig;
use levy_renorm::noise::SeedKey;
use levy_renorm::solver::{solve_path, Grid, SolveOptions};

fn exact(x: f64, t: f64) -> f64 {
    // fan from x = −1 meets the shock from x = 0 at t = 2; t < 2 here
    if x < -1.0 {
        0.0
    } else if x < -1.0 + t {
        (x + 1.0) / t
    } else if x < 0.5 * t {
        1.0
    } else {
        0.0
    }
}

fn main() -> levy_renorm::Result<()> {
    let spec = ProblemConfig {
        initial: "riemann".into(),
        diffusion: "zero".into(),
        ..ProblemConfig::default()
    }
    .deterministic()
    .build()?;
    let t = 0.5;
    let mut last: Option<f64> = None;
    for n in [128, 256, 512, 1024] {
        let grid = Grid::new(1, n, 4.0)?;
        let path = solve_path(&spec, &grid, &SolveOptions::new(0.0, t), SeedKey::new(0, 0))?;
        let u = path.last();
        let err: f64 = (0..grid.len()).map(|i| (u.values[i] - exact(grid.coord(i), t)).abs()).sum::<f64>() * grid.dx();
        let shock = (0..grid.len() - 1)
            .find(|&i| grid.coord(i) > 0.0 && u.values[i] >= 0.5 && u.values[i + 1] < 0.5)
            .map_or(f64::NAN, |i| grid.coord(i) + 0.5 * grid.dx());
        let rate = last.map_or(String::new(), |e| format!("  rate {:.2}", (e / err).log2()));
        println!("N={n:<5} dt={:.2e}  L1 error {err:.4e}  shock at {shock:.4} (exact 0.25){rate}", path.dt);
        last = Some(err);
    }
    Ok(())
}

//! Discrete Itô–Lévy identity for ∫S(u)ψ with S(u) = u².
//!
//! Noise-free heat flow first: the residual should shrink like dt + Δx².
//! Then the full catalog noise, where only the ensemble mean has to vanish.
//!
//!     cargo run --release --example ito_levy_identity

use levy_renorm::functionals::{ito_levy_ensemble, ito_levy_ladder};
use levy_renorm::model::{make_entropy_triple, EntropyFn, ProblemConfig};
use levy_renorm::solver::{Grid, SolveOptions};
use levy_renorm::verify::{Ensemble, Temporal, TestFunction};

fn main() -> levy_renorm::Result<()> {
    let heat = ProblemConfig {
        flux: "zero".into(),
        diffusion: "linear".into(),
        diffusion_scale: 1.0,
        initial: "gaussian".into(),
        initial_width: 0.7,
        ..ProblemConfig::default()
    }
    .deterministic()
    .build()?;
    let psi = TestFunction::bump([0.1, 0.0], 2.0, Temporal::Constant)?;
    let triple = make_entropy_triple(&heat, EntropyFn::quadratic(), (-2.5, 2.5), 256, true)?;
    let opts = SolveOptions::new(0.0, 0.2);
    let ladder = ito_levy_ladder(&heat, &[64, 128, 256, 512], 4.0, &opts, &triple, &psi)?;
    println!("{:>6} {:>10} {:>12} {:>12}", "N", "dt", "dt+dx^2", "residual");
    for r in &ladder.rungs {
        println!("{:>6} {:>10.3e} {:>12.4e} {:>12.4e}", r.cells, r.dt, r.h, r.residual);
    }
    println!("pairwise orders {:?}", ladder.orders);
    println!("fitted order    {:.3}", ladder.order);

    // Same smooth heat flow driven by the catalog Brownian and jump noise.
    let noisy = ProblemConfig {
        flux: "zero".into(),
        diffusion: "linear".into(),
        diffusion_scale: 1.0,
        initial: "gaussian".into(),
        initial_width: 0.7,
        ..ProblemConfig::default()
    }
    .build()?;
    let grid = Grid::new(1, 512, 4.0)?;
    let (stat, reports) = ito_levy_ensemble(&noisy, &grid, &opts, Ensemble::new(256, 7, 4)?, &triple, &psi)?;
    let m = reports.len() as f64;
    let bm = reports.iter().map(|r| r.brownian).sum::<f64>() / m;
    let jm = reports.iter().map(|r| r.jump_martingale).sum::<f64>() / m;
    println!(
        "full noise:   mean {:+.3e}  se {:.3e}  |mean|/se {:.2}  (martingale means {bm:+.2e}, {jm:+.2e})",
        stat.mean,
        stat.se,
        stat.mean.abs() / stat.se
    );

    // With Burgers flux the upwind scheme dissipates S on its own; the
    // identity then picks up an O(Δx) defect even without noise.
    let burgers = ProblemConfig::default().deterministic().build()?;
    let triple = make_entropy_triple(&burgers, EntropyFn::quadratic(), (-2.5, 2.5), 256, true)?;
    for n in [128, 256, 512] {
        let grid = Grid::new(1, n, 4.0)?;
        let (s, _) = ito_levy_ensemble(&burgers, &grid, &SolveOptions::new(0.05, 0.5), Ensemble::new(1, 0, 1)?, &triple, &psi)?;
        println!("burgers N={n:<4} scheme defect {:+.3e}", s.mean);
    }
    Ok(())
}

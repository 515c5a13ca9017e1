//! Distances between viscous solutions on jointly refined (ε, Δx) rungs
//! under shared noise. They should shrink as ε → 0. The grids are fine
//! enough that the upwind scheme's own viscosity stays below ε/4.
//!
//!     cargo run --release --example vanishing_viscosity

use levy_renorm::model::ProblemConfig;
use levy_renorm::verify::{viscosity_convergence, Ensemble, Rung};

fn main() -> levy_renorm::Result<()> {
    let spec = ProblemConfig::default().build()?;
    let rungs = [
        Rung { epsilon: 0.2, cells: 256 },
        Rung { epsilon: 0.1, cells: 512 },
        Rung { epsilon: 0.05, cells: 1024 },
    ];
    let t = viscosity_convergence(&spec, &rungs, 4.0, 0.5, Ensemble::new(16, 5, 4)?, 16)?;
    for r in &t.rungs {
        let note = if r.flagged { "  (scheme viscosity comparable to eps)" } else { "" };
        println!("eps {:<5} N {:<5} dx {:.4}  scheme viscosity {:.4}{note}", r.epsilon, r.cells, r.dx, r.scheme_viscosity);
    }
    print!("{}", t.to_csv());
    println!("strictly decreasing: {}", t.strictly_decreasing);
    Ok(())
}

//! Seeded Brownian and compound-Poisson noise.
//!
//! The same key gives the same path at any resolution: the coarse
//! increments are sums of the fine ones and the jump times do not move.
//!
//!     cargo run --release --example noise_paths

use levy_renorm::model::ProblemConfig;
use levy_renorm::noise::{generate_for_spec, SeedKey};
use levy_renorm::stats::MeanSe;

fn main() -> levy_renorm::Result<()> {
    let spec = ProblemConfig::default().build()?;
    let key = SeedKey::new(2025, 3);
    let coarse = generate_for_spec(&spec, 1.0, 1.0 / 8.0, key)?;
    let fine = generate_for_spec(&spec, 1.0, 1.0 / 64.0, key)?;

    println!("coarse dt {} / fine dt {}", coarse.dt, fine.dt);
    for (k, dw) in coarse.brownian.iter().enumerate() {
        let sum: f64 = fine.brownian[8 * k..8 * k + 8].iter().sum();
        println!("  step {k}: dW {dw:+.6}  sum of fine {sum:+.6}");
    }
    for (a, b) in coarse.jumps.iter().zip(&fine.jumps) {
        println!("  jump at t={:.4} mark {:.4}  (coarse step {}, fine step {})", a.time, a.mark, a.step, b.step);
    }

    // Moments over many keys: W(1) ~ N(0, 1), jump count ~ Poisson(rate).
    let totals: Vec<f64> = (0..4000)
        .map(|i| generate_for_spec(&spec, 1.0, 0.25, SeedKey::new(7, i)).map(|p| p.brownian_total()))
        .collect::<Result<_, _>>()?;
    let counts: Vec<f64> = (0..4000)
        .map(|i| generate_for_spec(&spec, 1.0, 0.25, SeedKey::new(7, i)).map(|p| p.jumps.len() as f64))
        .collect::<Result<_, _>>()?;
    let w = MeanSe::of(&totals);
    let n = MeanSe::of(&counts);
    let var = totals.iter().map(|x| x * x).sum::<f64>() / totals.len() as f64;
    println!("E W(1) = {:+.4} ± {:.4}, E W(1)^2 = {var:.4}", w.mean, w.se);
    println!("E N(1) = {:.4} ± {:.4} (rate {})", n.mean, n.se, spec.marks.rate());
    Ok(())
}

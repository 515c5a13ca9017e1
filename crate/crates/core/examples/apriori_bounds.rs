//! L¹ and truncated Kirchhoff energy bounds on a small ensemble of the
//! default catalog problem (Burgers, porous medium, Brownian and jump noise).
//!
//!     cargo run --release --example apriori_bounds

use levy_renorm::harness::{ensemble_stats, ExperimentConfig};

fn main() -> levy_renorm::Result<()> {
    let mut cfg = ExperimentConfig::default();
    cfg.grid.cells = 256;
    cfg.ensemble.paths = 64;
    cfg.check.boundary_paths = 0;
    let s = ensemble_stats(&cfg)?;
    println!("{} paths, dt {:.3e}, {} steps", s.paths, s.dt, s.steps);
    println!("|u0|_1 = {:.5}, |u0|_inf = {:.3}", s.initial_l1, s.initial_sup);
    println!("{:>6} {:>10} {:>9} {:>10} {:>10}", "t", "E|u|_1", "se", "E|u|_2^2", "E mass");
    for (k, t) in s.times.iter().enumerate() {
        println!(
            "{t:>6.3} {:>10.5} {:>9.2e} {:>10.5} {:>10.5}",
            s.l1[k].mean, s.l1[k].se, s.l2_sq[k].mean, s.mass[k].mean
        );
    }
    let l2 = s.sup_l2_sq();
    for (l, e) in s.energy_levels.iter().zip(&s.energy) {
        let c = l * s.initial_l1 + cfg.solver.horizon * l2;
        println!("level {l:.3}: energy {:.4e} ± {:.1e}, C(l) = {c:.4}", e.mean, e.se);
    }
    Ok(())
}

//! Sign of the truncated jump error β(T_ℓ(u+η)) − β(T_ℓu + η(T_ℓu)) over a
//! tensor grid, for each catalog η and a few smoothing widths of β.
//! The decreasing η is there to show the scan does fail when it should.
//!
//!     cargo run --release --example jump_sign_scan

use levy_renorm::model::{EntropyFn, ProblemConfig, CATALOG_ETA};
use levy_renorm::verify::{jump_sign_check, scan_grid};

fn main() -> levy_renorm::Result<()> {
    let base = ProblemConfig::default();
    let samples = scan_grid(&[0.25, 0.5, 1.0, 2.0], 101, (base.mark_lo, base.mark_hi), 25);
    println!("{} scan points", samples.len());
    for eta in CATALOG_ETA {
        let spec = ProblemConfig {
            eta: eta.to_string(),
            ..base.clone()
        }
        .build()?;
        for xi in [0.01, 0.05, 0.5] {
            let r = jump_sign_check(&samples, &EntropyFn::smooth_abs(xi), &spec.eta)?;
            let at = r.argmax.map_or(String::new(), |s| format!(" at u={:.3} z={:.3} l={}", s.u, s.z, s.level));
            println!("{:<28} {:<22} max {:+.3e}{at}  {}", r.eta, r.beta, r.max, r.verdict);
        }
    }
    // β with a kink slope at the origin is outside the admissible family
    let shifted = EntropyFn::smooth_abs(0.05).shifted(0.3);
    let spec = base.build()?;
    match jump_sign_check(&samples, &shifted, &spec.eta) {
        Ok(_) => println!("shifted entropy accepted"),
        Err(e) => println!("shifted entropy rejected: {e}"),
    }
    Ok(())
}

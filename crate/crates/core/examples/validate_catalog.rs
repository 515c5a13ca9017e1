//! Probes assumptions A1–A7 for every catalog η, with the remaining
//! coefficients at their defaults.
//!
//!     cargo run --release --example validate_catalog

use levy_renorm::model::{validate_assumptions, ProblemConfig, CATALOG_ETA};

fn main() -> levy_renorm::Result<()> {
    for eta in CATALOG_ETA {
        let spec = ProblemConfig {
            eta: eta.to_string(),
            ..ProblemConfig::default()
        }
        .build()?;
        let report = validate_assumptions(&spec, 1000, 1)?;
        println!("eta = {eta}  (|u0|_1 = {:.4})", report.initial_l1);
        for c in &report.checks {
            let worst = c.worst.as_ref().map_or(String::new(), |w| {
                format!("  worst excess {:+.2e} at u={:.3} v={:.3} z={:.3}", w.excess, w.u, w.v, w.z)
            });
            println!("  {} {:<4} {}{worst}", c.id, if c.passed { "ok" } else { "FAIL" }, c.statement);
        }
        if !report.finite_difference_slopes.is_empty() {
            println!("  slopes by central differences: {:?}", report.finite_difference_slopes);
        }
    }
    Ok(())
}

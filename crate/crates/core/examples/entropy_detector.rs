//! Kružkov-type residuals on deterministic catalog problems, and on an
//! expansion shock that should be rejected.
//!
//! For every case the worst residual is printed as a multiple of
//! Δx + √dt; the largest such multiple over the entropy solutions is what
//! `check.c_bud` has to cover.
//!
//!     cargo run --release --example entropy_detector

use levy_renorm::harness::{residual_study, ExperimentConfig};

fn case(name: &str, settings: &[(&str, &str)]) -> levy_renorm::Result<(String, ExperimentConfig)> {
    let mut cfg = ExperimentConfig::parse(include_str!("../../../configs/entropy-residual.cfg"))?;
    cfg.set("check.psi_lo", "-1.6")?;
    cfg.set("check.psi_hi", "1.6")?;
    cfg.set("check.psi_count", "17")?;
    for (k, v) in settings {
        cfg.set(k, v)?;
    }
    Ok((name.to_string(), cfg))
}

fn main() -> levy_renorm::Result<()> {
    let cases = vec![
        case("riemann A=1", &[])?,
        case("riemann A=0.5", &[("problem.initial_amplitude", "0.5")])?,
        case("indicator", &[("problem.initial", "indicator")])?,
        case("bump", &[("problem.initial", "bump")])?,
        case(
            "porous gaussian",
            &[
                ("problem.initial", "gaussian"),
                ("problem.initial_width", "0.5"),
                ("problem.diffusion", "porous-medium"),
                ("problem.diffusion_scale", "0.05"),
            ],
        )?,
        case("advected box", &[("problem.flux", "linear-advection"), ("problem.initial", "indicator")])?,
    ];

    println!("{:<16} {:>8} {:>8} {:>11} {:>8} {:>11} {:>8}", "case", "dx", "dt", "min sol", "ratio", "min inj", "ratio");
    let mut worst = 0.0f64;
    for (name, cfg) in &cases {
        let study = residual_study(cfg)?;
        let scale = study.dx + study.dt.sqrt();
        let sol = study.rows.iter().map(|r| r.solution).fold(f64::INFINITY, f64::min);
        let inj = study.rows.iter().map(|r| r.injected).fold(f64::INFINITY, f64::min);
        worst = worst.max(-sol / scale);
        println!(
            "{name:<16} {:>8.5} {:>8.5} {sol:>11.3e} {:>8.4} {inj:>11.3e} {:>8.4}",
            study.dx,
            study.dt,
            sol / scale,
            inj / scale
        );
    }
    println!("largest entropy-solution deficit: {worst:.4} (dx + sqrt dt)");
    Ok(())
}

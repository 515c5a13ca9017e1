use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use levy_renorm::harness::{read_verdicts, run_ensemble, ExperimentConfig, RecipeRunner, VerdictRecord, RECIPES};
use levy_renorm::model::validate_assumptions;

/// Simulate and verify stochastic degenerate parabolic-hyperbolic equations
/// with Lévy noise.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    /// Experiment configuration (flat key = value file).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed, overrides ensemble.seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads, overrides ensemble.workers.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory, overrides output.dir.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured ensemble and write statistics, snapshots and a manifest.
    Simulate,
    /// Run one acceptance recipe, or `all`.
    Recipe { name: String },
    /// Check the configured coefficients against the structural assumptions.
    Validate {
        #[arg(long, default_value_t = 1000)]
        probes: usize,
    },
    /// Summarise the verdict files in the output directory.
    Report,
}

fn load(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => ExperimentConfig::default(),
    };
    cfg.apply_env(std::env::vars())?;
    if let Some(s) = cli.seed {
        cfg.ensemble.seed = s;
    }
    if let Some(w) = cli.workers {
        cfg.ensemble.workers = w;
    }
    if let Some(o) = &cli.out {
        cfg.output.dir = o.display().to_string();
    }
    Ok(cfg)
}

fn print_records(records: &[VerdictRecord]) -> bool {
    for r in records {
        println!("{:<6} {:<40} mean={:.6e} se={:.3e} budget={:.6e}", r.verdict, r.check, r.mean, r.se, r.budget);
    }
    records.iter().all(VerdictRecord::passed)
}

fn run(cli: Cli) -> Result<bool> {
    let cfg = load(&cli)?;
    let out = PathBuf::from(&cfg.output.dir);
    match cli.command {
        Command::Simulate => {
            let (m, _) = run_ensemble(&cfg, &out)?;
            println!(
                "{} paths, dt={:.3e}, {} steps, {:.1}s; wrote {} files to {}",
                m.paths.len(),
                m.dt,
                m.steps,
                m.wall_clock_seconds,
                m.files.len() + 1,
                out.display()
            );
            Ok(true)
        }
        Command::Recipe { name } => {
            let mut runner = RecipeRunner::new(&cfg, &out)?;
            let names: Vec<&str> = if name == "all" { RECIPES.to_vec() } else { vec![name.as_str()] };
            for n in names {
                runner.run(n)?;
            }
            Ok(print_records(&runner.records))
        }
        Command::Validate { probes } => {
            let spec = cfg.problem.build()?;
            let report = validate_assumptions(&spec, probes, cfg.ensemble.seed)?;
            for c in &report.checks {
                println!("{} {} {}", if c.passed { "PASS" } else { "FAIL" }, c.id, c.statement);
            }
            std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            std::fs::write(out.join("validate.json"), serde_json::to_string_pretty(&report)?)?;
            Ok(report.passed())
        }
        Command::Report => Ok(print_records(&read_verdicts(&out)?)),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

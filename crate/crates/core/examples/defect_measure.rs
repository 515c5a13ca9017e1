//! Boundary-layer masses of the defect measure near the truncation level,
//! and the search for levels where they dissipate.
//!
//!     cargo run --release --example defect_measure

use levy_renorm::functionals::{boundary_layer_mass, defect_measure, find_dissipating_levels};
use levy_renorm::model::ProblemConfig;
use levy_renorm::noise::SeedKey;
use levy_renorm::solver::{solve_path, Grid, SolveOptions};

fn main() -> levy_renorm::Result<()> {
    let spec = ProblemConfig::default().build()?;
    let grid = Grid::new(1, 256, 4.0)?;
    let opts = SolveOptions::new(0.05, 0.5).store(levy_renorm::solver::StoreTimes::EveryStep);
    let paths = (0..8)
        .map(|i| solve_path(&spec, &grid, &opts, SeedKey::new(11, i)))
        .collect::<levy_renorm::Result<Vec<_>>>()?;

    let (level, width) = (0.5, 0.1);
    for k in [1.0, 2.0] {
        let m = defect_measure(&paths[0], level, width, k)?;
        println!("path 0, K={k}: mass {:.4e} over {} cell-steps", m.total_mass, m.cells.len());
    }
    let b = boundary_layer_mass(&paths, level, width)?;
    println!("E1 {:.4e}  E2 {:.4e}  E3 {:.4e}  total {:.4e}", b.e1, b.e2, b.e3, b.total());

    // the ladder has to span [sup|u0|/2, 4 sup|u0|]
    let sup = paths[0].initial().sup();
    let levels: Vec<f64> = [0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0].iter().map(|f| f * sup).collect();
    let r = find_dissipating_levels(&paths, &levels, width)?;
    for e in &r.entries {
        println!("level {:.2}: E1 {:.3e} E2 {:.3e} E3 {:.3e} -> {:.3e}", e.level, e.e1, e.e2, e.e3, e.total);
    }
    println!("selected levels per threshold: {:?}", r.selected);
    println!("end-to-end decrease: {}", r.end_to_end_decrease);
    Ok(())
}

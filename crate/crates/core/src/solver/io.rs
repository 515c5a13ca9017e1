//! Plain-text snapshot dumps: a header line `N,d,dx,time`, then the cell
//! values in row-major order (one line in 1-D, N lines in 2-D). Values are
//! written with 17 significant digits so they parse back bit-exactly.

use std::fmt::Write as _;
use std::path::Path;

use super::{Field, Grid};
use crate::error::{Error, Result};

pub fn snapshot_to_string(grid: &Grid, field: &Field) -> String {
    let n = grid.cells_per_side;
    let mut out = String::with_capacity(field.values.len() * 25 + 64);
    let _ = writeln!(out, "{},{},{:.16e},{:.16e}", n, grid.dimension, grid.dx(), field.time);
    let rows = if grid.dimension == 1 { 1 } else { n };
    let width = field.values.len() / rows;
    for r in 0..rows {
        for (j, v) in field.values[r * width..(r + 1) * width].iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v:.16e}");
        }
        out.push('\n');
    }
    out
}

/// Parses a snapshot; returns the grid (with the half-width implied by N·dx)
/// and the field.
pub fn parse_snapshot(text: &str) -> Result<(Grid, Field)> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Snapshot("empty input".into()))?;
    let parts: Vec<&str> = header.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(Error::Snapshot(format!("header needs 4 fields, got `{header}`")));
    }
    let bad = |what: &str| Error::Snapshot(format!("bad {what} in header `{header}`"));
    let n: usize = parts[0].parse().map_err(|_| bad("N"))?;
    let d: usize = parts[1].parse().map_err(|_| bad("d"))?;
    let dx: f64 = parts[2].parse().map_err(|_| bad("dx"))?;
    let time: f64 = parts[3].parse().map_err(|_| bad("time"))?;
    let grid = Grid::new(d, n, 0.5 * dx * n as f64)?;
    let mut values = Vec::with_capacity(grid.len());
    for line in lines.filter(|l| !l.trim().is_empty()) {
        for tok in line.split(',') {
            values.push(
                tok.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Snapshot(format!("bad value `{tok}`")))?,
            );
        }
    }
    if values.len() != grid.len() {
        return Err(Error::Snapshot(format!("expected {} values, got {}", grid.len(), values.len())));
    }
    Ok((grid, Field::new(values, time)))
}

pub fn write_snapshot(path: &Path, grid: &Grid, field: &Field) -> Result<()> {
    std::fs::write(path, snapshot_to_string(grid, field)).map_err(|e| Error::io(path, e))
}

pub fn read_snapshot(path: &Path) -> Result<(Grid, Field)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_snapshot(&text)
}

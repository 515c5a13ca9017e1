use crate::error::{Error, Result};
use crate::model::{truncate, InitialData};

/// Uniform periodic mesh on [−L, L)^d with N cells per side.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub dimension: usize,
    pub cells_per_side: usize,
    pub half_width: f64,
}

impl Grid {
    pub fn new(dimension: usize, cells_per_side: usize, half_width: f64) -> Result<Self> {
        if !(1..=2).contains(&dimension) {
            return Err(Error::invalid(format!("dimension must be 1 or 2, got {dimension}")));
        }
        if cells_per_side < 8 {
            return Err(Error::invalid(format!("need at least 8 cells per side, got {cells_per_side}")));
        }
        if !(half_width > 0.0) {
            return Err(Error::invalid("box half-width must be > 0"));
        }
        Ok(Self {
            dimension,
            cells_per_side,
            half_width,
        })
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.cells_per_side as f64
    }

    /// Δx^d.
    #[inline]
    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.dimension as i32)
    }

    pub fn len(&self) -> usize {
        self.cells_per_side.pow(self.dimension as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of cell-centre index i along one axis.
    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + (i as f64 + 0.5) * self.dx()
    }

    /// Centre of the flat (row-major) cell index.
    pub fn centre(&self, flat: usize) -> [f64; 2] {
        let n = self.cells_per_side;
        if self.dimension == 1 {
            [self.coord(flat), 0.0]
        } else {
            [self.coord(flat / n), self.coord(flat % n)]
        }
    }

    /// Flat index of the periodic neighbour shifted by `shift` along `axis`.
    #[inline]
    pub fn neighbour(&self, flat: usize, axis: usize, shift: isize) -> usize {
        let n = self.cells_per_side;
        if self.dimension == 1 {
            (flat as isize + shift).rem_euclid(n as isize) as usize
        } else {
            let (i, j) = (flat / n, flat % n);
            if axis == 0 {
                ((i as isize + shift).rem_euclid(n as isize) as usize) * n + j
            } else {
                i * n + (j as isize + shift).rem_euclid(n as isize) as usize
            }
        }
    }

    /// Samples the data at cell centres.
    pub fn sample(&self, data: &InitialData) -> Field {
        let d = self.dimension;
        let values = (0..self.len())
            .map(|k| {
                let c = self.centre(k);
                data.eval(&c[..d])
            })
            .collect();
        Field { values, time: 0.0 }
    }

    /// Every grid point's coordinates, row-major.
    pub fn centres(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        (0..self.len()).map(move |k| self.centre(k))
    }

    /// Cells at most `ring` cells from the box boundary along some axis.
    pub fn in_boundary_ring(&self, flat: usize, ring: usize) -> bool {
        let n = self.cells_per_side;
        let near = |i: usize| i < ring || i + ring >= n;
        if self.dimension == 1 {
            near(flat)
        } else {
            near(flat / n) || near(flat % n)
        }
    }
}

/// Scalar state on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    pub values: Vec<f64>,
    pub time: f64,
}

impl Field {
    pub fn new(values: Vec<f64>, time: f64) -> Self {
        Self { values, time }
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self::new(vec![0.0; grid.len()], 0.0)
    }

    /// Δx^d Σ|u_i|.
    pub fn l1(&self, grid: &Grid) -> f64 {
        grid.cell_volume() * self.values.iter().map(|v| v.abs()).sum::<f64>()
    }

    /// Δx^d Σ u_i².
    pub fn l2_sq(&self, grid: &Grid) -> f64 {
        grid.cell_volume() * self.values.iter().map(|v| v * v).sum::<f64>()
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Δx^d Σ u_i.
    pub fn mass(&self, grid: &Grid) -> f64 {
        grid.cell_volume() * self.values.iter().sum::<f64>()
    }

    /// Δx^d Σ|u_i − v_i|.
    pub fn l1_distance(&self, other: &Field, grid: &Grid) -> f64 {
        grid.cell_volume()
            * self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>()
    }

    pub fn truncated(&self, level: f64) -> Field {
        Field::new(self.values.iter().map(|&u| truncate(level, u)).collect(), self.time)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodic_neighbours_2d() {
        let g = Grid::new(2, 8, 1.0).unwrap();
        assert_eq!(g.neighbour(0, 0, -1), 56);
        assert_eq!(g.neighbour(0, 1, -1), 7);
        assert_eq!(g.neighbour(63, 0, 1), 7);
        assert_eq!(g.neighbour(63, 1, 1), 56);
        let g1 = Grid::new(1, 8, 1.0).unwrap();
        assert_eq!(g1.neighbour(7, 0, 1), 0);
    }

    #[test]
    fn rejects_small_grids() {
        assert!(Grid::new(1, 4, 1.0).is_err());
        assert!(Grid::new(3, 16, 1.0).is_err());
    }

    #[test]
    fn norms() {
        let g = Grid::new(1, 8, 2.0).unwrap();
        let f = Field::new(vec![1.0, -2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 3.0], 0.0);
        assert_eq!(g.dx(), 0.5);
        assert_eq!(f.l1(&g), 3.0);
        assert_eq!(f.l2_sq(&g), 7.0);
        assert_eq!(f.sup(), 3.0);
        assert_eq!(f.truncated(1.0).values[7], 1.0);
    }
}

//! Ensemble means, standard errors and ordered parallel maps.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// Sample mean and standard error std/√M.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
    pub count: usize,
}

impl MeanSe {
    /// Reduces in slice order so results do not depend on scheduling.
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self::default();
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let se = if n > 1 {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, se, count: n }
    }

    /// mean + k·se.
    pub fn upper(&self, k: f64) -> f64 {
        self.mean + k * self.se
    }
}

/// Column-wise statistics of equally long rows.
pub fn column_stats(rows: &[Vec<f64>]) -> Vec<MeanSe> {
    let width = rows.first().map_or(0, |r| r.len());
    (0..width)
        .map(|j| {
            let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            MeanSe::of(&col)
        })
        .collect()
}

/// Evaluates `f(0..count)` on `workers` threads and returns the results in
/// index order. The first error in index order is returned.
pub fn parallel_map<T, F>(count: usize, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::ThreadPool(e.to_string()))?;
    let results: Vec<Result<T>> = pool.install(|| (0..count).into_par_iter().map(&f).collect());
    results.into_iter().collect()
}

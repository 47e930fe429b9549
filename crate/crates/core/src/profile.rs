//! Scalar functions of time sampled on a [`TimeGrid`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frackernel::TimeGrid;

/// Samples at every node of a uniform time grid, linearly interpolated between
/// nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    grid: TimeGrid,
    values: Vec<f64>,
}

impl Profile {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        grid.check_len("profile", values.len())?;
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!("profile sample {i} is not finite")));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: TimeGrid, c: f64) -> Self {
        Self { grid, values: vec![c; grid.len()] }
    }

    pub fn from_fn(grid: TimeGrid, f: impl Fn(f64) -> f64) -> Self {
        Self { grid, values: grid.nodes().into_iter().map(f).collect() }
    }

    /// Resamples scattered `(t, value)` pairs, sorted by `t` and covering
    /// `[0, T]`, onto `grid` by linear interpolation.
    pub fn from_pairs(grid: TimeGrid, pairs: &[(f64, f64)]) -> Result<Self> {
        if pairs.len() < 2 {
            return Err(Error::domain("profile needs at least two (t, value) pairs"));
        }
        if pairs.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::domain("profile times must be strictly increasing"));
        }
        let (t0, t1) = (pairs[0].0, pairs[pairs.len() - 1].0);
        let tol = 1e-9 * grid.t_final();
        if t0 > tol || t1 < grid.t_final() - tol {
            return Err(Error::domain(format!("profile samples span [{t0}, {t1}] but the horizon is [0, {}]", grid.t_final())));
        }
        let mut k = 0;
        let values = grid
            .nodes()
            .into_iter()
            .map(|t| {
                while k + 2 < pairs.len() && pairs[k + 1].0 < t {
                    k += 1;
                }
                let (a, b) = (pairs[k], pairs[k + 1]);
                let s = ((t - a.0) / (b.0 - a.0)).clamp(0.0, 1.0);
                a.1 + s * (b.1 - a.1)
            })
            .collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Linear interpolation; `t` is clamped to `[0, T]`.
    pub fn at(&self, t: f64) -> f64 {
        let h = self.grid.step();
        let s = (t / h).clamp(0.0, self.grid.n_steps() as f64);
        let j = (s.floor() as usize).min(self.grid.n_steps() - 1);
        let frac = s - j as f64;
        self.values[j] + frac * (self.values[j + 1] - self.values[j])
    }

    /// The same function sampled on another grid with the same horizon.
    pub fn resample(&self, grid: &TimeGrid) -> Result<Self> {
        if (grid.t_final() - self.grid.t_final()).abs() > 1e-12 * self.grid.t_final() {
            return Err(Error::GridMismatch(format!(
                "cannot resample a profile on [0, {}] onto [0, {}]",
                self.grid.t_final(),
                grid.t_final()
            )));
        }
        Ok(Self::from_fn(*grid, |t| self.at(t)))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }
}

//! Orthonormal Dirichlet sine basis `e_k(x) = √(2/l) sin(λ_k x)`, `λ_k = πk/l`.
//!
//! Coefficients are extracted with composite Simpson quadrature on a uniform
//! grid and fields are rebuilt by direct summation. Mode trajectories are
//! stored time-major: row `n` holds `u_1(t_n), …, u_K(t_n)`.

use std::f64::consts::PI;

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frackernel::TimeGrid;
use crate::profile::Profile;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceGrid {
    length: f64,
    n_cells: usize,
}

impl SpaceGrid {
    pub fn new(length: f64, n_cells: usize) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::domain(format!("interval length l = {length} must be positive")));
        }
        if n_cells < 2 || n_cells % 2 != 0 {
            return Err(Error::domain(format!("Simpson quadrature needs an even cell count, got {n_cells}")));
        }
        Ok(Self { length, n_cells })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn len(&self) -> usize {
        self.n_cells + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        self.length / self.n_cells as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.n_cells {
            self.length
        } else {
            i as f64 * self.step()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.node(i)).collect()
    }

    /// Largest mode count the grid resolves without aliasing.
    pub fn max_modes(&self) -> usize {
        self.n_cells / 2
    }

    /// `min(64, M/4)`.
    pub fn default_modes(&self) -> usize {
        (self.n_cells / 4).clamp(1, 64)
    }

    fn simpson_weights(&self) -> Vec<f64> {
        let h = self.step();
        (0..self.len())
            .map(|i| {
                let c = if i == 0 || i == self.n_cells {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                c * h / 3.0
            })
            .collect()
    }

    /// Composite Simpson integral of samples over `[0, l]`.
    pub fn integrate(&self, samples: &[f64]) -> Result<f64> {
        self.check_len("integrand", samples.len())?;
        Ok(self.simpson_weights().iter().zip(samples).map(|(w, v)| w * v).sum())
    }

    pub(crate) fn check_len(&self, what: &str, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(Error::GridMismatch(format!("{what} has {len} samples but the space grid has {} nodes", self.len())));
        }
        Ok(())
    }

    /// `e_k(x_i)` for `k = 1..K` as a `K × (M+1)` table with exact zeros at the ends.
    fn basis_table(&self, k_modes: usize) -> Array2<f64> {
        let norm = (2.0 / self.length).sqrt();
        let mut table = Array2::zeros((k_modes, self.len()));
        for k in 1..=k_modes {
            for i in 1..self.n_cells {
                // reduce kπi/M before scaling so the table is grid-exact
                let frac = ((k * i) % (2 * self.n_cells)) as f64 / self.n_cells as f64;
                table[[k - 1, i]] = norm * (PI * frac).sin();
            }
        }
        table
    }
}

pub fn eigenvalue(k: usize, l: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::domain("mode index k must be at least 1"));
    }
    if !(l > 0.0) {
        return Err(Error::domain(format!("interval length l = {l} must be positive")));
    }
    Ok(PI * k as f64 / l)
}

pub(crate) fn eigenvalues(k_modes: usize, l: f64) -> Vec<f64> {
    (1..=k_modes).map(|k| PI * k as f64 / l).collect()
}

fn check_modes(sgrid: &SpaceGrid, k_modes: usize) -> Result<()> {
    if k_modes > sgrid.max_modes() {
        return Err(Error::Aliasing { modes: k_modes, max: sgrid.max_modes() });
    }
    Ok(())
}

/// `c_k = √(2/l) ∫_0^l g(x) sin(λ_k x) dx` for `k = 1..K`, by Simpson's rule.
pub fn sine_coefficients(samples: &[f64], sgrid: &SpaceGrid, k_modes: usize) -> Result<Vec<f64>> {
    sgrid.check_len("samples", samples.len())?;
    check_modes(sgrid, k_modes)?;
    let table = sgrid.basis_table(k_modes);
    let w = sgrid.simpson_weights();
    let weighted: Vec<f64> = samples.iter().zip(&w).map(|(g, w)| g * w).collect();
    Ok(table.outer_iter().map(|row| row.iter().zip(&weighted).map(|(e, g)| e * g).sum()).collect())
}

/// Row-wise [`sine_coefficients`] of a time-major field, giving a `(N+1) × K` array.
pub fn sine_coefficients_field(field: ArrayView2<'_, f64>, sgrid: &SpaceGrid, k_modes: usize) -> Result<Array2<f64>> {
    sgrid.check_len("field rows", field.ncols())?;
    check_modes(sgrid, k_modes)?;
    let table = sgrid.basis_table(k_modes);
    let w = ndarray::Array1::from(sgrid.simpson_weights());
    let weighted = &field * &w.view().insert_axis(Axis(0));
    Ok(weighted.dot(&table.t()))
}

/// Time-major mode trajectories `u_k(t_n)` on an interval of length `l`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSet {
    length: f64,
    coeffs: Array2<f64>,
}

impl ModeSet {
    pub fn new(length: f64, coeffs: Array2<f64>) -> Result<Self> {
        if !(length > 0.0) {
            return Err(Error::domain(format!("interval length l = {length} must be positive")));
        }
        if coeffs.ncols() == 0 {
            return Err(Error::domain("mode set needs at least one mode"));
        }
        Ok(Self { length, coeffs })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n_modes(&self) -> usize {
        self.coeffs.ncols()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        eigenvalues(self.n_modes(), self.length)
    }

    pub fn coeffs(&self) -> &Array2<f64> {
        &self.coeffs
    }

    /// Trajectory of mode `k` (1-based).
    pub fn mode(&self, k: usize) -> Vec<f64> {
        self.coeffs.column(k - 1).to_vec()
    }

    fn check_time(&self, tgrid: &TimeGrid) -> Result<()> {
        tgrid.check_len("mode trajectories", self.coeffs.nrows())
    }

    /// `Σ_k w_k u_k(t_n)` for every time node.
    fn weighted_trace(&self, weights: &[f64]) -> Vec<f64> {
        self.coeffs.outer_iter().map(|row| row.iter().zip(weights).map(|(u, w)| u * w).sum()).collect()
    }
}

fn synthesize(modes: &ModeSet, sgrid: &SpaceGrid, tgrid: &TimeGrid, scale: impl Fn(f64) -> f64) -> Result<Array2<f64>> {
    modes.check_time(tgrid)?;
    if (modes.length - sgrid.length()).abs() > 1e-12 * sgrid.length() {
        return Err(Error::GridMismatch(format!(
            "modes live on an interval of length {} but the space grid has length {}",
            modes.length,
            sgrid.length()
        )));
    }
    let table = sgrid.basis_table(modes.n_modes());
    let scaled = Array2::from_shape_fn(modes.coeffs.raw_dim(), |(n, k)| modes.coeffs[[n, k]] * scale(PI * (k + 1) as f64 / modes.length));
    Ok(scaled.dot(&table))
}

/// `u(x_i, t_n) = Σ_k u_k(t_n) e_k(x_i)`, time-major.
pub fn assemble_field(modes: &ModeSet, sgrid: &SpaceGrid, tgrid: &TimeGrid) -> Result<Array2<f64>> {
    synthesize(modes, sgrid, tgrid, |_| 1.0)
}

/// `u_xx(x_i, t_n) = -Σ_k λ_k² u_k(t_n) e_k(x_i)`.
pub fn second_derivative_field(modes: &ModeSet, sgrid: &SpaceGrid, tgrid: &TimeGrid) -> Result<Array2<f64>> {
    synthesize(modes, sgrid, tgrid, |lam| -lam * lam)
}

/// `u_x(0, t) = Σ_k λ_k √(2/l) u_k(t)`.
pub fn flux_at_left(modes: &ModeSet, tgrid: &TimeGrid) -> Result<Profile> {
    modes.check_time(tgrid)?;
    let norm = (2.0 / modes.length).sqrt();
    let w: Vec<f64> = modes.eigenvalues().iter().map(|lam| lam * norm).collect();
    Profile::new(*tgrid, modes.weighted_trace(&w))
}

/// `u_xxx(0, t) = -Σ_k λ_k³ √(2/l) u_k(t)`.
pub fn third_trace_at_left(modes: &ModeSet, tgrid: &TimeGrid) -> Result<Profile> {
    modes.check_time(tgrid)?;
    let norm = (2.0 / modes.length).sqrt();
    let w: Vec<f64> = modes.eigenvalues().iter().map(|lam| -lam.powi(3) * norm).collect();
    Profile::new(*tgrid, modes.weighted_trace(&w))
}

/// Weighted coefficient sums standing in for the Sobolev norms of the data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailReport {
    pub weight_power: u32,
    /// `max_t Σ_k λ_k^p |f_k(t)|`
    pub source_sum: f64,
    /// `Σ_k λ_k^p |φ_k|`
    pub initial_sum: f64,
    /// Contribution of the last ten modes to each sum.
    pub source_last_decade: f64,
    pub initial_last_decade: f64,
    /// Set when the last ten modes contribute more than the ten before them.
    pub non_decay: bool,
}

/// Partial sums of `λ_k^p |c_k|`; `f_coeffs` is time-major `(N+1) × K`.
pub fn tail_diagnostics(f_coeffs: ArrayView2<'_, f64>, phi_coeffs: &[f64], l: f64, weight_power: u32) -> Result<TailReport> {
    if weight_power != 2 && weight_power != 3 {
        return Err(Error::domain(format!("tail weight power must be 2 or 3, got {weight_power}")));
    }
    let k_modes = phi_coeffs.len();
    if f_coeffs.ncols() != k_modes {
        return Err(Error::GridMismatch(format!("source has {} modes but the initial datum has {k_modes}", f_coeffs.ncols())));
    }
    let weights: Vec<f64> = eigenvalues(k_modes, l).iter().map(|lam| lam.powi(weight_power as i32)).collect();
    let terms = |c: &mut dyn Iterator<Item = f64>| -> Vec<f64> { c.zip(&weights).map(|(c, w)| w * c.abs()).collect() };
    let phi_terms = terms(&mut phi_coeffs.iter().copied());
    // nodewise maximum of each weighted |f_k|, so the decade split bounds every time slice
    let mut f_max_terms = vec![0.0f64; k_modes];
    let mut source_sum = 0.0f64;
    for row in f_coeffs.outer_iter() {
        let t = terms(&mut row.iter().copied());
        source_sum = source_sum.max(t.iter().sum());
        for (m, v) in f_max_terms.iter_mut().zip(&t) {
            *m = m.max(*v);
        }
    }
    let decade = 10.min(k_modes / 2);
    let split = |t: &[f64]| -> (f64, f64) {
        if decade == 0 {
            return (0.0, 0.0);
        }
        let last: f64 = t[k_modes - decade..].iter().sum();
        let prev: f64 = t[k_modes - 2 * decade..k_modes - decade].iter().sum();
        (last, prev)
    };
    let (f_last, f_prev) = split(&f_max_terms);
    let (p_last, p_prev) = split(&phi_terms);
    let grows = |last: f64, prev: f64, total: f64| last > prev && last > 1e-12 * total.max(f64::MIN_POSITIVE);
    let initial_sum: f64 = phi_terms.iter().sum();
    Ok(TailReport {
        weight_power,
        source_sum,
        initial_sum,
        source_last_decade: f_last,
        initial_last_decade: p_last,
        non_decay: grows(f_last, f_prev, source_sum) || grows(p_last, p_prev, initial_sum),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvalue_examples() {
        assert!((eigenvalue(1, PI).unwrap() - 1.0).abs() < 1e-15);
        assert!((eigenvalue(3, 1.0).unwrap() - 3.0 * PI).abs() < 1e-15);
        assert!((eigenvalue(2, 2.0).unwrap() - PI).abs() < 1e-15);
        assert!(eigenvalue(0, 1.0).is_err());
    }

    #[test]
    fn grid_requires_even_cells() {
        assert!(SpaceGrid::new(1.0, 7).is_err());
        assert!(SpaceGrid::new(-1.0, 8).is_err());
        assert_eq!(SpaceGrid::new(1.0, 256).unwrap().default_modes(), 64);
        assert_eq!(SpaceGrid::new(1.0, 16).unwrap().default_modes(), 4);
    }

    #[test]
    fn aliasing_is_rejected() {
        let g = SpaceGrid::new(1.0, 8).unwrap();
        assert_eq!(sine_coefficients(&[0.0; 9], &g, 5).unwrap_err(), Error::Aliasing { modes: 5, max: 4 });
    }

    #[test]
    fn single_mode_traces() {
        let tg = TimeGrid::new(1.0, 2).unwrap();
        let mut c = Array2::zeros((3, 3));
        c.column_mut(0).fill(1.0);
        let modes = ModeSet::new(1.0, c).unwrap();
        let psi = flux_at_left(&modes, &tg).unwrap();
        assert!(psi.values().iter().all(|v| (v - PI * 2f64.sqrt()).abs() < 1e-14));
        let third = third_trace_at_left(&modes, &tg).unwrap();
        assert!(third.values().iter().all(|v| (v + PI.powi(3) * 2f64.sqrt()).abs() < 1e-12));
    }

    #[test]
    fn tail_of_zero_data_is_zero() {
        let f = Array2::zeros((3, 12));
        let r = tail_diagnostics(f.view(), &[0.0; 12], 1.0, 3).unwrap();
        assert_eq!((r.source_sum, r.initial_sum, r.non_decay), (0.0, 0.0, false));
        assert!(tail_diagnostics(f.view(), &[0.0; 12], 1.0, 4).is_err());
    }
}

//! Finite-difference reference solver: L1 in time, central differences in
//! space, implicit in the spatial operator. Independent of the spectral path
//! except for the final projection used to report `u_xx`.

use ndarray::Array2;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::forward::{residual_check, FieldSolution, ProblemSpec};
use crate::gamma::rgamma;
use crate::spectral::{second_derivative_field, sine_coefficients_field, ModeSet};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FdStats {
    /// Steps whose matrix was not strictly diagonally dominant.
    pub non_dominant_steps: Vec<usize>,
    pub min_pivot: f64,
}

/// Per-run state: L1 history weights and the current tridiagonal bands.
struct FdWorkspace {
    scale: f64,
    b: Vec<f64>,
    inv_dx2: f64,
    diag: Vec<f64>,
    upper: Vec<f64>,
    rhs: Vec<f64>,
}

impl FdWorkspace {
    fn new(spec: &ProblemSpec) -> Self {
        let rho = spec.rho;
        let h = spec.tgrid.step();
        let e = 1.0 - rho;
        let b = (0..spec.tgrid.n_steps()).map(|j| (j as f64 + 1.0).powf(e) - (j as f64).powf(e)).collect();
        let dx = spec.sgrid.step();
        let interior = spec.sgrid.n_cells() - 1;
        Self {
            scale: h.powf(-rho) * rgamma(2.0 - rho),
            b,
            inv_dx2: 1.0 / (dx * dx),
            diag: vec![0.0; interior],
            upper: vec![0.0; interior],
            rhs: vec![0.0; interior],
        }
    }

    /// Thomas elimination of `-s u_{i-1} + d u_i - s u_{i+1} = rhs_i` in place;
    /// returns the smallest pivot magnitude.
    fn solve(&mut self, off: f64, step: usize) -> Result<f64> {
        let n = self.rhs.len();
        let mut min_pivot = f64::INFINITY;
        let mut pivot = self.diag[0];
        for i in 0..n {
            if i > 0 {
                pivot = self.diag[i] - off * self.upper[i - 1];
                self.rhs[i] -= off * self.rhs[i - 1];
            }
            if !(pivot.abs() > 1e-300) || !pivot.is_finite() {
                return Err(Error::SingularSystem { step });
            }
            min_pivot = min_pivot.min(pivot.abs());
            self.upper[i] = off / pivot;
            self.rhs[i] /= pivot;
        }
        for i in (0..n.saturating_sub(1)).rev() {
            self.rhs[i] -= self.upper[i] * self.rhs[i + 1];
        }
        Ok(min_pivot)
    }
}

pub fn solve_fd(spec: &ProblemSpec) -> Result<FieldSolution> {
    solve_fd_with_stats(spec).map(|(s, _)| s)
}

pub fn solve_fd_with_stats(spec: &ProblemSpec) -> Result<(FieldSolution, FdStats)> {
    spec.check_shapes()?;
    let q = spec.q.as_ref().ok_or_else(|| Error::domain("the forward problem needs a reaction coefficient q"))?;
    if !(spec.sigma.min() > 0.0) {
        return Err(Error::Admissibility(format!("σ must be positive, min σ = {}", spec.sigma.min())));
    }
    let n_t = spec.tgrid.len();
    let n_x = spec.sgrid.len();
    let mut ws = FdWorkspace::new(spec);
    let mut u = Array2::zeros((n_t, n_x));
    for i in 1..n_x - 1 {
        u[[0, i]] = spec.phi[i];
    }
    let mut stats = FdStats { non_dominant_steps: Vec::new(), min_pivot: f64::INFINITY };
    // increments Δ^m = u^m - u^{m-1}, kept for the L1 history
    let mut increments: Vec<Vec<f64>> = Vec::with_capacity(n_t);
    for n in 1..n_t {
        let s = spec.sigma.values()[n];
        let qn = q.values()[n];
        let off = -s * ws.inv_dx2;
        let d = ws.scale + 2.0 * s * ws.inv_dx2 + qn;
        if !(d > 2.0 * s * ws.inv_dx2) {
            stats.non_dominant_steps.push(n);
        }
        // D^ρ u^n ≈ scale [u^n - u^{n-1} + Σ_{j≥1} b_j Δ^{n-j}]
        let mut hist = vec![0.0; n_x - 2];
        for j in 1..n {
            let bj = ws.b[j];
            for (h, d) in hist.iter_mut().zip(&increments[n - j - 1]) {
                *h += bj * d;
            }
        }
        for i in 1..n_x - 1 {
            ws.rhs[i - 1] = spec.f[[n, i]] + ws.scale * (u[[n - 1, i]] - hist[i - 1]);
            ws.diag[i - 1] = d;
        }
        let pivot = ws.solve(off, n)?;
        stats.min_pivot = stats.min_pivot.min(pivot);
        let mut inc = vec![0.0; n_x - 2];
        for i in 1..n_x - 1 {
            u[[n, i]] = ws.rhs[i - 1];
            inc[i - 1] = u[[n, i]] - u[[n - 1, i]];
        }
        increments.push(inc);
    }
    let coeffs = sine_coefficients_field(u.view(), &spec.sgrid, spec.k_modes)?;
    let modes = ModeSet::new(spec.l(), coeffs)?;
    let u_xx_diag = second_derivative_field(&modes, &spec.sgrid, &spec.tgrid)?;
    let mut sol = FieldSolution {
        tgrid: spec.tgrid,
        sgrid: spec.sgrid,
        u,
        u_xx_diag,
        modes,
        residual_norm: f64::NAN,
        per_mode: Vec::new(),
        diagnostics: None,
    };
    sol.residual_norm = residual_check(&sol, spec)?;
    Ok((sol, stats))
}

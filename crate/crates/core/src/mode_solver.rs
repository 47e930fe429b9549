//! Per-mode Cauchy problems
//!
//! ```text
//! D^ρ u_k + λ_k² σ(t) u_k + q(t) u_k = f_k(t),   u_k(0) = φ_k,
//! ```
//!
//! solved as the Volterra equation obtained by freezing the diffusion
//! coefficient at its maximum `M_σ`:
//!
//! ```text
//! u_k(t) = φ_k E_{ρ,1}(-λ_k² M_σ t^ρ)
//!        + ∫_0^t (t-s)^{ρ-1} E_{ρ,ρ}(-λ_k² M_σ (t-s)^ρ) [f_k + (λ_k²(M_σ - σ) - q) u_k](s) ds.
//! ```

use serde::Serialize;

use crate::error::{Error, Result};
use crate::frackernel::{build_weights, convolve, ConvolutionWeights, TimeGrid};
use crate::profile::Profile;
use crate::spectral::eigenvalue;

/// Default sup-norm tolerance on the Picard update.
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct ModeProblem {
    k: usize,
    l: f64,
    lam_k: f64,
    rho: f64,
    sigma: Profile,
    q: Profile,
    f_k: Profile,
    phi_k: f64,
}

impl ModeProblem {
    pub fn new(k: usize, l: f64, rho: f64, sigma: Profile, q: Profile, f_k: Profile, phi_k: f64) -> Result<Self> {
        let lam_k = eigenvalue(k, l)?;
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(Error::domain(format!("order ρ = {rho} must lie in (0, 1]")));
        }
        let grid = *sigma.grid();
        if q.grid() != &grid || f_k.grid() != &grid {
            return Err(Error::GridMismatch("σ, q and f_k must share one time grid".into()));
        }
        if !(sigma.min() > 0.0) {
            return Err(Error::Admissibility(format!("σ must be positive, min σ = {}", sigma.min())));
        }
        if !phi_k.is_finite() {
            return Err(Error::domain("initial coefficient φ_k must be finite"));
        }
        Ok(Self { k, l, lam_k, rho, sigma, q, f_k, phi_k })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn lam_k(&self) -> f64 {
        self.lam_k
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn grid(&self) -> &TimeGrid {
        self.sigma.grid()
    }

    pub fn sigma(&self) -> &Profile {
        &self.sigma
    }

    pub fn q(&self) -> &Profile {
        &self.q
    }

    pub fn f_k(&self) -> &Profile {
        &self.f_k
    }

    pub fn phi_k(&self) -> f64 {
        self.phi_k
    }

    pub fn m_sigma(&self) -> f64 {
        self.sigma.min()
    }

    pub fn big_m_sigma(&self) -> f64 {
        self.sigma.max()
    }

    pub fn n_q(&self) -> f64 {
        self.q.min()
    }

    pub fn big_n_q(&self) -> f64 {
        self.q.max()
    }

    /// `λ_k² M_σ`, the rate of the frozen-coefficient kernel.
    pub fn lam_eff(&self) -> f64 {
        self.lam_k * self.lam_k * self.big_m_sigma()
    }

    /// The same problem with other data; used for the superposition split.
    pub fn with_data(&self, f_k: Profile, phi_k: f64) -> Result<Self> {
        Self::new(self.k, self.l, self.rho, self.sigma.clone(), self.q.clone(), f_k, phi_k)
    }

    /// `λ_k²(M_σ - σ(t_n)) - q(t_n)`.
    fn perturbation(&self) -> Vec<f64> {
        let lam2 = self.lam_k * self.lam_k;
        let m = self.big_m_sigma();
        self.sigma.values().iter().zip(self.q.values()).map(|(s, q)| lam2 * (m - s) - q).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeSolution {
    pub k: usize,
    pub u_k: Vec<f64>,
    pub iterations: usize,
    pub final_update: f64,
    /// Largest ratio of successive update norms above the rounding floor.
    pub contraction_estimate: f64,
    pub c_k_bound: f64,
    pub update_history: Vec<f64>,
}

/// `C_k = max_n |(M_σ - σ(t_n))/M_σ - q(t_n)/(λ_k² M_σ)|`.
pub fn contraction_bound(p: &ModeProblem) -> f64 {
    let scale = p.lam_eff();
    p.perturbation().iter().map(|a| (a / scale).abs()).fold(0.0, f64::max)
}

fn check_weights(p: &ModeProblem, weights: &ConvolutionWeights) -> Result<()> {
    if weights.grid() != p.grid() {
        return Err(Error::GridMismatch("weights were built on a different time grid".into()));
    }
    let expected = p.lam_eff();
    if (weights.lam_eff() - expected).abs() > 1e-12 * expected || weights.rho() != p.rho {
        return Err(Error::GridMismatch(format!(
            "weights built for (ρ, λ) = ({}, {}) but mode {} needs ({}, {expected})",
            weights.rho(),
            weights.lam_eff(),
            p.k,
            p.rho
        )));
    }
    Ok(())
}

pub fn mode_weights(p: &ModeProblem) -> Result<ConvolutionWeights> {
    build_weights(p.grid(), p.rho, p.lam_eff())
}

/// One application of the Volterra operator to `current`.
pub fn picard_step(p: &ModeProblem, weights: &ConvolutionWeights, current: &[f64]) -> Result<Vec<f64>> {
    check_weights(p, weights)?;
    p.grid().check_len("Picard iterate", current.len())?;
    let a = p.perturbation();
    let g: Vec<f64> = p.f_k.values().iter().zip(&a).zip(current).map(|((f, a), u)| f + a * u).collect();
    let conv = convolve(weights, &g)?;
    let relax = weights.relaxation();
    Ok(conv.iter().zip(relax).map(|(c, r)| p.phi_k * r + c).collect())
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn solve_mode(p: &ModeProblem, tol: f64, max_iter: usize) -> Result<ModeSolution> {
    let weights = mode_weights(p)?;
    solve_mode_with_weights(p, &weights, tol, max_iter)
}

/// [`solve_mode`] with precomputed weights, for callers that reuse them.
pub fn solve_mode_with_weights(p: &ModeProblem, weights: &ConvolutionWeights, tol: f64, max_iter: usize) -> Result<ModeSolution> {
    if !(tol > 0.0) {
        return Err(Error::domain(format!("tolerance {tol} must be positive")));
    }
    check_weights(p, weights)?;
    let c_k_bound = contraction_bound(p);
    let mut u: Vec<f64> = weights.relaxation().iter().map(|r| p.phi_k * r).collect();
    let mut history = Vec::new();
    let mut estimate: f64 = 0.0;
    for it in 1..=max_iter.max(1) {
        let next = picard_step(p, weights, &u)?;
        let update = sup_diff(&next, &u);
        u = next;
        if let Some(&prev) = history.last() {
            let floor = 64.0 * f64::EPSILON * u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if prev > floor && update > floor {
                estimate = estimate.max(update / prev);
            }
        }
        history.push(update);
        if update < tol {
            u[0] = p.phi_k;
            return Ok(ModeSolution {
                k: p.k,
                u_k: u,
                iterations: it,
                final_update: update,
                contraction_estimate: estimate,
                c_k_bound,
                update_history: history,
            });
        }
    }
    Err(Error::ModeNonConvergence {
        mode: p.k,
        iterations: max_iter,
        last_update: history.last().copied().unwrap_or(f64::NAN),
        contraction: estimate,
    })
}

/// The fixed point of [`picard_step`] by forward substitution.
///
/// The discrete operator is lower triangular in time, so its Picard limit is
/// reached in one sweep; the inverse solver relies on this.
pub fn solve_mode_direct(p: &ModeProblem, weights: &ConvolutionWeights) -> Result<Vec<f64>> {
    check_weights(p, weights)?;
    let a = p.perturbation();
    let f = p.f_k.values();
    let (left, right) = weights.parts();
    let start = weights.start();
    let relax = weights.relaxation();
    let n_nodes = relax.len();
    let mut u = vec![0.0; n_nodes];
    let mut g = vec![0.0; n_nodes];
    u[0] = p.phi_k;
    g[0] = f[0] + a[0] * u[0];
    let singular = |n: usize| Error::Convergence(format!("mode {}: singular step {n} in the direct Volterra sweep", p.k));
    // the starting correction couples the first two steps
    let first = if n_nodes > 2 {
        let c = |n, j| weights.coefficient(n, j);
        let b1 = p.phi_k * relax[1] + c(1, 0) * g[0] + c(1, 1) * f[1] + c(1, 2) * f[2];
        let b2 = p.phi_k * relax[2] + c(2, 0) * g[0] + c(2, 1) * f[1] + c(2, 2) * f[2];
        let (m11, m12) = (1.0 - c(1, 1) * a[1], -c(1, 2) * a[2]);
        let (m21, m22) = (-c(2, 1) * a[1], 1.0 - c(2, 2) * a[2]);
        let det = m11 * m22 - m12 * m21;
        if det.abs() < 1e-12 {
            return Err(singular(1));
        }
        u[1] = (b1 * m22 - m12 * b2) / det;
        u[2] = (m11 * b2 - m21 * b1) / det;
        for n in 1..3 {
            g[n] = f[n] + a[n] * u[n];
        }
        3
    } else {
        1
    };
    for n in first..n_nodes {
        let s = &start[n];
        let mut hist = left[0] * g[n - 1] + s[0] * g[0];
        let mut diag = right[0];
        if n == 1 {
            diag += s[1];
        } else {
            hist += s[1] * g[1] + s[2] * g[2];
        }
        for m in 1..n {
            hist += left[m] * g[n - m - 1] + right[m] * g[n - m];
        }
        let den = 1.0 - diag * a[n];
        if den.abs() < 1e-12 {
            return Err(singular(n));
        }
        u[n] = (p.phi_k * relax[n] + hist + diag * f[n]) / den;
        g[n] = f[n] + a[n] * u[n];
    }
    Ok(u)
}

/// `V_k` (zero initial datum) and `W_k` (zero source), with `V_k + W_k = u_k`.
pub fn decompose_mode(p: &ModeProblem, tol: f64, max_iter: usize) -> Result<(ModeSolution, ModeSolution)> {
    let weights = mode_weights(p)?;
    let zero = Profile::constant(*p.grid(), 0.0);
    let v = solve_mode_with_weights(&p.with_data(p.f_k.clone(), 0.0)?, &weights, tol, max_iter)?;
    let w = solve_mode_with_weights(&p.with_data(zero, p.phi_k)?, &weights, tol, max_iter)?;
    Ok((v, w))
}

/// Nodewise bounds on `|V_k|` and `|W_k|` from the comparison problem with rate
/// `λ_k² m_σ + n_q`.
pub fn apriori_bounds(p: &ModeProblem) -> Result<(Vec<f64>, Vec<f64>)> {
    let rate = p.lam_k * p.lam_k * p.m_sigma() + p.n_q();
    if !(rate > 0.0) {
        return Err(Error::domain(format!("mode {}: λ_k² m_σ + n_q = {rate} must be positive for the a priori bounds", p.k)));
    }
    let weights = build_weights(p.grid(), p.rho, rate)?;
    let abs_f: Vec<f64> = p.f_k.values().iter().map(|f| f.abs()).collect();
    let v_bound = convolve(&weights, &abs_f)?;
    let w_bound = weights.relaxation().iter().map(|r| p.phi_k.abs() * r).collect();
    Ok((v_bound, w_bound))
}

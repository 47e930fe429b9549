//! Forward solve of
//!
//! ```text
//! D_t^ρ u = σ(t) u_xx - q(t) u + f(x, t),   0 < x < l, 0 < t ≤ T,
//! u(x, 0) = φ(x),   u(0, t) = u(l, t) = 0,
//! ```
//!
//! by sine-mode decomposition, one Volterra solve per mode, and synthesis.

use ndarray::{Array2, Axis};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::frackernel::{caputo_l1, TimeGrid};
use crate::gamma::rgamma;
use crate::mlf::{eval_mlf, MlfParams};
use crate::mode_solver::{solve_mode, ModeProblem, ModeSolution};
use crate::profile::Profile;
use crate::spectral::{
    assemble_field, second_derivative_field, sine_coefficients, sine_coefficients_field, tail_diagnostics, ModeSet, SpaceGrid, TailReport,
};

/// Tolerance on the homogeneous boundary and compatibility conditions.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// Data of the initial-boundary value problem. Fields are time-major
/// `(N+1) × (M+1)` arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub rho: f64,
    pub tgrid: TimeGrid,
    pub sgrid: SpaceGrid,
    pub sigma: Profile,
    /// Absent in inverse problems.
    pub q: Option<Profile>,
    pub f: Array2<f64>,
    pub phi: Vec<f64>,
    pub k_modes: usize,
}

impl ProblemSpec {
    pub fn l(&self) -> f64 {
        self.sgrid.length()
    }

    pub fn check_shapes(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::domain(format!("order ρ = {} must lie in (0, 1)", self.rho)));
        }
        if self.sigma.grid() != &self.tgrid {
            return Err(Error::GridMismatch("σ is sampled on a different time grid".into()));
        }
        if let Some(q) = &self.q {
            if q.grid() != &self.tgrid {
                return Err(Error::GridMismatch("q is sampled on a different time grid".into()));
            }
        }
        if self.f.dim() != (self.tgrid.len(), self.sgrid.len()) {
            return Err(Error::GridMismatch(format!(
                "source has shape {:?}, expected ({}, {})",
                self.f.dim(),
                self.tgrid.len(),
                self.sgrid.len()
            )));
        }
        self.sgrid.check_len("initial datum", self.phi.len())?;
        if self.k_modes == 0 {
            return Err(Error::domain("at least one mode is required"));
        }
        if self.k_modes > self.sgrid.max_modes() {
            return Err(Error::Aliasing { modes: self.k_modes, max: self.sgrid.max_modes() });
        }
        Ok(())
    }

    /// The same problem with reaction coefficient `q`.
    pub fn with_q(&self, q: Profile) -> Self {
        Self { q: Some(q), ..self.clone() }
    }

    pub(crate) fn q_or_err(&self) -> Result<&Profile> {
        self.q.as_ref().ok_or_else(|| Error::domain("the forward problem needs a reaction coefficient q"))
    }

    /// `f_k(t_n)` as a time-major `(N+1) × K` array.
    pub fn source_coefficients(&self) -> Result<Array2<f64>> {
        sine_coefficients_field(self.f.view(), &self.sgrid, self.k_modes)
    }

    pub fn initial_coefficients(&self) -> Result<Vec<f64>> {
        sine_coefficients(&self.phi, &self.sgrid, self.k_modes)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub passed: bool,
    /// Signed distance to failure; negative when the check fails.
    pub margin: f64,
    pub detail: String,
}

impl Check {
    pub(crate) fn new(passed: bool, margin: f64, detail: impl Into<String>) -> Self {
        Self { passed, margin, detail: detail.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assumption1Report {
    pub m_sigma: f64,
    pub big_m_sigma: f64,
    pub n_q: Option<f64>,
    pub big_n_q: Option<f64>,
    /// Open interval `(-m_σ π²/l², (M_σ - m_σ) π²/l²)` that `q` must stay inside.
    pub q_window: (f64, f64),
    pub positivity: Check,
    pub q_window_check: Check,
    pub compatibility: Check,
}

impl Assumption1Report {
    pub fn all_passed(&self) -> bool {
        self.positivity.passed && self.q_window_check.passed && self.compatibility.passed
    }
}

pub fn q_window(sigma: &Profile, l: f64) -> (f64, f64) {
    let pi2 = std::f64::consts::PI.powi(2) / (l * l);
    (-sigma.min() * pi2, (sigma.max() - sigma.min()) * pi2)
}

pub fn validate_assumption1(spec: &ProblemSpec) -> Assumption1Report {
    let m = spec.sigma.min();
    let big_m = spec.sigma.max();
    let window = q_window(&spec.sigma, spec.l());
    let positivity = Check::new(m > 0.0, m, format!("min σ = {m}"));
    let q_window_check = match &spec.q {
        Some(q) => {
            let (lo, hi) = (q.min(), q.max());
            let margin = (lo - window.0).min(window.1 - hi);
            Check::new(margin > 0.0, margin, format!("q ∈ [{lo}, {hi}], window ({}, {})", window.0, window.1))
        }
        None => Check::new(true, f64::INFINITY, "q not given"),
    };
    let mut worst: f64 = 0.0;
    if let (Some(a), Some(b)) = (spec.phi.first(), spec.phi.last()) {
        worst = worst.max(a.abs()).max(b.abs());
    }
    let last = spec.f.ncols().saturating_sub(1);
    for row in spec.f.outer_iter() {
        if !row.is_empty() {
            worst = worst.max(row[0].abs()).max(row[last].abs());
        }
    }
    let compatibility = Check::new(worst <= BOUNDARY_TOL, BOUNDARY_TOL - worst, format!("largest boundary value of φ and f: {worst:.3e}"));
    Assumption1Report {
        m_sigma: m,
        big_m_sigma: big_m,
        n_q: spec.q.as_ref().map(Profile::min),
        big_n_q: spec.q.as_ref().map(Profile::max),
        q_window: window,
        positivity,
        q_window_check,
        compatibility,
    }
}

/// Computable stand-ins for the bounds on `Q₁ = Σλ_k²|V_k|` and `Q₂ = Σλ_k²|W_k|`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityBounds {
    /// `T^ρ/Γ(ρ+1) · max_t Σλ_k²|f_k(t)|`.
    pub q1_bound: f64,
    /// `Σλ_k²|φ_k| E_{ρ,1}(-(λ_k² m_σ + n_q) t_n^ρ)` at every node.
    pub q2_sum: Vec<f64>,
    /// `C_E Σ|φ_k| / (θ m_σ) · t_n^{-ρ}` for `n ≥ 1`, where `C_E = sup (1+z) E_{ρ,1}(-z)`
    /// and `θ = min(1, 1 + n_q l²/(π² m_σ))`; entry 0 is infinite.
    pub q2_bound: Vec<f64>,
    /// Weighted coefficient sums with `p = 2`.
    pub tail: TailReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForwardDiagnostics {
    pub assumption1: Assumption1Report,
    pub c_k: Vec<f64>,
    pub regularity: RegularityBounds,
    /// `max_i |u(x_i, 0) - φ(x_i)|`, the coefficient truncation error of `φ`.
    pub initial_defect: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldSolution {
    pub tgrid: TimeGrid,
    pub sgrid: SpaceGrid,
    pub u: Array2<f64>,
    pub u_xx_diag: Array2<f64>,
    pub modes: ModeSet,
    pub residual_norm: f64,
    pub per_mode: Vec<ModeSolution>,
    pub diagnostics: Option<ForwardDiagnostics>,
}

/// `sup_{z ≥ 0} (1+z) E_{ρ,1}(-z)` on a logarithmic grid.
pub fn decay_constant(rho: f64) -> Result<f64> {
    let params = MlfParams::new(rho, 1.0)?;
    let mut c: f64 = 1.0;
    for i in 0..=600 {
        let z = 10f64.powf(-3.0 + 9.0 * i as f64 / 600.0);
        c = c.max((1.0 + z) * eval_mlf(params, -z)?);
    }
    Ok(c)
}

fn regularity_bounds(spec: &ProblemSpec, f_coeffs: &Array2<f64>, phi_coeffs: &[f64]) -> Result<RegularityBounds> {
    let l = spec.l();
    let rho = spec.rho;
    let tail = tail_diagnostics(f_coeffs.view(), phi_coeffs, l, 2)?;
    let t_final = spec.tgrid.t_final();
    let q1_bound = t_final.powf(rho) * rgamma(rho + 1.0) * tail.source_sum;
    let m = spec.sigma.min();
    let n_q = spec.q.as_ref().map(Profile::min).unwrap_or(0.0);
    let lams: Vec<f64> = (1..=spec.k_modes).map(|k| std::f64::consts::PI * k as f64 / l).collect();
    let ml = MlfParams::new(rho, 1.0)?;
    let mut q2_sum = Vec::with_capacity(spec.tgrid.len());
    for t in spec.tgrid.nodes() {
        let mut s = 0.0;
        for (lam, phi) in lams.iter().zip(phi_coeffs) {
            let rate = lam * lam * m + n_q;
            s += lam * lam * phi.abs() * eval_mlf(ml, -(rate.max(0.0)) * t.powf(rho))?;
        }
        q2_sum.push(s);
    }
    let theta = (1.0 + n_q * l * l / (std::f64::consts::PI.powi(2) * m)).min(1.0);
    let abs_phi: f64 = phi_coeffs.iter().map(|p| p.abs()).sum();
    let c_e = decay_constant(rho)?;
    let q2_bound = spec
        .tgrid
        .nodes()
        .into_iter()
        .map(|t| if t > 0.0 && theta > 0.0 { c_e * abs_phi / (theta * m) * t.powf(-rho) } else { f64::INFINITY })
        .collect();
    Ok(RegularityBounds { q1_bound, q2_sum, q2_bound, tail })
}

/// The mode problems of `spec`, with `f_k` and `φ_k` extracted spectrally.
pub fn mode_problems(spec: &ProblemSpec, q: &Profile, f_coeffs: &Array2<f64>, phi_coeffs: &[f64]) -> Result<Vec<ModeProblem>> {
    (1..=spec.k_modes)
        .map(|k| {
            let f_k = Profile::new(spec.tgrid, f_coeffs.column(k - 1).to_vec())?;
            ModeProblem::new(k, spec.l(), spec.rho, spec.sigma.clone(), q.clone(), f_k, phi_coeffs[k - 1])
        })
        .collect()
}

pub fn solve_forward(spec: &ProblemSpec, tol: f64, max_iter: usize) -> Result<FieldSolution> {
    spec.check_shapes()?;
    let report = validate_assumption1(spec);
    if !report.positivity.passed {
        return Err(Error::Admissibility(format!("σ must be positive: {}", report.positivity.detail)));
    }
    let q = spec.q_or_err()?;
    let f_coeffs = spec.source_coefficients()?;
    let phi_coeffs = spec.initial_coefficients()?;
    let problems = mode_problems(spec, q, &f_coeffs, &phi_coeffs)?;
    let per_mode = problems.par_iter().map(|p| solve_mode(p, tol, max_iter)).collect::<Result<Vec<_>>>()?;
    let mut coeffs = Array2::zeros((spec.tgrid.len(), spec.k_modes));
    for (k, sol) in per_mode.iter().enumerate() {
        coeffs.column_mut(k).assign(&ndarray::ArrayView1::from(&sol.u_k));
    }
    let modes = ModeSet::new(spec.l(), coeffs)?;
    let u = assemble_field(&modes, &spec.sgrid, &spec.tgrid)?;
    let u_xx_diag = second_derivative_field(&modes, &spec.sgrid, &spec.tgrid)?;
    let initial_defect = u.index_axis(Axis(0), 0).iter().zip(&spec.phi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let diagnostics = ForwardDiagnostics {
        assumption1: report,
        c_k: per_mode.iter().map(|s| s.c_k_bound).collect(),
        regularity: regularity_bounds(spec, &f_coeffs, &phi_coeffs)?,
        initial_defect,
    };
    let mut sol = FieldSolution {
        tgrid: spec.tgrid,
        sgrid: spec.sgrid,
        u,
        u_xx_diag,
        modes,
        residual_norm: f64::NAN,
        per_mode,
        diagnostics: Some(diagnostics),
    };
    sol.residual_norm = residual_check(&sol, spec)?;
    Ok(sol)
}

/// `max |D^ρ u - σ u_xx + q u - f|` over interior space nodes and `t_n`, `n ≥ 1`,
/// with `D^ρ` by the L1 scheme and `u_xx` from the solution's spectral field.
pub fn residual_check(sol: &FieldSolution, spec: &ProblemSpec) -> Result<f64> {
    let q = spec.q_or_err()?;
    if sol.u.dim() != spec.f.dim() || sol.u_xx_diag.dim() != spec.f.dim() {
        return Err(Error::GridMismatch("solution and problem grids differ".into()));
    }
    let n_x = sol.u.ncols();
    let sigma = spec.sigma.values();
    let qv = q.values();
    let mut worst: f64 = 0.0;
    for i in 1..n_x - 1 {
        let column = sol.u.column(i).to_vec();
        let d = caputo_l1(&column, &spec.tgrid, spec.rho)?;
        for (n, dn) in d.iter().enumerate().skip(1) {
            let dn = dn.unwrap_or(0.0);
            let r = dn - sigma[n] * sol.u_xx_diag[[n, i]] + qv[n] * sol.u[[n, i]] - spec.f[[n, i]];
            worst = worst.max(r.abs());
        }
    }
    Ok(worst)
}

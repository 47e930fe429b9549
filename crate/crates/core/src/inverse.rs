//! Recovery of the reaction coefficient `q(t)` from the flux `ψ(t) = u_x(0, t)`
//! by fixed-point iteration on
//!
//! ```text
//! L[q](t) = q₀(t) - σ(t)/ψ(t) · √(2/l) Σ_k λ_k³ u_k(t),
//! q₀(t)   = (f_x(0, t) - D_t^ρ ψ(t)) / ψ(t).
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::forward::{mode_problems, q_window, solve_forward, Check, FieldSolution, ProblemSpec};
use crate::frackernel::{caputo_l1, ConvolutionWeights};
use crate::gamma::gamma;
use crate::mode_solver::{mode_weights, solve_mode_direct, solve_mode_with_weights, ModeProblem};
use crate::profile::Profile;
use crate::spectral::{eigenvalues, flux_at_left, ModeSet};

/// Relative tolerance of the compatibility check `φ_x(0) = ψ(0)`.
pub const COMPATIBILITY_TOL: f64 = 1e-6;

/// Largest accepted ratio of the finite-difference slopes of `ψ` at steps `h`
/// and `2h`. A `C¹` function gives a ratio near one, a `t^ρ` layer `2^{1-ρ}`.
pub const SLOPE_RATIO_MAX: f64 = 1.25;

/// Tolerance of the Picard solve behind the final forward solution.
const FINAL_TOL: f64 = 1e-13;
const FINAL_MAX_ITER: usize = 2000;

#[derive(Debug, Clone, PartialEq)]
pub struct InverseSpec {
    /// Problem data with `q` absent.
    pub spec: ProblemSpec,
    pub psi: Profile,
    pub psi0: f64,
    /// `f_x(0, t)` from the sine coefficients of `f`.
    pub fx0: Profile,
    pub q_init: Profile,
    /// Known coefficient of synthetic data, kept for scoring only.
    pub q_true: Option<Profile>,
}

impl InverseSpec {
    pub fn new(spec: ProblemSpec, psi: Profile, psi0: f64) -> Result<Self> {
        let spec = ProblemSpec { q: None, ..spec };
        spec.check_shapes()?;
        if psi.grid() != &spec.tgrid {
            return Err(Error::GridMismatch("ψ is sampled on a different time grid".into()));
        }
        let fx0 = source_flux(&spec)?;
        let q_init = default_q_init(&spec.sigma, spec.l());
        Ok(Self { spec, psi, psi0, fx0, q_init, q_true: None })
    }

    pub fn with_q_init(self, q_init: Profile) -> Result<Self> {
        if q_init.grid() != &self.spec.tgrid {
            return Err(Error::GridMismatch("initial guess is sampled on a different time grid".into()));
        }
        Ok(Self { q_init, ..self })
    }

    /// `ψ(t_n) ≥ ψ₀ > 0` at every node.
    pub fn check_lower_bound(&self) -> Result<()> {
        if !(self.psi0 > 0.0) {
            return Err(Error::Admissibility(format!("ψ₀ = {} must be positive", self.psi0)));
        }
        let min = self.psi.min();
        if min < self.psi0 {
            return Err(Error::Admissibility(format!("min ψ = {min} is below ψ₀ = {}", self.psi0)));
        }
        Ok(())
    }

    fn window(&self) -> (f64, f64) {
        q_window(&self.spec.sigma, self.spec.l())
    }
}

/// `f_x(0, t) = √(2/l) Σ_k λ_k f_k(t)`.
pub fn source_flux(spec: &ProblemSpec) -> Result<Profile> {
    let coeffs = spec.source_coefficients()?;
    let modes = ModeSet::new(spec.l(), coeffs)?;
    flux_at_left(&modes, &spec.tgrid)
}

/// `max(0, midpoint of the admissible window ∩ [0, ∞))`, constant in time.
pub fn default_q_init(sigma: &Profile, l: f64) -> Profile {
    let (lo, hi) = q_window(sigma, l);
    let c = if hi > lo.max(0.0) { 0.5 * (lo.max(0.0) + hi) } else { 0.0 };
    Profile::constant(*sigma.grid(), c.max(0.0))
}

pub fn compute_q0(inv: &InverseSpec) -> Result<Profile> {
    let grid = inv.spec.tgrid;
    if inv.psi.grid() != &grid || inv.fx0.grid() != &grid {
        return Err(Error::GridMismatch("ψ and f_x(0, ·) must share the problem's time grid".into()));
    }
    let min = inv.psi.min();
    if !(inv.psi0 > 0.0) || min < inv.psi0 {
        return Err(Error::domain(format!("min ψ = {min} is below ψ₀ = {}", inv.psi0)));
    }
    let psi = inv.psi.values();
    let fx = inv.fx0.values();
    let d = caputo_l1(psi, &grid, inv.spec.rho)?;
    let mut q0 = vec![0.0; psi.len()];
    for n in 1..psi.len() {
        q0[n] = (fx[n] - d[n].unwrap_or(0.0)) / psi[n];
    }
    q0[0] = match psi.len() {
        0 | 1 => 0.0,
        2 | 3 => q0[1],
        _ => 3.0 * q0[1] - 3.0 * q0[2] + q0[3],
    };
    Profile::new(grid, q0)
}

/// Coefficient sums `√(2/l) Σ λ_k³ |c_k|`: the maximum over time for `f` and the
/// value for `φ`. These are the quantities the proof bounds by the fourth
/// derivative norms.
fn data_sums(spec: &ProblemSpec) -> Result<(f64, f64)> {
    let l = spec.l();
    let norm = (2.0 / l).sqrt();
    let w: Vec<f64> = eigenvalues(spec.k_modes, l).iter().map(|lam| norm * lam.powi(3)).collect();
    let f_coeffs = spec.source_coefficients()?;
    let phi_coeffs = spec.initial_coefficients()?;
    let s_f = f_coeffs.outer_iter().map(|row| row.iter().zip(&w).map(|(c, w)| w * c.abs()).sum::<f64>()).fold(0.0, f64::max);
    let s_phi = phi_coeffs.iter().zip(&w).map(|(c, w)| w * c.abs()).sum();
    Ok((s_f, s_phi))
}

/// `T^ρ/Γ(ρ+1) · S_f + S_φ`, the bound on `√(2/l) Σ λ_k³ |u_k(t)|`.
fn lemma45_bound(spec: &ProblemSpec, s_f: f64, s_phi: f64) -> f64 {
    spec.tgrid.t_final().powf(spec.rho) / gamma(spec.rho + 1.0) * s_f + s_phi
}

/// `C(T) = M_σ T^ρ / (ψ₀ Γ(ρ+1)) · (T^ρ/Γ(ρ+1) · S_f + S_φ)`.
pub fn estimate_ct(inv: &InverseSpec) -> Result<f64> {
    let spec = &inv.spec;
    let (s_f, s_phi) = data_sums(spec)?;
    let bound = lemma45_bound(spec, s_f, s_phi);
    if bound == 0.0 {
        return Ok(0.0);
    }
    let scale = spec.sigma.max() * spec.tgrid.t_final().powf(spec.rho) / (inv.psi0 * gamma(spec.rho + 1.0));
    Ok(scale * bound)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem43Report {
    /// `ψ ≥ ψ₀ > 0` with a bounded finite-difference slope.
    pub regularity: Check,
    /// `φ_x(0) = ψ(0)`.
    pub compatibility: Check,
    /// `0 ≤ T^ρ q₀(t) < T^ρ π² (M_σ - m_σ)/l² - Γ(ρ+1)` at every `t_n`, `n ≥ 1`.
    pub q0_window: Check,
    /// The data-size inequality, equivalent to `C(T) < 1`.
    pub data_size: Check,
    pub ct: f64,
    pub slope_ratio: f64,
}

impl Theorem43Report {
    pub fn all_passed(&self) -> bool {
        self.regularity.passed && self.compatibility.passed && self.q0_window.passed && self.data_size.passed
    }
}

fn slope_ratio(psi: &[f64], h: f64) -> f64 {
    if psi.len() < 3 {
        return 1.0;
    }
    let fine = psi.windows(2).map(|w| (w[1] - w[0]).abs() / h).fold(0.0, f64::max);
    let coarse = psi.windows(3).map(|w| (w[2] - w[0]).abs() / (2.0 * h)).fold(0.0, f64::max);
    if coarse == 0.0 {
        if fine == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        fine / coarse
    }
}

pub fn validate_theorem43(inv: &InverseSpec) -> Result<Theorem43Report> {
    let spec = &inv.spec;
    let l = spec.l();
    let psi = inv.psi.values();
    let min = inv.psi.min();
    let ratio = slope_ratio(psi, spec.tgrid.step());
    let margin = inv.psi0.min(min - inv.psi0).min(SLOPE_RATIO_MAX - ratio);
    let regularity = Check::new(
        inv.psi0 > 0.0 && min >= inv.psi0 && ratio <= SLOPE_RATIO_MAX,
        margin,
        format!("min ψ = {min}, ψ₀ = {}, slope ratio {ratio:.4}", inv.psi0),
    );

    let phi_coeffs = spec.initial_coefficients()?;
    let norm = (2.0 / l).sqrt();
    let phi_x0: f64 = eigenvalues(spec.k_modes, l).iter().zip(&phi_coeffs).map(|(lam, c)| norm * lam * c).sum();
    let defect = (phi_x0 - psi[0]).abs();
    let allowed = COMPATIBILITY_TOL * (1.0 + psi[0].abs());
    let compatibility = Check::new(defect <= allowed, allowed - defect, format!("φ_x(0) = {phi_x0}, ψ(0) = {}", psi[0]));

    let t_rho = spec.tgrid.t_final().powf(spec.rho);
    let g = gamma(spec.rho + 1.0);
    let upper = t_rho * std::f64::consts::PI.powi(2) * (spec.sigma.max() - spec.sigma.min()) / (l * l) - g;
    let q0_window = match compute_q0(inv) {
        Ok(q0) => {
            let vals: Vec<f64> = q0.values()[1..].iter().map(|q| t_rho * q).collect();
            let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let margin = lo.min(upper - hi);
            Check::new(lo >= 0.0 && hi < upper, margin, format!("T^ρ q₀ ∈ [{lo}, {hi}], upper bound {upper}"))
        }
        Err(e) => Check::new(false, f64::NEG_INFINITY, e.to_string()),
    };

    let ct = estimate_ct(inv)?;
    let (s_f, s_phi) = data_sums(spec)?;
    let to_norm = 6f64.sqrt() / l;
    let lhs = t_rho * t_rho / g * to_norm * s_f + t_rho * to_norm * s_phi;
    let rhs = 6f64.sqrt() * inv.psi0 * g / (l * spec.sigma.max());
    let data_size = Check::new(ct < 1.0, 1.0 - ct, format!("{lhs} < {rhs}, C(T) = {ct}"));

    Ok(Theorem43Report { regularity, compatibility, q0_window, data_size, ct, slope_ratio: ratio })
}

/// The parts of `L` that do not depend on `q`.
struct Operator<'a> {
    inv: &'a InverseSpec,
    q0: Vec<f64>,
    problems: Vec<ModeProblem>,
    weights: Vec<ConvolutionWeights>,
    trace_weights: Vec<f64>,
    window: (f64, f64),
    bound: f64,
}

impl<'a> Operator<'a> {
    fn new(inv: &'a InverseSpec) -> Result<Self> {
        let spec = &inv.spec;
        spec.check_shapes()?;
        inv.check_lower_bound()?;
        let q0 = compute_q0(inv)?.into_values();
        let f_coeffs = spec.source_coefficients()?;
        let phi_coeffs = spec.initial_coefficients()?;
        let zero = Profile::constant(spec.tgrid, 0.0);
        let problems = mode_problems(spec, &zero, &f_coeffs, &phi_coeffs)?;
        let weights = problems.par_iter().map(mode_weights).collect::<Result<Vec<_>>>()?;
        let norm = (2.0 / spec.l()).sqrt();
        let trace_weights = eigenvalues(spec.k_modes, spec.l()).iter().map(|lam| norm * lam.powi(3)).collect();
        let (s_f, s_phi) = data_sums(spec)?;
        Ok(Self { inv, q0, problems, weights, trace_weights, window: inv.window(), bound: lemma45_bound(spec, s_f, s_phi) })
    }

    /// Nodewise clamp into the closed admissible window, shrunk by a relative
    /// `1e-12` so the forward problem stays strictly inside it.
    fn project(&self, q: &[f64]) -> (Vec<f64>, bool) {
        let (lo, hi) = self.window;
        let pad = 1e-12 * (hi - lo).abs();
        let (lo, hi) = (lo + pad, hi - pad);
        let mut clamped = false;
        let out = q
            .iter()
            .map(|&v| {
                if v < lo || v > hi {
                    clamped = true;
                }
                v.clamp(lo, hi.max(lo))
            })
            .collect();
        (out, clamped)
    }

    fn with_q(&self, q: &Profile) -> Result<Vec<ModeProblem>> {
        self.problems
            .iter()
            .map(|p| ModeProblem::new(p.k(), p.l(), p.rho(), p.sigma().clone(), q.clone(), p.f_k().clone(), p.phi_k()))
            .collect()
    }

    fn solve_direct(&self, q: &Profile) -> Result<Vec<Vec<f64>>> {
        let problems = self.with_q(q)?;
        problems.par_iter().zip(&self.weights).map(|(p, w)| solve_mode_direct(p, w)).collect()
    }

    fn solve_picard(&self, q: &Profile, tol: f64, max_iter: usize) -> Result<Vec<Vec<f64>>> {
        let problems = self.with_q(q)?;
        problems.par_iter().zip(&self.weights).map(|(p, w)| solve_mode_with_weights(p, w, tol, max_iter).map(|s| s.u_k)).collect()
    }

    /// `√(2/l) Σ λ_k³ u_k(t_n)` and the same sum of absolute values.
    fn traces(&self, modes: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
        let n = self.q0.len();
        let mut signed = vec![0.0; n];
        let mut absolute = vec![0.0; n];
        for (u, w) in modes.iter().zip(&self.trace_weights) {
            for i in 0..n {
                signed[i] += w * u[i];
                absolute[i] += w * u[i].abs();
            }
        }
        (signed, absolute)
    }

    fn image(&self, modes: &[Vec<f64>]) -> (Vec<f64>, f64) {
        let (signed, absolute) = self.traces(modes);
        let sigma = self.inv.spec.sigma.values();
        let psi = self.inv.psi.values();
        let image = (0..self.q0.len()).map(|n| self.q0[n] - sigma[n] / psi[n] * signed[n]).collect();
        let worst = absolute.iter().fold(0.0f64, |m, v| m.max(*v));
        let ratio = if self.bound > 0.0 {
            worst / self.bound
        } else if worst == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        (image, ratio)
    }
}

/// One application of `L`, with the forward problem solved by Picard iteration.
/// `q_current` is first projected into the admissible window.
pub fn apply_l(q_current: &Profile, inv: &InverseSpec, tol: f64, max_iter: usize) -> Result<Profile> {
    if q_current.grid() != &inv.spec.tgrid {
        return Err(Error::GridMismatch("q is sampled on a different time grid".into()));
    }
    let op = Operator::new(inv)?;
    let (q, _) = op.project(q_current.values());
    let q = Profile::new(inv.spec.tgrid, q)?;
    let modes = op.solve_picard(&q, tol, max_iter).map_err(|e| Error::Iterate { iterate: 1, source: Box::new(e) })?;
    Profile::new(inv.spec.tgrid, op.image(&modes).0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct InverseResult {
    pub q: Profile,
    /// Sup-norm update of every iterate.
    pub iterates: Vec<f64>,
    /// Largest ratio of successive updates after the first, above the rounding floor.
    pub measured_ratio: f64,
    pub ct_bound: f64,
    pub condition_report: Theorem43Report,
    pub final_forward: FieldSolution,
    /// Iterates that left the admissible window and were clamped.
    pub clamp_count: usize,
    /// Largest `√(2/l) Σ λ_k³ |u_k(t)|` over iterates and nodes, relative to its bound.
    pub lemma45_ratio: f64,
    /// `max_n |u_x(0, t_n) - ψ(t_n)|` for the final forward solution.
    pub flux_residual: f64,
    /// `max_n |q - q_true|` when the data are synthetic.
    pub q_error: Option<f64>,
}

pub fn recover_q(inv: &InverseSpec, tol: f64, max_iter: usize) -> Result<InverseResult> {
    if !(tol > 0.0) {
        return Err(Error::domain(format!("tolerance {tol} must be positive")));
    }
    let condition_report = validate_theorem43(inv)?;
    let ct_bound = condition_report.ct;
    let op = Operator::new(inv)?;
    let grid = inv.spec.tgrid;
    if inv.q_init.grid() != &grid {
        return Err(Error::GridMismatch("initial guess is sampled on a different time grid".into()));
    }
    let (mut q, clamped) = op.project(inv.q_init.values());
    let mut clamp_count = usize::from(clamped);
    let mut iterates: Vec<f64> = Vec::new();
    let mut measured_ratio: f64 = 0.0;
    let mut lemma45_ratio: f64 = 0.0;
    let mut converged = false;
    for it in 1..=max_iter.max(1) {
        let current = Profile::new(grid, q.clone())?;
        let modes = op.solve_direct(&current).map_err(|e| Error::Iterate { iterate: it, source: Box::new(e) })?;
        let (image, ratio) = op.image(&modes);
        lemma45_ratio = lemma45_ratio.max(ratio);
        let (next, clamped) = op.project(&image);
        clamp_count += usize::from(clamped);
        let update = next.iter().zip(&q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        q = next;
        if iterates.len() >= 2 {
            let prev = iterates[iterates.len() - 1];
            let floor = 64.0 * f64::EPSILON * q.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if prev > floor && update > floor {
                measured_ratio = measured_ratio.max(update / prev);
            }
        }
        iterates.push(update);
        if !update.is_finite() {
            break;
        }
        if update < tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::InverseNonConvergence {
            iterations: iterates.len(),
            last_update: iterates.last().copied().unwrap_or(f64::NAN),
            measured_ratio,
            ct_bound,
        });
    }
    let q = Profile::new(grid, q)?;
    let final_forward = solve_forward(&inv.spec.with_q(q.clone()), FINAL_TOL, FINAL_MAX_ITER)?;
    let flux = flux_at_left(&final_forward.modes, &grid)?;
    let flux_residual = sup_distance(flux.values(), inv.psi.values());
    let q_error = inv.q_true.as_ref().map(|qt| sup_distance(q.values(), qt.values()));
    Ok(InverseResult {
        q,
        iterates,
        measured_ratio,
        ct_bound,
        condition_report,
        final_forward,
        clamp_count,
        lemma45_ratio,
        flux_residual,
        q_error,
    })
}

fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Flux data from the forward solution with `q_true`, optionally perturbed by
/// multiplicative noise `1 + noise_level · U(-1, 1)` drawn from a seeded stream.
pub fn synthesize_data(spec_with_q_true: &ProblemSpec, noise_level: f64, seed: u64) -> Result<InverseSpec> {
    if !(noise_level >= 0.0) {
        return Err(Error::domain(format!("noise level {noise_level} must be nonnegative")));
    }
    let spec = spec_with_q_true;
    spec.check_shapes()?;
    let q_true = spec.q_or_err()?.clone();
    if !(spec.sigma.min() > 0.0) {
        return Err(Error::Admissibility(format!("σ must be positive, min σ = {}", spec.sigma.min())));
    }
    let f_coeffs = spec.source_coefficients()?;
    let phi_coeffs = spec.initial_coefficients()?;
    let problems = mode_problems(spec, &q_true, &f_coeffs, &phi_coeffs)?;
    let per_mode = problems.par_iter().map(|p| mode_weights(p).and_then(|w| solve_mode_direct(p, &w))).collect::<Result<Vec<_>>>()?;
    let mut coeffs = ndarray::Array2::zeros((spec.tgrid.len(), spec.k_modes));
    for (k, u) in per_mode.iter().enumerate() {
        coeffs.column_mut(k).assign(&ndarray::ArrayView1::from(u));
    }
    let modes = ModeSet::new(spec.l(), coeffs)?;
    let mut psi = flux_at_left(&modes, &spec.tgrid)?.into_values();
    if noise_level > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for v in psi.iter_mut() {
            *v *= 1.0 + noise_level * rng.random_range(-1.0..=1.0);
        }
    }
    let psi = Profile::new(spec.tgrid, psi)?;
    let psi0 = psi.min();
    if !(psi0 > 0.0) {
        return Err(Error::Admissibility(format!("synthetic flux is not bounded away from zero, min ψ = {psi0}")));
    }
    let mut inv = InverseSpec::new(spec.clone(), psi, psi0)?;
    inv.q_true = Some(q_true);
    Ok(inv)
}

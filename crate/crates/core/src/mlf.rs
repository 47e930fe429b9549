//! Two-parameter Mittag-Leffler function on the non-positive real axis.
//!
//! `E_{ρ,β}(z) = Σ_k z^k / Γ(ρk + β)`, evaluated for `z = -x ≤ 0` by whichever
//! of three representations attains the target accuracy at `(ρ, β, x)`:
//!
//! * the power series, Kahan-summed, accepted only when the cancellation
//!   between its alternating terms leaves at least 14 correct digits;
//! * the algebraic asymptotic expansion `Σ_{n≥1} (-1)^{n+1} x^{-n} / Γ(β - nρ)`
//!   (plus the decaying oscillatory pair when `ρ > 1`), truncated at its
//!   smallest term, for `x` beyond [`Z_SWITCH`];
//! * the real integral obtained by collapsing the Hankel contour onto the
//!   negative real axis (plus two pole residues when `ρ > 1`), integrated
//!   adaptively; for `ρ = 1` the Euler integral of the exponential.
//!
//! The solver kernels are built from [`relaxation`], [`kernel`] and
//! [`kernel_mass`], which tie the function to the scalar relaxation equation
//! `D^ρ y + λ y = 0`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::gamma::{ln_gamma, ln_gamma_signed, rgamma, sin_pi};
use crate::quad;

/// `|z|` above which the asymptotic expansion is tried first.
pub const Z_SWITCH: f64 = 5.0;

const SERIES_MAX_TERMS: usize = 500;
const ASYMPTOTIC_MAX_TERMS: usize = 500;
/// Required relative accuracy of an accepted series or asymptotic sum.
const ACCEPT_REL: f64 = 1e-14;
const QUAD_REL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlfParams {
    rho: f64,
    beta: f64,
}

impl MlfParams {
    pub fn new(rho: f64, beta: f64) -> Result<Self> {
        if !(rho > 0.0 && rho < 2.0) {
            return Err(Error::domain(format!("Mittag-Leffler order ρ = {rho} must lie in (0, 2)")));
        }
        if !beta.is_finite() {
            return Err(Error::domain(format!("Mittag-Leffler parameter β = {beta} must be finite")));
        }
        Ok(Self { rho, beta })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// Which representation produced a value; exposed for diagnostics and tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Origin,
    Series,
    Asymptotic,
    Integral,
    Exponential,
}

/// `E_{ρ,β}(z)` for `z ≤ 0`.
pub fn eval_mlf(params: MlfParams, z: f64) -> Result<f64> {
    eval_mlf_with_regime(params, z).map(|(v, _)| v)
}

/// [`eval_mlf`] together with the regime that produced the value.
pub fn eval_mlf_with_regime(params: MlfParams, z: f64) -> Result<(f64, Regime)> {
    if z.is_nan() || z > 0.0 {
        return Err(Error::domain(format!("Mittag-Leffler argument z = {z} must be ≤ 0")));
    }
    let MlfParams { rho, beta } = params;
    let x = -z;
    if x == 0.0 {
        return Ok((rgamma(beta), Regime::Origin));
    }
    if x.is_infinite() {
        // every admissible (ρ, β) decays to zero along the negative axis
        return Ok((0.0, Regime::Asymptotic));
    }
    if rho == 1.0 && beta == 1.0 {
        return Ok(((-x).exp(), Regime::Exponential));
    }
    if let Some(v) = series(rho, beta, x) {
        return Ok((v, Regime::Series));
    }
    if x > Z_SWITCH {
        if let Some(v) = asymptotic(rho, beta, x) {
            return Ok((v, Regime::Asymptotic));
        }
    }
    if rho == 1.0 {
        return unit_order(beta, x).map(|v| (v, Regime::Integral));
    }
    hankel_integral(rho, beta, x).map(|v| (v, Regime::Integral))
}

fn kahan_add(sum: &mut f64, comp: &mut f64, term: f64) {
    let y = term - *comp;
    let t = *sum + y;
    *comp = (t - *sum) - y;
    *sum = t;
}

/// `(-x)^k / Γ(ρk + β)` without overflowing either factor.
fn series_term(rho: f64, beta: f64, x: f64, k: usize) -> f64 {
    let arg = rho * k as f64 + beta;
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    if arg < 160.0 && (k as f64) * x.log10().max(0.0) < 250.0 {
        sign * x.powi(k as i32) * rgamma(arg)
    } else {
        if arg <= 0.0 && arg == arg.trunc() {
            return 0.0;
        }
        let (lg, gsign) = ln_gamma_signed(arg);
        sign * gsign * (k as f64 * x.ln() - lg).exp()
    }
}

/// Power series; `None` when cancellation or truncation would cost accuracy.
fn series(rho: f64, beta: f64, x: f64) -> Option<f64> {
    let mut sum = 0.0;
    let mut comp = 0.0;
    let mut abs_sum = 0.0;
    let mut small_run = 0;
    let mut converged = false;
    for k in 0..SERIES_MAX_TERMS {
        let term = series_term(rho, beta, x, k);
        if !term.is_finite() {
            return None;
        }
        kahan_add(&mut sum, &mut comp, term);
        abs_sum += term.abs();
        let arg = rho * k as f64 + beta;
        if arg > 0.0 && term.abs() < 1e-16 * sum.abs() {
            small_run += 1;
            if small_run >= 3 {
                converged = true;
                break;
            }
        } else {
            small_run = 0;
        }
    }
    if !converged {
        return None;
    }
    // each term carries a few ulps of error from pow and Γ
    let err = 8.0 * f64::EPSILON * abs_sum;
    if err <= ACCEPT_REL * sum.abs() {
        Some(sum)
    } else {
        None
    }
}

/// Algebraic asymptotic expansion truncated at the smallest term.
fn asymptotic(rho: f64, beta: f64, x: f64) -> Option<f64> {
    let y = x.powf(1.0 / rho);
    if rho < 1.0 {
        // exponentially small remainder of size exp(-y(1 - cos θ)), θ = π/ρ - π,
        // which the algebraic series cannot see
        let theta = PI / rho - PI;
        let decay = if theta >= PI { 2.0 } else { 1.0 - theta.cos() };
        if y * decay < 45.0 {
            return None;
        }
    }
    let mut sum = 0.0;
    let mut comp = 0.0;
    let mut prev = f64::INFINITY;
    let mut omitted = None;
    let ln_x = x.ln();
    for n in 1..=ASYMPTOTIC_MAX_TERMS {
        let arg = beta - rho * n as f64;
        // |1/Γ(a)| = |sin πa| Γ(1-a)/π for a < 0; the envelope drops the sine so
        // that terms near a pole of Γ do not fake convergence
        let ln_env = if arg > 0.0 { -ln_gamma(arg) } else { ln_gamma(1.0 - arg) - PI.ln() };
        let env = (ln_env - n as f64 * ln_x).exp();
        if env > prev {
            omitted = Some(prev);
            break;
        }
        prev = env;
        let r = rgamma(arg);
        if r != 0.0 {
            let mag = if r.is_finite() { (r.abs().ln() - n as f64 * ln_x).exp() } else { env * sin_pi(arg).abs() };
            let sign = if n % 2 == 1 { 1.0 } else { -1.0 } * r.signum();
            kahan_add(&mut sum, &mut comp, sign * mag);
        }
        if env < 1e-17 * sum.abs() {
            omitted = Some(env);
            break;
        }
    }
    let mut value = sum;
    if rho > 1.0 {
        value += pole_pair(rho, beta, x);
    }
    let err = omitted?;
    if err <= ACCEPT_REL * value.abs().max(1e-3) {
        Some(value)
    } else {
        None
    }
}

/// `(2/ρ) x^{(1-β)/ρ} e^{y cos(π/ρ)} cos(y sin(π/ρ) + π(1-β)/ρ)`, `y = x^{1/ρ}`:
/// the contribution of the conjugate poles `s^ρ = -x` when `1 < ρ < 2`.
fn pole_pair(rho: f64, beta: f64, x: f64) -> f64 {
    let y = x.powf(1.0 / rho);
    let phase = y * (PI / rho).sin() + PI * (1.0 - beta) / rho;
    (2.0 / rho) * x.powf((1.0 - beta) / rho) * (y * (PI / rho).cos()).exp() * phase.cos()
}

/// `E_{ρ,β}(-x)` for `ρ ≠ 1` from the Hankel contour collapsed onto the
/// branch cut:
///
/// `(1/π) ∫_0^∞ e^{-r} r^{ρ-β} [r^ρ sin πβ - x sin π(ρ-β)] / (r^{2ρ} + 2x r^ρ cos πρ + x²) dr`,
///
/// plus, for `ρ > 1`, the residues at the poles `s = x^{1/ρ} e^{±iπ/ρ}`.
/// Valid for `β < 1 + ρ`; larger `β` is reduced with
/// `E_{ρ,β}(z) = (E_{ρ,β-ρ}(z) - 1/Γ(β-ρ)) / z`.
fn hankel_integral(rho: f64, beta: f64, x: f64) -> Result<f64> {
    if beta >= 1.0 + rho {
        let lower = eval_mlf(MlfParams { rho, beta: beta - rho }, -x)?;
        return Ok((rgamma(beta - rho) - lower) / x);
    }
    let s_beta = sin_pi(beta);
    let s_rb = sin_pi(rho - beta);
    let c_rho = (PI * rho).cos();
    // r = s^p flattens the r^{ρ-β} endpoint factor
    let p = 1.0 / (1.0 + rho - beta);
    let integrand = |s: f64| -> f64 {
        if s <= 0.0 {
            return -p * s_rb / x;
        }
        let r = s.powf(p);
        let rr = r.powf(rho);
        let num = rr * s_beta - x * s_rb;
        let den = rr * rr + 2.0 * x * rr * c_rho + x * x;
        // r^{ρ-β} dr = p s^{p(1+ρ-β)-1} ds = p ds
        p * (-r).exp() * num / den
    };
    // stop where e^{-r} has killed everything; for ρ > 1/2 the denominator
    // (r^ρ - u₀)² + W² has a near-pole at r^ρ = u₀, integrated separately
    let s_of = |r: f64| r.powf(1.0 / p);
    let mut breaks = vec![0.0];
    let mut peak = None;
    let mut r_max = 80.0;
    if c_rho < 0.0 {
        let u0 = -x * c_rho;
        let w = x * sin_pi(rho).abs();
        let (r_lo, r_hi) = ((0.5 * u0).powf(1.0 / rho), (1.5 * u0).powf(1.0 / rho));
        r_max = r_hi + 80.0;
        // u = u₀ + W tan θ turns the Lorentzian into a constant
        let window = move |th: f64| -> f64 {
            let u = u0 + w * th.tan();
            let r = u.powf(1.0 / rho);
            (-r).exp() * r.powf(rho - beta) * (u * s_beta - x * s_rb) * u.powf(1.0 / rho - 1.0) / (rho * w)
        };
        let (ta, tb) = ((-0.5 * u0 / w).atan(), (0.5 * u0 / w).atan());
        peak = Some((quad::integrate_with_breaks(window, &[ta, 0.0, tb], 0.0, QUAD_REL, 4000), s_of(r_lo), s_of(r_hi)));
    }
    for r in [0.5, 2.0, 8.0, 32.0] {
        if r < r_max {
            breaks.push(s_of(r));
        }
    }
    breaks.push(s_of(r_max));
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let res = match peak {
        None => quad::integrate_with_breaks(integrand, &breaks, 0.0, QUAD_REL, 4000),
        Some((mid, s_lo, s_hi)) => {
            let mut left: Vec<f64> = breaks.iter().copied().filter(|&b| b < s_lo).collect();
            left.push(s_lo);
            let mut right = vec![s_hi];
            right.extend(breaks.iter().copied().filter(|&b| b > s_hi));
            let a = quad::integrate_with_breaks(integrand, &left, 0.0, QUAD_REL, 4000);
            let b = quad::integrate_with_breaks(integrand, &right, 0.0, QUAD_REL, 4000);
            let parts = [a, mid, b];
            let value: f64 = parts.iter().map(|r| r.value).sum();
            let error: f64 = parts.iter().map(|r| r.error).sum();
            quad::QuadResult {
                value,
                error,
                abs_value: parts.iter().map(|r| r.abs_value).sum(),
                converged: error <= QUAD_REL * value.abs() || parts.iter().all(|r| r.converged),
            }
        }
    };
    let mut value = res.value / PI;
    if rho > 1.0 {
        value += pole_pair(rho, beta, x);
    }
    let tol_abs = 1e-15 * res.abs_value / PI;
    if res.converged || res.error / PI <= tol_abs.max(1e-13 * value.abs()) {
        Ok(value)
    } else {
        Err(Error::Convergence(format!("E_{{{rho},{beta}}}(-{x}): quadrature error estimate {:.3e}", res.error / PI)))
    }
}

/// `E_{1,β}(-x)`: Euler integral for `β > 1`, recurrence for `β < 1`.
fn unit_order(beta: f64, x: f64) -> Result<f64> {
    if beta == 1.0 {
        return Ok((-x).exp());
    }
    if beta < 1.0 {
        // E_{1,β}(z) = 1/Γ(β) + z E_{1,β+1}(z)
        let upper = unit_order(beta + 1.0, x)?;
        return Ok(rgamma(beta) - x * upper);
    }
    // E_{1,β}(-x) = (1/Γ(β)) ∫_0^1 exp(-x (1 - w^{1/(β-1)})) dw
    let q = 1.0 / (beta - 1.0);
    let res = quad::integrate(|w: f64| (-x * (1.0 - w.powf(q))).exp(), 0.0, 1.0, 0.0, QUAD_REL, 4000);
    if res.converged {
        Ok(rgamma(beta) * res.value)
    } else {
        Err(Error::Convergence(format!("E_{{1,{beta}}}(-{x}): Euler integral did not converge")))
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho > 0.0 && rho < 2.0) {
        return Err(Error::domain(format!("order ρ = {rho} must lie in (0, 2)")));
    }
    Ok(())
}

/// `E_{ρ,1}(-λ t^ρ)`, the solution of `D^ρ y + λ y = 0`, `y(0) = 1`.
pub fn relaxation(rho: f64, lam: f64, t: f64) -> Result<f64> {
    check_rho(rho)?;
    if !(lam > 0.0) {
        return Err(Error::domain(format!("relaxation rate λ = {lam} must be positive")));
    }
    if !(t >= 0.0) {
        return Err(Error::domain(format!("time t = {t} must be non-negative")));
    }
    eval_mlf(MlfParams { rho, beta: 1.0 }, -lam * t.powf(rho))
}

/// `λ t^{ρ-1} E_{ρ,ρ}(-λ t^ρ) = -d/dt E_{ρ,1}(-λ t^ρ)`.
pub fn kernel(rho: f64, lam: f64, t: f64) -> Result<f64> {
    check_rho(rho)?;
    if !(lam > 0.0) {
        return Err(Error::domain(format!("kernel rate λ = {lam} must be positive")));
    }
    if !(t > 0.0) {
        return Err(Error::domain(format!("kernel is singular at t = {t}; need t > 0")));
    }
    let e = eval_mlf(MlfParams { rho, beta: rho }, -lam * t.powf(rho))?;
    Ok(lam * t.powf(rho - 1.0) * e)
}

/// `∫_a^b kernel(ρ, λ, η) dη = E_{ρ,1}(-λ a^ρ) - E_{ρ,1}(-λ b^ρ)`; `b` may be `+∞`.
pub fn kernel_mass(rho: f64, lam: f64, a: f64, b: f64) -> Result<f64> {
    if !(a >= 0.0) || !(b >= a) {
        return Err(Error::domain(format!("kernel mass needs 0 ≤ a ≤ b, got a = {a}, b = {b}")));
    }
    if a == b {
        return Ok(0.0);
    }
    Ok(relaxation(rho, lam, a)? - relaxation(rho, lam, b)?)
}

//! Gamma function and friends on the real line.
//!
//! Lanczos approximation (g = 7, nine coefficients) on `x >= 1/2`, extended to
//! the whole real line through the reflection formula. The reciprocal gamma
//! function is entire, so [`rgamma`] returns an exact zero at the poles of
//! `Γ`, which is what the Mittag-Leffler expansions need.

use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// `sin(πx)` with the argument reduced before multiplying by π, so that it
/// vanishes exactly at the integers and stays accurate near them.
pub fn sin_pi(x: f64) -> f64 {
    if !x.is_finite() {
        return f64::NAN;
    }
    if x == x.trunc() {
        return 0.0;
    }
    // r in [-1, 1]
    let r = x - 2.0 * (x / 2.0).round();
    let (r, sign) = if r < 0.0 { (-r, -1.0) } else { (r, 1.0) };
    let v = if r > 0.5 { (PI * (1.0 - r)).sin() } else { (PI * r).sin() };
    sign * v
}

fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x == x.trunc()
}

fn lanczos_sum(xm1: f64) -> f64 {
    let mut a = LANCZOS_COEFFS[0];
    for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        a += c / (xm1 + i as f64);
    }
    a
}

/// Euler's gamma function. Poles return `NaN`; overflow returns `±inf`.
pub fn gamma(x: f64) -> f64 {
    if x.is_nan() || is_nonpositive_integer(x) {
        return f64::NAN;
    }
    if x < 0.5 {
        return PI / (sin_pi(x) * gamma(1.0 - x));
    }
    if x > 171.7 {
        return f64::INFINITY;
    }
    if x == x.trunc() {
        // (x-1)! exactly rounded step by step
        return (2..x as u32).fold(1.0, |acc, k| acc * k as f64);
    }
    // shift into [1/2, 2] and multiply back; the Lanczos sum is most accurate there
    let mut y = x;
    let mut scale = 1.0;
    while y > 2.0 {
        y -= 1.0;
        scale *= y;
    }
    scale * lanczos_gamma(y)
}

fn lanczos_gamma(x: f64) -> f64 {
    let xm1 = x - 1.0;
    let t = xm1 + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powf(xm1 + 0.5) * (-t).exp() * lanczos_sum(xm1)
}

/// `1/Γ(x)`, zero at the poles of `Γ`.
pub fn rgamma(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if is_nonpositive_integer(x) {
        return 0.0;
    }
    if x < 0.5 {
        // 1/Γ(x) = sin(πx) Γ(1-x) / π
        let g = gamma(1.0 - x);
        if g.is_infinite() {
            // |1/Γ(x)| is astronomically large here; sign still follows sin(πx)
            return sin_pi(x).signum() * f64::INFINITY;
        }
        return sin_pi(x) * g / PI;
    }
    if x > 171.7 {
        return (-ln_gamma(x)).exp();
    }
    1.0 / gamma(x)
}

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x.is_nan() || x <= 0.0 {
        return f64::NAN;
    }
    if x < 0.5 {
        // Γ(x) = Γ(x+1)/x keeps us on the Lanczos branch
        return ln_gamma(x + 1.0) - x.ln();
    }
    let xm1 = x - 1.0;
    let t = xm1 + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (xm1 + 0.5) * t.ln() - t + lanczos_sum(xm1).ln()
}

/// `(ln|Γ(x)|, sign Γ(x))` for any non-pole real `x`.
pub fn ln_gamma_signed(x: f64) -> (f64, f64) {
    if x > 0.0 {
        return (ln_gamma(x), 1.0);
    }
    // reflection: Γ(x) = π / (sin(πx) Γ(1-x))
    let s = sin_pi(x);
    ((PI / s.abs()).ln() - ln_gamma(1.0 - x), s.signum())
}

//! Identity suites for the Mittag-Leffler evaluator and the discrete kernels,
//! runnable from a release binary.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::frackernel::{build_weights, caputo_l1, convolve, TimeGrid};
use crate::gamma::rgamma;
use crate::mlf::{eval_mlf, kernel, kernel_mass, relaxation, MlfParams};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub cases: usize,
    pub failures: usize,
    /// Largest error relative to the suite tolerance; `≤ 1` on success.
    pub worst: f64,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

struct Tally {
    name: &'static str,
    tol: f64,
    cases: usize,
    failures: usize,
    worst: f64,
}

impl Tally {
    fn new(name: &'static str, tol: f64) -> Self {
        Self { name, tol, cases: 0, failures: 0, worst: 0.0 }
    }

    fn record(&mut self, err: f64) {
        self.cases += 1;
        let scaled = if err.is_nan() { f64::INFINITY } else { err / self.tol };
        if scaled > 1.0 {
            self.failures += 1;
        }
        self.worst = self.worst.max(scaled);
    }

    fn finish(self) -> SuiteReport {
        SuiteReport { name: self.name.into(), cases: self.cases, failures: self.failures, worst: self.worst }
    }
}

fn ml(rho: f64, beta: f64, z: f64) -> Result<f64> {
    eval_mlf(MlfParams::new(rho, beta)?, z)
}

/// `E_{1,1}(z) = e^z` on `[-30, 0]` to `1e-12` relative.
pub fn exponential_suite() -> Result<SuiteReport> {
    let mut tally = Tally::new("mlf exponential agreement", 1e-12);
    for i in 0..=3000 {
        let z = -30.0 * i as f64 / 3000.0;
        tally.record((ml(1.0, 1.0, z)? - z.exp()).abs() / z.exp());
    }
    Ok(tally.finish())
}

/// `0 ≤ E_{ρ,β}(-λt^ρ) ≤ 1/Γ(β)` for `ρ ∈ (0, 1]`, `β ≥ ρ`.
pub fn bounds_suite(cases: usize, seed: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tally = Tally::new("mlf complete-monotonicity bounds", 1e-13);
    for _ in 0..cases {
        let rho = rng.random_range(0.05..=1.0);
        let beta = rho + rng.random_range(0.0..2.0);
        let lam = 10f64.powf(rng.random_range(-3.0..2.0));
        let t: f64 = rng.random_range(0.0..20.0);
        let v = ml(rho, beta, -lam * t.powf(rho))?;
        let cap = rgamma(beta);
        tally.record((-v).max(v - cap).max(0.0) / cap);
    }
    Ok(tally.finish())
}

/// `∫_0^t λη^{ρ-1}E_{ρ,ρ}(-λη^ρ) dη + E_{ρ,1}(-λt^ρ) = 1`.
pub fn mass_suite(cases: usize, seed: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tally = Tally::new("mlf kernel mass identity", 1e-12);
    for _ in 0..cases {
        let rho = rng.random_range(0.05..1.0);
        let lam = 10f64.powf(rng.random_range(-3.0..3.0));
        let t = rng.random_range(0.0..50.0);
        tally.record((kernel_mass(rho, lam, 0.0, t)? + relaxation(rho, lam, t)? - 1.0).abs());
    }
    Ok(tally.finish())
}

/// `λt^{ρ-1}E_{ρ,ρ}(-λt^ρ) = -d/dt E_{ρ,1}(-λt^ρ)` against central differences.
pub fn derivative_suite(cases: usize, seed: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tally = Tally::new("mlf kernel derivative", 1e-6);
    let h = 1e-5;
    for _ in 0..cases {
        let rho = rng.random_range(0.2..=1.0);
        let lam = rng.random_range(0.1..10.0);
        let t = rng.random_range(0.1..2.0);
        let fd = -(relaxation(rho, lam, t + h)? - relaxation(rho, lam, t - h)?) / (2.0 * h);
        let k = kernel(rho, lam, t)?;
        tally.record((k - fd).abs() / k.abs().max(1.0));
    }
    Ok(tally.finish())
}

/// The L1 derivative of `t` is `t^{1-ρ}/Γ(2-ρ)` exactly.
pub fn l1_linear_suite() -> Result<SuiteReport> {
    let mut tally = Tally::new("L1 exact on linear functions", 1e-12);
    for &rho in &[0.1, 0.3, 0.5, 0.7, 0.9] {
        let grid = TimeGrid::new(1.0, 200)?;
        let d = caputo_l1(&grid.nodes(), &grid, rho)?;
        for (n, dn) in d.iter().enumerate().skip(1) {
            let exact = grid.node(n).powf(1.0 - rho) * rgamma(2.0 - rho);
            tally.record((dn.unwrap_or(f64::NAN) - exact).abs() / exact.max(1.0));
        }
    }
    Ok(tally.finish())
}

/// `λ Σ_j w[n][j] = 1 - E_{ρ,1}(-λt_n^ρ)` with nonnegative interval masses.
pub fn telescoping_suite() -> Result<SuiteReport> {
    let mut tally = Tally::new("weight rows telescope", 1e-12);
    for &(rho, lam) in &[(0.3, 0.5), (0.5, 9.87), (0.9, 400.0), (1.0, 2.0)] {
        let grid = TimeGrid::new(2.0, 200)?;
        let w = build_weights(&grid, rho, lam)?;
        for n in 1..=200 {
            let row: f64 = (0..n).map(|j| w.get(n, j)).sum();
            let target = 1.0 - relaxation(rho, lam, grid.node(n))?;
            let negative = (0..n).map(|j| (-w.get(n, j)).max(0.0)).fold(0.0, f64::max);
            tally.record((lam * row - target).abs() + negative);
        }
    }
    Ok(tally.finish())
}

/// The discrete convolution of `g ≡ 1` is `(1 - E_{ρ,1}(-λt_n^ρ))/λ`.
pub fn constant_convolution_suite() -> Result<SuiteReport> {
    let mut tally = Tally::new("convolution of a constant", 1e-12);
    for &(rho, lam) in &[(0.4, 3.0), (0.6, 50.0), (0.8, 0.2)] {
        let grid = TimeGrid::new(1.0, 300)?;
        let w = build_weights(&grid, rho, lam)?;
        let c = convolve(&w, &vec![1.0; grid.len()])?;
        for (cn, r) in c.iter().zip(w.relaxation()) {
            tally.record((cn - (1.0 - r) / lam).abs());
        }
    }
    Ok(tally.finish())
}

/// The Mittag-Leffler identity suites with `cases` random draws each.
pub fn mlf_suites(cases: usize, seed: u64) -> Result<Vec<SuiteReport>> {
    Ok(vec![
        exponential_suite()?,
        bounds_suite(cases, seed)?,
        mass_suite(cases, seed.wrapping_add(1))?,
        derivative_suite(cases, seed.wrapping_add(2))?,
    ])
}

pub fn frackernel_suites() -> Result<Vec<SuiteReport>> {
    Ok(vec![l1_linear_suite()?, telescoping_suite()?, constant_convolution_suite()?])
}

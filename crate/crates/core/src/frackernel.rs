//! Uniform time grids, the L1 Caputo differentiator, and product-integration
//! weights for the Mittag-Leffler Volterra kernel `t^{ρ-1} E_{ρ,ρ}(-λ t^ρ)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gamma::{gamma, rgamma};
use crate::mlf::{eval_mlf, relaxation, MlfParams};

/// Default bound on the number of time steps accepted by [`build_weights`].
pub const DEFAULT_WEIGHT_CAP: usize = 16_384;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t_final: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(t_final: f64, n_steps: usize) -> Result<Self> {
        if !(t_final > 0.0 && t_final.is_finite()) {
            return Err(Error::domain(format!("horizon T = {t_final} must be positive and finite")));
        }
        if n_steps == 0 {
            return Err(Error::domain("time grid needs at least one step"));
        }
        Ok(Self { t_final, n_steps })
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Number of nodes, `N + 1`.
    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        self.t_final / self.n_steps as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        if j == self.n_steps {
            self.t_final
        } else {
            j as f64 * self.step()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.node(j)).collect()
    }

    pub(crate) fn check_len(&self, what: &str, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(Error::GridMismatch(format!("{what} has {len} samples but the time grid has {} nodes", self.len())));
        }
        Ok(())
    }
}

/// L1 approximation of the Caputo derivative at `t_1..t_N`; entry 0 is `None`.
pub fn caputo_l1(samples: &[f64], grid: &TimeGrid, rho: f64) -> Result<Vec<Option<f64>>> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::domain(format!("L1 scheme needs ρ in (0, 1), got {rho}")));
    }
    if samples.len() < 2 {
        return Err(Error::domain("L1 scheme needs at least two samples"));
    }
    grid.check_len("Caputo input", samples.len())?;
    let b = l1_coefficients(grid.n_steps(), rho);
    let scale = grid.step().powf(-rho) * rgamma(2.0 - rho);
    let diffs: Vec<f64> = samples.windows(2).map(|w| w[1] - w[0]).collect();
    let mut out = vec![None];
    for n in 1..samples.len() {
        let acc: f64 = (0..n).map(|j| b[j] * diffs[n - 1 - j]).sum();
        out.push(Some(scale * acc));
    }
    Ok(out)
}

/// `b_j = (j+1)^{1-ρ} - j^{1-ρ}` for `j < n`.
pub(crate) fn l1_coefficients(n: usize, rho: f64) -> Vec<f64> {
    let e = 1.0 - rho;
    (0..n).map(|j| (j as f64 + 1.0).powf(e) - (j as f64).powf(e)).collect()
}

/// Product-integration weights for `∫_0^{t_n} (t_n-s)^{ρ-1} E_{ρ,ρ}(-λ(t_n-s)^ρ) g(s) ds`
/// with `g` replaced by its piecewise-linear interpolant.
///
/// On a uniform grid the weights depend on `n - j` only, so each lower
/// triangle is stored as the vector of its diagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvolutionWeights {
    rho: f64,
    lam_eff: f64,
    grid: TimeGrid,
    /// weight on the left node of the subinterval `m` steps back
    left: Vec<f64>,
    /// weight on the right node of the same subinterval
    right: Vec<f64>,
    /// starting corrections on `g_0, g_1, g_2` for each row `n`
    start: Vec<[f64; 3]>,
    /// `E_{ρ,1}(-λ t_n^ρ)` at every node
    relax: Vec<f64>,
}

impl ConvolutionWeights {
    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn lam_eff(&self) -> f64 {
        self.lam_eff
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// Kernel mass `∫_{t_j}^{t_{j+1}} (t_n-s)^{ρ-1} E_{ρ,ρ}(-λ(t_n-s)^ρ) ds` for
    /// `j < n ≤ N`; zero outside the lower triangle.
    pub fn get(&self, n: usize, j: usize) -> f64 {
        if j >= n || n > self.grid.n_steps() {
            0.0
        } else {
            self.left[n - j - 1] + self.right[n - j - 1]
        }
    }

    /// The relaxation trajectory `E_{ρ,1}(-λ t_n^ρ)` at the grid nodes.
    pub fn relaxation(&self) -> &[f64] {
        &self.relax
    }

    pub(crate) fn parts(&self) -> (&[f64], &[f64]) {
        (&self.left, &self.right)
    }

    pub(crate) fn start(&self) -> &[[f64; 3]] {
        &self.start
    }

    /// Coefficient of `g_j` in `c[n]`.
    pub fn coefficient(&self, n: usize, j: usize) -> f64 {
        if n == 0 || n > self.grid.n_steps() {
            return 0.0;
        }
        let mut c = 0.0;
        if j < n {
            c += self.left[n - j - 1];
        }
        if j > 0 && j <= n {
            c += self.right[n - j];
        }
        if j < 3 {
            c += self.start[n][j];
        }
        c
    }
}

pub fn build_weights(grid: &TimeGrid, rho: f64, lam_eff: f64) -> Result<ConvolutionWeights> {
    build_weights_with_cap(grid, rho, lam_eff, DEFAULT_WEIGHT_CAP)
}

pub fn build_weights_with_cap(grid: &TimeGrid, rho: f64, lam_eff: f64, cap: usize) -> Result<ConvolutionWeights> {
    if !(lam_eff > 0.0 && lam_eff.is_finite()) {
        return Err(Error::domain(format!("effective rate λ = {lam_eff} must be positive")));
    }
    if grid.n_steps() > cap {
        return Err(Error::Resource { requested: grid.n_steps(), cap });
    }
    let nodes = grid.nodes();
    let relax = nodes.iter().map(|&t| relaxation(rho, lam_eff, t)).collect::<Result<Vec<_>>>()?;
    let p1 = MlfParams::new(rho, 1.0 + rho)?;
    let p2 = MlfParams::new(rho, 2.0 + rho)?;
    // G1(τ) = ∫_0^τ K, G2(τ) = ∫_0^τ G1
    let mut g1 = Vec::with_capacity(nodes.len());
    let mut g2 = Vec::with_capacity(nodes.len());
    for &t in &nodes {
        let tr = t.powf(rho);
        g1.push(tr * eval_mlf(p1, -lam_eff * tr)?);
        g2.push(t * tr * eval_mlf(p2, -lam_eff * tr)?);
    }
    let h = grid.step();
    let n = grid.n_steps();
    let mut left = Vec::with_capacity(n);
    let mut right = Vec::with_capacity(n);
    for m in 0..n {
        let (ta, tb) = (nodes[m], nodes[m + 1]);
        let mass = (g1[m + 1] - g1[m]).max(0.0);
        let first = tb * g1[m + 1] - ta * g1[m] - (g2[m + 1] - g2[m]);
        let l = ((first - ta * mass) / h).clamp(0.0, mass);
        left.push(l);
        right.push(mass - l);
    }
    let start = starting_corrections(&nodes, rho, lam_eff, &left, &right)?;
    Ok(ConvolutionWeights { rho, lam_eff, grid: *grid, left, right, start, relax })
}

/// Corrections that make the rule exact on `s^ρ` as well as on `1` and `s`.
///
/// Each row adds a multiple of `g_1 - (g_0 + g_2)/2`, which vanishes on `1`
/// and `s`; row 1 therefore reaches one node ahead. On a one-step grid the
/// first subinterval uses the interpolant `g_0 + (g_1 - g_0)(s/h)^ρ` instead.
fn starting_corrections(nodes: &[f64], rho: f64, lam_eff: f64, left: &[f64], right: &[f64]) -> Result<Vec<[f64; 3]>> {
    let n = nodes.len() - 1;
    let mut start = vec![[0.0; 3]; n + 1];
    let defect = 1.0 - 2f64.powf(rho - 1.0);
    if defect < 1e-6 {
        return Ok(start);
    }
    let p = MlfParams::new(rho, 1.0 + 2.0 * rho)?;
    let pow: Vec<f64> = nodes.iter().map(|t| t.powf(rho)).collect();
    let hr = pow[1];
    let scale = gamma(1.0 + rho);
    for k in 1..=n {
        let exact = scale * pow[k] * pow[k] * eval_mlf(p, -lam_eff * pow[k])?;
        let approx: f64 = (0..k).map(|m| left[m] * pow[k - m - 1] + right[m] * pow[k - m]).sum();
        if n == 1 {
            let d = exact / hr - right[0];
            start[1] = [-d, d, 0.0];
        } else {
            let w = (exact - approx) / (hr * defect);
            start[k] = [-0.5 * w, w, -0.5 * w];
        }
    }
    Ok(start)
}

/// `c[n] ≈ ∫_0^{t_n} K(t_n - s) g(s) ds` from the samples of `g`: piecewise-linear
/// product integration plus the starting corrections.
pub fn convolve(weights: &ConvolutionWeights, g: &[f64]) -> Result<Vec<f64>> {
    weights.grid.check_len("convolution input", g.len())?;
    let (a, b) = weights.parts();
    let start = weights.start();
    let mut c = vec![0.0; g.len()];
    for (n, cn) in c.iter_mut().enumerate().skip(1) {
        let s = &start[n];
        let head = s[0] * g[0] + s[1] * g[1] + if g.len() > 2 { s[2] * g[2] } else { 0.0 };
        *cn = head + (0..n).map(|m| a[m] * g[n - m - 1] + b[m] * g[n - m]).sum::<f64>();
    }
    Ok(c)
}

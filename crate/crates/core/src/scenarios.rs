//! Reference problems shared by the verification commands and the test suites.

use std::f64::consts::{PI, SQRT_2};

use ndarray::Array2;
use rand::Rng;

use crate::error::Result;
use crate::forward::{q_window, ProblemSpec};
use crate::frackernel::TimeGrid;
use crate::gamma::rgamma;
use crate::mode_solver::ModeProblem;
use crate::profile::Profile;
use crate::spectral::SpaceGrid;

/// `u*(x, t) = (1+t) √2 sin(πx)` on `(0, 1) × (0, 1]` with `σ ≡ 1`, `q ≡ 0.1`.
pub struct Manufactured {
    pub spec: ProblemSpec,
    pub exact: Array2<f64>,
}

pub fn manufactured(rho: f64, n_steps: usize, n_cells: usize) -> Result<Manufactured> {
    let tgrid = TimeGrid::new(1.0, n_steps)?;
    let sgrid = SpaceGrid::new(1.0, n_cells)?;
    let q = 0.1;
    let shape: Vec<f64> = sgrid.nodes().iter().map(|&x| SQRT_2 * (PI * x).sin()).collect();
    let mut shape = shape;
    *shape.last_mut().unwrap() = 0.0;
    let times = tgrid.nodes();
    let exact = Array2::from_shape_fn((tgrid.len(), sgrid.len()), |(n, i)| (1.0 + times[n]) * shape[i]);
    let f = Array2::from_shape_fn((tgrid.len(), sgrid.len()), |(n, i)| {
        let t = times[n];
        (t.powf(1.0 - rho) * rgamma(2.0 - rho) + (PI * PI + q) * (1.0 + t)) * shape[i]
    });
    let spec = ProblemSpec {
        rho,
        tgrid,
        sgrid,
        sigma: Profile::constant(tgrid, 1.0),
        q: Some(Profile::constant(tgrid, q)),
        f,
        phi: shape,
        k_modes: sgrid.default_modes(),
    };
    Ok(Manufactured { spec, exact })
}

/// A few-mode field `Σ_k c_k(t) √(2/l) sin(λ_k x)` sampled on the grids.
fn modal_field(sgrid: &SpaceGrid, times: &[f64], coeff: impl Fn(usize, f64) -> f64, modes: usize) -> Array2<f64> {
    let l = sgrid.length();
    let norm = (2.0 / l).sqrt();
    let xs = sgrid.nodes();
    Array2::from_shape_fn((times.len(), xs.len()), |(n, i)| {
        if i == 0 || i == xs.len() - 1 {
            return 0.0;
        }
        (1..=modes).map(|k| coeff(k, times[n]) * norm * (PI * k as f64 * xs[i] / l).sin()).sum()
    })
}

/// Smooth data satisfying Assumption 1: oscillating `σ`, affine `q` strictly
/// inside its window, and three-mode `φ` and `f`.
pub fn random_smooth<R: Rng>(rng: &mut R, rho: f64, t_final: f64, n_steps: usize, n_cells: usize) -> Result<ProblemSpec> {
    let tgrid = TimeGrid::new(t_final, n_steps)?;
    let sgrid = SpaceGrid::new(1.0, n_cells)?;
    let (s0, s1, w, th) = (rng.random_range(1.0..2.0), rng.random_range(0.2..0.6), rng.random_range(1.0..4.0), rng.random_range(0.0..PI));
    let sigma = Profile::from_fn(tgrid, |t| s0 + s1 * (w * t + th).sin());
    let (lo, hi) = q_window(&sigma, 1.0);
    let (qa, qb) = (rng.random_range(0.1..0.6), rng.random_range(0.1..0.6));
    let (qa, qb) = (qa * hi.min(-lo), qb * hi.min(-lo));
    let q = Profile::from_fn(tgrid, |t| qa + (qb - qa) * t / t_final);
    let phi_c: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
    let f_amp: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
    let f_freq: Vec<f64> = (0..3).map(|_| rng.random_range(0.5..3.0)).collect();
    let times = tgrid.nodes();
    let phi_field = modal_field(&sgrid, &[0.0], |k, _| phi_c[k - 1] / (k * k) as f64, 3);
    let f = modal_field(&sgrid, &times, |k, t| f_amp[k - 1] * (f_freq[k - 1] * t).cos() / k as f64, 3);
    Ok(ProblemSpec { rho, tgrid, sgrid, sigma, q: Some(q), f, phi: phi_field.row(0).to_vec(), k_modes: sgrid.default_modes() })
}

/// Sign constraint on the data of a random mode problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataSign {
    Any,
    NonNegative,
    NonPositive,
}

/// A mode problem with `σ`, `q` inside the admissible window and smooth data.
pub fn random_mode_problem<R: Rng>(rng: &mut R, rho: f64, grid: TimeGrid, sign: DataSign) -> Result<ModeProblem> {
    let k = rng.random_range(1..=8);
    let l = rng.random_range(0.5..2.0);
    let t_final = grid.t_final();
    let (s0, s1, w, th) = (rng.random_range(0.5..2.0), rng.random_range(0.0..0.8), rng.random_range(0.5..5.0), rng.random_range(0.0..PI));
    let sigma = Profile::from_fn(grid, |t| s0 + s1 * s0 * 0.5 * (w * t + th).sin());
    let (lo, hi) = q_window(&sigma, l);
    // a strict interior point of the window, affine in time
    let pick = |rng: &mut R| lo + (hi - lo) * rng.random_range(0.05..0.95);
    let (qa, qb) = (pick(rng), pick(rng));
    let q = Profile::from_fn(grid, |t| qa + (qb - qa) * t / t_final);
    let (fa, fb, fw): (f64, f64, f64) = (rng.random_range(0.0..3.0), rng.random_range(0.0..1.0), rng.random_range(0.5..6.0));
    let mut phi = rng.random_range(0.0..2.0);
    // fa ≥ fb keeps fa + fb sin(·) ≥ 0
    let mut f_k = Profile::from_fn(grid, |t| fa.max(fb) + fb * (fw * t).sin());
    match sign {
        DataSign::NonNegative => {}
        DataSign::NonPositive => {
            phi = -phi;
            f_k = f_k.map(|v| -v);
        }
        DataSign::Any => {
            if rng.random_bool(0.5) {
                phi = -phi;
            }
            let shift = rng.random_range(0.0..3.0);
            f_k = f_k.map(|v| v - shift);
        }
    }
    ModeProblem::new(k, l, rho, sigma, q, f_k, phi)
}


/// Flux-data problem on `(0, 1) × (0, 1/2]` with `ρ = 1/2`, `σ(t) = 2 + sin t`,
/// `f = √2 sin(πx)` and `φ = a √2 sin(πx)`, where `a = 1/(π² σ(0) + q(0))`
/// removes the `t^ρ` term of the first mode so that `ψ` is `C¹`.
pub fn inverse_scenario(q_true: impl Fn(f64) -> f64, n_steps: usize, n_cells: usize, k_modes: usize) -> Result<ProblemSpec> {
    let tgrid = TimeGrid::new(0.5, n_steps)?;
    let sgrid = SpaceGrid::new(1.0, n_cells)?;
    let sigma = Profile::from_fn(tgrid, |t| 2.0 + t.sin());
    let q = Profile::from_fn(tgrid, q_true);
    let a = 1.0 / (PI * PI * sigma.values()[0] + q.values()[0]);
    let times = tgrid.nodes();
    let f = modal_field(&sgrid, &times, |k, _| if k == 1 { 1.0 } else { 0.0 }, 1);
    let phi = modal_field(&sgrid, &[0.0], |k, _| if k == 1 { a } else { 0.0 }, 1).row(0).to_vec();
    Ok(ProblemSpec { rho: 0.5, tgrid, sgrid, sigma, q: Some(q), f, phi, k_modes })
}

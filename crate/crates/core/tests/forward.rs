use std::f64::consts::{PI, SQRT_2};

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use subdiff_core::forward::{solve_forward, validate_assumption1, ProblemSpec};
use subdiff_core::frackernel::TimeGrid;
use subdiff_core::mlf::relaxation;
use subdiff_core::oracle::solve_fd;
use subdiff_core::profile::Profile;
use subdiff_core::scenarios::{manufactured, random_smooth};
use subdiff_core::spectral::SpaceGrid;

fn homogeneous(rho: f64, n_steps: usize, n_cells: usize, sigma: Profile, q: f64, phi: impl Fn(f64) -> f64) -> ProblemSpec {
    let tgrid = *sigma.grid();
    let sgrid = SpaceGrid::new(1.0, n_cells).unwrap();
    let mut phi: Vec<f64> = sgrid.nodes().into_iter().map(phi).collect();
    phi[0] = 0.0;
    phi[n_cells] = 0.0;
    assert_eq!(tgrid.n_steps(), n_steps);
    ProblemSpec {
        rho,
        tgrid,
        sgrid,
        sigma,
        q: Some(Profile::constant(tgrid, q)),
        f: Array2::zeros((n_steps + 1, n_cells + 1)),
        phi,
        k_modes: sgrid.default_modes(),
    }
}

fn sup(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    (a - b).iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[test]
fn assumption_one_examples() {
    let g = TimeGrid::new(1.0, 20).unwrap();
    let flat = homogeneous(0.5, 20, 16, Profile::constant(g, 1.0), 0.0, |x| (PI * x).sin());
    let r = validate_assumption1(&flat);
    assert!(r.positivity.passed && r.compatibility.passed);
    assert!(!r.q_window_check.passed);

    let wavy = homogeneous(0.5, 20, 16, Profile::from_fn(g, |t| 2.0 + t.sin()), 0.0, |x| (PI * x).sin());
    let r = validate_assumption1(&wavy);
    assert!(r.all_passed());
    assert!((r.m_sigma - 2.0).abs() < 1e-15);
    assert!((r.big_m_sigma - (2.0 + 1f64.sin())).abs() < 1e-12);
    assert!((r.q_window.0 + 2.0 * PI * PI).abs() < 1e-12);
    assert!((r.q_window.1 - 1f64.sin() * PI * PI).abs() < 1e-12);

    let mut tilted = wavy.clone();
    tilted.phi = tilted.sgrid.nodes();
    assert!(!validate_assumption1(&tilted).compatibility.passed);
}

#[test]
fn single_mode_relaxation() {
    let g = TimeGrid::new(1.0, 200).unwrap();
    let m = 1.7;
    let spec = homogeneous(0.6, 200, 64, Profile::constant(g, m), 0.0, |x| SQRT_2 * (PI * x).sin());
    let sol = solve_forward(&spec, 1e-12, 50).unwrap();
    let exact = Array2::from_shape_fn(sol.u.dim(), |(n, i)| {
        SQRT_2 * relaxation(0.6, PI * PI * m, g.node(n)).unwrap() * (PI * spec.sgrid.node(i)).sin()
    });
    assert!(sup(&sol.u, &exact) < 1e-8);
}

#[test]
fn zero_data_zero_solution() {
    let g = TimeGrid::new(1.0, 32).unwrap();
    let spec = homogeneous(0.5, 32, 32, Profile::from_fn(g, |t| 1.0 + t), 0.2, |_| 0.0);
    let sol = solve_forward(&spec, 1e-12, 50).unwrap();
    assert!(sol.u.iter().all(|v| *v == 0.0));
    assert_eq!(sol.residual_norm, 0.0);
}

#[test]
fn manufactured_solution_is_recovered() {
    let mut prev = f64::INFINITY;
    for (n, m) in [(256, 64), (512, 128), (1024, 256)] {
        let case = manufactured(0.5, n, m).unwrap();
        let sol = solve_forward(&case.spec, 1e-12, 100).unwrap();
        let err = sup(&sol.u, &case.exact);
        assert!(err < 5e-3, "error {err}");
        assert!(sol.residual_norm <= 1e-2);
        assert!(sol.residual_norm < prev || sol.residual_norm < 1e-10, "residual {}", sol.residual_norm);
        prev = sol.residual_norm;
        let row0 = sol.u.row(0);
        assert!(row0[0] == 0.0 && row0[m] == 0.0);
    }
}

#[test]
fn residuals_of_both_solvers_are_comparable() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..3 {
        let spec = random_smooth(&mut rng, 0.5, 1.0, 256, 64).unwrap();
        let spectral = solve_forward(&spec, 1e-12, 100).unwrap();
        let fd = solve_fd(&spec).unwrap();
        assert!(fd.residual_norm <= 3.0 * spectral.residual_norm, "fd {} spectral {}", fd.residual_norm, spectral.residual_norm);
    }
}

#[test]
fn nonnegative_data_gives_nonnegative_modes() {
    let g = TimeGrid::new(1.0, 128).unwrap();
    let mut spec = homogeneous(0.4, 128, 64, Profile::from_fn(g, |t| 1.0 + 0.5 * t), 1.0, |x| (PI * x).sin() + 0.3 * (3.0 * PI * x).sin());
    let xs = spec.sgrid.nodes();
    spec.f = Array2::from_shape_fn((129, 65), |(n, i)| (1.0 + g.node(n)) * (PI * xs[i]).sin().max(0.0) * (i > 0 && i < 64) as u8 as f64);
    let sol = solve_forward(&spec, 1e-12, 100).unwrap();
    let phi = spec.initial_coefficients().unwrap();
    let f = spec.source_coefficients().unwrap();
    for k in 0..spec.k_modes {
        if phi[k] >= 0.0 && f.column(k).iter().all(|v| *v >= 0.0) {
            assert!(sol.modes.mode(k + 1).iter().all(|u| *u >= -1e-12), "mode {}", k + 1);
        }
    }
}

#[test]
fn second_derivative_blows_up_no_faster_than_t_to_minus_rho() {
    let rho = 0.5;
    let g = TimeGrid::new(1.0, 1000).unwrap();
    let spec = homogeneous(rho, 1000, 256, Profile::constant(g, 1.0), 0.5, |x| x * (1.0 - x));
    let sol = solve_forward(&spec, 1e-12, 100).unwrap();
    let diag = sol.diagnostics.as_ref().unwrap();
    let sup_xx: Vec<f64> = sol.u_xx_diag.outer_iter().map(|r| r.iter().fold(0.0f64, |m, v| m.max(v.abs()))).collect();
    // least-squares slope of log sup|u_xx| against log t over the first decade
    let pts: Vec<(f64, f64)> = (10..=100).map(|n| (g.node(n).ln(), sup_xx[n].ln())).collect();
    let (mx, my) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (mx, my) = (mx / pts.len() as f64, my / pts.len() as f64);
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!(slope >= -rho - 0.15, "slope {slope}");
    let lams: Vec<f64> = (1..=spec.k_modes).map(|k| PI * k as f64).collect();
    for n in 1..=1000 {
        let q2: f64 = lams.iter().enumerate().map(|(k, l)| l * l * sol.modes.coeffs()[[n, k]].abs()).sum();
        assert!(q2 <= diag.regularity.q2_bound[n], "n={n}");
    }
}

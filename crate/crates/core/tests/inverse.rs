use std::f64::consts::{PI, SQRT_2};

use ndarray::Array2;
use subdiff_core::forward::ProblemSpec;
use subdiff_core::frackernel::TimeGrid;
use subdiff_core::gamma::gamma;
use subdiff_core::inverse::*;
use subdiff_core::profile::Profile;
use subdiff_core::scenarios::inverse_scenario;
use subdiff_core::spectral::SpaceGrid;
use subdiff_core::Error;

fn sup(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// σ ≡ `sigma`, f ≡ 0 and φ = `amp` √2 sin(πx) on (0, 1) × (0, T].
fn free_decay(sigma: f64, amp: f64, t_final: f64, n_steps: usize) -> ProblemSpec {
    let tgrid = TimeGrid::new(t_final, n_steps).unwrap();
    let sgrid = SpaceGrid::new(1.0, 64).unwrap();
    let mut phi: Vec<f64> = sgrid.nodes().iter().map(|&x| amp * SQRT_2 * (PI * x).sin()).collect();
    *phi.last_mut().unwrap() = 0.0;
    ProblemSpec {
        rho: 0.5,
        tgrid,
        sgrid,
        sigma: Profile::constant(tgrid, sigma),
        q: None,
        f: Array2::zeros((tgrid.len(), sgrid.len())),
        phi,
        k_modes: 16,
    }
}

#[test]
fn constant_flux_without_source_gives_zero_q0() {
    let spec = free_decay(1.0, 1.0, 1.0, 64);
    let grid = spec.tgrid;
    let mut inv = InverseSpec::new(spec, Profile::constant(grid, 1.0), 0.5).unwrap();
    inv.psi = Profile::constant(grid, 2.5);
    let q0 = compute_q0(&inv).unwrap();
    assert!(q0.values().iter().all(|v| v.abs() < 1e-14));
}

#[test]
fn affine_flux_matches_closed_form_caputo() {
    let spec = free_decay(1.0, 1.0, 1.0, 128);
    let grid = spec.tgrid;
    let psi = Profile::from_fn(grid, |t| 1.0 + t);
    let inv = InverseSpec::new(spec, psi, 1.0).unwrap();
    let q0 = compute_q0(&inv).unwrap();
    for (n, t) in grid.nodes().into_iter().enumerate().skip(1) {
        let exact = -t.sqrt() / (gamma(1.5) * (1.0 + t));
        assert!((q0.values()[n] - exact).abs() < 1e-12, "t = {t}");
    }
}

#[test]
fn flux_below_its_lower_bound_is_rejected() {
    let spec = free_decay(1.0, 1.0, 1.0, 16);
    let grid = spec.tgrid;
    let inv = InverseSpec::new(spec, Profile::from_fn(grid, |t| 1.0 - t), 0.5).unwrap();
    assert!(matches!(compute_q0(&inv), Err(Error::Domain(_))));
    let q = Profile::constant(grid, 0.0);
    assert!(apply_l(&q, &inv, 1e-12, 100).is_err());
}

#[test]
fn zero_data_is_inadmissible() {
    let spec = free_decay(1.0, 0.0, 1.0, 16);
    let spec = spec.with_q(Profile::constant(spec.tgrid, 0.3));
    assert!(matches!(synthesize_data(&spec, 0.0, 1), Err(Error::Admissibility(_))));
}

#[test]
fn ct_vanishes_for_zero_data_and_scales_with_inverse_psi0() {
    let spec = free_decay(1.0, 0.0, 1.0, 16);
    let grid = spec.tgrid;
    let inv = InverseSpec::new(spec, Profile::constant(grid, 1.0), 1.0).unwrap();
    assert_eq!(estimate_ct(&inv).unwrap(), 0.0);

    let spec = inverse_scenario(|_| 0.3, 64, 64, 16).unwrap();
    let inv = synthesize_data(&spec, 0.0, 1).unwrap();
    let a = estimate_ct(&inv).unwrap();
    let doubled = InverseSpec { psi0: 2.0 * inv.psi0, ..inv };
    let b = estimate_ct(&doubled).unwrap();
    assert!((a / b - 2.0).abs() < 1e-12);
}

#[test]
fn compatible_unit_flux_has_no_defect() {
    let spec = free_decay(1.0, 1.0 / (SQRT_2 * PI), 1.0, 32);
    let grid = spec.tgrid;
    let inv = InverseSpec::new(spec, Profile::constant(grid, 1.0), 1.0).unwrap();
    let report = validate_theorem43(&inv).unwrap();
    assert!(report.compatibility.passed, "{}", report.compatibility.detail);
    assert!(report.compatibility.margin > 1e-6 - 1e-9);
}

#[test]
fn constant_diffusivity_fails_the_q0_window() {
    let spec = free_decay(1.0, 1.0, 1.0, 32);
    let spec = spec.with_q(Profile::constant(spec.tgrid, 0.3));
    let inv = synthesize_data(&spec, 0.0, 1).unwrap();
    let report = validate_theorem43(&inv).unwrap();
    assert!(!report.q0_window.passed);
    assert!(!report.all_passed());
}

#[test]
fn scenario_conditions_and_ct_lower_bound() {
    let spec = inverse_scenario(|_| 0.3, 256, 128, 32).unwrap();
    let inv = synthesize_data(&spec, 0.0, 1).unwrap();
    let report = validate_theorem43(&inv).unwrap();
    assert!(report.regularity.passed, "{}", report.regularity.detail);
    assert!(report.compatibility.passed, "{}", report.compatibility.detail);
    // ψ₀ ≤ ψ(0) ≤ S_φ/λ₁², so C(T) ≥ M_σ T^ρ λ₁² / Γ(ρ+1) whatever the data
    let floor = inv.spec.sigma.max() * 0.5f64.sqrt() * PI * PI / gamma(1.5);
    assert!(report.ct >= floor);
    assert_eq!(report.data_size.passed, report.ct < 1.0);
}

#[test]
fn fixed_point_defect_decreases_under_refinement() {
    let mut defects = Vec::new();
    for n in [128, 256, 512] {
        let spec = inverse_scenario(|_| 0.3, n, 128, 32).unwrap();
        let inv = synthesize_data(&spec, 0.0, 1).unwrap();
        let q_true = inv.q_true.clone().unwrap();
        let image = apply_l(&q_true, &inv, 1e-13, 500).unwrap();
        defects.push(sup(image.values(), q_true.values()));
    }
    assert!(defects[0] < 5e-3, "{defects:?}");
    assert!(defects.windows(2).all(|w| w[1] < w[0]), "{defects:?}");
}

#[test]
fn recovery_of_constant_coefficient() {
    let spec = inverse_scenario(|_| 0.3, 256, 128, 32).unwrap();
    let inv = synthesize_data(&spec, 0.0, 1).unwrap();
    let q_true = inv.q_true.clone().unwrap();
    let defect = sup(apply_l(&q_true, &inv, 1e-13, 500).unwrap().values(), q_true.values());
    let tol = 1e-9;
    let res = recover_q(&inv, tol, 5000).unwrap();
    let err = res.q_error.unwrap();
    assert!(err < 3e-3 && err <= 1.5 * defect, "error {err}, fixed-point defect {defect}");
    assert!(res.measured_ratio < 1.0);
    for w in res.iterates[1..].windows(2) {
        assert!(w[1] <= (res.measured_ratio + 0.05) * w[0]);
    }
    assert!(res.flux_residual <= 10.0 * tol + 1e-4, "{}", res.flux_residual);
    assert!(res.lemma45_ratio <= 1.0);
    assert_eq!(res.clamp_count, 0);
}

#[test]
fn recovery_of_affine_coefficient() {
    let spec = inverse_scenario(|t| 0.2 + 0.1 * t, 256, 128, 32).unwrap();
    let inv = synthesize_data(&spec, 0.0, 1).unwrap();
    let res = recover_q(&inv, 1e-9, 5000).unwrap();
    assert!(res.q_error.unwrap() < 5e-3, "{}", res.q_error.unwrap());
}

#[test]
fn null_coefficient_is_recovered() {
    let spec = inverse_scenario(|_| 0.0, 256, 128, 32).unwrap();
    let inv = synthesize_data(&spec, 0.0, 1).unwrap();
    let res = recover_q(&inv, 1e-9, 5000).unwrap();
    assert!(res.q_error.unwrap() < 5e-3, "{}", res.q_error.unwrap());
}

#[test]
fn starting_at_the_truth_stops_at_once() {
    let spec = inverse_scenario(|_| 0.3, 256, 128, 32).unwrap();
    let inv = synthesize_data(&spec, 0.0, 1).unwrap();
    let q_true = inv.q_true.clone().unwrap();
    let inv = inv.with_q_init(q_true).unwrap();
    let res = recover_q(&inv, 1e-2, 50).unwrap();
    assert!(res.iterates.len() <= 2, "{:?}", res.iterates);
}

#[test]
fn clamped_iterates_are_counted() {
    let spec = inverse_scenario(|_| 0.3, 64, 64, 16).unwrap();
    let inv = synthesize_data(&spec, 0.0, 1).unwrap();
    let far = Profile::constant(spec.tgrid, 1e3);
    let inv = inv.with_q_init(far).unwrap();
    let res = recover_q(&inv, 1e-8, 5000).unwrap();
    assert!(res.clamp_count >= 1);
}

#[test]
fn non_convergence_reports_diagnostics() {
    let spec = inverse_scenario(|_| 0.3, 64, 64, 16).unwrap();
    let inv = synthesize_data(&spec, 0.0, 1).unwrap();
    match recover_q(&inv, 1e-14, 3) {
        Err(Error::InverseNonConvergence { iterations, ct_bound, .. }) => {
            assert_eq!(iterations, 3);
            assert!(ct_bound > 0.0);
        }
        other => panic!("expected non-convergence, got {other:?}"),
    }
}

#[test]
fn noise_is_seeded_and_multiplicative() {
    let spec = inverse_scenario(|_| 0.3, 64, 64, 16).unwrap();
    let clean = synthesize_data(&spec, 0.0, 7).unwrap();
    let a = synthesize_data(&spec, 0.01, 7).unwrap();
    let b = synthesize_data(&spec, 0.01, 7).unwrap();
    let c = synthesize_data(&spec, 0.01, 8).unwrap();
    let bits = |p: &Profile| p.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a.psi), bits(&b.psi));
    assert_ne!(bits(&a.psi), bits(&c.psi));
    for (noisy, exact) in a.psi.values().iter().zip(clean.psi.values()) {
        assert!((noisy / exact - 1.0).abs() <= 0.01 + 1e-15);
    }
    assert!(a.q_true.is_some() && a.spec.q.is_none());
}

#[test]
fn default_initial_guess_is_the_window_midpoint() {
    let spec = inverse_scenario(|_| 0.3, 32, 64, 16).unwrap();
    let inv = synthesize_data(&spec, 0.0, 1).unwrap();
    let hi = PI * PI * (0.5f64).sin();
    for v in inv.q_init.values() {
        assert!((v - 0.5 * hi).abs() < 1e-12);
    }
}

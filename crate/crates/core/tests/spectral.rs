use std::f64::consts::{PI, SQRT_2};

use ndarray::Array2;
use proptest::prelude::*;
use subdiff_core::frackernel::TimeGrid;
use subdiff_core::spectral::{
    assemble_field, eigenvalue, flux_at_left, sine_coefficients, tail_diagnostics, third_trace_at_left, ModeSet, SpaceGrid,
};

#[test]
fn eigenvalues() {
    assert!((eigenvalue(1, PI).unwrap() - 1.0).abs() < 1e-15);
    assert!((eigenvalue(3, 1.0).unwrap() - 9.4247780).abs() < 1e-7);
    assert!((eigenvalue(2, 2.0).unwrap() - PI).abs() < 1e-15);
    assert!(eigenvalue(0, 1.0).is_err());
}

#[test]
fn coefficients_of_a_single_sine() {
    let s = SpaceGrid::new(1.0, 256).unwrap();
    let g: Vec<f64> = s.nodes().iter().map(|x| (PI * x).sin()).collect();
    let c = sine_coefficients(&g, &s, 4).unwrap();
    assert!((c[0] - SQRT_2 / 2.0).abs() < 1e-10);
    assert!(c[1..].iter().all(|v| v.abs() < 1e-10));
    assert!(sine_coefficients(&vec![0.0; 257], &s, 4).unwrap().iter().all(|v| *v == 0.0));
    assert!(sine_coefficients(&g, &s, 129).is_err());
}

#[test]
fn coefficients_of_a_parabola() {
    let s = SpaceGrid::new(1.0, 256).unwrap();
    let g: Vec<f64> = s.nodes().iter().map(|x| x * (1.0 - x)).collect();
    let c = sine_coefficients(&g, &s, 8).unwrap();
    assert!((c[0] - 0.182_442_2).abs() < 1e-7);
    for (i, ck) in c.iter().enumerate() {
        let k = (i + 1) as f64;
        let exact = SQRT_2 * 2.0 * (1.0 - (-1f64).powi(i as i32 + 1)) / (k * PI).powi(3);
        assert!((ck - exact).abs() < 1e-9, "k={k}");
    }
}

#[test]
fn assembled_single_mode_is_a_sine() {
    let s = SpaceGrid::new(1.0, 64).unwrap();
    let t = TimeGrid::new(1.0, 3).unwrap();
    let mut c = Array2::zeros((4, 3));
    c.column_mut(0).fill(1.0);
    let u = assemble_field(&ModeSet::new(1.0, c).unwrap(), &s, &t).unwrap();
    for row in u.outer_iter() {
        for (x, v) in s.nodes().iter().zip(row) {
            assert!((v - SQRT_2 * (PI * x).sin()).abs() < 1e-14);
        }
        assert_eq!(row[0], 0.0);
        assert_eq!(row[64], 0.0);
    }
    let zero = assemble_field(&ModeSet::new(1.0, Array2::zeros((4, 3))).unwrap(), &s, &t).unwrap();
    assert!(zero.iter().all(|v| *v == 0.0));
}

#[test]
fn traces_of_a_single_mode() {
    let t = TimeGrid::new(1.0, 2).unwrap();
    let mut c = Array2::zeros((3, 2));
    c.column_mut(0).fill(1.0);
    let modes = ModeSet::new(1.0, c).unwrap();
    let psi = flux_at_left(&modes, &t).unwrap();
    assert!(psi.values().iter().all(|v| (v - 4.4428829).abs() < 1e-7));
    let third = third_trace_at_left(&modes, &t).unwrap();
    assert!(third.values().iter().all(|v| (v + PI.powi(3) * SQRT_2).abs() < 1e-12));
    let zero = ModeSet::new(1.0, Array2::zeros((3, 2))).unwrap();
    assert!(flux_at_left(&zero, &t).unwrap().values().iter().all(|v| *v == 0.0));
    assert!(third_trace_at_left(&zero, &t).unwrap().values().iter().all(|v| *v == 0.0));
}

#[test]
fn traces_match_finite_differences() {
    let l = 2.0;
    let t = TimeGrid::new(1.0, 4).unwrap();
    let mut c = Array2::zeros((5, 3));
    for n in 0..5 {
        c[[n, 0]] = 1.0 + n as f64;
    }
    let modes = ModeSet::new(l, c).unwrap();
    let mut prev_flux = f64::INFINITY;
    let mut prev_third = f64::INFINITY;
    for cells in [64, 128, 256] {
        let s = SpaceGrid::new(l, cells).unwrap();
        let dx = s.step();
        let u = assemble_field(&modes, &s, &t).unwrap();
        let psi = flux_at_left(&modes, &t).unwrap();
        let third = third_trace_at_left(&modes, &t).unwrap();
        let mut flux_err = 0.0f64;
        let mut third_err = 0.0f64;
        for n in 0..5 {
            // odd reflection through x = 0
            let fd = u[[n, 1]] / dx;
            flux_err = flux_err.max((fd - psi.values()[n]).abs());
            let fd3 = (u[[n, 3]] - 3.0 * u[[n, 2]] + 3.0 * u[[n, 1]] - u[[n, 0]]) / dx.powi(3);
            third_err = third_err.max((fd3 - third.values()[n]).abs());
        }
        assert!(flux_err < 5.0 * dx * dx, "flux {flux_err}");
        assert!(third_err < 50.0 * dx, "third {third_err}");
        assert!(flux_err < prev_flux && third_err < prev_third);
        prev_flux = flux_err;
        prev_third = third_err;
    }
}

#[test]
fn tails_of_simple_data() {
    let zero = tail_diagnostics(Array2::zeros((3, 20)).view(), &[0.0; 20], 1.0, 2).unwrap();
    assert_eq!((zero.source_sum, zero.initial_sum, zero.non_decay), (0.0, 0.0, false));
    let mut phi = vec![0.0; 20];
    phi[0] = 1.0;
    let single = tail_diagnostics(Array2::zeros((3, 20)).view(), &phi, 1.0, 2).unwrap();
    assert!((single.initial_sum - PI * PI).abs() < 1e-12);
    assert!(tail_diagnostics(Array2::zeros((3, 20)).view(), &phi, 1.0, 4).is_err());
}

#[test]
fn tail_of_a_parabola_decays_and_respects_the_bound() {
    let s = SpaceGrid::new(1.0, 512).unwrap();
    let g: Vec<f64> = s.nodes().iter().map(|x| x * (1.0 - x)).collect();
    let phi = sine_coefficients(&g, &s, 64).unwrap();
    let f = Array2::zeros((2, 64));
    let mut prev_increment = f64::INFINITY;
    for k in [16, 32, 64] {
        let r = tail_diagnostics(f.slice(ndarray::s![.., ..k]), &phi[..k], 1.0, 2).unwrap();
        assert!(!r.non_decay);
        assert!(r.initial_last_decade < prev_increment);
        prev_increment = r.initial_last_decade;
        // (l/√6)‖φ'‖ with ‖φ'‖² = ∫(1-2x)² = 1/3, times the λ² weight bound √6/l·Σ
        let bound = (1.0 / 3.0f64).sqrt() * 6.0f64.sqrt();
        assert!(r.initial_sum.is_finite() && r.initial_sum < 4.0 * bound);
    }
}

proptest! {
    #[test]
    fn round_trip_and_parseval(c in proptest::collection::vec(-1.0f64..1.0, 16)) {
        let s = SpaceGrid::new(1.0, 128).unwrap();
        let t = TimeGrid::new(1.0, 1).unwrap();
        let coeffs = Array2::from_shape_fn((2, 16), |(_, k)| c[k] / (1 + k) as f64);
        let u = assemble_field(&ModeSet::new(1.0, coeffs.clone()).unwrap(), &s, &t).unwrap();
        let row = u.row(1).to_vec();
        let back = sine_coefficients(&row, &s, 32).unwrap();
        for k in 0..32 {
            let expected = if k < 16 { coeffs[[1, k]] } else { 0.0 };
            prop_assert!((back[k] - expected).abs() < 1e-9);
        }
        let energy = s.integrate(&row.iter().map(|v| v * v).collect::<Vec<_>>()).unwrap();
        let sum: f64 = back.iter().map(|v| v * v).sum();
        prop_assert!(sum <= energy + 1e-8);
    }
}

mod common;

use common::oracles::oracle_dwt;
use common::{drifting_signal, l2, max_abs_diff, rel_err, rng, uniform_vec};
use proptest::prelude::*;
use wdan::wavelet::{
    coeff_len, decompose, decompose_with, dwt_level, dwt_level_with, make_basis, reconstruct, split_components,
    Boundary, SUPPORTED_WAVELETS,
};

#[test]
fn db4_single_level_matches_frozen_reference() {
    let x = [1.0, -2.0, 3.5, 0.25, 4.0, -1.0, 2.0, 0.5, -3.0, 1.5];
    let (a, d) = dwt_level(&x, &make_basis("db4").unwrap()).unwrap();
    let a_ref = [
        3.1477742884369917,
        1.1335357599834677,
        0.4361572035933754,
        0.2832581113326593,
        3.063346760156997,
        2.1429175646001135,
        -1.4942687068426332,
        1.3043016150524656,
    ];
    let d_ref = [
        1.1420865096678139,
        3.685758466818444,
        2.479184260879712,
        2.04332208561674,
        -2.970495297962054,
        1.0467270261691313,
        1.8977260709913282,
        -3.4444859189057087,
    ];
    assert!(max_abs_diff(&a, &a_ref) < 1e-12);
    assert!(max_abs_diff(&d, &d_ref) < 1e-12);
}

#[test]
fn haar_odd_length_matches_frozen_reference() {
    let x = [1.0, -2.0, 3.5, 0.25, 4.0, -1.0, 2.0, 0.5, -3.0];
    let (a, d) = dwt_level(&x, &make_basis("haar").unwrap()).unwrap();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let a_ref = [-r, 3.75 * r, 3.0 * r, 2.5 * r, -6.0 * r];
    let d_ref = [3.0 * r, 3.25 * r, 5.0 * r, 1.5 * r, 0.0];
    assert!(max_abs_diff(&a, &a_ref) < 1e-14);
    assert!(max_abs_diff(&d, &d_ref) < 1e-14);
}

#[test]
fn oracle_agrees_with_the_frozen_reference() {
    let x = [1.0, -2.0, 3.5, 0.25, 4.0, -1.0, 2.0, 0.5, -3.0, 1.5];
    let (a, _) = oracle_dwt(&x, &make_basis("db4").unwrap());
    assert!((a[0] - 3.1477742884369917).abs() < 1e-12);
    assert!((a[7] - 1.3043016150524656).abs() < 1e-12);
}

#[test]
fn dwt_level_matches_direct_convolution_for_every_basis() {
    let mut r = rng(11);
    for name in SUPPORTED_WAVELETS {
        let basis = make_basis(name).unwrap();
        for len in [2usize, 3, 5, 17, 32, 96, 101, 336] {
            let x = uniform_vec(&mut r, len, 10.0);
            let (a, d) = dwt_level(&x, &basis).unwrap();
            let (ao, d_o) = oracle_dwt(&x, &basis);
            assert_eq!(a.len(), coeff_len(len, basis.lowpass().len(), Boundary::Symmetric));
            assert!(max_abs_diff(&a, &ao) < 1e-12, "{name} len {len}");
            assert!(max_abs_diff(&d, &d_o) < 1e-12, "{name} len {len}");
        }
    }
}

#[test]
fn periodization_preserves_energy_per_level() {
    let mut r = rng(5);
    for name in SUPPORTED_WAVELETS {
        let basis = make_basis(name).unwrap();
        for len in [32usize, 96, 336, 720] {
            let x = drifting_signal(&mut r, len);
            let (a, d) = dwt_level_with(&x, &basis, Boundary::Periodization).unwrap();
            let e_in = l2(&x).powi(2);
            let e_out = l2(&a).powi(2) + l2(&d).powi(2);
            assert!((e_in - e_out).abs() <= 1e-10 * e_in, "{name} len {len}");
            let dec = decompose_with(&x, &basis, 3, Boundary::Periodization).unwrap();
            let mut e = l2(&dec.approx).powi(2);
            for det in &dec.details {
                e += l2(det).powi(2);
            }
            assert!((e_in - e).abs() <= 1e-10 * e_in, "{name} len {len} multilevel");
        }
    }
}

#[test]
fn symmetric_lengths_follow_the_padding_rule() {
    let basis = make_basis("coif3").unwrap();
    let d = decompose(&vec![1.0; 336], &basis, 2).unwrap();
    assert_eq!(d.level_lengths, vec![336, (336 + 17) / 2]);
    assert_eq!(d.details[0].len(), (336 + 17) / 2);
    assert_eq!(d.approx.len(), (d.level_lengths[1] + 17) / 2);
}

#[test]
fn linear_signal_is_pure_trend_for_higher_order_wavelets() {
    // four vanishing moments: details of a line vanish away from the edges
    let basis = make_basis("db4").unwrap();
    let x: Vec<f64> = (0..128).map(|t| 0.5 * t as f64 - 3.0).collect();
    let c = split_components(&decompose(&x, &basis, 2).unwrap(), &basis).unwrap();
    let res_mid = c.residual[32..96].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(res_mid < 1e-9, "interior residual {res_mid}");
}

fn basis_strategy() -> impl Strategy<Value = &'static str> {
    prop::sample::select(SUPPORTED_WAVELETS.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn reconstruction_is_exact(
        name in basis_strategy(),
        boundary in prop::sample::select(vec![Boundary::Symmetric, Boundary::Periodization]),
        levels in 1usize..=3,
        xs in prop::collection::vec(-1e3f64..1e3, 8..300),
    ) {
        let basis = make_basis(name).unwrap();
        let d = decompose_with(&xs, &basis, levels, boundary).unwrap();
        let y = reconstruct(&d, &basis).unwrap();
        prop_assert_eq!(y.len(), xs.len());
        let tol = if basis.lowpass().len() == 2 { 1e-10 } else { 1e-8 };
        prop_assert!(rel_err(&y, &xs) < tol);
    }

    #[test]
    fn trend_plus_residual_is_the_signal(
        name in basis_strategy(),
        levels in 1usize..=3,
        xs in prop::collection::vec(-50f64..50.0, 8..300),
    ) {
        let basis = make_basis(name).unwrap();
        let c = split_components(&decompose(&xs, &basis, levels).unwrap(), &basis).unwrap();
        let sum: Vec<f64> = c.trend.iter().zip(&c.residual).map(|(a, b)| a + b).collect();
        prop_assert!(rel_err(&sum, &xs) < 1e-8);
    }

    #[test]
    fn decomposition_is_linear(
        name in basis_strategy(),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        pair in (8usize..200).prop_flat_map(|n| (
            prop::collection::vec(-10f64..10.0, n),
            prop::collection::vec(-10f64..10.0, n),
        )),
    ) {
        let (xs, ys) = pair;
        let basis = make_basis(name).unwrap();
        let combo: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| a * x + b * y).collect();
        let dx = decompose(&xs, &basis, 2).unwrap();
        let dy = decompose(&ys, &basis, 2).unwrap();
        let dc = decompose(&combo, &basis, 2).unwrap();
        let expect: Vec<f64> = dx.approx.iter().zip(&dy.approx).map(|(p, q)| a * p + b * q).collect();
        prop_assert!(max_abs_diff(&dc.approx, &expect) < 1e-9);
    }

    #[test]
    fn constants_have_no_residual(
        name in basis_strategy(),
        c in -100f64..100.0,
        n in 8usize..200,
    ) {
        let basis = make_basis(name).unwrap();
        let split = split_components(&decompose(&vec![c; n], &basis, 2).unwrap(), &basis).unwrap();
        prop_assert!(split.residual.iter().all(|r| r.abs() < 1e-9 * c.abs().max(1.0)));
    }
}

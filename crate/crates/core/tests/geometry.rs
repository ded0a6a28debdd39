#![allow(clippy::needless_range_loop)]

mod common;

use ancient_mcf_core::geometry::{build_catenoid, build_synthetic, total_curvature, ModelKind, Potential};
use ancient_mcf_core::mesh::build_grid;
use ancient_mcf_core::Error;
use common::{cross, dot, surface_jet, HyperDual};
use std::f64::consts::PI;

fn catenoid_x(v: HyperDual, th: HyperDual) -> [HyperDual; 3] {
    [v.cosh() * th.cos(), v.cosh() * th.sin(), v]
}

#[test]
fn catenoid_tensors_match_the_embedding() {
    let m = build_catenoid(6.0).unwrap();
    for &(v, th) in &[(0.0, 0.0), (0.7, 1.3), (-2.1, 4.0), (3.5, 5.9)] {
        let (d1, d2) = surface_jet(catenoid_x, v, th);
        let nu = m.unit_normal(v, th).unwrap();
        let x = m.embedding(v, th).unwrap();
        assert!((x[0] - v.cosh() * th.cos()).abs() < 1e-14 && (x[2] - v).abs() < 1e-14);
        let n = cross(&d1[0], &d1[1]);
        let len = dot(&n, &n).sqrt();
        let g = m.metric(v, th);
        let h = m.second_form(v, th);
        for i in 0..2 {
            assert!(dot(&d1[i], &nu).abs() < 1e-13);
            for j in 0..2 {
                let scale = v.cosh().powi(2);
                assert!((g[i][j] - dot(&d1[i], &d1[j])).abs() < 1e-12 * scale);
                assert!((h[i][j] + dot(&d2[i][j], &nu)).abs() < 1e-12 * scale);
            }
        }
        for k in 0..3 {
            assert!((n[k] / len - nu[k]).abs() < 1e-13, "normal orientation");
        }
        assert!((m.sqrt_det_g(v, th) - len).abs() < 1e-12 * len);
    }
}

#[test]
fn catenoid_is_minimal_with_closed_form_curvature() {
    let m = build_catenoid(6.0).unwrap();
    for &v in &[-3.0, -0.4, 0.0, 1.1, 2.5] {
        let fr = m.frame(v, 0.3);
        let mix = fr.mixed_second_form;
        assert!((mix[0][0] + mix[1][1]).abs() < 1e-15);
        let a2 = mix[0][0] * mix[0][0] + mix[1][1] * mix[1][1];
        let sech = 1.0 / v.cosh();
        assert!((a2 - 2.0 * sech.powi(4)).abs() < 1e-15);
        assert!((m.potential(v, 0.0) - a2).abs() < 1e-15);
        let dw = m.grad_potential(v, 0.0)[0];
        let fd = (m.potential(v + 1e-5, 0.0) - m.potential(v - 1e-5, 0.0)) / 2e-5;
        assert!((dw - fd).abs() < 1e-8);
        let t = v.tanh();
        let c = fr.christoffel;
        assert!((c[0][0][0] - t).abs() < 1e-14);
        assert!((c[0][1][1] + t).abs() < 1e-14);
        assert!((c[1][0][1] - t).abs() < 1e-14 && (c[1][1][0] - t).abs() < 1e-14);
    }
}

#[test]
fn second_form_derivative_satisfies_codazzi() {
    let m = build_catenoid(6.0).unwrap();
    for &v in &[-1.7, 0.2, 2.9] {
        let g = m.grad_second_form(v, 0.0);
        for k in 0..2 {
            // ∇_j h_i^k symmetric in (i, j), trace-free in (i, k).
            assert!((g[0][1][k] - g[1][0][k]).abs() < 1e-13);
        }
        for j in 0..2 {
            assert!((g[j][0][0] + g[j][1][1]).abs() < 1e-13);
        }
        let mix_v = |x: f64| m.frame(x, 0.0).mixed_second_form[0][0];
        let fd = (mix_v(v + 1e-5) - mix_v(v - 1e-5)) / 2e-5;
        assert!((g[0][0][0] - fd).abs() < 1e-8);
    }
}

#[test]
fn intrinsic_radius_and_chart_radius_are_inverse() {
    let m = build_catenoid(12.0).unwrap();
    for r in [0.5, 3.0, 74.2] {
        let v = m.chart_radius(r);
        assert!((m.intrinsic_radius(v, 0.0) - r).abs() < 1e-12 * r);
    }
    let s = build_synthetic(Potential::Zero, 2.0, 10.0).unwrap();
    assert_eq!(s.chart_radius(3.0), 3.0);
    assert_eq!(s.v_max(), 5.0);
}

#[test]
fn total_curvature_on_a_truncation_matches_closed_form() {
    let m = build_catenoid(6.0).unwrap();
    let grid = build_grid(&m, 3f64.sinh(), 1201, 8).unwrap();
    let exact = 8.0 * PI * 3f64.tanh();
    assert!((total_curvature(&grid) / exact - 1.0).abs() < 1e-5);
}

#[test]
fn synthetic_models_are_flat_with_the_requested_potential() {
    let s = build_synthetic(Potential::Sech2 { depth: 6.0, width: 2.0 }, 2.0 * PI * 0.4, 12.0).unwrap();
    assert_eq!(s.kind(), ModelKind::Synthetic);
    assert!(s.embedding(0.0, 0.0).is_none() && s.unit_normal(0.0, 0.0).is_none());
    let fr = s.frame(1.0, 0.0);
    assert!((fr.metric[1][1] - 0.16).abs() < 1e-15);
    assert_eq!(fr.second_form, [[0.0; 2]; 2]);
    assert!((fr.potential - 6.0 / 0.5f64.cosh().powi(2)).abs() < 1e-14);
    let b = build_synthetic(Potential::Bump { depth: 2.0, width: 1.5 }, 1.0, 4.0).unwrap();
    assert_eq!(b.potential(1.6, 0.0), 0.0);
    assert!((b.potential(0.0, 0.0) - 2.0).abs() < 1e-15);
}

#[test]
fn invalid_models_are_rejected() {
    assert!(matches!(build_catenoid(-1.0), Err(Error::InvalidParameter(_))));
    assert!(build_synthetic(Potential::Zero, 0.0, 1.0).is_err());
    assert!(build_synthetic(Potential::Zero, 1.0, f64::NAN).is_err());
    assert!(build_synthetic(Potential::Sech2 { depth: -1.0, width: 1.0 }, 1.0, 1.0).is_err());
    assert!(build_synthetic(Potential::Bump { depth: 1.0, width: 0.0 }, 1.0, 1.0).is_err());
}

#![allow(clippy::needless_range_loop)]

mod common;

use ancient_mcf_core::geometry::{build_catenoid, build_synthetic, Potential};
use ancient_mcf_core::mesh::{build_grid, GridFunction};
use ancient_mcf_core::nonlinear::{
    defining_error, error_term, expanded_error, graph_geometry, model_nonlinearity, node_geometry, ModelNonlinearity, Nonlinearity,
};
use ancient_mcf_core::Error;
use common::{catenoid_graph, cross, dot, sech_jet, surface_jet};

#[test]
fn graph_curvature_matches_automatic_differentiation() {
    let m = build_catenoid(6.0).unwrap();
    for &s in &[0.3, 0.05] {
        for &(v, th) in &[(0.0, 0.4), (0.9, 2.2), (-1.6, 5.1)] {
            let (d1, d2) = surface_jet(|a, b| catenoid_graph(s, a, b), v, th);
            let mut n = cross(&d1[0], &d1[1]);
            let len = dot(&n, &n).sqrt();
            n.iter_mut().for_each(|x| *x /= len);
            let g = [[dot(&d1[0], &d1[0]), dot(&d1[0], &d1[1])], [dot(&d1[1], &d1[0]), dot(&d1[1], &d1[1])]];
            let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
            let gi = [[g[1][1] / det, -g[0][1] / det], [-g[1][0] / det, g[0][0] / det]];
            let mut hmean = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    hmean += gi[i][j] * -dot(&d2[i][j], &n);
                }
            }
            let fr = m.frame(v, th);
            let jet = sech_jet(s, v, th);
            let geo = node_geometry(&fr, &jet, Some(&jet.hessian(&fr))).unwrap();
            let nu = m.unit_normal(v, th).unwrap();
            assert!((geo.mean_curvature - hmean).abs() < 1e-12, "H {} vs {}", geo.mean_curvature, hmean);
            assert!((geo.tilt - 1.0 / dot(&nu, &n)).abs() < 1e-12);
            for i in 0..2 {
                for j in 0..2 {
                    assert!((geo.g_hat[i][j] - g[i][j]).abs() < 1e-12 * (1.0 + g[i][j].abs()));
                }
            }
            let area = det.sqrt() - fr.sqrt_det;
            assert!((geo.area_excess - area).abs() < 1e-12 * fr.sqrt_det);
        }
    }
}

#[test]
fn expanded_and_defining_forms_agree_pointwise() {
    let m = build_catenoid(6.0).unwrap();
    for &s in &[0.2, 1e-3] {
        for &(v, th) in &[(0.0, 0.0), (1.2, 0.7), (-2.4, 3.3)] {
            let fr = m.frame(v, th);
            let jet = sech_jet(s, v, th);
            let a = expanded_error(&fr, &jet).unwrap();
            let b = defining_error(&fr, &jet).unwrap();
            assert!((a - b).abs() < 1e-12 * s, "{a} vs {b}");
        }
    }
}

#[test]
fn error_term_is_quadratic_in_the_amplitude() {
    let m = build_catenoid(6.0).unwrap();
    let fr = m.frame(0.6, 1.0);
    let e = |s: f64| defining_error(&fr, &sech_jet(s, 0.6, 1.0)).unwrap();
    let q1 = e(1e-3) / 1e-6;
    let q2 = e(5e-4) / 2.5e-7;
    assert!((q1 / q2 - 1.0).abs() < 2e-3);
    assert_eq!(e(0.0), 0.0);
}

#[test]
fn flat_graphs_have_no_error_term() {
    let s = build_synthetic(Potential::Zero, 1.0, 4.0).unwrap();
    let grid = build_grid(&s, 2.0, 41, 8).unwrap();
    let u = GridFunction::from_fn(&grid, |v, _| 0.1 * v).masked();
    let e = error_term(&grid, &u).unwrap();
    // Linear graphs over a flat plane are minimal; only the Dirichlet-adjacent rows see a kink.
    let nt = grid.n_theta();
    for i in 2..grid.n_v() - 2 {
        for j in 0..nt {
            assert!(e.values[i * nt + j].abs() < 1e-13);
        }
    }
}

#[test]
fn model_nonlinearity_matches_its_formula() {
    let s = build_synthetic(Potential::Zero, 2.0, 4.0).unwrap();
    let grid = build_grid(&s, 2.0, 81, 8).unwrap();
    let u = GridFunction::from_fn(&grid, |v, th| 0.1 * v * v + 0.05 * th.cos());
    let spec = ModelNonlinearity::mixed(2.0, 0.5);
    let out = model_nonlinearity(&spec, &grid, &u);
    let eval = Nonlinearity::Model(spec).eval_slice(&grid, &u.values).unwrap();
    assert_eq!(out.values, eval);
    let r = 2.0 / (2.0 * std::f64::consts::PI);
    let nt = grid.n_theta();
    let i = 30;
    let (v, th) = (grid.v_nodes()[i], grid.theta_nodes()[3]);
    let exact = 2.0 * (0.1 * v * v + 0.05 * th.cos()).powi(2) + 0.5 * ((0.2 * v).powi(2) + (0.05 * th.sin()).powi(2) / (r * r));
    assert!((out.values[i * nt + 3] - exact).abs() < 1e-12);
    assert!(out.values[..nt].iter().all(|&x| x == 0.0));
}

#[test]
fn degenerate_graphs_report_the_failing_node() {
    let m = build_catenoid(6.0).unwrap();
    let grid = build_grid(&m, 2f64.sinh(), 41, 8).unwrap();
    // u ≡ −1 collapses the neck at v = 0 (row 20).
    let u = GridFunction::from_fn(&grid, |_, _| -1.0);
    match error_term(&grid, &u) {
        Err(Error::GraphBreakdown { i, .. }) => assert_eq!(i, 20),
        other => panic!("expected a breakdown, got {other:?}"),
    }
    assert!(graph_geometry(&grid, &u).is_err());
}

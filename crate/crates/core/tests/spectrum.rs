use ancient_mcf_core::geometry::{build_catenoid, build_synthetic, Potential};
use ancient_mcf_core::mesh::{build_grid, l2_inner, Grid};
use ancient_mcf_core::spectrum::tridiag::{bisect_eigenvalue, eigenvector, ql_eigen, residual, sturm_count};
use ancient_mcf_core::spectrum::{
    assemble_jacobi, compute_spectrum, group_and_select, harnack_report, inject, project, quotient_report, split_eigenvalues, ModeCount,
    SpectralData,
};
use ancient_mcf_core::Error;
use proptest::prelude::*;
use std::f64::consts::PI;

fn catenoid_spectrum(n_v: usize, count: ModeCount) -> (Grid, SpectralData) {
    let grid = build_grid(&build_catenoid(6.0).unwrap(), 3f64.sinh(), n_v, 8).unwrap();
    let sp = compute_spectrum(&assemble_jacobi(&grid), count).unwrap();
    (grid, sp)
}

proptest! {
    #[test]
    fn tridiagonal_solvers_agree(d in prop::collection::vec(-5.0f64..5.0, 2..30), e_seed in prop::collection::vec(0.1f64..2.0, 30)) {
        let n = d.len();
        let e = &e_seed[..n - 1];
        let (vals, vecs) = ql_eigen(&d, e).unwrap();
        for k in 0..n {
            prop_assert!((vals[k] - bisect_eigenvalue(&d, e, k)).abs() < 1e-9);
            let y = &vecs[k * n..(k + 1) * n];
            prop_assert!(residual(&d, e, vals[k], y) < 1e-9);
        }
        for w in vals.windows(2) {
            prop_assert!(w[0] <= w[1]);
        }
        let mid = 0.5 * (vals[0] + vals[n - 1]);
        prop_assert_eq!(sturm_count(&d, e, mid), vals.iter().filter(|&&x| x < mid).count());
        let v = eigenvector(&d, e, vals[0]);
        prop_assert!(residual(&d, e, vals[0], &v) < 1e-8);
    }
}

#[test]
fn flat_cylinder_spectrum_is_the_discrete_laplacian() {
    let r = 0.5;
    let model = build_synthetic(Potential::Zero, 2.0 * PI * r, 6.0).unwrap();
    let grid = build_grid(&model, 3.0, 61, 8).unwrap();
    let jp = assemble_jacobi(&grid);
    let n = 59;
    let h = grid.dv();
    for m in 0..=4 {
        for k in [0usize, 3, 20] {
            let s = ((k + 1) as f64 * PI / (2.0 * (n + 1) as f64)).sin();
            let exact = 4.0 / (h * h) * s * s + (m * m) as f64 / (r * r);
            let got = jp.block(m).eigenvalue(k);
            assert!((got - exact).abs() < 1e-9 * exact.max(1.0), "m={m} k={k}: {got} vs {exact}");
        }
    }
    let sp = compute_spectrum(&jp, ModeCount::Lowest(4)).unwrap();
    assert_eq!(sp.morse_index, 0);
    assert!(matches!(group_and_select(&sp, None), Err(Error::NoUnstableModes)));
    assert!(matches!(harnack_report(&sp, &grid, 1.0), Err(Error::NoUnstableModes)));
}

#[test]
fn modes_are_orthonormal_and_sorted() {
    let (grid, sp) = catenoid_spectrum(61, ModeCount::All);
    assert!(sp.complete && sp.len() == 59 * 8);
    assert!(sp.lambdas.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(sp.morse_index, 1);
    for a in [0usize, 1, 2, 7, 100] {
        let fa = sp.mode_function(&grid, a);
        for b in [0usize, 1, 2, 7, 100] {
            let ip = l2_inner(&grid, &fa, &sp.mode_function(&grid, b));
            let want = if a == b { 1.0 } else { 0.0 };
            assert!((ip - want).abs() < 1e-10, "({a},{b}) = {ip}");
        }
    }
}

#[test]
fn partial_and_full_spectra_agree() {
    let (_, full) = catenoid_spectrum(81, ModeCount::All);
    let (_, low) = catenoid_spectrum(81, ModeCount::Lowest(6));
    assert_eq!(low.len(), 6);
    for k in 0..6 {
        assert!((full.lambdas[k] - low.lambdas[k]).abs() < 1e-10 * (1.0 + full.lambdas[k].abs()));
    }
    let jp = assemble_jacobi(&build_grid(&build_catenoid(6.0).unwrap(), 3f64.sinh(), 81, 8).unwrap());
    assert!(compute_spectrum(&jp, ModeCount::Lowest(0)).is_err());
}

#[test]
fn projection_inverts_injection() {
    let (grid, sp) = catenoid_spectrum(61, ModeCount::All);
    let group = [0usize, 3, 5];
    let a = [0.7, -1.2, 0.05];
    let t = -1.5;
    let f = inject(&grid, &a, &sp, &group, t);
    let p = project(&grid, &f, &sp, &group);
    for (k, &idx) in group.iter().enumerate() {
        let want = a[k] * (-sp.lambdas[idx] * t).exp();
        assert!((p[k] - want).abs() < 1e-11 * want.abs().max(1.0));
    }
    assert!(project(&grid, &f, &sp, &[1])[0].abs() < 1e-11);
}

#[test]
fn log_profile_matches_the_eigenvector() {
    let (_, sp) = catenoid_spectrum(61, ModeCount::All);
    let prof = sp.log_profile(0);
    let r = sp.radial(0);
    for (i, x) in r.iter().enumerate() {
        let rebuilt = prof.radial_sign[i] * prof.radial_log[i].exp();
        assert!((rebuilt - x).abs() < 1e-10 * x.abs().max(1e-3));
    }
}

#[test]
fn two_level_rig_has_the_expected_splitting() {
    let model = build_synthetic(Potential::Sech2 { depth: 6.0, width: 1.0 }, 2.0 * PI * 0.4, 12.0).unwrap();
    let grid = build_grid(&model, 6.0, 241, 8).unwrap();
    let sp = compute_spectrum(&assemble_jacobi(&grid), ModeCount::Lowest(8)).unwrap();
    assert_eq!(sp.morse_index, 2);
    assert!((sp.lambdas[0] + 4.0).abs() < 5e-3 && (sp.lambdas[1] + 1.0).abs() < 5e-3);
    let split = group_and_select(&sp, Some(0.15)).unwrap();
    assert_eq!(split.levels(), 2);
    for l in 0..2 {
        let (lo, hi) = split.delta_interval(l);
        let d = split.deltas[l];
        assert!(lo < -d && -d < hi);
    }
    assert!(matches!(group_and_select(&sp, Some(0.5)), Err(Error::InvalidEpsilon { .. })));
}

#[test]
fn default_epsilon_respects_both_bounds() {
    let s = split_eigenvalues(&[-4.0, -1.0, 2.0], 2, None).unwrap();
    assert!(s.epsilon <= 1.0 / 6.0 + 1e-15);
    let single = split_eigenvalues(&[-0.56, 0.1], 1, None).unwrap();
    assert!(single.epsilon <= 0.56 / 6.0 + 1e-15);
    assert_eq!(single.groups, vec![vec![0]]);
    assert!(split_eigenvalues(&[1.0], 0, None).is_err());
    assert!(split_eigenvalues(&[-1.0], 1, Some(-0.1)).is_err());
}

#[test]
fn estimates_reject_bad_inputs() {
    let (grid, sp) = catenoid_spectrum(61, ModeCount::Lowest(1));
    let h = harnack_report(&sp, &grid, 1.0).unwrap();
    assert!(h.sup_gradient_log > 0.0 && h.collar_rows >= 1);
    assert!(h.sup_angular_component < 1e-6);
    assert!(matches!(quotient_report(&sp, &grid, &sp, &grid, 0.6), Err(Error::InvalidEpsilon { .. })));
    let q = quotient_report(&sp, &grid, &sp, &grid, 0.1).unwrap();
    assert!(q.entries[0].sup_ratio.is_finite());
    let other = build_grid(&build_catenoid(6.0).unwrap(), 3f64.sinh(), 71, 8).unwrap();
    let osp = compute_spectrum(&assemble_jacobi(&other), ModeCount::Lowest(1)).unwrap();
    assert!(matches!(quotient_report(&sp, &grid, &osp, &other, 0.1), Err(Error::InvalidComparison(_))));
}

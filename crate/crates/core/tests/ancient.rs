mod common;

use ancient_mcf_core::ancient::duhamel::{backward_mode, forward_mode, phi1, phi2, DuhamelConfig, LinearSolver};
use ancient_mcf_core::ancient::stepper::semi_implicit_forward;
use ancient_mcf_core::ancient::{
    construct_ancient, construct_ancient_from, level_from_field, pde_residual, random_start, AncientConfig, Problem,
};
use ancient_mcf_core::geometry::{build_catenoid, build_synthetic, Potential};
use ancient_mcf_core::mesh::{build_grid, Grid, SpaceTimeField, TimeMesh};
use ancient_mcf_core::nonlinear::{ModelNonlinearity, Nonlinearity};
use ancient_mcf_core::spectrum::{assemble_jacobi, compute_spectrum, group_and_select, ModeCount, ModeSplit, SpectralData};
use ancient_mcf_core::Error;
use common::{backward_closed_form, forward_closed_form};

fn small() -> (Grid, SpectralData, ModeSplit) {
    let grid = build_grid(&build_catenoid(6.0).unwrap(), 3f64.sinh(), 61, 8).unwrap();
    let sp = compute_spectrum(&assemble_jacobi(&grid), ModeCount::All).unwrap();
    let split = group_and_select(&sp, None).unwrap();
    (grid, sp, split)
}

#[test]
fn phi_functions_match_their_definitions() {
    for x in [-3.0f64, -0.4, 1e-6, 0.3, 2.0] {
        let p2 = if x.abs() < 1e-3 { 0.5 + x / 6.0 + x * x / 24.0 } else { (x.exp() - 1.0 - x) / (x * x) };
        assert!((phi1(x) - x.exp_m1() / x).abs() < 1e-14);
        assert!((phi2(x) - p2).abs() < 1e-9);
    }
    assert!((phi1(0.0) - 1.0).abs() < 1e-15 && (phi2(0.0) - 0.5).abs() < 1e-15);
}

#[test]
fn scalar_integrators_are_exact_for_linear_forcing() {
    let dt = 0.1;
    let n = 41;
    let t: Vec<f64> = (0..n).map(|k| -4.0 + k as f64 * dt).collect();
    let lam = 0.7;
    // u' = −λu + t from u(−4) = 0.
    let u = forward_mode(lam, dt, &t);
    let exact = |s: f64| (s / lam - 1.0 / (lam * lam)) - (-4.0 / lam - 1.0 / (lam * lam)) * (-lam * (s + 4.0)).exp();
    for k in 0..n {
        assert!((u[k] - exact(t[k])).abs() < 1e-12, "{} vs {}", u[k], exact(t[k]));
    }
    let ub = backward_mode(-lam, dt, &vec![1.0; n]);
    let exact_b = |s: f64| ((lam * s).exp() - 1.0) / lam;
    // c' = λc + 1, c(0) = 0 with the mesh ending at t = 0.
    for k in 0..n {
        assert!((ub[k] - exact_b(t[k])).abs() < 1e-12);
    }
}

#[test]
fn linear_solve_reproduces_single_mode_closed_forms() {
    let (grid, sp, _) = small();
    let mesh = TimeMesh::new(-10.0, 0.01).unwrap();
    let kappa = 1.0;
    for &(j, delta) in &[(0usize, 0.3), (0, 0.8), (3, 0.3)] {
        let cfg = DuhamelConfig { delta, mesh, n_modes: None, gap_tol: 1e-6 };
        let phi = sp.mode_function(&grid, j).values;
        let slices = mesh.times().iter().map(|t| phi.iter().map(|p| p * (kappa * t).exp()).collect()).collect();
        let f = SpaceTimeField::from_slices(mesh, grid.n_nodes(), slices);
        let u = LinearSolver::new(&grid, &sp, cfg).unwrap().solve(&f).unwrap();
        let lam = sp.lambdas[j];
        for n in (0..mesh.n_t).step_by(97) {
            let t = mesh.time(n);
            let c = if lam < -delta { backward_closed_form(lam, kappa, t) } else { forward_closed_form(lam, kappa, mesh.t_min, t) };
            let k = 30 * grid.n_theta();
            assert!((u.slice(n)[k] - c * phi[k]).abs() < 1e-4 * phi[k].abs().max(1e-3));
        }
    }
}

#[test]
fn resonant_weights_are_rejected() {
    let (grid, sp, _) = small();
    let mesh = TimeMesh::new(-10.0, 0.05).unwrap();
    let cfg = DuhamelConfig { delta: -sp.lambdas[0], mesh, n_modes: None, gap_tol: 1e-6 };
    assert!(matches!(LinearSolver::new(&grid, &sp, cfg), Err(Error::Resonance { .. })));
    let cfg = DuhamelConfig { delta: 0.0, mesh, n_modes: None, gap_tol: 1e-6 };
    assert!(LinearSolver::new(&grid, &sp, cfg).is_err());
}

#[test]
fn construction_is_a_fixed_point() {
    let (grid, sp, split) = small();
    let p = Problem::new(&grid, &sp, &split, Nonlinearity::Geometric, AncientConfig::default()).unwrap();
    let sol = construct_ancient(&p, &[1e-2]).unwrap();
    let level = &sol.levels[0];
    assert!(level.iterations >= 2 && level.ratios.iter().all(|&r| r < 0.5));
    let solver = LinearSolver::new(&grid, &sp, p.duhamel(1)).unwrap();
    let again = solver.solve(&p.nonlinear_field(&sol.u_total).unwrap()).unwrap();
    let defect = again.sub(&level.w).sup_abs() / level.w.sup_abs();
    assert!(defect < 1e-8, "fixed-point defect {defect}");
    assert!(sol.residual.relative_max < 1e-3);
    assert!((sol.recovered[0].recovered / 1e-2 - 1.0).abs() < 1e-2);

    let rebuilt = level_from_field(&p, 1, &[1e-2], level.u_level.clone()).unwrap();
    assert!(rebuilt.w.sub(&level.w).sup_abs() < 1e-15);
    let res = pde_residual(&p, &sol.u_total, split.deltas[0]).unwrap();
    assert_eq!(res.relative_max, sol.residual.relative_max);
}

#[test]
fn starting_iterate_does_not_change_the_limit() {
    let (grid, sp, split) = small();
    let p = Problem::new(&grid, &sp, &split, Nonlinearity::Geometric, AncientConfig::default()).unwrap();
    let a = construct_ancient(&p, &[5e-3]).unwrap();
    let start = random_start(&grid, p.mesh, split.deltas[0], 1e-4, 11);
    let b = construct_ancient_from(&p, &[5e-3], Some(&[start])).unwrap();
    assert!(a.u_total.sub(&b.u_total).sup_abs() < 1e-10);
}

#[test]
fn random_starts_are_seeded_and_vanish_on_the_boundary() {
    let (grid, _, _) = small();
    let mesh = TimeMesh::new(-2.0, 0.5).unwrap();
    let a = random_start(&grid, mesh, 0.8, 1e-3, 5);
    assert_eq!(a, random_start(&grid, mesh, 0.8, 1e-3, 5));
    assert_ne!(a, random_start(&grid, mesh, 0.8, 1e-3, 6));
    let nt = grid.n_theta();
    for s in a.slices() {
        assert!(s[..nt].iter().chain(&s[s.len() - nt..]).all(|&x| x == 0.0));
    }
}

#[test]
fn large_data_fails_to_contract() {
    let (grid, sp, split) = small();
    let p = Problem::new(&grid, &sp, &split, Nonlinearity::Geometric, AncientConfig::default()).unwrap();
    assert!(matches!(construct_ancient(&p, &[5.0]), Err(Error::NoContraction { level: 1, .. })));
    assert!(construct_ancient(&p, &[1e-2, 0.0]).is_err());
}

#[test]
fn problem_validates_the_time_mesh() {
    let (grid, sp, split) = small();
    let bad_t = AncientConfig { t_min: Some(-1.0), ..AncientConfig::default() };
    assert!(Problem::new(&grid, &sp, &split, Nonlinearity::Geometric, bad_t).is_err());
    let bad_dt = AncientConfig { dt: Some(1.0), ..AncientConfig::default() };
    assert!(Problem::new(&grid, &sp, &split, Nonlinearity::Geometric, bad_dt).is_err());
    let bad_tol = AncientConfig { picard_tol: 0.0, ..AncientConfig::default() };
    assert!(Problem::new(&grid, &sp, &split, Nonlinearity::Geometric, bad_tol).is_err());
}

#[test]
fn stepper_converges_to_the_linear_flow() {
    let model = build_synthetic(Potential::Sech2 { depth: 2.0, width: 1.0 }, 2.0, 8.0).unwrap();
    let grid = build_grid(&model, 4.0, 81, 8).unwrap();
    let sp = compute_spectrum(&assemble_jacobi(&grid), ModeCount::All).unwrap();
    let phi = sp.mode_function(&grid, 0).values;
    let lam = sp.lambdas[0];
    let zero = Nonlinearity::Model(ModelNonlinearity::mixed(0.0, 0.0));
    let mut errs = Vec::new();
    for k in [20usize, 40, 80] {
        let out = semi_implicit_forward(&grid, &zero, &phi, k, 1.0 / k as f64).unwrap();
        let g = (-lam).exp();
        errs.push(out.iter().zip(&phi).fold(0.0f64, |m, (a, b)| m.max((a - g * b).abs())));
    }
    let r1 = errs[0] / errs[1];
    let r2 = errs[1] / errs[2];
    assert!((r1 - 2.0).abs() < 0.3 && (r2 - 2.0).abs() < 0.3, "{errs:?}");
}

#[test]
fn sweeps_need_three_ascending_radii() {
    use ancient_mcf_core::ancient::sweep::{r_sweep, SweepSetup};
    use ancient_mcf_core::mesh::AngularScheme;
    let setup = SweepSetup {
        model: build_catenoid(6.0).unwrap(),
        dv: 0.05,
        n_theta: 8,
        scheme: AngularScheme::Spectral,
        modes: ModeCount::All,
        epsilon: None,
        nonlinearity: Nonlinearity::Geometric,
        cfg: AncientConfig::default(),
        compare_v: 1.0,
    };
    let (r1, r2, r3) = (2f64.sinh(), 2.5f64.sinh(), 3f64.sinh());
    assert!(r_sweep(&setup, &[r1, r2], &[1e-2]).is_err());
    assert!(r_sweep(&setup, &[r1, r3, r2], &[1e-2]).is_err());
    let (table, runs) = r_sweep(&setup, &[r1, r2, r3], &[1e-2]).unwrap();
    assert_eq!(runs.len(), 3);
    assert!(table.rows[0].diff_to_previous.is_none());
    assert!(table.rows.iter().all(|r| r.morse_index == 1));
    assert_eq!(table.factors.len(), 1);
}

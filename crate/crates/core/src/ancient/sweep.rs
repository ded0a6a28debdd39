//! Truncation-radius sweeps and empirical contraction radii.

use super::{construct_ancient, AncientConfig, AncientSolution, Problem};
use crate::error::{invalid, Result};
use crate::exec;
use crate::geometry::SurfaceModel;
use crate::mesh::{build_grid_with, AngularScheme, Grid, TimeMesh};
use crate::nonlinear::Nonlinearity;
use crate::spectrum::{assemble_jacobi, compute_spectrum, group_and_select, ModeCount, SpectralData};
use serde::Serialize;

/// Inputs shared by every radius of a sweep.
#[derive(Clone, Debug)]
pub struct SweepSetup {
    pub model: SurfaceModel,
    /// Radial spacing used on every grid.
    pub dv: f64,
    pub n_theta: usize,
    pub scheme: AngularScheme,
    pub modes: ModeCount,
    pub epsilon: Option<f64>,
    pub nonlinearity: Nonlinearity,
    pub cfg: AncientConfig,
    /// Chart half-width `v` of the comparison region.
    pub compare_v: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub radius: f64,
    pub lambda1: f64,
    pub morse_index: usize,
    pub iterations: usize,
    /// Sup-difference to the previous radius on the comparison region.
    pub diff_to_previous: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub t_min: f64,
    pub dt: f64,
    pub decreasing: bool,
    /// Ratios of consecutive differences.
    pub factors: Vec<f64>,
}

/// One fully built radius of a sweep.
pub struct SweepRun {
    pub grid: Grid,
    pub spectral: SpectralData,
    pub solution: AncientSolution,
}

fn n_v_for(setup: &SweepSetup, r: f64) -> usize {
    let v_r = setup.model.chart_radius(r);
    (2.0 * v_r / setup.dv).round() as usize + 1
}

/// Grid and spectrum at one radius.
pub fn spectrum_at(setup: &SweepSetup, r: f64) -> Result<(Grid, SpectralData)> {
    let grid = build_grid_with(&setup.model, r, n_v_for(setup, r), setup.n_theta, setup.scheme)?;
    let spectral = compute_spectrum(&assemble_jacobi(&grid), setup.modes)?;
    Ok((grid, spectral))
}

/// Constructions at every radius on a common time mesh, with consecutive
/// sup-differences over `|v| ≤ compare_v` and `t ≥ T_min + burn-in`.
pub fn r_sweep(setup: &SweepSetup, radii: &[f64], a: &[f64]) -> Result<(SweepTable, Vec<SweepRun>)> {
    if radii.len() < 3 {
        return Err(invalid(format!("a radius sweep needs at least 3 radii, got {}", radii.len())));
    }
    if radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("radii must be strictly ascending"));
    }
    if !(setup.compare_v < setup.model.chart_radius(radii[0])) {
        return Err(invalid("comparison region must lie inside the smallest truncation"));
    }
    let (g0, s0) = spectrum_at(setup, radii[0])?;
    let split0 = group_and_select(&s0, setup.epsilon)?;
    let p0 = Problem::new(&g0, &s0, &split0, setup.nonlinearity, setup.cfg)?;
    let mut cfg = setup.cfg;
    cfg.t_min = Some(p0.mesh.t_min);
    cfg.dt = Some(p0.mesh.dt);
    let burn = p0.burn_in();
    let mesh = p0.mesh;
    let runs: Vec<Result<SweepRun>> = exec::map_slice(radii, |&r| {
        let (grid, spectral) = spectrum_at(setup, r)?;
        let split = group_and_select(&spectral, setup.epsilon)?;
        let problem = Problem::new(&grid, &spectral, &split, setup.nonlinearity, cfg)?;
        let solution = construct_ancient(&problem, a)?;
        Ok(SweepRun { grid, spectral, solution })
    });
    let mut ok = Vec::with_capacity(runs.len());
    for r in runs {
        ok.push(r?);
    }
    let n0 = mesh.index_at_or_after(mesh.t_min + burn);
    let mut rows = Vec::new();
    for (k, run) in ok.iter().enumerate() {
        let diff = (k > 0).then(|| region_difference(&ok[k - 1], run, setup.compare_v, n0));
        rows.push(SweepRow {
            radius: run.grid.radius(),
            lambda1: run.spectral.lambdas[0],
            morse_index: run.spectral.morse_index,
            iterations: run.solution.levels.iter().map(|l| l.iterations).sum(),
            diff_to_previous: diff,
        });
    }
    let diffs: Vec<f64> = rows.iter().filter_map(|r| r.diff_to_previous).collect();
    let factors: Vec<f64> = diffs.windows(2).map(|w| if w[1] == 0.0 { f64::INFINITY } else { w[0] / w[1] }).collect();
    let decreasing = diffs.windows(2).all(|w| w[1] < w[0] || (w[0] == 0.0 && w[1] == 0.0));
    if !decreasing {
        log::warn!("radius sweep differences are not decreasing: {diffs:?}");
    }
    Ok((SweepTable { rows, t_min: mesh.t_min, dt: mesh.dt, decreasing, factors }, ok))
}

/// `sup |u_a − u_b|` over nodes of `a` with `|v| ≤ compare_v` and time index
/// `≥ n0`, with `u_b` interpolated linearly in `v`.
fn region_difference(a: &SweepRun, b: &SweepRun, compare_v: f64, n0: usize) -> f64 {
    let (ga, gb) = (&a.grid, &b.grid);
    let nt = ga.n_theta();
    let mesh: TimeMesh = a.solution.mesh();
    let mut sup = 0.0f64;
    for (i, &v) in ga.v_nodes().iter().enumerate() {
        if v.abs() > compare_v + 1e-12 {
            continue;
        }
        let x = (v + gb.v_radius()) / gb.dv();
        let i0 = (x.floor() as usize).min(gb.n_v() - 2);
        let f = x - i0 as f64;
        for n in n0..mesh.n_t {
            let (sa, sb) = (a.solution.u_total.slice(n), b.solution.u_total.slice(n));
            for j in 0..nt {
                let ub = (1.0 - f) * sb[i0 * nt + j] + f * sb[(i0 + 1) * nt + j];
                sup = sup.max((sa[i * nt + j] - ub).abs());
            }
        }
    }
    sup
}

/// Largest multiple `s ∈ [lo, hi]` of `direction` (bisection, `steps` halvings)
/// whose construction succeeds with every contraction ratio below `bound`.
pub fn contraction_radius(problem: &Problem, direction: &[f64], lo: f64, hi: f64, bound: f64, steps: usize) -> f64 {
    let good = |s: f64| {
        let a: Vec<f64> = direction.iter().map(|d| d * s).collect();
        match construct_ancient(problem, &a) {
            Ok(sol) => sol.levels.iter().all(|l| l.ratios.iter().all(|&r| r < bound)),
            Err(_) => false,
        }
    };
    let (mut lo, mut hi) = (lo, hi);
    if good(hi) {
        return hi;
    }
    for _ in 0..steps {
        let mid = 0.5 * (lo + hi);
        if good(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

//! Construction of ancient solutions: level-wise Picard iteration on the
//! Duhamel solver.

pub mod duhamel;
pub mod stepper;
pub mod sweep;

pub use duhamel::{solve_linear, DuhamelConfig, LinearSolver};

use crate::error::{invalid, Error, Result};
use crate::exec;
use crate::mesh::{discrete_norm, laplace_slice, Grid, SpaceTimeField, TimeMesh};
use crate::nonlinear::Nonlinearity;
use crate::spectrum::{inject, project_slice, ModeSplit, SpectralData};
use rand::{Rng, SeedableRng};
use serde::Serialize;

/// Tolerances and discretization of the time direction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AncientConfig {
    /// Default `−8/|λ'_L|`.
    pub t_min: Option<f64>,
    /// Default `0.025/|λ_1|`.
    pub dt: Option<f64>,
    pub n_modes: Option<usize>,
    pub picard_tol: f64,
    pub max_iter: usize,
    pub proj_tol: f64,
    pub coeff_tol: f64,
    pub residual_tol: f64,
    pub gap_tol: f64,
    /// Time slab of the weighted norm.
    pub window: f64,
}

impl Default for AncientConfig {
    fn default() -> Self {
        AncientConfig {
            t_min: None,
            dt: None,
            n_modes: None,
            picard_tol: 1e-10,
            max_iter: 60,
            proj_tol: 1e-9,
            coeff_tol: 1e-2,
            residual_tol: 1e-3,
            gap_tol: 1e-6,
            window: 1.0,
        }
    }
}

/// Everything a construction needs, with the time mesh resolved.
#[derive(Clone, Copy)]
pub struct Problem<'a> {
    pub grid: &'a Grid,
    pub spectral: &'a SpectralData,
    pub split: &'a ModeSplit,
    pub nonlinearity: Nonlinearity,
    pub cfg: AncientConfig,
    pub mesh: TimeMesh,
}

impl<'a> Problem<'a> {
    pub fn new(
        grid: &'a Grid,
        spectral: &'a SpectralData,
        split: &'a ModeSplit,
        nonlinearity: Nonlinearity,
        cfg: AncientConfig,
    ) -> Result<Self> {
        for (name, v) in [
            ("picard_tol", cfg.picard_tol),
            ("proj_tol", cfg.proj_tol),
            ("coeff_tol", cfg.coeff_tol),
            ("residual_tol", cfg.residual_tol),
            ("gap_tol", cfg.gap_tol),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid(format!("{name} must be positive, got {v}")));
            }
        }
        let lam1 = spectral.lambdas[0].abs();
        let slow = split.distinct.last().copied().unwrap_or(spectral.lambdas[0]).abs();
        let t_min = cfg.t_min.unwrap_or(-8.0 / slow);
        let dt = cfg.dt.unwrap_or(0.025 / lam1);
        if t_min > -5.0 / lam1 {
            return Err(invalid(format!("T_min = {t_min} must not exceed -5/|lambda_1| = {}", -5.0 / lam1)));
        }
        if dt > 0.1 / lam1 {
            return Err(invalid(format!("dt = {dt} exceeds 0.1/|lambda_1| = {}", 0.1 / lam1)));
        }
        if !(cfg.window > 0.0) {
            return Err(invalid("norm window must be positive"));
        }
        let mesh = TimeMesh::new(t_min, dt)?;
        Ok(Problem { grid, spectral, split, nonlinearity, cfg, mesh })
    }

    /// Width `2/|λ'_L|` of the excluded start-up window.
    pub fn burn_in(&self) -> f64 {
        2.0 / self.split.distinct.last().unwrap().abs()
    }

    pub fn duhamel(&self, level: usize) -> DuhamelConfig {
        DuhamelConfig {
            delta: self.split.deltas[level - 1],
            mesh: self.mesh,
            n_modes: self.cfg.n_modes,
            gap_tol: self.cfg.gap_tol,
        }
    }

    /// Weighted `X^δ` norm proxy (discrete C², window `cfg.window`).
    pub fn norm(&self, f: &SpaceTimeField, delta: f64) -> Result<f64> {
        discrete_norm(self.grid, f, 2, self.cfg.window.max(self.mesh.dt), delta)
    }

    /// Nonlinearity applied slice by slice; the earliest failing slice wins.
    pub fn nonlinear_field(&self, u: &SpaceTimeField) -> Result<SpaceTimeField> {
        let out = exec::map_range(u.n_t(), |n| self.nonlinearity.eval_slice(self.grid, u.slice(n)));
        let mut slices = Vec::with_capacity(out.len());
        for s in out {
            slices.push(s?);
        }
        Ok(SpaceTimeField::from_slices(u.mesh, u.n_nodes, slices))
    }

    /// `ι_J(a)` on the whole time mesh.
    pub fn inject_field(&self, a: &[f64], group: &[usize]) -> SpaceTimeField {
        let slices = exec::map_range(self.mesh.n_t, |n| inject(self.grid, a, self.spectral, group, self.mesh.time(n)).values);
        SpaceTimeField::from_slices(self.mesh, self.grid.n_nodes(), slices)
    }
}

/// Corrector and level function of one level.
#[derive(Clone, Debug)]
pub struct LevelSolution {
    /// 1-based level.
    pub level: usize,
    pub group: Vec<usize>,
    pub a: Vec<f64>,
    pub delta: f64,
    pub w: SpaceTimeField,
    pub u_level: SpaceTimeField,
    pub weighted_norm: f64,
    pub iterations: usize,
    pub ratios: Vec<f64>,
    /// `max |(w(·,0), φ_j)|` over `λ_j < −δ`.
    pub terminal_projection: f64,
}

/// Fixed point `w = S(E^{(l)}(w))` of one level.
pub fn picard_level(
    problem: &Problem,
    level: usize,
    a: &[f64],
    prior: Option<&SpaceTimeField>,
    start: Option<&SpaceTimeField>,
) -> Result<LevelSolution> {
    if level == 0 || level > problem.split.levels() {
        return Err(invalid(format!("level {level} outside 1..={}", problem.split.levels())));
    }
    if a.len() != problem.spectral.morse_index {
        return Err(invalid(format!(
            "coefficient vector has {} entries but the Morse index is {}",
            a.len(),
            problem.spectral.morse_index
        )));
    }
    let group = problem.split.groups[level - 1].clone();
    let a_level: Vec<f64> = group.iter().map(|&j| a[j]).collect();
    let cfg = problem.duhamel(level);
    let solver = LinearSolver::new(problem.grid, problem.spectral, cfg)?;
    let iota = problem.inject_field(&a_level, &group);
    let base = match prior {
        Some(p) => iota.add(p),
        None => iota.clone(),
    };
    let breakdown = |e: Error| match e {
        Error::GraphBreakdown { .. } | Error::InvalidInput(_) => {
            Error::NoContraction { level, reason: e.to_string() }
        }
        other => other,
    };
    let prior_forcing = match prior {
        Some(p) if p.sup_abs() > 0.0 => Some(problem.nonlinear_field(p).map_err(breakdown)?),
        _ => None,
    };
    let mut w = match start {
        Some(s) => s.clone(),
        None => SpaceTimeField::zeros(problem.mesh, problem.grid.n_nodes()),
    };
    let mut ratios = Vec::new();
    let mut prev_diff: Option<f64> = None;
    let mut above = 0;
    let mut iterations = 0;
    loop {
        if iterations >= problem.cfg.max_iter {
            return Err(Error::NoContraction {
                level,
                reason: format!("no convergence in {} iterations", problem.cfg.max_iter),
            });
        }
        let mut forcing = problem.nonlinear_field(&base.add(&w)).map_err(breakdown)?;
        if let Some(pf) = &prior_forcing {
            forcing = forcing.sub(pf);
        }
        let next = solver.solve(&forcing).map_err(breakdown)?;
        iterations += 1;
        let diff = problem.norm(&next.sub(&w), cfg.delta)?;
        w = next;
        if !diff.is_finite() {
            return Err(Error::NoContraction { level, reason: "iterates diverged".into() });
        }
        if diff < problem.cfg.picard_tol {
            if let Some(p) = prev_diff {
                if p > 0.0 {
                    ratios.push(diff / p);
                }
            }
            break;
        }
        if let Some(p) = prev_diff {
            let r = diff / p;
            ratios.push(r);
            above = if r >= 1.0 { above + 1 } else { 0 };
            if above >= 3 {
                return Err(Error::NoContraction {
                    level,
                    reason: format!("contraction ratio >= 1 for 3 consecutive iterations (last {r:.3})"),
                });
            }
        }
        prev_diff = Some(diff);
    }
    let weighted_norm = problem.norm(&w, cfg.delta)?;
    let terminal_projection = terminal_projection(problem, &w, cfg.delta);
    let u_level = iota.add(&w);
    Ok(LevelSolution { level, group, a: a_level, delta: cfg.delta, w, u_level, weighted_norm, iterations, ratios, terminal_projection })
}

/// `max |(w(·,0), φ_j)|` over retained `λ_j < −δ`.
fn terminal_projection(problem: &Problem, w: &SpaceTimeField, delta: f64) -> f64 {
    let last = w.slice(w.n_t() - 1);
    let unstable: Vec<usize> = (0..problem.spectral.len()).filter(|&j| problem.spectral.lambdas[j] < -delta).collect();
    project_slice(problem.grid, last, problem.spectral, &unstable).iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Rebuilds a level from a stored level function `u^{(l)}`; the corrector is
/// `u^{(l)} − ι(a)` and no iteration history is available.
pub fn level_from_field(problem: &Problem, level: usize, a: &[f64], u_level: SpaceTimeField) -> Result<LevelSolution> {
    if level == 0 || level > problem.split.levels() {
        return Err(invalid(format!("level {level} outside 1..={}", problem.split.levels())));
    }
    let group = problem.split.groups[level - 1].clone();
    let a_level: Vec<f64> = group.iter().map(|&j| a[j]).collect();
    let delta = problem.split.deltas[level - 1];
    let w = u_level.sub(&problem.inject_field(&a_level, &group));
    let weighted_norm = problem.norm(&w, delta)?;
    let terminal_projection = terminal_projection(problem, &w, delta);
    Ok(LevelSolution { level, group, a: a_level, delta, w, u_level, weighted_norm, iterations: 0, ratios: Vec::new(), terminal_projection })
}

#[derive(Clone, Debug, Serialize)]
pub struct RecoveredCoefficient {
    pub level: usize,
    pub mode: usize,
    pub a: f64,
    pub recovered: f64,
    pub t: f64,
}

/// Discrete PDE defect `(u^{n+1} − u^n)/dt − ½(N(u^n) + N(u^{n+1}))` with
/// `N(u) = L u + E(u)`, reported at the interval midpoints.
#[derive(Clone, Debug, Serialize)]
pub struct ResidualReport {
    pub times: Vec<f64>,
    pub sup: Vec<f64>,
    /// `sup |defect| / sup |D_t u|` per interval.
    pub relative: Vec<f64>,
    /// `sup_n e^{−δ t_n} sup |defect_n|`.
    pub weighted_max: f64,
    pub relative_max: f64,
}

pub fn pde_residual(problem: &Problem, u: &SpaceTimeField, delta: f64) -> Result<ResidualReport> {
    let grid = problem.grid;
    let rhs = exec::map_range(u.n_t(), |n| -> Result<Vec<f64>> {
        let s = u.slice(n);
        let mut r = problem.nonlinearity.eval_slice(grid, s)?;
        let lap = laplace_slice(grid, s);
        let nt = grid.n_theta();
        for i in 1..grid.n_v() - 1 {
            let w = grid.frame(i).potential;
            for j in 0..nt {
                let k = i * nt + j;
                r[k] += lap[k] + w * s[k];
            }
        }
        Ok(r)
    });
    let mut rhs_ok = Vec::with_capacity(rhs.len());
    for r in rhs {
        rhs_ok.push(r?);
    }
    let dt = u.mesh.dt;
    let nn = u.n_nodes;
    let (mut times, mut sup, mut relative) = (Vec::new(), Vec::new(), Vec::new());
    let mut weighted_max = 0.0f64;
    for n in 0..u.n_t().saturating_sub(1) {
        let (a, b) = (u.slice(n), u.slice(n + 1));
        let (mut s, mut d) = (0.0f64, 0.0f64);
        for k in 0..nn {
            let du = (b[k] - a[k]) / dt;
            s = s.max((du - 0.5 * (rhs_ok[n][k] + rhs_ok[n + 1][k])).abs());
            d = d.max(du.abs());
        }
        let t = 0.5 * (u.mesh.time(n) + u.mesh.time(n + 1));
        times.push(t);
        sup.push(s);
        relative.push(if s == 0.0 { 0.0 } else { s / d });
        weighted_max = weighted_max.max((-delta * t).exp() * s);
    }
    let relative_max = relative.iter().cloned().fold(0.0, f64::max);
    Ok(ResidualReport { times, sup, relative, weighted_max, relative_max })
}

/// `u = Σ_l u^{(l)}` with per-level data and checks.
#[derive(Clone, Debug)]
pub struct AncientSolution {
    pub a: Vec<f64>,
    pub levels: Vec<LevelSolution>,
    pub u_total: SpaceTimeField,
    pub pde_residual: f64,
    pub residual: ResidualReport,
    pub recovered: Vec<RecoveredCoefficient>,
}

impl AncientSolution {
    pub fn mesh(&self) -> TimeMesh {
        self.u_total.mesh
    }
}

pub fn construct_ancient(problem: &Problem, a: &[f64]) -> Result<AncientSolution> {
    construct_ancient_from(problem, a, None)
}

/// [`construct_ancient`] with an optional starting iterate for every level.
pub fn construct_ancient_from(problem: &Problem, a: &[f64], start: Option<&[SpaceTimeField]>) -> Result<AncientSolution> {
    if a.len() != problem.spectral.morse_index {
        return Err(invalid(format!(
            "coefficient vector has {} entries but the Morse index is {}",
            a.len(),
            problem.spectral.morse_index
        )));
    }
    let mut levels: Vec<LevelSolution> = Vec::new();
    let mut total: Option<SpaceTimeField> = None;
    for l in 1..=problem.split.levels() {
        let s = start.and_then(|s| s.get(l - 1));
        let lv = picard_level(problem, l, a, total.as_ref(), s)?;
        total = Some(match total {
            Some(t) => t.add(&lv.u_level),
            None => lv.u_level.clone(),
        });
        levels.push(lv);
    }
    finish_solution(problem, a, levels)
}

/// Sums the levels and evaluates the residual and coefficient recovery.
pub fn finish_solution(problem: &Problem, a: &[f64], levels: Vec<LevelSolution>) -> Result<AncientSolution> {
    let mut u_total = SpaceTimeField::zeros(problem.mesh, problem.grid.n_nodes());
    for lv in &levels {
        u_total = u_total.add(&lv.u_level);
    }
    let delta_l = *problem.split.deltas.last().unwrap();
    let residual = pde_residual(problem, &u_total, delta_l)?;
    let t_rec = problem.mesh.t_min + problem.burn_in();
    let n_rec = problem.mesh.index_at_or_after(t_rec);
    let t = problem.mesh.time(n_rec);
    let mut recovered = Vec::new();
    for lv in &levels {
        let proj = project_slice(problem.grid, lv.u_level.slice(n_rec), problem.spectral, &lv.group);
        for ((&j, &aj), p) in lv.group.iter().zip(&lv.a).zip(proj) {
            recovered.push(RecoveredCoefficient {
                level: lv.level,
                mode: j + 1,
                a: aj,
                recovered: (problem.spectral.lambdas[j] * t).exp() * p,
                t,
            });
        }
    }
    Ok(AncientSolution { a: a.to_vec(), pde_residual: residual.weighted_max, residual, levels, u_total, recovered })
}

/// Small random space-time field `amplitude · e^{δ t} · ξ`, with `ξ` uniform in
/// `[−1, 1]` at interior nodes and zero on Dirichlet rows.
pub fn random_start(grid: &Grid, mesh: TimeMesh, delta: f64, amplitude: f64, seed: u64) -> SpaceTimeField {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut f = SpaceTimeField::zeros(mesh, grid.n_nodes());
    let nt = grid.n_theta();
    for n in 0..mesh.n_t {
        let s = amplitude * (delta * mesh.time(n)).exp();
        let sl = f.slice_mut(n);
        for i in 1..grid.n_v() - 1 {
            for j in 0..nt {
                sl[i * nt + j] = s * rng.gen_range(-1.0..=1.0);
            }
        }
    }
    f
}

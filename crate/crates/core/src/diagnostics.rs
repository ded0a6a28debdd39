//! Post-processing of constructed flows: decay rates, mean convexity, the
//! area identity, total curvature and the distance to the leading term.

use crate::ancient::{construct_ancient, AncientSolution, Problem, RecoveredCoefficient};
use crate::error::{Error, Result};
use crate::exec;
use crate::mesh::{partials, Grid, SpaceTimeField};
use crate::nonlinear::{graph_geometry_slice, node_geometry, Jet};
use serde::Serialize;

/// Sup-norms below this are treated as underflowed in decay fits.
pub const UNDERFLOW: f64 = 1e-14;
/// Minimum number of time samples in a decay fit.
pub const MIN_FIT_SAMPLES: usize = 20;
/// Nodes with `φ₁ < REGION_FLOOR · max φ₁` are left out of pointwise reports.
pub const REGION_FLOOR: f64 = 1e-8;

/// Per-time integrals and sups of a flow.
#[derive(Clone, Debug, Serialize)]
pub struct SeriesRow {
    pub t: f64,
    pub sup_u: f64,
    /// Sup of the total corrector `u − Σ ι(a)`.
    pub sup_w: f64,
    pub area: f64,
    /// `∫_{T_min}^t ∫ Ĥ² dÂ ds` (trapezoid in time).
    pub hsq_cum: f64,
    pub total_curv: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelDecay {
    pub level: usize,
    /// `None` when the level function vanishes identically.
    pub slope_u: Option<f64>,
    pub slope_w: Option<f64>,
    pub samples_u: usize,
    pub samples_w: usize,
    pub window: (f64, f64),
}

#[derive(Clone, Debug, Serialize)]
pub struct Convexity {
    /// `min ∂_t u` (forward time quotient) over the reported mesh.
    pub min_dt_u: f64,
    /// `min (−Ĥ)` over the reported mesh.
    pub min_neg_h: f64,
    /// `−Ĥ` at `t = 0`.
    pub neg_h_final: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MassDrop {
    pub t0: f64,
    pub t1: f64,
    pub area0: f64,
    pub area1: f64,
    pub hsq_integral: f64,
    /// `(area0 − area1 − ∫∫Ĥ²) / ∫∫Ĥ²`, 0 when the integral vanishes.
    pub mismatch: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FlowReport {
    pub decay_slopes: Vec<LevelDecay>,
    pub convexity_margin: Convexity,
    pub mass_drop: MassDrop,
    pub total_curvature_series: Vec<(f64, f64)>,
    pub leading_order_gap: Option<f64>,
    pub residual_relative_max: f64,
    pub residual_weighted_max: f64,
    pub recovered: Vec<RecoveredCoefficient>,
}

/// Slope of the unweighted least-squares line through `(x, y)`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    sxy / sxx
}

/// Default fit window `[T_min + burn-in, −1/|λ₁|]`.
pub fn default_fit_window(problem: &Problem) -> (f64, f64) {
    (problem.mesh.t_min + problem.burn_in(), -1.0 / problem.spectral.lambdas[0].abs())
}

/// Time nodes inside `[t_lo, t_hi]`.
fn node_range(problem: &Problem, t_lo: f64, t_hi: f64) -> Result<(usize, usize)> {
    let mesh = problem.mesh;
    if !(t_lo < t_hi) || t_lo < mesh.t_min - 1e-12 || t_hi > 1e-12 {
        return Err(Error::InvalidRange(format!("fit window [{t_lo}, {t_hi}] is not inside [{}, 0]", mesh.t_min)));
    }
    let lo = mesh.index_at_or_after(t_lo);
    let mut hi = mesh.index_at_or_after(t_hi);
    if mesh.time(hi) > t_hi + 1e-12 && hi > 0 {
        hi -= 1;
    }
    Ok((lo, hi))
}

/// Fitted `d/dt log sup(·)` over the time nodes `lo..=hi`; samples below
/// [`UNDERFLOW`] are dropped.
fn fit_slope(problem: &Problem, sups: &[f64], lo: usize, hi: usize, what: &str) -> Result<(Option<f64>, usize)> {
    if sups.iter().all(|&s| s == 0.0) {
        return Ok((None, 0));
    }
    let (mut x, mut y) = (Vec::new(), Vec::new());
    let mut dropped = 0;
    for n in lo..=hi {
        if sups[n] < UNDERFLOW {
            dropped += 1;
            continue;
        }
        x.push(problem.mesh.time(n));
        y.push(sups[n].ln());
    }
    if dropped > 0 {
        log::warn!("{what}: {dropped} underflowed samples dropped from the fit range");
    }
    if x.len() < MIN_FIT_SAMPLES {
        return Err(Error::InvalidRange(format!(
            "{what}: {} samples in the fit window, need at least {MIN_FIT_SAMPLES}",
            x.len()
        )));
    }
    Ok((Some(ls_slope(&x, &y)), x.len()))
}

pub fn decay_fit(problem: &Problem, sol: &AncientSolution) -> Result<Vec<LevelDecay>> {
    let (lo, hi) = default_fit_window(problem);
    decay_fit_over(problem, sol, lo, hi)
}

/// Decay slopes over a given time window.
pub fn decay_fit_over(problem: &Problem, sol: &AncientSolution, t_lo: f64, t_hi: f64) -> Result<Vec<LevelDecay>> {
    let (lo, hi) = node_range(problem, t_lo, t_hi)?;
    let window = (problem.mesh.time(lo), problem.mesh.time(hi));
    let mut out = Vec::new();
    for lv in &sol.levels {
        let (slope_u, samples_u) = fit_slope(problem, &lv.u_level.slice_sups(), lo, hi, "level function")?;
        let (slope_w, samples_w) = fit_slope(problem, &lv.w.slice_sups(), lo, hi, "corrector")?;
        out.push(LevelDecay { level: lv.level, slope_u, slope_w, samples_u, samples_w, window });
    }
    Ok(out)
}

/// Node mask of the reported region: interior rows with `φ₁ ≥ REGION_FLOOR · max φ₁`.
pub fn reported_nodes(problem: &Problem) -> Vec<bool> {
    let grid = problem.grid;
    let phi = problem.spectral.mode_function(grid, 0).values;
    let max = phi.iter().fold(0.0f64, |m, &x| m.max(x));
    let nt = grid.n_theta();
    (0..grid.n_nodes())
        .map(|k| !grid.is_dirichlet_row(k / nt) && phi[k] >= REGION_FLOOR * max)
        .collect()
}

pub fn mean_convexity(problem: &Problem, sol: &AncientSolution) -> Result<Convexity> {
    let grid = problem.grid;
    let u = &sol.u_total;
    let mesh = problem.mesh;
    let mask = reported_nodes(problem);
    let n0 = mesh.index_at_or_after(mesh.t_min + problem.burn_in());
    let n_t = u.n_t();
    let per_slice = exec::map_range(n_t - n0, |k| -> Result<(f64, f64, Vec<f64>)> {
        let n = n0 + k;
        let geo = graph_geometry_slice(grid, u.slice(n))?;
        let neg_h: Vec<f64> = geo.nodes.iter().map(|g| -g.mean_curvature).collect();
        let mut min_h = f64::INFINITY;
        let mut min_dt = f64::INFINITY;
        for (idx, &m) in mask.iter().enumerate() {
            if !m {
                continue;
            }
            min_h = min_h.min(neg_h[idx]);
            if n + 1 < n_t {
                min_dt = min_dt.min((u.slice(n + 1)[idx] - u.slice(n)[idx]) / mesh.dt);
            }
        }
        Ok((min_dt, min_h, neg_h))
    });
    let (mut min_dt_u, mut min_neg_h) = (f64::INFINITY, f64::INFINITY);
    let mut neg_h_final = Vec::new();
    for r in per_slice {
        let (d, h, f) = r?;
        min_dt_u = min_dt_u.min(d);
        min_neg_h = min_neg_h.min(h);
        neg_h_final = f;
    }
    Ok(Convexity { min_dt_u, min_neg_h, neg_h_final })
}

/// `(∫ (√det ĝ − √det g), ∫ Ĥ² dÂ, ∫ |ĥ|^n dÂ)` on one slice.
fn slice_integrals(grid: &Grid, u: &[f64]) -> Result<(f64, f64, f64)> {
    let p = partials(grid, u);
    let nt = grid.n_theta();
    let n = grid.model().dimension() as f64;
    let area_w = grid.dv() * grid.dtheta();
    let (mut excess, mut hsq, mut curv) = (0.0, 0.0, 0.0);
    for i in 0..grid.n_v() {
        let fr = grid.frame(i);
        let end = if grid.is_dirichlet_row(i) { 0.5 } else { 1.0 };
        let (mut re, mut rh, mut rc) = (0.0, 0.0, 0.0);
        for j in 0..nt {
            let k = i * nt + j;
            let mut jet = Jet::from_partials(&p, k);
            if grid.is_dirichlet_row(i) {
                jet.d2u = [[0.0; 2]; 2];
            }
            let hs = jet.hessian(fr);
            let g = node_geometry(fr, &jet, Some(&hs)).map_err(|reason| Error::GraphBreakdown { i, j, reason })?;
            let da = fr.sqrt_det + g.area_excess;
            re += g.area_excess;
            if !grid.is_dirichlet_row(i) {
                rh += g.mean_curvature * g.mean_curvature * da;
            }
            rc += g.second_form_sq.max(0.0).powf(0.5 * n) * da;
        }
        excess += end * area_w * re;
        hsq += end * area_w * rh;
        curv += end * area_w * rc;
    }
    Ok((excess, hsq, curv))
}

fn base_area(grid: &Grid) -> f64 {
    (0..grid.n_v()).map(|i| grid.weight(i)).sum::<f64>() * grid.n_theta() as f64
}

/// Per-slice series of the whole flow.
pub fn flow_series(problem: &Problem, sol: &AncientSolution) -> Result<Vec<SeriesRow>> {
    let grid = problem.grid;
    let u = &sol.u_total;
    let mut corrector = SpaceTimeField::zeros(problem.mesh, grid.n_nodes());
    for lv in &sol.levels {
        corrector = corrector.add(&lv.w);
    }
    let ints = exec::map_range(u.n_t(), |n| slice_integrals(grid, u.slice(n)));
    let a0 = base_area(grid);
    let sup_u = u.slice_sups();
    let sup_w = corrector.slice_sups();
    let mut rows = Vec::with_capacity(ints.len());
    let mut cum = 0.0;
    let mut prev_h: Option<f64> = None;
    for (n, r) in ints.into_iter().enumerate() {
        let (excess, hsq, curv) = r?;
        if let Some(p) = prev_h {
            cum += 0.5 * problem.mesh.dt * (p + hsq);
        }
        prev_h = Some(hsq);
        rows.push(SeriesRow {
            t: problem.mesh.time(n),
            sup_u: sup_u[n],
            sup_w: sup_w[n],
            area: a0 + excess,
            hsq_cum: cum,
            total_curv: curv,
        });
    }
    Ok(rows)
}

/// The area identity between the mesh nodes at or after `t0` and `t1`.
pub fn mass_drop(problem: &Problem, sol: &AncientSolution, t0: f64, t1: f64) -> Result<MassDrop> {
    if !(t0 < t1) {
        return Err(Error::InvalidRange(format!("t0 = {t0} must be below t1 = {t1}")));
    }
    let mesh = problem.mesh;
    let start = mesh.t_min + problem.burn_in();
    if t0 < start - 1e-12 || t1 > 1e-12 {
        return Err(Error::InvalidRange(format!("[{t0}, {t1}] must lie inside [{start}, 0]")));
    }
    let (n0, n1) = (mesh.index_at_or_after(t0), mesh.index_at_or_after(t1));
    if n0 >= n1 {
        return Err(Error::InvalidRange(format!("[{t0}, {t1}] contains no time step")));
    }
    let grid = problem.grid;
    let ints = exec::map_range(n1 - n0 + 1, |k| slice_integrals(grid, sol.u_total.slice(n0 + k)));
    let mut vals = Vec::with_capacity(ints.len());
    for r in ints {
        vals.push(r?);
    }
    let mut hsq_integral = 0.0;
    for w in vals.windows(2) {
        hsq_integral += 0.5 * mesh.dt * (w[0].1 + w[1].1);
    }
    let a0 = base_area(grid);
    let (e0, e1) = (vals[0].0, vals[vals.len() - 1].0);
    let mismatch = if hsq_integral == 0.0 { 0.0 } else { ((e0 - e1) - hsq_integral) / hsq_integral };
    Ok(MassDrop { t0: mesh.time(n0), t1: mesh.time(n1), area0: a0 + e0, area1: a0 + e1, hsq_integral, mismatch })
}

/// `(t, ∫|Â|^n dÂ)` at every time node.
pub fn flow_total_curvature(problem: &Problem, sol: &AncientSolution) -> Result<Vec<(f64, f64)>> {
    let grid = problem.grid;
    let ints = exec::map_range(sol.u_total.n_t(), |n| slice_integrals(grid, sol.u_total.slice(n)));
    let mut out = Vec::with_capacity(ints.len());
    for (n, r) in ints.into_iter().enumerate() {
        out.push((problem.mesh.time(n), r?.2));
    }
    Ok(out)
}

/// `sup |u − a₁e^{−λ₁t}φ₁| / (a₁² e^{−2λ₁t} φ₁)` over the reported mesh (burn-in
/// excluded). `None` when `a₁ = 0`.
pub fn leading_order_gap(problem: &Problem, sol: &AncientSolution) -> Option<f64> {
    let a1 = *sol.a.first()?;
    if a1 == 0.0 {
        return None;
    }
    let grid = problem.grid;
    let lam = problem.spectral.lambdas[0];
    let phi = problem.spectral.mode_function(grid, 0).values;
    let mask = reported_nodes(problem);
    let mesh = problem.mesh;
    let n0 = mesh.index_at_or_after(mesh.t_min + problem.burn_in());
    let sups = exec::map_range(mesh.n_t - n0, |k| {
        let n = n0 + k;
        let t = mesh.time(n);
        let e1 = (-lam * t).exp();
        let s = sol.u_total.slice(n);
        let mut best = 0.0f64;
        for (idx, &m) in mask.iter().enumerate() {
            if m {
                let gap = (s[idx] - a1 * e1 * phi[idx]).abs() / (a1 * a1 * e1 * e1 * phi[idx]);
                best = best.max(gap);
            }
        }
        best
    });
    Some(sups.into_iter().fold(0.0, f64::max))
}

pub fn flow_report(problem: &Problem, sol: &AncientSolution) -> Result<FlowReport> {
    let t0 = problem.mesh.t_min + problem.burn_in();
    Ok(FlowReport {
        decay_slopes: decay_fit(problem, sol)?,
        convexity_margin: mean_convexity(problem, sol)?,
        mass_drop: mass_drop(problem, sol, t0, 0.0)?,
        total_curvature_series: flow_total_curvature(problem, sol)?,
        leading_order_gap: leading_order_gap(problem, sol),
        residual_relative_max: sol.residual.relative_max,
        residual_weighted_max: sol.residual.weighted_max,
        recovered: sol.recovered.clone(),
    })
}

/// Largest `a₁ ∈ [lo, hi]` (bisection, `steps` halvings) for which the flow
/// with `a = (a₁, 0, …, 0)` has both convexity margins positive.
pub fn convexity_threshold(problem: &Problem, lo: f64, hi: f64, steps: usize) -> f64 {
    let good = |a1: f64| {
        let mut a = vec![0.0; problem.spectral.morse_index];
        a[0] = a1;
        construct_ancient(problem, &a)
            .and_then(|sol| mean_convexity(problem, &sol))
            .map(|c| c.min_dt_u > 0.0 && c.min_neg_h > 0.0)
            .unwrap_or(false)
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

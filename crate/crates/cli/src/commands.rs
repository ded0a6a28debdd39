//! Subcommand implementations.

use crate::config::{parse_config, RunConfig, StartSpec};
use ancient_mcf_core::ancient::sweep::{contraction_radius, r_sweep, SweepSetup, SweepTable};
use ancient_mcf_core::ancient::{
    construct_ancient_from, finish_solution, level_from_field, pde_residual, random_start, AncientSolution, Problem,
};
use ancient_mcf_core::diagnostics::{
    convexity_threshold, decay_fit_over, default_fit_window, flow_series, flow_total_curvature, leading_order_gap,
    mass_drop, mean_convexity, FlowReport,
};
use ancient_mcf_core::geometry::SurfaceModel;
use ancient_mcf_core::io::{self, SpectrumRow};
use ancient_mcf_core::mesh::{build_grid_with, Grid, SpaceTimeField};
use ancient_mcf_core::spectrum::{
    assemble_jacobi, compute_spectrum, group_and_select, harnack_report, quotient_report, ModeSplit, SpectralData,
};
use ancient_mcf_core::Error;
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NO_UNSTABLE: i32 = 2;
pub const EXIT_NO_CONTRACTION: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_NO_INPUT: i32 = 66;
pub const EXIT_SOFTWARE: i32 = 70;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0}")]
    Usage(String),
    #[error("missing input {0}")]
    Missing(PathBuf),
    #[error("verification failed: {0}")]
    Verify(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => EXIT_USAGE,
            CliError::Missing(_) => EXIT_NO_INPUT,
            CliError::Verify(_) => EXIT_VERIFY,
            CliError::Core(e) => match e {
                Error::NoUnstableModes => EXIT_NO_UNSTABLE,
                Error::NoContraction { .. } => EXIT_NO_CONTRACTION,
                Error::InvalidParameter(_)
                | Error::InvalidEpsilon { .. }
                | Error::InvalidComparison(_)
                | Error::InvalidRange(_)
                | Error::Parse(_) => EXIT_USAGE,
                Error::Io(io) if io.kind() == std::io::ErrorKind::NotFound => EXIT_NO_INPUT,
                _ => EXIT_SOFTWARE,
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn load_config(path: &Path) -> CliResult<RunConfig> {
    let text = fs::read_to_string(path).map_err(|_| CliError::Missing(path.to_path_buf()))?;
    Ok(parse_config(&text)?)
}

/// Model, grid and spectrum of a configuration.
pub struct Setup {
    pub model: SurfaceModel,
    pub grid: Grid,
    pub spectral: SpectralData,
}

pub fn setup(cfg: &RunConfig) -> CliResult<Setup> {
    let model = cfg.model.build()?;
    let grid = build_grid_with(&model, cfg.radius, cfg.n_v, cfg.n_theta, cfg.scheme)?;
    let spectral = compute_spectrum(&assemble_jacobi(&grid), cfg.modes)?;
    Ok(Setup { model, grid, spectral })
}

fn coefficients(cfg: &RunConfig, spectral: &SpectralData) -> CliResult<Vec<f64>> {
    match &cfg.a {
        Some(a) if a.len() != spectral.morse_index => Err(CliError::Usage(format!(
            "[ancient] a has {} entries but the computed Morse index is {}",
            a.len(),
            spectral.morse_index
        ))),
        Some(a) => Ok(a.clone()),
        None => {
            let mut a = vec![0.0; spectral.morse_index];
            if let Some(x) = a.first_mut() {
                *x = 1e-2;
            }
            Ok(a)
        }
    }
}

fn spectrum_rows(spectral: &SpectralData) -> Vec<SpectrumRow> {
    spectral
        .modes
        .iter()
        .enumerate()
        .map(|(i, md)| SpectrumRow { radius: spectral.radius, i: i + 1, lambda: md.lambda, block_m: md.m })
        .collect()
}

fn prepare_out(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Core(e.into()))
}

/// A reference grid `n` cells wider on each side, on the same spacing.
fn reference_grid(cfg: &RunConfig, s: &Setup) -> CliResult<Grid> {
    let dv = s.grid.dv();
    let v_r = s.grid.v_radius();
    let v_ref = match cfg.reference_radius {
        Some(r) => s.model.chart_radius(r),
        None => (v_r + 2.0).min(s.model.v_max()),
    };
    let cells = ((v_ref - v_r) / dv + 1e-9).floor().max(0.0) as usize;
    let v_ref = v_r + cells as f64 * dv;
    let r_ref = s.model.intrinsic_radius(v_ref, 0.0);
    Ok(build_grid_with(&s.model, r_ref, s.grid.n_v() + 2 * cells, cfg.n_theta, cfg.scheme)?)
}

#[derive(Serialize)]
struct IndexReport {
    radius: f64,
    morse_index: usize,
    kernel_dim: usize,
    kernel_tol: f64,
    retained: usize,
    complete: bool,
    negative: Vec<f64>,
}

pub fn cmd_spectrum(cfg: &RunConfig, out: &Path) -> CliResult<()> {
    let s = setup(cfg)?;
    prepare_out(out)?;
    let sp = &s.spectral;
    io::write_spectrum(&out.join("spectrum.csv"), &spectrum_rows(sp), &cfg.hash)?;
    let index = IndexReport {
        radius: sp.radius,
        morse_index: sp.morse_index,
        kernel_dim: sp.kernel_dim,
        kernel_tol: sp.kernel_tol,
        retained: sp.len(),
        complete: sp.complete,
        negative: sp.lambdas[..sp.morse_index.min(sp.len())].to_vec(),
    };
    io::write_json(&out.join("index.json"), &index, &cfg.hash)?;
    if sp.morse_index == 0 {
        return Err(Error::NoUnstableModes.into());
    }
    for i in 0..sp.morse_index.min(sp.len()) {
        io::write_grid_function(&out.join(format!("mode_{}.csv", i + 1)), &s.grid, &sp.mode_function(&s.grid, i), &cfg.hash)?;
    }
    let harnack = harnack_report(sp, &s.grid, cfg.harnack_collar)?;
    io::write_json(&out.join("harnack.json"), &harnack, &cfg.hash)?;
    let ref_grid = reference_grid(cfg, &s)?;
    let reference = compute_spectrum(&assemble_jacobi(&ref_grid), ancient_mcf_core::spectrum::ModeCount::Lowest(1))?;
    let quotient = quotient_report(sp, &s.grid, &reference, &ref_grid, cfg.quotient_epsilon)?;
    io::write_json(&out.join("quotient.json"), &quotient, &cfg.hash)?;
    log::info!("Morse index {} with lambda_1 = {:.6}", sp.morse_index, sp.lambdas[0]);
    Ok(())
}

fn problem<'a>(cfg: &RunConfig, s: &'a Setup, split: &'a ModeSplit) -> CliResult<Problem<'a>> {
    Ok(Problem::new(&s.grid, &s.spectral, split, cfg.nonlinearity, cfg.ancient)?)
}

#[derive(Serialize)]
struct LevelSummary {
    level: usize,
    modes: Vec<usize>,
    delta: f64,
    iterations: usize,
    ratios: Vec<f64>,
    weighted_norm: f64,
    terminal_projection: f64,
}

#[derive(Serialize)]
struct ConstructSummary<'a> {
    a: &'a [f64],
    morse_index: usize,
    lambdas: Vec<f64>,
    epsilon: f64,
    deltas: &'a [f64],
    t_min: f64,
    dt: f64,
    n_t: usize,
    levels: Vec<LevelSummary>,
    residual_relative_max: f64,
    residual_weighted_max: f64,
    recovered: &'a [ancient_mcf_core::ancient::RecoveredCoefficient],
}

pub fn cmd_construct(cfg: &RunConfig, out: &Path) -> CliResult<()> {
    let s = setup(cfg)?;
    let split = group_and_select(&s.spectral, cfg.epsilon)?;
    let p = problem(cfg, &s, &split)?;
    let a = coefficients(cfg, &s.spectral)?;
    let starts: Option<Vec<SpaceTimeField>> = match cfg.start {
        StartSpec::Zero => None,
        StartSpec::Random { amplitude } => Some(
            split
                .deltas
                .iter()
                .enumerate()
                .map(|(l, &d)| random_start(&s.grid, p.mesh, d, amplitude, cfg.seed.wrapping_add(l as u64)))
                .collect(),
        ),
    };
    let sol = construct_ancient_from(&p, &a, starts.as_deref())?;
    if sol.residual.relative_max > cfg.ancient.residual_tol {
        log::warn!(
            "relative PDE residual {:.3e} exceeds residual_tol {:.1e}",
            sol.residual.relative_max,
            cfg.ancient.residual_tol
        );
    }
    prepare_out(out)?;
    io::write_atomic(&out.join("config.ini"), cfg.source.as_bytes())?;
    io::write_field(&out.join("solution.csv"), &s.grid, &sol.u_total, &cfg.hash)?;
    for lv in &sol.levels {
        io::write_field(&out.join(format!("level_{}.csv", lv.level)), &s.grid, &lv.u_level, &cfg.hash)?;
    }
    io::write_levels(&out.join("levels.csv"), &sol, &cfg.hash)?;
    io::write_residual(&out.join("residual.csv"), &sol.residual, &cfg.hash)?;
    io::write_spectrum(&out.join("spectrum.csv"), &spectrum_rows(&s.spectral), &cfg.hash)?;
    let summary = ConstructSummary {
        a: &a,
        morse_index: s.spectral.morse_index,
        lambdas: s.spectral.lambdas[..s.spectral.morse_index].to_vec(),
        epsilon: split.epsilon,
        deltas: &split.deltas,
        t_min: p.mesh.t_min,
        dt: p.mesh.dt,
        n_t: p.mesh.n_t,
        levels: sol
            .levels
            .iter()
            .map(|lv| LevelSummary {
                level: lv.level,
                modes: lv.group.iter().map(|j| j + 1).collect(),
                delta: lv.delta,
                iterations: lv.iterations,
                ratios: lv.ratios.clone(),
                weighted_norm: lv.weighted_norm,
                terminal_projection: lv.terminal_projection,
            })
            .collect(),
        residual_relative_max: sol.residual.relative_max,
        residual_weighted_max: sol.residual.weighted_max,
        recovered: &sol.recovered,
    };
    io::write_json(&out.join("construct.json"), &summary, &cfg.hash)?;
    log::info!(
        "constructed {} level(s); relative residual {:.3e}",
        sol.levels.len(),
        sol.residual.relative_max
    );
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub bound: f64,
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    checks: &'a [Check],
    passed: bool,
    flow: &'a FlowReport,
}

fn require(dir: &Path, name: &str) -> CliResult<PathBuf> {
    let p = dir.join(name);
    if p.is_file() {
        Ok(p)
    } else {
        Err(CliError::Missing(p))
    }
}

fn read_checked(path: &Path, grid: &Grid, p: &Problem, hash: &str) -> CliResult<SpaceTimeField> {
    match io::header_hash(path)? {
        Some(h) if h == hash => {}
        other => {
            return Err(CliError::Verify(format!(
                "{} carries config hash {:?}, expected {hash}",
                path.display(),
                other.unwrap_or_default()
            )))
        }
    }
    io::read_field(path, grid, p.mesh).map_err(|e| match e {
        Error::InvalidInput(m) => CliError::Verify(m),
        other => other.into(),
    })
}

/// Reloads a run directory, recomputes the diagnostics and checks them.
pub fn cmd_verify(run_dir: &Path) -> CliResult<Vec<Check>> {
    let cfg_path = require(run_dir, "config.ini")?;
    let solution_path = require(run_dir, "solution.csv")?;
    let cfg = load_config(&cfg_path)?;
    let s = setup(&cfg)?;
    let split = group_and_select(&s.spectral, cfg.epsilon)?;
    let p = problem(&cfg, &s, &split)?;
    let a = coefficients(&cfg, &s.spectral)?;
    let mut levels = Vec::new();
    for l in 1..=split.levels() {
        let path = require(run_dir, &format!("level_{l}.csv"))?;
        levels.push(level_from_field(&p, l, &a, read_checked(&path, &s.grid, &p, &cfg.hash)?)?);
    }
    let stored = read_checked(&solution_path, &s.grid, &p, &cfg.hash)?;
    let mut sol = finish_solution(&p, &a, levels)?;
    let level_gap = sol.u_total.sub(&stored).sup_abs();
    sol.residual = pde_residual(&p, &stored, *split.deltas.last().unwrap())?;
    sol.pde_residual = sol.residual.weighted_max;
    sol.u_total = stored;

    let (fit_lo, fit_hi) = default_fit_window(&p);
    let fit = (cfg.fit_start.unwrap_or(fit_lo), cfg.fit_end.unwrap_or(fit_hi));
    let t0 = cfg.t0.unwrap_or(p.mesh.t_min + p.burn_in());
    let t1 = cfg.t1.unwrap_or(0.0);
    let flow = FlowReport {
        decay_slopes: decay_fit_over(&p, &sol, fit.0, fit.1)?,
        convexity_margin: mean_convexity(&p, &sol)?,
        mass_drop: mass_drop(&p, &sol, t0, t1)?,
        total_curvature_series: flow_total_curvature(&p, &sol)?,
        leading_order_gap: leading_order_gap(&p, &sol),
        residual_relative_max: sol.residual.relative_max,
        residual_weighted_max: sol.residual.weighted_max,
        recovered: sol.recovered.clone(),
    };
    let checks = evaluate(&cfg, &p, &sol, &flow, level_gap);
    let passed = checks.iter().all(|c| c.passed);
    io::write_json(&run_dir.join("report.json"), &VerifyReport { checks: &checks, passed, flow: &flow }, &cfg.hash)?;
    io::write_series(&run_dir.join("series.csv"), &flow_series(&p, &sol)?, &cfg.hash)?;
    for c in &checks {
        log::info!("{} {}: {:.3e} (bound {:.3e})", if c.passed { "ok  " } else { "FAIL" }, c.name, c.value, c.bound);
    }
    if passed {
        Ok(checks)
    } else {
        let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        Err(CliError::Verify(failed.join(", ")))
    }
}

fn evaluate(cfg: &RunConfig, p: &Problem, sol: &AncientSolution, flow: &FlowReport, level_gap: f64) -> Vec<Check> {
    let mut checks = Vec::new();
    let mut push = |name: String, value: f64, bound: f64, passed: bool| checks.push(Check { name, passed, value, bound });
    let scale = sol.u_total.sup_abs().max(f64::MIN_POSITIVE);
    push("levels sum to the stored solution".into(), level_gap / scale, 1e-12, level_gap <= 1e-12 * scale);
    let r = flow.residual_relative_max;
    push("relative PDE residual".into(), r, cfg.ancient.residual_tol, r <= cfg.ancient.residual_tol);
    for lv in &sol.levels {
        let tp = lv.terminal_projection;
        push(format!("terminal projection, level {}", lv.level), tp, cfg.ancient.proj_tol, tp <= cfg.ancient.proj_tol);
    }
    for rc in &flow.recovered {
        let (value, bound) = if rc.a == 0.0 {
            (rc.recovered.abs(), cfg.ancient.proj_tol)
        } else {
            ((rc.recovered - rc.a).abs() / rc.a.abs(), cfg.ancient.coeff_tol)
        };
        push(format!("coefficient recovery, mode {}", rc.mode), value, bound, value <= bound);
    }
    let m = flow.mass_drop.mismatch.abs();
    push("mass drop mismatch".into(), m, cfg.mass_tol, m <= cfg.mass_tol);
    let lam1 = p.spectral.lambdas[0].abs();
    for (d, lv) in flow.decay_slopes.iter().zip(&sol.levels) {
        let target = p.split.distinct[lv.level - 1].abs();
        if let Some(su) = d.slope_u {
            let e = (su - target).abs() / target;
            push(format!("decay rate of level {}", lv.level), e, cfg.decay_tol, e <= cfg.decay_tol);
            if lv.level == 1 {
                if let Some(sw) = d.slope_w {
                    let margin = sw - su - 0.8 * lam1;
                    push("corrector decays faster than the leading mode".into(), margin, 0.0, margin >= 0.0);
                }
            }
        }
    }
    let one_sided = sol.a.first().is_some_and(|&a1| a1 > 0.0) && sol.a.iter().skip(1).all(|&x| x == 0.0);
    if one_sided {
        let c = &flow.convexity_margin;
        push("min time derivative".into(), c.min_dt_u, 0.0, c.min_dt_u > 0.0);
        push("min of minus mean curvature".into(), c.min_neg_h, 0.0, c.min_neg_h > 0.0);
    }
    let finite = flow.total_curvature_series.iter().all(|(_, x)| x.is_finite());
    push("total curvature finite".into(), if finite { 0.0 } else { 1.0 }, 0.0, finite);
    checks
}

#[derive(Serialize)]
struct ScaleRow {
    scale: f64,
    a1: f64,
    iterations: usize,
    max_ratio: f64,
    weighted_norm: f64,
    hsq_integral: f64,
    leading_order_gap: Option<f64>,
    min_dt_u: f64,
}

#[derive(Serialize)]
struct SweepReport<'a> {
    radius_sweep: &'a SweepTable,
    contraction_radius: Option<f64>,
    convexity_threshold: Option<f64>,
    a_sweep: &'a [ScaleRow],
}

/// Ascending radii with exact duplicates removed.
pub fn dedupe_radii(radii: &[f64]) -> Vec<f64> {
    let mut r = radii.to_vec();
    r.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let before = r.len();
    r.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
    if r.len() < before {
        log::warn!("removed {} duplicate radius value(s) from the sweep", before - r.len());
    }
    r
}

pub fn cmd_sweep(cfg: &RunConfig, out: &Path) -> CliResult<()> {
    let radii = dedupe_radii(&cfg.sweep.radii);
    if radii.len() < 3 {
        return Err(CliError::Usage(format!("[sweep] R needs at least 3 distinct values, got {}", radii.len())));
    }
    let model = cfg.model.build()?;
    let base = setup(cfg)?;
    let dv = base.grid.dv();
    let a = coefficients(cfg, &base.spectral)?;
    let v_min = model.chart_radius(radii[0]);
    let sweep_setup = SweepSetup {
        model: model.clone(),
        dv,
        n_theta: cfg.n_theta,
        scheme: cfg.scheme,
        modes: cfg.modes,
        epsilon: cfg.epsilon,
        nonlinearity: cfg.nonlinearity,
        cfg: cfg.ancient,
        compare_v: cfg.sweep.compare_v.unwrap_or(0.5 * v_min),
    };
    let (table, _) = r_sweep(&sweep_setup, &radii, &a)?;
    prepare_out(out)?;
    let rows = table
        .rows
        .iter()
        .map(|r| {
            vec![
                io::format_number(r.radius),
                io::format_number(r.lambda1),
                r.morse_index.to_string(),
                r.iterations.to_string(),
                r.diff_to_previous.map(io::format_number).unwrap_or_default(),
            ]
        })
        .collect();
    io::write_table(&out.join("sweep.csv"), &["R", "lambda1", "morse_index", "iterations", "diff_to_previous"], rows, &cfg.hash)?;

    let split = group_and_select(&base.spectral, cfg.epsilon)?;
    let p = problem(cfg, &base, &split)?;
    let scale_rows: Vec<CliResult<ScaleRow>> = ancient_mcf_core::exec::map_slice(&cfg.sweep.a_scales, |&sc| {
        let a_s: Vec<f64> = a.iter().map(|x| x * sc).collect();
        let sol = construct_ancient_from(&p, &a_s, None)?;
        let t0 = p.mesh.t_min + p.burn_in();
        let md = mass_drop(&p, &sol, t0, 0.0)?;
        let conv = mean_convexity(&p, &sol)?;
        Ok(ScaleRow {
            scale: sc,
            a1: a_s.first().copied().unwrap_or(0.0),
            iterations: sol.levels.iter().map(|l| l.iterations).sum(),
            max_ratio: sol.levels.iter().flat_map(|l| l.ratios.iter().copied()).fold(0.0, f64::max),
            weighted_norm: sol.levels.iter().map(|l| l.weighted_norm).fold(0.0, f64::max),
            hsq_integral: md.hsq_integral,
            leading_order_gap: leading_order_gap(&p, &sol),
            min_dt_u: conv.min_dt_u,
        })
    });
    let mut a_sweep = Vec::new();
    for r in scale_rows {
        a_sweep.push(r?);
    }
    if !a_sweep.is_empty() {
        let rows = a_sweep
            .iter()
            .map(|r| {
                vec![
                    io::format_number(r.scale),
                    io::format_number(r.a1),
                    r.iterations.to_string(),
                    io::format_number(r.max_ratio),
                    io::format_number(r.weighted_norm),
                    io::format_number(r.hsq_integral),
                    r.leading_order_gap.map(io::format_number).unwrap_or_default(),
                    io::format_number(r.min_dt_u),
                ]
            })
            .collect();
        io::write_table(
            &out.join("a_sweep.csv"),
            &["scale", "a1", "iterations", "max_ratio", "weighted_norm", "Hsq_integral", "leading_order_gap", "min_dt_u"],
            rows,
            &cfg.hash,
        )?;
    }
    let steps = cfg.sweep.bisection_steps;
    let contraction = cfg.sweep.contraction_max.map(|hi| contraction_radius(&p, &a, 0.0, hi, 0.5, steps));
    let convexity = cfg.sweep.convexity_max.map(|hi| convexity_threshold(&p, 0.0, hi, steps));
    let report = SweepReport { radius_sweep: &table, contraction_radius: contraction, convexity_threshold: convexity, a_sweep: &a_sweep };
    io::write_json(&out.join("sweep.json"), &report, &cfg.hash)?;
    if !table.decreasing {
        log::warn!("consecutive radius differences are not decreasing");
    }
    Ok(())
}

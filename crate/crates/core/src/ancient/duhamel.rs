//! Mode-split Duhamel solver for `∂_t u = L u + f` on `[T_min, 0]`.
//!
//! In the eigenbasis, `u_j' = −λ_j u_j + f_j`. Modes with `λ_j < −δ` are
//! integrated backward from `u_j(0) = 0`, the others forward from
//! `u_j(T_min) = 0`, both by the exponential trapezoidal rule (exact for
//! piecewise linear `f`). Modes beyond the retained set are advanced by
//! Crank–Nicolson on the radial blocks.

use crate::error::{invalid, Error, Result};
use crate::exec;
use crate::mesh::{Grid, SpaceTimeField, TimeMesh};
use crate::spectrum::SpectralData;
use ndarray::{Array2, ArrayView2, Axis};

/// `(e^x − 1)/x`.
pub fn phi1(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 + 0.5 * x
    } else {
        x.exp_m1() / x
    }
}

/// `(e^x − 1 − x)/x²`.
pub fn phi2(x: f64) -> f64 {
    if x.abs() < 0.1 {
        series(x, |k| 1.0 / factorial(k + 2))
    } else {
        (x.exp_m1() - x) / (x * x)
    }
}

/// `φ₁(x) − φ₂(x) = (e^x (x − 1) + 1)/x²`.
pub fn phi1_minus_phi2(x: f64) -> f64 {
    if x.abs() < 0.1 {
        series(x, |k| (k + 1) as f64 / factorial(k + 2))
    } else {
        (x.exp_m1() * (x - 1.0) + x) / (x * x)
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn series(x: f64, c: impl Fn(usize) -> f64) -> f64 {
    let mut s = 0.0;
    let mut p = 1.0;
    for k in 0..14 {
        s += c(k) * p;
        p *= x;
    }
    s
}

/// Step coefficients `(decay, c_n, c_{n+1})` of `u_{n+1} = decay·u_n + c_n f_n + c_{n+1} f_{n+1}`.
fn forward_coeffs(lambda: f64, dt: f64) -> (f64, f64, f64) {
    let x = -lambda * dt;
    (x.exp(), dt * phi1_minus_phi2(x), dt * phi2(x))
}

/// Forward integration of `u' = −λu + f` from `u(t_0) = 0`.
pub fn forward_mode(lambda: f64, dt: f64, f: &[f64]) -> Vec<f64> {
    let (e, a, b) = forward_coeffs(lambda, dt);
    let mut u = vec![0.0; f.len()];
    for n in 0..f.len().saturating_sub(1) {
        u[n + 1] = e * u[n] + a * f[n] + b * f[n + 1];
    }
    u
}

/// Backward integration of `u' = −λu + f` from `u(t_last) = 0`.
pub fn backward_mode(lambda: f64, dt: f64, f: &[f64]) -> Vec<f64> {
    let y = lambda * dt;
    let (e, a, b) = (y.exp(), dt * phi2(y), dt * phi1_minus_phi2(y));
    let mut u = vec![0.0; f.len()];
    for n in (0..f.len().saturating_sub(1)).rev() {
        u[n] = e * u[n + 1] - a * f[n] - b * f[n + 1];
    }
    u
}

/// Parameters of the linear solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DuhamelConfig {
    pub delta: f64,
    pub mesh: TimeMesh,
    /// Lowest modes integrated by the Duhamel formulas; `None` uses every
    /// retained mode of the spectrum.
    pub n_modes: Option<usize>,
    pub gap_tol: f64,
}

struct BlockPlan {
    m: usize,
    /// Weighted radial vectors `diag(w) R[:, ks]`.
    weighted: Array2<f64>,
    vectors: Array2<f64>,
    lambdas: Vec<f64>,
    remainder: bool,
}

/// Precomputed solver for repeated solves with one spectrum and one `δ`.
pub struct LinearSolver<'a> {
    grid: &'a Grid,
    spectral: &'a SpectralData,
    cfg: DuhamelConfig,
    plans: Vec<BlockPlan>,
}

impl<'a> LinearSolver<'a> {
    pub fn new(grid: &'a Grid, spectral: &'a SpectralData, cfg: DuhamelConfig) -> Result<Self> {
        if !(cfg.delta > 0.0) || !cfg.delta.is_finite() {
            return Err(invalid(format!("delta must be positive, got {}", cfg.delta)));
        }
        if spectral.n_int() + 2 != grid.n_v() || spectral.n_theta() != grid.n_theta() {
            return Err(invalid("spectrum does not belong to this grid"));
        }
        let used = cfg.n_modes.unwrap_or(spectral.len()).min(spectral.len());
        let needed = spectral.morse_index + spectral.kernel_dim;
        if used < needed.max(1) || spectral.lambdas[used - 1] < 0.0 && used < spectral.n_int() * spectral.n_theta() {
            return Err(invalid(format!(
                "{used} integrated modes do not cover the {needed} non-positive eigenvalues"
            )));
        }
        for &l in &spectral.lambdas[..used] {
            if (cfg.delta + l).abs() < cfg.gap_tol {
                return Err(Error::Resonance { delta: cfg.delta, neg_lambda: -l, gap_tol: cfg.gap_tol });
            }
        }
        let n = spectral.n_int();
        let w = spectral.radial_weights();
        let nt = grid.n_theta();
        let mut plans = Vec::with_capacity(nt);
        for b in 0..nt {
            let m = grid.basis().wavenumber(b);
            let ks: Vec<usize> = spectral.modes[..used].iter().filter(|md| md.block == b).map(|md| md.k).collect();
            let basis = spectral.basis(m);
            let mut vectors = Array2::zeros((n, ks.len()));
            for (c, &k) in ks.iter().enumerate() {
                vectors.column_mut(c).assign(&basis.vectors.column(k));
            }
            let mut weighted = vectors.clone();
            for (i, mut row) in weighted.axis_iter_mut(Axis(0)).enumerate() {
                row *= w[i];
            }
            let lambdas = ks.iter().map(|&k| basis.lambdas[k]).collect();
            plans.push(BlockPlan { m, remainder: ks.len() < n, weighted, vectors, lambdas });
        }
        Ok(LinearSolver { grid, spectral, cfg, plans })
    }

    pub fn config(&self) -> &DuhamelConfig {
        &self.cfg
    }

    /// Solution of `∂_t u − L u = f` with the mode-split boundary conditions.
    pub fn solve(&self, f: &SpaceTimeField) -> Result<SpaceTimeField> {
        let mesh = self.cfg.mesh;
        if f.mesh.n_t != mesh.n_t || (f.mesh.dt - mesh.dt).abs() > 1e-12 * mesh.dt || f.n_nodes != self.grid.n_nodes() {
            return Err(Error::InvalidInput("forcing does not match the time mesh or grid".into()));
        }
        if f.data.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("forcing has non-finite values".into()));
        }
        let weighted = f
            .slices()
            .enumerate()
            .map(|(n, s)| (-self.cfg.delta * mesh.time(n)).exp() * s.iter().fold(0.0f64, |a, x| a.max(x.abs())))
            .fold(0.0f64, f64::max);
        if !weighted.is_finite() {
            return Err(Error::InvalidInput("forcing has infinite weighted norm".into()));
        }
        let (nt_time, nth, n) = (mesh.n_t, self.grid.n_theta(), self.spectral.n_int());
        let basis = self.grid.basis();
        // Fourier analysis of every interior row of every slice: [n][i][b].
        let analyzed: Vec<Vec<f64>> = exec::map_range(nt_time, |t| {
            let s = f.slice(t);
            let mut out = vec![0.0; n * nth];
            for i in 0..n {
                basis.analyze(&s[(i + 1) * nth..(i + 2) * nth], &mut out[i * nth..(i + 1) * nth]);
            }
            out
        });
        let solved: Vec<Array2<f64>> = exec::map_range(nth, |b| {
            let mut fb = Array2::zeros((nt_time, n));
            for (t, a) in analyzed.iter().enumerate() {
                for i in 0..n {
                    fb[[t, i]] = a[i * nth + b];
                }
            }
            self.solve_block(&self.plans[b], fb.view())
        });
        let data = exec::map_range(nt_time, |t| {
            let mut out = vec![0.0; nth * (n + 2)];
            let mut coeffs = vec![0.0; nth];
            for i in 0..n {
                for (b, c) in coeffs.iter_mut().enumerate() {
                    *c = solved[b][[t, i]];
                }
                basis.synthesize(&coeffs, &mut out[(i + 1) * nth..(i + 2) * nth]);
            }
            out
        });
        Ok(SpaceTimeField::from_slices(mesh, self.grid.n_nodes(), data))
    }

    fn solve_block(&self, plan: &BlockPlan, fb: ArrayView2<f64>) -> Array2<f64> {
        let dt = self.cfg.mesh.dt;
        let coeffs = fb.dot(&plan.weighted);
        let mut u = Array2::zeros(coeffs.dim());
        for (c, &lambda) in plan.lambdas.iter().enumerate() {
            let series = coeffs.column(c).to_vec();
            let sol = if lambda < -self.cfg.delta {
                backward_mode(lambda, dt, &series)
            } else {
                forward_mode(lambda, dt, &series)
            };
            for (t, x) in sol.into_iter().enumerate() {
                u[[t, c]] = x;
            }
        }
        let mut out = u.dot(&plan.vectors.t());
        if plan.remainder {
            let perp = &fb - &coeffs.dot(&plan.vectors.t());
            let mut x = self.crank_nicolson(plan.m, perp.view());
            let back = x.dot(&plan.weighted).dot(&plan.vectors.t());
            x -= &back;
            out += &x;
        }
        out
    }

    /// Forward Crank–Nicolson (first step backward Euler) for the radial block
    /// `x' = −M^{−1}K x + g` from `x(T_min) = 0`.
    fn crank_nicolson(&self, m: usize, g: ArrayView2<f64>) -> Array2<f64> {
        let blk = self.spectral.block(m);
        let sw: Vec<f64> = self.spectral.radial_weights().iter().map(|w| w.sqrt()).collect();
        let dt = self.cfg.mesh.dt;
        let (nt_time, n) = g.dim();
        let mut y = Array2::zeros((nt_time, n));
        let gy = |t: usize, i: usize| g[[t, i]] * sw[i];
        let mut prev = vec![0.0; n];
        for t in 1..nt_time {
            let c = if t == 1 { dt } else { 0.5 * dt };
            let mut rhs = vec![0.0; n];
            for i in 0..n {
                let ty = if t == 1 {
                    0.0
                } else {
                    let mut s = blk.diag[i] * prev[i];
                    if i > 0 {
                        s += blk.off[i - 1] * prev[i - 1];
                    }
                    if i + 1 < n {
                        s += blk.off[i] * prev[i + 1];
                    }
                    s
                };
                rhs[i] = if t == 1 {
                    prev[i] + dt * gy(t, i)
                } else {
                    prev[i] - c * ty + c * (gy(t - 1, i) + gy(t, i))
                };
            }
            let next = solve_shifted_tridiagonal(&blk.diag, &blk.off, c, &rhs);
            for i in 0..n {
                y[[t, i]] = next[i] / sw[i];
            }
            prev = next;
        }
        y
    }
}

/// Solve `(I + c T) x = r` for symmetric tridiagonal `T` (Thomas algorithm).
fn solve_shifted_tridiagonal(d: &[f64], e: &[f64], c: f64, r: &[f64]) -> Vec<f64> {
    let n = d.len();
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    let mut beta = 1.0 + c * d[0];
    dp[0] = r[0] / beta;
    for i in 1..n {
        cp[i - 1] = c * e[i - 1] / beta;
        beta = 1.0 + c * d[i] - c * e[i - 1] * cp[i - 1];
        dp[i] = (r[i] - c * e[i - 1] * dp[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        dp[i] -= cp[i] * dp[i + 1];
    }
    dp
}

/// One-shot [`LinearSolver::solve`].
pub fn solve_linear(grid: &Grid, f: &SpaceTimeField, spectral: &SpectralData, cfg: DuhamelConfig) -> Result<SpaceTimeField> {
    LinearSolver::new(grid, spectral, cfg)?.solve(f)
}

//! Tensor grids on the truncated surface and discrete calculus on them.
//!
//! Nodes are stored radial-major: node `k = i * n_theta + j` sits at
//! `(v_i, θ_j)`. The rows `i = 0` and `i = n_v − 1` are the Dirichlet layers.

use crate::error::{invalid, Error, Result};
use crate::geometry::{Frame, SurfaceModel};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Discretization of `∂_θ` and `∂_θθ` on the periodic angular direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum AngularScheme {
    /// Exact Fourier symbols `m` and `m²`.
    #[default]
    Spectral,
    /// Centered second-order differences.
    Fd2,
}

/// Orthonormal real Fourier basis on `M` equispaced angles.
///
/// Block `b = 0` is the constant, blocks `2m − 1` and `2m` are `cos mθ` and
/// `sin mθ` for `1 ≤ m < M/2`, and block `M − 1` is the Nyquist cosine. Each
/// satisfies `Σ_j Θ_b(θ_j)² Δθ = 1`.
#[derive(Clone, Debug)]
pub struct FourierBasis {
    n: usize,
    dtheta: f64,
    table: Vec<f64>,
    wavenumber: Vec<usize>,
}

impl FourierBasis {
    pub fn new(n: usize) -> Self {
        let dtheta = 2.0 * PI / n as f64;
        let mut table = vec![0.0; n * n];
        let mut wavenumber = vec![0; n];
        for b in 0..n {
            let (m, is_sin) = block_wave(b, n);
            wavenumber[b] = m;
            let norm = if m == 0 || 2 * m == n { (2.0 * PI).sqrt() } else { PI.sqrt() };
            for j in 0..n {
                let x = (m * j) as f64 * dtheta;
                let val = if 2 * m == n {
                    if j % 2 == 0 { 1.0 } else { -1.0 }
                } else if is_sin {
                    x.sin()
                } else {
                    x.cos()
                };
                table[b * n + j] = val / norm;
            }
        }
        FourierBasis { n, dtheta, table, wavenumber }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Angular wavenumber of block `b`.
    pub fn wavenumber(&self, b: usize) -> usize {
        self.wavenumber[b]
    }

    /// `Θ_b(θ_j)`.
    pub fn value(&self, b: usize, j: usize) -> f64 {
        self.table[b * self.n + j]
    }

    pub fn analyze(&self, row: &[f64], out: &mut [f64]) {
        let n = self.n;
        for (b, o) in out.iter_mut().enumerate().take(n) {
            let t = &self.table[b * n..(b + 1) * n];
            let mut s = 0.0;
            for j in 0..n {
                s += t[j] * row[j];
            }
            *o = s * self.dtheta;
        }
    }

    pub fn synthesize(&self, coeffs: &[f64], out: &mut [f64]) {
        let n = self.n;
        out[..n].fill(0.0);
        for (b, &c) in coeffs.iter().enumerate().take(n) {
            if c == 0.0 {
                continue;
            }
            let t = &self.table[b * n..(b + 1) * n];
            for j in 0..n {
                out[j] += c * t[j];
            }
        }
    }
}

fn block_wave(b: usize, n: usize) -> (usize, bool) {
    if b == 0 {
        (0, false)
    } else if b == n - 1 {
        (n / 2, false)
    } else {
        (b.div_ceil(2), b.is_multiple_of(2))
    }
}

impl AngularScheme {
    /// Symbol of `∂_θ` on wavenumber `m`.
    pub fn first_symbol(self, m: usize, n: usize) -> f64 {
        if 2 * m == n {
            return 0.0;
        }
        match self {
            AngularScheme::Spectral => m as f64,
            AngularScheme::Fd2 => {
                let h = 2.0 * PI / n as f64;
                (m as f64 * h).sin() / h
            }
        }
    }

    /// Symbol `μ_m` of `−∂_θθ` on wavenumber `m`.
    pub fn second_symbol(self, m: usize, n: usize) -> f64 {
        match self {
            AngularScheme::Spectral => (m * m) as f64,
            AngularScheme::Fd2 => {
                let h = 2.0 * PI / n as f64;
                let s = (0.5 * m as f64 * h).sin();
                4.0 * s * s / (h * h)
            }
        }
    }
}

/// Uniform `(v, θ)` grid on `Σ_R`.
#[derive(Clone, Debug)]
pub struct Grid {
    model: SurfaceModel,
    radius: f64,
    v_r: f64,
    n_v: usize,
    n_theta: usize,
    dv: f64,
    dtheta: f64,
    v_nodes: Vec<f64>,
    theta_nodes: Vec<f64>,
    frames: Vec<Frame>,
    flux: Vec<f64>,
    scheme: AngularScheme,
    basis: FourierBasis,
}

/// Grid with `n_v` radial nodes on `[−v_R, v_R]` and `n_theta` angles.
pub fn build_grid(model: &SurfaceModel, r: f64, n_v: usize, n_theta: usize) -> Result<Grid> {
    build_grid_with(model, r, n_v, n_theta, AngularScheme::default())
}

pub fn build_grid_with(
    model: &SurfaceModel,
    r: f64,
    n_v: usize,
    n_theta: usize,
    scheme: AngularScheme,
) -> Result<Grid> {
    if !(r > 1.0) || !r.is_finite() {
        return Err(invalid(format!("truncation radius must exceed 1, got {r}")));
    }
    if n_v < 16 {
        return Err(invalid(format!("n_v must be at least 16, got {n_v}")));
    }
    if n_theta < 4 || !n_theta.is_multiple_of(2) {
        return Err(invalid(format!("n_theta must be even and at least 4, got {n_theta}")));
    }
    let v_r = model.chart_radius(r);
    if v_r > model.v_max() * (1.0 + 1e-12) {
        return Err(invalid(format!(
            "truncation v_R = {v_r} exceeds the chart half-length {}",
            model.v_max()
        )));
    }
    let dv = 2.0 * v_r / (n_v - 1) as f64;
    let v_nodes: Vec<f64> = (0..n_v)
        .map(|i| {
            if i == n_v - 1 {
                v_r
            } else {
                -v_r + i as f64 * dv
            }
        })
        .collect();
    let dtheta = 2.0 * PI / n_theta as f64;
    let theta_nodes = (0..n_theta).map(|j| j as f64 * dtheta).collect();
    let frames = v_nodes.iter().map(|&v| model.frame(v, 0.0)).collect();
    let flux = (0..n_v - 1)
        .map(|i| {
            let rad = model.radial(-v_r + (i as f64 + 0.5) * dv);
            (rad.g / rad.e).sqrt()
        })
        .collect();
    Ok(Grid {
        model: model.clone(),
        radius: r,
        v_r,
        n_v,
        n_theta,
        dv,
        dtheta,
        v_nodes,
        theta_nodes,
        frames,
        flux,
        scheme,
        basis: FourierBasis::new(n_theta),
    })
}

impl Grid {
    pub fn model(&self) -> &SurfaceModel {
        &self.model
    }
    /// Intrinsic truncation radius `R`.
    pub fn radius(&self) -> f64 {
        self.radius
    }
    pub fn v_radius(&self) -> f64 {
        self.v_r
    }
    pub fn n_v(&self) -> usize {
        self.n_v
    }
    pub fn n_theta(&self) -> usize {
        self.n_theta
    }
    pub fn n_nodes(&self) -> usize {
        self.n_v * self.n_theta
    }
    pub fn dv(&self) -> f64 {
        self.dv
    }
    pub fn dtheta(&self) -> f64 {
        self.dtheta
    }
    pub fn v_nodes(&self) -> &[f64] {
        &self.v_nodes
    }
    pub fn theta_nodes(&self) -> &[f64] {
        &self.theta_nodes
    }
    pub fn scheme(&self) -> AngularScheme {
        self.scheme
    }
    pub fn basis(&self) -> &FourierBasis {
        &self.basis
    }
    /// Tensors at radial node `i`.
    pub fn frame(&self, i: usize) -> &Frame {
        &self.frames[i]
    }
    /// `√(G/E)` at the midpoint between radial nodes `i` and `i + 1`.
    pub fn flux(&self, i: usize) -> f64 {
        self.flux[i]
    }
    pub fn node(&self, i: usize, j: usize) -> usize {
        i * self.n_theta + j
    }
    pub fn is_dirichlet_row(&self, i: usize) -> bool {
        i == 0 || i + 1 == self.n_v
    }
    /// Trapezoidal weight in `v` times `Δθ` times `√det g` at row `i`.
    pub fn weight(&self, i: usize) -> f64 {
        let end = if self.is_dirichlet_row(i) { 0.5 } else { 1.0 };
        end * self.dv * self.dtheta * self.frames[i].sqrt_det
    }

    pub(crate) fn integrate_radial(&self, vals: &[f64]) -> f64 {
        let mut s = 0.0;
        for (i, &x) in vals.iter().enumerate() {
            s += self.weight(i) * x;
        }
        s * self.n_theta as f64
    }
}

/// Values at every grid node.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    pub n_v: usize,
    pub n_theta: usize,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(grid: &Grid) -> Self {
        GridFunction { n_v: grid.n_v, n_theta: grid.n_theta, values: vec![0.0; grid.n_nodes()] }
    }

    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_nodes() {
            return Err(Error::InvalidInput(format!(
                "expected {} node values, got {}",
                grid.n_nodes(),
                values.len()
            )));
        }
        Ok(GridFunction { n_v: grid.n_v, n_theta: grid.n_theta, values })
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.n_nodes());
        for &v in &grid.v_nodes {
            for &t in &grid.theta_nodes {
                values.push(f(v, t));
            }
        }
        GridFunction { n_v: grid.n_v, n_theta: grid.n_theta, values }
    }

    /// Zero the Dirichlet rows.
    pub fn masked(mut self) -> Self {
        let m = self.n_theta;
        let n = self.values.len();
        self.values[..m].fill(0.0);
        self.values[n - m..].fill(0.0);
        self
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, &x| a.max(x.abs()))
    }
}

/// Uniform time mesh on `[T_min, 0]` whose last node is exactly 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeMesh {
    pub t_min: f64,
    pub dt: f64,
    pub n_t: usize,
}

impl TimeMesh {
    /// Mesh with step at most `dt_max`.
    pub fn new(t_min: f64, dt_max: f64) -> Result<Self> {
        if !(t_min < 0.0) || !t_min.is_finite() {
            return Err(invalid(format!("T_min must be negative, got {t_min}")));
        }
        if !(dt_max > 0.0) || !dt_max.is_finite() {
            return Err(invalid(format!("dt must be positive, got {dt_max}")));
        }
        let steps = ((-t_min / dt_max) - 1e-9).ceil().max(1.0) as usize;
        Ok(TimeMesh { t_min, dt: -t_min / steps as f64, n_t: steps + 1 })
    }

    pub fn time(&self, n: usize) -> f64 {
        -((self.n_t - 1 - n) as f64) * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n_t).map(|n| self.time(n)).collect()
    }

    /// First index with `t_n ≥ t − tol`.
    pub fn index_at_or_after(&self, t: f64) -> usize {
        let k = ((t - self.t_min) / self.dt - 1e-9).ceil();
        (k.max(0.0) as usize).min(self.n_t - 1)
    }
}

/// One grid function per time node.
#[derive(Clone, Debug, PartialEq)]
pub struct SpaceTimeField {
    pub mesh: TimeMesh,
    pub n_nodes: usize,
    pub data: Vec<f64>,
}

impl SpaceTimeField {
    pub fn zeros(mesh: TimeMesh, n_nodes: usize) -> Self {
        SpaceTimeField { mesh, n_nodes, data: vec![0.0; mesh.n_t * n_nodes] }
    }

    pub fn from_slices(mesh: TimeMesh, n_nodes: usize, slices: Vec<Vec<f64>>) -> Self {
        let mut data = Vec::with_capacity(mesh.n_t * n_nodes);
        for s in slices {
            debug_assert_eq!(s.len(), n_nodes);
            data.extend_from_slice(&s);
        }
        SpaceTimeField { mesh, n_nodes, data }
    }

    pub fn n_t(&self) -> usize {
        self.mesh.n_t
    }

    pub fn slice(&self, n: usize) -> &[f64] {
        &self.data[n * self.n_nodes..(n + 1) * self.n_nodes]
    }

    pub fn slice_mut(&mut self, n: usize) -> &mut [f64] {
        &mut self.data[n * self.n_nodes..(n + 1) * self.n_nodes]
    }

    pub fn slices(&self) -> std::slice::Chunks<'_, f64> {
        self.data.chunks(self.n_nodes)
    }

    pub fn add(&self, other: &SpaceTimeField) -> SpaceTimeField {
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        SpaceTimeField { mesh: self.mesh, n_nodes: self.n_nodes, data }
    }

    pub fn sub(&self, other: &SpaceTimeField) -> SpaceTimeField {
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        SpaceTimeField { mesh: self.mesh, n_nodes: self.n_nodes, data }
    }

    pub fn scale(&self, s: f64) -> SpaceTimeField {
        SpaceTimeField { mesh: self.mesh, n_nodes: self.n_nodes, data: self.data.iter().map(|a| a * s).collect() }
    }

    pub fn sup_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, &x| a.max(x.abs()))
    }

    /// `sup_x |f(·, t_n)|` for every time node.
    pub fn slice_sups(&self) -> Vec<f64> {
        self.slices().map(|s| s.iter().fold(0.0, |a: f64, &x| a.max(x.abs()))).collect()
    }
}

/// Coordinate partial derivatives of one grid function.
///
/// Radial derivatives are centered at interior rows; on Dirichlet rows only
/// `u_v` is filled (one-sided, second order). Angular derivatives use the
/// grid's [`AngularScheme`].
#[derive(Clone, Debug)]
pub struct Partials {
    pub u: Vec<f64>,
    pub u_v: Vec<f64>,
    pub u_t: Vec<f64>,
    pub u_vv: Vec<f64>,
    pub u_vt: Vec<f64>,
    pub u_tt: Vec<f64>,
}

pub(crate) fn angular_derivatives(grid: &Grid, row: &[f64], d1: &mut [f64], d2: &mut [f64]) {
    let n = grid.n_theta;
    match grid.scheme {
        AngularScheme::Fd2 => {
            let h = grid.dtheta;
            for j in 0..n {
                let a = row[(j + n - 1) % n];
                let b = row[(j + 1) % n];
                d1[j] = (b - a) / (2.0 * h);
                d2[j] = (b - 2.0 * row[j] + a) / (h * h);
            }
        }
        AngularScheme::Spectral => {
            let basis = &grid.basis;
            let mut c = vec![0.0; n];
            let mut c1 = vec![0.0; n];
            let mut c2 = vec![0.0; n];
            basis.analyze(row, &mut c);
            for b in 0..n {
                let m = basis.wavenumber(b);
                c2[b] = -AngularScheme::Spectral.second_symbol(m, n) * c[b];
                if m == 0 || 2 * m == n {
                    continue;
                }
                let s = AngularScheme::Spectral.first_symbol(m, n);
                if b % 2 == 1 {
                    // cos mθ → −m sin mθ
                    c1[b + 1] = -s * c[b];
                } else {
                    c1[b - 1] = s * c[b];
                }
            }
            basis.synthesize(&c1, d1);
            basis.synthesize(&c2, d2);
        }
    }
}

/// All first and second coordinate partials of `f`.
pub fn partials(grid: &Grid, f: &[f64]) -> Partials {
    let (nv, nt) = (grid.n_v, grid.n_theta);
    let n = nv * nt;
    let mut p = Partials {
        u: f.to_vec(),
        u_v: vec![0.0; n],
        u_t: vec![0.0; n],
        u_vv: vec![0.0; n],
        u_vt: vec![0.0; n],
        u_tt: vec![0.0; n],
    };
    for i in 0..nv {
        let r = i * nt..(i + 1) * nt;
        let (d1, d2) = (&mut p.u_t[r.clone()], &mut p.u_tt[r.clone()]);
        angular_derivatives(grid, &f[r], d1, d2);
    }
    let h = grid.dv;
    for i in 1..nv - 1 {
        for j in 0..nt {
            let k = i * nt + j;
            let (a, b) = (k - nt, k + nt);
            p.u_v[k] = (f[b] - f[a]) / (2.0 * h);
            p.u_vv[k] = (f[b] - 2.0 * f[k] + f[a]) / (h * h);
            p.u_vt[k] = (p.u_t[b] - p.u_t[a]) / (2.0 * h);
        }
    }
    for j in 0..nt {
        let (k0, k1, k2) = (j, nt + j, 2 * nt + j);
        p.u_v[k0] = (-3.0 * f[k0] + 4.0 * f[k1] - f[k2]) / (2.0 * h);
        let (l0, l1, l2) = ((nv - 1) * nt + j, (nv - 2) * nt + j, (nv - 3) * nt + j);
        p.u_v[l0] = (3.0 * f[l0] - 4.0 * f[l1] + f[l2]) / (2.0 * h);
    }
    p
}

/// Conservative five-point Laplace–Beltrami operator; Dirichlet rows give 0.
pub fn laplace_beltrami(grid: &Grid, f: &GridFunction) -> GridFunction {
    GridFunction { n_v: grid.n_v, n_theta: grid.n_theta, values: laplace_slice(grid, &f.values) }
}

pub(crate) fn laplace_slice(grid: &Grid, f: &[f64]) -> Vec<f64> {
    let (nv, nt) = (grid.n_v, grid.n_theta);
    let mut out = vec![0.0; nv * nt];
    let h2 = grid.dv * grid.dv;
    let mut d1 = vec![0.0; nt];
    let mut d2 = vec![0.0; nt];
    for i in 1..nv - 1 {
        let fr = grid.frame(i);
        let (wm, wp) = (grid.flux[i - 1], grid.flux[i]);
        let inv_g = fr.inv_metric[1][1];
        let r = i * nt..(i + 1) * nt;
        angular_derivatives(grid, &f[r], &mut d1, &mut d2);
        for j in 0..nt {
            let k = i * nt + j;
            let radial = (wp * (f[k + nt] - f[k]) - wm * (f[k] - f[k - nt])) / (h2 * fr.sqrt_det);
            out[k] = radial + inv_g * d2[j];
        }
    }
    out
}

/// `∫ f dA` by the tensor trapezoid rule.
pub fn integrate(grid: &Grid, f: &GridFunction) -> f64 {
    integrate_slice(grid, &f.values)
}

pub(crate) fn integrate_slice(grid: &Grid, f: &[f64]) -> f64 {
    let nt = grid.n_theta;
    let mut s = 0.0;
    for i in 0..grid.n_v {
        let row: f64 = f[i * nt..(i + 1) * nt].iter().sum();
        s += grid.weight(i) * row;
    }
    s
}

/// `∫ f g dA`.
pub fn l2_inner(grid: &Grid, f: &GridFunction, g: &GridFunction) -> f64 {
    let nt = grid.n_theta;
    let mut s = 0.0;
    for i in 0..grid.n_v {
        let r = i * nt..(i + 1) * nt;
        let row: f64 = f.values[r.clone()].iter().zip(&g.values[r]).map(|(a, b)| a * b).sum();
        s += grid.weight(i) * row;
    }
    s
}

/// Per-slice spatial parts of the discrete C^order norm:
/// `sup|f| + sup|∇f|_g + sup|∇²f|_g`, derivative terms over interior rows.
pub fn slice_norm(grid: &Grid, f: &[f64], order: usize) -> f64 {
    let c0 = f.iter().fold(0.0, |a: f64, &x| a.max(x.abs()));
    if order == 0 {
        return c0;
    }
    let p = partials(grid, f);
    let nt = grid.n_theta;
    let (mut c1, mut c2) = (0.0f64, 0.0f64);
    for i in 1..grid.n_v - 1 {
        let fr = grid.frame(i);
        let (gvv, gtt) = (fr.inv_metric[0][0], fr.inv_metric[1][1]);
        let chr = &fr.christoffel;
        for j in 0..nt {
            let k = i * nt + j;
            let (uv, ut) = (p.u_v[k], p.u_t[k]);
            c1 = c1.max((gvv * uv * uv + gtt * ut * ut).sqrt());
            if order >= 2 {
                let grad = [uv, ut];
                let raw = [[p.u_vv[k], p.u_vt[k]], [p.u_vt[k], p.u_tt[k]]];
                let mut hs = [[0.0; 2]; 2];
                for a in 0..2 {
                    for b in 0..2 {
                        hs[a][b] = raw[a][b] - chr[0][a][b] * grad[0] - chr[1][a][b] * grad[1];
                    }
                }
                let n2 = gvv * gvv * hs[0][0] * hs[0][0]
                    + 2.0 * gvv * gtt * hs[0][1] * hs[0][1]
                    + gtt * gtt * hs[1][1] * hs[1][1];
                c2 = c2.max(n2.sqrt());
            }
        }
    }
    c0 + c1 + c2
}

/// Discrete stand-in for the weighted parabolic norm
/// `sup_n e^{−δ t_n} · max over the slab (t_n − window, t_n]` of the slice norm,
/// with the first time difference quotient added at order 2.
pub fn discrete_norm(grid: &Grid, field: &SpaceTimeField, order: usize, window: f64, delta: f64) -> Result<f64> {
    if order > 2 {
        return Err(invalid(format!("norm order must be 0, 1 or 2, got {order}")));
    }
    let dt = field.mesh.dt;
    if !(window >= dt * (1.0 - 1e-12)) {
        return Err(invalid(format!("window {window} is smaller than the time step {dt}")));
    }
    let nt = field.n_t();
    let mut local: Vec<f64> = crate::exec::map_range(nt, |n| slice_norm(grid, field.slice(n), order));
    if order == 2 && nt > 1 {
        for (n, l) in local.iter_mut().enumerate() {
            let (a, b) = if n == 0 { (0, 1) } else { (n - 1, n) };
            let q = field
                .slice(b)
                .iter()
                .zip(field.slice(a))
                .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
                / dt;
            *l += q;
        }
    }
    let span = ((window / dt) * (1.0 + 1e-12)).floor() as usize;
    let span = span.max(1);
    let mut best = 0.0f64;
    for n in 0..nt {
        let lo = (n + 1).saturating_sub(span);
        let m = local[lo..=n].iter().fold(0.0f64, |a, &x| a.max(x));
        best = best.max((-delta * field.mesh.time(n)).exp() * m);
    }
    Ok(best)
}

/// Single-function C^order norm (no time direction).
pub fn discrete_norms(grid: &Grid, f: &GridFunction, order: usize) -> Result<f64> {
    if order > 2 {
        return Err(invalid(format!("norm order must be 0, 1 or 2, got {order}")));
    }
    Ok(slice_norm(grid, &f.values, order))
}

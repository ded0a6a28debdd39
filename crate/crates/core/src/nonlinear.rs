//! Geometry of normal graphs `F = x + u ν` and the error term
//! `E(u) = −V Ĥ − L u`.

use crate::error::{Error, Result};
use crate::geometry::{Frame, Mat2};
use crate::mesh::{laplace_slice, partials, Grid, GridFunction, Partials};
use serde::{Deserialize, Serialize};

/// Value, coordinate gradient and coordinate second partials of `u` at a point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Jet {
    pub u: f64,
    pub du: [f64; 2],
    pub d2u: Mat2,
}

impl Jet {
    pub fn from_partials(p: &Partials, k: usize) -> Self {
        Jet { u: p.u[k], du: [p.u_v[k], p.u_t[k]], d2u: [[p.u_vv[k], p.u_vt[k]], [p.u_vt[k], p.u_tt[k]]] }
    }

    /// Covariant Hessian `∇²_ij u = ∂_ij u − Γ^k_ij ∂_k u`.
    pub fn hessian(&self, fr: &Frame) -> Mat2 {
        let mut h = [[0.0; 2]; 2];
        for (i, hi) in h.iter_mut().enumerate() {
            for (j, hij) in hi.iter_mut().enumerate() {
                *hij = self.d2u[i][j] - fr.christoffel[0][i][j] * self.du[0] - fr.christoffel[1][i][j] * self.du[1];
            }
        }
        h
    }
}

/// Graph geometry at one node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodeGeometry {
    pub g_hat: Mat2,
    pub g_hat_inv: Mat2,
    pub h_hat: Mat2,
    pub mean_curvature: f64,
    /// `V = (1 − |∇u|²_ĝ)^{−1/2}`.
    pub tilt: f64,
    /// `|∇u|²_ĝ`.
    pub grad_sq: f64,
    /// `√det ĝ − √det g`, evaluated without cancellation.
    pub area_excess: f64,
    /// `|ĥ|²_ĝ`.
    pub second_form_sq: f64,
}

fn inv2(a: &Mat2) -> (Mat2, f64) {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    ([[a[1][1] / det, -a[0][1] / det], [-a[1][0] / det, a[0][0] / det]], det)
}

fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

/// `h_i^k h_kj`.
fn h_squared(fr: &Frame) -> Mat2 {
    mat_mul(&fr.mixed_second_form, &fr.second_form)
}

/// `T^k_ij = u_i h_j^k + u_j h_i^k + u ∇_j h_i^k`, stored `[i][j][k]`.
fn tangential(fr: &Frame, jet: &Jet) -> [[[f64; 2]; 2]; 2] {
    let mut t = [[[0.0; 2]; 2]; 2];
    let mix = &fr.mixed_second_form;
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                t[i][j][k] = jet.du[i] * mix[j][k] + jet.du[j] * mix[i][k] + jet.u * fr.grad_second_form[j][i][k];
            }
        }
    }
    t
}

/// Pointwise graph geometry; `hess` is the covariant Hessian used inside `ĥ`.
pub fn node_geometry(fr: &Frame, jet: &Jet, hess: Option<&Mat2>) -> std::result::Result<NodeGeometry, String> {
    let hh = h_squared(fr);
    let mut g_hat = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            g_hat[i][j] = fr.metric[i][j] + 2.0 * jet.u * fr.second_form[i][j] + jet.u * jet.u * hh[i][j] + jet.du[i] * jet.du[j];
        }
    }
    let (gi, det) = inv2(&g_hat);
    if !(det > 0.0 && g_hat[0][0] > 0.0) || !det.is_finite() {
        return Err(format!("induced metric not positive definite (det = {det:e})"));
    }
    let grad_sq: f64 = (0..2).map(|i| (0..2).map(|j| gi[i][j] * jet.du[i] * jet.du[j]).sum::<f64>()).sum();
    if !(grad_sq < 1.0) {
        return Err(format!("|grad u|^2 in the graph metric is {grad_sq}, not below 1"));
    }
    let tilt = 1.0 / (1.0 - grad_sq).sqrt();
    // det ĝ / det g = det(I + X) with X = g^{-1}(ĝ − g).
    let mut x = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            x[i][j] = (0..2).map(|k| fr.inv_metric[i][k] * (g_hat[k][j] - fr.metric[k][j])).sum();
        }
    }
    let s = x[0][0] + x[1][1] + x[0][0] * x[1][1] - x[0][1] * x[1][0];
    let area_excess = fr.sqrt_det * s / ((1.0 + s).sqrt() + 1.0);

    let (h_hat, mean_curvature, second_form_sq) = match hess {
        None => ([[0.0; 2]; 2], 0.0, 0.0),
        Some(hs) => {
            let t = tangential(fr, jet);
            // c_k = u_m ĝ^{mn} (g_kn + u h_nk)
            let mut c = [0.0; 2];
            for (k, ck) in c.iter_mut().enumerate() {
                for m in 0..2 {
                    for n in 0..2 {
                        *ck += jet.du[m] * gi[m][n] * (fr.metric[k][n] + jet.u * fr.second_form[n][k]);
                    }
                }
            }
            let mut hh_hat = [[0.0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    let normal = fr.second_form[i][j] + jet.u * hh[i][j] - hs[i][j];
                    hh_hat[i][j] = normal / tilt + tilt * (t[i][j][0] * c[0] + t[i][j][1] * c[1]);
                }
            }
            let mut hmean = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    hmean += gi[i][j] * hh_hat[i][j];
                }
            }
            let a = mat_mul(&gi, &hh_hat);
            let sq = a[0][0] * a[0][0] + a[0][1] * a[1][0] + a[1][0] * a[0][1] + a[1][1] * a[1][1];
            (hh_hat, hmean, sq)
        }
    };
    Ok(NodeGeometry { g_hat, g_hat_inv: gi, h_hat, mean_curvature, tilt, grad_sq, area_excess, second_form_sq })
}

/// The expanded form of the error term, evaluated pointwise from a jet:
///
/// ```text
/// (ĝ^{ij} − g^{ij})(u_ij − h_i^k h_kj u) − h_ij (ĝ^{ij} − g^{ij} + 2 g^{im} g^{nj} h_mn u)
///   − u_m ĝ^{ij} ĝ^{mn} / (1 − u_i u_j ĝ^{ij}) · T^k_ij (g_kn + u h_nk)
/// ```
pub fn expanded_error(fr: &Frame, jet: &Jet) -> std::result::Result<f64, String> {
    let geo = node_geometry(fr, jet, None)?;
    let gi = &geo.g_hat_inv;
    let g = &fr.inv_metric;
    let hs = jet.hessian(fr);
    let hh = h_squared(fr);
    let t = tangential(fr, jet);
    let mut e = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let dg = gi[i][j] - g[i][j];
            let mut hup = 0.0;
            for m in 0..2 {
                for n in 0..2 {
                    hup += g[i][m] * g[n][j] * fr.second_form[m][n];
                }
            }
            e += dg * (hs[i][j] - hh[i][j] * jet.u);
            e -= fr.second_form[i][j] * (dg + 2.0 * hup * jet.u);
        }
    }
    let denom = 1.0 - geo.grad_sq;
    let mut last = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            for m in 0..2 {
                for n in 0..2 {
                    let w = jet.du[m] * gi[i][j] * gi[m][n];
                    if w == 0.0 {
                        continue;
                    }
                    for k in 0..2 {
                        last += w * t[i][j][k] * (fr.metric[k][n] + jet.u * fr.second_form[n][k]);
                    }
                }
            }
        }
    }
    Ok(e - last / denom)
}

/// `−V Ĥ − (g^{ij}∇²_ij u + |A|² u)` from a jet (continuum definition).
pub fn defining_error(fr: &Frame, jet: &Jet) -> std::result::Result<f64, String> {
    let hs = jet.hessian(fr);
    let geo = node_geometry(fr, jet, Some(&hs))?;
    let lap = fr.inv_metric[0][0] * hs[0][0] + fr.inv_metric[1][1] * hs[1][1] + 2.0 * fr.inv_metric[0][1] * hs[0][1];
    Ok(-geo.tilt * geo.mean_curvature - lap - fr.potential * jet.u)
}

/// Per-node graph geometry of one grid function.
///
/// Interior rows carry the full geometry; Dirichlet rows carry the metric
/// quantities only (their `ĥ` and `Ĥ` are zero).
#[derive(Clone, Debug)]
pub struct GraphGeometry {
    pub nodes: Vec<NodeGeometry>,
}

impl GraphGeometry {
    pub fn mean_curvature(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.mean_curvature).collect()
    }
    pub fn tilt(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.tilt).collect()
    }
}

pub fn graph_geometry(grid: &Grid, u: &GridFunction) -> Result<GraphGeometry> {
    graph_geometry_slice(grid, &u.values)
}

pub(crate) fn graph_geometry_slice(grid: &Grid, u: &[f64]) -> Result<GraphGeometry> {
    let p = partials(grid, u);
    let nt = grid.n_theta();
    let mut nodes = Vec::with_capacity(u.len());
    for i in 0..grid.n_v() {
        let fr = grid.frame(i);
        let interior = !grid.is_dirichlet_row(i);
        for j in 0..nt {
            let k = i * nt + j;
            let mut jet = Jet::from_partials(&p, k);
            if !interior {
                jet.d2u = [[0.0; 2]; 2];
            }
            let hs = jet.hessian(fr);
            let g = node_geometry(fr, &jet, interior.then_some(&hs))
                .map_err(|reason| Error::GraphBreakdown { i, j, reason })?;
            nodes.push(g);
        }
    }
    Ok(GraphGeometry { nodes })
}

/// `E(u) = −V Ĥ − (Δu + |A|² u)` with the grid Laplacian; zero on Dirichlet rows.
pub fn error_term(grid: &Grid, u: &GridFunction) -> Result<GridFunction> {
    Ok(GridFunction { n_v: grid.n_v(), n_theta: grid.n_theta(), values: error_slice(grid, &u.values)? })
}

pub(crate) fn error_slice(grid: &Grid, u: &[f64]) -> Result<Vec<f64>> {
    let p = partials(grid, u);
    let lap = laplace_slice(grid, u);
    let nt = grid.n_theta();
    let mut out = vec![0.0; u.len()];
    for i in 1..grid.n_v() - 1 {
        let fr = grid.frame(i);
        for j in 0..nt {
            let k = i * nt + j;
            let jet = Jet::from_partials(&p, k);
            let hs = jet.hessian(fr);
            let g = node_geometry(fr, &jet, Some(&hs)).map_err(|reason| Error::GraphBreakdown { i, j, reason })?;
            out[k] = -g.tilt * g.mean_curvature - lap[k] - fr.potential * u[k];
        }
    }
    Ok(out)
}

/// Expanded-form error term on the grid with the same stencils.
pub fn expanded_error_term(grid: &Grid, u: &GridFunction) -> Result<GridFunction> {
    let p = partials(grid, &u.values);
    let nt = grid.n_theta();
    let mut out = GridFunction::zeros(grid);
    for i in 1..grid.n_v() - 1 {
        let fr = grid.frame(i);
        for j in 0..nt {
            let k = i * nt + j;
            out.values[k] =
                expanded_error(fr, &Jet::from_partials(&p, k)).map_err(|reason| Error::GraphBreakdown { i, j, reason })?;
        }
    }
    Ok(out)
}

/// Synthetic stand-in for `E`: `c_q u² + c_g |∇u|²_g`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelNonlinearity {
    pub quadratic: f64,
    pub gradient: f64,
}

impl ModelNonlinearity {
    pub fn quadratic(c: f64) -> Self {
        ModelNonlinearity { quadratic: c, gradient: 0.0 }
    }
    pub fn gradient_quadratic(c: f64) -> Self {
        ModelNonlinearity { quadratic: 0.0, gradient: c }
    }
    pub fn mixed(cq: f64, cg: f64) -> Self {
        ModelNonlinearity { quadratic: cq, gradient: cg }
    }
}

pub fn model_nonlinearity(spec: &ModelNonlinearity, grid: &Grid, u: &GridFunction) -> GridFunction {
    GridFunction { n_v: grid.n_v(), n_theta: grid.n_theta(), values: model_slice(spec, grid, &u.values) }
}

fn model_slice(spec: &ModelNonlinearity, grid: &Grid, u: &[f64]) -> Vec<f64> {
    let nt = grid.n_theta();
    let mut out = vec![0.0; u.len()];
    let p = (spec.gradient != 0.0).then(|| partials(grid, u));
    for i in 1..grid.n_v() - 1 {
        let fr = grid.frame(i);
        for j in 0..nt {
            let k = i * nt + j;
            let mut val = spec.quadratic * u[k] * u[k];
            if let Some(p) = &p {
                val += spec.gradient * (fr.inv_metric[0][0] * p.u_v[k] * p.u_v[k] + fr.inv_metric[1][1] * p.u_t[k] * p.u_t[k]);
            }
            out[k] = val;
        }
    }
    out
}

/// The nonlinearity driving the flow.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Nonlinearity {
    /// The mean curvature flow error term.
    Geometric,
    Model(ModelNonlinearity),
}

impl Nonlinearity {
    pub fn eval_slice(&self, grid: &Grid, u: &[f64]) -> Result<Vec<f64>> {
        match self {
            Nonlinearity::Geometric => error_slice(grid, u),
            Nonlinearity::Model(m) => Ok(model_slice(m, grid, u)),
        }
    }
}

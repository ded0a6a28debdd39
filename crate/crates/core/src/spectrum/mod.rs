//! Dirichlet spectrum of the Jacobi operator `L = Δ + |A|²` on the grid.
//!
//! The operator is θ-independent, so the real Fourier basis of the grid
//! block-diagonalizes it. Block `m` is the radial problem `K x = λ M x` with
//! `M = diag(√det g)` and
//!
//! ```text
//! K_ii     = (w_{i−½} + w_{i+½})/Δv² + μ_m √det g / G − √det g · |A|²,
//! K_i,i+1  = −w_{i+½}/Δv²,
//! ```
//!
//! solved in the symmetric form `T = M^{−1/2} K M^{−1/2}`.

pub mod tridiag;

use crate::error::{invalid, Error, Result};
use crate::mesh::{AngularScheme, Grid, GridFunction};
use ndarray::Array2;
use serde::Serialize;

/// Symmetric tridiagonal radial problem of one angular wavenumber.
#[derive(Clone, Debug)]
pub struct RadialBlock {
    pub m: usize,
    pub mu: f64,
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl RadialBlock {
    pub fn len(&self) -> usize {
        self.diag.len()
    }
    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }
    /// Eigenvalues strictly below `x`.
    pub fn count_below(&self, x: f64) -> usize {
        tridiag::sturm_count(&self.diag, &self.off, x)
    }
    /// `k`-th smallest eigenvalue (0-based).
    pub fn eigenvalue(&self, k: usize) -> f64 {
        tridiag::bisect_eigenvalue(&self.diag, &self.off, k)
    }
    fn scale(&self) -> f64 {
        let (lo, hi) = tridiag::gershgorin(&self.diag, &self.off);
        lo.abs().max(hi.abs())
    }
}

/// Sparse matrix in row-list form.
#[derive(Clone, Debug)]
pub struct SparseMatrix {
    pub n: usize,
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl SparseMatrix {
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| r.iter().map(|&(c, a)| a * x[c]).sum()).collect()
    }
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i].iter().find(|&&(c, _)| c == j).map_or(0.0, |&(_, a)| a)
    }
}

/// Discrete Jacobi eigenproblem on the interior nodes of a grid.
#[derive(Clone, Debug)]
pub struct JacobiProblem {
    radius: f64,
    n_v: usize,
    n_theta: usize,
    dv: f64,
    dtheta: f64,
    scheme: AngularScheme,
    flux: Vec<f64>,
    mass: Vec<f64>,
    inv_g: Vec<f64>,
    potential: Vec<f64>,
}

pub fn assemble_jacobi(grid: &Grid) -> JacobiProblem {
    let n_v = grid.n_v();
    let rows = 1..n_v - 1;
    JacobiProblem {
        radius: grid.radius(),
        n_v,
        n_theta: grid.n_theta(),
        dv: grid.dv(),
        dtheta: grid.dtheta(),
        scheme: grid.scheme(),
        flux: (0..n_v - 1).map(|i| grid.flux(i)).collect(),
        mass: rows.clone().map(|i| grid.frame(i).sqrt_det).collect(),
        inv_g: rows.clone().map(|i| grid.frame(i).inv_metric[1][1]).collect(),
        potential: rows.map(|i| grid.frame(i).potential).collect(),
    }
}

impl JacobiProblem {
    pub fn radius(&self) -> f64 {
        self.radius
    }
    /// Interior radial rows.
    pub fn n_int(&self) -> usize {
        self.n_v - 2
    }
    pub fn n_theta(&self) -> usize {
        self.n_theta
    }
    /// Largest wavenumber `M/2`.
    pub fn max_wavenumber(&self) -> usize {
        self.n_theta / 2
    }
    /// Number of Fourier blocks carrying wavenumber `m`.
    pub fn multiplicity(&self, m: usize) -> usize {
        if m == 0 || 2 * m == self.n_theta {
            1
        } else {
            2
        }
    }

    /// Radial block of wavenumber `m`.
    pub fn block(&self, m: usize) -> RadialBlock {
        let n = self.n_int();
        let h2 = self.dv * self.dv;
        let mu = self.scheme.second_symbol(m, self.n_theta);
        let diag = (0..n)
            .map(|i| {
                let k = (self.flux[i] + self.flux[i + 1]) / h2 + self.mass[i] * (mu * self.inv_g[i] - self.potential[i]);
                k / self.mass[i]
            })
            .collect();
        let off = (0..n - 1)
            .map(|i| -self.flux[i + 1] / h2 / (self.mass[i] * self.mass[i + 1]).sqrt())
            .collect();
        RadialBlock { m, mu, diag, off }
    }

    /// Operator scale used for the kernel tolerance.
    pub fn norm_scale(&self) -> f64 {
        self.block(self.max_wavenumber()).scale().max(self.block(0).scale())
    }

    /// `1e−9 · ‖A‖_scale`.
    pub fn kernel_tol(&self) -> f64 {
        1e-9 * self.norm_scale()
    }

    /// Diagonal mass matrix `B` (quadrature weights of interior nodes).
    pub fn mass_matrix(&self) -> Vec<f64> {
        let mut b = Vec::with_capacity(self.n_int() * self.n_theta);
        for &m in &self.mass {
            for _ in 0..self.n_theta {
                b.push(m * self.dv * self.dtheta);
            }
        }
        b
    }

    /// Stiffness-with-potential matrix `A = B L` on interior nodes, so that
    /// `A φ = −λ B φ` is the discrete eigenproblem.
    pub fn stiffness(&self) -> SparseMatrix {
        let (n, nt) = (self.n_int(), self.n_theta);
        let h2 = self.dv * self.dv;
        let area = self.dv * self.dtheta;
        let ang = angular_second_matrix(self.scheme, nt);
        let mut rows = Vec::with_capacity(n * nt);
        for i in 0..n {
            let bw = self.mass[i] * area;
            for j in 0..nt {
                let mut row = Vec::new();
                if i > 0 {
                    row.push(((i - 1) * nt + j, area * self.flux[i] / h2));
                }
                for (jj, &a) in ang[j].iter().enumerate() {
                    let mut val = bw * self.inv_g[i] * a;
                    if jj == j {
                        val += -area * (self.flux[i] + self.flux[i + 1]) / h2 + bw * self.potential[i];
                    }
                    if val != 0.0 || jj == j {
                        row.push((i * nt + jj, val));
                    }
                }
                if i + 1 < n {
                    row.push(((i + 1) * nt + j, area * self.flux[i + 1] / h2));
                }
                row.sort_by_key(|&(c, _)| c);
                rows.push(row);
            }
        }
        SparseMatrix { n: n * nt, rows }
    }

    /// `(morse_index, kernel_dim)` from Sturm counts over every block.
    pub fn index_counts(&self) -> (usize, usize) {
        let tol = self.kernel_tol();
        let counts = crate::exec::map_range(self.max_wavenumber() + 1, |m| {
            let b = self.block(m);
            let neg = b.count_below(-tol);
            let ker = b.count_below(tol) - neg;
            (self.multiplicity(m) * neg, self.multiplicity(m) * ker)
        });
        counts.iter().fold((0, 0), |a, c| (a.0 + c.0, a.1 + c.1))
    }
}

/// Dense angular second-derivative matrix of a scheme on `n` angles.
fn angular_second_matrix(scheme: AngularScheme, n: usize) -> Vec<Vec<f64>> {
    let h = 2.0 * std::f64::consts::PI / n as f64;
    match scheme {
        AngularScheme::Fd2 => (0..n)
            .map(|j| {
                let mut r = vec![0.0; n];
                r[j] = -2.0 / (h * h);
                r[(j + 1) % n] += 1.0 / (h * h);
                r[(j + n - 1) % n] += 1.0 / (h * h);
                r
            })
            .collect(),
        AngularScheme::Spectral => {
            let basis = crate::mesh::FourierBasis::new(n);
            (0..n)
                .map(|j| {
                    (0..n)
                        .map(|jj| {
                            let mut s = 0.0;
                            for b in 0..n {
                                let mu = scheme.second_symbol(basis.wavenumber(b), n);
                                s -= basis.value(b, j) * mu * basis.value(b, jj) * h;
                            }
                            s
                        })
                        .collect()
                })
                .collect()
        }
    }
}

/// How many eigenpairs to retain.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModeCount {
    All,
    Lowest(usize),
}

/// One retained eigenpair: radial vector `k` of wavenumber `m`, placed in
/// Fourier block `block`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Mode {
    pub lambda: f64,
    pub block: usize,
    pub m: usize,
    pub k: usize,
}

/// Retained radial eigenvectors of one wavenumber, columns normalized so that
/// `Σ_i √det g_i Δv R_i² = 1`.
#[derive(Clone, Debug)]
pub struct RadialBasis {
    pub m: usize,
    pub lambdas: Vec<f64>,
    pub vectors: Array2<f64>,
}

/// Retained Dirichlet eigenpairs, ascending.
#[derive(Clone, Debug)]
pub struct SpectralData {
    pub radius: f64,
    pub lambdas: Vec<f64>,
    pub modes: Vec<Mode>,
    pub morse_index: usize,
    pub kernel_dim: usize,
    pub kernel_tol: f64,
    pub complete: bool,
    bases: Vec<RadialBasis>,
    blocks: Vec<RadialBlock>,
    mass: Vec<f64>,
    dv: f64,
    n_theta: usize,
}

pub const EIG_TOL: f64 = 1e-8;

pub fn compute_spectrum(problem: &JacobiProblem, count: ModeCount) -> Result<SpectralData> {
    let n = problem.n_int();
    let nt = problem.n_theta;
    let total = n * nt;
    let (morse_index, kernel_dim) = problem.index_counts();
    let want = match count {
        ModeCount::All => total,
        ModeCount::Lowest(k) => {
            if k == 0 || k > total {
                return Err(invalid(format!("mode count must be in 1..={total}, got {k}")));
            }
            if k < morse_index {
                return Err(invalid(format!("mode count {k} is below the Morse index {morse_index}")));
            }
            k
        }
    };
    let mmax = problem.max_wavenumber();
    let blocks: Vec<RadialBlock> = (0..=mmax).map(|m| problem.block(m)).collect();
    let per_m = want.min(n);
    type Eigenpairs = (Vec<f64>, Vec<Vec<f64>>);
    let solved: Vec<Result<Eigenpairs>> = crate::exec::map_slice(&blocks, |b| {
        if per_m == n {
            let (vals, vecs) = tridiag::ql_eigen(&b.diag, &b.off)?;
            Ok((vals, vecs.chunks(n).map(|c| c.to_vec()).collect()))
        } else {
            let vals: Vec<f64> = (0..per_m).map(|k| b.eigenvalue(k)).collect();
            let vecs = vals.iter().map(|&l| tridiag::eigenvector(&b.diag, &b.off, l)).collect();
            Ok((vals, vecs))
        }
    });
    let mut bases = Vec::with_capacity(mmax + 1);
    for (b, res) in blocks.iter().zip(solved) {
        let (vals, vecs) = res?;
        let mut mat = Array2::zeros((n, vals.len()));
        for (k, y) in vecs.iter().enumerate() {
            let r = tridiag::residual(&b.diag, &b.off, vals[k], y);
            let tol = EIG_TOL * vals[k].abs().max(1.0);
            if !(r <= tol) {
                return Err(Error::SolverFailure(format!(
                    "residual {r:e} exceeds {tol:e} for eigenpair {k} of wavenumber {} (lambda = {})",
                    b.m, vals[k]
                )));
            }
            let sg = orientation(y);
            for i in 0..n {
                mat[[i, k]] = sg * y[i] / (problem.mass[i] * problem.dv).sqrt();
            }
        }
        bases.push(RadialBasis { m: b.m, lambdas: vals, vectors: mat });
    }
    let basis = crate::mesh::FourierBasis::new(nt);
    let mut modes = Vec::new();
    for blk in 0..nt {
        let m = basis.wavenumber(blk);
        for (k, &lambda) in bases[m].lambdas.iter().enumerate() {
            modes.push(Mode { lambda, block: blk, m, k });
        }
    }
    modes.sort_by(|a, b| a.lambda.total_cmp(&b.lambda).then(a.block.cmp(&b.block)));
    modes.truncate(want);
    Ok(SpectralData {
        radius: problem.radius,
        lambdas: modes.iter().map(|m| m.lambda).collect(),
        complete: modes.len() == total,
        modes,
        morse_index,
        kernel_dim,
        kernel_tol: problem.kernel_tol(),
        bases,
        blocks,
        mass: problem.mass.clone(),
        dv: problem.dv,
        n_theta: nt,
    })
}

/// Sign convention: the first component above 1e−3 of the maximum is positive.
fn orientation(y: &[f64]) -> f64 {
    let top = y.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let first = y.iter().find(|x| x.abs() > 1e-3 * top).copied().unwrap_or(1.0);
    if first < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// `log|φ|` and sign of one mode on interior rows, factored as radial × angular.
#[derive(Clone, Debug)]
pub struct LogProfile {
    pub block: usize,
    pub radial_log: Vec<f64>,
    pub radial_sign: Vec<f64>,
}

impl SpectralData {
    pub fn len(&self) -> usize {
        self.modes.len()
    }
    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }
    pub fn n_int(&self) -> usize {
        self.mass.len()
    }
    pub fn n_theta(&self) -> usize {
        self.n_theta
    }
    pub fn basis(&self, m: usize) -> &RadialBasis {
        &self.bases[m]
    }
    pub fn bases(&self) -> &[RadialBasis] {
        &self.bases
    }
    pub fn block(&self, m: usize) -> &RadialBlock {
        &self.blocks[m]
    }
    /// Radial quadrature weights `√det g_i Δv` on interior rows.
    pub fn radial_weights(&self) -> Vec<f64> {
        self.mass.iter().map(|m| m * self.dv).collect()
    }

    /// Radial profile of mode `idx` on interior rows.
    pub fn radial(&self, idx: usize) -> Vec<f64> {
        let md = self.modes[idx];
        self.bases[md.m].vectors.column(md.k).to_vec()
    }

    /// Mode `idx` as a grid function (zero on Dirichlet rows).
    pub fn mode_function(&self, grid: &Grid, idx: usize) -> GridFunction {
        let md = self.modes[idx];
        let r = self.radial(idx);
        let nt = grid.n_theta();
        let mut f = GridFunction::zeros(grid);
        for (i, ri) in r.iter().enumerate() {
            for j in 0..nt {
                f.values[(i + 1) * nt + j] = ri * grid.basis().value(md.block, j);
            }
        }
        f
    }

    /// Underflow-free `log|φ|` of mode `idx`.
    pub fn log_profile(&self, idx: usize) -> LogProfile {
        let md = self.modes[idx];
        let b = &self.blocks[md.m];
        let (logs, signs) = tridiag::log_eigenvector(&b.diag, &b.off, md.lambda);
        // Match the orientation of the stored vector.
        let col = self.bases[md.m].vectors.column(md.k);
        let piv = (0..col.len()).max_by(|&a, &c| col[a].abs().total_cmp(&col[c].abs())).unwrap_or(0);
        let flip = if col[piv] * signs[piv] < 0.0 { -1.0 } else { 1.0 };
        let radial_log = logs.iter().zip(&self.mass).map(|(l, m)| l - 0.5 * (m * self.dv).ln()).collect();
        LogProfile { block: md.block, radial_log, radial_sign: signs.iter().map(|s| s * flip).collect() }
    }
}

/// Groups of equal negative eigenvalues with gap parameters.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModeSplit {
    pub distinct: Vec<f64>,
    /// Mode indices of each level.
    pub groups: Vec<Vec<usize>>,
    pub epsilon: f64,
    pub deltas: Vec<f64>,
}

impl ModeSplit {
    pub fn levels(&self) -> usize {
        self.distinct.len()
    }
    /// Admissible open interval for `−δ_l` (0-based level).
    pub fn delta_interval(&self, l: usize) -> (f64, f64) {
        level_interval(&self.distinct, self.epsilon, l)
    }
}

fn level_interval(distinct: &[f64], eps: f64, l: usize) -> (f64, f64) {
    let lam = distinct[l];
    let mut lo = 2.0 * (lam + eps);
    if l > 0 {
        lo = lo.max(distinct[l - 1] + eps);
    }
    (lo, lam - eps)
}

/// Negative eigenvalues of a spectrum grouped into levels.
pub fn distinct_negative(lambdas: &[f64], morse_index: usize) -> (Vec<f64>, Vec<Vec<usize>>) {
    let mut distinct: Vec<f64> = Vec::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, &l) in lambdas.iter().take(morse_index).enumerate() {
        match distinct.last() {
            Some(&p) if (l - p).abs() <= 1e-8 * p.abs().max(1.0) => groups.last_mut().unwrap().push(i),
            _ => {
                distinct.push(l);
                groups.push(vec![i]);
            }
        }
    }
    (distinct, groups)
}

/// Split with the gap `ε` and midpoints `δ_l`.
pub fn group_and_select(spectral: &SpectralData, epsilon: Option<f64>) -> Result<ModeSplit> {
    split_eigenvalues(&spectral.lambdas, spectral.morse_index, epsilon)
}

/// [`group_and_select`] on a bare ascending eigenvalue list.
pub fn split_eigenvalues(lambdas: &[f64], morse_index: usize, epsilon: Option<f64>) -> Result<ModeSplit> {
    if morse_index == 0 {
        return Err(Error::NoUnstableModes);
    }
    let (distinct, groups) = distinct_negative(lambdas, morse_index);
    let gaps: Vec<f64> = distinct.windows(2).map(|w| w[1] - w[0]).collect();
    let min_gap = gaps.iter().cloned().fold(f64::INFINITY, f64::min);
    let top = distinct.last().unwrap().abs();
    let eps = match epsilon {
        Some(e) => e,
        None => {
            let base = if gaps.is_empty() { top } else { min_gap };
            (base / 20.0).min(top / 6.0)
        }
    };
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidEpsilon { epsilon: eps, reason: "must be positive".into() });
    }
    if !gaps.is_empty() && !(eps < 0.1 * min_gap) {
        return Err(Error::InvalidEpsilon {
            epsilon: eps,
            reason: format!("must be below one tenth of the minimal gap {min_gap}"),
        });
    }
    if !(eps < top / 3.0) {
        return Err(Error::InvalidEpsilon {
            epsilon: eps,
            reason: format!("must be below |λ'_L|/3 = {}", top / 3.0),
        });
    }
    let deltas = (0..distinct.len())
        .map(|l| {
            let (lo, hi) = level_interval(&distinct, eps, l);
            -0.5 * (lo + hi)
        })
        .collect();
    Ok(ModeSplit { distinct, groups, epsilon: eps, deltas })
}

/// `(f, φ_j)` for every `j` in `which`.
pub fn project(grid: &Grid, f: &GridFunction, spectral: &SpectralData, which: &[usize]) -> Vec<f64> {
    project_slice(grid, &f.values, spectral, which)
}

pub(crate) fn project_slice(grid: &Grid, f: &[f64], spectral: &SpectralData, which: &[usize]) -> Vec<f64> {
    let nt = grid.n_theta();
    let n = spectral.n_int();
    let w = spectral.radial_weights();
    let mut coeffs = vec![0.0; n * nt];
    for i in 0..n {
        let row = &f[(i + 1) * nt..(i + 2) * nt];
        grid.basis().analyze(row, &mut coeffs[i * nt..(i + 1) * nt]);
    }
    which
        .iter()
        .map(|&idx| {
            let md = spectral.modes[idx];
            let col = spectral.bases[md.m].vectors.column(md.k);
            (0..n).map(|i| w[i] * col[i] * coeffs[i * nt + md.block]).sum()
        })
        .collect()
}

/// `ι(a)(t) = Σ_j a_j e^{−λ_j t} φ_j` over the modes in `group`.
pub fn inject(grid: &Grid, a: &[f64], spectral: &SpectralData, group: &[usize], t: f64) -> GridFunction {
    let mut f = GridFunction::zeros(grid);
    let nt = grid.n_theta();
    for (&aj, &idx) in a.iter().zip(group) {
        let md = spectral.modes[idx];
        let s = aj * (-md.lambda * t).exp();
        let col = spectral.bases[md.m].vectors.column(md.k);
        for (i, r) in col.iter().enumerate() {
            for j in 0..nt {
                f.values[(i + 1) * nt + j] += s * r * grid.basis().value(md.block, j);
            }
        }
    }
    f
}

#[derive(Clone, Debug, Serialize)]
pub struct HarnackReport {
    pub radius: f64,
    pub sup_gradient_log: f64,
    pub sup_angular_component: f64,
    /// `v` where the supremum is attained.
    pub argmax_v: f64,
    /// Interior rows excluded on each side.
    pub collar_rows: usize,
}

/// `sup |∇ log φ₁|_g` over interior nodes farther than `collar` (intrinsic
/// distance, and at least one cell) from the Dirichlet boundary.
pub fn harnack_report(spectral: &SpectralData, grid: &Grid, collar: f64) -> Result<HarnackReport> {
    if spectral.morse_index == 0 {
        return Err(Error::NoUnstableModes);
    }
    let prof = first_mode_profile(spectral, grid)?;
    let model = grid.model();
    let nt = grid.n_theta();
    let nv = grid.n_v();
    let rho_edge = model.intrinsic_radius(grid.v_radius(), 0.0);
    let (mut sup, mut sup_ang, mut arg) = (0.0f64, 0.0f64, 0.0);
    let mut first_kept = None;
    let h = grid.dv();
    for i in 2..nv - 2 {
        let v = grid.v_nodes()[i];
        if rho_edge - model.intrinsic_radius(v, 0.0) < collar {
            continue;
        }
        first_kept.get_or_insert(i);
        let fr = grid.frame(i);
        let dlog_v = (prof[i] - prof[i - 2]) / (2.0 * h);
        let row: Vec<f64> = (0..nt).map(|j| prof[i - 1] + grid.basis().value(0, j).ln()).collect();
        for j in 0..nt {
            let dlog_t = (row[(j + 1) % nt] - row[(j + nt - 1) % nt]) / (2.0 * grid.dtheta());
            let ang = (fr.inv_metric[1][1] * dlog_t * dlog_t).sqrt();
            let g = (fr.inv_metric[0][0] * dlog_v * dlog_v).sqrt().hypot(ang);
            sup_ang = sup_ang.max(ang);
            if g > sup {
                sup = g;
                arg = v;
            }
        }
    }
    let collar_rows = first_kept.map_or(nv - 2, |i| i - 1);
    Ok(HarnackReport { radius: grid.radius(), sup_gradient_log: sup, sup_angular_component: sup_ang, argmax_v: arg, collar_rows })
}

/// `log φ₁` on interior rows after checking sign-definiteness.
fn first_mode_profile(spectral: &SpectralData, grid: &Grid) -> Result<Vec<f64>> {
    let prof = spectral.log_profile(0);
    let nt = grid.n_theta();
    if prof.block != 0 {
        // Non-constant angular factor: changes sign along θ.
        let j = (0..nt).find(|&j| grid.basis().value(prof.block, j) <= 0.0).unwrap_or(0);
        let i = prof.radial_sign.len() / 2;
        return Err(Error::NotFirstEigenfunction { node: (i + 1) * nt + j });
    }
    let positive = prof.radial_sign.iter().filter(|&&s| s > 0.0).count();
    let major = if 2 * positive >= prof.radial_sign.len() { 1.0 } else { -1.0 };
    if let Some(i) = prof.radial_sign.iter().position(|&s| s != major) {
        return Err(Error::NotFirstEigenfunction { node: (i + 1) * nt });
    }
    Ok(prof.radial_log)
}

#[derive(Clone, Debug, Serialize)]
pub struct QuotientEntry {
    pub index: usize,
    pub lambda: f64,
    pub exponent: f64,
    pub sup_ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct QuotientReport {
    pub radius: f64,
    pub reference_radius: f64,
    pub epsilon: f64,
    pub lambda_reference: f64,
    pub entries: Vec<QuotientEntry>,
}

/// `sup |φ_i| / φ_ref^p` over interior nodes of `grid`, where `φ_ref` is the
/// ground state of a reference spectrum on a grid containing `grid`.
pub fn quotient_sup(
    spectral: &SpectralData,
    grid: &Grid,
    idx: usize,
    reference: &SpectralData,
    ref_grid: &Grid,
    p: f64,
) -> Result<f64> {
    let offset = aligned_offset(grid, ref_grid)?;
    if reference.morse_index == 0 {
        return Err(Error::NoUnstableModes);
    }
    let refp = first_mode_profile(reference, ref_grid)?;
    let prof = spectral.log_profile(idx);
    let nt = grid.n_theta();
    let mut sup = f64::NEG_INFINITY;
    for (i, (&l, _)) in prof.radial_log.iter().zip(&prof.radial_sign).enumerate() {
        let lr = refp[i + offset] + ref_grid.basis().value(0, 0).ln();
        for j in 0..nt {
            let a = grid.basis().value(prof.block, j).abs();
            if a == 0.0 {
                continue;
            }
            sup = sup.max(l + a.ln() - p * lr);
        }
    }
    Ok(sup.exp())
}

fn aligned_offset(grid: &Grid, ref_grid: &Grid) -> Result<usize> {
    let bad = |m: String| Err(Error::InvalidComparison(m));
    if grid.model() != ref_grid.model() {
        return bad("grids are built on different models".into());
    }
    if grid.n_theta() != ref_grid.n_theta() || grid.scheme() != ref_grid.scheme() {
        return bad("angular discretizations differ".into());
    }
    if (grid.dv() - ref_grid.dv()).abs() > 1e-12 * grid.dv() {
        return bad(format!("radial spacings differ: {} vs {}", grid.dv(), ref_grid.dv()));
    }
    if grid.v_radius() > ref_grid.v_radius() + 1e-12 {
        return bad("reference domain does not contain the truncation".into());
    }
    let shift = (ref_grid.v_radius() - grid.v_radius()) / grid.dv();
    if (shift - shift.round()).abs() > 1e-6 {
        return bad("grid nodes are not aligned with reference nodes".into());
    }
    Ok(shift.round() as usize)
}

/// Ratios `sup |φ_{R,i}| / φ^{(1−ε) λ_{R,i}/λ}` for every negative mode.
pub fn quotient_report(
    spectral: &SpectralData,
    grid: &Grid,
    reference: &SpectralData,
    ref_grid: &Grid,
    epsilon: f64,
) -> Result<QuotientReport> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::InvalidEpsilon { epsilon, reason: "must lie in (0, 1/2)".into() });
    }
    if spectral.morse_index == 0 {
        return Err(Error::NoUnstableModes);
    }
    let lam = reference.lambdas[0];
    let mut entries = Vec::new();
    for idx in 0..spectral.morse_index {
        let li = spectral.lambdas[idx];
        let p = (1.0 - epsilon) * li / lam;
        entries.push(QuotientEntry { index: idx + 1, lambda: li, exponent: p, sup_ratio: quotient_sup(spectral, grid, idx, reference, ref_grid, p)? });
    }
    Ok(QuotientReport { radius: grid.radius(), reference_radius: ref_grid.radius(), epsilon, lambda_reference: lam, entries })
}

//! Symmetric tridiagonal eigensolvers.
//!
//! A matrix is given by its diagonal `d` (length `n`) and off-diagonal `e`
//! (length `n − 1`, `e[i] = T[i][i+1]`).

use crate::error::{Error, Result};

/// Number of eigenvalues strictly below `x` (Sturm sequence count).
pub fn sturm_count(d: &[f64], e: &[f64], x: f64) -> usize {
    let n = d.len();
    let mut count = 0;
    let mut q = d[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..n {
        if q == 0.0 {
            q = f64::EPSILON * (e[i - 1].abs() + f64::MIN_POSITIVE);
        }
        q = d[i] - x - e[i - 1] * e[i - 1] / q;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Interval containing every eigenvalue.
pub fn gershgorin(d: &[f64], e: &[f64]) -> (f64, f64) {
    let n = d.len();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..n {
        let r = if i > 0 { e[i - 1].abs() } else { 0.0 } + if i + 1 < n { e[i].abs() } else { 0.0 };
        lo = lo.min(d[i] - r);
        hi = hi.max(d[i] + r);
    }
    let pad = 1e-12 * (hi - lo).abs().max(1.0);
    (lo - pad, hi + pad)
}

/// The `k`-th smallest eigenvalue (0-based) by bisection.
pub fn bisect_eigenvalue(d: &[f64], e: &[f64], k: usize) -> f64 {
    let (mut lo, mut hi) = gershgorin(d, e);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(d, e, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) + f64::MIN_POSITIVE {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Eigenvector of an isolated eigenvalue as `(log|y_i|, sign y_i)` with
/// `Σ y_i² = 1`. Built from a twisted pair of ratio recursions, so deeply
/// decaying tails are represented without underflow.
pub fn log_eigenvector(d: &[f64], e: &[f64], lambda: f64) -> (Vec<f64>, Vec<f64>) {
    let n = d.len();
    if n == 1 {
        return (vec![0.0], vec![1.0]);
    }
    let guard = |x: f64, scale: f64| if x == 0.0 { f64::EPSILON * scale + f64::MIN_POSITIVE } else { x };
    // fwd[i] = y_{i+1} / y_i from the left, i in 0..n-1.
    let mut fwd = vec![0.0; n - 1];
    fwd[0] = -(d[0] - lambda) / e[0];
    for i in 1..n - 1 {
        let prev = guard(fwd[i - 1], 1.0);
        fwd[i] = -((d[i] - lambda) + e[i - 1] / prev) / e[i];
    }
    // bwd[i] = y_{i-1} / y_i from the right, i in 1..n.
    let mut bwd = vec![0.0; n];
    bwd[n - 1] = -(d[n - 1] - lambda) / e[n - 2];
    for i in (1..n - 1).rev() {
        let next = guard(bwd[i + 1], 1.0);
        bwd[i] = -((d[i] - lambda) + e[i] / next) / e[i - 1];
    }
    // Twist index: minimize |γ_k| = |(d_k − λ) + e_{k−1} y_{k−1}/y_k + e_k y_{k+1}/y_k|.
    let mut best = (f64::INFINITY, 0usize);
    for k in 0..n {
        let mut g = d[k] - lambda;
        if k > 0 {
            g += e[k - 1] / guard(fwd[k - 1], 1.0);
        }
        if k + 1 < n {
            g += e[k] / guard(bwd[k + 1], 1.0);
        }
        if g.abs() < best.0 {
            best = (g.abs(), k);
        }
    }
    let k = best.1;
    let mut logs = vec![0.0; n];
    let mut signs = vec![1.0; n];
    for i in (0..k).rev() {
        let r = fwd[i];
        logs[i] = logs[i + 1] - r.abs().ln();
        signs[i] = signs[i + 1] * r.signum();
    }
    for i in k + 1..n {
        let s = bwd[i];
        logs[i] = logs[i - 1] - s.abs().ln();
        signs[i] = signs[i - 1] * s.signum();
    }
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logs.iter().map(|&l| (2.0 * (l - top)).exp()).sum();
    let shift = top + 0.5 * sum.ln();
    for l in logs.iter_mut() {
        *l -= shift;
    }
    (logs, signs)
}

/// Unit eigenvector of an isolated eigenvalue.
pub fn eigenvector(d: &[f64], e: &[f64], lambda: f64) -> Vec<f64> {
    let (logs, signs) = log_eigenvector(d, e, lambda);
    logs.iter().zip(&signs).map(|(l, s)| s * l.exp()).collect()
}

/// All eigenpairs by the implicit QL method. Returns ascending eigenvalues
/// and eigenvectors stored row-wise (`vectors[k * n + i]` is component `i`
/// of vector `k`).
pub fn ql_eigen(d: &[f64], e: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = d.len();
    let mut d = d.to_vec();
    let mut e: Vec<f64> = e.iter().cloned().chain(std::iter::once(0.0)).collect();
    let mut z = vec![0.0; n * n];
    for k in 0..n {
        z[k * n + k] = 1.0;
    }
    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 100 {
                    return Err(Error::SolverFailure(format!(
                        "QL iteration did not converge for eigenvalue {l} of {n}"
                    )));
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let (mut c, mut c2, mut c3) = (1.0, 1.0, 1.0);
                let el1 = e[l + 1];
                let (mut s, mut s2) = (0.0, 0.0);
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    let h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    let (lo, hi) = z.split_at_mut((i + 1) * n);
                    let zi = &mut lo[i * n..];
                    let zi1 = &mut hi[..n];
                    for k in 0..n {
                        let h = zi1[k];
                        zi1[k] = s * zi[k] + c * h;
                        zi[k] = c * zi[k] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
    let vals = order.iter().map(|&k| d[k]).collect();
    let mut vecs = Vec::with_capacity(n * n);
    for &k in &order {
        let row = &z[k * n..(k + 1) * n];
        // Deterministic sign: largest-magnitude component positive.
        let piv = row.iter().cloned().fold(0.0f64, |a, x| if x.abs() > a.abs() { x } else { a });
        let sg = if piv < 0.0 { -1.0 } else { 1.0 };
        vecs.extend(row.iter().map(|x| sg * x));
    }
    Ok((vals, vecs))
}

/// `‖T y − λ y‖_∞`.
pub fn residual(d: &[f64], e: &[f64], lambda: f64, y: &[f64]) -> f64 {
    let n = d.len();
    let mut r: f64 = 0.0;
    for i in 0..n {
        let mut t = (d[i] - lambda) * y[i];
        if i > 0 {
            t += e[i - 1] * y[i - 1];
        }
        if i + 1 < n {
            t += e[i] * y[i + 1];
        }
        r = r.max(t.abs());
    }
    r
}

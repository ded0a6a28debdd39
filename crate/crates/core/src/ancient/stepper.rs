//! Independent forward time stepper on the grid operator (no eigenbasis):
//! `(I − dt L_h) u^{n+1} = u^n + dt E(u^n)`, solved by preconditioned
//! conjugate gradients on the `B`-symmetrized system.

use crate::error::{Error, Result};
use crate::mesh::{angular_derivatives, laplace_slice, Grid};
use crate::nonlinear::Nonlinearity;

struct Operator<'a> {
    grid: &'a Grid,
    dt: f64,
    /// Per-column tridiagonal preconditioner `(lower, diag, upper)` over interior rows.
    pre: (Vec<f64>, Vec<f64>, Vec<f64>),
}

impl<'a> Operator<'a> {
    fn new(grid: &'a Grid, dt: f64) -> Self {
        let nt = grid.n_theta();
        let mut delta = vec![0.0; nt];
        delta[0] = 1.0;
        let (mut d1, mut d2) = (vec![0.0; nt], vec![0.0; nt]);
        angular_derivatives(grid, &delta, &mut d1, &mut d2);
        let ang_diag = d2[0];
        let n = grid.n_v() - 2;
        let h2 = grid.dv() * grid.dv();
        let (mut lo, mut di, mut up) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        for r in 0..n {
            let i = r + 1;
            let fr = grid.frame(i);
            let w = grid.weight(i);
            let (fm, fp) = (grid.flux(i - 1), grid.flux(i));
            let rad = -(fm + fp) / (h2 * fr.sqrt_det);
            di[r] = w * (1.0 - dt * (rad + fr.inv_metric[1][1] * ang_diag + fr.potential));
            lo[r] = -w * dt * fm / (h2 * fr.sqrt_det);
            up[r] = -w * dt * fp / (h2 * fr.sqrt_det);
        }
        Operator { grid, dt, pre: (lo, di, up) }
    }

    /// `B (x − dt (Δ_h x + W x))` on interior rows, zero elsewhere.
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let g = self.grid;
        let nt = g.n_theta();
        let lap = laplace_slice(g, x);
        let mut out = vec![0.0; x.len()];
        for i in 1..g.n_v() - 1 {
            let (w, pot) = (g.weight(i), g.frame(i).potential);
            for j in 0..nt {
                let k = i * nt + j;
                out[k] = w * (x[k] - self.dt * (lap[k] + pot * x[k]));
            }
        }
        out
    }

    fn precondition(&self, r: &[f64]) -> Vec<f64> {
        let g = self.grid;
        let nt = g.n_theta();
        let n = g.n_v() - 2;
        let (lo, di, up) = &self.pre;
        let mut z = vec![0.0; r.len()];
        let (mut cp, mut dp) = (vec![0.0; n], vec![0.0; n]);
        for j in 0..nt {
            let rr = |row: usize| r[(row + 1) * nt + j];
            let mut beta = di[0];
            dp[0] = rr(0) / beta;
            for t in 1..n {
                cp[t - 1] = up[t - 1] / beta;
                beta = di[t] - lo[t] * cp[t - 1];
                dp[t] = (rr(t) - lo[t] * dp[t - 1]) / beta;
            }
            for t in (0..n - 1).rev() {
                dp[t] -= cp[t] * dp[t + 1];
            }
            for t in 0..n {
                z[(t + 1) * nt + j] = dp[t];
            }
        }
        z
    }

    fn solve(&self, b: &[f64], guess: &[f64]) -> Result<Vec<f64>> {
        let dot = |a: &[f64], c: &[f64]| a.iter().zip(c).map(|(x, y)| x * y).sum::<f64>();
        let mut x = guess.to_vec();
        let ax = self.apply(&x);
        let mut r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
        let bnorm = dot(b, b).sqrt();
        if bnorm == 0.0 {
            return Ok(vec![0.0; b.len()]);
        }
        let mut z = self.precondition(&r);
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        for _ in 0..1000 {
            if dot(&r, &r).sqrt() <= 1e-14 * bnorm {
                return Ok(x);
            }
            let ap = self.apply(&p);
            let alpha = rz / dot(&p, &ap);
            for k in 0..x.len() {
                x[k] += alpha * p[k];
                r[k] -= alpha * ap[k];
            }
            z = self.precondition(&r);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for k in 0..p.len() {
                p[k] = z[k] + beta * p[k];
            }
        }
        if dot(&r, &r).sqrt() <= 1e-10 * bnorm {
            Ok(x)
        } else {
            Err(Error::SolverFailure("conjugate gradients did not converge in the forward stepper".into()))
        }
    }
}

/// Advance `u0` by `steps` semi-implicit steps of size `dt`.
pub fn semi_implicit_forward(grid: &Grid, nonlinearity: &Nonlinearity, u0: &[f64], steps: usize, dt: f64) -> Result<Vec<f64>> {
    let op = Operator::new(grid, dt);
    let nt = grid.n_theta();
    let mut u = u0.to_vec();
    for _ in 0..steps {
        let e = nonlinearity.eval_slice(grid, &u)?;
        let mut b = vec![0.0; u.len()];
        for i in 1..grid.n_v() - 1 {
            let w = grid.weight(i);
            for j in 0..nt {
                let k = i * nt + j;
                b[k] = w * (u[k] + dt * e[k]);
            }
        }
        u = op.solve(&b, &u)?;
    }
    Ok(u)
}

//! Independent reference computations shared by the integration tests.
#![allow(dead_code, clippy::needless_range_loop)]

use ancient_mcf_core::nonlinear::Jet;
use std::f64::consts::FRAC_PI_2;

/// Potential of the radial catenoid eigenproblem `φ'' + q φ = 0`.
fn catenoid_q(v: f64, lambda: f64) -> f64 {
    let c = v.cosh();
    2.0 / (c * c) + lambda * c * c
}

/// Prüfer angle of `φ'' + qφ = 0` at `v = 0`, integrating from `φ(v_r) = 0`.
pub fn prufer_angle_at_origin(v_r: f64, lambda: f64) -> f64 {
    let rhs = |v: f64, th: f64| {
        let (s, c) = th.sin_cos();
        c * c + catenoid_q(v, lambda) * s * s
    };
    let mut v = v_r;
    let mut th = 0.0;
    while v > 0.0 {
        let h = (2e-3f64).min(0.3 / (catenoid_q(v, lambda).abs() + 1.0).sqrt()).min(v);
        let k1 = rhs(v, th);
        let k2 = rhs(v - 0.5 * h, th - 0.5 * h * k1);
        let k3 = rhs(v - 0.5 * h, th - 0.5 * h * k2);
        let k4 = rhs(v - h, th - h * k3);
        th -= h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
        v -= h;
    }
    th
}

/// Lowest Dirichlet eigenvalue of the catenoid Jacobi operator on
/// `|v| < v_r` in the convention `Lφ = −λφ`, by shooting on the even
/// ground state (`φ'(0) = 0` means the angle reaches `−π/2`).
pub fn catenoid_ground_state(v_r: f64) -> f64 {
    let f = |l: f64| prufer_angle_at_origin(v_r, l) + FRAC_PI_2;
    let (mut lo, mut hi) = (-2.0, 0.0);
    assert!(f(lo) > 0.0 && f(hi) < 0.0, "shooting bracket does not straddle the ground state");
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Solution of `c' = −λc + e^{κt}` with `c(0) = 0`.
pub fn backward_closed_form(lambda: f64, kappa: f64, t: f64) -> f64 {
    ((kappa * t).exp() - (-lambda * t).exp()) / (kappa + lambda)
}

/// Solution of `c' = −λc + e^{κt}` with `c(t0) = 0`.
pub fn forward_closed_form(lambda: f64, kappa: f64, t0: f64, t: f64) -> f64 {
    ((kappa * t).exp() - (-lambda * (t - t0)).exp() * (kappa * t0).exp()) / (kappa + lambda)
}

/// Exact jet of `u = s·sech v·(1 + 0.3 cos θ)`.
pub fn sech_jet(s: f64, v: f64, theta: f64) -> Jet {
    let sech = 1.0 / v.cosh();
    let th = v.tanh();
    let (sn, cs) = theta.sin_cos();
    let ang = 1.0 + 0.3 * cs;
    let u_vt = 0.3 * s * sech * th * sn;
    Jet {
        u: s * sech * ang,
        du: [-s * sech * th * ang, -0.3 * s * sech * sn],
        d2u: [[s * sech * (th * th - sech * sech) * ang, u_vt], [u_vt, -0.3 * s * sech * cs]],
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Hyper-dual number `a + b ε₁ + c ε₂ + d ε₁ε₂` (`ε₁² = ε₂² = 0`): exact
/// first and mixed second derivatives by forward evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HyperDual {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl HyperDual {
    pub fn constant(a: f64) -> Self {
        HyperDual { a, b: 0.0, c: 0.0, d: 0.0 }
    }

    /// Variable `x` seeded in the `ε₁` and/or `ε₂` directions.
    pub fn seed(x: f64, e1: bool, e2: bool) -> Self {
        HyperDual { a: x, b: if e1 { 1.0 } else { 0.0 }, c: if e2 { 1.0 } else { 0.0 }, d: 0.0 }
    }

    fn chain(self, f: f64, f1: f64, f2: f64) -> Self {
        HyperDual { a: f, b: f1 * self.b, c: f1 * self.c, d: f1 * self.d + f2 * self.b * self.c }
    }

    pub fn sin(self) -> Self {
        self.chain(self.a.sin(), self.a.cos(), -self.a.sin())
    }
    pub fn cos(self) -> Self {
        self.chain(self.a.cos(), -self.a.sin(), -self.a.cos())
    }
    pub fn sinh(self) -> Self {
        self.chain(self.a.sinh(), self.a.cosh(), self.a.sinh())
    }
    pub fn cosh(self) -> Self {
        self.chain(self.a.cosh(), self.a.sinh(), self.a.cosh())
    }
    pub fn recip(self) -> Self {
        let r = 1.0 / self.a;
        self.chain(r, -r * r, 2.0 * r * r * r)
    }
}

impl std::ops::Add for HyperDual {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        HyperDual { a: self.a + o.a, b: self.b + o.b, c: self.c + o.c, d: self.d + o.d }
    }
}

impl std::ops::Sub for HyperDual {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        HyperDual { a: self.a - o.a, b: self.b - o.b, c: self.c - o.c, d: self.d - o.d }
    }
}

impl std::ops::Mul for HyperDual {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        HyperDual {
            a: self.a * o.a,
            b: self.a * o.b + self.b * o.a,
            c: self.a * o.c + self.c * o.a,
            d: self.a * o.d + self.b * o.c + self.c * o.b + self.d * o.a,
        }
    }
}

impl std::ops::Mul<HyperDual> for f64 {
    type Output = HyperDual;
    fn mul(self, o: HyperDual) -> HyperDual {
        HyperDual::constant(self) * o
    }
}

/// Catenoid graph `X + uν` with `u = s·sech v·(1 + 0.3 cos θ)`.
pub fn catenoid_graph(s: f64, v: HyperDual, th: HyperDual) -> [HyperDual; 3] {
    let (c, sh) = (v.cosh(), v.sinh());
    let sech = c.recip();
    let (ct, st) = (th.cos(), th.sin());
    let u = s * sech * (HyperDual::constant(1.0) + 0.3 * ct);
    [c * ct - u * sech * ct, c * st - u * sech * st, v + u * sh * sech]
}

pub fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// First and second partials of `F` at `(v, θ)`: `(∂_i F, ∂_ij F)`.
pub fn surface_jet(f: impl Fn(HyperDual, HyperDual) -> [HyperDual; 3], v: f64, th: f64) -> ([[f64; 3]; 2], [[[f64; 3]; 2]; 2]) {
    let mut d1 = [[0.0; 3]; 2];
    let mut d2 = [[[0.0; 3]; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let vv = HyperDual::seed(v, i == 0, j == 0);
            let tt = HyperDual::seed(th, i == 1, j == 1);
            let out = f(vv, tt);
            for k in 0..3 {
                d2[i][j][k] = out[k].d;
                if j == 0 {
                    d1[i][k] = out[k].b;
                }
            }
        }
    }
    (d1, d2)
}

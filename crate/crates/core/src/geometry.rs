//! Closed-form geometry of the background surface.
//!
//! Both models are rotationally symmetric with a diagonal metric
//! `g = diag(E(v), G(v))` in chart coordinates `(v, θ)`; every tensor is built
//! from the radial profile in [`Radial`]. Index order for 3-tensors:
//! `christoffel[k][i][j] = Γ^k_ij` and `grad_second_form[j][i][k] = ∇_j h_i^k`.

use crate::error::{invalid, Result};
use serde::{Deserialize, Serialize};

pub type Mat2 = [[f64; 2]; 2];
pub type Tensor3 = [[[f64; 2]; 2]; 2];

/// Potential profile of a synthetic model, a function of `v` only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Potential {
    Zero,
    /// `depth · sech²(v / width)`.
    Sech2 { depth: f64, width: f64 },
    /// `depth · (1 − (v/width)²)²` on `|v| < width`, zero outside.
    Bump { depth: f64, width: f64 },
}

impl Potential {
    fn eval(&self, v: f64) -> (f64, f64) {
        match *self {
            Potential::Zero => (0.0, 0.0),
            Potential::Sech2 { depth, width } => {
                let x = v / width;
                let s = 1.0 / x.cosh();
                (depth * s * s, -2.0 * depth * s * s * x.tanh() / width)
            }
            Potential::Bump { depth, width } => {
                let x = v / width;
                if x.abs() >= 1.0 {
                    (0.0, 0.0)
                } else {
                    let q = 1.0 - x * x;
                    (depth * q * q, -4.0 * depth * q * x / width)
                }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Potential::Zero => Ok(()),
            Potential::Sech2 { depth, width } | Potential::Bump { depth, width } => {
                if !(depth >= 0.0) || !depth.is_finite() {
                    return Err(invalid(format!("potential depth must be >= 0, got {depth}")));
                }
                if !(width > 0.0) || !width.is_finite() {
                    return Err(invalid(format!("potential width must be > 0, got {width}")));
                }
                Ok(())
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    Catenoid,
    Synthetic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
enum Shape {
    Catenoid { v_max: f64 },
    Synthetic { potential: Potential, radius: f64, half_length: f64 },
}

/// Radial profile data at one value of `v`.
#[derive(Clone, Copy, Debug)]
pub struct Radial {
    pub e: f64,
    pub g: f64,
    pub e_v: f64,
    pub g_v: f64,
    /// Covariant second fundamental form entries `h_vv`, `h_θθ` and their `v`-derivatives.
    pub h_vv: f64,
    pub h_tt: f64,
    pub h_vv_v: f64,
    pub h_tt_v: f64,
    /// Potential `|A|²` (or the synthetic `W`) and its `v`-derivative.
    pub w: f64,
    pub w_v: f64,
}

/// All pointwise tensors at one chart point.
#[derive(Clone, Copy, Debug)]
pub struct Frame {
    pub metric: Mat2,
    pub inv_metric: Mat2,
    pub sqrt_det: f64,
    pub second_form: Mat2,
    /// Mixed form `h_i^k`, stored as `[i][k]`.
    pub mixed_second_form: Mat2,
    pub grad_second_form: Tensor3,
    pub christoffel: Tensor3,
    pub potential: f64,
    /// Covector `∂_i |A|²`.
    pub grad_potential: [f64; 2],
}

/// Background surface: the catenoid or a flat cylinder carrying a potential.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceModel {
    shape: Shape,
}

/// Catenoid `X(v,θ) = (cosh v cos θ, cosh v sin θ, v)` on `|v| ≤ v_max`.
pub fn build_catenoid(v_max: f64) -> Result<SurfaceModel> {
    if !(v_max > 0.0) || !v_max.is_finite() {
        return Err(invalid(format!("v_max must be positive, got {v_max}")));
    }
    if v_max < 2.0 {
        return Err(invalid(format!("v_max must be at least 2, got {v_max}")));
    }
    Ok(SurfaceModel { shape: Shape::Catenoid { v_max } })
}

/// Flat cylinder of the given circumference and length with `h ≡ 0` and
/// potential `W`.
pub fn build_synthetic(potential: Potential, circumference: f64, length: f64) -> Result<SurfaceModel> {
    potential.validate()?;
    if !(circumference > 0.0) || !circumference.is_finite() {
        return Err(invalid(format!("circumference must be positive, got {circumference}")));
    }
    if !(length > 0.0) || !length.is_finite() {
        return Err(invalid(format!("length must be positive, got {length}")));
    }
    Ok(SurfaceModel {
        shape: Shape::Synthetic {
            potential,
            radius: circumference / (2.0 * std::f64::consts::PI),
            half_length: 0.5 * length,
        },
    })
}

impl SurfaceModel {
    pub fn kind(&self) -> ModelKind {
        match self.shape {
            Shape::Catenoid { .. } => ModelKind::Catenoid,
            Shape::Synthetic { .. } => ModelKind::Synthetic,
        }
    }

    /// Dimension `n` of the hypersurface.
    pub fn dimension(&self) -> usize {
        2
    }

    /// Half-length of the chart in `v`.
    pub fn v_max(&self) -> f64 {
        match self.shape {
            Shape::Catenoid { v_max } => v_max,
            Shape::Synthetic { half_length, .. } => half_length,
        }
    }

    /// Intrinsic distance to the base point `(0, 0)` along radial geodesics.
    pub fn intrinsic_radius(&self, v: f64, _theta: f64) -> f64 {
        match self.shape {
            Shape::Catenoid { .. } => v.abs().sinh(),
            Shape::Synthetic { .. } => v.abs(),
        }
    }

    /// Chart coordinate `v_R` with intrinsic radius `R`.
    pub fn chart_radius(&self, r: f64) -> f64 {
        match self.shape {
            Shape::Catenoid { .. } => r.asinh(),
            Shape::Synthetic { .. } => r,
        }
    }

    /// Radial profile at `v`.
    pub fn radial(&self, v: f64) -> Radial {
        match &self.shape {
            Shape::Catenoid { .. } => {
                let c = v.cosh();
                let s = v.sinh();
                let sech = 1.0 / c;
                let s4 = sech.powi(4);
                Radial {
                    e: c * c,
                    g: c * c,
                    e_v: 2.0 * c * s,
                    g_v: 2.0 * c * s,
                    h_vv: 1.0,
                    h_tt: -1.0,
                    h_vv_v: 0.0,
                    h_tt_v: 0.0,
                    w: 2.0 * s4,
                    w_v: -8.0 * s4 * v.tanh(),
                }
            }
            Shape::Synthetic { potential, radius, .. } => {
                let (w, w_v) = potential.eval(v);
                Radial {
                    e: 1.0,
                    g: radius * radius,
                    e_v: 0.0,
                    g_v: 0.0,
                    h_vv: 0.0,
                    h_tt: 0.0,
                    h_vv_v: 0.0,
                    h_tt_v: 0.0,
                    w,
                    w_v,
                }
            }
        }
    }

    /// Every tensor at `(v, θ)`; the models are θ-independent.
    pub fn frame(&self, v: f64, _theta: f64) -> Frame {
        frame_from_radial(&self.radial(v))
    }

    pub fn metric(&self, v: f64, theta: f64) -> Mat2 {
        self.frame(v, theta).metric
    }
    pub fn inv_metric(&self, v: f64, theta: f64) -> Mat2 {
        self.frame(v, theta).inv_metric
    }
    pub fn sqrt_det_g(&self, v: f64, theta: f64) -> f64 {
        self.frame(v, theta).sqrt_det
    }
    pub fn second_form(&self, v: f64, theta: f64) -> Mat2 {
        self.frame(v, theta).second_form
    }
    pub fn grad_second_form(&self, v: f64, theta: f64) -> Tensor3 {
        self.frame(v, theta).grad_second_form
    }
    pub fn christoffel(&self, v: f64, theta: f64) -> Tensor3 {
        self.frame(v, theta).christoffel
    }
    pub fn potential(&self, v: f64, _theta: f64) -> f64 {
        self.radial(v).w
    }
    pub fn grad_potential(&self, v: f64, _theta: f64) -> [f64; 2] {
        [self.radial(v).w_v, 0.0]
    }

    /// Embedding into R³ (catenoid only).
    pub fn embedding(&self, v: f64, theta: f64) -> Option<[f64; 3]> {
        match self.shape {
            Shape::Catenoid { .. } => {
                let c = v.cosh();
                Some([c * theta.cos(), c * theta.sin(), v])
            }
            Shape::Synthetic { .. } => None,
        }
    }

    /// Unit normal `ν = (−cos θ, −sin θ, sinh v)/cosh v` (catenoid only),
    /// oriented so that `h_ij = ⟨−∂_ij X, ν⟩ = diag(1, −1)`.
    pub fn unit_normal(&self, v: f64, theta: f64) -> Option<[f64; 3]> {
        match self.shape {
            Shape::Catenoid { .. } => {
                let c = v.cosh();
                Some([-theta.cos() / c, -theta.sin() / c, v.sinh() / c])
            }
            Shape::Synthetic { .. } => None,
        }
    }
}

pub(crate) fn frame_from_radial(r: &Radial) -> Frame {
    let metric = [[r.e, 0.0], [0.0, r.g]];
    let inv_metric = [[1.0 / r.e, 0.0], [0.0, 1.0 / r.g]];
    let mut chr = [[[0.0; 2]; 2]; 2];
    chr[0][0][0] = r.e_v / (2.0 * r.e);
    chr[0][1][1] = -r.g_v / (2.0 * r.e);
    chr[1][0][1] = r.g_v / (2.0 * r.g);
    chr[1][1][0] = chr[1][0][1];

    let mixed = [[r.h_vv / r.e, 0.0], [0.0, r.h_tt / r.g]];
    // ∂_v of the mixed form; all θ-derivatives vanish.
    let mut d_mixed = [[[0.0; 2]; 2]; 2];
    d_mixed[0][0][0] = r.h_vv_v / r.e - r.h_vv * r.e_v / (r.e * r.e);
    d_mixed[0][1][1] = r.h_tt_v / r.g - r.h_tt * r.g_v / (r.g * r.g);
    let mut grad = [[[0.0; 2]; 2]; 2];
    for j in 0..2 {
        for i in 0..2 {
            for k in 0..2 {
                let mut val = d_mixed[j][i][k];
                for m in 0..2 {
                    val += chr[k][j][m] * mixed[i][m] - chr[m][j][i] * mixed[m][k];
                }
                grad[j][i][k] = val;
            }
        }
    }
    Frame {
        metric,
        inv_metric,
        sqrt_det: (r.e * r.g).sqrt(),
        second_form: [[r.h_vv, 0.0], [0.0, r.h_tt]],
        mixed_second_form: mixed,
        grad_second_form: grad,
        christoffel: chr,
        potential: r.w,
        grad_potential: [r.w_v, 0.0],
    }
}

/// Trapezoidal quadrature of `|A|^n √det g` over the grid.
pub fn total_curvature(grid: &crate::mesh::Grid) -> f64 {
    let n = grid.model().dimension() as f64;
    let vals: Vec<f64> = (0..grid.n_v())
        .map(|i| grid.frame(i).potential.max(0.0).powf(0.5 * n))
        .collect();
    grid.integrate_radial(&vals)
}

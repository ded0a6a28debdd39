//! Ancient graphical mean curvature flows over unstable minimal surfaces.
//!
//! The pipeline: a closed-form background surface ([`geometry`]), a tensor
//! grid with discrete calculus ([`mesh`]), the Dirichlet spectrum of the
//! Jacobi operator ([`spectrum`]), the graph error term ([`nonlinear`]), the
//! mode-split Duhamel solver and level-wise Picard construction
//! ([`ancient`]), and post-processing of the constructed flow
//! ([`diagnostics`]).

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod ancient;
pub mod diagnostics;
pub mod error;
pub mod exec;
pub mod geometry;
pub mod io;
pub mod mesh;
pub mod nonlinear;
pub mod spectrum;

pub use error::{Error, Result};

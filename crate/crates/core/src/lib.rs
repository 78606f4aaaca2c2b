//! Numerical geometry of spherically symmetric Finsler metrics
//! `F(x, y) = u * phi(r, s)` with `r = |x|`, `u = |y|`, `s = <x, y> / |y|`.
//!
//! `phi` is given as a text expression, evaluated as a bivariate Taylor jet
//! of degree 4, and every object (fundamental tensor, spray, connection,
//! Riemann curvature, Berwald frame, main scalar) is assembled pointwise
//! from those exact partials.
//!
//! ```
//! use finsler_lab::{canonical_point, eval_jet, parse, pq_from_phi};
//!
//! let phi = parse("sqrt(1+s^2)").unwrap();
//! let p = canonical_point(2, 1.0, 0.3, 1.0).unwrap();
//! let jet = eval_jet(&phi, p.r, p.s).unwrap();
//! let spray = pq_from_phi(&jet, &p).unwrap();
//! assert!((spray.q.value - 0.25).abs() < 1e-14);
//! ```

#![allow(
    clippy::needless_range_loop,
    clippy::neg_cmp_op_on_partial_ord,
    clippy::should_implement_trait,
    clippy::suspicious_arithmetic_impl
)]

pub mod curvature;
pub mod error;
pub mod expr;
pub mod fd;
pub mod geometry;
pub mod jet;
pub mod report;
pub mod spray;
pub mod surface;

pub use curvature::{riemann_pack, scalar_classify, CurvaturePack, ScalarCurvatureReport};
pub use error::{GeometryError, Result};
pub use expr::{parse, Expr, ParseError};
pub use fd::fd_partials;
pub use geometry::{
    canonical_point, cartan_pack, degeneracy_classify, metric_pack, CartanPack, Degeneracy,
    EvalPoint, MetricPack, Tolerances,
};
pub use jet::{eval_jet, EvalError, Jet4};
pub use report::{run, GridRange, ReportDocument, RunConfig, RunError, Subcommand};
pub use spray::{
    horizontal_residual, metrizability_residuals, pq_from_phi, MetrizabilityResiduals, SprayPack,
};
pub use surface::{berwald_frame, main_scalar, riemannian_test, BerwaldFrame, MainScalarPack};

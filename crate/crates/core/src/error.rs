use thiserror::Error;

use crate::expr::ParseError;
use crate::jet::EvalError;

/// Errors raised by the geometric routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("dimension must be at least 2, got {0}")]
    Dimension(usize),
    #[error("invalid point (r={r}, s={s}, u={u}): {reason}")]
    InvalidPoint {
        r: f64,
        s: f64,
        u: f64,
        reason: &'static str,
    },
    #[error("phi = {0} is not positive at this point")]
    NonPositivePhi(f64),
    #[error(
        "degenerate spray denominator phi - s*phi_s + (r^2-s^2)*phi_ss = {0:e} \
         (phi may belong to the f1*s + f2*sqrt(r^2-s^2) family)"
    )]
    DegenerateDenominator(f64),
    #[error("jet of degree {found} supplied where degree {needed} is required")]
    JetDegree { needed: usize, found: usize },
    #[error("jet base point ({jr}, {js}) does not match evaluation point ({r}, {s})")]
    JetPoint { jr: f64, js: f64, r: f64, s: f64 },
    #[error("grid has {found} points, at least {needed} are required")]
    GridTooSmall { needed: usize, found: usize },
    #[error("grid mixes dimensions {0} and {1}")]
    MixedDimensions(usize, usize),
    #[error("operation requires a surface (n = 2), got n = {0}")]
    NotASurface(usize),
    #[error("Berwald frame radicand phi*(phi - s*phi_s + (r^2-s^2)*phi_ss)/(r^2-s^2) = {0:e} is not positive")]
    FrameRadicand(f64),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

pub type Result<T, E = GeometryError> = std::result::Result<T, E>;

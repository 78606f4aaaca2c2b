//! Finite-difference oracle for mixed partials of an expression.
//!
//! Independent of the jet engine: it only uses plain `f64` evaluation of the
//! expression tree. Central-difference stencils of second-order accuracy are
//! applied per variable (tensor product for mixed partials) on a shrinking
//! sequence of steps, and Ridders' polynomial extrapolation picks the estimate
//! with the smallest internal error bound.

use thiserror::Error;

use crate::expr::Expr;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FdError {
    #[error("total order {0} exceeds 4")]
    Order(usize),
    #[error("expression undefined at stencil point ({r}, {s})")]
    Domain { r: f64, s: f64 },
}

/// Largest trial step relative to `max(1, |r|, |s|)`.
pub const INITIAL_STEP: f64 = 0.1;
/// Smallest initial step tried before giving up on a domain violation.
pub const MIN_INITIAL_STEP: f64 = 1e-5;
const SHRINK: f64 = 1.4;
const TABLEAU: usize = 16;

/// `max(1, |r|, |s|)`, the length scale the steps are measured in.
pub fn step_scale(r: f64, s: f64) -> f64 {
    1f64.max(r.abs()).max(s.abs())
}

/// Central-difference weights for the `m`-th derivative on offsets `-2..=2`
/// (in units of the step), before division by `h^m`.
fn stencil(m: usize) -> [f64; 5] {
    match m {
        0 => [0.0, 0.0, 1.0, 0.0, 0.0],
        1 => [0.0, -0.5, 0.0, 0.5, 0.0],
        2 => [0.0, 1.0, -2.0, 1.0, 0.0],
        3 => [-0.5, 1.0, 0.0, -1.0, 0.5],
        4 => [1.0, -4.0, 6.0, -4.0, 1.0],
        _ => unreachable!(),
    }
}

/// Stencil estimate and a bound on its rounding error.
fn central(e: &Expr, r: f64, s: f64, a: usize, b: usize, h: f64) -> Result<(f64, f64), FdError> {
    let wr = stencil(a);
    let ws = stencil(b);
    let mut acc = 0.0;
    let mut mass = 0.0;
    for (i, wi) in wr.iter().enumerate() {
        if *wi == 0.0 {
            continue;
        }
        for (j, wj) in ws.iter().enumerate() {
            if *wj == 0.0 {
                continue;
            }
            let rr = r + (i as f64 - 2.0) * h;
            let ss = s + (j as f64 - 2.0) * h;
            let v = e.eval(rr, ss).ok_or(FdError::Domain { r: rr, s: ss })?;
            acc += wi * wj * v;
            mass += (wi * wj * v).abs();
        }
    }
    let hm = h.powi((a + b) as i32);
    Ok((acc / hm, 4.0 * f64::EPSILON * mass / hm))
}

/// Finite-difference estimate of `d^(a+b) e / dr^a ds^b` at `(r, s)`.
pub fn fd_partials(e: &Expr, r: f64, s: f64, a: usize, b: usize) -> Result<f64, FdError> {
    fd_partials_with_error(e, r, s, a, b).map(|(v, _)| v)
}

/// Estimate and Ridders' error bound for the same partial.
pub fn fd_partials_with_error(
    e: &Expr,
    r: f64,
    s: f64,
    a: usize,
    b: usize,
) -> Result<(f64, f64), FdError> {
    if a + b > 4 {
        return Err(FdError::Order(a + b));
    }
    if a + b == 0 {
        return e
            .eval(r, s)
            .ok_or(FdError::Domain { r, s })
            .map(|v| (v, 0.0));
    }
    let scale = step_scale(r, s);
    let mut h = INITIAL_STEP * scale;
    let (first, _) = loop {
        match central(e, r, s, a, b, h) {
            Ok(v) => break v,
            Err(err) if h / 2.0 < MIN_INITIAL_STEP * scale => return Err(err),
            Err(_) => h /= 2.0,
        }
    };
    let mut prev = vec![first];
    let mut best = first;
    let mut err = f64::INFINITY;
    for _ in 1..TABLEAU {
        h /= SHRINK;
        let (v, noise) = central(e, r, s, a, b, h)?;
        let mut row = vec![v];
        let mut fac = SHRINK * SHRINK;
        for j in 1..=prev.len() {
            let next = (row[j - 1] * fac - prev[j - 1]) / (fac - 1.0);
            let errt = (next - row[j - 1])
                .abs()
                .max((next - prev[j - 1]).abs())
                .max(noise * fac / (fac - 1.0));
            if errt <= err {
                err = errt;
                best = next;
            }
            row.push(next);
            fac *= SHRINK * SHRINK;
        }
        prev = row;
    }
    Ok((best, err))
}

/// The order-stratified agreement tolerance between a finite-difference
/// estimate and an exact partial of total order `order`.
pub fn oracle_tolerance(order: usize, exact: f64) -> f64 {
    if order <= 3 {
        1e-6f64.max(1e-4 * exact.abs())
    } else {
        1e-4f64.max(1e-3 * exact.abs())
    }
}

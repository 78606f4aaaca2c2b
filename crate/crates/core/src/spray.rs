//! Geodesic spray `G^h = u P y^h + u^2 Q x^h`, its nonlinear connection and
//! the metrizability conditions relating a spray `(P, Q)` to `phi`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{GeometryError, Result};
use crate::expr::Expr;
use crate::geometry::{check_jet_point, dfdx, dfdy, EvalPoint, PhiDerivs};
use crate::jet::{eval_jet, Jet4};

/// Relative size below which the spray denominator counts as zero.
pub const DENOMINATOR_EPS: f64 = 1e-12;

/// A scalar function of `(r, s)` with the partials the curvature needs.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Partials2 {
    pub value: f64,
    pub r: f64,
    pub s: f64,
    pub ss: f64,
    pub rs: f64,
}

impl Partials2 {
    pub fn from_jet(j: &Jet4) -> Result<Partials2> {
        if j.degree() < 2 {
            return Err(GeometryError::JetDegree {
                needed: 2,
                found: j.degree(),
            });
        }
        Ok(Partials2 {
            value: j.value(),
            r: j.partial(1, 0),
            s: j.partial(0, 1),
            ss: j.partial(0, 2),
            rs: j.partial(1, 1),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SprayPack {
    pub p: Partials2,
    pub q: Partials2,
    /// Spray coefficients `G^h`.
    pub g: DVector<f64>,
    /// Connection coefficients `G^i_j = dG^i/dy^j`, row `i`, column `j`.
    pub n: DMatrix<f64>,
}

/// `(P, Q)` as degree-2 jets built from a degree-4 jet of `phi`.
pub fn pq_jets(jet: &Jet4) -> Result<(Jet4, Jet4)> {
    if jet.degree() < 4 {
        return Err(GeometryError::JetDegree {
            needed: 4,
            found: jet.degree(),
        });
    }
    let (r0, s0) = jet.base();
    let phi = jet.truncate(2);
    if phi.value() <= 0.0 {
        return Err(GeometryError::NonPositivePhi(phi.value()));
    }
    let phi_r = jet.dr();
    let phi_s = jet.ds();
    let phi_ss = phi_s.ds();
    let phi_rs = phi_r.ds();
    let r = Jet4::var_r(r0, s0).truncate(2);
    let s = Jet4::var_s(r0, s0).truncate(2);
    let w = r * r - s * s;

    let den = phi - s * phi_s + w * phi_ss;
    if den.value().abs() <= DENOMINATOR_EPS * 1f64.max(phi.value().abs()) {
        return Err(GeometryError::DegenerateDenominator(den.value()));
    }
    let two_r = r * 2.0;
    let q = (-phi_r + s * phi_rs + r * phi_ss) * (two_r * den).recip().expect("checked");
    let phi_inv = phi.recip().expect("checked");
    let p = -(q * phi_inv) * (s * phi + w * phi_s)
        + (s * phi_r + r * phi_s) * (two_r * phi).recip().expect("checked");
    Ok((p, q))
}

/// Spray data of the metric `u * phi` at `p`.
pub fn pq_from_phi(jet: &Jet4, p: &EvalPoint) -> Result<SprayPack> {
    check_jet_point(jet, p)?;
    let (pj, qj) = pq_jets(jet)?;
    spray_from_pq(&pj, &qj, p)
}

/// Spray data for an arbitrary pair of jets `P`, `Q` (degree at least 2).
pub fn spray_from_pq(p_jet: &Jet4, q_jet: &Jet4, pt: &EvalPoint) -> Result<SprayPack> {
    let p = Partials2::from_jet(p_jet)?;
    let q = Partials2::from_jet(q_jet)?;
    Ok(assemble(p, q, pt))
}

fn assemble(p: Partials2, q: Partials2, pt: &EvalPoint) -> SprayPack {
    let (u, s) = (pt.u, pt.s);
    let (x, y) = (&pt.x, &pt.y);
    let g = y * (u * p.value) + x * (u * u * q.value);
    let n = DMatrix::identity(pt.n, pt.n) * (u * p.value)
        + y * x.transpose() * p.s
        + y * y.transpose() * ((p.value - s * p.s) / u)
        + x * x.transpose() * (u * q.s)
        + x * y.transpose() * (2.0 * q.value - s * q.s);
    SprayPack { p, q, g, n }
}

/// `delta F / delta x^j = dF/dx^j - G^i_j dF/dy^i`; vanishes for the
/// geodesic spray of `F`.
pub fn horizontal_residual(jet: &Jet4, sp: &SprayPack, p: &EvalPoint) -> Result<DVector<f64>> {
    check_jet_point(jet, p)?;
    let d = PhiDerivs::from_jet(jet)?;
    let fy = dfdy(&d, p);
    Ok(dfdx(&d, p) - sp.n.transpose() * fy)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetrizabilityResiduals {
    pub c1: f64,
    pub c2: f64,
}

impl MetrizabilityResiduals {
    pub fn max_abs(&self) -> f64 {
        self.c1.abs().max(self.c2.abs())
    }
}

/// The two metrizability conditions for `phi` against a spray `(P, Q)`.
pub fn metrizability_conditions(
    d: &PhiDerivs,
    p: &Partials2,
    q: &Partials2,
    r: f64,
    s: f64,
) -> MetrizabilityResiduals {
    let w = r * r - s * s;
    let k = 2.0 * q.value - s * q.s;
    let c1 = (1.0 + s * p.value - w * k) * d.phi_s + (s * p.s - 2.0 * p.value - s * k) * d.phi;
    let c2 = d.phi_r / r - (p.value + q.s * w) * d.phi_s - (p.s + s * q.s) * d.phi;
    MetrizabilityResiduals { c1, c2 }
}

/// Metrizability residuals of `phi` against user supplied `P(r, s)`, `Q(r, s)`.
pub fn metrizability_residuals(
    jet: &Jet4,
    p_expr: &Expr,
    q_expr: &Expr,
    pt: &EvalPoint,
) -> Result<MetrizabilityResiduals> {
    check_jet_point(jet, pt)?;
    let d = PhiDerivs::from_jet(jet)?;
    let p = Partials2::from_jet(&eval_jet(p_expr, pt.r, pt.s)?)?;
    let q = Partials2::from_jet(&eval_jet(q_expr, pt.r, pt.s)?)?;
    Ok(metrizability_conditions(&d, &p, &q, pt.r, pt.s))
}

/// Spray coefficients of `u * phi` at arbitrary vectors `x`, `y`.
pub fn spray_coefficients(phi: &Expr, x: &DVector<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let p = EvalPoint::from_vectors(x.clone(), y.clone())?;
    let jet = eval_jet(phi, p.r, p.s)?;
    Ok(pq_from_phi(&jet, &p)?.g)
}

/// Connection coefficients of `u * phi` at arbitrary vectors `x`, `y`.
pub fn connection_coefficients(
    phi: &Expr,
    x: &DVector<f64>,
    y: &DVector<f64>,
) -> Result<DMatrix<f64>> {
    let p = EvalPoint::from_vectors(x.clone(), y.clone())?;
    let jet = eval_jet(phi, p.r, p.s)?;
    Ok(pq_from_phi(&jet, &p)?.n)
}

//! Riemann curvature (Jacobi endomorphism) of a spherically symmetric spray,
//! the curvature compatibility residual and the scalar flag curvature test.
//!
//! `R^i_j = u^2 R1 delta + R2 y^i y_j + u^2 R3 x^i x_j + u R4 x^i y_j + u R5 x_j y^i`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{GeometryError, Result};
use crate::expr::Expr;
use crate::geometry::{check_jet_point, dfdy, EvalPoint, PhiDerivs, Tolerances, MIN_GRID};
use crate::jet::{eval_jet, Jet4};
use crate::spray::{pq_from_phi, Partials2, SprayPack};

/// Disagreement (relative to `scale`) between the printed `R2`, `R4` and
/// their identity forms above which a point is flagged.
pub const IDENTITY_FLAG_TOL: f64 = 1e-6;

/// `[R1, R2, R3, R4, R5]` from the closed-form expressions in `P`, `Q`.
pub fn curvature_scalars(p: &Partials2, q: &Partials2, r: f64, s: f64) -> [f64; 5] {
    let w = r * r - s * s;
    let (pv, pr, ps, pss, prs) = (p.value, p.r, p.s, p.ss, p.rs);
    let (qv, qr, qs, qss, qrs) = (q.value, q.r, q.s, q.ss, q.rs);

    let r1 = 2.0 * qv - s / r * pr - ps + 2.0 * w * ps * qv + pv * pv + 2.0 * s * pv * qv;
    let r2 = ps - s / r * pr + s * s / r * prs + s * pss - 2.0 * qv + s * qs
        - 2.0 * s * pv * ps
        - 4.0 * s * pv * qv
        + 4.0 * s * s * ps * qv
        - pv * pv
        - 2.0 * s * w * pss * qv
        + 3.0 * s * pv * ps
        + s * s * pv * qs
        + w * s * ps * qs
        - 2.0 * r * r * ps * qv;
    let r3 = 2.0 / r * qr - qss - s / r * qrs + 2.0 * w * qv * qss + 4.0 * qv * qv
        - w * qs * qs
        - 2.0 * s * qv * qs;
    let r4 = -2.0 * s / r * qr + s * s / r * qrs + s * qss - 2.0 * w * s * qv * qss
        + w * s * qs * qs
        - 4.0 * s * qv * qv
        + 2.0 * s * s * qv * qs;
    let r5 = 2.0 / r * pr - s / r * prs - pss - qs + 2.0 * pv * qv - 2.0 * s * ps * qv
        + 2.0 * w * pss * qv
        - pv * ps
        - s * pv * qs
        - w * ps * qs;
    [r1, r2, r3, r4, r5]
}

/// Assemble `R^i_j` (row `i`, column `j`) from the five scalars.
pub fn riemann_matrix(rs: &[f64; 5], p: &EvalPoint) -> DMatrix<f64> {
    let [r1, r2, r3, r4, r5] = *rs;
    let (u, x, y) = (p.u, &p.x, &p.y);
    DMatrix::identity(p.n, p.n) * (u * u * r1)
        + y * y.transpose() * r2
        + x * x.transpose() * (u * u * r3)
        + x * y.transpose() * (u * r4)
        + y * x.transpose() * (u * r5)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvaturePack {
    pub r1: f64,
    /// `R2` from its closed form.
    pub r2: f64,
    pub r3: f64,
    /// `R4` from its closed form.
    pub r4: f64,
    pub r5: f64,
    /// `-R1 - s R5`, used in [`CurvaturePack::rmat`].
    pub r2_identity: f64,
    /// `-s R3`, used in [`CurvaturePack::rmat`].
    pub r4_identity: f64,
    pub rmat: DMatrix<f64>,
    /// `phi_s R1 + (s phi + (r^2-s^2) phi_s) R3 + phi R5`.
    pub c3: f64,
    /// `R4 + s R3` with the closed-form `R4`.
    pub id_r4: f64,
    /// `R1 + R2 + s R5` with the closed-form `R2`.
    pub id_r2: f64,
    /// `max(1, |R1|, ..., |R5|)`.
    pub scale: f64,
    /// Set when a closed form and its identity disagree beyond
    /// `IDENTITY_FLAG_TOL * scale`.
    pub identity_flag: bool,
}

impl CurvaturePack {
    pub fn scalars(&self) -> [f64; 5] {
        [self.r1, self.r2, self.r3, self.r4, self.r5]
    }
}

pub fn riemann_pack(sp: &SprayPack, jet: &Jet4, p: &EvalPoint) -> Result<CurvaturePack> {
    check_jet_point(jet, p)?;
    let d = PhiDerivs::from_jet(jet)?;
    let [r1, r2, r3, r4, r5] = curvature_scalars(&sp.p, &sp.q, p.r, p.s);
    let s = p.s;
    let r2_identity = -r1 - s * r5;
    let r4_identity = -s * r3;
    let scale = [r1, r2, r3, r4, r5]
        .iter()
        .fold(1f64, |m, v| m.max(v.abs()));
    let id_r2 = r1 + r2 + s * r5;
    let id_r4 = r4 + s * r3;
    let identity_flag =
        id_r2.abs() > IDENTITY_FLAG_TOL * scale || id_r4.abs() > IDENTITY_FLAG_TOL * scale;
    let rmat = riemann_matrix(&[r1, r2_identity, r3, r4_identity, r5], p);
    let c3 = d.phi_s * r1 + d.x_contraction(p.r, s) * r3 + d.phi * r5;
    Ok(CurvaturePack {
        r1,
        r2,
        r3,
        r4,
        r5,
        r2_identity,
        r4_identity,
        rmat,
        c3,
        id_r4,
        id_r2,
        scale,
        identity_flag,
    })
}

/// Flag curvature `K = (R1 + (r^2 - s^2) R3) / phi^2`.
///
/// This is the trace-free part of the scalar-curvature ansatz; it reduces to
/// `R1 / phi^2` whenever `R3 = 0`, which is forced in dimension at least 3.
pub fn flag_curvature(cp: &CurvaturePack, phi: f64, p: &EvalPoint) -> f64 {
    (cp.r1 + p.w() * cp.r3) / (phi * phi)
}

/// `K F^2 (delta^i_j - (y^i / F) dF/dy^j)`.
pub fn scalar_curvature_matrix(k: f64, d: &PhiDerivs, p: &EvalPoint) -> DMatrix<f64> {
    let f = p.u * d.phi;
    let ell: DVector<f64> = dfdy(d, p);
    (DMatrix::identity(p.n, p.n) - &p.y * ell.transpose() / f) * (k * f * f)
}

/// `tr R - u^2 ((n-1) R1 + (r^2 - s^2) R3)`.
pub fn trace_residual(cp: &CurvaturePack, p: &EvalPoint) -> f64 {
    let n = p.n as f64;
    cp.rmat.trace() - p.u * p.u * ((n - 1.0) * cp.r1 + p.w() * cp.r3)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KSample {
    pub index: usize,
    pub r: f64,
    pub s: f64,
    pub u: f64,
    pub k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalarCurvatureReport {
    pub is_scalar: bool,
    pub n: usize,
    pub k_samples: Vec<KSample>,
    /// `max |R3| / scale` over the grid.
    pub max_r3_residual: f64,
    /// `max |R - K F^2 (delta - y dF/F)|_max / (u^2 scale)` over the grid.
    pub max_reconstruction_residual: f64,
    /// First grid index that failed the test (only for `n >= 3`).
    pub failing_point: Option<usize>,
}

/// Decide whether `u * phi` has scalar flag curvature on a grid.
pub fn scalar_classify(
    phi: &Expr,
    grid: &[EvalPoint],
    tol: &Tolerances,
) -> Result<ScalarCurvatureReport> {
    if grid.len() < MIN_GRID {
        return Err(GeometryError::GridTooSmall {
            needed: MIN_GRID,
            found: grid.len(),
        });
    }
    let n = grid[0].n;
    if let Some(p) = grid.iter().find(|p| p.n != n) {
        return Err(GeometryError::MixedDimensions(n, p.n));
    }
    let mut rep = ScalarCurvatureReport {
        is_scalar: true,
        n,
        k_samples: Vec::with_capacity(grid.len()),
        max_r3_residual: 0.0,
        max_reconstruction_residual: 0.0,
        failing_point: None,
    };
    for (index, p) in grid.iter().enumerate() {
        let jet = eval_jet(phi, p.r, p.s)?;
        let sp = pq_from_phi(&jet, p)?;
        let cp = riemann_pack(&sp, &jet, p)?;
        let d = PhiDerivs::from_jet(&jet)?;
        let k = flag_curvature(&cp, d.phi, p);
        let r3_res = cp.r3.abs() / cp.scale;
        let recon = (&cp.rmat - scalar_curvature_matrix(k, &d, p)).amax() / (p.u * p.u * cp.scale);
        rep.max_r3_residual = rep.max_r3_residual.max(r3_res);
        rep.max_reconstruction_residual = rep.max_reconstruction_residual.max(recon);
        rep.k_samples.push(KSample {
            index,
            r: p.r,
            s: p.s,
            u: p.u,
            k,
        });
        if n >= 3
            && rep.failing_point.is_none()
            && (r3_res >= tol.curvature || recon >= tol.curvature)
        {
            rep.failing_point = Some(index);
        }
    }
    rep.is_scalar = n == 2 || rep.failing_point.is_none();
    Ok(rep)
}

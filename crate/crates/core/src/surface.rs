//! Berwald frame and main scalar of a spherically symmetric Finsler surface.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{GeometryError, Result};
use crate::expr::Expr;
use crate::geometry::{cartan_pack, dfdy, metric_pack, EvalPoint, Tolerances, MIN_GRID};
use crate::jet::{eval_jet, Jet4};

/// Orthonormal frame `(l, m)` with `l^i = y^i / F` and `m_i = a n_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct BerwaldFrame {
    /// `l_i = dF/dy^i`.
    pub ell_lo: DVector<f64>,
    /// `l^i = y^i / F`.
    pub ell_hi: DVector<f64>,
    /// `n_j = x_j - (s/u) y_j`.
    pub n_lo: DVector<f64>,
    /// `n^i = g^ij n_j`.
    pub n_hi: DVector<f64>,
    /// `a = sqrt(phi (phi - s phi_s + (r^2-s^2) phi_ss) / (r^2 - s^2))`.
    pub a: f64,
    pub m_lo: DVector<f64>,
    pub m_hi: DVector<f64>,
}

pub fn berwald_frame(jet: &Jet4, p: &EvalPoint) -> Result<BerwaldFrame> {
    if p.n != 2 {
        return Err(GeometryError::NotASurface(p.n));
    }
    let mp = metric_pack(jet, p)?;
    let d = mp.derivs;
    let w = p.w();
    let radicand = d.phi * d.second_factor(p.r, p.s) / w;
    if !(radicand > 0.0) {
        return Err(GeometryError::FrameRadicand(radicand));
    }
    let a = radicand.sqrt();
    let [rho0, _, rho2, rho3] = mp.rho;
    let n_lo = p.n_vec();
    let n_hi = &n_lo * rho0 + (&p.y * rho2 + &p.x * (p.u * rho3)) * (w / p.u);
    Ok(BerwaldFrame {
        ell_lo: dfdy(&d, p),
        ell_hi: &p.y / mp.f,
        m_lo: &n_lo * a,
        m_hi: &n_hi * a,
        n_lo,
        n_hi,
        a,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MainScalarPack {
    /// `rho0 + s rho2 + r^2 rho3`.
    pub a_coef: f64,
    /// `rho2 + s rho3`.
    pub b_coef: f64,
    /// Main scalar from the closed form in `mu`, `nu`, `a`, `B`.
    pub i: f64,
    /// Main scalar as `F C_ijk m^i m^j m^k`.
    pub i_direct: f64,
}

pub fn main_scalar(jet: &Jet4, p: &EvalPoint) -> Result<MainScalarPack> {
    let frame = berwald_frame(jet, p)?;
    let mp = metric_pack(jet, p)?;
    let cp = cartan_pack(jet, p)?;
    let [rho0, _, rho2, rho3] = mp.rho;
    let (r, s, w) = (p.r, p.s, p.w());
    let a_coef = rho0 + s * rho2 + r * r * rho3;
    let b_coef = rho2 + s * rho3;
    let (a, mu, nu, phi) = (frame.a, cp.mu, cp.nu, mp.derivs.phi);
    let m_sq = frame.m_hi.norm_squared();
    let i =
        0.5 * phi * (3.0 * mu / a * m_sq - 3.0 * a * mu * w * w * b_coef * b_coef + nu / a.powi(3));
    let i_direct = mp.f * cp.c.contract3(&frame.m_hi, &frame.m_hi, &frame.m_hi);
    Ok(MainScalarPack {
        a_coef,
        b_coef,
        i,
        i_direct,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiemannianReport {
    pub is_riemannian: bool,
    /// `max |mu| / max(1, phi^2)` over the grid.
    pub max_mu: f64,
    /// `max |nu| / max(1, phi^2)` over the grid.
    pub max_nu: f64,
    /// `max |I|` over the grid (closed form).
    pub max_abs_i: f64,
}

/// Riemannian criterion for a surface: `mu` vanishes on the whole grid.
/// A positive verdict also requires `nu` to vanish, since `d mu / ds = -s nu`.
pub fn riemannian_test(
    phi: &Expr,
    grid: &[EvalPoint],
    tol: &Tolerances,
) -> Result<RiemannianReport> {
    if grid.len() < MIN_GRID {
        return Err(GeometryError::GridTooSmall {
            needed: MIN_GRID,
            found: grid.len(),
        });
    }
    let mut rep = RiemannianReport {
        is_riemannian: false,
        max_mu: 0.0,
        max_nu: 0.0,
        max_abs_i: 0.0,
    };
    for p in grid {
        if p.n != 2 {
            return Err(GeometryError::NotASurface(p.n));
        }
        let jet = eval_jet(phi, p.r, p.s)?;
        let cp = cartan_pack(&jet, p)?;
        let scale = 1f64.max(jet.value() * jet.value());
        rep.max_mu = rep.max_mu.max(cp.mu.abs() / scale);
        rep.max_nu = rep.max_nu.max(cp.nu.abs() / scale);
        rep.max_abs_i = rep.max_abs_i.max(main_scalar(&jet, p)?.i.abs());
    }
    rep.is_riemannian = rep.max_mu < tol.degeneracy && rep.max_nu < tol.degeneracy;
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::geometry::canonical_point;
    use nalgebra::DMatrix;

    fn jet(src: &str, p: &EvalPoint) -> Jet4 {
        eval_jet(&parse(src).unwrap(), p.r, p.s).unwrap()
    }

    fn grid() -> Vec<EvalPoint> {
        let mut out = Vec::new();
        for r in [0.5, 0.8, 0.95] {
            for f in [-0.7, 0.0, 0.6] {
                out.push(canonical_point(2, r, f * r, 1.4).unwrap());
            }
        }
        out
    }

    #[test]
    fn randers_frame_coefficient() {
        let p = canonical_point(2, 1.2, 0.3, 0.8).unwrap();
        let f = berwald_frame(&jet("1+s", &p), &p).unwrap();
        let want = ((1.0 + p.s) / p.w()).sqrt();
        assert!((f.a - want).abs() < 1e-14);
        let m1 = (p.x[0] - p.s / p.u * p.y[0]) * want;
        assert!((f.m_lo[0] - m1).abs() < 1e-14);
    }

    #[test]
    fn euclidean_frame() {
        let u = 2.5;
        let p = canonical_point(2, 1.0, 0.0, u).unwrap();
        let f = berwald_frame(&jet("1", &p), &p).unwrap();
        assert!((&f.ell_hi - &p.y / u).amax() < 1e-15);
        assert!((f.m_hi.clone() - &p.x).amax() < 1e-15 || (f.m_hi.clone() + &p.x).amax() < 1e-15);
        assert!(f.m_hi.dot(&p.y).abs() < 1e-15);
    }

    #[test]
    fn frame_reconstructs_metric() {
        for p in grid() {
            let j = jet("1 + 0.3*s + 0.4*s^2 + 0.1*r*s", &p);
            let f = berwald_frame(&j, &p).unwrap();
            let mp = metric_pack(&j, &p).unwrap();
            let g = &f.ell_lo * f.ell_lo.transpose() + &f.m_lo * f.m_lo.transpose();
            let gi = &f.ell_hi * f.ell_hi.transpose() + &f.m_hi * f.m_hi.transpose();
            assert!((g - &mp.g).amax() < 1e-12);
            assert!((gi - &mp.ginv).amax() < 1e-12);
            let id: DMatrix<f64> = &mp.g * (&f.m_hi * f.m_hi.transpose());
            assert!((id.trace() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn randers_main_scalar_at_s_zero() {
        let p = canonical_point(2, 1.0, 0.0, 1.0).unwrap();
        let ms = main_scalar(&jet("1+s", &p), &p).unwrap();
        assert!((ms.i - 1.5).abs() < 1e-14);
        assert!((ms.i - ms.i_direct).abs() < 1e-13);
    }

    #[test]
    fn riemannian_main_scalar_vanishes() {
        for p in grid() {
            let ms = main_scalar(&jet("sqrt(1+s^2)", &p), &p).unwrap();
            assert!(ms.i.abs() < 1e-12);
            assert!(ms.i_direct.abs() < 1e-12);
        }
    }

    #[test]
    fn riemannian_test_examples() {
        let g = grid();
        let tol = Tolerances::default();
        let t = |src: &str| riemannian_test(&parse(src).unwrap(), &g, &tol).unwrap();
        assert!(t("sqrt(1+s^2)").is_riemannian);
        assert!(t("sqrt(0.5*s^2 + r^2)").is_riemannian);
        let randers = t("1+s");
        assert!(!randers.is_riemannian);
        assert_eq!(randers.max_mu, 1.0);
        assert!(matches!(
            riemannian_test(&parse("1").unwrap(), &g[..5], &tol),
            Err(GeometryError::GridTooSmall { .. })
        ));
    }

    #[test]
    fn frame_requires_surface_and_positive_radicand() {
        let p = canonical_point(3, 1.0, 0.2, 1.0).unwrap();
        assert_eq!(
            berwald_frame(&jet("1", &p), &p).unwrap_err(),
            GeometryError::NotASurface(3)
        );
        // phi - s phi_s + (r^2 - s^2) phi_ss < 0 while phi > 0
        let p = canonical_point(2, 1.0, 0.2, 1.0).unwrap();
        assert!(matches!(
            berwald_frame(&jet("2 - 3*s^2", &p), &p),
            Err(GeometryError::FrameRadicand(_))
        ));
    }
}

//! Fundamental tensor, inverse, determinant and Cartan tensor of
//! `F = u * phi(r, s)` at a point of the slit tangent bundle.
//!
//! All index gymnastics use the Euclidean carrier metric, so lowered and
//! raised components of `x`, `y` coincide.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{GeometryError, Result};
use crate::expr::Expr;
use crate::jet::{eval_jet, Jet4};

/// Points with `r - |s| < BOUNDARY_REL * r` are rejected.
pub const BOUNDARY_REL: f64 = 1e-6;

/// Smallest grid accepted by the grid-level classifiers.
pub const MIN_GRID: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub abs: f64,
    pub rel: f64,
    /// Threshold for the degeneracy tests, scaled by `max(1, phi^2)`.
    pub degeneracy: f64,
    /// Threshold for curvature identities, scaled by `max(1, |R1|, ..., |R5|)`.
    pub curvature: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            abs: 1e-9,
            rel: 1e-7,
            degeneracy: 1e-8,
            curvature: 1e-8,
        }
    }
}

impl Tolerances {
    pub fn within(&self, residual: f64, scale: f64) -> bool {
        residual.abs() <= self.abs + self.rel * scale.abs()
    }
}

/// A point `(x, y)` with `|x| = r`, `|y| = u`, `<x, y> = s u`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalPoint {
    pub n: usize,
    pub r: f64,
    pub s: f64,
    pub u: f64,
    pub x: DVector<f64>,
    pub y: DVector<f64>,
}

impl EvalPoint {
    /// `r^2 - s^2`, positive on admissible points.
    pub fn w(&self) -> f64 {
        self.r * self.r - self.s * self.s
    }

    /// The Euclidean covector `n_j = x_j - (s/u) y_j`, orthogonal to `y`.
    pub fn n_vec(&self) -> DVector<f64> {
        &self.x - &self.y * (self.s / self.u)
    }

    /// Build a point from arbitrary vectors, deriving `r`, `s`, `u`.
    pub fn from_vectors(x: DVector<f64>, y: DVector<f64>) -> Result<EvalPoint> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(GeometryError::Dimension(n.min(y.len())));
        }
        let r = x.norm();
        let u = y.norm();
        let s = if u > 0.0 { x.dot(&y) / u } else { 0.0 };
        let bad = |reason| GeometryError::InvalidPoint { r, s, u, reason };
        if r <= 0.0 {
            return Err(bad("r must be positive"));
        }
        if u <= 0.0 {
            return Err(bad("u must be positive"));
        }
        if r - s.abs() < BOUNDARY_REL * r {
            return Err(bad("too close to the boundary |s| = r"));
        }
        Ok(EvalPoint { n, r, s, u, x, y })
    }

    /// Apply an orthogonal matrix to both `x` and `y`.
    pub fn rotated(&self, q: &DMatrix<f64>) -> EvalPoint {
        EvalPoint {
            x: q * &self.x,
            y: q * &self.y,
            ..self.clone()
        }
    }
}

/// Realize `(r, s, u)` in the `x^1 x^2` coordinate plane:
/// `x = (r, 0, ...)`, `y = (s u / r, (u / r) sqrt(r^2 - s^2), 0, ...)`.
pub fn canonical_point(n: usize, r: f64, s: f64, u: f64) -> Result<EvalPoint> {
    let bad = |reason| GeometryError::InvalidPoint { r, s, u, reason };
    if n < 2 {
        return Err(GeometryError::Dimension(n));
    }
    if !(r.is_finite() && s.is_finite() && u.is_finite()) {
        return Err(bad("non-finite coordinate"));
    }
    if r <= 0.0 {
        return Err(bad("r must be positive"));
    }
    if u <= 0.0 {
        return Err(bad("u must be positive"));
    }
    if s.abs() >= r {
        return Err(bad("|s| must be smaller than r"));
    }
    if r - s.abs() < BOUNDARY_REL * r {
        return Err(bad("too close to the boundary |s| = r"));
    }
    let mut x = DVector::zeros(n);
    let mut y = DVector::zeros(n);
    x[0] = r;
    y[0] = s * u / r;
    y[1] = (u / r) * (r * r - s * s).sqrt();
    Ok(EvalPoint { n, r, s, u, x, y })
}

/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix with the
/// sign of `R`'s diagonal folded into `Q`).
pub fn random_rotation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = a.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// The partials of `phi` needed by the metric-level formulas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhiDerivs {
    pub phi: f64,
    pub phi_r: f64,
    pub phi_s: f64,
    pub phi_ss: f64,
    pub phi_rs: f64,
    pub phi_sss: f64,
}

impl PhiDerivs {
    pub fn from_jet(jet: &Jet4) -> Result<PhiDerivs> {
        if jet.degree() < 3 {
            return Err(GeometryError::JetDegree {
                needed: 3,
                found: jet.degree(),
            });
        }
        Ok(PhiDerivs {
            phi: jet.value(),
            phi_r: jet.partial(1, 0),
            phi_s: jet.partial(0, 1),
            phi_ss: jet.partial(0, 2),
            phi_rs: jet.partial(1, 1),
            phi_sss: jet.partial(0, 3),
        })
    }

    /// `phi - s phi_s`.
    pub fn first_factor(&self, s: f64) -> f64 {
        self.phi - s * self.phi_s
    }

    /// `phi - s phi_s + (r^2 - s^2) phi_ss`.
    pub fn second_factor(&self, r: f64, s: f64) -> f64 {
        self.phi - s * self.phi_s + (r * r - s * s) * self.phi_ss
    }

    /// `s phi + (r^2 - s^2) phi_s`, which equals `x^i dF/dy^i`.
    pub fn x_contraction(&self, r: f64, s: f64) -> f64 {
        s * self.phi + (r * r - s * s) * self.phi_s
    }

    /// `phi phi_s - s phi_s^2 - s phi phi_ss`.
    pub fn mu(&self, s: f64) -> f64 {
        self.phi * self.phi_s - s * self.phi_s * self.phi_s - s * self.phi * self.phi_ss
    }

    /// `3 phi_s phi_ss + phi phi_sss`.
    pub fn nu(&self) -> f64 {
        3.0 * self.phi_s * self.phi_ss + self.phi * self.phi_sss
    }
}

pub(crate) fn check_jet_point(jet: &Jet4, p: &EvalPoint) -> Result<()> {
    let (jr, js) = jet.base();
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * 1f64.max(a.abs());
    if close(jr, p.r) && close(js, p.s) {
        Ok(())
    } else {
        Err(GeometryError::JetPoint {
            jr,
            js,
            r: p.r,
            s: p.s,
        })
    }
}

/// `dF/dy^i = (phi/u) y_i + phi_s n_i`, i.e. the covariant supporting element.
pub fn dfdy(d: &PhiDerivs, p: &EvalPoint) -> DVector<f64> {
    &p.y * (d.phi / p.u) + p.n_vec() * d.phi_s
}

/// `dF/dx^j = u (phi_r x_j / r + phi_s y_j / u)`.
pub fn dfdx(d: &PhiDerivs, p: &EvalPoint) -> DVector<f64> {
    (&p.x * (d.phi_r / p.r) + &p.y * (d.phi_s / p.u)) * p.u
}

/// `g_jk = s0 delta + s1 x x + (s2/u)(x y + y x) + (s3/u^2) y y`.
pub fn sigmas(d: &PhiDerivs, s: f64) -> [f64; 4] {
    let a = d.first_factor(s);
    [
        d.phi * a,
        d.phi_s * d.phi_s + d.phi * d.phi_ss,
        a * d.phi_s - s * d.phi * d.phi_ss,
        s * s * d.phi * d.phi_ss - s * a * d.phi_s,
    ]
}

/// Coefficients of the inverse,
/// `g^jk = p0 delta + (p1/u^2) y y + (p2/u)(x y + y x) + p3 x x`.
pub fn rhos(d: &PhiDerivs, r: f64, s: f64) -> [f64; 4] {
    let a = d.first_factor(s);
    let b = d.second_factor(r, s);
    let mu = d.mu(s);
    let phi = d.phi;
    [
        1.0 / (phi * a),
        d.x_contraction(r, s) * mu / (phi.powi(3) * a * b),
        -mu / (phi * phi * a * b),
        -d.phi_ss / (phi * a * b),
    ]
}

fn outer_sym(a: &DVector<f64>, b: &DVector<f64>) -> DMatrix<f64> {
    a * b.transpose() + b * a.transpose()
}

/// The fundamental tensor `g_jk`, with no positivity requirement on `phi`.
pub fn metric_tensor(d: &PhiDerivs, p: &EvalPoint) -> DMatrix<f64> {
    let [s0, s1, s2, s3] = sigmas(d, p.s);
    let u = p.u;
    DMatrix::identity(p.n, p.n) * s0
        + &p.x * p.x.transpose() * s1
        + outer_sym(&p.x, &p.y) * (s2 / u)
        + &p.y * p.y.transpose() * (s3 / (u * u))
}

/// `phi^(n+1) (phi - s phi_s)^(n-2) (phi - s phi_s + (r^2-s^2) phi_ss)`.
pub fn det_formula(d: &PhiDerivs, n: usize, r: f64, s: f64) -> f64 {
    d.phi.powi(n as i32 + 1) * d.first_factor(s).powi(n as i32 - 2) * d.second_factor(r, s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricPack {
    pub derivs: PhiDerivs,
    pub sigma: [f64; 4],
    pub rho: [f64; 4],
    pub g: DMatrix<f64>,
    /// Inverse assembled from the closed-form `rho` coefficients.
    pub ginv: DMatrix<f64>,
    /// Determinant by LU factorization of `g`.
    pub det_direct: f64,
    pub det_formula: f64,
    /// `F = u phi`.
    pub f: f64,
    /// `(phi - s phi_s > 0, phi - s phi_s + (r^2-s^2) phi_ss > 0)`.
    pub regular: (bool, bool),
}

impl MetricPack {
    pub fn is_regular(&self, n: usize) -> bool {
        if n == 2 {
            self.regular.1
        } else {
            self.regular.0 && self.regular.1
        }
    }
}

pub fn metric_pack(jet: &Jet4, p: &EvalPoint) -> Result<MetricPack> {
    check_jet_point(jet, p)?;
    let d = PhiDerivs::from_jet(jet)?;
    if d.phi <= 0.0 {
        return Err(GeometryError::NonPositivePhi(d.phi));
    }
    let g = metric_tensor(&d, p);
    let rho = rhos(&d, p.r, p.s);
    let u = p.u;
    let ginv = DMatrix::identity(p.n, p.n) * rho[0]
        + &p.y * p.y.transpose() * (rho[1] / (u * u))
        + outer_sym(&p.x, &p.y) * (rho[2] / u)
        + &p.x * p.x.transpose() * rho[3];
    let det_direct = g.clone().lu().determinant();
    Ok(MetricPack {
        derivs: d,
        sigma: sigmas(&d, p.s),
        rho,
        det_formula: det_formula(&d, p.n, p.r, p.s),
        det_direct,
        g,
        ginv,
        f: u * d.phi,
        regular: (d.first_factor(p.s) > 0.0, d.second_factor(p.r, p.s) > 0.0),
    })
}

/// A fully symmetric rank-3 array stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    pub n: usize,
    pub data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(n: usize) -> Tensor3 {
        Tensor3 {
            n,
            data: vec![0.0; n * n * n],
        }
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.n + j) * self.n + k]
    }

    fn at(&mut self, i: usize, j: usize, k: usize) -> &mut f64 {
        &mut self.data[(i * self.n + j) * self.n + k]
    }

    /// `T_ijk v^k`.
    pub fn contract_last(&self, v: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| {
            (0..self.n).map(|k| self.get(i, j, k) * v[k]).sum()
        })
    }

    /// `T_ijk a^i b^j c^k`.
    pub fn contract3(&self, a: &DVector<f64>, b: &DVector<f64>, c: &DVector<f64>) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                for k in 0..self.n {
                    acc += self.get(i, j, k) * a[i] * b[j] * c[k];
                }
            }
        }
        acc
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CartanPack {
    pub mu: f64,
    pub nu: f64,
    pub c: Tensor3,
}

/// Cartan tensor `C_ijk = (1/2) dg_ij/dy^k` from its closed form in `mu`, `nu`.
pub fn cartan_pack(jet: &Jet4, p: &EvalPoint) -> Result<CartanPack> {
    check_jet_point(jet, p)?;
    let d = PhiDerivs::from_jet(jet)?;
    if d.phi <= 0.0 {
        return Err(GeometryError::NonPositivePhi(d.phi));
    }
    let (mu, nu) = (d.mu(p.s), d.nu());
    let (s, u, n) = (p.s, p.u, p.n);
    let (x, y) = (&p.x, &p.y);
    let delta = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };

    let c_xd = mu / (2.0 * u);
    let c_xxx = nu / (2.0 * u);
    let c_yd = -s * mu / (2.0 * u * u);
    let c_yyy = (3.0 * s * mu - s.powi(3) * nu) / (2.0 * u.powi(4));
    let c_yyx = (s * s * nu - mu) / (2.0 * u.powi(3));
    let c_xxy = -s * nu / (2.0 * u * u);

    let mut c = Tensor3::zeros(n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let v = c_xd * (x[i] * delta(j, k) + x[j] * delta(i, k) + x[k] * delta(i, j))
                    + c_xxx * x[i] * x[j] * x[k]
                    + c_yd * (y[i] * delta(j, k) + y[j] * delta(i, k) + y[k] * delta(i, j))
                    + c_yyy * y[i] * y[j] * y[k]
                    + c_yyx * (y[i] * y[j] * x[k] + y[j] * y[k] * x[i] + y[i] * y[k] * x[j])
                    + c_xxy * (x[i] * x[j] * y[k] + x[i] * x[k] * y[j] + x[k] * x[j] * y[i]);
                *c.at(i, j, k) = v;
            }
        }
    }
    Ok(CartanPack { mu, nu, c })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Degeneracy {
    Nondegenerate,
    /// `phi - s phi_s = 0`, i.e. `phi = f(r^2) s`.
    DegenerateTypeA,
    /// `phi - s phi_s + (r^2-s^2) phi_ss = 0`, i.e.
    /// `phi = f1(r^2) s + f2(r^2) sqrt(r^2 - s^2)`.
    DegenerateTypeB,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegeneracyReport {
    pub class: Degeneracy,
    /// `max |phi - s phi_s| / max(1, phi^2)` over the grid.
    pub max_type_a_residual: f64,
    /// `max |phi - s phi_s + (r^2-s^2) phi_ss| / max(1, phi^2)` over the grid.
    pub max_type_b_residual: f64,
    /// `max |det g|` (LU) over the grid.
    pub max_det_direct: f64,
    /// `max |det_formula|` over the grid.
    pub max_det_formula: f64,
}

/// Decide whether `phi` belongs to one of the two degenerate families on a grid.
pub fn degeneracy_classify(
    phi: &Expr,
    grid: &[EvalPoint],
    tol: &Tolerances,
) -> Result<DegeneracyReport> {
    if grid.len() < MIN_GRID {
        return Err(GeometryError::GridTooSmall {
            needed: MIN_GRID,
            found: grid.len(),
        });
    }
    let mut rep = DegeneracyReport {
        class: Degeneracy::Nondegenerate,
        max_type_a_residual: 0.0,
        max_type_b_residual: 0.0,
        max_det_direct: 0.0,
        max_det_formula: 0.0,
    };
    let (mut all_a, mut all_b) = (true, true);
    for p in grid {
        let jet = eval_jet(phi, p.r, p.s)?;
        let d = PhiDerivs::from_jet(&jet)?;
        let scale = 1f64.max(d.phi * d.phi);
        let ra = d.first_factor(p.s).abs() / scale;
        let rb = d.second_factor(p.r, p.s).abs() / scale;
        all_a &= ra < tol.degeneracy;
        all_b &= rb < tol.degeneracy;
        rep.max_type_a_residual = rep.max_type_a_residual.max(ra);
        rep.max_type_b_residual = rep.max_type_b_residual.max(rb);
        let g = metric_tensor(&d, p);
        rep.max_det_direct = rep.max_det_direct.max(g.lu().determinant().abs());
        rep.max_det_formula = rep
            .max_det_formula
            .max(det_formula(&d, p.n, p.r, p.s).abs());
    }
    rep.class = if all_a {
        Degeneracy::DegenerateTypeA
    } else if all_b {
        Degeneracy::DegenerateTypeB
    } else {
        Degeneracy::Nondegenerate
    };
    Ok(rep)
}

#![allow(dead_code)]

use finsler_lab::expr::{parse, Expr};
use finsler_lab::geometry::{canonical_point, random_rotation, EvalPoint, PhiDerivs};
use finsler_lab::jet::eval_jet;
use finsler_lab::spray::{connection_coefficients, spray_coefficients};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

pub const BASIS: [&str; 7] = ["1", "s", "s^2", "sqrt(1+s^2)", "exp(s/10)", "r^2", "r*s"];

/// Positive combination of [`BASIS`] that stays regular on the usual grids.
pub fn random_phi_source<R: Rng + ?Sized>(rng: &mut R) -> String {
    let hi = [0.0, 0.3, 0.5, 0.5, 0.5, 0.4, 0.2];
    let mut terms = vec![format!("{:.6}", rng.random_range(0.8..1.5))];
    for (b, h) in BASIS.iter().zip(hi).skip(1) {
        let c: f64 = rng.random_range(0.0..h);
        terms.push(format!("{c:.6}*{b}"));
    }
    terms.join(" + ")
}

pub fn linspace(a: f64, b: f64, k: usize) -> Vec<f64> {
    (0..k)
        .map(|i| a + (b - a) * i as f64 / (k - 1).max(1) as f64)
        .collect()
}

/// Canonical points on an `r` by `s/r` product grid.
pub fn grid(n: usize, rs: &[f64], fracs: &[f64], u: f64) -> Vec<EvalPoint> {
    let mut out = Vec::new();
    for &r in rs {
        for &f in fracs {
            out.push(canonical_point(n, r, f * r, u).unwrap());
        }
    }
    out
}

/// 25-point grid, each point rotated at random.
pub fn rotated_grid<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<EvalPoint> {
    grid(n, &linspace(0.4, 1.2, 5), &linspace(-0.8, 0.8, 5), 1.3)
        .into_iter()
        .map(|p| p.rotated(&random_rotation(n, rng)))
        .collect()
}

pub fn derivs(phi: &Expr, p: &EvalPoint) -> PhiDerivs {
    PhiDerivs::from_jet(&eval_jet(phi, p.r, p.s).unwrap()).unwrap()
}

pub fn is_regular(phi: &Expr, p: &EvalPoint) -> bool {
    let Ok(jet) = eval_jet(phi, p.r, p.s) else {
        return false;
    };
    let d = PhiDerivs::from_jet(&jet).unwrap();
    d.phi > 0.0 && d.first_factor(p.s) > 0.0 && d.second_factor(p.r, p.s) > 0.0
}

pub fn phi_expr(src: &str) -> Expr {
    parse(src).unwrap()
}

/// `F(x, y) = |y| phi(|x|, <x, y>/|y|)` from plain evaluation.
pub fn finsler_value(phi: &Expr, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    let u = y.norm();
    phi.eval(x.norm(), x.dot(y) / u).expect("phi defined") * u
}

fn unit(n: usize, i: usize) -> DVector<f64> {
    let mut e = DVector::zeros(n);
    e[i] = 1.0;
    e
}

/// Fourth-order central difference of a vector valued map along `dir`.
pub fn directional<F>(f: F, v: &DVector<f64>, dir: &DVector<f64>, h: f64) -> DVector<f64>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let at = |t: f64| f(&(v + dir * t));
    (at(-2.0 * h) - at(2.0 * h) + (at(h) - at(-h)) * 8.0) / (12.0 * h)
}

pub fn directional_matrix<F>(f: F, v: &DVector<f64>, dir: &DVector<f64>, h: f64) -> DMatrix<f64>
where
    F: Fn(&DVector<f64>) -> DMatrix<f64>,
{
    let at = |t: f64| f(&(v + dir * t));
    (at(-2.0 * h) - at(2.0 * h) + (at(h) - at(-h)) * 8.0) / (12.0 * h)
}

/// Column `j` holds the derivative along the `j`-th axis.
pub fn jacobian<F>(f: F, v: &DVector<f64>, h: f64) -> DMatrix<f64>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let n = v.len();
    let cols: Vec<DVector<f64>> = (0..n).map(|j| directional(&f, v, &unit(n, j), h)).collect();
    DMatrix::from_columns(&cols)
}

/// Hessian of `F^2 / 2` in `y` from values only.
pub fn fd_metric(phi: &Expr, x: &DVector<f64>, y: &DVector<f64>) -> DMatrix<f64> {
    let n = y.len();
    let h = 1e-3 * y.norm();
    let l = |v: &DVector<f64>| 0.5 * finsler_value(phi, x, v).powi(2);
    DMatrix::from_fn(n, n, |i, j| {
        let (ei, ej) = (unit(n, i) * h, unit(n, j) * h);
        (l(&(y + &ei + &ej)) - l(&(y + &ei - &ej)) - l(&(y - &ei + &ej)) + l(&(y - &ei - &ej)))
            / (4.0 * h * h)
    })
}

/// `N^i_j = dG^i/dy^j` by differentiating the spray in `y`.
pub fn fd_connection(phi: &Expr, x: &DVector<f64>, y: &DVector<f64>) -> DMatrix<f64> {
    jacobian(
        |v| spray_coefficients(phi, x, v).unwrap(),
        y,
        1e-3 * y.norm(),
    )
}

/// `R^i_k = 2 dG^i/dx^k - y^j d^2G^i/dx^j dy^k + 2 G^j d^2G^i/dy^j dy^k
///  - N^i_j N^j_k`, derivatives of `G` and `N` by finite differences.
pub fn fd_riemann(phi: &Expr, x: &DVector<f64>, y: &DVector<f64>) -> DMatrix<f64> {
    let h = 1e-3 * x.norm().min(y.norm());
    let g = spray_coefficients(phi, x, y).unwrap();
    let n = connection_coefficients(phi, x, y).unwrap();
    let gx = jacobian(|v| spray_coefficients(phi, v, y).unwrap(), x, h);
    let nx_y = directional_matrix(|v| connection_coefficients(phi, v, y).unwrap(), x, y, h);
    let g_norm = g.norm().max(1e-300);
    let hg = h / g_norm * y.norm();
    let ny_g = if g.norm() == 0.0 {
        DMatrix::zeros(x.len(), x.len())
    } else {
        directional_matrix(|v| connection_coefficients(phi, x, v).unwrap(), y, &g, hg)
    };
    gx * 2.0 - nx_y + ny_g * 2.0 - &n * &n
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(1e-300)
}

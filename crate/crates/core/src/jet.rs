//! Bivariate truncated Taylor jets in `(r, s)`.
//!
//! A [`Jet4`] stores Taylor-normalized coefficients
//! `c[a][b] = (d/dr)^a (d/ds)^b f / (a! b!)` for `a + b <= degree`, so a
//! product of jets is the truncated Cauchy product of the coefficient arrays.
//! Expressions are evaluated at degree 4; differentiating a jet lowers its
//! degree by one.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use thiserror::Error;

use crate::expr::{as_small_integer, BinOp, Expr, Func, Var};

/// Highest truncation order carried by a jet.
pub const MAX_DEGREE: usize = 4;

/// Number of coefficients of a full degree-4 jet.
pub const NUM_COEFFS: usize = 15;

const FACT: [f64; 5] = [1.0, 1.0, 2.0, 6.0, 24.0];

/// Arguments of `abs` closer than this to zero are rejected.
pub const ABS_KINK_TOL: f64 = 1e-12;

#[derive(Clone, Copy, PartialEq)]
pub struct Jet4 {
    r0: f64,
    s0: f64,
    degree: usize,
    c: [[f64; 5]; 5],
}

impl fmt::Debug for Jet4 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet4")
            .field("r0", &self.r0)
            .field("s0", &self.s0)
            .field("degree", &self.degree)
            .field("coeffs", &self.coeffs())
            .finish()
    }
}

impl Jet4 {
    pub fn constant(r0: f64, s0: f64, v: f64) -> Jet4 {
        let mut c = [[0.0; 5]; 5];
        c[0][0] = v;
        Jet4 {
            r0,
            s0,
            degree: MAX_DEGREE,
            c,
        }
    }

    /// The coordinate function `r` expanded at `(r0, s0)`.
    pub fn var_r(r0: f64, s0: f64) -> Jet4 {
        let mut j = Jet4::constant(r0, s0, r0);
        j.c[1][0] = 1.0;
        j
    }

    /// The coordinate function `s` expanded at `(r0, s0)`.
    pub fn var_s(r0: f64, s0: f64) -> Jet4 {
        let mut j = Jet4::constant(r0, s0, s0);
        j.c[0][1] = 1.0;
        j
    }

    /// Build a jet from Taylor-normalized coefficients indexed `[a][b]`.
    /// Entries with `a + b > degree` are ignored.
    pub fn from_coeffs(r0: f64, s0: f64, degree: usize, coeffs: [[f64; 5]; 5]) -> Jet4 {
        assert!(degree <= MAX_DEGREE);
        let mut j = Jet4 {
            r0,
            s0,
            degree,
            c: coeffs,
        };
        j.clear_above_degree();
        j
    }

    /// Build a jet from partial derivatives `d^(a+b) f / dr^a ds^b` indexed `[a][b]`.
    pub fn from_partials(r0: f64, s0: f64, degree: usize, partials: [[f64; 5]; 5]) -> Jet4 {
        let mut c = partials;
        for (a, row) in c.iter_mut().enumerate() {
            for (b, v) in row.iter_mut().enumerate() {
                *v /= FACT[a] * FACT[b];
            }
        }
        Jet4::from_coeffs(r0, s0, degree, c)
    }

    fn clear_above_degree(&mut self) {
        for a in 0..5 {
            for b in 0..5 {
                if a + b > self.degree {
                    self.c[a][b] = 0.0;
                }
            }
        }
    }

    pub fn base(&self) -> (f64, f64) {
        (self.r0, self.s0)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn value(&self) -> f64 {
        self.c[0][0]
    }

    /// Taylor-normalized coefficient; zero beyond the truncation degree.
    pub fn coeff(&self, a: usize, b: usize) -> f64 {
        if a + b > self.degree {
            0.0
        } else {
            self.c[a][b]
        }
    }

    /// `d^(a+b) f / dr^a ds^b` at the base point.
    ///
    /// # Panics
    /// If `a + b` exceeds the jet degree.
    pub fn partial(&self, a: usize, b: usize) -> f64 {
        assert!(
            a + b <= self.degree,
            "partial of order {} requested from a degree-{} jet",
            a + b,
            self.degree
        );
        self.c[a][b] * FACT[a] * FACT[b]
    }

    /// Coefficients in graded order `(0,0), (1,0), (0,1), (2,0), (1,1), (0,2), ...`.
    pub fn coeffs(&self) -> Vec<f64> {
        graded_indices(self.degree)
            .map(|(a, b)| self.c[a][b])
            .collect()
    }

    /// Partial derivatives in the same graded order as [`Jet4::coeffs`].
    pub fn partials(&self) -> Vec<f64> {
        graded_indices(self.degree)
            .map(|(a, b)| self.partial(a, b))
            .collect()
    }

    /// Jet of `df/dr`, one degree lower.
    pub fn dr(&self) -> Jet4 {
        assert!(self.degree > 0, "cannot differentiate a degree-0 jet");
        let mut c = [[0.0; 5]; 5];
        for a in 0..self.degree {
            for b in 0..self.degree - a {
                c[a][b] = (a + 1) as f64 * self.c[a + 1][b];
            }
        }
        Jet4 {
            r0: self.r0,
            s0: self.s0,
            degree: self.degree - 1,
            c,
        }
    }

    /// Jet of `df/ds`, one degree lower.
    pub fn ds(&self) -> Jet4 {
        assert!(self.degree > 0, "cannot differentiate a degree-0 jet");
        let mut c = [[0.0; 5]; 5];
        for a in 0..self.degree {
            for b in 0..self.degree - a {
                c[a][b] = (b + 1) as f64 * self.c[a][b + 1];
            }
        }
        Jet4 {
            r0: self.r0,
            s0: self.s0,
            degree: self.degree - 1,
            c,
        }
    }

    /// Truncate to a lower degree.
    pub fn truncate(&self, degree: usize) -> Jet4 {
        let mut j = *self;
        j.degree = degree.min(self.degree);
        j.clear_above_degree();
        j
    }

    pub fn is_constant(&self) -> bool {
        graded_indices(self.degree)
            .skip(1)
            .all(|(a, b)| self.c[a][b] == 0.0)
    }

    fn zip_degree(&self, other: &Jet4) -> (usize, f64, f64) {
        (self.degree.min(other.degree), self.r0, self.s0)
    }

    /// `sum_k t[k] * (self - self(0))^k`, i.e. composition of a univariate
    /// function with Taylor coefficients `t` at `self.value()`.
    pub fn compose(&self, t: &[f64; 5]) -> Jet4 {
        let mut h = *self;
        h.c[0][0] = 0.0;
        // Horner in the nilpotent part
        let mut acc = Jet4::constant(self.r0, self.s0, t[self.degree]);
        acc.degree = self.degree;
        for k in (0..self.degree).rev() {
            acc = acc * h;
            acc.c[0][0] += t[k];
        }
        acc
    }

    pub fn recip(&self) -> Result<Jet4, JetDomain> {
        let v = self.value();
        if v == 0.0 {
            return Err(JetDomain { order: 0 });
        }
        let mut t = [0.0; 5];
        let mut p = 1.0 / v;
        for (k, tk) in t.iter_mut().enumerate() {
            *tk = if k % 2 == 0 { p } else { -p };
            p /= v;
        }
        Ok(self.compose(&t))
    }

    pub fn sqrt(&self) -> Result<Jet4, JetDomain> {
        let v = self.value();
        if v < 0.0 {
            return Err(JetDomain { order: 0 });
        }
        if v == 0.0 {
            if self.is_constant() {
                return Ok(Jet4::constant(self.r0, self.s0, 0.0).truncate(self.degree));
            }
            return Err(JetDomain { order: 1 });
        }
        // binomial series of (v + h)^(1/2)
        let mut t = [0.0; 5];
        let mut binom = 1.0;
        let mut p = v.sqrt();
        for (k, tk) in t.iter_mut().enumerate() {
            *tk = binom * p;
            binom *= (0.5 - k as f64) / (k + 1) as f64;
            p /= v;
        }
        Ok(self.compose(&t))
    }

    pub fn exp(&self) -> Jet4 {
        let e = self.value().exp();
        let t = [e, e, e / 2.0, e / 6.0, e / 24.0];
        self.compose(&t)
    }

    pub fn ln(&self) -> Result<Jet4, JetDomain> {
        let v = self.value();
        if v <= 0.0 {
            return Err(JetDomain { order: 0 });
        }
        let mut t = [v.ln(), 0.0, 0.0, 0.0, 0.0];
        for (k, tk) in t.iter_mut().enumerate().skip(1) {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            *tk = sign / (k as f64 * v.powi(k as i32));
        }
        Ok(self.compose(&t))
    }

    pub fn sin(&self) -> Jet4 {
        let (s, c) = self.value().sin_cos();
        self.compose(&[s, c, -s / 2.0, -c / 6.0, s / 24.0])
    }

    pub fn cos(&self) -> Jet4 {
        let (s, c) = self.value().sin_cos();
        self.compose(&[c, -s, -c / 2.0, s / 6.0, c / 24.0])
    }

    pub fn abs(&self) -> Result<Jet4, JetDomain> {
        let v = self.value();
        if v.abs() <= ABS_KINK_TOL {
            if self.is_constant() {
                return Ok(Jet4::constant(self.r0, self.s0, v.abs()).truncate(self.degree));
            }
            return Err(JetDomain { order: 1 });
        }
        Ok(if v < 0.0 { -*self } else { *self })
    }

    /// Integer power by repeated squaring.
    pub fn powi(&self, k: i32) -> Result<Jet4, JetDomain> {
        let base = if k < 0 { self.recip()? } else { *self };
        let mut n = k.unsigned_abs();
        let mut acc = Jet4::constant(self.r0, self.s0, 1.0).truncate(self.degree);
        let mut sq = base;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc * sq;
            }
            n >>= 1;
            if n > 0 {
                sq = sq * sq;
            }
        }
        Ok(acc)
    }

    /// General power `exp(e * ln(self))`.
    pub fn powj(&self, e: &Jet4) -> Result<Jet4, JetDomain> {
        Ok((*e * self.ln()?).exp())
    }
}

fn graded_indices(degree: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..=degree).flat_map(|d| (0..=d).rev().map(move |a| (a, d - a)))
}

/// Domain failure inside a jet primitive; `order` is the lowest partial
/// order that cannot be formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JetDomain {
    pub order: usize,
}

impl Add for Jet4 {
    type Output = Jet4;
    fn add(self, rhs: Jet4) -> Jet4 {
        let (degree, r0, s0) = self.zip_degree(&rhs);
        let mut c = [[0.0; 5]; 5];
        for a in 0..=degree {
            for b in 0..=degree - a {
                c[a][b] = self.c[a][b] + rhs.c[a][b];
            }
        }
        Jet4 { r0, s0, degree, c }
    }
}

impl Sub for Jet4 {
    type Output = Jet4;
    fn sub(self, rhs: Jet4) -> Jet4 {
        self + (-rhs)
    }
}

impl Neg for Jet4 {
    type Output = Jet4;
    fn neg(mut self) -> Jet4 {
        for row in self.c.iter_mut() {
            for v in row.iter_mut() {
                *v = -*v;
            }
        }
        self
    }
}

impl Mul for Jet4 {
    type Output = Jet4;
    fn mul(self, rhs: Jet4) -> Jet4 {
        let (degree, r0, s0) = self.zip_degree(&rhs);
        let mut c = [[0.0; 5]; 5];
        for a in 0..=degree {
            for b in 0..=degree - a {
                let mut acc = 0.0;
                for i in 0..=a {
                    for j in 0..=b {
                        acc += self.c[i][j] * rhs.c[a - i][b - j];
                    }
                }
                c[a][b] = acc;
            }
        }
        Jet4 { r0, s0, degree, c }
    }
}

/// Panics on a zero divisor; use [`Jet4::recip`] for a checked division.
impl Div for Jet4 {
    type Output = Jet4;
    fn div(self, rhs: Jet4) -> Jet4 {
        self * rhs.recip().expect("division by a jet with zero value")
    }
}

impl Add<f64> for Jet4 {
    type Output = Jet4;
    fn add(mut self, rhs: f64) -> Jet4 {
        self.c[0][0] += rhs;
        self
    }
}

impl Sub<f64> for Jet4 {
    type Output = Jet4;
    fn sub(mut self, rhs: f64) -> Jet4 {
        self.c[0][0] -= rhs;
        self
    }
}

impl Mul<f64> for Jet4 {
    type Output = Jet4;
    fn mul(mut self, rhs: f64) -> Jet4 {
        for row in self.c.iter_mut() {
            for v in row.iter_mut() {
                *v *= rhs;
            }
        }
        self
    }
}

impl Div<f64> for Jet4 {
    type Output = Jet4;
    fn div(self, rhs: f64) -> Jet4 {
        self * (1.0 / rhs)
    }
}

impl Mul<Jet4> for f64 {
    type Output = Jet4;
    fn mul(self, rhs: Jet4) -> Jet4 {
        rhs * self
    }
}

impl Add<Jet4> for f64 {
    type Output = Jet4;
    fn add(self, rhs: Jet4) -> Jet4 {
        rhs + self
    }
}

impl Sub<Jet4> for f64 {
    type Output = Jet4;
    fn sub(self, rhs: Jet4) -> Jet4 {
        -rhs + self
    }
}

/// A domain violation while evaluating an expression as a jet.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("domain violation in `{node}` at partial order {order}: {reason}")]
pub struct EvalError {
    /// Printed form of the first failing sub-expression.
    pub node: String,
    /// Lowest derivative order that could not be formed.
    pub order: usize,
    pub reason: &'static str,
    pub r: f64,
    pub s: f64,
}

/// Evaluate `e` as a degree-4 jet at `(r, s)`.
pub fn eval_jet(e: &Expr, r: f64, s: f64) -> Result<Jet4, EvalError> {
    let jet = eval_node(e, r, s)?;
    if !jet.coeffs().iter().all(|v| v.is_finite()) {
        return Err(EvalError {
            node: e.to_string(),
            order: 0,
            reason: "non-finite result",
            r,
            s,
        });
    }
    Ok(jet)
}

fn eval_node(e: &Expr, r: f64, s: f64) -> Result<Jet4, EvalError> {
    let fail = |dom: JetDomain, reason: &'static str| EvalError {
        node: e.to_string(),
        order: dom.order,
        reason,
        r,
        s,
    };
    Ok(match e {
        Expr::Num(v) => Jet4::constant(r, s, *v),
        Expr::Var(Var::R) => Jet4::var_r(r, s),
        Expr::Var(Var::S) => Jet4::var_s(r, s),
        Expr::Neg(a) => -eval_node(a, r, s)?,
        Expr::Bin(op, a, b) => {
            let a = eval_node(a, r, s)?;
            let b = eval_node(b, r, s)?;
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => a * b.recip().map_err(|d| fail(d, "division by zero"))?,
                BinOp::Pow => match as_small_integer(b.value()).filter(|_| b.is_constant()) {
                    Some(k) => a.powi(k).map_err(|d| fail(d, "negative power of zero"))?,
                    None => a
                        .powj(&b)
                        .map_err(|d| fail(d, "non-integer power of a non-positive base"))?,
                },
            }
        }
        Expr::Call(f, a) => {
            let a = eval_node(a, r, s)?;
            match f {
                Func::Sqrt => a
                    .sqrt()
                    .map_err(|d| fail(d, "sqrt of a non-positive value"))?,
                Func::Exp => a.exp(),
                Func::Ln => a.ln().map_err(|d| fail(d, "ln of a non-positive value"))?,
                Func::Sin => a.sin(),
                Func::Cos => a.cos(),
                Func::Abs => a.abs().map_err(|d| fail(d, "abs at its kink"))?,
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn jet(src: &str, r: f64, s: f64) -> Jet4 {
        eval_jet(&parse(src).unwrap(), r, s).unwrap()
    }

    #[test]
    fn linear_function() {
        let j = jet("s", 2.0, 1.0);
        assert_eq!(j.value(), 1.0);
        assert_eq!(j.partial(0, 1), 1.0);
        for (a, b) in graded_indices(4).skip(1) {
            if (a, b) != (0, 1) {
                assert_eq!(j.partial(a, b), 0.0, "({a},{b})");
            }
        }
    }

    #[test]
    fn constant_jet() {
        let j = jet("3.5", 1.0, 0.2);
        assert_eq!(j.value(), 3.5);
        assert!(j.is_constant());
        assert_eq!(j.coeffs().len(), NUM_COEFFS);
    }

    #[test]
    fn sqrt_one_plus_s_squared_at_origin_in_s() {
        let j = jet("sqrt(1+s^2)", 1.0, 0.0);
        assert_eq!(j.value(), 1.0);
        assert_eq!(j.partial(0, 1), 0.0);
        assert!((j.partial(0, 2) - 1.0).abs() < 1e-15);
        assert!((j.partial(0, 4) + 3.0).abs() < 1e-14);
    }

    #[test]
    fn product_is_truncated_cauchy_product() {
        // (1 + r s)(r + s^2) expanded at (0, 0)
        let f = jet("(1 + r*s)*(r + s^2)", 0.0, 0.0);
        // r + s^2 + r^2 s + r s^3
        assert_eq!(f.coeff(1, 0), 1.0);
        assert_eq!(f.coeff(0, 2), 1.0);
        assert_eq!(f.coeff(2, 1), 1.0);
        assert_eq!(f.coeff(1, 3), 1.0);
        assert_eq!(f.coeff(1, 1), 0.0);
    }

    #[test]
    fn derivative_jets_lower_degree() {
        let j = jet("exp(r*s)", 0.5, 0.25);
        let js = j.ds();
        assert_eq!(js.degree(), 3);
        assert!((js.value() - j.partial(0, 1)).abs() < 1e-15);
        assert!((js.partial(1, 2) - j.partial(1, 3)).abs() < 1e-12);
        let jrs = j.dr().ds();
        assert_eq!(jrs.degree(), 2);
        assert!((jrs.partial(1, 1) - j.partial(2, 2)).abs() < 1e-12);
    }

    #[test]
    fn integer_and_fractional_powers() {
        let a = jet("r^3", 2.0, 0.0);
        assert_eq!(a.value(), 8.0);
        assert_eq!(a.partial(1, 0), 12.0);
        assert_eq!(a.partial(3, 0), 6.0);
        assert_eq!(a.partial(4, 0), 0.0);
        let b = jet("r^-2", 2.0, 0.0);
        assert!((b.partial(1, 0) + 0.25).abs() < 1e-15);
        let c = jet("r^0.5", 4.0, 0.0);
        assert!((c.value() - 2.0).abs() < 1e-15);
        assert!((c.partial(1, 0) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn domain_violations_name_the_node() {
        let e = parse("1 + sqrt(s)").unwrap();
        let err = eval_jet(&e, 1.0, -0.5).unwrap_err();
        assert_eq!(err.node, "sqrt(s)");
        assert_eq!(err.order, 0);

        // value defined, first derivative is not
        let err = eval_jet(&e, 1.0, 0.0).unwrap_err();
        assert_eq!(err.order, 1);

        let err = eval_jet(&parse("abs(s)").unwrap(), 1.0, 1e-13).unwrap_err();
        assert_eq!(err.order, 1);
        assert!(eval_jet(&parse("abs(s)").unwrap(), 1.0, -0.3).is_ok());

        let err = eval_jet(&parse("r/(s-s)").unwrap(), 1.0, 0.3).unwrap_err();
        assert_eq!(err.reason, "division by zero");

        let err = eval_jet(&parse("ln(s)").unwrap(), 1.0, -0.3).unwrap_err();
        assert_eq!(err.node, "ln(s)");
        assert!(eval_jet(&parse("s^1.5").unwrap(), 1.0, -0.3).is_err());
    }

    #[test]
    fn abs_flips_sign_of_negative_argument() {
        let j = jet("abs(s - r)", 1.0, 0.25);
        assert_eq!(j.value(), 0.75);
        assert_eq!(j.partial(0, 1), -1.0);
        assert_eq!(j.partial(1, 0), 1.0);
    }

    #[test]
    fn trig_derivatives_cycle() {
        let j = jet("sin(s)", 1.0, 0.7);
        let (s, c) = 0.7f64.sin_cos();
        let want = [s, c, -s, -c, s];
        for (k, w) in want.iter().enumerate() {
            assert!((j.partial(0, k) - w).abs() < 1e-14);
        }
        let j = jet("cos(s)", 1.0, 0.7);
        let want = [c, -s, -c, s, c];
        for (k, w) in want.iter().enumerate() {
            assert!((j.partial(0, k) - w).abs() < 1e-14);
        }
    }

    #[test]
    fn log_derivatives() {
        let j = jet("ln(r)", 2.0, 0.0);
        let want = [2f64.ln(), 0.5, -0.25, 0.25, -0.375];
        for (k, w) in want.iter().enumerate() {
            assert!((j.partial(k, 0) - w).abs() < 1e-14, "{k}");
        }
    }
}

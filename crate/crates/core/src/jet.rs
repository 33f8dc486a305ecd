//! Truncated Taylor jets, analytic expression trees and linear algebra over
//! the jet ring.
//!
//! A jet of order `K` stores `f(x0), f'(x0), f''(x0)/2!, …, f^(K)(x0)/K!`.
//! Binary operations truncate to the smaller order of their operands.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Lu, Mat};
use crate::real::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct Jet<T> {
    c: Vec<T>,
}

impl<T: Real> Jet<T> {
    pub fn new(coeffs: Vec<T>) -> Self {
        assert!(!coeffs.is_empty(), "a jet needs at least one coefficient");
        Jet { c: coeffs }
    }
    pub fn constant(v: T, order: usize) -> Self {
        let mut c = vec![T::zero(); order + 1];
        c[0] = v;
        Jet { c }
    }
    pub fn zero(order: usize) -> Self {
        Self::constant(T::zero(), order)
    }
    /// The identity function `x ↦ x` expanded at `x0`.
    pub fn variable(x0: T, order: usize) -> Self {
        let mut j = Self::constant(x0, order);
        if order >= 1 {
            j.c[1] = T::one();
        }
        j
    }
    pub fn order(&self) -> usize {
        self.c.len() - 1
    }
    pub fn coeffs(&self) -> &[T] {
        &self.c
    }
    pub fn value(&self) -> T {
        self.c[0]
    }
    pub fn coeff(&self, k: usize) -> T {
        self.c.get(k).copied().unwrap_or_else(T::zero)
    }
    /// k-th derivative at the base point.
    pub fn derivative_value(&self, k: usize) -> T {
        let mut f = T::one();
        for i in 2..=k {
            f *= T::from_usize(i);
        }
        self.coeff(k) * f
    }
    pub fn truncate(&self, order: usize) -> Self {
        Jet { c: self.c[..=order.min(self.order())].to_vec() }
    }
    pub fn scale(&self, s: T) -> Self {
        Jet { c: self.c.iter().map(|&v| v * s).collect() }
    }
    pub fn map_coeffs(&self, f: impl Fn(usize, T) -> T) -> Self {
        Jet { c: self.c.iter().enumerate().map(|(k, &v)| f(k, v)).collect() }
    }
    pub fn to_f64(&self) -> Jet<f64> {
        Jet { c: self.c.iter().map(|v| v.to_f64()).collect() }
    }
    pub fn from_f64(j: &Jet<f64>) -> Self {
        Jet { c: j.c.iter().map(|&v| T::from_f64(v)).collect() }
    }

    /// Derivative jet; the order drops by one (a constant stays order 0).
    pub fn derivative(&self) -> Self {
        if self.order() == 0 {
            return Jet { c: vec![T::zero()] };
        }
        Jet { c: (1..self.c.len()).map(|k| self.c[k] * T::from_usize(k)).collect() }
    }

    pub fn nth_derivative(&self, n: usize) -> Self {
        (0..n).fold(self.clone(), |j, _| j.derivative())
    }

    /// Horner evaluation of the truncated series at offset `h`.
    pub fn eval(&self, h: T) -> T {
        self.c.iter().rev().fold(T::zero(), |acc, &v| acc * h + v)
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().fold(0.0, |m, v| m.max(v.to_f64().abs()))
    }

    pub fn checked_recip(&self) -> Result<Self> {
        if self.c[0] == T::zero() {
            return Err(Error::DivisionByZero("reciprocal".into()));
        }
        let n = self.c.len();
        let inv0 = T::one() / self.c[0];
        let mut r = vec![T::zero(); n];
        r[0] = inv0;
        for k in 1..n {
            let s: T = (1..=k).map(|j| self.c[j] * r[k - j]).sum();
            r[k] = -s * inv0;
        }
        Ok(Jet { c: r })
    }

    pub fn checked_div(&self, other: &Self) -> Result<Self> {
        if other.c[0] == T::zero() {
            return Err(Error::DivisionByZero("quotient".into()));
        }
        let n = self.c.len().min(other.c.len());
        let inv0 = T::one() / other.c[0];
        let mut q = vec![T::zero(); n];
        for k in 0..n {
            let s: T = (1..=k).map(|j| other.c[j] * q[k - j]).sum();
            q[k] = (self.c[k] - s) * inv0;
        }
        Ok(Jet { c: q })
    }

    pub fn powi(&self, n: i32) -> Result<Self> {
        let base = if n < 0 { self.checked_recip()? } else { self.clone() };
        let mut acc = Jet::constant(T::one(), self.order());
        for _ in 0..n.unsigned_abs() {
            acc = &acc * &base;
        }
        Ok(acc)
    }

    /// Real power; requires a positive constant term.
    pub fn powf(&self, p: T) -> Result<Self> {
        let a0 = self.c[0];
        if !(a0 > T::zero()) {
            return Err(Error::Domain("real power of a non-positive jet".into()));
        }
        let n = self.c.len();
        let mut y = vec![T::zero(); n];
        y[0] = a0.powf(p);
        let inv0 = T::one() / a0;
        for k in 1..n {
            let kk = T::from_usize(k);
            let s: T = (1..=k).map(|j| (p * T::from_usize(j) - (kk - T::from_usize(j))) * self.c[j] * y[k - j]).sum();
            y[k] = s * inv0 / kk;
        }
        Ok(Jet { c: y })
    }

    pub fn sin_cos(&self) -> (Self, Self) {
        let n = self.c.len();
        let mut s = vec![T::zero(); n];
        let mut co = vec![T::zero(); n];
        s[0] = self.c[0].sin();
        co[0] = self.c[0].cos();
        for k in 1..n {
            let kk = T::from_usize(k);
            let mut ss = T::zero();
            let mut cc = T::zero();
            for j in 1..=k {
                let ja = T::from_usize(j) * self.c[j];
                ss += ja * co[k - j];
                cc += ja * s[k - j];
            }
            s[k] = ss / kk;
            co[k] = -cc / kk;
        }
        (Jet { c: s }, Jet { c: co })
    }

    pub fn exp(&self) -> Self {
        let n = self.c.len();
        let mut e = vec![T::zero(); n];
        e[0] = self.c[0].exp();
        for k in 1..n {
            let s: T = (1..=k).map(|j| T::from_usize(j) * self.c[j] * e[k - j]).sum();
            e[k] = s / T::from_usize(k);
        }
        Jet { c: e }
    }

    pub fn ln(&self) -> Result<Self> {
        let a0 = self.c[0];
        if !(a0 > T::zero()) {
            return Err(Error::Domain("logarithm of a non-positive jet".into()));
        }
        let n = self.c.len();
        let mut l = vec![T::zero(); n];
        l[0] = a0.ln();
        for k in 1..n {
            let s: T = (1..k).map(|j| T::from_usize(j) * l[j] * self.c[k - j]).sum();
            l[k] = (self.c[k] - s / T::from_usize(k)) / a0;
        }
        Ok(Jet { c: l })
    }
}

fn binop<T: Real>(a: &Jet<T>, b: &Jet<T>, f: impl Fn(T, T) -> T) -> Jet<T> {
    let n = a.c.len().min(b.c.len());
    Jet { c: (0..n).map(|k| f(a.c[k], b.c[k])).collect() }
}

impl<T: Real> Add for &Jet<T> {
    type Output = Jet<T>;
    fn add(self, b: &Jet<T>) -> Jet<T> {
        binop(self, b, |x, y| x + y)
    }
}

impl<T: Real> Sub for &Jet<T> {
    type Output = Jet<T>;
    fn sub(self, b: &Jet<T>) -> Jet<T> {
        binop(self, b, |x, y| x - y)
    }
}

impl<T: Real> Mul for &Jet<T> {
    type Output = Jet<T>;
    fn mul(self, b: &Jet<T>) -> Jet<T> {
        let n = self.c.len().min(b.c.len());
        let mut out = vec![T::zero(); n];
        for (i, &ai) in self.c.iter().take(n).enumerate() {
            if ai == T::zero() {
                continue;
            }
            for (o, &bj) in out[i..].iter_mut().zip(&b.c) {
                *o += ai * bj;
            }
        }
        Jet { c: out }
    }
}

impl<T: Real> Neg for &Jet<T> {
    type Output = Jet<T>;
    fn neg(self) -> Jet<T> {
        Jet { c: self.c.iter().map(|&v| -v).collect() }
    }
}

macro_rules! owned_ops {
    ($($tr:ident $m:ident),*) => {$(
        impl<T: Real> $tr for Jet<T> {
            type Output = Jet<T>;
            fn $m(self, b: Jet<T>) -> Jet<T> { (&self).$m(&b) }
        }
        impl<T: Real> $tr<&Jet<T>> for Jet<T> {
            type Output = Jet<T>;
            fn $m(self, b: &Jet<T>) -> Jet<T> { (&self).$m(b) }
        }
        impl<T: Real> $tr<Jet<T>> for &Jet<T> {
            type Output = Jet<T>;
            fn $m(self, b: Jet<T>) -> Jet<T> { self.$m(&b) }
        }
    )*};
}
owned_ops!(Add add, Sub sub, Mul mul);

impl<T: Real> Neg for Jet<T> {
    type Output = Jet<T>;
    fn neg(self) -> Jet<T> {
        -&self
    }
}

/// Expression tree for analytic scalar functions of `x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum Expr {
    Const { value: f64 },
    X,
    Add { lhs: Box<Expr>, rhs: Box<Expr> },
    Sub { lhs: Box<Expr>, rhs: Box<Expr> },
    Mul { lhs: Box<Expr>, rhs: Box<Expr> },
    Div { lhs: Box<Expr>, rhs: Box<Expr> },
    Neg { arg: Box<Expr> },
    Sin { arg: Box<Expr> },
    Cos { arg: Box<Expr> },
    Pow { arg: Box<Expr>, exponent: f64 },
}

impl Expr {
    pub fn c(value: f64) -> Self {
        Expr::Const { value }
    }
    pub fn x() -> Self {
        Expr::X
    }
    pub fn sin(self) -> Self {
        Expr::Sin { arg: Box::new(self) }
    }
    pub fn cos(self) -> Self {
        Expr::Cos { arg: Box::new(self) }
    }
    pub fn pow(self, exponent: f64) -> Self {
        Expr::Pow { arg: Box::new(self), exponent }
    }

    pub fn jet<T: Real>(&self, x: T, order: usize) -> Result<Jet<T>> {
        Ok(match self {
            Expr::Const { value } => Jet::constant(T::from_f64(*value), order),
            Expr::X => Jet::variable(x, order),
            Expr::Add { lhs, rhs } => lhs.jet(x, order)? + rhs.jet(x, order)?,
            Expr::Sub { lhs, rhs } => lhs.jet(x, order)? - rhs.jet(x, order)?,
            Expr::Mul { lhs, rhs } => lhs.jet(x, order)? * rhs.jet(x, order)?,
            Expr::Div { lhs, rhs } => {
                let den = rhs.jet(x, order)?;
                if den.value() == T::zero() {
                    return Err(Error::DivisionByZero(format!("denominator vanishes at x = {}", x.to_f64())));
                }
                lhs.jet(x, order)?.checked_div(&den)?
            }
            Expr::Neg { arg } => -arg.jet(x, order)?,
            Expr::Sin { arg } => arg.jet(x, order)?.sin_cos().0,
            Expr::Cos { arg } => arg.jet(x, order)?.sin_cos().1,
            Expr::Pow { arg, exponent } => {
                let a = arg.jet(x, order)?;
                if exponent.fract() == 0.0 && exponent.abs() <= 64.0 {
                    if *exponent < 0.0 && a.value() == T::zero() {
                        return Err(Error::DivisionByZero(format!("negative power of zero at x = {}", x.to_f64())));
                    }
                    a.powi(*exponent as i32)?
                } else {
                    a.powf(T::from_f64(*exponent))?
                }
            }
        })
    }
}

macro_rules! expr_ops {
    ($($tr:ident $m:ident $v:ident),*) => {$(
        impl $tr for Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr { Expr::$v { lhs: Box::new(self), rhs: Box::new(rhs) } }
        }
    )*};
}
expr_ops!(Add add Add, Sub sub Sub, Mul mul Mul);

impl std::ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        Expr::Div { lhs: Box::new(self), rhs: Box::new(rhs) }
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Neg { arg: Box::new(self) }
    }
}

/// Analytic function of `x` with an optional 2π-periodicity declaration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyticFn {
    #[serde(flatten)]
    pub expr: Expr,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub periodic: bool,
}

impl AnalyticFn {
    pub fn new(expr: Expr) -> Self {
        AnalyticFn { expr, periodic: false }
    }
    pub fn periodic(expr: Expr) -> Self {
        AnalyticFn { expr, periodic: true }
    }
    pub fn constant(v: f64) -> Self {
        AnalyticFn::periodic(Expr::c(v))
    }
    /// `c0 + Σ_k (a_k cos kx + b_k sin kx)` for `k = 1, 2, …`.
    pub fn trig_poly(c0: f64, cos_sin: &[(f64, f64)]) -> Self {
        let mut e = Expr::c(c0);
        for (k, &(a, b)) in cos_sin.iter().enumerate() {
            let kx = Expr::c((k + 1) as f64) * Expr::x();
            e = e + Expr::c(a) * kx.clone().cos() + Expr::c(b) * kx.sin();
        }
        AnalyticFn::periodic(e)
    }
    pub fn eval(&self, x: f64) -> Result<f64> {
        Ok(self.expr.jet(x, 0)?.value())
    }
    /// Numerically checks a periodicity declaration at a few sample points.
    pub fn periodicity_defect(&self) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for k in 0..7 {
            let x = -3.0 + 1.1 * k as f64;
            let a = self.eval(x)?;
            let b = self.eval(x + 2.0 * std::f64::consts::PI)?;
            worst = worst.max((a - b).abs() / (1.0 + a.abs()));
        }
        Ok(worst)
    }
}

/// Jet of `f` at `x` to order `order`.
pub fn eval_jet<T: Real>(f: &AnalyticFn, x: T, order: usize) -> Result<Jet<T>> {
    f.expr.jet(x, order)
}

fn min_order<T: Real>(a: &[Vec<Jet<T>>]) -> usize {
    a.iter().flatten().map(Jet::order).min().unwrap_or(0)
}

/// LU of the constant-term matrix of a jet matrix, reused for any number of
/// right-hand sides. Higher orders follow from `A0 x_k = b_k − Σ_{j≥1} A_j x_{k−j}`.
pub struct JetLu<T> {
    layers: Vec<Mat<T>>,
    lu: Lu<T>,
}

impl<T: Real> JetLu<T> {
    pub fn new(a: &[Vec<Jet<T>>]) -> Result<Self> {
        let k = min_order(a);
        let layers: Vec<Mat<T>> =
            (0..=k).map(|l| a.iter().map(|row| row.iter().map(|e| e.coeff(l)).collect()).collect()).collect();
        let lu = Lu::new(&layers[0], 1e-14)?;
        Ok(JetLu { layers, lu })
    }

    pub fn order(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn solve(&self, b: &[Jet<T>]) -> Vec<Jet<T>> {
        let n = b.len();
        let k = self.order().min(b.iter().map(Jet::order).min().unwrap_or(0));
        let mut xs: Vec<Vec<T>> = Vec::with_capacity(k + 1);
        for l in 0..=k {
            let mut rhs: Vec<T> = b.iter().map(|e| e.coeff(l)).collect();
            for j in 1..=l {
                let aj = &self.layers[j];
                let xp = &xs[l - j];
                for i in 0..n {
                    let s: T = aj[i].iter().zip(xp).map(|(&p, &q)| p * q).sum();
                    rhs[i] -= s;
                }
            }
            xs.push(self.lu.solve(&rhs));
        }
        (0..n).map(|i| Jet::new(xs.iter().map(|x| x[i]).collect())).collect()
    }
}

pub fn solve_linear_jets<T: Real>(a: &[Vec<Jet<T>>], b: &[Jet<T>]) -> Result<Vec<Jet<T>>> {
    Ok(JetLu::new(a)?.solve(b))
}

pub fn mat_mul_jets<T: Real>(a: &[Vec<Jet<T>>], b: &[Vec<Jet<T>>]) -> Vec<Vec<Jet<T>>> {
    let k = min_order(a).min(min_order(b));
    let m = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            (0..m)
                .map(|j| row.iter().zip(b).fold(Jet::zero(k), |acc, (x, brow)| acc + x * &brow[j]))
                .collect()
        })
        .collect()
}

pub fn mat_vec_jets<T: Real>(a: &[Vec<Jet<T>>], v: &[Jet<T>]) -> Vec<Jet<T>> {
    let k = min_order(a).min(v.iter().map(Jet::order).min().unwrap_or(0));
    a.iter().map(|row| row.iter().zip(v).fold(Jet::zero(k), |acc, (x, y)| acc + x * y)).collect()
}

/// Determinant over the jet ring: elimination pivoting on constant-term
/// magnitudes, with cofactor expansion when every candidate pivot has a
/// vanishing constant term.
pub fn det_jet<T: Real>(a: &[Vec<Jet<T>>]) -> Jet<T> {
    let n = a.len();
    let k = min_order(a);
    if n == 0 {
        return Jet::constant(T::one(), k);
    }
    let mut m: Vec<Vec<Jet<T>>> = a.iter().map(|r| r.iter().map(|e| e.truncate(k)).collect()).collect();
    let mut det = Jet::constant(T::one(), k);
    for col in 0..n {
        let p = (col..n).max_by(|&i, &j| m[i][col].value().abs().partial_cmp(&m[j][col].value().abs()).unwrap()).unwrap();
        if m[p][col].value() == T::zero() {
            let rest: Vec<Vec<Jet<T>>> = m[col..].iter().map(|r| r[col..].to_vec()).collect();
            return det * laplace(&rest);
        }
        if p != col {
            m.swap(p, col);
            det = -det;
        }
        let inv = m[col][col].checked_recip().expect("nonzero pivot");
        for i in col + 1..n {
            let f = &m[i][col] * &inv;
            for j in col..n {
                let t = &f * &m[col][j];
                m[i][j] = &m[i][j] - &t;
            }
        }
        det = det * &m[col][col];
    }
    det
}

fn laplace<T: Real>(a: &[Vec<Jet<T>>]) -> Jet<T> {
    let n = a.len();
    if n == 1 {
        return a[0][0].clone();
    }
    let k = min_order(a);
    let mut acc = Jet::zero(k);
    for j in 0..n {
        let minor: Vec<Vec<Jet<T>>> =
            a[1..].iter().map(|r| r.iter().enumerate().filter(|&(c, _)| c != j).map(|(_, e)| e.clone()).collect()).collect();
        let term = &a[0][j] * &laplace(&minor);
        acc = if j % 2 == 0 { acc + term } else { acc - term };
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_examples() {
        let s = eval_jet(&AnalyticFn::new(Expr::x().sin()), 0.0f64, 3).unwrap();
        let want = [0.0, 1.0, 0.0, -1.0 / 6.0];
        for (a, b) in s.coeffs().iter().zip(want) {
            assert!((a - b).abs() < 1e-16);
        }
        let c = eval_jet(&AnalyticFn::constant(5.0), 1.3f64, 2).unwrap();
        assert_eq!(c.coeffs(), &[5.0, 0.0, 0.0]);
        let sq = eval_jet(&AnalyticFn::new(Expr::x() * Expr::x()), 2.0f64, 2).unwrap();
        assert_eq!(sq.coeffs(), &[4.0, 4.0, 1.0]);
    }

    #[test]
    fn division_by_vanishing_denominator_is_reported() {
        let f = AnalyticFn::new(Expr::c(1.0) / Expr::x().sin());
        assert!(matches!(eval_jet(&f, 0.0f64, 3), Err(Error::DivisionByZero(_))));
    }

    #[test]
    fn scalar_division_via_solve() {
        let a = vec![vec![Jet::new(vec![1.0, 1.0, 0.0, 0.0])]];
        let x = solve_linear_jets(&a, &[Jet::constant(1.0, 3)]).unwrap();
        assert_eq!(x[0].coeffs(), &[1.0, -1.0, 1.0, -1.0]);
    }

    #[test]
    fn json_tree_roundtrip() {
        let f = AnalyticFn::trig_poly(0.1, &[(0.2, -0.3)]);
        let s = serde_json::to_string(&f).unwrap();
        assert!(s.starts_with("{\"op\":\"add\""));
        let g: AnalyticFn = serde_json::from_str(&s).unwrap();
        assert_eq!(f, g);
        let h: AnalyticFn = serde_json::from_str(r#"{"op":"sin","arg":{"op":"x"}}"#).unwrap();
        assert!(!h.periodic);
        assert!((h.eval(0.5).unwrap() - 0.5f64.sin()).abs() < 1e-16);
    }

    #[test]
    fn det_of_singular_constant_part_uses_cofactors() {
        // [[t, 1], [1, t]] has det t² − 1
        let t = Jet::new(vec![0.0, 1.0, 0.0]);
        let one = Jet::constant(1.0, 2);
        let d = det_jet(&[vec![t.clone(), one.clone()], vec![one, t]]);
        assert_eq!(d.coeffs(), &[-1.0, 0.0, 1.0]);
        let z = Jet::new(vec![0.0, 1.0, 0.0]);
        let d = det_jet(&[vec![z.clone(), z.clone()], vec![z.clone(), Jet::new(vec![0.0, 0.0, 1.0])]]);
        assert_eq!(d.coeffs(), &[0.0, 0.0, -1.0]);
    }
}

//! Truncated pseudodifferential operators `Σ_{i≤N} b_i ∂^i` whose coefficients
//! are jets at a working point, with fractional roots, `Q_m = (L^{m/(d+1)})_+`
//! and the KdV right-hand sides `[Q_m, L]`.
//!
//! An operator is either *exact* (a finite differential operator) or carries a
//! floor: coefficients below the floor are unknown and never reported.
//! Composition uses `∂^k ∘ b = Σ_n C(k,n) b^{(n)} ∂^{k-n}`, with the generalized
//! binomial for `k < 0`.

use std::fmt::Write as _;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::curve::CurveSpec;
use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::real::Real;

#[derive(Clone, Debug)]
pub struct PseudoDiffOp<T> {
    top: i32,
    /// Lowest trustworthy degree; ignored when `exact`.
    floor: i32,
    exact: bool,
    /// `coeffs[k]` multiplies `∂^{top-k}`; `None` is an exact zero.
    coeffs: Vec<Option<Jet<T>>>,
}

/// Generalized binomial `C(k, n)` for integer `k` of either sign.
fn gbinom<T: Real>(k: i32, n: usize) -> T {
    let mut c = T::one();
    for i in 0..n {
        c = c * T::from_i64(k as i64 - i as i64) / T::from_usize(i + 1);
    }
    c
}

impl<T: Real> PseudoDiffOp<T> {
    /// Differential operator `Σ coeffs[i] ∂^i`.
    pub fn differential(coeffs: Vec<Jet<T>>) -> Self {
        let top = coeffs.len() as i32 - 1;
        let mut c: Vec<Option<Jet<T>>> = coeffs.into_iter().rev().map(Some).collect();
        if c.is_empty() {
            c.push(None);
        }
        PseudoDiffOp { top: top.max(0), floor: 0, exact: true, coeffs: c }
    }

    /// `∂^k`, exact for `k ≥ 0`; for `k < 0` it is exact down to `floor`.
    pub fn d_pow(k: i32, floor: i32, order: usize) -> Self {
        let one = Jet::constant(T::one(), order);
        if k >= 0 {
            let mut c = vec![None; k as usize + 1];
            c[0] = Some(one);
            PseudoDiffOp { top: k, floor: 0, exact: true, coeffs: c }
        } else {
            PseudoDiffOp { top: k, floor: floor.min(k), exact: false, coeffs: vec![Some(one)] }
        }
    }

    /// `L = ∂^{d+1} + Σ u_i ∂^i` with coefficient jets of `order` at `x`.
    pub fn from_curve(spec: &CurveSpec, x: T, order: usize) -> Result<Self> {
        let mut c = spec.u_jets(x, order)?;
        c.push(Jet::zero(order));
        c.push(Jet::constant(T::one(), order));
        let mut op = Self::differential(c);
        op.coeffs[1] = None;
        Ok(op)
    }

    pub fn top(&self) -> i32 {
        self.top
    }

    pub fn floor(&self) -> i32 {
        if self.exact {
            self.top - self.coeffs.len() as i32 + 1
        } else {
            self.floor
        }
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    fn lowest_stored(&self) -> i32 {
        self.top - self.coeffs.len() as i32 + 1
    }

    /// Coefficient of `∂^i`; `None` when it is zero or below the floor.
    pub fn coeff(&self, i: i32) -> Option<&Jet<T>> {
        if i > self.top || i < self.lowest_stored() || (!self.exact && i < self.floor) {
            return None;
        }
        self.coeffs[(self.top - i) as usize].as_ref()
    }

    /// Value at the working point of the coefficient of `∂^i`.
    pub fn coeff_value(&self, i: i32) -> T {
        self.coeff(i).map_or(T::zero(), Jet::value)
    }

    fn degrees(&self) -> impl Iterator<Item = (i32, &Jet<T>)> {
        let top = self.top;
        let floor = if self.exact { i32::MIN } else { self.floor };
        self.coeffs.iter().enumerate().filter_map(move |(k, c)| {
            let deg = top - k as i32;
            c.as_ref().filter(|_| deg >= floor).map(|j| (deg, j))
        })
    }

    fn from_map(mut terms: Vec<(i32, Jet<T>)>, floor: i32, exact: bool) -> Self {
        terms.retain(|(d, _)| exact || *d >= floor);
        if terms.is_empty() {
            return PseudoDiffOp { top: if exact { 0 } else { floor }, floor, exact, coeffs: vec![None] };
        }
        let top = terms.iter().map(|t| t.0).max().unwrap();
        let low = if exact { 0 } else { floor }.min(top);
        let mut coeffs: Vec<Option<Jet<T>>> = vec![None; (top - low + 1) as usize];
        for (deg, j) in terms {
            let slot = &mut coeffs[(top - deg) as usize];
            *slot = Some(match slot.take() {
                Some(prev) => prev + j,
                None => j,
            });
        }
        PseudoDiffOp { top, floor, exact, coeffs }
    }

    /// Drops everything below `floor`.
    pub fn truncate(&self, floor: i32) -> Self {
        let terms = self.degrees().filter(|(d, _)| *d >= floor).map(|(d, j)| (d, j.clone())).collect();
        let floor = if self.exact { floor } else { floor.max(self.floor) };
        Self::from_map(terms, floor, false)
    }

    /// Differential part `(·)_+`, exact.
    pub fn plus(&self) -> Self {
        let terms = self.degrees().filter(|(d, _)| *d >= 0).map(|(d, j)| (d, j.clone())).collect();
        Self::from_map(terms, 0, true)
    }

    fn combine(&self, other: &Self, neg: bool) -> Self {
        let (exact, floor) = match (self.exact, other.exact) {
            (true, true) => (true, 0),
            (true, false) => (false, other.floor),
            (false, true) => (false, self.floor),
            (false, false) => (false, self.floor.max(other.floor)),
        };
        let mut terms: Vec<(i32, Jet<T>)> = self.degrees().map(|(d, j)| (d, j.clone())).collect();
        terms.extend(other.degrees().map(|(d, j)| (d, if neg { -j } else { j.clone() })));
        Self::from_map(terms, floor, exact)
    }

    pub fn compose(&self, other: &Self) -> Self {
        let exact = self.exact && other.exact;
        let mut floor = i32::MIN;
        if !self.exact {
            floor = floor.max(self.floor + other.top);
        }
        if !other.exact {
            floor = floor.max(other.floor + self.top);
        }
        if exact {
            floor = 0;
        }
        let mut terms: Vec<(i32, Jet<T>)> = Vec::new();
        let b_terms: Vec<(i32, &Jet<T>)> = other.degrees().collect();
        for (i, ai) in self.degrees() {
            for &(j, bj) in &b_terms {
                let mut deriv = bj.clone();
                let mut n = 0usize;
                loop {
                    let deg = i + j - n as i32;
                    if (!exact && deg < floor) || (i >= 0 && n as i32 > i) {
                        break;
                    }
                    let c = gbinom::<T>(i, n);
                    terms.push((deg, (ai * &deriv).scale(c)));
                    n += 1;
                    deriv = deriv.derivative();
                }
            }
        }
        Self::from_map(terms, floor, exact)
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self.compose(other).combine(&other.compose(self), true)
    }

    pub fn powi(&self, m: u32) -> Self {
        let mut acc = self.clone();
        for _ in 1..m {
            acc = acc.compose(self);
        }
        acc
    }

    /// Smallest jet order among the coefficients.
    pub fn jet_order(&self) -> usize {
        self.degrees().map(|(_, j)| j.order()).min().unwrap_or(0)
    }

    /// Human-readable form with coefficient values at the working point.
    pub fn pretty(&self) -> String {
        let mut out = String::new();
        for (deg, j) in self.degrees() {
            let v = j.value().to_f64();
            if v == 0.0 {
                continue;
            }
            let sym = match deg {
                0 => String::new(),
                1 => "∂".to_string(),
                _ => format!("∂^{deg}"),
            };
            let (sign, mag) = if v < 0.0 { ("−", -v) } else { ("+", v) };
            if out.is_empty() {
                if sign == "−" {
                    out.push('−');
                }
            } else {
                let _ = write!(out, " {sign} ");
            }
            match (mag == 1.0, sym.is_empty()) {
                (true, false) => out += &sym,
                (_, true) => {
                    let _ = write!(out, "{mag}");
                }
                (false, false) => {
                    let _ = write!(out, "{mag}·{sym}");
                }
            }
        }
        if !self.exact {
            let _ = write!(out, " + O(∂^{})", self.floor - 1);
        }
        if out.is_empty() {
            out.push('0');
        }
        out
    }

    pub fn to_dump(&self) -> OpDump {
        OpDump {
            top: self.top,
            floor: self.floor(),
            exact: self.exact,
            coeffs: self.degrees().map(|(degree, j)| CoeffDump { degree, jet: j.coeffs().iter().map(|v| v.to_f64()).collect() }).collect(),
        }
    }
}

/// JSON shape of an operator: coefficient jets per degree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpDump {
    pub top: i32,
    pub floor: i32,
    pub exact: bool,
    pub coeffs: Vec<CoeffDump>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoeffDump {
    pub degree: i32,
    pub jet: Vec<f64>,
}

impl<T: Real> Add for &PseudoDiffOp<T> {
    type Output = PseudoDiffOp<T>;
    fn add(self, b: &PseudoDiffOp<T>) -> PseudoDiffOp<T> {
        self.combine(b, false)
    }
}

impl<T: Real> Sub for &PseudoDiffOp<T> {
    type Output = PseudoDiffOp<T>;
    fn sub(self, b: &PseudoDiffOp<T>) -> PseudoDiffOp<T> {
        self.combine(b, true)
    }
}

impl<T: Real> Mul for &PseudoDiffOp<T> {
    type Output = PseudoDiffOp<T>;
    fn mul(self, b: &PseudoDiffOp<T>) -> PseudoDiffOp<T> {
        self.compose(b)
    }
}

pub fn psdo_mul<T: Real>(a: &PseudoDiffOp<T>, b: &PseudoDiffOp<T>) -> PseudoDiffOp<T> {
    a.compose(b)
}

/// The root `R = ∂ + Σ_{i<0} b_i ∂^i` with `R^n = L`, reliable down to
/// `floor`. Requires `L` monic of order `n` without a `∂^{n-1}` term.
pub fn psdo_root<T: Real>(l: &PseudoDiffOp<T>, n: u32, floor: i32) -> Result<PseudoDiffOp<T>> {
    let n_i = n as i32;
    if l.top() != n_i || (l.coeff_value(n_i) - T::one()).to_f64().abs() > 1e-14 {
        return Err(Error::InvalidSpec(format!("operator is not monic of order {n}")));
    }
    if l.coeff_value(n_i - 1).to_f64().abs() > 1e-14 {
        return Err(Error::InvalidSpec(format!("operator has a ∂^{} term", n_i - 1)));
    }
    let order = l.jet_order();
    let floor = floor.min(0);
    let mut r: PseudoDiffOp<T> = PseudoDiffOp::from_map(vec![(1, Jet::constant(T::one(), order))], floor, false);
    let inv_n = T::one() / T::from_usize(n as usize);
    for k in 1..=(1 - floor) {
        // The ∂^{n-k} coefficient of R^n is n·b_{1-k} plus terms in b_{>1-k}.
        let mut trial = r.clone();
        trial.floor = 1 - k;
        let pow = trial.powi(n);
        let resid = match (l.coeff(n_i - k), pow.coeff(n_i - k)) {
            (Some(a), Some(b)) => a - b,
            (Some(a), None) => a.clone(),
            (None, Some(b)) => -b,
            (None, None) => continue,
        };
        let mut terms: Vec<(i32, Jet<T>)> = r.degrees().map(|(d, j)| (d, j.clone())).collect();
        terms.push((1 - k, resid.scale(inv_n)));
        r = PseudoDiffOp::from_map(terms, floor, false);
    }
    if r.jet_order() < 2 && floor < 0 {
        return Err(Error::AlgebraInconsistency("coefficient jets exhausted while computing the root".into()));
    }
    Ok(r)
}

/// `Q_m = (L^{m/n})_+`, where `n` is the order of `L`.
pub fn q_m<T: Real>(l: &PseudoDiffOp<T>, m: u32) -> Result<PseudoDiffOp<T>> {
    let n = l.top() as u32;
    if m == 0 {
        return Err(Error::InvalidConfig("m must be at least 1".into()));
    }
    let r = psdo_root(l, n, 1 - m as i32)?;
    Ok(r.powi(m).plus())
}

/// Coefficients of `∂^0..∂^{d-1}` in `[Q_m, L]`, as jets.
pub fn kdv_rhs<T: Real>(l: &PseudoDiffOp<T>, m: u32) -> Result<Vec<Jet<T>>> {
    let q = q_m(l, m)?;
    let c = q.commutator(l);
    let d = l.top() - 1;
    for deg in d..=c.top() {
        if let Some(j) = c.coeff(deg) {
            let v = j.value().to_f64().abs();
            if v > 1e-11 {
                return Err(Error::AlgebraInconsistency(format!("[Q_{m}, L] has ∂^{deg} coefficient {v:e}")));
            }
        }
    }
    let order = c.jet_order();
    Ok((0..d).map(|i| c.coeff(i).cloned().unwrap_or_else(|| Jet::zero(order))).collect())
}

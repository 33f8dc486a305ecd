//! ε-ladders, polynomial series fits and log-log order estimates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::real::Real;

/// Geometric ladder `ε_k = eps0·ratio^k`, `k = 0..count`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsLadder {
    pub eps0: f64,
    pub ratio: f64,
    pub count: usize,
}

impl EpsLadder {
    pub fn new(eps0: f64, ratio: f64, count: usize) -> Result<Self> {
        if !(eps0 > 0.0 && eps0.is_finite()) {
            return Err(Error::InvalidConfig(format!("eps0 must be positive, got {eps0}")));
        }
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::InvalidConfig(format!("ratio must lie in (0, 1), got {ratio}")));
        }
        if count < 8 {
            return Err(Error::InvalidConfig(format!("ladder needs at least 8 points, got {count}")));
        }
        Ok(EpsLadder { eps0, ratio, count })
    }

    /// Ladder used for expansion fits.
    pub fn expansion_default() -> Self {
        EpsLadder { eps0: 0.2, ratio: 0.85, count: 14 }
    }

    /// Ladder used for kinematic order estimates.
    pub fn kinematics_default() -> Self {
        EpsLadder { eps0: 0.2, ratio: 0.8, count: 12 }
    }

    /// Deep ladder for extended-precision fits, shrunk for widely spread nodes
    /// so that `ε·max|p|` stays below 0.3.
    pub fn accurate(max_abs_node: f64) -> Self {
        EpsLadder { eps0: (0.3 / max_abs_node.max(1.5)).min(0.2), ratio: 0.85, count: 16 }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.count).map(|k| self.eps0 * self.ratio.powi(k as i32)).collect()
    }
}

/// Least-squares fit `v(ε) ≈ Σ_{k∈powers} c_k ε^k`, conditioned by fitting in
/// `ε/max|ε|`. Returns coefficients in the original ε units and the residual.
pub fn polyfit<T: Real>(eps: &[T], vals: &[T], powers: &[usize]) -> Result<(Vec<T>, f64)> {
    if eps.len() != vals.len() || eps.len() < powers.len() {
        return Err(Error::FitFailure(format!("{} samples for {} unknowns", eps.len(), powers.len())));
    }
    let scale = eps.iter().fold(T::zero(), |m, &e| m.max(e.abs()));
    let a: Mat<T> = eps.iter().map(|&e| powers.iter().map(|&k| (e / scale).powi(k as i32)).collect()).collect();
    let (c, res) = linalg::lstsq(&a, vals)?;
    Ok((c.into_iter().zip(powers).map(|(v, &k)| v / scale.powi(k as i32)).collect(), res.to_f64()))
}

/// Coefficients of a series fit with a per-coefficient uncertainty taken as
/// the change when the fit degree is raised by one.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeriesFit {
    pub coeffs: Vec<f64>,
    pub uncertainty: Vec<f64>,
    pub residual: f64,
}

pub fn series_fit<T: Real>(eps: &[T], vals: &[T], deg: usize) -> Result<SeriesFit> {
    let p0: Vec<usize> = (0..=deg).collect();
    let p1: Vec<usize> = (0..=deg + 1).collect();
    let (c0, residual) = polyfit(eps, vals, &p0)?;
    let unc = match polyfit(eps, vals, &p1) {
        Ok((c1, _)) => c0.iter().zip(&c1).map(|(a, b)| (*a - *b).to_f64().abs()).collect(),
        Err(_) => vec![f64::INFINITY; c0.len()],
    };
    Ok(SeriesFit { coeffs: c0.iter().map(|v| v.to_f64()).collect(), uncertainty: unc, residual })
}

/// Log-log order estimate of `|v| ~ C ε^slope`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub log_constant: f64,
    /// RMS residual of the log-log line.
    pub residual: f64,
    /// Set when a sample vanishes or the magnitudes do not decrease with ε.
    pub flagged: bool,
}

/// Fits the last `tail` points of the ladder.
pub fn slope_fit(eps: &[f64], vals: &[f64], tail: usize) -> SlopeFit {
    let n = eps.len();
    let start = n.saturating_sub(tail);
    let (e, v) = (&eps[start..], &vals[start..]);
    let usable = v.iter().all(|x| x.is_finite() && x.abs() > 1e-300);
    if !usable || e.len() < 2 {
        return SlopeFit { slope: f64::NAN, log_constant: f64::NAN, residual: f64::NAN, flagged: true };
    }
    let a: Mat<f64> = e.iter().map(|&x| vec![1.0, x.ln()]).collect();
    let b: Vec<f64> = v.iter().map(|x| x.abs().ln()).collect();
    match linalg::lstsq(&a, &b) {
        Ok((c, res)) => {
            let pairs: Vec<(f64, f64)> = e.iter().copied().zip(v.iter().map(|x| x.abs())).collect();
            let monotone = pairs.windows(2).all(|w| (w[0].0 > w[1].0) == (w[0].1 >= w[1].1));
            SlopeFit { slope: c[1], log_constant: c[0], residual: res / (e.len() as f64).sqrt(), flagged: !monotone }
        }
        Err(_) => SlopeFit { slope: f64::NAN, log_constant: f64::NAN, residual: f64::NAN, flagged: true },
    }
}

/// `lim_{ε→0} v(ε)` by a polynomial fit of degree `deg`, with uncertainty.
pub fn extrapolate<T: Real>(eps: &[T], vals: &[T], deg: usize) -> Result<(f64, f64)> {
    let f = series_fit(eps, vals, deg)?;
    Ok((f.coeffs[0], f.uncertainty[0]))
}

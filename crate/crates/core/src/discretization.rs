//! Difference-equation coordinates of a curve sampled with step ε.
//!
//! With `Γ_j = Γ(x + jε)`, the shift coordinates `ã` satisfy
//! `Γ_{d+1} = Σ_{i≤d} ã_i Γ_i`, and the difference coordinates `A` satisfy
//! `(Δ^{d+1} + Σ_{k≤d} A_k Δ^k) Γ = 0`. Both are projective-frame invariants,
//! so they are computed in ε-scaled local coordinates where the forward
//! differences `Δ^k Γ` are `O(1)` and the linear system is nearly unitriangular.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::{CurveSpec, LocalSeries};
use crate::error::{Error, Result};
use crate::fit::{extrapolate, slope_fit, EpsLadder, SlopeFit};
use crate::linalg::{self, Mat};
use crate::real::{Dd, Precision, Real};

#[derive(Clone, Debug)]
pub struct DiscreteCoords<T> {
    pub d: usize,
    pub eps: T,
    pub a_tilde: Vec<T>,
    pub a: Vec<T>,
    /// `|Γ_{d+1} − Σ ã_i Γ_i| / |Γ_{d+1}|`.
    pub residual: f64,
}

fn binom<T: Real>(n: usize, k: usize) -> T {
    let mut c = T::one();
    for i in 0..k {
        c = c * T::from_usize(n - i) / T::from_usize(i + 1);
    }
    c
}

/// `ã_i = Σ_{k=i}^{d+1} (−1)^{k−i+1} C(k,i) A_k`, with `A_{d+1} = 1`.
pub fn tilde_from_a<T: Real>(a: &[T]) -> Vec<T> {
    let d = a.len() - 1;
    (0..=d)
        .map(|i| {
            (i..=d + 1).fold(T::zero(), |s, k| {
                let ak = if k == d + 1 { T::one() } else { a[k] };
                let term = binom::<T>(k, i) * ak;
                if (k - i) % 2 == 0 {
                    s - term
                } else {
                    s + term
                }
            })
        })
        .collect()
}

/// Inverse of [`tilde_from_a`]; unitriangular, solved from `i = d` down.
pub fn a_from_tilde<T: Real>(at: &[T]) -> Vec<T> {
    let d = at.len() - 1;
    let mut a = vec![T::zero(); d + 1];
    for i in (0..=d).rev() {
        // ã_i = −A_i + Σ_{k>i} (−1)^{k−i+1} C(k,i) A_k
        let mut s = T::zero();
        for k in i + 1..=d + 1 {
            let ak = if k == d + 1 { T::one() } else { a[k] };
            let term = binom::<T>(k, i) * ak;
            if (k - i) % 2 == 0 {
                s -= term;
            } else {
                s += term;
            }
        }
        a[i] = s - at[i];
    }
    a
}

/// Coordinates from `d+2` consecutive samples `Γ_0..Γ_{d+1}` in any linear
/// coordinate system.
pub fn coords_from_points<T: Real>(points: &[Vec<T>], eps: T) -> Result<DiscreteCoords<T>> {
    let d = points.len().checked_sub(2).ok_or_else(|| Error::InvalidConfig("need d+2 samples".into()))?;
    let mut diffs: Vec<Vec<T>> = vec![points[0].clone()];
    let mut cur = points.to_vec();
    for _ in 0..=d {
        cur = cur.windows(2).map(|w| w[1].iter().zip(&w[0]).map(|(&b, &a)| b - a).collect()).collect();
        diffs.push(cur[0].clone());
    }
    // Σ_{k≤d} A_k Δ^kΓ = −Δ^{d+1}Γ, unknowns A_k in columns.
    let m: Mat<T> = (0..=d).map(|row| (0..=d).map(|k| diffs[k][row]).collect()).collect();
    let rhs: Vec<T> = diffs[d + 1].iter().map(|&v| -v).collect();
    let a = linalg::Lu::new(&m, 1e-14)
        .map_err(|_| Error::DegenerateIntersection("samples Γ(x), …, Γ(x+dε) are linearly dependent".into()))?
        .solve(&rhs);
    let a_tilde = tilde_from_a(&a);
    let mut r = points[d + 1].clone();
    for (p, &c) in points.iter().zip(&a_tilde) {
        for (ri, &pi) in r.iter_mut().zip(p) {
            *ri -= c * pi;
        }
    }
    let residual = (linalg::norm(&r) / linalg::norm(&points[d + 1])).to_f64();
    Ok(DiscreteCoords { d, eps, a_tilde, a, residual })
}

/// Scaled samples `Γ̂(j)`, `j = 0..d+1`, of the curve at step ε.
pub fn scaled_samples<T: Real>(series: &LocalSeries<T>, eps: T) -> Vec<Vec<T>> {
    let g = series.scaled_coeffs(eps);
    (0..=series.d + 1).map(|j| LocalSeries::eval_scaled(&g, T::from_usize(j))).collect()
}

pub fn discrete_coords<T: Real>(spec: &CurveSpec, x: T, eps: T) -> Result<DiscreteCoords<T>> {
    let series = LocalSeries::for_scaled(spec, x, eps.to_f64().abs(), (spec.d + 1) as f64, 0)?;
    coords_from_points(&scaled_samples(&series, eps), eps)
}

pub fn tilde_a<T: Real>(spec: &CurveSpec, x: T, eps: T) -> Result<Vec<T>> {
    Ok(discrete_coords(spec, x, eps)?.a_tilde)
}

/// One ladder row of [`LimitDiagnostics`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LadderRow {
    pub eps: f64,
    pub a: Vec<f64>,
    pub a_tilde: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LimitDiagnostics {
    pub d: usize,
    pub x: f64,
    pub rows: Vec<LadderRow>,
    /// Order estimate of each `A_i`.
    pub a_slopes: Vec<SlopeFit>,
    /// Order estimate of `ã_0 − (−1)^d`.
    pub a0_tilde_slope: SlopeFit,
    /// Extrapolated `lim A_i / ε^{d+1−i}` with uncertainty.
    pub limits: Vec<(f64, f64)>,
}

fn diagnostics_in<T: Real>(spec: &CurveSpec, x: f64, eps: &[f64]) -> Result<LimitDiagnostics> {
    let d = spec.d;
    let xt = T::from_f64(x);
    let emax = eps.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let series = LocalSeries::<T>::for_scaled(spec, xt, emax, (d + 1) as f64, 0)?;
    let coords: Vec<DiscreteCoords<T>> = eps
        .par_iter()
        .map(|&e| coords_from_points(&scaled_samples(&series, T::from_f64(e)), T::from_f64(e)))
        .collect::<Result<_>>()?;
    let rows = coords
        .iter()
        .map(|c| LadderRow {
            eps: c.eps.to_f64(),
            a: c.a.iter().map(|v| v.to_f64()).collect(),
            a_tilde: c.a_tilde.iter().map(|v| v.to_f64()).collect(),
        })
        .collect::<Vec<_>>();
    let a_slopes = (0..=d).map(|i| slope_fit(eps, &rows.iter().map(|r| r.a[i]).collect::<Vec<_>>(), 8)).collect();
    let sign = if d % 2 == 0 { T::one() } else { -T::one() };
    let a0dev: Vec<f64> = coords.iter().map(|c| (c.a_tilde[0] - sign).to_f64()).collect();
    let a0_tilde_slope = slope_fit(eps, &a0dev, 8);
    let et: Vec<T> = eps.iter().map(|&e| T::from_f64(e)).collect();
    let limits = (0..=d)
        .map(|i| {
            let q: Vec<T> = coords.iter().map(|c| c.a[i] / c.eps.powi((d + 1 - i) as i32)).collect();
            extrapolate(&et, &q, 4)
        })
        .collect::<Result<_>>()?;
    Ok(LimitDiagnostics { d, x, rows, a_slopes, a0_tilde_slope, limits })
}

pub fn limit_diagnostics(spec: &CurveSpec, x: f64, ladder: &EpsLadder, precision: Precision) -> Result<LimitDiagnostics> {
    let eps = ladder.values();
    match precision {
        Precision::Double => diagnostics_in::<f64>(spec, x, &eps),
        Precision::Extended => diagnostics_in::<Dd>(spec, x, &eps),
    }
}

impl LimitDiagnostics {
    /// Columns: eps, A_0..A_d, a_tilde_0..a_tilde_d, fitted_slope_i, extrapolated_limit_i.
    /// Slope and limit columns repeat the ladder-wide value on every row.
    pub fn to_csv(&self) -> String {
        let d = self.d;
        let mut head = vec!["eps".to_string()];
        head.extend((0..=d).map(|i| format!("A_{i}")));
        head.extend((0..=d).map(|i| format!("a_tilde_{i}")));
        head.extend((0..=d).map(|i| format!("fitted_slope_{i}")));
        head.extend((0..=d).map(|i| format!("extrapolated_limit_{i}")));
        let mut out = head.join(",") + "\n";
        for r in &self.rows {
            let mut cells = vec![format!("{:e}", r.eps)];
            cells.extend(r.a.iter().map(|v| format!("{v:e}")));
            cells.extend(r.a_tilde.iter().map(|v| format!("{v:e}")));
            cells.extend(self.a_slopes.iter().map(|s| format!("{}", s.slope)));
            cells.extend(self.limits.iter().map(|l| format!("{:e}", l.0)));
            out += &(cells.join(",") + "\n");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_curve_has_pascal_recurrence() {
        let spec = CurveSpec::flat(2);
        for eps in [0.05, 0.3, 1.0] {
            let c = discrete_coords::<f64>(&spec, 0.2, eps).unwrap();
            for (v, w) in c.a_tilde.iter().zip([1.0, -3.0, 3.0]) {
                assert!((v - w).abs() < 1e-12);
            }
            assert!(c.a.iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn coordinate_change_round_trips() {
        let a = vec![0.3, -1.2, 0.7, 2.0];
        let back = a_from_tilde(&tilde_from_a(&a));
        for (x, y) in a.iter().zip(&back) {
            assert!((x - y).abs() < 1e-13);
        }
    }
}

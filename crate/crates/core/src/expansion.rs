//! Numerical extraction of the ε-expansion `Γ̃_ε = Σ_k ε^k G_k Γ` with
//! `G_k = Σ_j α_{k,j} ∂^j`, and checks of its structure.
//!
//! In local coordinates at `x` the frame `(Γ, Γ', …, Γ^(d))(x)` is the
//! identity, so the frame coefficients of `Γ̃_ε(x)` are its local coordinates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chi_config::ChiConfig;
use crate::chi_map::ChiMapper;
use crate::curve::CurveSpec;
use crate::error::{Error, Result};
use crate::fit::{polyfit, series_fit, EpsLadder};
use crate::kdv::{kdv_rhs, PseudoDiffOp};
use crate::real::{Dd, Precision, Real};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub d: usize,
    pub x: f64,
    pub kmax: usize,
    pub ladder: EpsLadder,
    pub precision: Precision,
    /// `alpha[k][j]` for `0 ≤ k ≤ kmax`.
    pub alpha: Vec<Vec<f64>>,
    pub uncertainty: Vec<Vec<f64>>,
    pub fit_residual: f64,
    /// ε² coefficients of `u_{i,ε}`.
    pub w: Vec<f64>,
    pub w_uncertainty: Vec<f64>,
    pub u: Vec<f64>,
    /// Set when some reported uncertainty exceeds 1e-3.
    pub flagged: bool,
}

impl ExpansionReport {
    pub fn alpha(&self, k: usize, j: usize) -> f64 {
        self.alpha[k][j]
    }

    /// Flat CSV: k, j, alpha, uncertainty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,j,alpha,uncertainty\n");
        for (k, (row, unc)) in self.alpha.iter().zip(&self.uncertainty).enumerate() {
            for (j, (a, u)) in row.iter().zip(unc).enumerate() {
                out += &format!("{k},{j},{a:e},{u:e}\n");
            }
        }
        out
    }
}

struct LadderSamples<T> {
    eps: Vec<T>,
    /// `c[e][j]`: frame coefficient `j` of `Γ̃_ε(x)`.
    c: Vec<Vec<T>>,
    u_eps: Vec<Vec<T>>,
    u: Vec<T>,
}

fn sample<T: Real>(spec: &CurveSpec, chi: &ChiConfig, x: f64, eps: &[f64]) -> Result<LadderSamples<T>> {
    let emax = eps.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let mapper = ChiMapper::<T>::new(spec, chi, T::from_f64(x), emax, 0.0, 2 * spec.d + 2)?;
    let outs = eps
        .par_iter()
        .map(|&e| mapper.map(T::from_f64(e), T::zero()))
        .collect::<Result<Vec<_>>>()?;
    Ok(LadderSamples {
        eps: eps.iter().map(|&e| T::from_f64(e)).collect(),
        c: outs.iter().map(|o| o.point_local()).collect(),
        u_eps: outs.iter().map(|o| o.u_eps()).collect(),
        u: mapper.series.u.iter().map(|j| j.value()).collect(),
    })
}

fn extract_in<T: Real>(
    spec: &CurveSpec,
    chi: &ChiConfig,
    x: f64,
    ladder: &EpsLadder,
    kmax: usize,
    precision: Precision,
) -> Result<ExpansionReport> {
    let d = spec.d;
    let s = sample::<T>(spec, chi, x, &ladder.values())?;
    let deg = kmax + 2;
    let mut alpha = vec![vec![0.0; d + 1]; kmax + 1];
    let mut uncertainty = vec![vec![0.0; d + 1]; kmax + 1];
    let mut fit_residual: f64 = 0.0;
    for j in 0..=d {
        let vals: Vec<T> = s.c.iter().map(|c| c[j]).collect();
        let f = series_fit(&s.eps, &vals, deg)?;
        fit_residual = fit_residual.max(f.residual);
        for k in 0..=kmax {
            alpha[k][j] = f.coeffs[k];
            uncertainty[k][j] = f.uncertainty[k];
        }
    }
    let mut w = vec![0.0; d];
    let mut w_uncertainty = vec![0.0; d];
    let powers: Vec<usize> = (1..=deg).collect();
    let powers_hi: Vec<usize> = (1..=deg + 1).collect();
    for i in 0..d {
        let vals: Vec<T> = s.u_eps.iter().map(|u| u[i] - s.u[i]).collect();
        let (c0, _) = polyfit(&s.eps, &vals, &powers)?;
        let (c1, _) = polyfit(&s.eps, &vals, &powers_hi)?;
        w[i] = c0[1].to_f64();
        w_uncertainty[i] = (c0[1] - c1[1]).to_f64().abs();
    }
    let flagged = uncertainty.iter().flatten().chain(&w_uncertainty).any(|&u| !(u <= 1e-3));
    Ok(ExpansionReport {
        d,
        x,
        kmax,
        ladder: *ladder,
        precision,
        alpha,
        uncertainty,
        fit_residual,
        w,
        w_uncertainty,
        u: s.u.iter().map(|v| v.to_f64()).collect(),
        flagged,
    })
}

/// Deepest `kmax` supported at `precision` on `ladder`.
pub fn max_kmax(precision: Precision, ladder: &EpsLadder) -> usize {
    let limit = match precision {
        Precision::Double => 4,
        Precision::Extended => 6,
    };
    limit.min(ladder.count.saturating_sub(5))
}

pub fn extract_alphas(
    spec: &CurveSpec,
    chi: &ChiConfig,
    x: f64,
    ladder: &EpsLadder,
    kmax: usize,
    precision: Precision,
) -> Result<ExpansionReport> {
    let limit = max_kmax(precision, &EpsLadder { count: usize::MAX, ..*ladder });
    if kmax > limit {
        return Err(Error::InvalidConfig(format!("kmax {kmax} exceeds {limit} at {precision:?} precision")));
    }
    if ladder.count < kmax + 5 {
        return Err(Error::InvalidConfig(format!("ladder of {} points is too short for kmax {kmax}", ladder.count)));
    }
    match precision {
        Precision::Double => extract_in::<f64>(spec, chi, x, ladder, kmax, precision),
        Precision::Extended => extract_in::<Dd>(spec, chi, x, ladder, kmax, precision),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct G2Check {
    /// Predicted `α_{2,j}` from `α̂_{1,1}`, `α̂_{2,2}` and `u_{d-1}(x)`.
    pub predicted: Vec<f64>,
    /// `max_j |α̂_{2,j} − predicted_j|`.
    pub g2_residual: f64,
    /// `max_{j≠1} |α̂_{1,j}|`.
    pub g1_offdiag: f64,
    pub residual: f64,
}

/// `G_1 = α_{1,1}∂` and `G_2 = α_{2,2}(∂² + 2u_{d-1}/(d+1)) − α_{1,1}² u_{d-1}/(d+1)`.
pub fn verify_g2_structure(report: &ExpansionReport) -> Result<G2Check> {
    if report.kmax < 2 {
        return Err(Error::InvalidConfig("G_2 check needs kmax ≥ 2".into()));
    }
    let d = report.d;
    let (a11, a22) = (report.alpha(1, 1), report.alpha(2, 2));
    let ud1 = report.u[d - 1];
    let mut predicted = vec![0.0; d + 1];
    predicted[0] = (2.0 * a22 - a11 * a11) * ud1 / (d as f64 + 1.0);
    predicted[2] = a22;
    let g2_residual = (0..=d).map(|j| (report.alpha(2, j) - predicted[j]).abs()).fold(0.0, f64::max);
    let g1_offdiag = (0..=d).filter(|&j| j != 1).map(|j| report.alpha(1, j).abs()).fold(0.0, f64::max);
    Ok(G2Check { predicted, g2_residual, g1_offdiag, residual: g2_residual.max(g1_offdiag) })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConstancyReport {
    pub xs: Vec<f64>,
    /// `diag[x][i] = α̂_{i,i}(x)` for `i = 0, 1, 2`.
    pub diag: Vec<Vec<f64>>,
    pub alpha20: Vec<f64>,
    /// Spread of `α̂_{i,i}` over x, for `i = 1, 2`.
    pub spread: Vec<f64>,
    pub max_spread: f64,
    pub alpha20_spread: f64,
}

fn spread(v: &[f64]) -> f64 {
    v.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x)) - v.iter().fold(f64::INFINITY, |m, &x| m.min(x))
}

pub fn alpha_constancy_check(
    spec: &CurveSpec,
    chi: &ChiConfig,
    xs: &[f64],
    ladder: &EpsLadder,
    precision: Precision,
) -> Result<ConstancyReport> {
    if xs.len() < 3 {
        return Err(Error::InvalidConfig("constancy check needs at least 3 sample points".into()));
    }
    let kmax = max_kmax(precision, ladder);
    let reports = xs.iter().map(|&x| extract_alphas(spec, chi, x, ladder, kmax, precision)).collect::<Result<Vec<_>>>()?;
    let diag: Vec<Vec<f64>> = reports.iter().map(|r| (0..=2).map(|i| r.alpha(i, i)).collect()).collect();
    let alpha20: Vec<f64> = reports.iter().map(|r| r.alpha(2, 0)).collect();
    let sp: Vec<f64> = (1..=2).map(|i| spread(&diag.iter().map(|r| r[i]).collect::<Vec<_>>())).collect();
    Ok(ConstancyReport {
        xs: xs.to_vec(),
        max_spread: sp.iter().copied().fold(0.0, f64::max),
        spread: sp,
        alpha20_spread: spread(&alpha20),
        alpha20,
        diag,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KdvCheck {
    pub x: f64,
    pub alpha22: f64,
    pub w: Vec<f64>,
    /// `α̂_{2,2}` times the `∂^i` coefficients of `[Q_2, L]` at `x`.
    pub predicted: Vec<f64>,
    pub residual: f64,
}

/// Compares the fitted velocities `w_i` with `α̂_{2,2}·[Q_2, L]_i`.
pub fn kdv_rhs_check(spec: &CurveSpec, chi: &ChiConfig, x: f64, ladder: &EpsLadder, precision: Precision) -> Result<KdvCheck> {
    let rep = extract_alphas(spec, chi, x, ladder, max_kmax(precision, ladder), precision)?;
    kdv_check_from_report(spec, &rep)
}

pub fn kdv_check_from_report(spec: &CurveSpec, rep: &ExpansionReport) -> Result<KdvCheck> {
    let l = PseudoDiffOp::<f64>::from_curve(spec, rep.x, 24 + 4 * spec.d)?;
    let rhs = kdv_rhs(&l, 2)?;
    let a22 = rep.alpha(2, 2);
    let predicted: Vec<f64> = rhs.iter().map(|j| a22 * j.value()).collect();
    let residual = rep.w.iter().zip(&predicted).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(KdvCheck { x: rep.x, alpha22: a22, w: rep.w.clone(), predicted, residual })
}

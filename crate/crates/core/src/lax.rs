//! Discrete Lax matrices of sampled curves and their continuum limits.
//!
//! All matrices here express relations between frames (rows are points or
//! derivatives of the lift), so they do not depend on the coordinates used
//! for the points. Frames are evaluated in ε-scaled local coordinates at `x`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chi_config::ChiConfig;
use crate::chi_map::ChiMapper;
use crate::curve::{CurveSpec, LocalSeries};
use crate::discretization::coords_from_points;
use crate::error::{Error, Result};
use crate::expansion::{extract_alphas, max_kmax};
use crate::fit::{series_fit, slope_fit, EpsLadder, SlopeFit};
use crate::jet::{Jet, JetLu};
use crate::linalg::{self, Mat};
use crate::real::{Dd, Precision, Real};

/// Companion matrix with `F' = U F` for the frame `F = (Γ, Γ', …, Γ^(d))`.
pub fn u_matrix_from<T: Real>(u: &[T]) -> Mat<T> {
    let d = u.len();
    let mut m = linalg::zeros(d + 1, d + 1);
    for i in 0..d {
        m[i][i + 1] = T::one();
    }
    for (j, &v) in u.iter().enumerate() {
        m[d][j] = -v;
    }
    m
}

pub fn u_matrix(spec: &CurveSpec, x: f64) -> Result<Mat<f64>> {
    Ok(u_matrix_from(&spec.u_values(x)?))
}

/// Jets (in `s`, at `x + s`) of the matrix `V` with
/// `V·(Γ^(k))_k = c·((Q_2Γ)^(k))_k`, `Q_2 = ∂² + 2u_{d-1}/(d+1)`.
pub fn v_matrix_jet<T: Real>(spec: &CurveSpec, x: T, c: T, order: usize) -> Result<Vec<Vec<Jet<T>>>> {
    let d = spec.d;
    let depth = order + d + 2;
    let series = LocalSeries::new(spec, x, depth + 2)?;
    let gamma = series.point_jet(T::zero(), depth);
    let ud1 = series.u[d - 1].truncate(depth);
    let k2 = T::from_f64(2.0) / T::from_usize(d + 1);
    let q2: Vec<Jet<T>> = gamma.iter().map(|g| g.nth_derivative(2) + (&ud1 * g).scale(k2)).collect();
    let f_rows: Vec<Vec<Jet<T>>> =
        (0..=d).map(|k| gamma.iter().map(|g| g.nth_derivative(k).truncate(order)).collect()).collect();
    let q_rows: Vec<Vec<Jet<T>>> =
        (0..=d).map(|k| q2.iter().map(|g| g.nth_derivative(k).truncate(order).scale(c)).collect()).collect();
    // Row k of V solves V_k·F = c Q_k, i.e. Fᵀ V_kᵀ = c Q_kᵀ.
    let ft: Vec<Vec<Jet<T>>> = (0..=d).map(|j| (0..=d).map(|k| f_rows[k][j].clone()).collect()).collect();
    let lu = JetLu::new(&ft)?;
    Ok(q_rows.iter().map(|q| lu.solve(q)).collect())
}

pub fn v_matrix(spec: &CurveSpec, x: f64, c: f64) -> Result<Mat<f64>> {
    Ok(jet_values(&v_matrix_jet(spec, x, c, 1)?))
}

fn jet_values<T: Real>(m: &[Vec<Jet<T>>]) -> Mat<T> {
    m.iter().map(|r| r.iter().map(Jet::value).collect()).collect()
}

fn jet_slopes<T: Real>(m: &[Vec<Jet<T>>]) -> Mat<T> {
    m.iter().map(|r| r.iter().map(|j| j.coeff(1)).collect()).collect()
}

/// `L̃(z)`: zero first column, `Λ(z)` above, last row `ã`.
pub fn l_tilde_from<T: Real>(a_tilde: &[T], z: T) -> Mat<T> {
    let d = a_tilde.len() - 1;
    let mut m = linalg::zeros(d + 1, d + 1);
    for i in 0..d {
        m[i][i + 1] = if (i + d) % 2 == 1 { z } else { T::one() };
    }
    m[d].clone_from_slice(a_tilde);
    m
}

pub fn l_tilde<T: Real>(spec: &CurveSpec, x: T, eps: T, z: T) -> Result<Mat<T>> {
    Ok(l_tilde_from(&crate::discretization::tilde_a(spec, x, eps)?, z))
}

/// `(D_ε)_{ij} = (−1)^{i−j} C(i,j) / ε^i`.
pub fn d_eps<T: Real>(d: usize, eps: T) -> Mat<T> {
    let mut m = linalg::zeros(d + 1, d + 1);
    for i in 0..=d {
        let mut c = T::one();
        let scale = eps.powi(-(i as i32));
        for j in 0..=i {
            let v = c * scale;
            m[i][j] = if (i - j) % 2 == 0 { v } else { -v };
            c = c * T::from_usize(i - j) / T::from_usize(j + 1);
        }
    }
    m
}

/// `(D_ε^{-1})_{ij} = C(i,j) ε^j`.
pub fn d_eps_inv<T: Real>(d: usize, eps: T) -> Mat<T> {
    let mut m = linalg::zeros(d + 1, d + 1);
    for i in 0..=d {
        let mut c = T::one();
        for j in 0..=i {
            m[i][j] = c * eps.powi(j as i32);
            c = c * T::from_usize(i - j) / T::from_usize(j + 1);
        }
    }
    m
}

fn conj<T: Real>(d_mat: &Mat<T>, m: &Mat<T>, d_inv: &Mat<T>) -> Mat<T> {
    linalg::matmul(&linalg::matmul(d_mat, m), d_inv)
}

/// Frame-transfer matrix `P` with `P·Φ = Φ̃` for row frames.
pub fn transfer<T: Real>(phi: &Mat<T>, phi_tilde: &Mat<T>) -> Result<Mat<T>> {
    let inv = linalg::inverse(phi).map_err(|_| Error::DegenerateIntersection("singular sample frame".into()))?;
    Ok(linalg::matmul(phi_tilde, &inv))
}

/// `D_ε P D_ε^{-1}` computed as `(ΔΦ̃)(ΔΦ)^{-1}` rescaled by `ε^{j−i}`, where
/// rows of `ΔΦ` are forward differences `Δ^kΓ`. Avoids the `ε^{-d}` growth
/// of the explicit conjugation.
pub fn conjugated_transfer<T: Real>(phi: &Mat<T>, phi_tilde: &Mat<T>, eps: T) -> Result<Mat<T>> {
    let m = transfer(&differences(phi), &differences(phi_tilde))?;
    Ok(m.iter()
        .enumerate()
        .map(|(i, r)| r.iter().enumerate().map(|(j, &v)| v * eps.powi(j as i32 - i as i32)).collect())
        .collect())
}

fn differences<T: Real>(rows: &Mat<T>) -> Mat<T> {
    let mut out = vec![rows[0].clone()];
    let mut cur = rows.clone();
    while cur.len() > 1 {
        cur = cur.windows(2).map(|w| w[1].iter().zip(&w[0]).map(|(&b, &a)| b - a).collect()).collect();
        out.push(cur[0].clone());
    }
    out
}

/// Samples of one ladder step: original and mapped curve at `x + jε`,
/// `j = 0..d+1`, in ε-scaled local coordinates.
struct StepFrames<T> {
    eps: T,
    gamma: Mat<T>,
    mapped: Mat<T>,
}

fn step_frames<T: Real>(mapper: &ChiMapper<T>, eps: T) -> Result<StepFrames<T>> {
    let d = mapper.d();
    let g = mapper.series.scaled_coeffs(eps);
    let gamma = (0..=d + 1).map(|j| LocalSeries::eval_scaled(&g, T::from_usize(j))).collect();
    let mapped = (0..=d + 1)
        .map(|j| mapper.map(eps, T::from_usize(j)).map(|o| o.gamma_hat.iter().map(Jet::value).collect()))
        .collect::<Result<_>>()?;
    Ok(StepFrames { eps, gamma, mapped })
}

/// `P̃_{i,0}` at `x` for `shift_index ∈ {0, 1}`, in the shift basis.
pub fn p_tilde<T: Real>(spec: &CurveSpec, chi: &ChiConfig, x: T, eps: T, shift_index: usize) -> Result<Mat<T>> {
    if shift_index > 1 {
        return Err(Error::InvalidConfig("shift index must be 0 or 1".into()));
    }
    let mapper = ChiMapper::new(spec, chi, x, eps.to_f64().abs(), (spec.d + 1) as f64, 2 * spec.d + 2)?;
    let f = step_frames(&mapper, eps)?;
    let rows = shift_index..shift_index + spec.d + 1;
    transfer(&f.gamma[rows.clone()].to_vec(), &f.mapped[rows].to_vec())
}

/// Kinematic limit `ε^{-1}(D_ε L̃ D_ε^{-1} − I) → U`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KinematicsReport {
    pub d: usize,
    pub x: f64,
    pub eps: Vec<f64>,
    /// `‖ε^{-1}(D_ε L̃ D_ε^{-1} − I) − U‖` per ladder point.
    pub deviation: Vec<f64>,
    pub slope: SlopeFit,
    /// Max entry deviation of the extrapolated limit from `U`.
    pub limit_deviation: f64,
}

fn scaled_l<T: Real>(a_tilde: &[T], eps: T) -> Mat<T> {
    let d = a_tilde.len() - 1;
    let m = conj(&d_eps(d, eps), &l_tilde_from(a_tilde, T::one()), &d_eps_inv(d, eps));
    let inv = T::one() / eps;
    m.iter()
        .enumerate()
        .map(|(i, r)| r.iter().enumerate().map(|(j, &v)| (v - if i == j { T::one() } else { T::zero() }) * inv).collect())
        .collect()
}

fn extrapolate_matrix<T: Real>(eps: &[T], mats: &[Mat<T>], deg: usize) -> Result<(Vec<Mat<f64>>, Mat<f64>)> {
    let n = mats[0].len();
    let mut coeffs = vec![vec![vec![0.0; n]; n]; deg + 1];
    let mut unc = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let vals: Vec<T> = mats.iter().map(|m| m[i][j]).collect();
            let f = series_fit(eps, &vals, deg)?;
            for (k, c) in f.coeffs.iter().enumerate() {
                coeffs[k][i][j] = *c;
            }
            unc[i][j] = f.uncertainty[0];
        }
    }
    Ok((coeffs, unc))
}

fn max_dev(a: &Mat<f64>, b: &Mat<f64>) -> f64 {
    linalg::max_abs(&linalg::sub(a, b))
}

fn kinematics_in<T: Real>(spec: &CurveSpec, x: f64, ladder: &EpsLadder) -> Result<KinematicsReport> {
    let d = spec.d;
    let eps = ladder.values();
    let series = LocalSeries::<T>::for_scaled(spec, T::from_f64(x), ladder.eps0, (d + 1) as f64, 0)?;
    let u = u_matrix_from(&series.u.iter().map(Jet::value).collect::<Vec<_>>());
    let mats = eps
        .par_iter()
        .map(|&e| {
            let et = T::from_f64(e);
            let g = series.scaled_coeffs(et);
            let pts: Mat<T> = (0..=d + 1).map(|j| LocalSeries::eval_scaled(&g, T::from_usize(j))).collect();
            Ok(scaled_l(&coords_from_points(&pts, et)?.a_tilde, et))
        })
        .collect::<Result<Vec<_>>>()?;
    let deviation: Vec<f64> = mats.iter().map(|m| linalg::max_abs(&linalg::sub(m, &u))).collect();
    let slope = slope_fit(&eps, &deviation, 8);
    let et: Vec<T> = eps.iter().map(|&e| T::from_f64(e)).collect();
    let (coeffs, _) = extrapolate_matrix(&et, &mats, 4)?;
    Ok(KinematicsReport { d, x, eps, deviation, slope, limit_deviation: max_dev(&coeffs[0], &linalg::to_f64(&u)) })
}

pub fn lax_kinematics(spec: &CurveSpec, x: f64, ladder: &EpsLadder, precision: Precision) -> Result<KinematicsReport> {
    match precision {
        Precision::Double => kinematics_in::<f64>(spec, x, ladder),
        Precision::Extended => kinematics_in::<Dd>(spec, x, ladder),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LaxRow {
    pub eps: f64,
    pub lhs_norm: f64,
    pub rhs_norm: f64,
    /// `max(|LHS − target|, |RHS − target|)` at this ε.
    pub target_deviation: f64,
    /// `‖L̃_{0,1} − P̃_{1,0} L̃_{0,0} P̃_{0,0}^{-1}‖ / ‖L̃_{0,1}‖`.
    pub lax_residual: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LaxReport {
    pub d: usize,
    pub x: f64,
    pub ladder: EpsLadder,
    /// Constant `c` in `V`, taken as the extracted `α̂_{2,2}`.
    pub c: f64,
    pub u: Mat<f64>,
    pub v: Mat<f64>,
    pub v_x: Mat<f64>,
    /// `[V, U] + dV/dx`.
    pub target: Mat<f64>,
    /// `dU/dt` with last row `−w_i` from the expansion fit.
    pub du_dt: Mat<f64>,
    pub kinematics: KinematicsReport,
    pub rows: Vec<LaxRow>,
    pub lhs_limit: Mat<f64>,
    pub rhs_limit: Mat<f64>,
    pub lhs_limit_deviation: f64,
    pub rhs_limit_deviation: f64,
    pub du_dt_deviation: f64,
    pub max_lax_residual: f64,
    /// Largest ε¹ coefficient of `D P̃_{0,0} D^{-1}` and of `D P̃_{1,0} D^{-1}`.
    pub p_eps1: f64,
    /// Max deviation of the ε² coefficients from `V`.
    pub p_eps2_vs_v: f64,
    /// Max deviation of the ε³ coefficient of `D P̃_{1,0} D^{-1}` minus that of `D P̃_{0,0} D^{-1}` from `dV/dx`.
    pub p_shift_eps3_vs_vx: f64,
    pub slope_lhs: SlopeFit,
}

impl LaxReport {
    /// Columns: eps, lhs_norm, rhs_norm, target_deviation, lax_residual,
    /// kinematic_slope, lhs_slope (slopes repeated per row).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("eps,lhs_norm,rhs_norm,target_deviation,lax_residual,kinematic_slope,target_slope\n");
        for r in &self.rows {
            out += &format!(
                "{:e},{:e},{:e},{:e},{:e},{},{}\n",
                r.eps, r.lhs_norm, r.rhs_norm, r.target_deviation, r.lax_residual, self.kinematics.slope.slope, self.slope_lhs.slope
            );
        }
        out
    }
}

fn commutator(a: &Mat<f64>, b: &Mat<f64>) -> Mat<f64> {
    linalg::sub(&linalg::matmul(a, b), &linalg::matmul(b, a))
}

fn lax_in<T: Real>(spec: &CurveSpec, chi: &ChiConfig, x: f64, ladder: &EpsLadder, precision: Precision) -> Result<LaxReport> {
    let d = spec.d;
    let rep = extract_alphas(spec, chi, x, ladder, max_kmax(precision, ladder), precision)?;
    let c = rep.alpha(2, 2);
    let u = u_matrix(spec, x)?;
    let vj = v_matrix_jet::<T>(spec, T::from_f64(x), T::from_f64(c), 2)?;
    let v = linalg::to_f64(&jet_values(&vj));
    let v_x = linalg::to_f64(&jet_slopes(&vj));
    let target = linalg::add(&commutator(&v, &u), &v_x);
    let mut du_dt = linalg::zeros(d + 1, d + 1);
    for (i, w) in rep.w.iter().enumerate() {
        du_dt[d][i] = -w;
    }
    let kinematics = kinematics_in::<T>(spec, x, ladder)?;

    let eps = ladder.values();
    let mapper = ChiMapper::<T>::new(spec, chi, T::from_f64(x), ladder.eps0, (d + 1) as f64, 2 * d + 2)?;
    let frames = eps.par_iter().map(|&e| step_frames(&mapper, T::from_f64(e))).collect::<Result<Vec<_>>>()?;

    struct Step<T> {
        lhs: Mat<T>,
        rhs: Mat<T>,
        x0: Mat<T>,
        x1: Mat<T>,
        lax_residual: f64,
    }
    let steps = frames
        .par_iter()
        .map(|f| {
            let e = f.eps;
            let a00 = coords_from_points(&f.gamma, e)?.a_tilde;
            let a01 = coords_from_points(&f.mapped, e)?.a_tilde;
            let (g0, g1) = (f.gamma[0..=d].to_vec(), f.gamma[1..=d + 1].to_vec());
            let (m0, m1) = (f.mapped[0..=d].to_vec(), f.mapped[1..=d + 1].to_vec());
            let p00 = transfer(&g0, &m0)?;
            let p10 = transfer(&g1, &m1)?;
            let l00 = l_tilde_from(&a00, T::one());
            let l01 = l_tilde_from(&a01, T::one());
            let p00_inv = linalg::inverse(&p00)?;
            let lax = linalg::sub(&l01, &linalg::matmul(&linalg::matmul(&p10, &l00), &p00_inv));
            let lax_residual = linalg::max_abs(&lax) / linalg::max_abs(&l01);
            let x0 = conjugated_transfer(&g0, &m0, e)?;
            let x1 = conjugated_transfer(&g1, &m1, e)?;
            let (dm, di) = (d_eps(d, e), d_eps_inv(d, e));
            let sl0 = conj(&dm, &l00, &di);
            let sl1 = conj(&dm, &l01, &di);
            let e3 = e * e * e;
            let lhs = linalg::scale(&linalg::sub(&sl1, &sl0), T::one() / e3);
            let x0_inv = linalg::inverse(&x0)?;
            let moved = linalg::matmul(&linalg::matmul(&x1, &sl0), &x0_inv);
            let rhs = linalg::scale(&linalg::sub(&moved, &sl0), T::one() / e3);
            Ok(Step { lhs, rhs, x0, x1, lax_residual })
        })
        .collect::<Result<Vec<_>>>()?;

    let rows: Vec<LaxRow> = eps
        .iter()
        .zip(&steps)
        .map(|(&e, s)| {
            let (l, r) = (linalg::to_f64(&s.lhs), linalg::to_f64(&s.rhs));
            LaxRow {
                eps: e,
                lhs_norm: linalg::max_abs(&l),
                rhs_norm: linalg::max_abs(&r),
                target_deviation: max_dev(&l, &target).max(max_dev(&r, &target)),
                lax_residual: s.lax_residual,
            }
        })
        .collect();
    let et: Vec<T> = eps.iter().map(|&e| T::from_f64(e)).collect();
    let lhs_mats: Vec<Mat<T>> = steps.iter().map(|s| s.lhs.clone()).collect();
    let rhs_mats: Vec<Mat<T>> = steps.iter().map(|s| s.rhs.clone()).collect();
    let (lhs_fit, _) = extrapolate_matrix(&et, &lhs_mats, 4)?;
    let (rhs_fit, _) = extrapolate_matrix(&et, &rhs_mats, 4)?;
    let id = linalg::identity::<T>(d + 1);
    let x0_mats: Vec<Mat<T>> = steps.iter().map(|s| linalg::sub(&s.x0, &id)).collect();
    let x1_mats: Vec<Mat<T>> = steps.iter().map(|s| linalg::sub(&s.x1, &id)).collect();
    // The ε² and ε³ coefficients of P̃ carry a large fit bias below degree 10.
    let pdeg = 10.min(eps.len().saturating_sub(5));
    let (p0, _) = extrapolate_matrix(&et, &x0_mats, pdeg)?;
    let (p1, _) = extrapolate_matrix(&et, &x1_mats, pdeg)?;
    let p_eps1 = linalg::max_abs(&p0[1]).max(linalg::max_abs(&p1[1]));
    let p_eps2_vs_v = max_dev(&p0[2], &v).max(max_dev(&p1[2], &v));
    let p_shift_eps3_vs_vx = max_dev(&linalg::sub(&p1[3], &p0[3]), &v_x);
    let dev: Vec<f64> = rows.iter().map(|r| r.target_deviation).collect();
    Ok(LaxReport {
        d,
        x,
        ladder: *ladder,
        c,
        lhs_limit_deviation: max_dev(&lhs_fit[0], &target),
        rhs_limit_deviation: max_dev(&rhs_fit[0], &target),
        du_dt_deviation: max_dev(&du_dt, &target),
        max_lax_residual: rows.iter().map(|r| r.lax_residual).fold(0.0, f64::max),
        lhs_limit: lhs_fit[0].clone(),
        rhs_limit: rhs_fit[0].clone(),
        u,
        v,
        v_x,
        target,
        du_dt,
        kinematics,
        slope_lhs: slope_fit(&eps, &dev, 8),
        rows,
        p_eps1,
        p_eps2_vs_v,
        p_shift_eps3_vs_vx,
    })
}

/// Both ε³-normalized sides of the discrete Lax relation and their limits,
/// compared against the zero-curvature target. `χ` should be centralized.
pub fn lax_limit_diagnostics(
    spec: &CurveSpec,
    chi: &ChiConfig,
    x: f64,
    ladder: &EpsLadder,
    precision: Precision,
) -> Result<LaxReport> {
    match precision {
        Precision::Double => lax_in::<f64>(spec, chi, x, ladder, precision),
        Precision::Extended => lax_in::<Dd>(spec, chi, x, ladder, precision),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn d_eps_first_difference() {
        let m = d_eps(1, 0.5);
        assert_eq!(m, vec![vec![1.0, 0.0], vec![-2.0, 2.0]]);
        let p = linalg::matmul(&d_eps(4, 0.3), &d_eps_inv(4, 0.3));
        assert!(linalg::max_abs(&linalg::sub(&p, &linalg::identity(5))) < 1e-12);
    }

    #[test]
    fn lambda_block_alternates() {
        let m = l_tilde_from(&[1.0, 2.0, 3.0, 4.0], 7.0);
        assert_eq!((m[0][1], m[1][2], m[2][3]), (7.0, 1.0, 7.0));
        let m = l_tilde_from(&[1.0, -3.0, 3.0], 7.0);
        assert_eq!((m[0][1], m[1][2]), (1.0, 7.0));
    }

    #[test]
    fn companion_last_row() {
        let u = u_matrix_from(&[1.0, 2.0]);
        assert_eq!(u[2], vec![-1.0, -2.0, 0.0]);
        assert_eq!(u[0], vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn conjugated_transfer_matches_explicit_conjugation() {
        let phi = vec![vec![1.0, 0.2, -0.3], vec![0.9, 1.1, 0.4], vec![0.7, 0.5, 1.3]];
        let phi_t = vec![vec![1.2, -0.1, 0.3], vec![0.8, 0.9, -0.2], vec![0.4, 0.6, 1.1]];
        let eps = 0.3;
        let explicit = conj(&d_eps(2, eps), &transfer(&phi, &phi_t).unwrap(), &d_eps_inv(2, eps));
        let fast = conjugated_transfer(&phi, &phi_t, eps).unwrap();
        assert!(max_dev(&linalg::to_f64(&explicit), &fast) < 1e-12);
    }

    #[test]
    fn scaled_l_is_shift_plus_scaled_coefficients() {
        // ε^{-1}(D L̃ D^{-1} − I) has ones above the diagonal and last row −A_j/ε^{d+1−j}.
        let (d, eps) = (3, 0.25);
        let a = [0.3, -0.2, 0.5, 0.1];
        let at = crate::discretization::tilde_from_a(&a);
        let m = scaled_l(&at, eps);
        for i in 0..=d {
            for j in 0..=d {
                let want = if i == d {
                    -a[j] / eps.powi((d + 1 - j) as i32)
                } else if j == i + 1 {
                    1.0
                } else {
                    0.0
                };
                assert!((m[i][j] - want).abs() < 1e-10, "({i},{j}): {} vs {want}", m[i][j]);
            }
        }
    }
}

//! Nondegenerate curves given by the coefficients of `Γ^(d+1) + Σ u_i Γ^(i) = 0`.
//!
//! Two coordinate systems appear. *Standard* coordinates are those of the
//! initial frame `F0`. *Local* coordinates at `x` use the basis
//! `E_m = Γ^(m)(x)`, in which `Γ(x+s) = Σ_n g_n s^n` with `g_n = e_n/n!` for
//! `n ≤ d`. Local coordinates are intrinsic: they need only the u-jets at `x`
//! and have unit Wronskian by construction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::{det_jet, eval_jet, AnalyticFn, Jet, JetLu};
use crate::linalg::{self, Mat};
use crate::real::Real;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveSpec {
    pub d: usize,
    pub u: Vec<AnalyticFn>,
    pub x0: f64,
    #[serde(rename = "F0")]
    pub f0: Vec<Vec<f64>>,
}

impl CurveSpec {
    /// Validates shapes and normalizes `det F0` to 1.
    ///
    /// The normalization rescales the first column of `F0`, a linear change
    /// of ambient coordinates, so the projective curve is unchanged.
    pub fn new(u: Vec<AnalyticFn>, x0: f64, f0: Vec<Vec<f64>>) -> Result<Self> {
        let d = u.len();
        if d == 0 {
            return Err(Error::InvalidSpec("need at least one coefficient u_0".into()));
        }
        if f0.len() != d + 1 || f0.iter().any(|r| r.len() != d + 1) {
            return Err(Error::InvalidSpec(format!("F0 must be {0}x{0}", d + 1)));
        }
        let mut spec = CurveSpec { d, u, x0, f0 };
        let det = linalg::det(&spec.f0);
        if !det.is_finite() || det.abs() < 1e-12 {
            return Err(Error::InvalidSpec(format!("det F0 = {det} is degenerate")));
        }
        if (det - 1.0).abs() > 1e-12 {
            for row in spec.f0.iter_mut() {
                row[0] /= det;
            }
        }
        Ok(spec)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw {
            d: usize,
            u: Vec<AnalyticFn>,
            x0: f64,
            #[serde(rename = "F0")]
            f0: Vec<Vec<f64>>,
        }
        let raw: Raw = serde_json::from_str(s)?;
        if raw.u.len() != raw.d {
            return Err(Error::InvalidSpec(format!("d = {} but {} coefficient functions", raw.d, raw.u.len())));
        }
        for (i, f) in raw.u.iter().enumerate() {
            if f.periodic && f.periodicity_defect()? > 1e-9 {
                return Err(Error::InvalidSpec(format!("u_{i} is declared periodic but is not 2π-periodic")));
            }
        }
        Self::new(raw.u, raw.x0, raw.f0)
    }

    /// `u ≡ 0` with `F0 = I`; the lift is the normal curve `(1, x, x²/2, …)` at `x0 = 0`.
    pub fn flat(d: usize) -> Self {
        let f0 = linalg::identity::<f64>(d + 1);
        CurveSpec { d, u: vec![AnalyticFn::constant(0.0); d], x0: 0.0, f0 }
    }

    /// Seeded random curve: each `u_i` is a degree-2 trigonometric polynomial
    /// with coefficients uniform in [−0.5, 0.5]; `F0` is a unimodular
    /// perturbation of the identity.
    pub fn random(d: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut coef = || rng.gen_range(-0.5..=0.5);
        let u = (0..d)
            .map(|_| {
                let c0 = coef();
                let h = [(coef(), coef()), (coef(), coef())];
                AnalyticFn::trig_poly(c0, &h)
            })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        let f0: Vec<Vec<f64>> = (0..=d)
            .map(|i| (0..=d).map(|j| if i == j { 1.0 } else { 0.0 } + rng.gen_range(-0.3..=0.3)).collect())
            .collect();
        Self::new(u, 0.0, f0).expect("perturbed identity is nondegenerate")
    }

    pub fn u_jets<T: Real>(&self, x: T, order: usize) -> Result<Vec<Jet<T>>> {
        self.u.iter().map(|f| eval_jet(f, x, order)).collect()
    }

    pub fn u_values(&self, x: f64) -> Result<Vec<f64>> {
        self.u.iter().map(|f| f.eval(x)).collect()
    }

    /// Genericity margin `min(|u_i|, |u'_{d-1}|) / (1 + Σ|u_i'| + Σ|u_i''|)` at `x`.
    /// Small values mean leading ε-coefficients nearly vanish there.
    pub fn genericity_margin(&self, x: f64) -> Result<f64> {
        let j = self.u_jets::<f64>(x, 2)?;
        let scale = 1.0 + j.iter().map(|u| u.coeff(1).abs() + 2.0 * u.coeff(2).abs()).sum::<f64>();
        let top = j.last().map_or(0.0, |u| u.coeff(1).abs());
        Ok(j.iter().map(|u| u.value().abs()).fold(top, f64::min) / scale)
    }

    /// Sample point among `n` equispaced points of `[0, 2π)` with the largest
    /// [`Self::genericity_margin`].
    pub fn generic_point(&self, n: usize) -> Result<f64> {
        let mut best = (0.0, f64::NEG_INFINITY);
        for k in 0..n {
            let x = k as f64 * std::f64::consts::TAU / n as f64;
            let m = self.genericity_margin(x)?;
            if m > best.1 {
                best = (x, m);
            }
        }
        Ok(best.0)
    }
}

/// Taylor coefficients of `Γ(x+s)` in local coordinates at `x`.
#[derive(Clone, Debug)]
pub struct LocalSeries<T> {
    pub d: usize,
    pub x: T,
    /// `g[n][j]`: component `j` of the `s^n` coefficient.
    pub g: Vec<Vec<T>>,
    /// u-jets at `x`, same length as `g`.
    pub u: Vec<Jet<T>>,
}

impl<T: Real> LocalSeries<T> {
    /// Series with `terms` coefficients (`g_0..g_{terms-1}`).
    pub fn new(spec: &CurveSpec, x: T, terms: usize) -> Result<Self> {
        let d = spec.d;
        let terms = terms.max(d + 2);
        let u = spec.u_jets(x, terms)?;
        let mut g = vec![vec![T::zero(); d + 1]; terms];
        let mut fact = T::one();
        for (n, gn) in g.iter_mut().enumerate().take(d + 1) {
            if n > 0 {
                fact *= T::from_usize(n);
            }
            gn[n] = T::one() / fact;
        }
        for n in 0..terms.saturating_sub(d + 1) {
            // (n+d+1)!/n! g_{n+d+1} = −Σ_i Σ_{a+b=n} u_{i,a} (b+i)!/b! g_{b+i}
            let mut acc = vec![T::zero(); d + 1];
            for (i, ui) in u.iter().enumerate() {
                for a in 0..=n {
                    let ua = ui.coeff(a);
                    if ua == T::zero() {
                        continue;
                    }
                    let b = n - a;
                    let mut ff = T::one();
                    for k in 1..=i {
                        ff *= T::from_usize(b + k);
                    }
                    let w = ua * ff;
                    for (s, &v) in acc.iter_mut().zip(&g[b + i]) {
                        *s += w * v;
                    }
                }
            }
            let mut ff = T::one();
            for k in 1..=d + 1 {
                ff *= T::from_usize(n + k);
            }
            for (j, s) in acc.into_iter().enumerate() {
                g[n + d + 1][j] = -s / ff;
            }
        }
        Ok(LocalSeries { d, x, g, u })
    }

    /// Series long enough that `Γ(x+τ)` and its `order`-jet are converged
    /// to working precision for `|τ| ≤ radius`.
    pub fn for_radius(spec: &CurveSpec, x: T, radius: f64, order: usize) -> Result<Self> {
        let mut terms = 32 + order;
        loop {
            let s = Self::new(spec, x, terms)?;
            if s.tail_estimate(radius, order) < T::epsilon() * 1e-3 || terms >= 1024 {
                return Ok(s);
            }
            terms *= 2;
        }
    }

    /// Series long enough for ε-scaled evaluation with `|ε| ≤ eps_max` at
    /// scaled offsets `|p| ≤ reach`, keeping σ-jets of `order` converged.
    pub fn for_scaled(spec: &CurveSpec, x: T, eps_max: f64, reach: f64, order: usize) -> Result<Self> {
        let mut terms = 48 + order;
        loop {
            let s = Self::new(spec, x, terms)?;
            if s.scaled_tail(T::from_f64(eps_max), reach, order) < T::epsilon() * 1e-3 || terms >= 2048 {
                return Ok(s);
            }
            terms *= 2;
        }
    }

    /// `G_n = diag(ε^{-j}) g_n ε^n`, the coefficients of `Γ̂(σ) = diag(ε^{-j}) Γ(x+εσ)`.
    /// Exact (`e_n/n!`) for `n ≤ d`.
    pub fn scaled_coeffs(&self, eps: T) -> Vec<Vec<T>> {
        let d = self.d;
        let inv = T::one() / eps;
        let mut epow = T::one();
        self.g
            .iter()
            .enumerate()
            .map(|(n, gn)| {
                let row = if n <= d {
                    gn.clone()
                } else {
                    let mut s = epow;
                    gn.iter()
                        .map(|&v| {
                            let r = v * s;
                            s *= inv;
                            r
                        })
                        .collect()
                };
                epow *= eps;
                row
            })
            .collect()
    }

    pub fn scaled_tail(&self, eps: T, reach: f64, order: usize) -> f64 {
        let g = self.scaled_coeffs(eps);
        let n = g.len();
        let reach = reach.max(1.0);
        let mut worst: f64 = 0.0;
        for idx in n.saturating_sub(4)..n {
            let gn = g[idx].iter().fold(0.0f64, |m, v| m.max(v.to_f64().abs()));
            let mut binom = 1.0f64;
            for a in 0..order.min(idx) {
                binom *= (idx - a) as f64 / (a + 1) as f64;
            }
            worst = worst.max(gn * binom * reach.powi(idx as i32));
        }
        worst
    }

    /// Evaluates `Σ G_n p^n` for coefficients from [`Self::scaled_coeffs`].
    pub fn eval_scaled(g: &[Vec<T>], p: T) -> Vec<T> {
        let mut out = vec![T::zero(); g[0].len()];
        for gn in g.iter().rev() {
            for (o, &v) in out.iter_mut().zip(gn) {
                *o = *o * p + v;
            }
        }
        out
    }

    /// Size of the last few series terms relative to the leading ones.
    pub fn tail_estimate(&self, radius: f64, order: usize) -> f64 {
        let n = self.g.len();
        let r = radius.max(1e-3);
        let mut worst: f64 = 0.0;
        for k in n.saturating_sub(4)..n {
            let gk = self.g[k].iter().fold(0.0f64, |m, v| m.max(v.to_f64().abs()));
            let mut binom = 1.0f64;
            for a in 0..order.min(k) {
                binom *= (k - a) as f64 / (a + 1) as f64;
            }
            let scale = r.powi(k as i32 - order.min(k) as i32).max(r.powi(k as i32));
            worst = worst.max(gk * binom * scale);
        }
        worst
    }

    pub fn terms(&self) -> usize {
        self.g.len()
    }

    /// `Γ^(m)(x+τ)` in local coordinates.
    pub fn derivative_at(&self, m: usize, tau: T) -> Vec<T> {
        let mut out = vec![T::zero(); self.d + 1];
        for n in (m..self.g.len()).rev() {
            let mut ff = T::one();
            for k in 0..m {
                ff *= T::from_usize(n - k);
            }
            for (o, &v) in out.iter_mut().zip(&self.g[n]) {
                *o = *o * tau + ff * v;
            }
        }
        out
    }

    pub fn point(&self, tau: T) -> Vec<T> {
        self.derivative_at(0, tau)
    }

    /// Jets in `t` of `Γ(x+τ+t)` to order `order`.
    pub fn point_jet(&self, tau: T, order: usize) -> Vec<Jet<T>> {
        let d = self.d;
        let mut comps = vec![vec![T::zero(); order + 1]; d + 1];
        for a in 0..=order {
            let v = self.derivative_at(a, tau);
            let mut fa = T::one();
            for k in 2..=a {
                fa *= T::from_usize(k);
            }
            for j in 0..=d {
                comps[j][a] = v[j] / fa;
            }
        }
        comps.into_iter().map(Jet::new).collect()
    }
}

/// Jets of the `d+1` components of `Γ` at a point, in standard coordinates.
#[derive(Clone, Debug)]
pub struct FrameJet<T> {
    pub comps: Vec<Jet<T>>,
}

impl<T: Real> FrameJet<T> {
    pub fn d(&self) -> usize {
        self.comps.len() - 1
    }
    pub fn order(&self) -> usize {
        self.comps.iter().map(Jet::order).min().unwrap_or(0)
    }
    /// Component jets of `Γ^(k)`.
    pub fn derivative(&self, k: usize) -> Vec<Jet<T>> {
        self.comps.iter().map(|c| c.nth_derivative(k)).collect()
    }
    /// Rows `Γ(x), Γ'(x), …, Γ^(d)(x)`.
    pub fn frame(&self) -> Mat<T> {
        (0..=self.d()).map(|k| self.comps.iter().map(|c| c.derivative_value(k)).collect()).collect()
    }
}

const STEP_TERMS: usize = 30;

/// Frame rows `Γ^(k)(x)`, `k = 0..d`, in standard coordinates, by Taylor
/// stepping from `x0` with steps of at most 0.1.
pub fn frame_at<T: Real>(spec: &CurveSpec, x: T) -> Result<Mat<T>> {
    let x0 = T::from_f64(spec.x0);
    let mut frame: Mat<T> = linalg::from_f64(&spec.f0);
    let mut pos = x0;
    let dir = if x >= x0 { T::one() } else { -T::one() };
    let hmax = T::from_f64(0.1);
    let tol = T::epsilon() * 1e-2;
    while (x - pos).abs() > T::zero() {
        let remaining = (x - pos).abs();
        let mut h = remaining.min(hmax);
        let series = LocalSeries::new(spec, pos, STEP_TERMS)?;
        loop {
            if series.tail_estimate(h.to_f64(), spec.d) < tol {
                break;
            }
            h = h / T::from_f64(2.0);
            if h.to_f64() < 1e-8 {
                return Err(Error::IntegrationFailure { x: pos.to_f64(), reason: "step size underflow".into() });
            }
        }
        let step = h * dir;
        let local: Mat<T> = (0..=spec.d).map(|k| series.derivative_at(k, step)).collect();
        frame = linalg::matmul(&local, &frame);
        pos = if h == remaining { x } else { pos + step };
    }
    Ok(frame)
}

/// Jets of `Γ` at `x` to order `order` (standard coordinates).
pub fn gamma_jet<T: Real>(spec: &CurveSpec, x: T, order: usize) -> Result<FrameJet<T>> {
    if order < spec.d {
        return Err(Error::InvalidSpec(format!("jet order {order} below d = {}", spec.d)));
    }
    let frame = frame_at(spec, x)?;
    let series = LocalSeries::new(spec, x, order + 1)?;
    let comps = (0..=spec.d)
        .map(|c| Jet::new((0..=order).map(|a| (0..=spec.d).map(|m| series.g[a][m] * frame[m][c]).sum()).collect()))
        .collect();
    Ok(FrameJet { comps })
}

/// `det(Γ, Γ', …, Γ^(d))(x)`.
pub fn wronskian<T: Real>(spec: &CurveSpec, x: T) -> Result<T> {
    Ok(linalg::det(&frame_at(spec, x)?))
}

#[derive(Clone, Debug)]
pub struct NormalizedLift<T> {
    /// Components of the normalized lift.
    pub gamma: Vec<Jet<T>>,
    /// Scalar factor `f` with `gamma = f · raw`.
    pub factor: Jet<T>,
    /// Coefficients `u_0..u_{d-1}` of the ODE satisfied by `gamma`.
    pub u: Vec<Jet<T>>,
    /// `|u_d|` at the base point; vanishes for an exactly normalized lift.
    pub top_residual: f64,
}

/// Rescales an arbitrary lift to unit Wronskian and reads off its ODE.
///
/// For odd `d+1` the real root of `W^{-1/(d+1)}` is unique. For even `d+1`
/// the Wronskian must be positive and the sign of `f` is chosen so that the
/// lift has a nonnegative inner product with `reference` (continuity in ε).
pub fn normalized_lift<T: Real>(raw: &[Jet<T>], reference: Option<&[T]>) -> Result<NormalizedLift<T>> {
    let d = raw.len() - 1;
    let k = raw.iter().map(Jet::order).min().unwrap_or(0);
    if k < 2 * d + 1 {
        return Err(Error::DegenerateLift(format!("jet order {k} below 2d+1 = {}", 2 * d + 1)));
    }
    let rows: Vec<Vec<Jet<T>>> = (0..=d).map(|m| raw.iter().map(|c| c.nth_derivative(m)).collect()).collect();
    let w = det_jet(&rows);
    let w0 = w.value();
    if w0 == T::zero() || !w0.is_finite() {
        return Err(Error::DegenerateLift("Wronskian vanishes".into()));
    }
    let n = d + 1;
    let p = -T::one() / T::from_usize(n);
    let mut f = if w0 > T::zero() {
        w.powf(p)?
    } else if n % 2 == 1 {
        -((-&w).powf(p)?)
    } else {
        return Err(Error::DegenerateLift("negative Wronskian with even d+1 admits no real normalization".into()));
    };
    if n % 2 == 0 {
        if let Some(r) = reference {
            let s: T = raw.iter().zip(r).map(|(c, &v)| c.value() * v).sum();
            if s < T::zero() {
                f = -f;
            }
        }
    }
    let gamma: Vec<Jet<T>> = raw.iter().map(|c| c * &f).collect();
    let derivs: Vec<Vec<Jet<T>>> = (0..=n).map(|m| gamma.iter().map(|c| c.nth_derivative(m)).collect()).collect();
    // Σ_{i≤d} u_i Γ^(i) = −Γ^(d+1): rows are components, columns are i.
    let a: Vec<Vec<Jet<T>>> = (0..=d).map(|j| (0..=d).map(|i| derivs[i][j].clone()).collect()).collect();
    let b: Vec<Jet<T>> = (0..=d).map(|j| -&derivs[n][j]).collect();
    let sol = JetLu::new(&a).map_err(|_| Error::DegenerateLift("lift frame is singular".into()))?.solve(&b);
    let top_residual = sol[d].value().to_f64().abs();
    Ok(NormalizedLift { gamma, factor: f, u: sol[..d].to_vec(), top_residual })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn local_series_starts_with_scaled_basis() {
        let spec = CurveSpec::random(3, 1);
        let s = LocalSeries::<f64>::new(&spec, 0.4, 12).unwrap();
        assert_eq!(s.g[0], vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(s.g[2], vec![0.0, 0.0, 0.5, 0.0]);
        // Γ'''' = −Σ u_i Γ^(i) at x: g_4 = −u/24 in local coordinates
        let u = spec.u_values(0.4).unwrap();
        for i in 0..3 {
            assert!((s.g[4][i] + u[i] / 24.0).abs() < 1e-15);
        }
    }

    #[test]
    fn derivative_at_matches_point_jet() {
        let spec = CurveSpec::random(2, 5);
        let s = LocalSeries::<f64>::new(&spec, 1.0, 40).unwrap();
        let j = s.point_jet(0.3, 4);
        let d2 = s.derivative_at(2, 0.3);
        for c in 0..3 {
            assert!((j[c].coeff(2) * 2.0 - d2[c]).abs() < 1e-13);
        }
    }

    #[test]
    fn flat_curve_is_polynomial() {
        let spec = CurveSpec::flat(2);
        let g = gamma_jet::<f64>(&spec, 0.7, 6).unwrap();
        assert!((g.comps[2].value() - 0.245).abs() < 1e-15);
        assert!(g.derivative(3).iter().all(|c| c.max_abs() < 1e-15));
    }

    #[test]
    fn lift_of_doubled_curve_halves() {
        let spec = CurveSpec::random(1, 3);
        let g = gamma_jet::<f64>(&spec, 0.2, 6).unwrap();
        let raw: Vec<Jet<f64>> = g.comps.iter().map(|c| c.scale(2.0)).collect();
        let nl = normalized_lift(&raw, Some(&g.frame()[0])).unwrap();
        assert!((nl.factor.value() - 0.5).abs() < 1e-14);
        let u = spec.u_values(0.2).unwrap();
        assert!((nl.u[0].value() - u[0]).abs() < 1e-12);
    }
}

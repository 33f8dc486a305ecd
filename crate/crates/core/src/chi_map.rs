//! The χ-pentagram map at a point: spans of shifted curve points, their
//! common intersection, and the normalized lift of the image curve.
//!
//! Computations run in *scaled* local coordinates at `x`: component `j` of
//! the local frame coordinates is multiplied by `ε^{-j}` and the jet variable
//! is `σ = t/ε`. In these units the points `Γ(x + pε)` tend to the moment
//! curve `p ↦ (p^j/j!)_j` as ε → 0, so every span and every intersection stays
//! well conditioned. Spans use the Newton (divided-difference) basis over the
//! nodes, which spans the same subspace as the points themselves.
//!
//! Under the rescaling the Wronskian is unchanged and the ODE becomes
//! `Γ̂^(d+1) + Σ ε^{d+1-i} u_{i,ε} Γ̂^(i) = 0` in `σ`.

use crate::chi_config::ChiConfig;
use crate::curve::{frame_at, normalized_lift, CurveSpec, FrameJet, LocalSeries};
use crate::error::{Error, Result};
use crate::jet::{Jet, JetLu};
use crate::linalg::{self, Mat};
use crate::real::Real;

/// Basis vectors (component jets) of one subspace `P_ε^i`.
#[derive(Clone, Debug)]
pub struct SubspaceSpan<T> {
    pub vectors: Vec<Vec<Jet<T>>>,
}

impl<T: Real> SubspaceSpan<T> {
    pub fn from_constant(vectors: &[Vec<T>]) -> Self {
        SubspaceSpan { vectors: vectors.iter().map(|v| v.iter().map(|&x| Jet::constant(x, 0)).collect()).collect() }
    }
    pub fn dim(&self) -> usize {
        self.vectors.len()
    }
}

/// Local series at `x` prepared for repeated χ-map evaluations.
#[derive(Clone, Debug)]
pub struct ChiMapper<T> {
    pub chi: ChiConfig,
    pub series: LocalSeries<T>,
    pub order: usize,
}

/// Output of one χ-map evaluation, in scaled local coordinates.
#[derive(Clone, Debug)]
pub struct ChiMapLocal<T> {
    pub d: usize,
    pub eps: T,
    /// Base offset in units of ε: the image point is `T_ε(γ)(x + shift·ε)`.
    pub shift: T,
    /// Normalized lift as σ-jets in scaled coordinates.
    pub gamma_hat: Vec<Jet<T>>,
    /// σ-jets of `ε^{d+1-i} u_{i,ε}`.
    pub u_hat: Vec<Jet<T>>,
    pub top_residual: f64,
}

impl<T: Real> ChiMapLocal<T> {
    /// `Γ̃_ε(x + shift·ε)` in unscaled local coordinates at `x`.
    pub fn point_local(&self) -> Vec<T> {
        let mut s = T::one();
        self.gamma_hat
            .iter()
            .map(|g| {
                let v = g.value() * s;
                s *= self.eps;
                v
            })
            .collect()
    }

    /// `u_{i,ε}` at the image base point.
    pub fn u_eps(&self) -> Vec<T> {
        let d = self.d;
        self.u_hat.iter().enumerate().map(|(i, u)| u.value() / self.eps.powi((d + 1 - i) as i32)).collect()
    }

    /// Unscaled x-jets of the image lift in local coordinates at `x`.
    pub fn gamma_local_jets(&self) -> Vec<Jet<T>> {
        let e = self.eps;
        self.gamma_hat.iter().enumerate().map(|(j, g)| g.map_coeffs(|a, v| v * e.powi(j as i32 - a as i32))).collect()
    }

    /// x-jets of `u_{i,ε}`.
    pub fn u_eps_jets(&self) -> Vec<Jet<T>> {
        let (d, e) = (self.d, self.eps);
        self.u_hat.iter().enumerate().map(|(i, u)| u.map_coeffs(|a, v| v / e.powi((d + 1 - i + a) as i32))).collect()
    }
}

/// Complete homogeneous symmetric polynomials `h[m][k] = h_k(p_0..p_m)`.
fn complete_homogeneous<T: Real>(nodes: &[T], kmax: usize) -> Vec<Vec<T>> {
    let mut h: Vec<Vec<T>> = Vec::with_capacity(nodes.len());
    for (m, &p) in nodes.iter().enumerate() {
        let mut row = vec![T::zero(); kmax + 1];
        for k in 0..=kmax {
            let prev = if m > 0 { h[m - 1][k] } else if k == 0 { T::one() } else { T::zero() };
            row[k] = prev + if k > 0 { p * row[k - 1] } else { T::zero() };
        }
        h.push(row);
    }
    h
}

impl<T: Real> ChiMapper<T> {
    /// Prepares series long enough for every `|ε| ≤ eps_max` and base offset
    /// `|shift| ≤ shift_max`. `order` is the σ-jet order (≥ 2d+2).
    pub fn new(spec: &CurveSpec, chi: &ChiConfig, x: T, eps_max: f64, shift_max: f64, order: usize) -> Result<Self> {
        if chi.d != spec.d {
            return Err(Error::InvalidConfig(format!("χ has d = {} but the curve has d = {}", chi.d, spec.d)));
        }
        if order < 2 * spec.d + 2 {
            return Err(Error::InvalidConfig(format!("jet order {order} below 2d+2")));
        }
        let reach = chi.max_abs_node() + shift_max.abs() + 1.0;
        let series = LocalSeries::for_scaled(spec, x, eps_max, reach, order)?;
        Ok(ChiMapper { chi: chi.clone(), series, order })
    }

    pub fn d(&self) -> usize {
        self.series.d
    }

    /// Newton-basis spans of each `P_ε^i` at base `x + shift·ε`, as σ-jets.
    pub fn build_spans(&self, eps: T, shift: T) -> Vec<SubspaceSpan<T>> {
        let g = self.series.scaled_coeffs(eps);
        self.spans_from(&g, shift)
    }

    fn spans_from(&self, g: &[Vec<T>], shift: T) -> Vec<SubspaceSpan<T>> {
        let d = self.d();
        let nterms = g.len();
        let k = self.order;
        // binom[n][a] = C(n, a) for a ≤ k
        let mut binom = vec![vec![T::zero(); k + 1]; nterms];
        for n in 0..nterms {
            binom[n][0] = T::one();
            for a in 1..=k.min(n) {
                binom[n][a] = if a == n { T::one() } else { binom[n - 1][a - 1] + binom[n - 1][a] };
            }
        }
        self.chi
            .groups
            .iter()
            .map(|grp| {
                let nodes: Vec<T> = grp.iter().map(|&p| T::from_f64(p) + shift).collect();
                let h = complete_homogeneous(&nodes, nterms);
                let vectors = (0..nodes.len())
                    .map(|m| {
                        let mut comps = vec![vec![T::zero(); k + 1]; d + 1];
                        for a in 0..=k {
                            for n in (m + a)..nterms {
                                let w = binom[n][a] * h[m][n - a - m];
                                for (c, &v) in comps.iter_mut().zip(&g[n]) {
                                    c[a] += w * v;
                                }
                            }
                        }
                        comps.into_iter().map(Jet::new).collect()
                    })
                    .collect();
                SubspaceSpan { vectors }
            })
            .collect()
    }

    /// `T_ε(γ)(x + shift·ε)` with its normalized lift.
    pub fn map(&self, eps: T, shift: T) -> Result<ChiMapLocal<T>> {
        if eps == T::zero() {
            return Err(Error::InvalidConfig("ε must be nonzero".into()));
        }
        let g = self.series.scaled_coeffs(eps);
        let spans = self.spans_from(&g, shift);
        let raw = intersect_spans(&spans)?;
        let reference = LocalSeries::eval_scaled(&g, shift);
        let nl = normalized_lift(&raw, Some(&reference))?;
        Ok(ChiMapLocal { d: self.d(), eps, shift, gamma_hat: nl.gamma, u_hat: nl.u, top_residual: nl.top_residual })
    }

    /// Largest normalized maximal minor of `[Γ̃, Γ(x+p_{i,0}ε), …]` over all
    /// groups, in scaled coordinates; zero when the coplanarity conditions hold.
    pub fn wedge_residual(&self, out: &ChiMapLocal<T>) -> f64 {
        let g = self.series.scaled_coeffs(out.eps);
        let point: Vec<T> = out.gamma_hat.iter().map(Jet::value).collect();
        let d1 = point.len();
        let mut worst: f64 = 0.0;
        for grp in &self.chi.groups {
            let mut rows: Mat<T> = vec![point.clone()];
            for &p in grp {
                rows.push(LocalSeries::eval_scaled(&g, T::from_f64(p) + out.shift));
            }
            for r in rows.iter_mut() {
                let n = linalg::norm(r);
                r.iter_mut().for_each(|v| *v /= n);
            }
            for cols in combinations(d1, rows.len()) {
                let minor: Mat<T> = rows.iter().map(|r| cols.iter().map(|&c| r[c]).collect()).collect();
                worst = worst.max(linalg::det(&minor).to_f64().abs());
            }
        }
        worst
    }
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Common point of subspaces whose codimensions sum to the ambient
/// projective dimension, as jets, with the component of largest constant
/// magnitude fixed to 1.
///
/// Each span contributes covectors annihilating it order by order: rows of
/// `B^{-1}` where `B = [span vectors | orthonormal complement of the
/// constant-term span]`.
pub fn intersect_spans<T: Real>(spans: &[SubspaceSpan<T>]) -> Result<Vec<Jet<T>>> {
    let n = spans.first().and_then(|s| s.vectors.first()).map(Vec::len).ok_or_else(|| {
        Error::DegenerateIntersection("no spans".into())
    })?;
    let order = spans.iter().flat_map(|s| s.vectors.iter().flatten()).map(Jet::order).min().unwrap_or(0);
    let mut constraints: Vec<Vec<Jet<T>>> = Vec::new();
    for s in spans {
        let q1 = s.dim();
        let constant: Vec<Vec<T>> = s.vectors.iter().map(|v| v.iter().map(Jet::value).collect()).collect();
        let comp = linalg::orth_complement(&constant, n);
        if comp.len() + q1 != n {
            return Err(Error::DegenerateIntersection("span vectors are linearly dependent".into()));
        }
        // Bᵀ: row m is the m-th basis vector of B.
        let bt: Vec<Vec<Jet<T>>> = s
            .vectors
            .iter()
            .map(|v| v.iter().map(|c| c.truncate(order)).collect())
            .chain(comp.iter().map(|w| w.iter().map(|&x| Jet::constant(x, order)).collect()))
            .collect();
        let lu = JetLu::new(&bt).map_err(|_| Error::DegenerateIntersection("span basis is singular".into()))?;
        for k in q1..n {
            let e: Vec<Jet<T>> = (0..n).map(|j| Jet::constant(if j == k { T::one() } else { T::zero() }, order)).collect();
            constraints.push(lu.solve(&e));
        }
    }
    if constraints.len() + 1 != n {
        return Err(Error::DegenerateIntersection(format!(
            "{} constraints in dimension {}; need {}",
            constraints.len(),
            n,
            n - 1
        )));
    }
    let c0: Mat<T> = constraints.iter().map(|r| r.iter().map(Jet::value).collect()).collect();
    let null = linalg::cross_null(&c0);
    let scale: f64 = c0.iter().map(|r| linalg::norm(r).to_f64()).product();
    let nn = linalg::norm(&null).to_f64();
    if !(nn > 1e-13 * scale) {
        return Err(Error::DegenerateIntersection(format!("constraint rank deficit (|minors| = {nn:e})")));
    }
    let jstar = (0..n).max_by(|&a, &b| null[a].abs().partial_cmp(&null[b].abs()).unwrap()).unwrap();
    let others: Vec<usize> = (0..n).filter(|&j| j != jstar).collect();
    let a: Vec<Vec<Jet<T>>> = constraints.iter().map(|r| others.iter().map(|&j| r[j].clone()).collect()).collect();
    let b: Vec<Jet<T>> = constraints.iter().map(|r| -&r[jstar]).collect();
    let sol = JetLu::new(&a).map_err(|_| Error::DegenerateIntersection("reduced system is singular".into()))?.solve(&b);
    let ord = sol.iter().map(Jet::order).min().unwrap_or(0);
    let mut point = vec![Jet::constant(T::one(), ord); n];
    for (&j, v) in others.iter().zip(sol) {
        point[j] = v;
    }
    Ok(point)
}

/// Jets of the normalized image lift `Γ̃_ε` at `x` in standard coordinates,
/// together with the x-jets of `u_{i,ε}`.
pub fn chi_map_point<T: Real>(
    spec: &CurveSpec,
    chi: &ChiConfig,
    x: T,
    eps: T,
    order: usize,
) -> Result<(FrameJet<T>, Vec<Jet<T>>)> {
    let mapper = ChiMapper::new(spec, chi, x, eps.to_f64().abs(), 0.0, order)?;
    let out = mapper.map(eps, T::zero())?;
    let frame = frame_at(spec, x)?;
    let local = out.gamma_local_jets();
    let ord = local.iter().map(Jet::order).min().unwrap_or(0);
    let comps = (0..=spec.d)
        .map(|c| local.iter().enumerate().fold(Jet::zero(ord), |acc, (m, l)| acc + l.scale(frame[m][c])))
        .collect();
    Ok((FrameJet { comps }, out.u_eps_jets()))
}

/// Spans of the raw points `Γ(x + p_{i,j}ε)` as x-jets of order `order`, in
/// standard coordinates. These become nearly parallel as ε → 0; the mapper
/// works in the scaled Newton basis instead.
pub fn build_spans<T: Real>(
    spec: &CurveSpec,
    chi: &ChiConfig,
    x: T,
    eps: T,
    order: usize,
) -> Result<Vec<SubspaceSpan<T>>> {
    if !(eps > T::zero()) {
        return Err(Error::InvalidConfig("ε must be positive".into()));
    }
    let reach = chi.max_abs_node() * eps.to_f64();
    let series = LocalSeries::for_radius(spec, x, reach, order)?;
    let frame = frame_at(spec, x)?;
    let to_standard = |local: Vec<Jet<T>>| -> Vec<Jet<T>> {
        (0..=spec.d)
            .map(|c| local.iter().enumerate().fold(Jet::zero(order), |acc, (m, l)| acc + l.scale(frame[m][c])))
            .collect()
    };
    Ok(chi
        .groups
        .iter()
        .map(|g| SubspaceSpan {
            vectors: g.iter().map(|&p| to_standard(series.point_jet(T::from_f64(p) * eps, order))).collect(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chi_config::short_diagonal_chi;

    #[test]
    fn shared_basis_vector_is_the_intersection() {
        let e = |i: usize| (0..3).map(|j| if i == j { 1.0 } else { 0.0 }).collect::<Vec<f64>>();
        let s1 = SubspaceSpan::from_constant(&[e(0), e(1)]);
        let s2 = SubspaceSpan::from_constant(&[e(1), e(2)]);
        let p = intersect_spans(&[s1, s2]).unwrap();
        assert_eq!(p.iter().map(Jet::value).collect::<Vec<_>>(), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn flat_curve_maps_to_flat_curve() {
        let spec = CurveSpec::flat(2);
        let chi = short_diagonal_chi(2).unwrap();
        let m = ChiMapper::<f64>::new(&spec, &chi, 0.3, 0.1, 0.0, 8).unwrap();
        let out = m.map(0.1, 0.0).unwrap();
        for u in out.u_eps() {
            assert!(u.abs() < 1e-8);
        }
        assert!(m.wedge_residual(&out) < 1e-12);
    }

    #[test]
    fn raw_spans_have_expected_shape() {
        let spec = CurveSpec::random(2, 3);
        let chi = short_diagonal_chi(2).unwrap();
        let spans = build_spans(&spec, &chi, 0.4, 0.1, 4).unwrap();
        assert_eq!(spans.len(), 2);
        assert!(spans.iter().all(|s| s.dim() == 2 && s.vectors[0].len() == 3));
    }

    fn sin_angle(a: &[f64], b: &[f64]) -> f64 {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let (na, nb) = (linalg::norm(a), linalg::norm(b));
        (1.0 - (dot / (na * nb)).powi(2)).max(0.0).sqrt()
    }

    #[test]
    fn raw_spans_collapse_onto_the_base_point_linearly() {
        let spec = CurveSpec::random(3, 5);
        let chi = short_diagonal_chi(3).unwrap();
        let base: Vec<f64> = frame_at(&spec, 0.7).unwrap()[0].clone();
        let worst = |eps: f64| {
            build_spans(&spec, &chi, 0.7, eps, 1)
                .unwrap()
                .iter()
                .flat_map(|s| s.vectors.iter().map(|v| v.iter().map(Jet::value).collect::<Vec<_>>()))
                .map(|v| sin_angle(&v, &base))
                .fold(0.0, f64::max)
        };
        let (a, b) = (worst(1e-3), worst(5e-4));
        assert!(a > 0.0 && (a / b - 2.0).abs() < 0.01, "ratio {}", a / b);
    }
}

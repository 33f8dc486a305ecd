//! Configurations whose continuous limit is the (3,4)-KdV flow: the σ test,
//! a numerical check of `G_3 ∝ (L^{3/4})_+`, example families, the
//! restriction count and a heuristic search.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chi_config::{elementary_symmetric, ChiConfig};
use crate::curve::CurveSpec;
use crate::error::{Error, Result};
use crate::expansion::{extract_alphas, max_kmax};
use crate::fit::EpsLadder;
use crate::kdv::{q_m, PseudoDiffOp};
use crate::real::Precision;

/// Lower bound on the number of restrictions on χ for an (m, m+1) limit.
pub fn dof_lower_bound(m: u64) -> u64 {
    // m³ − 6m² + 17m − 12 is divisible by 6 and positive for m ≥ 1.
    (m * m * m + 17 * m - 6 * m * m - 12) / 6
}

/// `χ = {{−c,a,b},{c,−a,b},{c,−1,ab}}` and the residual of
/// `c − 1 + a(b−1) + 5(b−c)/4 = 0`. Groups are kept as written and may repeat
/// nodes for special parameters; [`check_34`] validates.
pub fn mari_beffa_family(a: f64, b: f64, c: f64) -> (ChiConfig, f64) {
    let chi = ChiConfig { d: 3, groups: vec![vec![-c, a, b], vec![c, -a, b], vec![c, -1.0, a * b]] };
    (chi, (c - 1.0 + a * (b - 1.0) + 1.25 * (b - c)).abs())
}

/// `2480x⁴ + 33006x³ + 72121x² − 198036x + 89280`, lowest degree first.
pub const R_POLY: [f64; 5] = [89280.0, -198036.0, 72121.0, 33006.0, 2480.0];

fn horner(p: &[f64], x: f64) -> (f64, f64) {
    let (mut v, mut dv) = (0.0, 0.0);
    for &c in p.iter().rev() {
        dv = dv * x + v;
        v = v * x + c;
    }
    (v, dv)
}

/// Real roots of `p` in `[-bound, bound]`, sorted, by sign-change bracketing,
/// bisection and a Newton polish. Roots of even multiplicity are missed.
pub fn real_roots(p: &[f64], bound: f64, grid: usize) -> Vec<f64> {
    let f = |x: f64| horner(p, x).0;
    let mut roots = Vec::new();
    let h = 2.0 * bound / grid as f64;
    for k in 0..grid {
        let (mut lo, mut hi) = (-bound + k as f64 * h, -bound + (k + 1) as f64 * h);
        let (mut flo, fhi) = (f(lo), f(hi));
        if flo == 0.0 {
            roots.push(lo);
            continue;
        }
        if flo.signum() == fhi.signum() {
            continue;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let fm = f(mid);
            if fm.signum() == flo.signum() {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
            if hi - lo <= 4.0 * f64::EPSILON * mid.abs().max(1.0) {
                break;
            }
        }
        let mut x = 0.5 * (lo + hi);
        for _ in 0..3 {
            let (v, dv) = horner(p, x);
            if dv == 0.0 {
                break;
            }
            x -= v / dv;
        }
        roots.push(x);
    }
    roots.sort_by(|a, b| a.total_cmp(b));
    roots
}

/// The four real roots of [`R_POLY`].
pub fn r_poly_roots() -> Vec<f64> {
    // Cauchy bound: 1 + max|a_i/a_4| < 81.
    real_roots(&R_POLY, 81.0, 16_200)
}

pub fn r_poly_eval(x: f64) -> f64 {
    horner(&R_POLY, x).0
}

/// `{{−1, 3/2, 4}, {6/5, 10, −1/2}, {1, −r, 6/r}}`, all group products −6.
pub fn r_root_config(r: f64) -> Result<ChiConfig> {
    ChiConfig::new(3, vec![vec![-1.0, 1.5, 4.0], vec![1.2, 10.0, -0.5], vec![1.0, -r, 6.0 / r]])
}

/// Per-probe expansion data at the probe's `x`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProbeResult {
    pub seed_or_index: usize,
    pub alpha: Vec<Vec<f64>>,
    /// `∂^j` coefficients of `(L^{3/4})_+` at x, `j = 0..3`.
    pub q3: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Realization34Report {
    pub chi: ChiConfig,
    pub sigma_top: Vec<f64>,
    pub sigma_equal: bool,
    /// `max |α̂_{1,j}|` over probes.
    pub g1_norm: f64,
    /// `max |α̂_{2,j}|` over probes.
    pub g2_norm: f64,
    /// `max |α̂_{3,j} − c·q_j|` over probes and `j`.
    pub g3_match: f64,
    pub c_fit: f64,
    pub probes: Vec<ProbeResult>,
    /// Probes dropped on a degenerate intersection.
    pub skipped: Vec<usize>,
}

impl Realization34Report {
    pub fn passes(&self, g_tol: f64, g3_tol: f64) -> bool {
        self.sigma_equal && !self.probes.is_empty() && self.g1_norm <= g_tol && self.g2_norm <= g_tol && self.g3_match <= g3_tol
    }

    pub fn objective(&self) -> f64 {
        self.g1_norm.powi(2) + self.g2_norm.powi(2) + self.g3_match.powi(2)
    }
}

fn sigma_top(chi: &ChiConfig) -> Vec<f64> {
    chi.groups.iter().map(|g| elementary_symmetric(g)[g.len()]).collect()
}

fn sigmas_equal(s: &[f64]) -> bool {
    let scale = s.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    scale > 0.0 && s.iter().all(|v| (v - s[0]).abs() <= 1e-9 * scale)
}

fn probe(spec: &CurveSpec, chi: &ChiConfig, x: f64, index: usize) -> Result<ProbeResult> {
    let ladder = EpsLadder::accurate(chi.max_abs_node());
    let rep = extract_alphas(spec, chi, x, &ladder, max_kmax(Precision::Extended, &ladder), Precision::Extended)?;
    let l = PseudoDiffOp::<f64>::from_curve(spec, x, 24)?;
    let q = q_m(&l, 3)?;
    Ok(ProbeResult {
        seed_or_index: index,
        alpha: rep.alpha[..=3].to_vec(),
        q3: (0..=3).map(|j| q.coeff_value(j)).collect(),
    })
}

/// Checks the (3,4) conditions on `χ` over `probes`, each evaluated at `x`.
pub fn check_34(chi: &ChiConfig, probes: &[CurveSpec], x: f64) -> Result<Realization34Report> {
    let chi = &ChiConfig::new(chi.d, chi.groups.clone())?;
    if chi.d != 3 || chi.groups.len() != 3 || chi.groups.iter().any(|g| g.len() != 3) {
        return Err(Error::InvalidConfig("the (3,4) check needs three 3-node groups in d = 3".into()));
    }
    if probes.len() < 3 || probes.iter().any(|p| p.d != 3) {
        return Err(Error::InvalidConfig("the (3,4) check needs at least 3 probe curves with d = 3".into()));
    }
    let results: Vec<Result<ProbeResult>> = probes.par_iter().enumerate().map(|(i, p)| probe(p, chi, x, i)).collect();
    let mut ok = Vec::new();
    let mut skipped = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(p) => ok.push(p),
            Err(Error::DegenerateIntersection(_)) => skipped.push(i),
            Err(e) => return Err(e),
        }
    }
    let max_row = |k: usize| ok.iter().flat_map(|p| p.alpha[k].iter()).fold(0.0f64, |m, v| m.max(v.abs()));
    let (num, den) = ok.iter().flat_map(|p| p.alpha[3].iter().zip(&p.q3)).fold((0.0, 0.0), |(n, d), (a, q)| (n + a * q, d + q * q));
    let c_fit = if den > 0.0 { num / den } else { 0.0 };
    let g3_match = ok
        .iter()
        .flat_map(|p| p.alpha[3].iter().zip(&p.q3))
        .map(|(a, q)| (a - c_fit * q).abs())
        .fold(if ok.is_empty() { f64::INFINITY } else { 0.0 }, f64::max);
    let st = sigma_top(chi);
    Ok(Realization34Report {
        chi: chi.clone(),
        sigma_equal: sigmas_equal(&st),
        sigma_top: st,
        g1_norm: max_row(1),
        g2_norm: max_row(2),
        g3_match,
        c_fit,
        probes: ok,
        skipped,
    })
}

/// Search state, also the checkpoint format.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SearchState {
    /// `(p_{i,0}, p_{i,1})` for each group, then the common product `σ*`.
    pub params: Vec<f64>,
    pub step: f64,
    pub iteration: usize,
    pub objective: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub report: Realization34Report,
    pub iterations: usize,
    pub evaluations: usize,
    /// Set when the search made no improvement over the seed.
    pub no_improvement: bool,
    /// Set when the final objective exceeds the tolerance; the search is a
    /// local heuristic and such results are reported as found.
    pub converged: bool,
}

fn chi_from_params(p: &[f64]) -> Result<ChiConfig> {
    let groups = (0..3)
        .map(|i| {
            let (a, b) = (p[2 * i], p[2 * i + 1]);
            if (a * b).abs() < 1e-9 {
                return Err(Error::InvalidConfig("zero node product".into()));
            }
            Ok(vec![a, b, p[6] / (a * b)])
        })
        .collect::<Result<Vec<_>>>()?;
    ChiConfig::new(3, groups)
}

/// Projects `χ` onto the σ-equal set by resetting each third node to
/// `σ*/(p_{i,0} p_{i,1})`, with `σ*` the mean of the group products.
fn params_from_chi(chi: &ChiConfig) -> Vec<f64> {
    let s = sigma_top(chi);
    let mut p: Vec<f64> = chi.groups.iter().flat_map(|g| [g[0], g[1]]).collect();
    p.push(s.iter().sum::<f64>() / 3.0);
    p
}

pub const SEARCH_TOLERANCE: f64 = 1e-8;

/// Compass search on the σ-projected node parameters. Groups are sorted by
/// [`ChiConfig`], so the seed's node order may differ from the parameters'.
pub fn search_34(
    seed: &ChiConfig,
    probes: &[CurveSpec],
    x: f64,
    max_iters: usize,
    checkpoint: Option<&Path>,
) -> Result<SearchOutcome> {
    let eval = |p: &[f64]| -> f64 {
        chi_from_params(p).and_then(|c| check_34(&c, probes, x)).map(|r| r.objective()).unwrap_or(f64::INFINITY)
    };
    let mut state = match checkpoint.filter(|p| p.exists()) {
        Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
        None => {
            let params = params_from_chi(seed);
            let objective = eval(&params);
            SearchState { params, step: 0.05, iteration: 0, objective }
        }
    };
    let seed_objective = state.objective;
    let mut evaluations = 1;
    while state.iteration < max_iters && state.objective > SEARCH_TOLERANCE && state.step > 1e-7 {
        let mut improved = false;
        for k in 0..state.params.len() {
            for dir in [1.0, -1.0] {
                let mut trial = state.params.clone();
                trial[k] += dir * state.step * trial[k].abs().max(1.0);
                let v = eval(&trial);
                evaluations += 1;
                if v < state.objective {
                    state.params = trial;
                    state.objective = v;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            state.step *= 0.5;
        }
        state.iteration += 1;
        if let Some(path) = checkpoint {
            std::fs::write(path, serde_json::to_string_pretty(&state)?)?;
        }
    }
    let no_improvement = state.objective >= seed_objective;
    let chi = if no_improvement { seed.clone() } else { chi_from_params(&state.params)? };
    let report = check_34(&chi, probes, x)?;
    Ok(SearchOutcome {
        converged: report.objective() <= SEARCH_TOLERANCE,
        report,
        iterations: state.iteration,
        evaluations,
        no_improvement,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dof_small_values() {
        assert_eq!((dof_lower_bound(2), dof_lower_bound(3), dof_lower_bound(4)), (1, 2, 4));
    }

    #[test]
    fn family_residuals() {
        let (chi, r) = mari_beffa_family(-2.0, 3.0, -5.0);
        assert_eq!(r, 0.0);
        assert_eq!(sigma_top(&chi), vec![-30.0; 3]);
        assert_eq!(mari_beffa_family(0.0, 1.0, 1.0).1, 0.0);
        assert_eq!(mari_beffa_family(0.0, 1.0, 2.0).1, 0.25);
    }

    #[test]
    fn quartic_has_four_real_roots() {
        let r = r_poly_roots();
        assert_eq!(r.len(), 4);
        for x in &r {
            assert!(r_poly_eval(*x).abs() <= 1e-8, "R({x}) = {}", r_poly_eval(*x));
        }
        assert!(r.windows(2).all(|w| w[1] - w[0] > 1e-6));
    }
}

//! Parameter sets χ = {{p_{i,j}}}, the named families, and closed-form
//! centralization tests built on elementary symmetric polynomials.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};

/// `r` groups of offsets; group `i` spans a `q_i`-dimensional projective
/// subspace and contributes `d − q_i` constraints, `Σ (d − q_i) = d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiConfig {
    pub d: usize,
    pub groups: Vec<Vec<f64>>,
}

impl ChiConfig {
    /// Sorts nodes within groups and groups lexicographically, then checks
    /// the group-shape constraints.
    pub fn new(d: usize, mut groups: Vec<Vec<f64>>) -> Result<Self> {
        if d < 1 {
            return Err(Error::InvalidConfig("d must be positive".into()));
        }
        for g in groups.iter_mut() {
            if g.iter().any(|p| !p.is_finite()) {
                return Err(Error::InvalidConfig("non-finite node".into()));
            }
            g.sort_by(|a, b| a.partial_cmp(b).unwrap());
            if g.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidConfig(format!("repeated node in group {g:?}")));
            }
            let q = g.len().saturating_sub(1);
            if q < 1 || q >= d {
                return Err(Error::InvalidConfig(format!("group {g:?} has q = {q}, need 1 ≤ q ≤ d−1")));
            }
        }
        groups.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let total: usize = groups.iter().map(|g| d + 1 - g.len()).sum();
        if total != d {
            return Err(Error::InvalidConfig(format!("Σ(d − q_i) = {total}, need {d}")));
        }
        Ok(ChiConfig { d, groups })
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: ChiConfig = serde_json::from_str(s)?;
        Self::new(raw.d, raw.groups)
    }

    pub fn q(&self, i: usize) -> usize {
        self.groups[i].len() - 1
    }

    /// Every group spans a hyperplane (`q_i = d − 1`, hence `r = d`).
    pub fn is_hyperplane(&self) -> bool {
        self.groups.iter().all(|g| g.len() == self.d)
    }

    pub fn max_abs_node(&self) -> f64 {
        self.groups.iter().flatten().fold(0.0, |m: f64, p| m.max(p.abs()))
    }

    /// The configuration seen at −ε.
    pub fn negated(&self) -> Self {
        let groups = self.groups.iter().map(|g| g.iter().map(|p| -p).collect()).collect();
        Self::new(self.d, groups).expect("negation preserves validity")
    }
}

/// Short-diagonal map: `d` hyperplanes through every other vertex, centred
/// (for even `d` the image point is re-centred by −ε/2).
pub fn short_diagonal_chi(d: usize) -> Result<ChiConfig> {
    if d < 2 {
        return Err(Error::InvalidConfig("short-diagonal map needs d ≥ 2".into()));
    }
    let p0 = -1.5 * (d as f64 - 1.0);
    let p: Vec<f64> = (0..d).map(|j| p0 + 2.0 * j as f64).collect();
    evenly_spaced_chi(&p, 1.0, d)
}

/// `d` hyperplanes `{p_0 + i r, …, p_{d−1} + i r}`, `i = 0..d−1`.
pub fn evenly_spaced_chi(p: &[f64], r_step: f64, d: usize) -> Result<ChiConfig> {
    if p.len() != d {
        return Err(Error::InvalidConfig(format!("need {d} base nodes, got {}", p.len())));
    }
    if r_step == 0.0 {
        return Err(Error::InvalidConfig("zero spacing makes all hyperplanes coincide".into()));
    }
    let groups = (0..d).map(|i| p.iter().map(|&v| v + i as f64 * r_step).collect()).collect();
    ChiConfig::new(d, groups)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DentedVariant {
    /// `d` hyperplanes `{i, …, i+d−1}`, `0 ≤ i ≤ d`, skipping `i = d − s`.
    Full,
    /// The equivalent pair `{d−s−1, …, d−1}`, `{d, …, 2d−s}`.
    Reduced,
}

pub fn dual_dented_chi(d: usize, s: usize, variant: DentedVariant) -> Result<ChiConfig> {
    if s < 1 || s + 1 > d {
        return Err(Error::InvalidConfig(format!("need 1 ≤ s ≤ d−1, got s = {s}")));
    }
    let groups = match variant {
        DentedVariant::Full => {
            (0..=d).filter(|&i| i != d - s).map(|i| (i..i + d).map(|v| v as f64).collect()).collect()
        }
        DentedVariant::Reduced => vec![
            (d - s - 1..d).map(|v| v as f64).collect(),
            (d..=2 * d - s).map(|v| v as f64).collect(),
        ],
    };
    ChiConfig::new(d, groups)
}

pub fn shift_chi(chi: &ChiConfig, delta: f64) -> ChiConfig {
    let groups = chi.groups.iter().map(|g| g.iter().map(|p| p + delta).collect()).collect();
    ChiConfig::new(chi.d, groups).expect("translation preserves validity")
}

/// Shift `1 − d − s/d` centralizing the dual dented map.
pub fn dual_dented_shift(d: usize, s: usize) -> f64 {
    1.0 - d as f64 - s as f64 / d as f64
}

/// `e_0..e_n` of the given values.
pub fn elementary_symmetric(vals: &[f64]) -> Vec<f64> {
    let mut e = vec![1.0];
    for &v in vals {
        e.push(0.0);
        for j in (1..e.len()).rev() {
            e[j] += v * e[j - 1];
        }
    }
    e
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SymTable {
    /// `sigma[i][j]`: j-th elementary symmetric polynomial of group `i`.
    pub sigma: Vec<Vec<f64>>,
}

impl SymTable {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.sigma[i].get(j).copied().unwrap_or(0.0)
    }
}

pub fn sym_table(chi: &ChiConfig) -> SymTable {
    SymTable { sigma: chi.groups.iter().map(|g| elementary_symmetric(g)).collect() }
}

fn factorial(n: usize) -> f64 {
    (2..=n).map(|k| k as f64).product()
}

/// `(M0)_{i,j} = (−1)^{j+1} j! σ_{i,d−j}` and `(c0)_i = σ_{i,d}`, `j = 1..d`.
pub fn assemble_m0_c0(chi: &ChiConfig) -> Result<(Mat<f64>, Vec<f64>)> {
    if !chi.is_hyperplane() {
        return Err(Error::InvalidConfig("M0 system needs a hyperplane configuration".into()));
    }
    let d = chi.d;
    let t = sym_table(chi);
    let m0 = (0..d)
        .map(|i| {
            (1..=d).map(|j| if (j + 1) % 2 == 0 { 1.0 } else { -1.0 } * factorial(j) * t.get(i, d - j)).collect()
        })
        .collect();
    let c0 = (0..d).map(|i| t.get(i, d)).collect();
    Ok((m0, c0))
}

/// Predicted `(α_{1,1}, …, α_{d,d})` for a hyperplane configuration.
pub fn predicted_alpha_diagonal(chi: &ChiConfig) -> Result<Vec<f64>> {
    let (m0, c0) = assemble_m0_c0(chi)?;
    linalg::solve(&m0, &c0).map_err(|_| Error::InvalidConfig("M0 is singular".into()))
}

/// `α_{1,1} = (σ_1 + C(d,2) r)/d` for evenly spaced hyperplanes.
pub fn alpha11_evenly_spaced(p: &[f64], r_step: f64, d: usize) -> f64 {
    let s1: f64 = p.iter().sum();
    (s1 + (d * (d - 1)) as f64 / 2.0 * r_step) / d as f64
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CentralizationVerdict {
    /// All `σ_{i,d}` coincide, equivalently `α_{j,j} = 0` for `j < d`.
    pub centralized_through_order: bool,
    pub sigma_top: Vec<f64>,
    /// `(−1)^{d+1} σ_d / d!` when the flag holds, else from the M0 solve.
    pub alpha_dd: f64,
}

pub fn hyperplane_centralization_test(chi: &ChiConfig, rel_tol: f64) -> Result<CentralizationVerdict> {
    let (_, c0) = assemble_m0_c0(chi)?;
    let scale = c0.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let equal = c0.iter().all(|v| (v - c0[0]).abs() <= rel_tol * scale);
    let d = chi.d;
    let alpha_dd = if equal {
        let sign = if (d + 1) % 2 == 0 { 1.0 } else { -1.0 };
        sign * c0[0] / factorial(d)
    } else {
        predicted_alpha_diagonal(chi)?[d - 1]
    };
    Ok(CentralizationVerdict { centralized_through_order: equal, sigma_top: c0, alpha_dd })
}

/// Closed-form `α_{1,1}` when one is available (hyperplane configurations).
pub fn predicted_alpha11(chi: &ChiConfig) -> Option<f64> {
    predicted_alpha_diagonal(chi).ok().map(|a| a[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_families() {
        let sd2 = short_diagonal_chi(2).unwrap();
        assert_eq!(sd2.groups, vec![vec![-1.5, 0.5], vec![-0.5, 1.5]]);
        let sd3 = short_diagonal_chi(3).unwrap();
        assert_eq!(sd3.groups, vec![vec![-3.0, -1.0, 1.0], vec![-2.0, 0.0, 2.0], vec![-1.0, 1.0, 3.0]]);
        let dd = dual_dented_chi(3, 1, DentedVariant::Full).unwrap();
        assert_eq!(dd.groups, vec![vec![0.0, 1.0, 2.0], vec![1.0, 2.0, 3.0], vec![3.0, 4.0, 5.0]]);
        let red = dual_dented_chi(3, 1, DentedVariant::Reduced).unwrap();
        assert_eq!(red.groups, vec![vec![1.0, 2.0], vec![3.0, 4.0, 5.0]]);
    }

    #[test]
    fn invalid_shapes_rejected() {
        assert!(ChiConfig::new(2, vec![vec![0.0], vec![1.0, 2.0]]).is_err());
        assert!(ChiConfig::new(2, vec![vec![0.0, 0.0], vec![1.0, 2.0]]).is_err());
        assert!(ChiConfig::new(3, vec![vec![0.0, 1.0, 2.0]]).is_err());
        assert!(evenly_spaced_chi(&[0.0, 1.0, 2.0], 0.0, 3).is_err());
    }

    #[test]
    fn m0_system_for_short_diagonal() {
        let (m0, c0) = assemble_m0_c0(&short_diagonal_chi(2).unwrap()).unwrap();
        assert_eq!(m0, vec![vec![-1.0, -2.0], vec![1.0, -2.0]]);
        assert_eq!(c0, vec![-0.75, -0.75]);
        let a = predicted_alpha_diagonal(&short_diagonal_chi(2).unwrap()).unwrap();
        assert!(a[0].abs() < 1e-15 && (a[1] - 0.375).abs() < 1e-15);
        // d = 3: σ_{i,3} = (3, 0, −3) are unequal, yet α_{1,1} = 0 by symmetry
        let a = predicted_alpha_diagonal(&short_diagonal_chi(3).unwrap()).unwrap();
        assert!(a[0].abs() < 1e-15 && (a[1] - 0.5).abs() < 1e-15 && a[2].abs() < 1e-15);
    }

    #[test]
    fn dual_dented_shift_centralizes() {
        for s in 1..3 {
            let chi = dual_dented_chi(3, s, DentedVariant::Full).unwrap();
            let shifted = shift_chi(&chi, dual_dented_shift(3, s));
            assert!(predicted_alpha11(&shifted).unwrap().abs() < 1e-12);
            assert!(predicted_alpha11(&chi).unwrap().abs() > 1.0);
        }
    }
}

//! Fixtures shared by the benchmarks.

use pentalab::chi_config::{short_diagonal_chi, ChiConfig};
use pentalab::curve::CurveSpec;

/// A random curve and the short-diagonal configuration in dimension `d`.
pub fn short_diagonal_fixture(d: usize) -> (CurveSpec, ChiConfig) {
    (CurveSpec::random(d, 7), short_diagonal_chi(d).expect("d ≥ 2"))
}

/// Three probe curves for the (3,4) check.
pub fn probes() -> Vec<CurveSpec> {
    (1..=3).map(|s| CurveSpec::random(3, s)).collect()
}

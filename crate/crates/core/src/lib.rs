//! Numerical laboratory for continuous limits of χ-pentagram maps.
//!
//! Curves in ℝP^d are given by the coefficients `u_0..u_{d-1}` of their
//! normalized linear ODE; every quantity is computed from local Taylor jets.

pub mod error;
pub mod jet;
pub mod linalg;
pub mod real;
pub mod curve;
pub mod chi_config;
pub mod chi_map;
pub mod discretization;
pub mod expansion;
pub mod fit;
pub mod kdv;
pub mod lax;
pub mod realization;

pub use error::{Error, Result};
pub use jet::{det_jet, eval_jet, solve_linear_jets, AnalyticFn, Expr, Jet};
pub use real::{Dd, Precision, Real};

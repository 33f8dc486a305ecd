//! Resolution of `--chi` and `--curve` arguments, and structured failures.

use std::fmt;
use std::path::Path;

use serde_json::{json, Value};

use pentalab::chi_config::{
    dual_dented_chi, dual_dented_shift, evenly_spaced_chi, predicted_alpha11, shift_chi, short_diagonal_chi, ChiConfig,
    DentedVariant,
};
use pentalab::curve::CurveSpec;
use pentalab::Error;

use crate::ChiArgs;

/// An error tagged with the `module::operation` that raised it.
pub struct Failure {
    context: &'static str,
    kind: Kind,
}

enum Kind {
    Usage(String),
    Module(Error),
}

impl Failure {
    pub fn new(context: &'static str, e: Error) -> Self {
        Failure { context, kind: Kind::Module(e) }
    }

    pub fn usage(context: &'static str, msg: impl Into<String>) -> Self {
        Failure { context, kind: Kind::Usage(msg.into()) }
    }

    /// 2 for bad input, 1 for numerical failures.
    pub fn exit_code(&self) -> u8 {
        match &self.kind {
            Kind::Usage(_) => 2,
            Kind::Module(Error::InvalidConfig(_) | Error::InvalidSpec(_) | Error::Json(_) | Error::Io(_)) => 2,
            Kind::Module(_) => 1,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::new("cli::config", e)
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            Kind::Usage(m) => write!(f, "error [{}]: {m}", self.context),
            Kind::Module(e) => write!(f, "error [{}]: {e}", self.context),
        }
    }
}

pub fn read_chi_file(path: &str) -> Result<ChiConfig, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::new("chi_config::from_json", e.into()))?;
    ChiConfig::from_json(&text).map_err(|e| Failure::new("chi_config::from_json", e))
}

enum Family {
    ShortDiagonal,
    EvenlySpaced { p: Vec<f64>, r: f64 },
    DualDented { s: usize, variant: DentedVariant },
    File(String),
}

pub struct ChiSource {
    pub chi: ChiConfig,
    family: Family,
    shift: f64,
}

impl ChiSource {
    pub fn resolve(name: &str, args: &ChiArgs) -> Result<Self, Failure> {
        let (chi, family) = match name {
            "short-diagonal" => {
                let chi = short_diagonal_chi(args.d.unwrap_or(2)).map_err(|e| Failure::new("chi_config::short_diagonal_chi", e))?;
                (chi, Family::ShortDiagonal)
            }
            "evenly-spaced" => {
                let (Some(p), Some(r)) = (args.p.clone(), args.r) else {
                    return Err(Failure::usage("chi_config::evenly_spaced_chi", "evenly-spaced needs --p and --r"));
                };
                if args.d.is_some_and(|d| d != p.len()) {
                    return Err(Failure::usage("chi_config::evenly_spaced_chi", "--d must equal the number of --p values"));
                }
                let chi = evenly_spaced_chi(&p, r, p.len()).map_err(|e| Failure::new("chi_config::evenly_spaced_chi", e))?;
                (chi, Family::EvenlySpaced { p, r })
            }
            "dual-dented" => {
                let (d, s) = (args.d.unwrap_or(3), args.s.unwrap_or(1));
                let variant = if args.reduced { DentedVariant::Reduced } else { DentedVariant::Full };
                let chi = dual_dented_chi(d, s, variant).map_err(|e| Failure::new("chi_config::dual_dented_chi", e))?;
                (chi, Family::DualDented { s, variant })
            }
            path if Path::new(path).is_file() => (read_chi_file(path)?, Family::File(path.to_string())),
            other => return Err(Failure::usage("cli::families", format!("unknown family or missing file `{other}`"))),
        };
        let shift = match args.shift.as_deref() {
            None => 0.0,
            Some("auto") => match family {
                Family::DualDented { s, .. } => dual_dented_shift(chi.d, s),
                _ => return Err(Failure::usage("chi_config::shift_chi", "`--shift auto` applies to dual-dented only")),
            },
            Some(v) => v.parse().map_err(|_| Failure::usage("chi_config::shift_chi", format!("bad shift `{v}`")))?,
        };
        let chi = if shift != 0.0 { shift_chi(&chi, shift) } else { chi };
        Ok(ChiSource { chi, family, shift })
    }

    pub fn describe(&self) -> Value {
        match &self.family {
            Family::ShortDiagonal => json!({ "name": "short-diagonal", "shift": self.shift }),
            Family::EvenlySpaced { p, r } => json!({ "name": "evenly-spaced", "p": p, "r": r, "shift": self.shift }),
            Family::DualDented { s, variant } => json!({ "name": "dual-dented", "s": s, "variant": variant, "shift": self.shift }),
            Family::File(path) => json!({ "name": "file", "path": path, "shift": self.shift }),
        }
    }

    /// Closed-form `α_{1,1} = 0` verdict, when one is available.
    pub fn centralized(&self) -> Option<bool> {
        if let Family::DualDented { s, .. } = self.family {
            return Some((self.shift - dual_dented_shift(self.chi.d, s)).abs() <= 1e-12);
        }
        let scale = self.chi.max_abs_node().max(1.0);
        predicted_alpha11(&self.chi).map(|a| a.abs() <= 1e-12 * scale)
    }
}

pub struct CurveSource {
    pub spec: CurveSpec,
    kind: String,
    seed: Option<u64>,
}

impl CurveSource {
    pub fn resolve(arg: &str, d: usize, seed: u64) -> Result<Self, Failure> {
        let (spec, seed) = match arg {
            "random" => (CurveSpec::random(d, seed), Some(seed)),
            "flat" => (CurveSpec::flat(d), None),
            path => {
                let text = std::fs::read_to_string(path).map_err(|e| Failure::new("curve::from_json", e.into()))?;
                (CurveSpec::from_json(&text).map_err(|e| Failure::new("curve::from_json", e))?, None)
            }
        };
        if spec.d != d {
            return Err(Failure::usage("curve::from_json", format!("curve has d = {}, χ needs d = {d}", spec.d)));
        }
        Ok(CurveSource { spec, kind: arg.to_string(), seed })
    }

    pub fn describe(&self) -> Value {
        json!({ "source": self.kind, "seed": self.seed, "spec": self.spec })
    }
}

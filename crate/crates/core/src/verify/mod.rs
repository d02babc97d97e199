//! Invariant suites run by `seqgauss verify`.
//!
//! Each suite draws seeded random instances, checks the identities its module
//! must satisfy, and reports one [`CheckOutcome`] per invariant. Tolerances
//! default to the per-invariant values listed in [`Tolerances`] and can be
//! overridden by name.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub mod chaos;
pub mod closure;
pub mod gen;
pub mod hermite;
pub mod measure;
pub mod seqspace;
pub mod wick;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }

    /// Passes when `err <= tol`.
    pub fn bound(name: impl Into<String>, err: f64, tol: f64) -> Self {
        Self::new(name, err <= tol, format!("max error {err:.3e} (tol {tol:.1e})"))
    }

    pub(crate) fn from_result(name: &str, r: Result<CheckOutcome>) -> Self {
        r.unwrap_or_else(|e| Self::new(name, false, format!("error: {e}")))
    }
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {}: {}", self.name, self.detail)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Core,
    Hermite,
    Wick,
    Measure,
    Chaos,
    Closure,
    All,
}

impl Suite {
    pub const MODULES: [Suite; 6] = [
        Suite::Core,
        Suite::Hermite,
        Suite::Wick,
        Suite::Measure,
        Suite::Chaos,
        Suite::Closure,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Core => "core",
            Suite::Hermite => "hermite",
            Suite::Wick => "wick",
            Suite::Measure => "measure",
            Suite::Chaos => "chaos",
            Suite::Closure => "closure",
            Suite::All => "all",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "core" => Suite::Core,
            "hermite" => Suite::Hermite,
            "wick" => Suite::Wick,
            "measure" => Suite::Measure,
            "chaos" => Suite::Chaos,
            "closure" => Suite::Closure,
            "all" => Suite::All,
            other => return Err(Error::InvalidArgument(format!("unknown suite `{other}`"))),
        })
    }
}

/// Per-invariant tolerances.
#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances {
    /// Exact algebraic identities of the sequence-space maps (relative).
    pub identity: f64,
    /// Parseval identity and basis independence.
    pub parseval: f64,
    /// Operator-norm transfer (power iteration on both sides).
    pub operator_norm: f64,
    /// Divergence diagnostic sums.
    pub divergence: f64,
    /// Block-projection identities.
    pub projection: f64,
    /// PSD check, relative to the spectral norm.
    pub psd: f64,
    /// Hermite relations (relative).
    pub hermite: f64,
    /// Hermite orthogonality matrix (absolute per entry).
    pub hermite_orthogonality: f64,
    /// Wick recursion vs closed form (relative).
    pub wick: f64,
    /// Re-polarization invariance.
    pub repolarization: f64,
    /// Exact Wick orthogonality through the pair-partition oracle.
    pub wick_orthogonality: f64,
    /// Monte Carlo acceptance band in standard errors.
    pub mc_sigmas: f64,
    /// Conditional-expectation identities.
    pub chaos: f64,
    /// Closure solver identities.
    pub closure: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            identity: 1e-12,
            parseval: 1e-10,
            operator_norm: 1e-8,
            divergence: 1e-10,
            projection: 1e-10,
            psd: 1e-9,
            hermite: 1e-9,
            hermite_orthogonality: 1e-8,
            wick: 1e-10,
            repolarization: 1e-9,
            wick_orthogonality: 1e-9,
            mc_sigmas: crate::measure::MC_SIGMAS,
            chaos: 1e-10,
            closure: 1e-12,
        }
    }
}

impl Tolerances {
    pub const NAMES: [&'static str; 14] = [
        "identity",
        "parseval",
        "operator_norm",
        "divergence",
        "projection",
        "psd",
        "hermite",
        "hermite_orthogonality",
        "wick",
        "repolarization",
        "wick_orthogonality",
        "mc_sigmas",
        "chaos",
        "closure",
    ];

    /// Overrides one tolerance by name; values must be positive.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "tolerance `{name}` must be positive, got {value}"
            )));
        }
        let slot = match name {
            "identity" => &mut self.identity,
            "parseval" => &mut self.parseval,
            "operator_norm" => &mut self.operator_norm,
            "divergence" => &mut self.divergence,
            "projection" => &mut self.projection,
            "psd" => &mut self.psd,
            "hermite" => &mut self.hermite,
            "hermite_orthogonality" => &mut self.hermite_orthogonality,
            "wick" => &mut self.wick,
            "repolarization" => &mut self.repolarization,
            "wick_orthogonality" => &mut self.wick_orthogonality,
            "mc_sigmas" => &mut self.mc_sigmas,
            "chaos" => &mut self.chaos,
            "closure" => &mut self.closure,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown tolerance `{other}` (known: {})",
                    Self::NAMES.join(", ")
                )))
            }
        };
        *slot = value;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Monte Carlo sample count.
    pub samples: usize,
    pub tol: Tolerances,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            samples: 100_000,
            tol: Tolerances::default(),
        }
    }
}

/// Runs one suite (or all of them, in module order).
pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> Vec<CheckOutcome> {
    match suite {
        Suite::Core => seqspace::run(opts),
        Suite::Hermite => hermite::run(opts),
        Suite::Wick => wick::run(opts),
        Suite::Measure => measure::run(opts),
        Suite::Chaos => chaos::run(opts),
        Suite::Closure => closure::run(opts),
        Suite::All => Suite::MODULES
            .iter()
            .flat_map(|s| {
                run_suite(*s, opts).into_iter().map(move |mut c| {
                    c.name = format!("{}/{}", s.name(), c.name);
                    c
                })
            })
            .collect(),
    }
}

/// Relative error `|a - b| / max(|b|, floor)`.
pub(crate) fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / b.abs().max(floor)
}

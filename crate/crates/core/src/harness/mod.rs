//! Seeded property suites over the quantifiers and channels.
//!
//! Every suite derives trial `i`'s generator from `(seed, i)`, runs trials on
//! the rayon pool and aggregates in index order, so a report is a pure
//! function of its arguments.

mod counterexamples;
mod optimize;
mod report;
mod suites;

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

pub use counterexamples::{counterexample_pair, dinf_counterexample, hs_counterexample, CounterexampleRecord};
pub use optimize::{optimal_pair_search, optimal_pair_search_with, OptimizationResult, PatternSearchConfig};
pub use report::{digest, mean_std, run_trials, value_gap, Expectation, Outcome, PropertyReport, TrialRecord};
pub use suites::{
    dpi_suite, dpi_suite_with_family, invariance_suite, joint_convexity_suite, kadison_bound_check,
    orthogonal_plateau_check, plateau_value, purity_bound_check, stinespring_dpi_equivalence, ChannelFamily,
};

use crate::error::{Error, Result};
use crate::qdiv::QuantifierId;

pub const CLOSED_FORM_TOL: f64 = 1e-10;
pub const DPI_TOL: f64 = 1e-9;
pub const OPTIMIZER_TOL: f64 = 1e-3;

/// The tolerances every report is judged against.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ToleranceLadder {
    pub closed_form: f64,
    pub dpi: f64,
    pub optimizer: f64,
}

pub const TOLERANCES: ToleranceLadder =
    ToleranceLadder { closed_form: CLOSED_FORM_TOL, dpi: DPI_TOL, optimizer: OPTIMIZER_TOL };

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SuiteName {
    Dpi,
    Invariance,
    OptimalPair,
    Plateau,
    JointConvexity,
    Kadison,
    PurityBound,
    Stinespring,
}

impl SuiteName {
    pub const ALL: [SuiteName; 8] = [
        Self::Dpi,
        Self::Invariance,
        Self::OptimalPair,
        Self::Plateau,
        Self::JointConvexity,
        Self::Kadison,
        Self::PurityBound,
        Self::Stinespring,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Dpi => "dpi",
            Self::Invariance => "invariance",
            Self::OptimalPair => "optimal-pair",
            Self::Plateau => "plateau",
            Self::JointConvexity => "joint-convexity",
            Self::Kadison => "kadison",
            Self::PurityBound => "purity-bound",
            Self::Stinespring => "stinespring",
        }
    }

    /// Suites that take no quantifier (they are about the Hilbert-Schmidt distance).
    pub fn is_quantifier_free(&self) -> bool {
        matches!(self, Self::Kadison | Self::PurityBound)
    }
}

impl fmt::Display for SuiteName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SuiteName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|n| n.as_str() == s).ok_or_else(|| Error::Parse(format!("unknown suite {s:?}")))
    }
}

/// Whether `suite` must hold for `q`, mirroring which quantifiers are
/// contractive, jointly convex, or maximal exactly on orthogonal pairs.
pub fn expectation(suite: SuiteName, q: QuantifierId) -> Expectation {
    use QuantifierId as Q;
    let must = match suite {
        SuiteName::Dpi | SuiteName::Stinespring => q.is_contractive(),
        SuiteName::Invariance | SuiteName::Kadison | SuiteName::PurityBound => true,
        SuiteName::Plateau => !matches!(q, Q::HsDist | Q::DInf),
        SuiteName::OptimalPair => q.is_bounded(),
        SuiteName::JointConvexity => !matches!(q, Q::Bures | Q::Hellinger),
    };
    if must {
        Expectation::MustHold
    } else {
        Expectation::MayViolate
    }
}

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::cdiv::DivergenceValue;
use crate::matcore::ComplexMatrix;
use crate::qdiv::QuantifierId;
use crate::random::{trial_rng, SeededRng};
use crate::Result;

/// Whether a suite's property is a theorem for this quantifier or may fail.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    MustHold,
    MayViolate,
}

/// One trial. `margin < −tolerance` is a violation of the suite's inequality;
/// `flagged` marks a failed side condition (a scaling law, a ratio bound, an
/// equality case) that must hold whatever the expectation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialRecord {
    pub index: usize,
    pub digest: String,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub label: String,
    pub before: f64,
    pub after: f64,
    pub margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub flagged: bool,
}

impl TrialRecord {
    pub fn new(index: usize, digest: String, before: f64, after: f64, margin: f64) -> Self {
        Self { index, digest, label: String::new(), before, after, margin, ratio: None, flagged: false }
    }

    pub fn label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn ratio(mut self, ratio: Option<f64>) -> Self {
        self.ratio = ratio;
        self
    }

    pub fn flag(mut self, flagged: bool) -> Self {
        self.flagged = flagged;
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Skipped,
    Trial(TrialRecord),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropertyReport {
    pub suite: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quantifier: Option<QuantifierId>,
    pub expectation: Expectation,
    pub trials: usize,
    pub skipped: usize,
    pub violations: usize,
    pub bound_violations: usize,
    pub worst_margin: Option<f64>,
    pub seed: u64,
    pub tolerance: f64,
    pub notes: BTreeMap<String, f64>,
    pub details: Vec<TrialRecord>,
}

impl PropertyReport {
    pub fn from_outcomes(
        suite: &str,
        quantifier: Option<QuantifierId>,
        expectation: Expectation,
        seed: u64,
        tolerance: f64,
        outcomes: Vec<Outcome>,
    ) -> Self {
        let trials = outcomes.len();
        let details: Vec<TrialRecord> = outcomes
            .into_iter()
            .filter_map(|o| match o {
                Outcome::Trial(r) => Some(r),
                Outcome::Skipped => None,
            })
            .collect();
        let violations = details.iter().filter(|r| r.margin < -tolerance || r.margin.is_nan()).count();
        let bound_violations = details.iter().filter(|r| r.flagged).count();
        let worst_margin = details.iter().map(|r| r.margin).reduce(f64::min);
        let mut notes = BTreeMap::new();
        if let Some(max) = details.iter().filter_map(|r| r.ratio).reduce(f64::max) {
            notes.insert("max_ratio".to_string(), max);
        }
        Self {
            suite: suite.to_string(),
            quantifier,
            expectation,
            trials,
            skipped: trials - details.len(),
            violations,
            bound_violations,
            worst_margin,
            seed,
            tolerance,
            notes,
            details,
        }
    }

    /// Holds when no must-hold property failed.
    pub fn passed(&self) -> bool {
        self.bound_violations == 0 && (self.expectation == Expectation::MayViolate || self.violations == 0)
    }

    pub fn note(mut self, key: &str, value: f64) -> Self {
        self.notes.insert(key.to_string(), value);
        self
    }

    pub fn evaluated(&self) -> usize {
        self.trials - self.skipped
    }

    pub fn summary_line(&self) -> String {
        let q = self.quantifier.map_or_else(|| "-".to_string(), |q| q.to_string());
        let worst = self.worst_margin.map_or_else(|| "none".to_string(), |m| format!("{m:.3e}"));
        format!("suite={} q={} trials={} violations={} worst={}", self.suite, q, self.trials, self.violations, worst)
    }

    /// SHA-256 of the canonical JSON form.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_vec(self).expect("report serializes");
        hex(&Sha256::digest(&json))
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Short SHA-256 digest of the given matrices' entries.
pub fn digest(mats: &[&ComplexMatrix]) -> String {
    let mut h = Sha256::new();
    for m in mats {
        h.update((m.rows() as u64).to_le_bytes());
        h.update((m.cols() as u64).to_le_bytes());
        for z in m.entries_row_major() {
            h.update(z.re.to_le_bytes());
            h.update(z.im.to_le_bytes());
        }
    }
    hex(&h.finalize()[..8])
}

/// Runs `trial(i, rng_i)` for every index on the rayon pool; results come back in index order.
pub fn run_trials<T, F>(trials: usize, seed: u64, trial: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &mut SeededRng) -> Result<T> + Sync,
{
    (0..trials).into_par_iter().map(|i| trial(i, &mut trial_rng(seed, i as u64))).collect()
}

/// `a − b` for extended reals, with `∞ − ∞ = 0`.
pub fn value_gap(a: DivergenceValue, b: DivergenceValue) -> f64 {
    match (a, b) {
        (DivergenceValue::Finite(x), DivergenceValue::Finite(y)) => x - y,
        (DivergenceValue::Infinite, DivergenceValue::Infinite) => 0.0,
        (DivergenceValue::Infinite, _) => f64::INFINITY,
        (_, DivergenceValue::Infinite) => f64::NEG_INFINITY,
    }
}

/// Sample mean and (n−1)-normalized standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

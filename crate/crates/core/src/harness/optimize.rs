use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use super::report::{Outcome, PropertyReport, TrialRecord};
use super::suites::plateau_value;
use super::{expectation, SuiteName, OPTIMIZER_TOL};
use crate::cdiv::DivergenceValue;
use crate::error::{Error, Result};
use crate::matcore::{ComplexMatrix, C64};
use crate::qdiv::{evaluate, QuantifierId};
use crate::random::{trial_rng, SeededRng};
use crate::states::{orthogonality_overlap, DensityMatrix, StatePair, OPTIMIZER_SUPPORT_TOL};

/// Compass search settings. `budget` counts objective evaluations per restart.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PatternSearchConfig {
    pub initial_step: f64,
    pub decay: f64,
    pub min_step: f64,
    pub restarts: usize,
    pub budget: usize,
}

impl Default for PatternSearchConfig {
    fn default() -> Self {
        Self { initial_step: 0.3, decay: 0.5, min_step: 1e-9, restarts: 12, budget: 20_000 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OptimizationResult {
    pub quantifier: QuantifierId,
    pub dim: usize,
    pub value: f64,
    pub orthogonality_overlap: f64,
    pub purities: (f64, f64),
    pub restarts_used: usize,
    pub evaluations: usize,
    /// The best restart shrank its step below `min_step` within budget.
    pub converged: bool,
    pub seed: u64,
    pub pair: StatePair,
}

impl OptimizationResult {
    /// Value the maximizer should reach: the orthogonal-pair plateau, or 1
    /// (attained by orthogonal pure states) for `hs_dist` and `d_inf`.
    pub fn target(&self) -> f64 {
        match plateau_value(self.quantifier) {
            Some(DivergenceValue::Finite(m)) => m,
            _ => 1.0,
        }
    }

    /// `min(value − target, −overlap)`, and for `hs_dist`/`d_inf` also
    /// `purity − 1` for both states. Success means margin ≥ −1e-3.
    pub fn margin(&self) -> f64 {
        let mut m = (self.value - self.target()).min(-self.orthogonality_overlap);
        if matches!(self.quantifier, QuantifierId::HsDist | QuantifierId::DInf) {
            m = m.min(self.purities.0 - 1.0).min(self.purities.1 - 1.0);
        }
        m
    }

    pub fn succeeded(&self) -> bool {
        self.margin() >= -OPTIMIZER_TOL
    }

    pub fn to_report(&self) -> PropertyReport {
        let record = TrialRecord::new(
            0,
            super::digest(&[self.pair.first.matrix(), self.pair.second.matrix()]),
            self.target(),
            self.value,
            self.margin(),
        )
        .label(format!("dim={} overlap={:.3e}", self.dim, self.orthogonality_overlap));
        PropertyReport::from_outcomes(
            "optimal-pair",
            Some(self.quantifier),
            expectation(SuiteName::OptimalPair, self.quantifier),
            self.seed,
            OPTIMIZER_TOL,
            vec![Outcome::Trial(record)],
        )
        .note("value", self.value)
        .note("overlap", self.orthogonality_overlap)
        .note("purity_first", self.purities.0)
        .note("purity_second", self.purities.1)
        .note("evaluations", self.evaluations as f64)
        .note("converged", if self.converged { 1.0 } else { 0.0 })
    }
}

pub fn optimal_pair_search(
    q: QuantifierId,
    dim: usize,
    restarts: usize,
    budget: usize,
    seed: u64,
) -> Result<OptimizationResult> {
    let cfg = PatternSearchConfig { restarts, budget, ..PatternSearchConfig::default() };
    optimal_pair_search_with(q, dim, cfg, seed)
}

/// Maximizes `q` over pairs `ρ = GG†/Tr(GG†)` with `G` complex `dim×dim`.
///
/// Restarts run in parallel from independent streams; the best one (lowest
/// index on ties) is then polished by truncating small eigenvalues of both
/// states, kept only if the value does not drop.
pub fn optimal_pair_search_with(
    q: QuantifierId,
    dim: usize,
    cfg: PatternSearchConfig,
    seed: u64,
) -> Result<OptimizationResult> {
    if !q.is_bounded() {
        return Err(Error::InvalidArgument(format!("{q} is unbounded and has no maximizer")));
    }
    if !(2..=6).contains(&dim) {
        return Err(Error::InvalidArgument(format!("dimension {dim} outside 2..=6")));
    }
    if cfg.restarts == 0 || cfg.budget == 0 {
        return Err(Error::InvalidArgument("restarts and budget must be positive".into()));
    }
    let runs: Vec<Restart> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| pattern_search(q, dim, &cfg, &mut trial_rng(seed, r as u64)))
        .collect();
    let evaluations = runs.iter().map(|r| r.evaluations).sum();
    let best = runs.into_iter().reduce(|a, b| if b.value > a.value { b } else { a }).expect("at least one restart");
    let (first, second, value) = polish(q, best.first, best.second, best.value);
    let orthogonality_overlap = orthogonality_overlap(&first, &second, OPTIMIZER_SUPPORT_TOL);
    let purities = (first.purity(), second.purity());
    Ok(OptimizationResult {
        quantifier: q,
        dim,
        value,
        orthogonality_overlap,
        purities,
        restarts_used: cfg.restarts,
        evaluations,
        converged: best.converged,
        seed,
        pair: StatePair::new(first, second)?,
    })
}

struct Restart {
    first: DensityMatrix,
    second: DensityMatrix,
    value: f64,
    evaluations: usize,
    converged: bool,
}

/// `GG†/Tr` from `2d²` reals laid out as (re, im) pairs, row-major.
fn state_from(x: &[f64], d: usize) -> Option<DensityMatrix> {
    let entries: Vec<C64> = x.chunks_exact(2).map(|c| C64::new(c[0], c[1])).collect();
    let g = ComplexMatrix::new(d, d, entries).ok()?;
    let gg = &g * &g.adjoint();
    let tr = gg.trace().re;
    if !(tr > 0.0) {
        return None;
    }
    DensityMatrix::new(gg.scale(1.0 / tr)).ok()
}

fn objective(q: QuantifierId, a: &DensityMatrix, b: &DensityMatrix) -> f64 {
    match evaluate(q, a, b) {
        Ok(DivergenceValue::Finite(v)) => v,
        _ => f64::NEG_INFINITY,
    }
}

fn normalize(x: &mut [f64]) {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        x.iter_mut().for_each(|v| *v /= norm);
    }
}

fn pattern_search(q: QuantifierId, d: usize, cfg: &PatternSearchConfig, rng: &mut SeededRng) -> Restart {
    let n = 2 * d * d;
    let (mut x, mut first, mut second) = loop {
        let mut x: Vec<f64> = (0..2 * n).map(|_| rng.sample(StandardNormal)).collect();
        normalize(&mut x[..n]);
        normalize(&mut x[n..]);
        if let (Some(a), Some(b)) = (state_from(&x[..n], d), state_from(&x[n..], d)) {
            break (x, a, b);
        }
    };
    let mut value = objective(q, &first, &second);
    let mut evaluations = 1;
    let mut step = cfg.initial_step;
    let mut converged = false;
    let mut order: Vec<usize> = (0..2 * n).collect();

    'outer: while evaluations < cfg.budget {
        order.shuffle(rng);
        let mut improved = false;
        for &i in &order {
            for sign in [1.0, -1.0] {
                if evaluations >= cfg.budget {
                    break 'outer;
                }
                x[i] += sign * step;
                evaluations += 1;
                let in_first = i < n;
                let cand = if in_first { state_from(&x[..n], d) } else { state_from(&x[n..], d) };
                let v = match &cand {
                    Some(c) if in_first => objective(q, c, &second),
                    Some(c) => objective(q, &first, c),
                    None => f64::NEG_INFINITY,
                };
                if v > value {
                    value = v;
                    let c = cand.expect("finite value implies a state");
                    if in_first {
                        first = c;
                    } else {
                        second = c;
                    }
                    improved = true;
                    break;
                }
                x[i] -= sign * step;
            }
        }
        if improved {
            // rescaling G leaves GG†/Tr unchanged and keeps the step size meaningful
            normalize(&mut x[..n]);
            normalize(&mut x[n..]);
        } else {
            step *= cfg.decay;
            if step < cfg.min_step {
                converged = true;
                break;
            }
        }
    }
    Restart { first, second, value, evaluations, converged }
}

/// Drops eigenvalues at or below `thr` and renormalizes.
fn truncate(rho: &DensityMatrix, thr: f64) -> Option<DensityMatrix> {
    let kept: Vec<f64> = rho.eigenvalues().iter().map(|&l| if l > thr { l } else { 0.0 }).collect();
    let total: f64 = kept.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    let values: Vec<f64> = kept.iter().map(|l| l / total).collect();
    DensityMatrix::new(rho.spectral().compose_with(&values)).ok()
}

fn polish(
    q: QuantifierId,
    first: DensityMatrix,
    second: DensityMatrix,
    value: f64,
) -> (DensityMatrix, DensityMatrix, f64) {
    let mut best = (first.clone(), second.clone(), value);
    // larger thresholds come last so ties resolve toward the lower-rank pair
    for thr in [1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2] {
        if let (Some(a), Some(b)) = (truncate(&first, thr), truncate(&second, thr)) {
            let v = objective(q, &a, &b);
            if v >= best.2 {
                best = (a, b, v);
            }
        }
    }
    best
}

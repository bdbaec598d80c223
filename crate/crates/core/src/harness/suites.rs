use std::f64::consts::LN_2;

use serde::Serialize;

use super::report::{digest, mean_std, run_trials, value_gap, Outcome, PropertyReport, TrialRecord};
use super::{expectation, Expectation, SuiteName, CLOSED_FORM_TOL, DPI_TOL};
use crate::cdiv::DivergenceValue;
use crate::channels::{
    assignment_channel, compose, measure_and_prepare, partial_trace_channel, random_cptp_with, stinespring_factorize,
    transpose_map, unitary_channel, KrausChannel, StateMap,
};
use crate::error::{Error, Result};
use crate::matcore::{schatten_norm, ComplexMatrix, Keep, NormKind};
use crate::qdiv::{evaluate, hs_distance, QuantifierId};
use crate::random::{dirichlet, haar_unitary, pick, SeededRng};
use crate::states::{random_orthogonal_pair_with, sample_state_with, DensityMatrix, StateKind};

/// Which maps a DPI suite draws.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelFamily {
    /// Cycles by trial index: random Stinespring (2 in 5), unitary, assignment
    /// with mixed τ followed by a joint unitary and partial trace, and
    /// measure-and-prepare.
    Mixed,
    /// `Tr_E` on `C^d ⊗ C^n`, `n ∈ 2..=4`; half the inputs are products `ρ ⊗ τ`.
    PartialTrace,
}

impl ChannelFamily {
    pub fn default_for(q: QuantifierId) -> Self {
        if q.is_contractive() {
            Self::Mixed
        } else {
            Self::PartialTrace
        }
    }
}

fn check_range(range: (usize, usize)) -> Result<()> {
    if range.0 < 2 || range.0 > range.1 {
        return Err(Error::InvalidArgument(format!("dimension range {}..={} (need 2 ≤ lo ≤ hi)", range.0, range.1)));
    }
    Ok(())
}

/// Random pair whose ensemble cycles with `variant`: two Hilbert-Schmidt
/// states (twice), a rank-limited state against a full-rank one, two pure states.
fn sample_pair(d: usize, variant: usize, rng: &mut SeededRng) -> Result<(DensityMatrix, DensityMatrix)> {
    let (a, b) = match variant % 4 {
        0 | 1 => (StateKind::HsMixed, StateKind::HsMixed),
        2 => (StateKind::RankLimited(pick(rng, 1, d - 1)), StateKind::HsMixed),
        _ => (StateKind::HaarPure, StateKind::HaarPure),
    };
    Ok((sample_state_with(d, a, rng)?, sample_state_with(d, b, rng)?))
}

fn mixed_pair(d: usize, rng: &mut SeededRng) -> Result<(DensityMatrix, DensityMatrix)> {
    Ok((sample_state_with(d, StateKind::HsMixed, rng)?, sample_state_with(d, StateKind::HsMixed, rng)?))
}

fn pair_digest(a: &DensityMatrix, b: &DensityMatrix) -> String {
    digest(&[a.matrix(), b.matrix()])
}

fn mixed_channel(i: usize, d: usize, range: (usize, usize), rng: &mut SeededRng) -> Result<(KrausChannel, String)> {
    Ok(match i % 5 {
        0 | 1 => {
            let e = pick(rng, 2, 4);
            (random_cptp_with(d, e, rng), format!("stinespring e={e}"))
        }
        2 => (unitary_channel(&haar_unitary(d, rng))?, "unitary".to_string()),
        3 => {
            let e = pick(rng, 2, 4);
            let tau = sample_state_with(e, StateKind::HsMixed, rng)?;
            let u = unitary_channel(&haar_unitary(d * e, rng))?;
            let ch = compose(&partial_trace_channel(d, e, Keep::System), &compose(&u, &assignment_channel(&tau, d))?)?;
            (ch, format!("assign-unitary-trace e={e}"))
        }
        _ => {
            let out = pick(rng, range.0, range.1);
            let basis = haar_unitary(d, rng);
            let states = (0..d)
                .map(|j| {
                    let kind = if j % 2 == 0 { StateKind::HsMixed } else { StateKind::HaarPure };
                    sample_state_with(out, kind, rng)
                })
                .collect::<Result<Vec<_>>>()?;
            (measure_and_prepare(&basis, &states)?, format!("measure-prepare out={out}"))
        }
    })
}

fn ratio(before: DivergenceValue, after: DivergenceValue) -> Option<f64> {
    match (before, after) {
        (DivergenceValue::Finite(b), DivergenceValue::Finite(a)) if b > 1e-12 => Some(a / b),
        _ => None,
    }
}

/// Data-processing check `q(ρ,σ) − q(Φρ,Φσ) ≥ −tol` with the default channel family for `q`.
pub fn dpi_suite(q: QuantifierId, trials: usize, dim_range: (usize, usize), seed: u64) -> Result<PropertyReport> {
    dpi_suite_with_family(q, ChannelFamily::default_for(q), trials, dim_range, seed)
}

/// Trials with infinite `q(ρ,σ)` are skipped. Under [`ChannelFamily::PartialTrace`]
/// the growth ratio of `hs_dist` (resp. `d_inf`) is checked against `√n` (resp. `n`).
pub fn dpi_suite_with_family(
    q: QuantifierId,
    family: ChannelFamily,
    trials: usize,
    dim_range: (usize, usize),
    seed: u64,
) -> Result<PropertyReport> {
    check_range(dim_range)?;
    let outcomes = run_trials(trials, seed, |i, rng| {
        let d = pick(rng, dim_range.0, dim_range.1);
        let (rho, sigma, ch, label, bound) = match family {
            ChannelFamily::Mixed => {
                let (rho, sigma) = sample_pair(d, i / 5, rng)?;
                let (ch, label) = mixed_channel(i, d, dim_range, rng)?;
                (rho, sigma, ch, label, None)
            }
            ChannelFamily::PartialTrace => {
                let n = pick(rng, 2, 4);
                let (rho, sigma, label) = if i % 2 == 0 {
                    let tau = if (i / 2) % 3 == 0 {
                        DensityMatrix::maximally_mixed(n)
                    } else {
                        sample_state_with(n, StateKind::HsMixed, rng)?
                    };
                    let (r, s) = mixed_pair(d, rng)?;
                    (r.tensor(&tau)?, s.tensor(&tau)?, format!("product n={n}"))
                } else {
                    let (r, s) = mixed_pair(d * n, rng)?;
                    (r, s, format!("joint n={n}"))
                };
                let bound = match q {
                    QuantifierId::HsDist => Some((n as f64).sqrt()),
                    QuantifierId::DInf => Some(n as f64),
                    _ => None,
                };
                (rho, sigma, partial_trace_channel(d, n, Keep::System), label, bound)
            }
        };
        let before = evaluate(q, &rho, &sigma)?;
        if !before.is_finite() {
            return Ok(Outcome::Skipped);
        }
        let after = evaluate(q, &ch.apply(&rho)?, &ch.apply(&sigma)?)?;
        let r = ratio(before, after);
        let flagged = matches!((bound, r), (Some(b), Some(r)) if r > b + 1e-6);
        Ok(Outcome::Trial(
            TrialRecord::new(i, pair_digest(&rho, &sigma), before.as_f64(), after.as_f64(), value_gap(before, after))
                .label(label)
                .ratio(r)
                .flag(flagged),
        ))
    })?;
    Ok(PropertyReport::from_outcomes("dpi", Some(q), expectation(SuiteName::Dpi, q), seed, DPI_TOL, outcomes))
}

fn transpose_checked(q: QuantifierId) -> bool {
    matches!(q, QuantifierId::TraceDist | QuantifierId::RelEntropy | QuantifierId::Qsd(_) | QuantifierId::HolevoSkew(_))
}

/// Unitary invariance, invariance under `ρ ↦ ρ ⊗ τ` (or, for `hs_dist` and
/// `d_inf`, the scaling laws `√𝒫(τ)` and `‖τ‖`), and transpose invariance
/// for `trace_dist`, `rel_entropy`, `qsd` and `holevo_skew`.
pub fn invariance_suite(q: QuantifierId, trials: usize, seed: u64) -> Result<Vec<PropertyReport>> {
    let mut reports = Vec::new();

    let outcomes = run_trials(trials, seed, |i, rng| {
        let d = pick(rng, 2, 5);
        let (rho, sigma) = sample_pair(d, i, rng)?;
        let u = haar_unitary(d, rng);
        let before = evaluate(q, &rho, &sigma)?;
        let after = evaluate(q, &rho.conjugate_by(&u)?, &sigma.conjugate_by(&u)?)?;
        let margin = -value_gap(after, before).abs();
        Ok(Outcome::Trial(TrialRecord::new(i, pair_digest(&rho, &sigma), before.as_f64(), after.as_f64(), margin)))
    })?;
    reports.push(PropertyReport::from_outcomes(
        "invariance/unitary",
        Some(q),
        Expectation::MustHold,
        seed,
        DPI_TOL,
        outcomes,
    ));

    let scaling = matches!(q, QuantifierId::HsDist | QuantifierId::DInf);
    let outcomes = run_trials(trials, seed, |i, rng| {
        let d = pick(rng, 2, 4);
        let (rho, sigma) = sample_pair(d, i, rng)?;
        let e = pick(rng, 2, 3);
        let tau = sample_state_with(e, StateKind::HsMixed, rng)?;
        let before = evaluate(q, &rho, &sigma)?;
        let after = evaluate(q, &rho.tensor(&tau)?, &sigma.tensor(&tau)?)?;
        let (margin, label) = match q {
            QuantifierId::HsDist => {
                let f = tau.purity().sqrt();
                (-(after.as_f64() - f * before.as_f64()).abs(), format!("factor={f}"))
            }
            QuantifierId::DInf => {
                let f = tau.eigenvalues()[0];
                (-(after.as_f64() - f * before.as_f64()).abs(), format!("factor={f}"))
            }
            _ => (-value_gap(after, before).abs(), String::new()),
        };
        Ok(Outcome::Trial(
            TrialRecord::new(i, pair_digest(&rho, &sigma), before.as_f64(), after.as_f64(), margin)
                .label(label)
                .ratio(ratio(before, after)),
        ))
    })?;
    let (name, tol) =
        if scaling { ("invariance/assignment-scaling", CLOSED_FORM_TOL) } else { ("invariance/assignment", DPI_TOL) };
    let mut report = PropertyReport::from_outcomes(name, Some(q), Expectation::MustHold, seed, tol, outcomes);
    if scaling {
        let gap = report.details.iter().map(|r| (r.before - r.after).abs()).fold(0.0, f64::max);
        report = report.note("max_invariance_gap", gap);
    }
    reports.push(report);

    if transpose_checked(q) {
        let outcomes = run_trials(trials, seed, |i, rng| {
            let d = pick(rng, 2, 5);
            let (rho, sigma) = sample_pair(d, i, rng)?;
            let t = transpose_map(d);
            let before = evaluate(q, &rho, &sigma)?;
            let after = evaluate(q, &t.apply(&rho)?, &t.apply(&sigma)?)?;
            let margin = -value_gap(after, before).abs();
            Ok(Outcome::Trial(TrialRecord::new(i, pair_digest(&rho, &sigma), before.as_f64(), after.as_f64(), margin)))
        })?;
        reports.push(PropertyReport::from_outcomes(
            "invariance/transpose",
            Some(q),
            Expectation::MustHold,
            seed,
            DPI_TOL,
            outcomes,
        ));
    }
    Ok(reports)
}

/// Common value on every orthogonal pair, where one exists.
pub fn plateau_value(q: QuantifierId) -> Option<DivergenceValue> {
    match q {
        QuantifierId::TraceDist
        | QuantifierId::HolevoSkew(_)
        | QuantifierId::Bures
        | QuantifierId::Hellinger
        | QuantifierId::Qsd(_) => Some(DivergenceValue::Finite(1.0)),
        QuantifierId::Qjs => Some(DivergenceValue::Finite(LN_2)),
        QuantifierId::RelEntropy => Some(DivergenceValue::Infinite),
        QuantifierId::HsDist | QuantifierId::DInf => None,
    }
}

/// Evaluates `q` on random orthogonal pairs of assorted ranks and compares
/// with [`plateau_value`]. Quantifiers without a plateau only get their
/// spread recorded (`mean`, `std`).
pub fn orthogonal_plateau_check(
    q: QuantifierId,
    trials: usize,
    dim_range: (usize, usize),
    seed: u64,
) -> Result<PropertyReport> {
    check_range(dim_range)?;
    let target = plateau_value(q);
    let outcomes = run_trials(trials, seed, |i, rng| {
        let d = pick(rng, dim_range.0, dim_range.1);
        let r1 = pick(rng, 1, d - 1);
        let r2 = pick(rng, 1, d - r1);
        let p = random_orthogonal_pair_with(d, r1, r2, rng)?;
        let v = evaluate(q, &p.first, &p.second)?;
        let (before, margin) = match target {
            Some(m) => (m.as_f64(), -value_gap(v, m).abs()),
            None => (v.as_f64(), 0.0),
        };
        Ok(Outcome::Trial(
            TrialRecord::new(i, pair_digest(&p.first, &p.second), before, v.as_f64(), margin)
                .label(format!("d={d} ranks={r1},{r2}")),
        ))
    })?;
    let mut report =
        PropertyReport::from_outcomes("plateau", Some(q), expectation(SuiteName::Plateau, q), seed, DPI_TOL, outcomes);
    let values: Vec<f64> = report.details.iter().map(|r| r.after).filter(|v| v.is_finite()).collect();
    if !values.is_empty() {
        let (mean, std) = mean_std(&values);
        report = report.note("mean", mean).note("std", std);
    }
    if let Some(DivergenceValue::Finite(m)) = target {
        report = report.note("plateau", m);
    }
    Ok(report)
}

/// `q(Σμₖρₖ, Σμₖσₖ) ≤ Σμₖ q(ρₖ,σₖ)` over random mixtures of 2–4 pairs.
pub fn joint_convexity_suite(q: QuantifierId, trials: usize, seed: u64) -> Result<PropertyReport> {
    let outcomes = run_trials(trials, seed, |i, rng| {
        let d = pick(rng, 2, 5);
        let k = pick(rng, 2, 4);
        let w = dirichlet(k, rng);
        let mut rhos = Vec::with_capacity(k);
        let mut sigmas = Vec::with_capacity(k);
        for j in 0..k {
            // no pure-pure pairs: their relative entropy is almost surely infinite
            let (r, s) = sample_pair(d, (i + j) % 3, rng)?;
            rhos.push(r);
            sigmas.push(s);
        }
        let mut rhs = 0.0;
        for ((wk, r), s) in w.iter().zip(&rhos).zip(&sigmas) {
            match evaluate(q, r, s)? {
                DivergenceValue::Finite(v) => rhs += wk * v,
                DivergenceValue::Infinite => return Ok(Outcome::Skipped),
            }
        }
        let rho = DensityMatrix::mixture(&w, &rhos)?;
        let sigma = DensityMatrix::mixture(&w, &sigmas)?;
        let lhs = evaluate(q, &rho, &sigma)?;
        let margin = value_gap(DivergenceValue::Finite(rhs), lhs);
        Ok(Outcome::Trial(
            TrialRecord::new(i, pair_digest(&rho, &sigma), rhs, lhs.as_f64(), margin).label(format!("k={k}")),
        ))
    })?;
    Ok(PropertyReport::from_outcomes(
        "joint-convexity",
        Some(q),
        expectation(SuiteName::JointConvexity, q),
        seed,
        DPI_TOL,
        outcomes,
    ))
}

fn hs_squared(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    Ok(hs_distance(a, b)?.expect_finite().powi(2))
}

/// `D²_HS(Φρ,Φσ) ≤ ‖Φ[1]‖·D²_HS(ρ,σ)` over random, unitary, partial-trace,
/// assignment and measure-and-prepare channels.
pub fn kadison_bound_check(trials: usize, seed: u64) -> Result<PropertyReport> {
    let outcomes = run_trials(trials, seed, |i, rng| {
        let (ch, label) = match i % 5 {
            0 => {
                let (d, e) = (pick(rng, 2, 5), pick(rng, 2, 4));
                (random_cptp_with(d, e, rng), format!("stinespring e={e}"))
            }
            1 => {
                let d = pick(rng, 2, 5);
                (unitary_channel(&haar_unitary(d, rng))?, "unitary".to_string())
            }
            2 => {
                let (ds, de) = (pick(rng, 2, 3), pick(rng, 2, 4));
                (partial_trace_channel(ds, de, Keep::System), format!("partial-trace e={de}"))
            }
            3 => {
                let (d, e) = (pick(rng, 2, 4), pick(rng, 2, 3));
                let tau = sample_state_with(e, StateKind::HsMixed, rng)?;
                (assignment_channel(&tau, d), format!("assignment e={e}"))
            }
            _ => {
                let (d, out) = (pick(rng, 2, 5), pick(rng, 2, 5));
                let basis = haar_unitary(d, rng);
                let states =
                    (0..d).map(|_| sample_state_with(out, StateKind::HsMixed, rng)).collect::<Result<Vec<_>>>()?;
                (measure_and_prepare(&basis, &states)?, format!("measure-prepare out={out}"))
            }
        };
        let (rho, sigma) = sample_pair(ch.dim_in(), i / 5, rng)?;
        let norm = schatten_norm(&ch.apply_matrix(&ComplexMatrix::identity(ch.dim_in()))?, NormKind::Operator);
        let before = hs_squared(&rho, &sigma)?;
        let after = hs_squared(&ch.apply(&rho)?, &ch.apply(&sigma)?)?;
        Ok(Outcome::Trial(
            TrialRecord::new(i, pair_digest(&rho, &sigma), norm * before, after, norm * before - after)
                .label(format!("{label} norm={norm:.6}"))
                .ratio((before > 1e-12).then(|| after / before)),
        ))
    })?;
    Ok(PropertyReport::from_outcomes(
        "kadison",
        Some(QuantifierId::HsDist),
        Expectation::MustHold,
        seed,
        DPI_TOL,
        outcomes,
    ))
}

/// `D²_HS ≤ ½(𝒫(ρ)+𝒫(σ))`. Every fourth trial draws an orthogonal pair, where
/// equality must hold within 1e-9; on the others the inequality must be strict.
pub fn purity_bound_check(trials: usize, seed: u64) -> Result<PropertyReport> {
    let outcomes = run_trials(trials, seed, |i, rng| {
        let d = pick(rng, 2, 6);
        let orthogonal = i % 4 == 0;
        let (rho, sigma) = if orthogonal {
            let r1 = pick(rng, 1, d - 1);
            let r2 = pick(rng, 1, d - r1);
            let p = random_orthogonal_pair_with(d, r1, r2, rng)?;
            (p.first, p.second)
        } else {
            sample_pair(d, i / 4, rng)?
        };
        let bound = 0.5 * (rho.purity() + sigma.purity());
        let d2 = hs_squared(&rho, &sigma)?;
        let margin = bound - d2;
        let flagged = if orthogonal { margin.abs() > DPI_TOL } else { margin <= DPI_TOL };
        Ok(Outcome::Trial(
            TrialRecord::new(i, pair_digest(&rho, &sigma), bound, d2, margin)
                .label(if orthogonal { "orthogonal" } else { "generic" })
                .flag(flagged),
        ))
    })?;
    Ok(PropertyReport::from_outcomes(
        "purity-bound",
        Some(QuantifierId::HsDist),
        Expectation::MustHold,
        seed,
        CLOSED_FORM_TOL,
        outcomes,
    ))
}

struct PipelineTrial {
    outcome: Outcome,
    pipeline_gap: f64,
    assignment_drop_mixed: Option<f64>,
}

/// Evaluates `q` after each stage of `Tr_E ∘ 𝒰 ∘ 𝒜_τ` and compares the last
/// stage with the composed channel applied directly. Even trials factorize a
/// random channel (pure τ); odd trials build the pipeline from a mixed τ.
/// The margin is the smallest stage-to-stage decrease; a pipeline/direct
/// disagreement above 1e-9 is flagged.
pub fn stinespring_dpi_equivalence(q: QuantifierId, trials: usize, seed: u64) -> Result<PropertyReport> {
    let results = run_trials(trials, seed, |i, rng| {
        let (d, e) = (pick(rng, 2, 4), pick(rng, 2, 4));
        let (rho, sigma) = sample_pair(d, (i / 2) % 3, rng)?;
        let (assign, unitary, trace, direct, label) = if i % 2 == 0 {
            let ch = random_cptp_with(d, e, rng);
            let st = stinespring_factorize(&ch)?;
            (st.assignment(), st.unitary_stage(), st.trace_out(), ch, "factorized")
        } else {
            let tau = sample_state_with(e, StateKind::HsMixed, rng)?;
            let a = assignment_channel(&tau, d);
            let u = unitary_channel(&haar_unitary(d * e, rng))?;
            let t = partial_trace_channel(d, e, Keep::System);
            let direct = compose(&t, &compose(&u, &a)?)?;
            (a, u, t, direct, "mixed-tau")
        };
        let v0 = evaluate(q, &rho, &sigma)?;
        if !v0.is_finite() {
            return Ok(PipelineTrial { outcome: Outcome::Skipped, pipeline_gap: 0.0, assignment_drop_mixed: None });
        }
        let (r1, s1) = (assign.apply(&rho)?, assign.apply(&sigma)?);
        let (r2, s2) = (unitary.apply(&r1)?, unitary.apply(&s1)?);
        let (r3, s3) = (trace.apply(&r2)?, trace.apply(&s2)?);
        let v1 = evaluate(q, &r1, &s1)?;
        let v2 = evaluate(q, &r2, &s2)?;
        let v3 = evaluate(q, &r3, &s3)?;
        let vd = evaluate(q, &direct.apply(&rho)?, &direct.apply(&sigma)?)?;
        let drops = [value_gap(v0, v1), value_gap(v1, v2), value_gap(v2, v3)];
        let margin = drops.iter().copied().fold(f64::INFINITY, f64::min);
        let pipeline_gap = value_gap(v3, vd).abs();
        let record = TrialRecord::new(i, pair_digest(&rho, &sigma), v0.as_f64(), v3.as_f64(), margin)
            .label(format!("{label} e={e}"))
            .flag(pipeline_gap > DPI_TOL);
        Ok(PipelineTrial {
            outcome: Outcome::Trial(record),
            pipeline_gap,
            assignment_drop_mixed: (i % 2 == 1).then_some(drops[0]),
        })
    })?;
    let max_gap = results.iter().map(|t| t.pipeline_gap).fold(0.0, f64::max);
    let min_drop = results.iter().filter_map(|t| t.assignment_drop_mixed).reduce(f64::min);
    let outcomes = results.into_iter().map(|t| t.outcome).collect();
    let mut report = PropertyReport::from_outcomes(
        "stinespring",
        Some(q),
        expectation(SuiteName::Stinespring, q),
        seed,
        DPI_TOL,
        outcomes,
    )
    .note("max_pipeline_gap", max_gap);
    if let Some(m) = min_drop {
        report = report.note("min_assignment_drop_mixed_tau", m);
    }
    Ok(report)
}

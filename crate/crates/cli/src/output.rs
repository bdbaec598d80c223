use std::io::Write;

use divergelab::cdiv::DivergenceValue;
use divergelab::harness::{PropertyReport, ToleranceLadder, TOLERANCES};
use serde::Serialize;

/// Twelve decimals with trailing zeros trimmed, always keeping one digit
/// after the point: `0.5`, `1.0`, `0.707106781187`. Infinity prints as `inf`.
pub fn format_number(x: f64) -> String {
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x.is_nan() {
        return "nan".into();
    }
    let mut s = format!("{x:.12}");
    while s.ends_with('0') && !s.ends_with(".0") {
        s.pop();
    }
    if s == "-0.0" {
        s = "0.0".into();
    }
    s
}

pub fn format_value(v: DivergenceValue) -> String {
    format_number(v.as_f64())
}

/// Everything a suite run emits; `generated_at` is the only field that
/// differs between reruns with the same configuration.
#[derive(Serialize)]
pub struct RunDocument<'a, C: Serialize> {
    pub generated_at: u64,
    pub config: &'a C,
    pub tolerances: ToleranceLadder,
    pub reports: &'a [PropertyReport],
}

impl<'a, C: Serialize> RunDocument<'a, C> {
    pub fn new(config: &'a C, reports: &'a [PropertyReport]) -> Self {
        let generated_at =
            std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map_or(0, |d| d.as_secs());
        Self { generated_at, config, tolerances: TOLERANCES, reports }
    }
}

#[derive(Serialize)]
struct CsvRow<'a> {
    suite: &'a str,
    quantifier: String,
    trials: usize,
    violations: usize,
    worst_margin: String,
    seed: u64,
    expectation: &'static str,
    bound_violations: usize,
    passed: bool,
}

pub fn write_csv(out: impl Write, reports: &[PropertyReport]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in reports {
        w.serialize(CsvRow {
            suite: &r.suite,
            quantifier: r.quantifier.map(|q| q.to_string()).unwrap_or_default(),
            trials: r.trials,
            violations: r.violations,
            worst_margin: r.worst_margin.map(|m| format!("{m:e}")).unwrap_or_default(),
            seed: r.seed,
            expectation: match r.expectation {
                divergelab::harness::Expectation::MustHold => "must_hold",
                divergelab::harness::Expectation::MayViolate => "may_violate",
            },
            bound_violations: r.bound_violations,
            passed: r.passed(),
        })?;
    }
    w.flush()?;
    Ok(())
}

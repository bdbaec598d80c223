use serde::Serialize;

use crate::channels::{partial_trace_channel, StateMap};
use crate::error::{Error, Result};
use crate::matcore::Keep;
use crate::qdiv::{d_infinity, hs_distance};
use crate::states::DensityMatrix;

/// Values before and after tracing out `C^n`, next to their closed forms.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CounterexampleRecord {
    pub name: String,
    pub n: usize,
    pub before: f64,
    pub after: f64,
    pub ratio: f64,
    pub expected: [f64; 3],
    pub max_error: f64,
}

impl CounterexampleRecord {
    fn new(name: &str, n: usize, before: f64, after: f64, expected: [f64; 3]) -> Self {
        let ratio = after / before;
        let max_error = [before, after, ratio].iter().zip(expected).map(|(v, e)| (v - e).abs()).fold(0.0, f64::max);
        Self { name: name.to_string(), n, before, after, ratio, expected, max_error }
    }

    pub fn matches(&self, tol: f64) -> bool {
        self.max_error <= tol
    }
}

/// `(P₊ ⊗ I/n, P₋ ⊗ I/n)` with `P±` the eigenprojectors of `σ_z`.
pub fn counterexample_pair(n: usize) -> Result<(DensityMatrix, DensityMatrix)> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("n must be at least 2, got {n}")));
    }
    let mixed = DensityMatrix::maximally_mixed(n);
    let p_plus = DensityMatrix::from_diagonal(&[1.0, 0.0])?;
    let p_minus = DensityMatrix::from_diagonal(&[0.0, 1.0])?;
    Ok((p_plus.tensor(&mixed)?, p_minus.tensor(&mixed)?))
}

fn reduce(n: usize) -> Result<(DensityMatrix, DensityMatrix, DensityMatrix, DensityMatrix)> {
    let (rho, sigma) = counterexample_pair(n)?;
    let tr = partial_trace_channel(2, n, Keep::System);
    let (r, s) = (tr.apply(&rho)?, tr.apply(&sigma)?);
    Ok((rho, sigma, r, s))
}

/// Hilbert-Schmidt distance grows by `√n` under the partial trace: `(1/√n, 1, √n)`.
pub fn hs_counterexample(n: usize) -> Result<CounterexampleRecord> {
    let (rho, sigma, r, s) = reduce(n)?;
    let before = hs_distance(&rho, &sigma)?.expect_finite();
    let after = hs_distance(&r, &s)?.expect_finite();
    let sq = (n as f64).sqrt();
    Ok(CounterexampleRecord::new("hs", n, before, after, [1.0 / sq, 1.0, sq]))
}

/// `D∞` grows by `n` on the same pair: `(1/n, 1, n)`.
pub fn dinf_counterexample(n: usize) -> Result<CounterexampleRecord> {
    let (rho, sigma, r, s) = reduce(n)?;
    let before = d_infinity(&rho, &sigma)?.value;
    let after = d_infinity(&r, &s)?.value;
    let nf = n as f64;
    Ok(CounterexampleRecord::new("dinf", n, before, after, [1.0 / nf, 1.0, nf]))
}

//! Quantum distinguishability quantifiers behind one interface ([`evaluate`]).
//!
//! All logarithms are natural. `qsd` and `holevo_skew` are ratios of
//! logarithms and therefore base independent; `rel_entropy` and `qjs` can be
//! converted to bits with [`LogBase`].

use std::f64::consts::{FRAC_1_SQRT_2, LN_2};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::cdiv::{self, binary_entropy, f_divergence, ConvexFunctionId, Distribution, DivergenceValue, Mu};
use crate::error::{dim_mismatch, Error, Result};
use crate::matcore::{eig_hermitian, polar_unitary, schatten_norm, ComplexMatrix, NormKind, SUPPORT_TOL};
use crate::states::{commutator_norm, DensityMatrix, StatePair};

pub type QuantifierResult = DivergenceValue;

/// Values in `[−NEGATIVE_TOL, 0)` are roundoff and clip to 0; anything lower is an error.
pub const NEGATIVE_TOL: f64 = 1e-9;
/// Commutator norm under which a pair counts as commuting for [`classical_reduction`].
pub const COMMUTE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum QuantifierId {
    RelEntropy,
    Qsd(Mu),
    HolevoSkew(Mu),
    TraceDist,
    Qjs,
    Bures,
    Hellinger,
    HsDist,
    DInf,
}

impl QuantifierId {
    pub const TAGS: [&'static str; 9] =
        ["rel_entropy", "qsd", "holevo_skew", "trace_dist", "qjs", "bures", "hellinger", "hs_dist", "d_inf"];

    pub fn tag(&self) -> &'static str {
        match self {
            Self::RelEntropy => "rel_entropy",
            Self::Qsd(_) => "qsd",
            Self::HolevoSkew(_) => "holevo_skew",
            Self::TraceDist => "trace_dist",
            Self::Qjs => "qjs",
            Self::Bures => "bures",
            Self::Hellinger => "hellinger",
            Self::HsDist => "hs_dist",
            Self::DInf => "d_inf",
        }
    }

    /// Parses a bare tag; `mu` is required for `qsd` and `holevo_skew`.
    pub fn from_tag(tag: &str, mu: Option<f64>) -> Result<Self> {
        let need_mu = || mu.ok_or(Error::BadMu(f64::NAN)).and_then(Mu::new);
        Ok(match tag {
            "rel_entropy" => Self::RelEntropy,
            "qsd" => Self::Qsd(need_mu()?),
            "holevo_skew" => Self::HolevoSkew(need_mu()?),
            "trace_dist" => Self::TraceDist,
            "qjs" => Self::Qjs,
            "bures" => Self::Bures,
            "hellinger" => Self::Hellinger,
            "hs_dist" => Self::HsDist,
            "d_inf" => Self::DInf,
            other => return Err(Error::Parse(format!("unknown quantifier {other:?}"))),
        })
    }

    pub fn mu(&self) -> Option<Mu> {
        match self {
            Self::Qsd(m) | Self::HolevoSkew(m) => Some(*m),
            _ => None,
        }
    }

    /// Contractive under every CPTP map.
    pub fn is_contractive(&self) -> bool {
        !matches!(self, Self::HsDist | Self::DInf)
    }

    pub fn is_bounded(&self) -> bool {
        !matches!(self, Self::RelEntropy)
    }

    /// Carries a logarithm whose base changes the reported number.
    pub fn is_entropic(&self) -> bool {
        matches!(self, Self::RelEntropy | Self::Qjs)
    }

    /// Every quantifier, with the skewed ones at the given `μ`.
    pub fn all(mu: Mu) -> Vec<Self> {
        vec![
            Self::RelEntropy,
            Self::Qsd(mu),
            Self::HolevoSkew(mu),
            Self::TraceDist,
            Self::Qjs,
            Self::Bures,
            Self::Hellinger,
            Self::HsDist,
            Self::DInf,
        ]
    }

    /// The seven contractive quantifiers.
    pub fn contractive(mu: Mu) -> Vec<Self> {
        Self::all(mu).into_iter().filter(Self::is_contractive).collect()
    }
}

impl fmt::Display for QuantifierId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.mu() {
            Some(mu) => write!(f, "{}(mu={})", self.tag(), mu.get()),
            None => f.write_str(self.tag()),
        }
    }
}

/// Accepts `tag`, `tag(mu=0.3)` and `tag:mu=0.3`.
impl FromStr for QuantifierId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (tag, rest) = match s.find(['(', ':']) {
            Some(i) => (&s[..i], Some(s[i + 1..].trim_end_matches(')'))),
            None => (s, None),
        };
        let mu = match rest {
            Some(r) => {
                let v = r.strip_prefix("mu=").ok_or_else(|| Error::Parse(format!("expected mu=<value> in {s:?}")))?;
                Some(v.parse::<f64>().map_err(|e| Error::Parse(e.to_string()))?)
            }
            None => None,
        };
        Self::from_tag(tag, mu)
    }
}

impl Serialize for QuantifierId {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for QuantifierId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Unit for reporting entropic values.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    #[default]
    Nat,
    Bits,
}

impl LogBase {
    pub fn convert(self, q: QuantifierId, v: QuantifierResult) -> QuantifierResult {
        match self {
            Self::Bits if q.is_entropic() => v.map(|x| x / LN_2),
            _ => v,
        }
    }
}

fn clip(v: f64, what: &str) -> Result<f64> {
    if v < -NEGATIVE_TOL || !v.is_finite() {
        return Err(Error::Inconsistent(format!("{what} evaluated to {v}")));
    }
    Ok(v.max(0.0))
}

fn check_dims(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<()> {
    if rho.dim() != sigma.dim() {
        return Err(dim_mismatch(rho.dim(), sigma.dim()));
    }
    Ok(())
}

/// Uniform entry point over [`QuantifierId`].
pub fn evaluate(q: QuantifierId, rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<QuantifierResult> {
    match q {
        QuantifierId::RelEntropy => relative_entropy(rho, sigma),
        QuantifierId::Qsd(mu) => quantum_skew_divergence(rho, sigma, mu.get()),
        QuantifierId::HolevoSkew(mu) => holevo_skew_divergence(rho, sigma, mu.get()),
        QuantifierId::TraceDist => trace_distance(rho, sigma),
        QuantifierId::Qjs => quantum_js(rho, sigma),
        QuantifierId::Bures => bures_distance(rho, sigma),
        QuantifierId::Hellinger => hellinger_distance(rho, sigma),
        QuantifierId::HsDist => hs_distance(rho, sigma),
        QuantifierId::DInf => d_infinity(rho, sigma).map(|d| DivergenceValue::Finite(d.value)),
    }
}

pub fn evaluate_pair(q: QuantifierId, pair: &StatePair) -> Result<QuantifierResult> {
    evaluate(q, &pair.first, &pair.second)
}

pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    rho.entropy()
}

/// `Σⱼ ⟨wⱼ|ρ|wⱼ⟩ ln κⱼ` over eigenpairs of σ with `κⱼ > threshold`.
fn cross_term(rho: &DensityMatrix, sigma: &DensityMatrix, threshold: f64) -> f64 {
    let s = sigma.spectral();
    let r = rho.matrix().as_dmatrix();
    let mut acc = 0.0;
    for (j, &k) in s.eigenvalues.iter().enumerate() {
        if k <= threshold {
            continue;
        }
        let w = s.eigenvector(j);
        let weight = w.dotc(&(r * &w)).re;
        acc += weight * k.ln();
    }
    acc
}

/// `S(ρ, σ) = Tr ρ ln ρ − Tr ρ ln σ`, `+∞` unless `supp ρ ⊆ supp σ`.
pub fn relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<QuantifierResult> {
    check_dims(rho, sigma)?;
    let complement = &ComplexMatrix::identity(sigma.dim()) - &sigma.support_projector(SUPPORT_TOL);
    let leak = schatten_norm(&complement.conjugate(rho.matrix()), NormKind::Operator);
    if leak > SUPPORT_TOL {
        return Ok(DivergenceValue::Infinite);
    }
    let threshold = sigma.spectral().support_threshold(SUPPORT_TOL);
    let v = -rho.entropy() - cross_term(rho, sigma, threshold);
    Ok(DivergenceValue::Finite(clip(v, "relative entropy")?))
}

/// Relative entropy against a state whose support contains ρ's by construction
/// (a mixture with positive weight on ρ). Every positive eigenvalue is kept:
/// the weight of ρ on an eigenvector of σ is bounded by the eigenvalue itself,
/// so small eigenvalues contribute `O(κ ln κ)` and need no cutoff.
fn dominated_relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> f64 {
    -rho.entropy() - cross_term(rho, sigma, 0.0)
}

/// `(μ/ln(1/μ)) S(ρ, μρ+(1−μ)σ) + ((1−μ)/ln(1/(1−μ))) S(σ, (1−μ)σ+μρ)`; bounded by 1.
pub fn quantum_skew_divergence(rho: &DensityMatrix, sigma: &DensityMatrix, mu: f64) -> Result<QuantifierResult> {
    let mu = Mu::new(mu)?;
    check_dims(rho, sigma)?;
    let m = mu.get();
    let mix = rho.mix(sigma, m)?;
    let a = dominated_relative_entropy(rho, &mix);
    let b = dominated_relative_entropy(sigma, &mix);
    let v = m / (1.0 / m).ln() * a + (1.0 - m) / (1.0 / (1.0 - m)).ln() * b;
    Ok(DivergenceValue::Finite(clip(v, "quantum skew divergence")?))
}

/// `χ({μ, ρ; 1−μ, σ}) / h(μ)`, in `[0, 1]`.
pub fn holevo_skew_divergence(rho: &DensityMatrix, sigma: &DensityMatrix, mu: f64) -> Result<QuantifierResult> {
    let mu = Mu::new(mu)?;
    check_dims(rho, sigma)?;
    let chi = holevo_chi(&[(mu.get(), rho.clone()), (1.0 - mu.get(), sigma.clone())])?;
    Ok(DivergenceValue::Finite(chi / binary_entropy(mu)))
}

/// `S(Σ μᵢρᵢ) − Σ μᵢ S(ρᵢ)`
pub fn holevo_chi(ensemble: &[(f64, DensityMatrix)]) -> Result<f64> {
    let weights: Vec<f64> = ensemble.iter().map(|(w, _)| *w).collect();
    Distribution::new(weights.clone()).map_err(|e| Error::Weight(e.to_string()))?;
    let states: Vec<DensityMatrix> = ensemble.iter().map(|(_, s)| s.clone()).collect();
    let avg = DensityMatrix::mixture(&weights, &states)?;
    let v = avg.entropy() - ensemble.iter().map(|(w, s)| w * s.entropy()).sum::<f64>();
    clip(v, "Holevo quantity")
}

/// `½ ‖ρ − σ‖₁`
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<QuantifierResult> {
    check_dims(rho, sigma)?;
    let d = rho.matrix() - sigma.matrix();
    Ok(DivergenceValue::Finite(0.5 * schatten_norm(&d, NormKind::Trace)))
}

/// `½[S(ρ, (ρ+σ)/2) + S(σ, (ρ+σ)/2)]`, evaluated as `S(m) − ½S(ρ) − ½S(σ)`.
pub fn quantum_js(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<QuantifierResult> {
    check_dims(rho, sigma)?;
    let chi = holevo_chi(&[(0.5, rho.clone()), (0.5, sigma.clone())])?;
    Ok(DivergenceValue::Finite(chi))
}

/// `√(1 − Tr|√σ√ρ|)`.
///
/// Evaluated as `‖√ρ − √σ U‖_F / √2` with `U` the polar unitary of `√ρ√σ`,
/// which equals the closed form exactly and stays accurate when the fidelity
/// is close to 1.
pub fn bures_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<QuantifierResult> {
    check_dims(rho, sigma)?;
    let sr = rho.sqrt();
    let ss = sigma.sqrt();
    let polar = polar_unitary(&(&sr * &ss))?;
    let diff = &sr - &(&ss * &polar);
    Ok(DivergenceValue::Finite(FRAC_1_SQRT_2 * diff.frobenius_norm()))
}

/// `√(1 − Tr{√σ√ρ})`, evaluated as `‖√ρ − √σ‖_F / √2`.
pub fn hellinger_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<QuantifierResult> {
    check_dims(rho, sigma)?;
    let diff = &rho.sqrt() - &sigma.sqrt();
    Ok(DivergenceValue::Finite(FRAC_1_SQRT_2 * diff.frobenius_norm()))
}

/// `‖ρ − σ‖₂ / √2`
pub fn hs_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<QuantifierResult> {
    check_dims(rho, sigma)?;
    let d = rho.matrix() - sigma.matrix();
    Ok(DivergenceValue::Finite(FRAC_1_SQRT_2 * d.frobenius_norm()))
}

/// Value of `max_w Tr|w(ρ−σ)|` over states, and the rank-one state attaining it.
#[derive(Clone, Debug)]
pub struct DInfinity {
    pub value: f64,
    pub witness: DensityMatrix,
}

/// `‖ρ − σ‖_op`, attained by the eigenvector of `ρ − σ` with the largest |eigenvalue|.
pub fn d_infinity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<DInfinity> {
    check_dims(rho, sigma)?;
    let s = eig_hermitian(&(rho.matrix() - sigma.matrix()))?;
    let (idx, value) = s
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(i, l)| (i, l.abs()))
        .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
    let witness = DensityMatrix::pure(&s.eigenvector(idx))?;
    Ok(DInfinity { value, witness })
}

/// Quantum value next to the classical value on the common eigenbasis.
#[derive(Clone, Copy, Debug)]
pub struct ClassicalReduction {
    pub quantum: QuantifierResult,
    pub classical: QuantifierResult,
    pub gap: f64,
}

/// Eigenvalue distributions of a commuting pair in a shared eigenbasis, with matched ordering.
pub fn co_eigen_distributions(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<(Distribution, Distribution)> {
    check_dims(rho, sigma)?;
    let norm = commutator_norm(&StatePair::new(rho.clone(), sigma.clone())?);
    if norm > COMMUTE_TOL {
        return Err(Error::NotCommuting { norm });
    }
    // Eigenvectors of ρ + cσ diagonalize both operators unless c makes two
    // distinct joint eigenvalue pairs collide; retry with another c if so.
    for c in [0.618_033_988_749_894_9, std::f64::consts::SQRT_2, std::f64::consts::E] {
        let combo = rho.matrix() + &sigma.matrix().scale(c);
        let basis = eig_hermitian(&combo)?.eigenvectors;
        let r = basis.adjoint().conjugate(rho.matrix());
        let s = basis.adjoint().conjugate(sigma.matrix());
        let off = off_diagonal_max(&r).max(off_diagonal_max(&s));
        if off <= COMMUTE_TOL {
            // the same support cut the quantum evaluation applies
            let diag = |m: &ComplexMatrix| -> Vec<f64> {
                (0..m.dim()).map(|i| m.get(i, i).re).map(|x| if x > SUPPORT_TOL { x } else { 0.0 }).collect()
            };
            let p = Distribution::from_unnormalized(diag(&r))?;
            let q = Distribution::from_unnormalized(diag(&s))?;
            return Ok((p, q));
        }
    }
    Err(Error::Inconsistent("could not find a common eigenbasis".into()))
}

fn off_diagonal_max(m: &ComplexMatrix) -> f64 {
    let n = m.dim();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                worst = worst.max(m.get(i, j).norm());
            }
        }
    }
    worst
}

/// The classical counterpart of `q` on a pair of distributions.
pub fn classical_value(q: QuantifierId, p: &Distribution, r: &Distribution) -> Result<QuantifierResult> {
    use ConvexFunctionId as F;
    Ok(match q {
        QuantifierId::RelEntropy => f_divergence(F::Kl, p, r)?,
        QuantifierId::Qsd(mu) => {
            let a = f_divergence(F::Skew(mu), p, r)?.expect_finite();
            let b = f_divergence(F::Skew(mu.complement()), r, p)?.expect_finite();
            DivergenceValue::Finite(mu.get() * a + (1.0 - mu.get()) * b)
        }
        QuantifierId::HolevoSkew(mu) => f_divergence(F::Hsd(mu), p, r)?.map(|v| v / binary_entropy(mu)),
        QuantifierId::TraceDist => f_divergence(F::Vd, p, r)?,
        QuantifierId::Qjs => f_divergence(F::Js, p, r)?,
        QuantifierId::Bures | QuantifierId::Hellinger => f_divergence(F::Hellinger, p, r)?.map(f64::sqrt),
        QuantifierId::HsDist => DivergenceValue::Finite(cdiv::hilbert_schmidt_distance(p, r)?),
        QuantifierId::DInf => DivergenceValue::Finite(cdiv::sup_distance(p, r)?),
    })
}

/// Compares `q(ρ, σ)` with its classical counterpart on a commuting pair.
pub fn classical_reduction(q: QuantifierId, rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<ClassicalReduction> {
    let (p, r) = co_eigen_distributions(rho, sigma)?;
    let quantum = evaluate(q, rho, sigma)?;
    let classical = classical_value(q, &p, &r)?;
    let gap = match (quantum, classical) {
        (DivergenceValue::Finite(a), DivergenceValue::Finite(b)) => (a - b).abs(),
        (DivergenceValue::Infinite, DivergenceValue::Infinite) => 0.0,
        _ => f64::INFINITY,
    };
    Ok(ClassicalReduction { quantum, classical, gap })
}

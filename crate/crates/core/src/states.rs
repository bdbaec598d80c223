//! Validated density matrices, random state ensembles, purification, and the
//! orthogonality / commutation predicates used by the optimal-pair suites.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{dim_mismatch, Error, Result};
use crate::matcore::{
    eig_hermitian, schatten_norm, tensor, ComplexMatrix, ComplexVector, NormKind, SpectralDecomposition, ZeroPolicy,
    C64, SUPPORT_TOL,
};
use crate::random::{ginibre, haar_unitary, haar_vector, rng_from_seed};

/// Tolerance on Hermiticity, negativity and trace for a valid state.
pub const DENSITY_TOL: f64 = 1e-10;
/// Orthogonality threshold on `‖P₁P₂‖_op` for validation suites.
pub const ORTHOGONALITY_TOL: f64 = 1e-8;
/// Support threshold used when judging optimizer outputs, which never reach exact rank deficiency.
pub const OPTIMIZER_SUPPORT_TOL: f64 = 1e-6;

/// A quantum state: Hermitian, PSD and unit trace, with its spectrum cached.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    spectral: SpectralDecomposition,
}

/// Serialized in the matrix exchange format.
impl Serialize for DensityMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        crate::matcore::MatrixJson::from(&self.matrix).serialize(s)
    }
}

impl PartialEq for DensityMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.matrix == other.matrix
    }
}

/// Checks the state invariants. Roundoff negatives in `[−1e-10, 0)` are clipped to 0
/// in the cached spectrum.
pub fn validate_density(m: &ComplexMatrix) -> Result<DensityMatrix> {
    if !m.is_square() {
        return Err(dim_mismatch("square matrix", format!("{}x{}", m.rows(), m.cols())));
    }
    let residual = m.hermitian_residual();
    if residual > DENSITY_TOL * m.frobenius_norm().max(1.0) {
        return Err(Error::NotHermitian { residual });
    }
    let matrix = m.hermitian_part();
    let mut spectral = eig_hermitian(&matrix)?;
    let min = spectral.eigenvalues.last().copied().unwrap_or(0.0);
    if min < -DENSITY_TOL {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    let trace = matrix.trace().re;
    if (trace - 1.0).abs() > DENSITY_TOL {
        return Err(Error::TraceNotOne { trace });
    }
    for l in &mut spectral.eigenvalues {
        *l = l.max(0.0);
    }
    Ok(DensityMatrix { matrix, spectral })
}

impl DensityMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        validate_density(&m)
    }

    /// `|ψ⟩⟨ψ|` for a normalized copy of `psi`.
    pub fn pure(psi: &ComplexVector) -> Result<Self> {
        let norm = psi.norm();
        if !(norm > 0.0) {
            return Err(Error::InvalidDistribution("zero state vector".into()));
        }
        let v = psi / C64::new(norm, 0.0);
        validate_density(&ComplexMatrix::projector_onto(&v))
    }

    pub fn from_diagonal(probs: &[f64]) -> Result<Self> {
        validate_density(&ComplexMatrix::from_real_diagonal(probs))
    }

    pub fn maximally_mixed(n: usize) -> Self {
        validate_density(&ComplexMatrix::identity(n).scale(1.0 / n as f64)).expect("I/n is a state")
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn spectral(&self) -> &SpectralDecomposition {
        &self.spectral
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.spectral.eigenvalues
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn rank(&self, tol: f64) -> usize {
        self.spectral.rank(tol)
    }

    pub fn support_projector(&self, tol: f64) -> ComplexMatrix {
        self.spectral.support_projector(tol).expect("clipped spectrum is nonnegative")
    }

    pub fn purity(&self) -> f64 {
        self.spectral.eigenvalues.iter().map(|l| l * l).sum()
    }

    /// Von Neumann entropy `−Tr ρ ln ρ` with `0 ln 0 = 0`.
    pub fn entropy(&self) -> f64 {
        -self.spectral.eigenvalues.iter().filter(|&&l| l > 0.0).map(|&l| l * l.ln()).sum::<f64>()
    }

    /// `√ρ` with eigenvalues below the support threshold set to zero, so
    /// roundoff in the kernel does not turn into `O(√ε)` entries.
    pub fn sqrt(&self) -> ComplexMatrix {
        self.spectral.apply(f64::sqrt, ZeroPolicy::Skip).expect("sqrt of clipped spectrum")
    }

    /// `w·self + (1−w)·other`
    pub fn mix(&self, other: &Self, w: f64) -> Result<Self> {
        self.check_dim(other)?;
        validate_density(&(&self.matrix.scale(w) + &other.matrix.scale(1.0 - w)))
    }

    /// Convex combination of several states.
    pub fn mixture(weights: &[f64], states: &[Self]) -> Result<Self> {
        let first = states.first().ok_or_else(|| Error::Weight("empty ensemble".into()))?;
        if weights.len() != states.len() {
            return Err(dim_mismatch(states.len(), weights.len()));
        }
        let mut acc = ComplexMatrix::zeros(first.dim(), first.dim());
        for (w, s) in weights.iter().zip(states) {
            first.check_dim(s)?;
            acc = &acc + &s.matrix.scale(*w);
        }
        validate_density(&acc)
    }

    pub fn tensor(&self, other: &Self) -> Result<Self> {
        validate_density(&tensor(&self.matrix, &other.matrix))
    }

    /// `U ρ U†`
    pub fn conjugate_by(&self, u: &ComplexMatrix) -> Result<Self> {
        if u.cols() != self.dim() {
            return Err(dim_mismatch(self.dim(), u.cols()));
        }
        validate_density(&u.conjugate(&self.matrix))
    }

    pub fn transpose(&self) -> Result<Self> {
        validate_density(&self.matrix.transpose())
    }

    pub(crate) fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(dim_mismatch(self.dim(), other.dim()));
        }
        Ok(())
    }
}

pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.purity()
}

/// Random state ensembles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateKind {
    /// Normalized complex-Gaussian vector.
    HaarPure,
    /// Hilbert-Schmidt measure: reduced state of a Haar pure state on `dim²`.
    HsMixed,
    /// Reduced state of a Haar pure state with an ancilla of dimension `r`.
    RankLimited(usize),
}

pub fn sample_state(dim: usize, kind: StateKind, seed: u64) -> Result<DensityMatrix> {
    sample_state_with(dim, kind, &mut rng_from_seed(seed))
}

pub fn sample_state_with(dim: usize, kind: StateKind, rng: &mut impl Rng) -> Result<DensityMatrix> {
    if dim < 2 {
        return Err(Error::BadRank { rank: 0, dim });
    }
    match kind {
        StateKind::HaarPure => DensityMatrix::pure(&haar_vector(dim, rng)),
        StateKind::HsMixed => induced_state(dim, dim, rng),
        StateKind::RankLimited(r) if (1..=dim).contains(&r) => induced_state(dim, r, rng),
        StateKind::RankLimited(r) => Err(Error::BadRank { rank: r, dim }),
    }
}

/// `G G† / Tr(G G†)` with `G` a `dim×ancilla` Ginibre matrix. Reshaping a Haar
/// vector on `dim·ancilla` into `G` makes this exactly the partial trace over the ancilla.
pub(crate) fn induced_state(dim: usize, ancilla: usize, rng: &mut impl Rng) -> Result<DensityMatrix> {
    let g = ginibre(dim, ancilla, rng);
    let gg = &g * &g.adjoint();
    let tr = gg.trace().re;
    validate_density(&gg.scale(1.0 / tr))
}

/// A pure state on `system ⊗ ancilla` whose system marginal is the purified state.
#[derive(Clone, Debug)]
pub struct Purification {
    pub vector: ComplexVector,
    pub system_dim: usize,
    pub ancilla_dim: usize,
}

impl Purification {
    pub fn density(&self) -> DensityMatrix {
        DensityMatrix::pure(&self.vector).expect("purification is a unit vector")
    }
}

/// Minimal purification `Σᵢ √λᵢ |vᵢ⟩⊗|i⟩`, ancilla dimension = rank.
pub fn purify(rho: &DensityMatrix) -> Purification {
    let rank = rho.rank(SUPPORT_TOL).max(1);
    purify_with_ancilla(rho, rank).expect("rank fits")
}

/// Purification padded to a fixed ancilla dimension (needed when comparing
/// purifications of different states in a common space).
pub fn purify_with_ancilla(rho: &DensityMatrix, ancilla_dim: usize) -> Result<Purification> {
    let rank = rho.rank(SUPPORT_TOL).max(1);
    if ancilla_dim < rank {
        return Err(Error::BadRank { rank: ancilla_dim, dim: rank });
    }
    let d = rho.dim();
    let s = rho.spectral();
    let mut vector = ComplexVector::zeros(d * ancilla_dim);
    for i in 0..rank {
        let amp = s.eigenvalues[i].sqrt();
        let v = s.eigenvector(i);
        for k in 0..d {
            vector[k * ancilla_dim + i] = v[k] * amp;
        }
    }
    Ok(Purification { vector, system_dim: d, ancilla_dim })
}

/// Two states on the same space.
#[derive(Clone, Debug, Serialize)]
pub struct StatePair {
    pub first: DensityMatrix,
    pub second: DensityMatrix,
}

impl StatePair {
    pub fn new(first: DensityMatrix, second: DensityMatrix) -> Result<Self> {
        first.check_dim(&second)?;
        Ok(Self { first, second })
    }

    pub fn dim(&self) -> usize {
        self.first.dim()
    }

    pub fn swapped(&self) -> Self {
        Self { first: self.second.clone(), second: self.first.clone() }
    }
}

/// `‖P₁P₂‖_op` for support projectors taken at `support_tol`.
pub fn orthogonality_overlap(a: &DensityMatrix, b: &DensityMatrix, support_tol: f64) -> f64 {
    let p1 = a.support_projector(support_tol);
    let p2 = b.support_projector(support_tol);
    schatten_norm(&(&p1 * &p2), NormKind::Operator)
}

/// Whether the supports are orthogonal, with the overlap witness.
pub fn are_orthogonal(p: &StatePair, tol: f64) -> (bool, f64) {
    let overlap = orthogonality_overlap(&p.first, &p.second, SUPPORT_TOL);
    (overlap <= tol, overlap)
}

/// `‖ρσ − σρ‖_F ≤ tol`
pub fn commute(p: &StatePair, tol: f64) -> bool {
    commutator_norm(p) <= tol
}

pub fn commutator_norm(p: &StatePair) -> f64 {
    p.first.matrix().commutator(p.second.matrix()).frobenius_norm()
}

pub fn random_orthogonal_pair(dim: usize, rank1: usize, rank2: usize, seed: u64) -> Result<StatePair> {
    random_orthogonal_pair_with(dim, rank1, rank2, &mut rng_from_seed(seed))
}

/// Block-diagonal states on disjoint coordinate blocks, rotated by a common Haar unitary.
pub fn random_orthogonal_pair_with(dim: usize, rank1: usize, rank2: usize, rng: &mut impl Rng) -> Result<StatePair> {
    if rank1 == 0 || rank2 == 0 || rank1 + rank2 > dim {
        return Err(Error::BadRank { rank: rank1 + rank2, dim });
    }
    fn block(dim: usize, offset: usize, r: usize, rng: &mut impl Rng) -> ComplexMatrix {
        let g = ginibre(r, r, rng);
        let gg = &g * &g.adjoint();
        let gg = gg.scale(1.0 / gg.trace().re);
        let mut m = ComplexMatrix::zeros(dim, dim).into_dmatrix();
        m.view_mut((offset, offset), (r, r)).copy_from(gg.as_dmatrix());
        ComplexMatrix::from_raw(m)
    }
    let a = block(dim, 0, rank1, rng);
    let b = block(dim, rank1, rank2, rng);
    let u = haar_unitary(dim, rng);
    StatePair::new(validate_density(&u.conjugate(&a))?, validate_density(&u.conjugate(&b))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{basis_vector, partial_trace, Keep};

    fn p_plus() -> DensityMatrix {
        DensityMatrix::from_diagonal(&[1.0, 0.0]).unwrap()
    }

    fn p_minus() -> DensityMatrix {
        DensityMatrix::from_diagonal(&[0.0, 1.0]).unwrap()
    }

    fn w1() -> DensityMatrix {
        DensityMatrix::from_diagonal(&[0.5, 0.5, 0.0, 0.0]).unwrap()
    }

    fn w2() -> DensityMatrix {
        DensityMatrix::from_diagonal(&[0.0, 0.0, 0.5, 0.5]).unwrap()
    }

    #[test]
    fn validation_accepts_maximally_mixed() {
        for d in 2..6 {
            let rho = validate_density(&ComplexMatrix::identity(d).scale(1.0 / d as f64)).unwrap();
            assert!(rho.eigenvalues().iter().all(|&l| (l - 1.0 / d as f64).abs() < 1e-15));
        }
    }

    #[test]
    fn validation_names_the_failed_invariant() {
        assert!(matches!(DensityMatrix::from_diagonal(&[0.6, 0.5]), Err(Error::TraceNotOne { .. })));
        assert!(matches!(DensityMatrix::from_diagonal(&[1.2, -0.2]), Err(Error::NotPsd { .. })));
        let m = ComplexMatrix::from_real_rows(&[vec![0.5, 0.3], vec![0.0, 0.5]]).unwrap();
        assert!(matches!(validate_density(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn roundoff_negatives_are_clipped() {
        let rho = DensityMatrix::from_diagonal(&[1.0 + 5e-11, -5e-11]).unwrap();
        assert!(rho.eigenvalues().iter().all(|&l| l >= 0.0));
    }

    #[test]
    fn purity_values() {
        assert!((p_plus().purity() - 1.0).abs() < 1e-15);
        assert!((DensityMatrix::maximally_mixed(5).purity() - 0.2).abs() < 1e-15);
        assert!((w1().purity() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn sampling_is_deterministic() {
        for kind in [StateKind::HaarPure, StateKind::HsMixed, StateKind::RankLimited(2)] {
            let a = sample_state(4, kind, 9).unwrap();
            let b = sample_state(4, kind, 9).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn haar_pure_has_unit_purity() {
        for seed in 0..50 {
            let rho = sample_state(2 + (seed as usize % 5), StateKind::HaarPure, seed).unwrap();
            assert!((rho.purity() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rank_limited_has_requested_rank() {
        let rho = sample_state(5, StateKind::RankLimited(2), 3).unwrap();
        assert_eq!(rho.rank(1e-10), 2);
        assert!(matches!(sample_state(3, StateKind::RankLimited(4), 1), Err(Error::BadRank { .. })));
        assert!(matches!(sample_state(3, StateKind::RankLimited(0), 1), Err(Error::BadRank { .. })));
        assert!(matches!(sample_state(1, StateKind::HsMixed, 1), Err(Error::BadRank { .. })));
    }

    #[test]
    fn hs_mixed_mean_eigenvalue() {
        // Monte Carlo oracle: the average eigenvalue is Tr/dim = 1/4 per sample; the
        // mean of the largest eigenvalue is not, so check the full spectrum average
        // and the average of a fixed diagonal entry (which must also be 1/4).
        let mut rng = rng_from_seed(2024);
        let n = 10_000;
        let mut diag_mean = 0.0;
        let mut eig_mean = 0.0;
        for _ in 0..n {
            let rho = sample_state_with(4, StateKind::HsMixed, &mut rng).unwrap();
            diag_mean += rho.matrix().get(0, 0).re;
            eig_mean += rho.eigenvalues().iter().sum::<f64>() / 4.0;
        }
        assert!((diag_mean / n as f64 - 0.25).abs() < 0.01);
        assert!((eig_mean / n as f64 - 0.25).abs() < 0.01);
    }

    #[test]
    fn purification_of_pure_state_is_itself() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let psi = ComplexVector::from_vec(vec![C64::new(0.0, s), C64::new(s, 0.0)]);
        let rho = DensityMatrix::pure(&psi).unwrap();
        let p = purify(&rho);
        assert_eq!(p.ancilla_dim, 1);
        // equal up to global phase
        assert!((p.vector.dotc(&psi).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn purification_of_maximally_mixed_qubit() {
        let p = purify(&DensityMatrix::maximally_mixed(2));
        assert_eq!(p.ancilla_dim, 2);
        let red = partial_trace(p.density().matrix(), (2, 2), Keep::System).unwrap();
        assert!(red.max_abs_diff(&ComplexMatrix::identity(2).scale(0.5)) < 1e-12);
        // Bell-type: the ancilla marginal is also maximally mixed
        let anc = partial_trace(p.density().matrix(), (2, 2), Keep::Environment).unwrap();
        assert!(anc.max_abs_diff(&ComplexMatrix::identity(2).scale(0.5)) < 1e-12);
    }

    #[test]
    fn purification_round_trip() {
        let mut rng = rng_from_seed(5);
        for t in 0..100 {
            let d = 2 + t % 5;
            let kind = if t % 3 == 0 { StateKind::RankLimited(1 + t % d) } else { StateKind::HsMixed };
            let rho = sample_state_with(d, kind, &mut rng).unwrap();
            let p = purify(&rho);
            let red = partial_trace(p.density().matrix(), (d, p.ancilla_dim), Keep::System).unwrap();
            let err = schatten_norm(&(&red - rho.matrix()), NormKind::Trace);
            assert!(err <= 1e-10, "trial {t}: {err}");
        }
    }

    #[test]
    fn purifications_of_orthogonal_states_are_orthogonal() {
        let pair = random_orthogonal_pair(5, 2, 3, 17).unwrap();
        let a = purify_with_ancilla(&pair.first, 3).unwrap();
        let b = purify_with_ancilla(&pair.second, 3).unwrap();
        assert!(a.vector.dotc(&b.vector).norm() < 1e-12);
        assert!(purify_with_ancilla(&pair.second, 2).is_err());
    }

    #[test]
    fn orthogonality_predicate() {
        let (ok, overlap) = are_orthogonal(&StatePair::new(p_plus(), p_minus()).unwrap(), ORTHOGONALITY_TOL);
        assert!(ok && overlap < 1e-15);
        let rho = sample_state(3, StateKind::HsMixed, 1).unwrap();
        let (ok, overlap) = are_orthogonal(&StatePair::new(rho.clone(), rho).unwrap(), ORTHOGONALITY_TOL);
        assert!(!ok && (overlap - 1.0).abs() < 1e-12);
        assert!(are_orthogonal(&StatePair::new(w1(), w2()).unwrap(), ORTHOGONALITY_TOL).0);
    }

    #[test]
    fn commutation_predicate() {
        let diag = StatePair::new(
            DensityMatrix::from_diagonal(&[0.3, 0.7]).unwrap(),
            DensityMatrix::from_diagonal(&[0.9, 0.1]).unwrap(),
        )
        .unwrap();
        assert!(commute(&diag, 1e-12));

        // [P₊, |+⟩⟨+|] has Frobenius norm 1/√2 by direct expansion
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus = DensityMatrix::pure(&ComplexVector::from_vec(vec![C64::new(s, 0.0), C64::new(s, 0.0)])).unwrap();
        let pair = StatePair::new(p_plus(), plus).unwrap();
        assert!(!commute(&pair, 1e-6));
        assert!((commutator_norm(&pair) - s).abs() < 1e-12);

        assert!(commute(&StatePair::new(w1(), w2()).unwrap(), 1e-12));
    }

    #[test]
    fn random_orthogonal_pairs() {
        let p = random_orthogonal_pair(2, 1, 1, 4).unwrap();
        assert!((p.first.purity() - 1.0).abs() < 1e-12 && (p.second.purity() - 1.0).abs() < 1e-12);
        assert!(are_orthogonal(&p, 1e-10).0);

        let p = random_orthogonal_pair(4, 2, 2, 4).unwrap();
        assert_eq!(p.first.rank(1e-10), 2);
        assert_eq!(p.second.rank(1e-10), 2);
        assert!(are_orthogonal(&p, 1e-10).0);

        let again = random_orthogonal_pair(4, 2, 2, 4).unwrap();
        assert_eq!(p.first, again.first);
        assert!(matches!(random_orthogonal_pair(3, 2, 2, 0), Err(Error::BadRank { .. })));
    }

    #[test]
    fn orthogonal_pairs_commute() {
        let mut rng = rng_from_seed(12);
        for t in 0..50 {
            let d = 2 + t % 5;
            let r1 = 1 + t % (d - 1);
            let r2 = 1 + (t / 3) % (d - r1);
            let p = random_orthogonal_pair_with(d, r1, r2, &mut rng).unwrap();
            assert!(are_orthogonal(&p, 1e-10).0);
            assert!(commute(&p, 1e-10));
        }
    }

    #[test]
    fn pure_state_needs_nonzero_vector() {
        assert!(DensityMatrix::pure(&ComplexVector::zeros(2)).is_err());
        assert!(DensityMatrix::pure(&basis_vector(3, 1)).is_ok());
    }
}

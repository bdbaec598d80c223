//! CPTP maps as Kraus families, plus the transposition map.
//!
//! Composite systems use the `system ⊗ environment` ordering of
//! [`crate::matcore::partial_trace`]: basis index `s·d_E + e`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{dim_mismatch, Error, Result};
use crate::matcore::{
    basis_vector, eig_hermitian, partial_trace, tensor, ComplexMatrix, ComplexVector, Keep, MatrixJson, C64,
};
use crate::random::{haar_unitary, rng_from_seed, trial_rng};
use crate::states::{validate_density, DensityMatrix};

/// Entrywise tolerance for `Σ K†K = I` and for the Choi spectrum.
pub const CPTP_TOL: f64 = 1e-10;

/// A linear map on operators that can be applied to states.
pub trait StateMap {
    fn dim_in(&self) -> usize;
    fn dim_out(&self) -> usize;
    fn apply_matrix(&self, x: &ComplexMatrix) -> Result<ComplexMatrix>;

    /// Maps a state and re-validates the output.
    fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        let out = self.apply_matrix(rho.matrix())?;
        validate_density(&out).map_err(|e| Error::OutputInvalid(Box::new(e)))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KrausChannel {
    kraus: Vec<ComplexMatrix>,
    dim_in: usize,
    dim_out: usize,
}

impl KrausChannel {
    /// Validated constructor: shapes agree and `Σ K†K = I` within [`CPTP_TOL`].
    pub fn new(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let ch = Self::new_unchecked(kraus)?;
        let residual = ch.tp_residual();
        if residual > CPTP_TOL {
            return Err(Error::NotTracePreserving { residual });
        }
        Ok(ch)
    }

    /// Shape checks only; for building deliberately broken families in diagnostics.
    pub fn new_unchecked(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let first = kraus.first().ok_or_else(|| dim_mismatch("at least one Kraus operator", "none"))?;
        let (dim_out, dim_in) = (first.rows(), first.cols());
        if let Some(k) = kraus.iter().find(|k| k.rows() != dim_out || k.cols() != dim_in) {
            return Err(dim_mismatch(format!("{dim_out}x{dim_in}"), format!("{}x{}", k.rows(), k.cols())));
        }
        Ok(Self { kraus, dim_in, dim_out })
    }

    pub fn identity(n: usize) -> Self {
        Self { kraus: vec![ComplexMatrix::identity(n)], dim_in: n, dim_out: n }
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn len(&self) -> usize {
        self.kraus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kraus.is_empty()
    }

    /// Largest entry of `Σ K†K − I`.
    pub fn tp_residual(&self) -> f64 {
        let mut acc = ComplexMatrix::zeros(self.dim_in, self.dim_in);
        for k in &self.kraus {
            acc = &acc + &(&k.adjoint() * k);
        }
        acc.max_abs_diff(&ComplexMatrix::identity(self.dim_in))
    }

    pub fn to_json(&self) -> ChannelJson {
        ChannelJson {
            dim_in: self.dim_in,
            dim_out: self.dim_out,
            kraus: self.kraus.iter().map(MatrixJson::from).collect(),
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let j: ChannelJson = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        Self::try_from(&j)
    }
}

impl StateMap for KrausChannel {
    fn dim_in(&self) -> usize {
        self.dim_in
    }

    fn dim_out(&self) -> usize {
        self.dim_out
    }

    fn apply_matrix(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        if !x.is_square() || x.rows() != self.dim_in {
            return Err(dim_mismatch(self.dim_in, format!("{}x{}", x.rows(), x.cols())));
        }
        let mut out = ComplexMatrix::zeros(self.dim_out, self.dim_out);
        for k in &self.kraus {
            out = &out + &k.conjugate(x);
        }
        Ok(out)
    }
}

/// File format: `{"dim_in", "dim_out", "kraus": [matrix, ...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelJson {
    pub dim_in: usize,
    pub dim_out: usize,
    pub kraus: Vec<MatrixJson>,
}

impl TryFrom<&ChannelJson> for KrausChannel {
    type Error = Error;

    fn try_from(j: &ChannelJson) -> Result<Self> {
        let kraus = j.kraus.iter().map(ComplexMatrix::try_from).collect::<Result<Vec<_>>>()?;
        let ch = Self::new(kraus)?;
        if ch.dim_in != j.dim_in || ch.dim_out != j.dim_out {
            return Err(dim_mismatch(format!("{}->{}", j.dim_in, j.dim_out), format!("{}->{}", ch.dim_in, ch.dim_out)));
        }
        Ok(ch)
    }
}

/// Trace-preserving positive maps: CPTP channels and the (not completely positive) transposition.
#[derive(Clone, Debug, PartialEq)]
pub enum PositiveMap {
    Transpose(usize),
    Kraus(KrausChannel),
}

impl StateMap for PositiveMap {
    fn dim_in(&self) -> usize {
        match self {
            Self::Transpose(n) => *n,
            Self::Kraus(k) => k.dim_in,
        }
    }

    fn dim_out(&self) -> usize {
        match self {
            Self::Transpose(n) => *n,
            Self::Kraus(k) => k.dim_out,
        }
    }

    fn apply_matrix(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        match self {
            Self::Transpose(n) => {
                if !x.is_square() || x.rows() != *n {
                    return Err(dim_mismatch(n, format!("{}x{}", x.rows(), x.cols())));
                }
                Ok(x.transpose())
            }
            Self::Kraus(k) => k.apply_matrix(x),
        }
    }
}

impl From<KrausChannel> for PositiveMap {
    fn from(k: KrausChannel) -> Self {
        Self::Kraus(k)
    }
}

pub fn transpose_map(dim: usize) -> PositiveMap {
    PositiveMap::Transpose(dim)
}

/// `ρ ↦ UρU†`
pub fn unitary_channel(u: &ComplexMatrix) -> Result<KrausChannel> {
    if !u.is_square() {
        return Err(dim_mismatch("square unitary", format!("{}x{}", u.rows(), u.cols())));
    }
    let residual = u.unitarity_residual();
    if residual > CPTP_TOL {
        return Err(Error::NotUnitary { residual });
    }
    Ok(KrausChannel { kraus: vec![u.clone()], dim_in: u.rows(), dim_out: u.rows() })
}

/// `ρ ↦ ρ ⊗ τ` on `C^{dim_s}`, with Kraus operators `√t_k · I ⊗ |u_k⟩` from τ's spectrum.
pub fn assignment_channel(tau: &DensityMatrix, dim_s: usize) -> KrausChannel {
    let de = tau.dim();
    let id = ComplexMatrix::identity(dim_s);
    let s = tau.spectral();
    let kraus = s
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &t)| t > 0.0)
        .map(|(k, &t)| {
            let col = ComplexMatrix::from_raw(nalgebra::DMatrix::from_column_slice(de, 1, s.eigenvector(k).as_slice()));
            tensor(&id, &col).scale(t.sqrt())
        })
        .collect();
    KrausChannel { kraus, dim_in: dim_s, dim_out: dim_s * de }
}

/// Partial trace over one factor of `C^{d_S} ⊗ C^{d_E}`; `keep` names the surviving factor.
pub fn partial_trace_channel(ds: usize, de: usize, keep: Keep) -> KrausChannel {
    let (kept, traced) = match keep {
        Keep::System => (ds, de),
        Keep::Environment => (de, ds),
    };
    let id = ComplexMatrix::identity(kept);
    let kraus = (0..traced)
        .map(|k| {
            let bra = ComplexMatrix::from_raw(nalgebra::DMatrix::from_row_slice(
                1,
                traced,
                basis_vector(traced, k).as_slice(),
            ));
            match keep {
                Keep::System => tensor(&id, &bra),
                Keep::Environment => tensor(&bra, &id),
            }
        })
        .collect();
    KrausChannel { kraus, dim_in: ds * de, dim_out: kept }
}

/// `a ∘ b` (apply `b` first). Kraus family `{AᵢBⱼ}`.
pub fn compose(a: &KrausChannel, b: &KrausChannel) -> Result<KrausChannel> {
    if a.dim_in != b.dim_out {
        return Err(dim_mismatch(a.dim_in, b.dim_out));
    }
    let kraus = a.kraus.iter().flat_map(|x| b.kraus.iter().map(move |y| x * y)).collect();
    KrausChannel::new(kraus)
}

/// Random channel from a Haar unitary on `C^dim ⊗ C^env` with the environment
/// prepared in `e₁`: `K_k = (I ⊗ ⟨k|) U (I ⊗ |0⟩)`.
pub fn random_cptp(dim: usize, env_dim: usize, seed: u64) -> KrausChannel {
    random_cptp_with(dim, env_dim, &mut rng_from_seed(seed))
}

pub fn random_cptp_with(dim: usize, env_dim: usize, rng: &mut impl rand::Rng) -> KrausChannel {
    let u = haar_unitary(dim * env_dim, rng);
    let kraus = (0..env_dim)
        .map(|k| {
            let m = nalgebra::DMatrix::from_fn(dim, dim, |i, j| u.get(i * env_dim + k, j * env_dim));
            ComplexMatrix::from_raw(m)
        })
        .collect();
    KrausChannel { kraus, dim_in: dim, dim_out: dim }
}

/// `Φ = Tr_E ∘ 𝒰 ∘ 𝒜_τ` with `τ = |e₁⟩⟨e₁|` on an environment of `env_dim`.
#[derive(Clone, Debug)]
pub struct Stinespring {
    pub tau: DensityMatrix,
    pub unitary: ComplexMatrix,
    pub env_dim: usize,
    pub dim: usize,
}

impl Stinespring {
    pub fn assignment(&self) -> KrausChannel {
        assignment_channel(&self.tau, self.dim)
    }

    pub fn unitary_stage(&self) -> KrausChannel {
        KrausChannel { kraus: vec![self.unitary.clone()], dim_in: self.unitary.rows(), dim_out: self.unitary.rows() }
    }

    pub fn trace_out(&self) -> KrausChannel {
        partial_trace_channel(self.dim, self.env_dim, Keep::System)
    }

    /// The three stages composed back into one Kraus family.
    pub fn recompose(&self) -> Result<KrausChannel> {
        compose(&self.trace_out(), &compose(&self.unitary_stage(), &self.assignment())?)
    }
}

/// Factorizes a channel on `C^d` through a unitary dilation with one
/// environment level per Kraus operator.
pub fn stinespring_factorize(ch: &KrausChannel) -> Result<Stinespring> {
    let d = ch.dim_in;
    if ch.dim_out != d {
        return Err(dim_mismatch(format!("{d}->{d}"), format!("{}->{}", d, ch.dim_out)));
    }
    let r = ch.len();
    let n = d * r;
    // isometry V|ψ⟩ = Σ_k K_k|ψ⟩ ⊗ |k⟩
    let v: Vec<ComplexVector> =
        (0..d).map(|s| ComplexVector::from_fn(n, |row, _| ch.kraus[row % r].get(row / r, s))).collect();
    let gram = nalgebra::DMatrix::from_fn(d, d, |i, j| v[i].dotc(&v[j]));
    let iso_residual = (gram - nalgebra::DMatrix::identity(d, d)).iter().fold(0.0f64, |m, z| m.max(z.norm()));
    if iso_residual > CPTP_TOL {
        return Err(Error::FactorizationFailed(format!(
            "Kraus family is not an isometry (residual {iso_residual:.3e})"
        )));
    }

    let mut basis = orthonormal_completion(&v, n);
    if basis.len() != n {
        return Err(Error::FactorizationFailed("orthonormal completion is ill-conditioned".into()));
    }

    // column s·r holds V e_s; the remaining columns take the complement in order
    let mut columns: Vec<Option<ComplexVector>> = vec![None; n];
    for (s, col) in basis.drain(..d).enumerate() {
        columns[s * r] = Some(col);
    }
    let mut rest = basis.into_iter();
    for c in columns.iter_mut().filter(|c| c.is_none()) {
        *c = rest.next();
    }
    let cols: Vec<ComplexVector> = columns.into_iter().map(|c| c.expect("every column filled")).collect();
    let unitary = ComplexMatrix::from_raw(nalgebra::DMatrix::from_columns(&cols));
    let residual = unitary.unitarity_residual();
    if residual > 1e-9 {
        return Err(Error::FactorizationFailed(format!("completed dilation is not unitary (residual {residual:.3e})")));
    }
    let tau = DensityMatrix::pure(&basis_vector(r, 0))?;
    Ok(Stinespring { tau, unitary, env_dim: r, dim: d })
}

/// Largest Frobenius distance between the two maps on the matrix units `|i⟩⟨j|`.
pub fn action_error(a: &impl StateMap, b: &impl StateMap) -> Result<f64> {
    if a.dim_in() != b.dim_in() || a.dim_out() != b.dim_out() {
        return Err(dim_mismatch(a.dim_in(), b.dim_in()));
    }
    let n = a.dim_in();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let e = ComplexMatrix::unit(n, i, j);
            worst = worst.max((&a.apply_matrix(&e)? - &b.apply_matrix(&e)?).frobenius_norm());
        }
    }
    Ok(worst)
}

fn orthonormal_completion(vectors: &[ComplexVector], n: usize) -> Vec<ComplexVector> {
    let mut basis: Vec<ComplexVector> = vectors.to_vec();
    for i in 0..n {
        if basis.len() == n {
            break;
        }
        let mut w = basis_vector(n, i);
        for _ in 0..2 {
            for b in &basis {
                let c = b.dotc(&w);
                w -= b * c;
            }
        }
        let norm = w.norm();
        if norm > 1e-6 {
            basis.push(w / C64::new(norm, 0.0));
        }
    }
    basis
}

/// Measure-and-prepare channel taking the orthonormal pair `src` to the pure
/// targets `dst`: Kraus `|d₁⟩⟨b₁|, |d₂⟩⟨b₂|` and `|d₁⟩⟨bⱼ|` for the rest of a
/// basis `b` completing `src`.
pub fn orthogonal_to_target_channel(
    src: (&ComplexVector, &ComplexVector),
    dst: (&ComplexVector, &ComplexVector),
) -> Result<KrausChannel> {
    let n = src.0.len();
    if src.1.len() != n || dst.0.len() != dst.1.len() {
        return Err(dim_mismatch(n, src.1.len()));
    }
    let residual = (src.0.norm() - 1.0).abs().max((src.1.norm() - 1.0).abs()).max(src.0.dotc(src.1).norm());
    if residual > CPTP_TOL {
        return Err(Error::NotOrthonormal { residual });
    }
    let dst_residual = (dst.0.norm() - 1.0).abs().max((dst.1.norm() - 1.0).abs());
    if dst_residual > CPTP_TOL {
        return Err(Error::NotOrthonormal { residual: dst_residual });
    }
    let basis = orthonormal_completion(&[src.0.clone(), src.1.clone()], n);
    let kraus = basis
        .iter()
        .enumerate()
        .map(|(j, b)| {
            let d = if j == 1 { dst.1 } else { dst.0 };
            ComplexMatrix::ket_bra(d, b)
        })
        .collect();
    KrausChannel::new(kraus)
}

/// Measures in the orthonormal columns of `basis` and prepares `states[j]` on outcome `j`.
pub fn measure_and_prepare(basis: &ComplexMatrix, states: &[DensityMatrix]) -> Result<KrausChannel> {
    if states.len() != basis.cols() {
        return Err(dim_mismatch(basis.cols(), states.len()));
    }
    let mut kraus = Vec::new();
    for (j, st) in states.iter().enumerate() {
        let b = basis.column(j);
        let s = st.spectral();
        for (k, &l) in s.eigenvalues.iter().enumerate() {
            if l > 0.0 {
                kraus.push(ComplexMatrix::ket_bra(&s.eigenvector(k), &b).scale(l.sqrt()));
            }
        }
    }
    KrausChannel::new(kraus)
}

/// Monte Carlo estimate of `E_V[V X V†]` against its exact value `Tr{X}·I/n`.
#[derive(Clone, Debug)]
pub struct TwirlEstimate {
    pub estimate: ComplexMatrix,
    pub target: ComplexMatrix,
    pub error: f64,
    pub samples: usize,
}

const TWIRL_CHUNK: usize = 1024;

/// Samples are drawn in fixed-size chunks, one ChaCha stream per chunk, and
/// the chunk sums are added in chunk order, so the result does not depend on
/// the thread count.
pub fn haar_twirl_mc(x: &ComplexMatrix, samples: usize, seed: u64) -> Result<TwirlEstimate> {
    if !x.is_square() {
        return Err(dim_mismatch("square matrix", format!("{}x{}", x.rows(), x.cols())));
    }
    if samples == 0 {
        return Err(Error::Inconsistent("twirl needs at least one sample".into()));
    }
    let n = x.rows();
    let chunks = samples.div_ceil(TWIRL_CHUNK);
    let partial: Vec<ComplexMatrix> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = trial_rng(seed, c as u64);
            let count = TWIRL_CHUNK.min(samples - c * TWIRL_CHUNK);
            let mut acc = ComplexMatrix::zeros(n, n);
            for _ in 0..count {
                acc = &acc + &haar_unitary(n, &mut rng).conjugate(x);
            }
            acc
        })
        .collect();
    let total = partial.iter().fold(ComplexMatrix::zeros(n, n), |a, b| &a + b);
    let estimate = total.scale(1.0 / samples as f64);
    let target = ComplexMatrix::identity(n).scale_complex(x.trace() / C64::new(n as f64, 0.0));
    let error = (&estimate - &target).frobenius_norm();
    Ok(TwirlEstimate { estimate, target, error, samples })
}

/// Residuals of the two CPTP invariants; never fails.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CptpDiagnostics {
    pub tp_residual: f64,
    pub choi_min_eigenvalue: f64,
}

impl CptpDiagnostics {
    pub fn is_cptp(&self) -> bool {
        self.tp_residual <= CPTP_TOL && self.choi_min_eigenvalue >= -CPTP_TOL
    }
}

/// Choi matrix `Σ |i⟩⟨j| ⊗ Φ(|i⟩⟨j|)`, input factor first.
pub fn choi_matrix(map: &impl StateMap) -> Result<ComplexMatrix> {
    let (n, m) = (map.dim_in(), map.dim_out());
    let mut choi = ComplexMatrix::zeros(n * m, n * m);
    for i in 0..n {
        for j in 0..n {
            let e = ComplexMatrix::unit(n, i, j);
            choi = &choi + &tensor(&e, &map.apply_matrix(&e)?);
        }
    }
    Ok(choi)
}

pub fn check_cptp(map: &impl StateMap) -> CptpDiagnostics {
    let Ok(choi) = choi_matrix(map) else {
        return CptpDiagnostics { tp_residual: f64::INFINITY, choi_min_eigenvalue: f64::NEG_INFINITY };
    };
    let (n, m) = (map.dim_in(), map.dim_out());
    let tp_residual = partial_trace(&choi, (n, m), Keep::System)
        .map(|r| r.max_abs_diff(&ComplexMatrix::identity(n)))
        .unwrap_or(f64::INFINITY);
    let choi_min_eigenvalue = eig_hermitian(&choi.hermitian_part())
        .ok()
        .and_then(|s| s.eigenvalues.last().copied())
        .unwrap_or(f64::NEG_INFINITY);
    CptpDiagnostics { tp_residual, choi_min_eigenvalue }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{haar_vector, rng_from_seed};
    use crate::states::{sample_state_with, StateKind};

    fn diag(v: &[f64]) -> DensityMatrix {
        DensityMatrix::from_diagonal(v).unwrap()
    }

    fn sigma_x() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap()
    }

    fn sigma_z() -> ComplexMatrix {
        ComplexMatrix::from_real_diagonal(&[1.0, -1.0])
    }

    #[test]
    fn identity_and_unitary_examples() {
        let mut rng = rng_from_seed(1);
        let rho = sample_state_with(3, StateKind::HsMixed, &mut rng).unwrap();
        assert_eq!(KrausChannel::identity(3).apply(&rho).unwrap().matrix().max_abs_diff(rho.matrix()), 0.0);
        let out = unitary_channel(&sigma_x()).unwrap().apply(&diag(&[1.0, 0.0])).unwrap();
        assert!(out.matrix().max_abs_diff(diag(&[0.0, 1.0]).matrix()) < 1e-15);
        assert_eq!(unitary_channel(&sigma_x()).unwrap().len(), 1);
        assert!(matches!(unitary_channel(&sigma_z().scale(1.1)), Err(Error::NotUnitary { .. })));
    }

    #[test]
    fn transpose_fixes_real_states() {
        let rho =
            DensityMatrix::new(ComplexMatrix::from_real_rows(&[vec![0.6, 0.2], vec![0.2, 0.4]]).unwrap()).unwrap();
        let out = transpose_map(2).apply(&rho).unwrap();
        assert_eq!(out.matrix(), rho.matrix());
    }

    #[test]
    fn partial_trace_is_left_inverse_of_assignment() {
        let mut rng = rng_from_seed(2);
        for t in 0..100 {
            let (ds, de) = (2 + t % 3, 2 + t % 3);
            let tau = sample_state_with(de, StateKind::HsMixed, &mut rng).unwrap();
            let rho = sample_state_with(ds, StateKind::HsMixed, &mut rng).unwrap();
            let ch = compose(&partial_trace_channel(ds, de, Keep::System), &assignment_channel(&tau, ds)).unwrap();
            assert!(ch.apply(&rho).unwrap().matrix().max_abs_diff(rho.matrix()) < 1e-12);
        }
    }

    #[test]
    fn assignment_reproduces_the_tensor_state() {
        let n = 3;
        let out = assignment_channel(&DensityMatrix::maximally_mixed(n), 2).apply(&diag(&[1.0, 0.0])).unwrap();
        let expected = tensor(diag(&[1.0, 0.0]).matrix(), &ComplexMatrix::identity(n).scale(1.0 / n as f64));
        assert!(out.matrix().max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn partial_trace_channel_matches_matcore() {
        let mut rng = rng_from_seed(3);
        let rho = sample_state_with(6, StateKind::HsMixed, &mut rng).unwrap();
        for keep in [Keep::System, Keep::Environment] {
            let a = partial_trace_channel(2, 3, keep).apply(&rho).unwrap();
            let b = partial_trace(rho.matrix(), (2, 3), keep).unwrap();
            assert!(a.matrix().max_abs_diff(&b) < 1e-14);
        }
    }

    #[test]
    fn composition_bookkeeping() {
        let phi = random_cptp(3, 2, 4);
        let psi = random_cptp(3, 3, 5);
        let c = compose(&phi, &psi).unwrap();
        assert_eq!(c.len(), 6);
        let id_phi = compose(&KrausChannel::identity(3), &phi).unwrap();
        assert!(action_error(&id_phi, &phi).unwrap() < 1e-14);
        let mut rng = rng_from_seed(6);
        let rho = sample_state_with(3, StateKind::HsMixed, &mut rng).unwrap();
        let seq = phi.apply(&psi.apply(&rho).unwrap()).unwrap();
        assert!(c.apply(&rho).unwrap().matrix().max_abs_diff(seq.matrix()) < 1e-13);
        assert!(compose(&phi, &random_cptp(2, 2, 1)).is_err());
    }

    #[test]
    fn random_channels_are_cptp() {
        for seed in 0..100 {
            let ch = random_cptp(2 + seed as usize % 4, 1 + seed as usize % 4, seed);
            let d = check_cptp(&ch);
            assert!(d.tp_residual <= 1e-10, "{d:?}");
            assert!(d.choi_min_eigenvalue >= -1e-10, "{d:?}");
        }
        let u = random_cptp(3, 1, 9);
        assert_eq!(u.len(), 1);
        assert!(u.kraus()[0].unitarity_residual() < 1e-12);
        assert_eq!(random_cptp(3, 2, 10), random_cptp(3, 2, 10));
    }

    #[test]
    fn check_cptp_flags_transpose_and_scaled_families() {
        let t = check_cptp(&transpose_map(2));
        assert!(t.tp_residual < 1e-15);
        assert!((t.choi_min_eigenvalue + 1.0).abs() < 1e-12);
        let bad = KrausChannel::new_unchecked(vec![ComplexMatrix::identity(2).scale(0.9)]).unwrap();
        assert!(check_cptp(&bad).tp_residual > 0.1);
        assert!(matches!(
            KrausChannel::new(vec![ComplexMatrix::identity(2).scale(0.9)]),
            Err(Error::NotTracePreserving { .. })
        ));
    }

    #[test]
    fn stinespring_round_trip() {
        for seed in 0..50 {
            let (d, e) = (2 + seed as usize % 3, 2 + (seed as usize / 3) % 3);
            let ch = random_cptp(d, e, 100 + seed);
            let st = stinespring_factorize(&ch).unwrap();
            assert!(st.env_dim <= ch.len());
            assert!((st.tau.purity() - 1.0).abs() < 1e-12);
            assert!(action_error(&st.recompose().unwrap(), &ch).unwrap() <= 1e-9);
        }
    }

    #[test]
    fn stinespring_of_a_unitary_is_the_unitary() {
        let mut rng = rng_from_seed(11);
        let u = haar_unitary(3, &mut rng);
        let st = stinespring_factorize(&unitary_channel(&u).unwrap()).unwrap();
        assert_eq!(st.env_dim, 1);
        assert!(st.unitary.max_abs_diff(&u) < 1e-12);
    }

    #[test]
    fn stinespring_of_phase_flip() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let ch = KrausChannel::new(vec![ComplexMatrix::identity(2).scale(h), sigma_z().scale(h)]).unwrap();
        let st = stinespring_factorize(&ch).unwrap();
        assert_eq!(st.env_dim, 2);
        assert!(action_error(&st.recompose().unwrap(), &ch).unwrap() <= 1e-12);
    }

    #[test]
    fn orthogonal_pair_reaches_any_target_pair() {
        let e0 = basis_vector(2, 0);
        let e1 = basis_vector(2, 1);
        let ch = orthogonal_to_target_channel((&e0, &e1), (&e0, &e1)).unwrap();
        assert!(action_error(&ch, &KrausChannel::identity(2)).unwrap() > 0.0);
        assert!(ch.apply(&diag(&[1.0, 0.0])).unwrap().matrix().max_abs_diff(diag(&[1.0, 0.0]).matrix()) < 1e-15);

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = ComplexVector::from_vec(vec![C64::new(h, 0.0), C64::new(h, 0.0)]);
        let ch = orthogonal_to_target_channel((&e0, &e1), (&e0, &plus)).unwrap();
        let out = ch.apply(&DensityMatrix::pure(&e1).unwrap()).unwrap();
        assert!(out.matrix().max_abs_diff(&ComplexMatrix::projector_onto(&plus)) < 1e-12);

        let mut rng = rng_from_seed(12);
        for _ in 0..30 {
            let u = haar_unitary(4, &mut rng);
            let (s1, s2) = (u.column(0), u.column(1));
            let (d1, d2) = (haar_vector(3, &mut rng), haar_vector(3, &mut rng));
            let ch = orthogonal_to_target_channel((&s1, &s2), (&d1, &d2)).unwrap();
            assert!(check_cptp(&ch).is_cptp());
            let r1 = ch.apply(&DensityMatrix::pure(&s1).unwrap()).unwrap();
            let r2 = ch.apply(&DensityMatrix::pure(&s2).unwrap()).unwrap();
            assert!(r1.matrix().max_abs_diff(&ComplexMatrix::projector_onto(&d1)) < 1e-10);
            assert!(r2.matrix().max_abs_diff(&ComplexMatrix::projector_onto(&d2)) < 1e-10);
            let before =
                crate::qdiv::trace_distance(&DensityMatrix::pure(&s1).unwrap(), &DensityMatrix::pure(&s2).unwrap())
                    .unwrap()
                    .expect_finite();
            let after = crate::qdiv::trace_distance(&r1, &r2).unwrap().expect_finite();
            assert!(after <= before + 1e-12);
        }
        assert!(matches!(orthogonal_to_target_channel((&e0, &plus), (&e0, &e1)), Err(Error::NotOrthonormal { .. })));
    }

    #[test]
    fn measure_and_prepare_is_cptp() {
        let mut rng = rng_from_seed(13);
        let u = haar_unitary(3, &mut rng);
        let states: Vec<DensityMatrix> =
            (0..3).map(|_| sample_state_with(2, StateKind::HsMixed, &mut rng).unwrap()).collect();
        let ch = measure_and_prepare(&u, &states).unwrap();
        assert!(check_cptp(&ch).is_cptp());
        assert_eq!((ch.dim_in(), ch.dim_out()), (3, 2));
    }

    #[test]
    fn twirl_examples() {
        let id = haar_twirl_mc(&ComplexMatrix::identity(2), 17, 1).unwrap();
        assert!(id.error < 1e-12);
        let z = haar_twirl_mc(&sigma_z(), 10_000, 2).unwrap();
        assert!(z.target.frobenius_norm() == 0.0);
        assert!(z.estimate.frobenius_norm() <= 0.05, "{}", z.error);
        let again = haar_twirl_mc(&sigma_z(), 10_000, 2).unwrap();
        assert_eq!(again.estimate, z.estimate);
    }

    #[test]
    fn channel_json_round_trip() {
        let ch = random_cptp(2, 3, 14);
        let s = serde_json::to_string(&ch.to_json()).unwrap();
        let back = KrausChannel::from_json_str(&s).unwrap();
        assert!(action_error(&ch, &back).unwrap() == 0.0);
        let bad = r#"{"dim_in": 2, "dim_out": 2, "kraus": [{"dim": 2, "re": [[0.5, 0], [0, 0.5]]}]}"#;
        assert!(matches!(KrausChannel::from_json_str(bad), Err(Error::NotTracePreserving { .. })));
    }
}

use std::cmp::Ordering;

use nalgebra::{DMatrix, SymmetricEigen};

use super::{ComplexMatrix, ComplexVector, C64, HERMITIAN_TOL, SUPPORT_TOL};
use crate::error::{dim_mismatch, Error, Result};

/// Eigendecomposition `M = Q Λ Q†` of a Hermitian matrix.
///
/// Eigenvalues are sorted descending. Each eigenvector is phase-fixed so that
/// its first non-negligible component is real and positive, which makes the
/// decomposition reproducible across runs.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

/// How [`matrix_function`] treats eigenvalues at or below the support threshold.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ZeroPolicy {
    /// Evaluate `f` on every eigenvalue.
    Apply,
    /// Map eigenvalues outside the support to 0 (the `0 log 0 = 0` convention).
    Skip,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormKind {
    Trace,
    HilbertSchmidt,
    Operator,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvector(&self, i: usize) -> ComplexVector {
        self.eigenvectors.column(i)
    }

    /// Largest eigenvalue modulus.
    pub fn operator_norm(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |acc, l| acc.max(l.abs()))
    }

    /// Absolute support threshold for this operator.
    pub fn support_threshold(&self, tol: f64) -> f64 {
        tol * self.operator_norm().max(1.0)
    }

    /// `Q diag(values) Q†`
    pub fn compose_with(&self, values: &[f64]) -> ComplexMatrix {
        let q = self.eigenvectors.as_dmatrix();
        let mut scaled = q.clone();
        for (j, &v) in values.iter().enumerate() {
            scaled.column_mut(j).scale_mut(v);
        }
        ComplexMatrix::from_raw(scaled * q.adjoint())
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.compose_with(&self.eigenvalues)
    }

    /// Applies a real function to the spectrum.
    ///
    /// Roundoff negatives in `[−tol, 0)` are retried at 0 when `f` is not
    /// finite there; any other non-finite value is a [`Error::Domain`].
    pub fn apply(&self, f: impl Fn(f64) -> f64, policy: ZeroPolicy) -> Result<ComplexMatrix> {
        let thr = self.support_threshold(SUPPORT_TOL);
        let mut values = Vec::with_capacity(self.dim());
        for &l in &self.eigenvalues {
            if policy == ZeroPolicy::Skip && l <= thr {
                values.push(0.0);
                continue;
            }
            let mut v = f(l);
            if !v.is_finite() && (-thr..0.0).contains(&l) {
                v = f(0.0);
            }
            if !v.is_finite() {
                return Err(Error::Domain { eigenvalue: l });
            }
            values.push(v);
        }
        Ok(self.compose_with(&values))
    }

    /// Projector onto eigenvectors whose eigenvalue exceeds the scaled threshold.
    pub fn support_projector(&self, tol: f64) -> Result<ComplexMatrix> {
        let thr = self.support_threshold(tol);
        let min = self.eigenvalues.last().copied().unwrap_or(0.0);
        if min < -thr {
            return Err(Error::NotPsd { min_eigenvalue: min });
        }
        let values: Vec<f64> = self.eigenvalues.iter().map(|&l| if l > thr { 1.0 } else { 0.0 }).collect();
        Ok(self.compose_with(&values))
    }

    pub fn rank(&self, tol: f64) -> usize {
        let thr = self.support_threshold(tol);
        self.eigenvalues.iter().filter(|&&l| l > thr).count()
    }
}

/// Hermitian eigendecomposition with descending eigenvalues.
pub fn eig_hermitian(m: &ComplexMatrix) -> Result<SpectralDecomposition> {
    if !m.is_square() {
        return Err(dim_mismatch("square matrix", format!("{}x{}", m.rows(), m.cols())));
    }
    let residual = m.hermitian_residual();
    if residual > HERMITIAN_TOL * m.frobenius_norm().max(1.0) {
        return Err(Error::NotHermitian { residual });
    }
    let h = m.hermitian_part().into_dmatrix();
    let n = h.nrows();
    let eig = SymmetricEigen::new(h);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap_or(Ordering::Equal));

    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut q = DMatrix::<C64>::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).into_owned();
        let norm = col.norm();
        if norm > 0.0 {
            col /= C64::new(norm, 0.0);
        }
        if let Some(lead) = col.iter().find(|z| z.norm() > 1e-12).copied() {
            let phase = lead.conj() / lead.norm();
            col *= phase;
        }
        q.set_column(dst, &col);
    }
    Ok(SpectralDecomposition { eigenvalues, eigenvectors: ComplexMatrix::from_raw(q) })
}

/// `Q diag(f(λ)) Q†` for Hermitian `m`.
pub fn matrix_function(m: &ComplexMatrix, f: impl Fn(f64) -> f64, policy: ZeroPolicy) -> Result<ComplexMatrix> {
    eig_hermitian(m)?.apply(f, policy)
}

/// Schatten norms. Hermitian inputs use the spectrum, anything else singular values.
pub fn schatten_norm(m: &ComplexMatrix, kind: NormKind) -> f64 {
    let values: Vec<f64> = if m.is_square() && m.is_hermitian() {
        match eig_hermitian(m) {
            Ok(s) => s.eigenvalues.iter().map(|l| l.abs()).collect(),
            Err(_) => singular_values(m),
        }
    } else {
        singular_values(m)
    };
    match kind {
        NormKind::Trace => values.iter().sum(),
        NormKind::HilbertSchmidt => values.iter().map(|v| v * v).sum::<f64>().sqrt(),
        NormKind::Operator => values.iter().fold(0.0, |a, &v| a.max(v)),
    }
}

/// Unitary `U` with `M U` positive semidefinite, so `Tr(M U) = ‖M‖₁`.
///
/// Built from the eigenvectors `vᵢ` of `M†M`: `wᵢ = M vᵢ` are orthonormalized
/// in order of decreasing eigenvalue, directions with `M vᵢ ≈ 0` get any
/// orthonormal completion, and `U = Σ vᵢ wᵢ†`. Since `Re Tr(M U)` is maximal
/// at the polar factor, roundoff in `U` only enters `Tr(M U)` at second order.
pub fn polar_unitary(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !m.is_square() {
        return Err(dim_mismatch("square matrix", format!("{}x{}", m.rows(), m.cols())));
    }
    let n = m.rows();
    let gram = &m.adjoint() * m;
    let eig = eig_hermitian(&gram.hermitian_part())?;
    let floor = 1e-13 * m.frobenius_norm();
    let mut ws: Vec<Option<ComplexVector>> = Vec::with_capacity(n);
    let mut accepted: Vec<ComplexVector> = Vec::new();
    for i in 0..n {
        let mut w = m.mul_vec(&eig.eigenvector(i));
        for _ in 0..2 {
            for a in &accepted {
                let c = a.dotc(&w);
                w -= a * c;
            }
        }
        let norm = w.norm();
        if norm > floor {
            let w = w / C64::new(norm, 0.0);
            accepted.push(w.clone());
            ws.push(Some(w));
        } else {
            ws.push(None);
        }
    }
    let mut next = 0;
    let mut u = ComplexMatrix::zeros(n, n);
    for (i, slot) in ws.into_iter().enumerate() {
        let w = match slot {
            Some(w) => w,
            None => loop {
                let mut e = super::basis_vector(n, next);
                next += 1;
                for _ in 0..2 {
                    for a in &accepted {
                        let c = a.dotc(&e);
                        e -= a * c;
                    }
                }
                let norm = e.norm();
                if norm > 1e-6 {
                    let e = e / C64::new(norm, 0.0);
                    accepted.push(e.clone());
                    break e;
                }
            },
        };
        u = &u + &ComplexMatrix::ket_bra(&eig.eigenvector(i), &w);
    }
    Ok(u)
}

/// Singular values in descending order, as the spectrum of `M U` with `U`
/// from [`polar_unitary`]; non-square inputs are zero-padded.
pub fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    let (r, c) = (m.rows(), m.cols());
    let n = r.max(c);
    let mut sq = DMatrix::<C64>::zeros(n, n);
    sq.view_mut((0, 0), (r, c)).copy_from(m.as_dmatrix());
    let sq = ComplexMatrix::from_raw(sq);
    let p = match polar_unitary(&sq) {
        Ok(u) => (&sq * &u).hermitian_part(),
        Err(_) => return vec![f64::NAN; r.min(c)],
    };
    match eig_hermitian(&p) {
        Ok(s) => s.eigenvalues.iter().take(r.min(c)).map(|l| l.max(0.0)).collect(),
        Err(_) => vec![f64::NAN; r.min(c)],
    }
}

/// Projector onto the support of a PSD matrix.
pub fn support_projector(m: &ComplexMatrix, tol: f64) -> Result<ComplexMatrix> {
    eig_hermitian(m)?.support_projector(tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{basis_vector, tensor};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn random_hermitian(n: usize, rng: &mut ChaCha20Rng) -> ComplexMatrix {
        let mut m = DMatrix::<C64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            }
        }
        ComplexMatrix::from_raw(m).hermitian_part()
    }

    fn sigma_z() -> ComplexMatrix {
        ComplexMatrix::from_real_diagonal(&[1.0, -1.0])
    }

    #[test]
    fn identity_and_pauli_z() {
        let s = eig_hermitian(&ComplexMatrix::identity(2)).unwrap();
        assert_eq!(s.eigenvalues, vec![1.0, 1.0]);

        let s = eig_hermitian(&sigma_z()).unwrap();
        assert!((s.eigenvalues[0] - 1.0).abs() < 1e-15);
        assert!((s.eigenvalues[1] + 1.0).abs() < 1e-15);
        assert!((s.eigenvector(0) - basis_vector(2, 0)).norm() < 1e-14);
        assert!((s.eigenvector(1) - basis_vector(2, 1)).norm() < 1e-14);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = ComplexMatrix::from_real_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        assert!(matches!(eig_hermitian(&m), Err(Error::NotHermitian { .. })));
        let r = ComplexMatrix::zeros(2, 3);
        assert!(matches!(eig_hermitian(&r), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn random_five_by_five_trace_identity() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let m = random_hermitian(5, &mut rng);
        let s = eig_hermitian(&m).unwrap();
        let sum: f64 = s.eigenvalues.iter().sum();
        assert!((sum - m.trace().re).abs() < 1e-10);
    }

    #[test]
    fn decomposition_invariants_on_random_matrices() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        for trial in 0..100 {
            let n = 1 + trial % 16;
            let m = random_hermitian(n, &mut rng);
            let s = eig_hermitian(&m).unwrap();
            let fro = m.frobenius_norm();
            let recon = (&s.reconstruct() - &m).frobenius_norm();
            assert!(recon <= 1e-10 * fro.max(1.0), "reconstruction {recon}");
            assert!(s.eigenvectors.unitarity_residual() <= 1e-10);
            assert!(s.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
            let sum: f64 = s.eigenvalues.iter().sum();
            let sq: f64 = s.eigenvalues.iter().map(|l| l * l).sum();
            assert!((sum - m.trace().re).abs() <= 1e-10 * fro.max(1.0));
            assert!((sq - fro * fro).abs() <= 1e-10 * (fro * fro).max(1.0));
        }
    }

    #[test]
    fn matrix_functions() {
        let r = matrix_function(&ComplexMatrix::from_real_diagonal(&[4.0, 9.0]), f64::sqrt, ZeroPolicy::Apply).unwrap();
        assert!(r.max_abs_diff(&ComplexMatrix::from_real_diagonal(&[2.0, 3.0])) < 1e-14);

        let r = matrix_function(&ComplexMatrix::identity(3), f64::ln, ZeroPolicy::Apply).unwrap();
        assert!(r.max_abs_diff(&ComplexMatrix::zeros(3, 3)) < 1e-15);

        let d = [0.5, 0.5, 0.0, 0.0];
        let r = matrix_function(&ComplexMatrix::from_real_diagonal(&d), f64::ln, ZeroPolicy::Skip).unwrap();
        // elementwise oracle with 0 log 0 := 0
        let expected: Vec<f64> = d.iter().map(|&x| if x > 0.0 { x.ln() } else { 0.0 }).collect();
        assert!(r.max_abs_diff(&ComplexMatrix::from_real_diagonal(&expected)) < 1e-14);
    }

    #[test]
    fn matrix_function_domain_errors() {
        let d = ComplexMatrix::from_real_diagonal(&[0.5, 0.5, 0.0, 0.0]);
        assert!(matches!(matrix_function(&d, f64::ln, ZeroPolicy::Apply), Err(Error::Domain { .. })));
        let neg = ComplexMatrix::from_real_diagonal(&[1.0, -0.5]);
        assert!(matches!(matrix_function(&neg, f64::sqrt, ZeroPolicy::Apply), Err(Error::Domain { .. })));
        // roundoff negatives are clipped
        let tiny = ComplexMatrix::from_real_diagonal(&[1.0, -1e-13]);
        let r = matrix_function(&tiny, f64::sqrt, ZeroPolicy::Apply).unwrap();
        assert!(r.max_abs_diff(&ComplexMatrix::from_real_diagonal(&[1.0, 0.0])) < 1e-14);
    }

    #[test]
    fn schatten_norms_of_pauli_z() {
        let z = sigma_z();
        assert!((schatten_norm(&z, NormKind::Trace) - 2.0).abs() < 1e-14);
        assert!((schatten_norm(&z, NormKind::HilbertSchmidt) - 2f64.sqrt()).abs() < 1e-14);
        assert!((schatten_norm(&z, NormKind::Operator) - 1.0).abs() < 1e-14);
        for kind in [NormKind::Trace, NormKind::HilbertSchmidt, NormKind::Operator] {
            assert_eq!(schatten_norm(&ComplexMatrix::zeros(3, 3), kind), 0.0);
        }
    }

    #[test]
    fn trace_norm_of_orthogonal_difference_is_two() {
        let w1 = ComplexMatrix::from_real_diagonal(&[0.5, 0.5, 0.0, 0.0]);
        let w2 = ComplexMatrix::from_real_diagonal(&[0.0, 0.0, 0.5, 0.5]);
        assert!((schatten_norm(&(&w1 - &w2), NormKind::Trace) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn schatten_norm_non_hermitian_uses_singular_values() {
        // |0⟩⟨1| has a single singular value 1
        let m = ComplexMatrix::unit(2, 0, 1);
        assert!((schatten_norm(&m, NormKind::Trace) - 1.0).abs() < 1e-14);
        assert!((schatten_norm(&m, NormKind::Operator) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn polar_factor_of_rank_deficient_products() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        for n in 2..8 {
            let a = random_hermitian(n, &mut rng);
            let b = random_hermitian(n, &mut rng);
            // rank one: |a₀⟩⟨b₀| scaled
            let m = ComplexMatrix::ket_bra(&a.column(0), &b.column(0));
            let u = polar_unitary(&m).unwrap();
            assert!(u.unitarity_residual() < 1e-12);
            let p = &m * &u;
            assert!(p.hermitian_residual() < 1e-14);
            let expected = a.column(0).norm() * b.column(0).norm();
            assert!((p.trace().re - expected).abs() < 1e-13 * expected.max(1.0));
            let sv = singular_values(&m);
            assert!((sv[0] - expected).abs() < 1e-12 * expected.max(1.0));
            assert!(sv[1..].iter().all(|&s| s < 1e-12));
        }
        let sv = singular_values(&ComplexMatrix::zeros(3, 3));
        assert_eq!(sv, vec![0.0; 3]);
    }

    #[test]
    fn rectangular_singular_values() {
        // [[3, 0, 0], [0, 0, 4]] has singular values 4 and 3
        let m = ComplexMatrix::from_real_rows(&[vec![3.0, 0.0, 0.0], vec![0.0, 0.0, 4.0]]).unwrap();
        let sv = singular_values(&m);
        assert_eq!(sv.len(), 2);
        assert!((sv[0] - 4.0).abs() < 1e-13 && (sv[1] - 3.0).abs() < 1e-13);
    }

    #[test]
    fn schatten_ordering_holds() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        for n in 1..10 {
            let m = random_hermitian(n, &mut rng);
            let op = schatten_norm(&m, NormKind::Operator);
            let hs = schatten_norm(&m, NormKind::HilbertSchmidt);
            let tr = schatten_norm(&m, NormKind::Trace);
            assert!(op <= hs + 1e-12 && hs <= tr + 1e-12);
        }
    }

    #[test]
    fn support_projectors() {
        let full = ComplexMatrix::from_real_diagonal(&[0.2, 0.3, 0.5]);
        let p = support_projector(&full, SUPPORT_TOL).unwrap();
        assert!(p.max_abs_diff(&ComplexMatrix::identity(3)) < 1e-12);

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let psi = ComplexVector::from_vec(vec![C64::new(s, 0.0), C64::new(0.0, s)]);
        let pure = ComplexMatrix::projector_onto(&psi);
        let p = support_projector(&pure, SUPPORT_TOL).unwrap();
        assert!(p.max_abs_diff(&pure) < 1e-12);

        let w1 = ComplexMatrix::from_real_diagonal(&[0.5, 0.5, 0.0, 0.0]);
        let p = support_projector(&w1, SUPPORT_TOL).unwrap();
        assert!(p.max_abs_diff(&ComplexMatrix::from_real_diagonal(&[1.0, 1.0, 0.0, 0.0])) < 1e-12);
        assert!((&p * &p).max_abs_diff(&p) < 1e-10);

        let bad = ComplexMatrix::from_real_diagonal(&[1.2, -0.2]);
        assert!(matches!(support_projector(&bad, SUPPORT_TOL), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn support_projector_compresses_psd_matrix() {
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        for n in 2..8 {
            let g = random_hermitian(n, &mut rng);
            // rank-deficient PSD: g g† restricted through a projector of rank n-1
            let proj =
                ComplexMatrix::from_real_diagonal(&(0..n).map(|k| if k == 0 { 0.0 } else { 1.0 }).collect::<Vec<_>>());
            let m = proj.conjugate(&(&g * &g.adjoint()));
            let p = support_projector(&m, SUPPORT_TOL).unwrap();
            let pmp = p.conjugate(&m);
            assert!(pmp.max_abs_diff(&m) <= SUPPORT_TOL * n as f64);
        }
    }

    #[test]
    fn tensor_of_projector_with_maximally_mixed() {
        let p_plus = ComplexMatrix::from_real_diagonal(&[1.0, 0.0]);
        let n = 3;
        let rho = tensor(&p_plus, &ComplexMatrix::identity(n).scale(1.0 / n as f64));
        let expected: Vec<f64> = (0..2 * n).map(|k| if k < n { 1.0 / n as f64 } else { 0.0 }).collect();
        assert!(rho.max_abs_diff(&ComplexMatrix::from_real_diagonal(&expected)) < 1e-15);
    }
}

//! Seeded sampling primitives shared by the state, channel and suite generators.
//!
//! Every random object is drawn from an explicitly owned [`ChaCha20Rng`]; there
//! is no global RNG. Per-trial generators come from [`trial_rng`], which maps
//! `(seed, index)` to an independent ChaCha stream, so parallel loops produce
//! the same draws regardless of scheduling.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::matcore::{ComplexMatrix, ComplexVector, C64};

pub type SeededRng = ChaCha20Rng;

pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Independent stream `index` of the generator seeded by `seed`.
pub fn trial_rng(seed: u64, index: u64) -> SeededRng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Derives a child seed, for APIs that take a `u64` rather than a generator.
pub fn child_seed(rng: &mut impl Rng) -> u64 {
    rng.random()
}

pub fn complex_gaussian(rng: &mut impl Rng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

/// Matrix of i.i.d. complex standard normals.
pub fn ginibre(rows: usize, cols: usize, rng: &mut impl Rng) -> ComplexMatrix {
    // column-major fill order, fixed for reproducibility
    let m = DMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng));
    ComplexMatrix::from_raw(m)
}

/// Uniformly random unit vector in `C^n`.
pub fn haar_vector(n: usize, rng: &mut impl Rng) -> ComplexVector {
    let v = ComplexVector::from_fn(n, |_, _| complex_gaussian(rng));
    let norm = v.norm();
    v / C64::new(norm, 0.0)
}

/// Haar-random unitary: QR of a Ginibre matrix with the diagonal of R made positive.
pub fn haar_unitary(n: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let g = ginibre(n, n, rng).into_dmatrix();
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let norm = d.norm();
        if norm > 0.0 {
            let phase = d / norm;
            let mut col = q.column_mut(j);
            col *= phase;
        }
    }
    ComplexMatrix::from_raw(q)
}

/// Flat Dirichlet sample (uniform on the probability simplex).
pub fn dirichlet(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

/// Uniform integer in the inclusive range.
pub fn pick(rng: &mut impl Rng, lo: usize, hi: usize) -> usize {
    rng.random_range(lo..=hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: u64 = trial_rng(42, 3).random();
        let b: u64 = trial_rng(42, 3).random();
        let c: u64 = trial_rng(42, 4).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = rng_from_seed(1);
        for n in 1..8 {
            let u = haar_unitary(n, &mut rng);
            assert!(u.unitarity_residual() < 1e-12);
        }
    }

    #[test]
    fn haar_first_column_overlap_moment() {
        // E |⟨e1|V e1⟩|^2 = 1/n; 3σ band from the Beta(1, n-1) variance
        let n = 3;
        let k = 20_000;
        let mut rng = rng_from_seed(77);
        let vals: Vec<f64> = (0..k).map(|_| haar_unitary(n, &mut rng).get(0, 0).norm_sqr()).collect();
        let mean = vals.iter().sum::<f64>() / k as f64;
        let var_exact = (n as f64 - 1.0) / (n as f64 * n as f64 * (n as f64 + 1.0));
        let band = 3.0 * (var_exact / k as f64).sqrt();
        assert!((mean - 1.0 / n as f64).abs() < band, "mean {mean}");
    }

    #[test]
    fn dirichlet_is_normalized() {
        let mut rng = rng_from_seed(2);
        let p = dirichlet(6, &mut rng);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|&x| x >= 0.0));
    }
}

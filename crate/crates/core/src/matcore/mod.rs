//! Dense complex linear algebra for small (dim ≤ 64) operators.
//!
//! [`ComplexMatrix`] is the numeric carrier for every state, Kraus operator and
//! observable in the crate. Hermitian problems go through [`eig_hermitian`];
//! everything spectral (matrix functions, Schatten norms, support projectors)
//! is built on top of that decomposition.

mod io;
mod spectral;

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{dim_mismatch, Error, Result};

pub use io::MatrixJson;
pub use spectral::{
    eig_hermitian, matrix_function, polar_unitary, schatten_norm, singular_values, support_projector, NormKind,
    SpectralDecomposition, ZeroPolicy,
};

pub type C64 = Complex64;
pub type ComplexVector = DVector<C64>;

/// Absolute eigenvalue threshold (after scaling by `max(1, ‖m‖_op)`) below
/// which an eigenvalue is treated as outside the support.
pub const SUPPORT_TOL: f64 = 1e-10;

/// Relative Frobenius tolerance for the Hermitian precondition.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Dense complex matrix, row-major in its exchange format.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<C64>);

impl ComplexMatrix {
    /// Builds a matrix from row-major entries.
    pub fn new(rows: usize, cols: usize, entries: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(dim_mismatch("positive dimensions", format!("{rows}x{cols}")));
        }
        if entries.len() != rows * cols {
            return Err(dim_mismatch(rows * cols, entries.len()));
        }
        Self::from_dmatrix(DMatrix::from_row_slice(rows, cols, &entries))
    }

    /// Wraps an nalgebra matrix, rejecting NaN/Inf entries.
    pub fn from_dmatrix(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() == 0 || m.ncols() == 0 {
            return Err(dim_mismatch("positive dimensions", format!("{}x{}", m.nrows(), m.ncols())));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self(m))
    }

    pub(crate) fn from_raw(m: DMatrix<C64>) -> Self {
        Self(m)
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(dim_mismatch("rectangular rows", "ragged rows"));
        }
        let entries = rows.iter().flatten().map(|&x| C64::new(x, 0.0)).collect();
        Self::new(r, c, entries)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = DMatrix::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(d, 0.0);
        }
        Self(m)
    }

    /// `|a⟩⟨b|`
    pub fn ket_bra(a: &ComplexVector, b: &ComplexVector) -> Self {
        Self(a * b.adjoint())
    }

    /// `|v⟩⟨v|`
    pub fn projector_onto(v: &ComplexVector) -> Self {
        Self::ket_bra(v, v)
    }

    /// The matrix unit `|i⟩⟨j|` of size `n×n`.
    pub fn unit(n: usize, i: usize, j: usize) -> Self {
        let mut m = DMatrix::zeros(n, n);
        m[(i, j)] = C64::new(1.0, 0.0);
        Self(m)
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    /// Side length; only meaningful for square matrices.
    pub fn dim(&self) -> usize {
        self.rows()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    pub fn as_dmatrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_dmatrix(self) -> DMatrix<C64> {
        self.0
    }

    pub fn column(&self, j: usize) -> ComplexVector {
        self.0.column(j).into_owned()
    }

    pub fn entries_row_major(&self) -> Vec<C64> {
        (0..self.rows()).flat_map(|i| (0..self.cols()).map(move |j| (i, j))).map(|(i, j)| self.0[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn trace(&self) -> C64 {
        self.0.diagonal().iter().sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.map(|z| z * s))
    }

    pub fn scale_complex(&self, s: C64) -> Self {
        Self(&self.0 * s)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.0.shape(), other.0.shape(), "shape mismatch");
        self.0.iter().zip(other.0.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// `‖m − m†‖_F`
    pub fn hermitian_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        (&self.0 - self.0.adjoint()).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian_residual() <= HERMITIAN_TOL * self.frobenius_norm().max(1.0)
    }

    /// `(m + m†)/2`
    pub fn hermitian_part(&self) -> Self {
        Self((&self.0 + self.0.adjoint()) * C64::new(0.5, 0.0))
    }

    /// `max |(U†U − I)_{ij}|`
    pub fn unitarity_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let g = Self(self.0.adjoint() * &self.0);
        g.max_abs_diff(&Self::identity(self.rows()))
    }

    pub fn mul_vec(&self, v: &ComplexVector) -> ComplexVector {
        &self.0 * v
    }

    /// `A X A†`
    pub fn conjugate(&self, x: &Self) -> Self {
        Self(&self.0 * &x.0 * self.0.adjoint())
    }

    /// `[a, b] = ab − ba`
    pub fn commutator(&self, other: &Self) -> Self {
        Self(&self.0 * &other.0 - &other.0 * &self.0)
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows(), self.cols())?;
        for i in 0..self.rows() {
            write!(f, "  ")?;
            for j in 0..self.cols() {
                let z = self.0[(i, j)];
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait<&ComplexMatrix> for &ComplexMatrix {
            type Output = ComplexMatrix;
            fn $method(self, rhs: &ComplexMatrix) -> ComplexMatrix {
                ComplexMatrix(&self.0 $op &rhs.0)
            }
        }
        impl $trait<ComplexMatrix> for ComplexMatrix {
            type Output = ComplexMatrix;
            fn $method(self, rhs: ComplexMatrix) -> ComplexMatrix {
                ComplexMatrix(self.0 $op rhs.0)
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        ComplexMatrix(-&self.0)
    }
}

/// Kronecker product `a ⊗ b`.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix(a.0.kronecker(&b.0))
}

pub fn tensor_vec(a: &ComplexVector, b: &ComplexVector) -> ComplexVector {
    a.kronecker(b)
}

/// Which factor of `H_S ⊗ H_E` survives a partial trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Keep {
    System,
    Environment,
}

/// Partial trace of an operator on `C^{d_S} ⊗ C^{d_E}` (system index major).
pub fn partial_trace(m: &ComplexMatrix, dims: (usize, usize), keep: Keep) -> Result<ComplexMatrix> {
    let (ds, de) = dims;
    if ds == 0 || de == 0 || !m.is_square() || m.rows() != ds * de {
        return Err(dim_mismatch(format!("square {}x{}", ds * de, ds * de), format!("{}x{}", m.rows(), m.cols())));
    }
    let a = &m.0;
    let out = match keep {
        Keep::System => DMatrix::from_fn(ds, ds, |i, j| (0..de).map(|e| a[(i * de + e, j * de + e)]).sum()),
        Keep::Environment => DMatrix::from_fn(de, de, |i, j| (0..ds).map(|s| a[(s * de + i, s * de + j)]).sum()),
    };
    Ok(ComplexMatrix(out))
}

/// Standard basis vector `e_i` in `C^n`.
pub fn basis_vector(n: usize, i: usize) -> ComplexVector {
    let mut v = ComplexVector::zeros(n);
    v[i] = C64::new(1.0, 0.0);
    v
}

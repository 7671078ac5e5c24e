//! Liouville-space primitives: density matrices, vectorization, superoperators.
//!
//! Density matrices are vectorized row-major, so an `N x N` matrix becomes the
//! length-`N^2` column `(rho_11, .., rho_1N, rho_21, .., rho_NN)`. Under that
//! convention `vec(A X B) = (A (x) B^T) vec(X)`, and the commutator with a
//! Hamiltonian `H` is represented by the superoperator `H (x) I - I (x) H^T`.

use nalgebra::ComplexField;
use num_complex::Complex;
use thiserror::Error;

use crate::scalar::{cr, RealScalar};
use crate::{CMatrix, CVector};

/// Errors from Liouville-space constructors and checks.
#[derive(Debug, Error)]
pub enum LiouvilleError {
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("vector length {len} is not a perfect square")]
    NotPerfectSquare { len: usize },
    #[error("superoperator side {side} is not a perfect square")]
    SideNotPerfectSquare { side: usize },
    #[error("matrix is not Hermitian: max |A - A^H| entry is {deviation:.3e}")]
    NotHermitian { deviation: f64 },
    #[error("trace deviates from 1 by {deviation:.3e}")]
    TraceNotOne { deviation: f64 },
    #[error("matrix has eigenvalue {value:.3e} below the positivity tolerance")]
    NotPositive { value: f64 },
    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },
}

/// Largest entry modulus, used for tolerance checks and diagnostics.
pub(crate) fn max_abs<T: RealScalar>(m: &CMatrix<T>) -> T {
    m.iter()
        .map(|c| c.modulus())
        .fold(T::zero(), |a, b| if b > a { b } else { a })
}

/// Max deviation from Hermitian symmetry.
pub(crate) fn hermiticity_deviation<T: RealScalar>(m: &CMatrix<T>) -> T {
    let mut dev = T::zero();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let d = (m[(i, j)] - m[(j, i)].conj()).modulus();
            if d > dev {
                dev = d;
            }
        }
    }
    dev
}

fn integer_sqrt(n: usize) -> Option<usize> {
    let r = (n as f64).sqrt().round() as usize;
    (r * r == n).then_some(r)
}

/// System density matrix (or any square operator carried in matrix form).
///
/// Construction only enforces squareness; the physical-state checks are
/// explicit methods so intermediate quantities (e.g. devectorized circuit
/// output) can use the same type.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix<T: RealScalar> {
    mat: CMatrix<T>,
}

impl<T: RealScalar> DensityMatrix<T> {
    /// Wrap a square matrix.
    pub fn new(mat: CMatrix<T>) -> Result<Self, LiouvilleError> {
        if mat.nrows() != mat.ncols() {
            return Err(LiouvilleError::NotSquare {
                rows: mat.nrows(),
                cols: mat.ncols(),
            });
        }
        Ok(Self { mat })
    }

    /// Projector onto a (normalized copy of a) pure state.
    pub fn pure(ket: &CVector<T>) -> Self {
        let n = ket.norm();
        let psi = ket / cr(n);
        Self {
            mat: &psi * psi.adjoint(),
        }
    }

    /// Hilbert-space dimension.
    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix<T> {
        self.mat
    }

    pub fn trace(&self) -> Complex<T> {
        self.mat.trace()
    }

    /// Frobenius (Hilbert-Schmidt) norm `sqrt(sum |rho_ij|^2)`.
    pub fn frobenius_norm(&self) -> T {
        frobenius_norm(&self.mat)
    }

    /// Check Hermitian symmetry within `tol`.
    pub fn check_hermitian(&self, tol: T) -> Result<(), LiouvilleError> {
        let dev = hermiticity_deviation(&self.mat);
        if dev > tol {
            return Err(LiouvilleError::NotHermitian {
                deviation: dev.as_f64(),
            });
        }
        Ok(())
    }

    /// Check unit trace within `tol`.
    pub fn check_unit_trace(&self, tol: T) -> Result<(), LiouvilleError> {
        let dev = (self.trace() - cr(T::one())).modulus();
        if dev > tol {
            return Err(LiouvilleError::TraceNotOne {
                deviation: dev.as_f64(),
            });
        }
        Ok(())
    }

    /// Check positive semidefiniteness: no eigenvalue below `-tol`.
    pub fn check_positive(&self, tol: T) -> Result<(), LiouvilleError> {
        let eig = self.mat.clone().symmetric_eigen();
        let min = eig.eigenvalues.iter().copied().fold(T::zero(), |a, b| if b < a { b } else { a });
        if min < -tol {
            return Err(LiouvilleError::NotPositive { value: min.as_f64() });
        }
        Ok(())
    }
}

/// Row-major vectorized density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LiouvilleVector<T: RealScalar> {
    v: CVector<T>,
    ne: usize,
}

impl<T: RealScalar> LiouvilleVector<T> {
    /// Wrap a column vector whose length is a perfect square.
    pub fn new(v: CVector<T>) -> Result<Self, LiouvilleError> {
        let ne = integer_sqrt(v.len()).ok_or(LiouvilleError::NotPerfectSquare { len: v.len() })?;
        Ok(Self { v, ne })
    }

    /// Side length of the matrix this vector unfolds to.
    pub fn ne(&self) -> usize {
        self.ne
    }

    pub fn vector(&self) -> &CVector<T> {
        &self.v
    }

    pub fn into_vector(self) -> CVector<T> {
        self.v
    }

    /// Euclidean norm; equals the Frobenius norm of the unfolded matrix.
    pub fn norm(&self) -> T {
        self.v.norm()
    }
}

/// Linear map on vectorized density matrices (an `N^2 x N^2` matrix).
#[derive(Debug, Clone, PartialEq)]
pub struct SuperOperator<T: RealScalar> {
    mat: CMatrix<T>,
    ne: usize,
}

impl<T: RealScalar> SuperOperator<T> {
    /// Wrap a square matrix whose side is a perfect square.
    pub fn new(mat: CMatrix<T>) -> Result<Self, LiouvilleError> {
        if mat.nrows() != mat.ncols() {
            return Err(LiouvilleError::NotSquare {
                rows: mat.nrows(),
                cols: mat.ncols(),
            });
        }
        let ne = integer_sqrt(mat.nrows())
            .ok_or(LiouvilleError::SideNotPerfectSquare { side: mat.nrows() })?;
        Ok(Self { mat, ne })
    }

    /// Identity map on an `ne`-level system.
    pub fn identity(ne: usize) -> Self {
        Self {
            mat: CMatrix::identity(ne * ne, ne * ne),
            ne,
        }
    }

    /// Hilbert-space dimension `N` of the underlying system.
    pub fn ne(&self) -> usize {
        self.ne
    }

    /// Liouville-space dimension `N^2`.
    pub fn dim(&self) -> usize {
        self.ne * self.ne
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix<T> {
        self.mat
    }

    /// Apply to a vectorized density matrix.
    pub fn apply(&self, v: &LiouvilleVector<T>) -> Result<LiouvilleVector<T>, LiouvilleError> {
        if v.vector().len() != self.dim() {
            return Err(LiouvilleError::DimensionMismatch {
                context: format!(
                    "superoperator dim {} applied to vector of length {}",
                    self.dim(),
                    v.vector().len()
                ),
            });
        }
        Ok(LiouvilleVector {
            v: &self.mat * v.vector(),
            ne: self.ne,
        })
    }

    /// Whether the map preserves the trace of every input within `tol`.
    ///
    /// Column `(k,l)` of the matrix is the image of the basis operator
    /// `|k><l|`, so the sum of its diagonal components must be `delta_kl`.
    pub fn is_trace_preserving(&self, tol: T) -> bool {
        let ne = self.ne;
        for k in 0..ne {
            for l in 0..ne {
                let col = k * ne + l;
                let mut sum = Complex::new(T::zero(), T::zero());
                for j in 0..ne {
                    sum += self.mat[(j * ne + j, col)];
                }
                let expect = if k == l { T::one() } else { T::zero() };
                if (sum - cr(expect)).modulus() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// Whether the map sends Hermitian inputs to Hermitian outputs within `tol`.
    ///
    /// Elementwise this is `M[(ij),(kl)] = conj(M[(ji),(lk)])`.
    pub fn is_hermiticity_preserving(&self, tol: T) -> bool {
        let ne = self.ne;
        for i in 0..ne {
            for j in 0..ne {
                for k in 0..ne {
                    for l in 0..ne {
                        let a = self.mat[(i * ne + j, k * ne + l)];
                        let b = self.mat[(j * ne + i, l * ne + k)].conj();
                        if (a - b).modulus() > tol {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }
}

/// Unfold a density matrix into its row-major Liouville vector.
pub fn vectorize<T: RealScalar>(rho: &DensityMatrix<T>) -> LiouvilleVector<T> {
    let n = rho.dim();
    let mut v = CVector::zeros(n * n);
    for i in 0..n {
        for j in 0..n {
            v[i * n + j] = rho.matrix()[(i, j)];
        }
    }
    LiouvilleVector { v, ne: n }
}

/// Fold a Liouville vector back into a matrix. Exact inverse of [`vectorize`].
pub fn devectorize<T: RealScalar>(v: &LiouvilleVector<T>) -> DensityMatrix<T> {
    let n = v.ne();
    let mut mat = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            mat[(i, j)] = v.vector()[i * n + j];
        }
    }
    DensityMatrix { mat }
}

/// Frobenius norm of an arbitrary complex matrix.
pub fn frobenius_norm<T: RealScalar>(m: &CMatrix<T>) -> T {
    m.iter()
        .map(|c| c.modulus_squared())
        .fold(T::zero(), |a, b| a + b)
        .sqrt()
}

/// Operator (spectral) norm: the largest singular value, via full SVD.
pub fn operator_norm<T: RealScalar>(m: &CMatrix<T>) -> T {
    if m.is_empty() {
        return T::zero();
    }
    m.clone().svd(false, false).singular_values.max()
}

/// Commutator superoperator `H (x) I - I (x) H^T` of a Hermitian `H`.
pub fn liouvillian_of<T: RealScalar>(h: &CMatrix<T>) -> Result<SuperOperator<T>, LiouvilleError> {
    if h.nrows() != h.ncols() {
        return Err(LiouvilleError::NotSquare {
            rows: h.nrows(),
            cols: h.ncols(),
        });
    }
    let scale = if max_abs(h) > T::one() { max_abs(h) } else { T::one() };
    let dev = hermiticity_deviation(h);
    if dev > T::lit(1e-12) * scale {
        return Err(LiouvilleError::NotHermitian {
            deviation: dev.as_f64(),
        });
    }
    let n = h.nrows();
    let eye = CMatrix::<T>::identity(n, n);
    let mat = h.kronecker(&eye) - eye.kronecker(&h.transpose());
    SuperOperator::new(mat)
}

/// `V exp(z * diag(lambda)) V^H` for Hermitian `h = V diag(lambda) V^H`.
///
/// With `z = -i t` this is the unitary evolution factor `exp(-i h t)`.
pub fn hermitian_exp_scaled<T: RealScalar>(h: &CMatrix<T>, z: Complex<T>) -> CMatrix<T> {
    let eig = h.clone().symmetric_eigen();
    let n = h.nrows();
    let mut right = eig.eigenvectors.adjoint();
    for (k, lam) in eig.eigenvalues.iter().enumerate() {
        let phase = (z * cr(*lam)).exp();
        for j in 0..n {
            right[(k, j)] *= phase;
        }
    }
    &eig.eigenvectors * right
}

/// Superoperator `exp(-i L t)` for the commutator map `L` of Hermitian `h`.
pub fn evolution_superoperator<T: RealScalar>(
    h: &CMatrix<T>,
    t: T,
) -> Result<SuperOperator<T>, LiouvilleError> {
    let l = liouvillian_of(h)?;
    // L is itself Hermitian as a matrix when h is Hermitian.
    let mat = hermitian_exp_scaled(l.matrix(), Complex::new(T::zero(), -t));
    SuperOperator::new(mat)
}

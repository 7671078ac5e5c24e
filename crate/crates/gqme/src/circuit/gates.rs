//! Matrix forms of the elementary gate set and qubit-lifting helpers.
//!
//! Convention throughout: qubit 0 is the least-significant bit of a basis
//! state's index, so a gate on qubit `q` pairs indices differing in bit `q`.

use nalgebra::Matrix2;
use num_complex::Complex;

use crate::scalar::{c, cr, RealScalar};
use crate::CMatrix;

/// 2x2 gate block used by the transpiler's intermediate representation.
pub type Block<T> = Matrix2<Complex<T>>;

/// `RZ(lambda) = diag(e^{-i lambda/2}, e^{i lambda/2})`.
pub fn rz_block<T: RealScalar>(lambda: T) -> Block<T> {
    let half = lambda * T::lit(0.5);
    Block::new(
        c(half.cos(), -half.sin()),
        Complex::new(T::zero(), T::zero()),
        Complex::new(T::zero(), T::zero()),
        c(half.cos(), half.sin()),
    )
}

/// `sqrt(X) = [[1+i, 1-i], [1-i, 1+i]] / 2`; two applications give `X`.
pub fn sqrt_x_block<T: RealScalar>() -> Block<T> {
    let h = T::lit(0.5);
    Block::new(c(h, h), c(h, -h), c(h, -h), c(h, h))
}

/// `RY(theta)`, the real rotation used inside multiplexed-rotation ladders.
pub fn ry_block<T: RealScalar>(theta: T) -> Block<T> {
    let half = theta * T::lit(0.5);
    Block::new(
        cr(half.cos()),
        cr(-half.sin()),
        cr(half.sin()),
        cr(half.cos()),
    )
}

/// Dense `RZ` as a dynamic matrix (for direct comparisons in tests).
pub fn rz_matrix<T: RealScalar>(lambda: T) -> CMatrix<T> {
    CMatrix::from_fn(2, 2, |i, j| rz_block(lambda)[(i, j)])
}

/// Dense `sqrt(X)` as a dynamic matrix.
pub fn sqrt_x_matrix<T: RealScalar>() -> CMatrix<T> {
    CMatrix::from_fn(2, 2, |i, j| sqrt_x_block::<T>()[(i, j)])
}

/// Dense `CX` with control `q0` and target `q1`: basis indices 1 and 3 swap.
pub fn cx_matrix<T: RealScalar>() -> CMatrix<T> {
    let mut m = CMatrix::<T>::zeros(4, 4);
    m[(0, 0)] = cr(T::one());
    m[(2, 2)] = cr(T::one());
    m[(3, 1)] = cr(T::one());
    m[(1, 3)] = cr(T::one());
    m
}

/// Lift a 2x2 block to the full register: `I ⊗ m ⊗ I` with `m` at qubit `q`.
pub fn lift_one_qubit<T: RealScalar>(m: &Block<T>, q: usize, n_qubits: usize) -> CMatrix<T> {
    let dim = 1usize << n_qubits;
    let bit = 1usize << q;
    let mut out = CMatrix::<T>::zeros(dim, dim);
    for col in 0..dim {
        let cbit = usize::from(col & bit != 0);
        for rbit in 0..2 {
            let row = (col & !bit) | (rbit << q);
            out[(row, col)] = m[(rbit, cbit)];
        }
    }
    out
}

/// Lift `CX(control, target)` to the full register as a permutation matrix.
pub fn lift_cx<T: RealScalar>(control: usize, target: usize, n_qubits: usize) -> CMatrix<T> {
    let dim = 1usize << n_qubits;
    let (cbit, tbit) = (1usize << control, 1usize << target);
    let mut out = CMatrix::<T>::zeros(dim, dim);
    for col in 0..dim {
        let row = if col & cbit != 0 { col ^ tbit } else { col };
        out[(row, col)] = cr(T::one());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liouville::max_abs;
    use crate::Mat64;

    #[test]
    fn sqrt_x_squares_to_x() {
        let sx = sqrt_x_matrix::<f64>();
        let x = Mat64::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(1.0), cr(0.0)]);
        assert!(max_abs(&(&sx * &sx - x)) < 1e-15);
    }

    #[test]
    fn rz_of_pi_is_the_phase_pair() {
        let m = rz_matrix(std::f64::consts::PI);
        assert!((m[(0, 0)] - c(0.0, -1.0)).norm() < 1e-15);
        assert!((m[(1, 1)] - c(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn cx_swaps_one_and_three() {
        let m = cx_matrix::<f64>();
        assert_eq!(m[(3, 1)], cr(1.0));
        assert_eq!(m[(1, 3)], cr(1.0));
        assert_eq!(m[(0, 0)], cr(1.0));
        assert_eq!(m[(2, 2)], cr(1.0));
        assert_eq!(m[(1, 1)], cr(0.0));
    }

    #[test]
    fn lifted_cx_matches_the_printed_matrix() {
        assert_eq!(lift_cx::<f64>(0, 1, 2), cx_matrix());
    }

    #[test]
    fn lifting_respects_bit_significance() {
        // RZ on qubit 1 of a 2-qubit register phases by bit 1 of the index.
        let lifted = lift_one_qubit(&rz_block(1.0_f64), 1, 2);
        for idx in 0..4 {
            let expect = if idx & 2 == 0 {
                c(0.5f64.cos(), -0.5f64.sin())
            } else {
                c(0.5f64.cos(), 0.5f64.sin())
            };
            assert!((lifted[(idx, idx)] - expect).norm() < 1e-15);
        }
    }
}

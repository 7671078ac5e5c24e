//! Unitary dilations of contraction superoperators.
//!
//! A propagated superoperator is generally not unitary, so it cannot be run
//! as a circuit directly. The fix is classical operator theory: scale the
//! matrix into a contraction `A = G / n_c` with `n_c = max(1, ||G||_O)`, then
//! embed it as the top-left block of a genuinely unitary matrix,
//!
//! ```text
//! U = | A      D_A'  |          D_A  = sqrt(I - A' A)
//!     | D_A   -A'    |          D_A' = sqrt(I - A A')
//! ```
//!
//! (primes denote adjoints). Applying `U` to `(v, 0)` yields `(A v, D_A v)`:
//! the first block carries the physics, the second absorbs the lost norm.
//!
//! Products of such 1-dilations do not dilate products, which is what the
//! Kraus pipeline needs; [`dilate_2`] therefore also provides the 3n-by-3n
//! Schaffer form whose extra zero column makes the top-left block of
//! `dilate_2(B) * dilate_2(A)` exactly `B * A`.
//!
//! Both dilations draw their defect blocks from one shared SVD of `A`
//! (`A = W S V'` gives `D_A = V C V'` and `D_A' = W C W'` with
//! `C = sqrt(I - S^2)`), which keeps the assembled matrix unitary to a few
//! ulps instead of the ~1e-8 that two independent matrix square roots would
//! allow. The standalone [`defect`] helper keeps the textbook
//! eigendecomposition route since it is occasionally wanted on its own.

use nalgebra::DVector;
use rayon::prelude::*;
use thiserror::Error;

use crate::liouville::{max_abs, operator_norm, SuperOperator};
use crate::scalar::{cr, RealScalar};
use crate::series::{PropagatorSeries, UnitarySeries};
use crate::CMatrix;

/// How far a singular value may exceed 1 before the input is rejected.
pub const CONTRACTION_TOL: f64 = 1e-10;

/// Eigenvalues of `I - A'A` above `-CLAMP_TOL` are treated as roundoff zeros.
pub const CLAMP_TOL: f64 = 1e-12;

/// Errors from the dilation constructions.
#[derive(Debug, Error)]
pub enum DilationError {
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("operator norm {norm} exceeds 1 beyond tolerance; not a contraction")]
    NotContraction { norm: f64 },
}

/// A superoperator rescaled into a contraction, with the factor that undoes it.
#[derive(Debug, Clone)]
pub struct ContractionResult<T: RealScalar> {
    pub g_prime: SuperOperator<T>,
    pub n_c: T,
}

/// A unitary dilation and the normalization factor its readout must restore.
#[derive(Debug, Clone)]
pub struct DilatedUnitary<T: RealScalar> {
    pub matrix: CMatrix<T>,
    pub n_c: T,
}

impl<T: RealScalar> DilatedUnitary<T> {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Scale `G` by `n_c = max(1, ||G||_O)` so the result is a contraction.
///
/// A matrix already inside the unit ball is passed through untouched.
pub fn contraction_normalize<T: RealScalar>(g: &SuperOperator<T>) -> ContractionResult<T> {
    let norm = operator_norm(g.matrix());
    if norm <= T::one() {
        return ContractionResult {
            g_prime: g.clone(),
            n_c: T::one(),
        };
    }
    let scaled = g.matrix() / cr(norm);
    ContractionResult {
        g_prime: SuperOperator::new(scaled).expect("scaling keeps the shape"),
        n_c: norm,
    }
}

/// Defect operator `sqrt(I - A'A)` of a contraction.
///
/// The Hermitian square root is taken by eigendecomposition; eigenvalues
/// pushed slightly negative by roundoff are clamped to zero. Inputs whose
/// norm exceeds 1 beyond [`CONTRACTION_TOL`] are rejected.
pub fn defect<T: RealScalar>(a: &CMatrix<T>) -> Result<CMatrix<T>, DilationError> {
    if a.nrows() != a.ncols() {
        return Err(DilationError::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    let n = a.nrows();
    let mut h = CMatrix::<T>::identity(n, n) - a.adjoint() * a;
    // Symmetrize before the eigendecomposition; the product above is
    // Hermitian only up to roundoff.
    h = (&h + h.adjoint()) * cr(T::lit(0.5));
    let eig = h.symmetric_eigen();
    let min = eig.eigenvalues.min();
    if min < -T::lit(3.0 * CONTRACTION_TOL) {
        // min eigenvalue of I - A'A is 1 - ||A||^2.
        let norm = (T::one() - min).sqrt();
        return Err(DilationError::NotContraction {
            norm: norm.as_f64(),
        });
    }
    let roots = DVector::from_iterator(
        n,
        eig.eigenvalues.iter().map(|&l| {
            debug_assert!(l >= -T::lit(CLAMP_TOL) || l >= min);
            cr(if l > T::zero() { l.sqrt() } else { T::zero() })
        }),
    );
    let scaled = &eig.eigenvectors * CMatrix::from_diagonal(&roots);
    Ok(scaled * eig.eigenvectors.adjoint())
}

/// Shared SVD factors for the two defect blocks of a dilation:
/// `D_A = V C V'` and `D_{A'} = W C W'` with `C = sqrt(I - S^2)`.
struct DefectPair<T: RealScalar> {
    d_a: CMatrix<T>,
    d_a_dag: CMatrix<T>,
}

fn defect_pair<T: RealScalar>(a: &CMatrix<T>) -> Result<DefectPair<T>, DilationError> {
    if a.nrows() != a.ncols() {
        return Err(DilationError::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    let n = a.nrows();
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if smax > T::one() + T::lit(CONTRACTION_TOL) {
        return Err(DilationError::NotContraction {
            norm: smax.as_f64(),
        });
    }
    let c = DVector::from_iterator(
        n,
        svd.singular_values.iter().map(|&s| {
            let rem = T::one() - s * s;
            cr(if rem > T::zero() { rem.sqrt() } else { T::zero() })
        }),
    );
    let w = svd.u.expect("svd was computed with u");
    let v = svd.v_t.expect("svd was computed with v_t").adjoint();
    let scale = CMatrix::from_diagonal(&c);
    let d_a = &v * &scale * v.adjoint();
    let d_a_dag = &w * &scale * w.adjoint();
    Ok(DefectPair { d_a, d_a_dag })
}

/// Sz.-Nagy single-step dilation `[[A, D_{A'}], [D_A, -A']]` of a contraction.
///
/// The top-left block is a verbatim copy of the input. Pass the `n_c` the
/// contraction was normalized by (1 if it was already a contraction).
pub fn dilate_1<T: RealScalar>(a: &CMatrix<T>, n_c: T) -> Result<DilatedUnitary<T>, DilationError> {
    let pair = defect_pair(a)?;
    let n = a.nrows();
    let mut u = CMatrix::<T>::zeros(2 * n, 2 * n);
    u.view_mut((0, 0), (n, n)).copy_from(a);
    u.view_mut((0, n), (n, n)).copy_from(&pair.d_a_dag);
    u.view_mut((n, 0), (n, n)).copy_from(&pair.d_a);
    u.view_mut((n, n), (n, n)).copy_from(&(-a.adjoint()));
    Ok(DilatedUnitary { matrix: u, n_c })
}

/// Schaffer-form dilation `[[A, 0, D_{A'}], [D_A, 0, -A'], [0, I, 0]]`.
///
/// Unlike the single-step form, the zero middle column makes products
/// compose: the top-left block of `dilate_2(B).matrix * dilate_2(A).matrix`
/// is exactly `B * A`, which is what chained channel factors require.
pub fn dilate_2<T: RealScalar>(a: &CMatrix<T>, n_c: T) -> Result<DilatedUnitary<T>, DilationError> {
    let pair = defect_pair(a)?;
    let n = a.nrows();
    let mut u = CMatrix::<T>::zeros(3 * n, 3 * n);
    u.view_mut((0, 0), (n, n)).copy_from(a);
    u.view_mut((0, 2 * n), (n, n)).copy_from(&pair.d_a_dag);
    u.view_mut((n, 0), (n, n)).copy_from(&pair.d_a);
    u.view_mut((n, 2 * n), (n, n)).copy_from(&(-a.adjoint()));
    u.view_mut((2 * n, n), (n, n))
        .copy_from(&CMatrix::identity(n, n));
    Ok(DilatedUnitary { matrix: u, n_c })
}

/// Pad a dilated unitary with an identity block up to the next power of two,
/// so it can act on a whole-qubit register.
pub fn embed_pow2<T: RealScalar>(u: &DilatedUnitary<T>) -> DilatedUnitary<T> {
    let dim = u.dim();
    let padded = dim.next_power_of_two();
    if padded == dim {
        return u.clone();
    }
    let mut m = CMatrix::<T>::identity(padded, padded);
    m.view_mut((0, 0), (dim, dim)).copy_from(&u.matrix);
    DilatedUnitary {
        matrix: m,
        n_c: u.n_c,
    }
}

/// Whether a dilated series shares one normalization factor or scales each
/// step by its own norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NcMode {
    /// Each step is normalized by its own operator norm.
    #[default]
    PerStep,
    /// All steps share `max_n ||G(t_n)||_O`, so readout scaling is uniform.
    Global,
}

/// Dilate every step of a propagated series, padding to a power of two.
pub fn dilate_series<T: RealScalar>(
    series: &PropagatorSeries<T>,
    mode: NcMode,
) -> Result<UnitarySeries<T>, DilationError> {
    let ne = series.g.first().map_or(0, |g| g.ne());
    let global = match mode {
        NcMode::PerStep => None,
        NcMode::Global => {
            let worst = series
                .g
                .iter()
                .map(|g| operator_norm(g.matrix()))
                .fold(T::one(), |acc, n| if n > acc { n } else { acc });
            Some(worst)
        }
    };
    let dilated: Result<Vec<DilatedUnitary<T>>, DilationError> = series
        .g
        .par_iter()
        .map(|g| {
            let (a, n_c) = match global {
                Some(n_c) => (g.matrix() / cr(n_c), n_c),
                None => {
                    let c = contraction_normalize(g);
                    (c.g_prime.into_matrix(), c.n_c)
                }
            };
            Ok(embed_pow2(&dilate_1(&a, n_c)?))
        })
        .collect();
    let dilated = dilated?;
    Ok(UnitarySeries {
        dt: series.dt,
        ne,
        u: dilated.iter().map(|d| d.matrix.clone()).collect(),
        n_c: dilated.iter().map(|d| d.n_c).collect(),
    })
}

/// Max-entry deviation of `U'U` from the identity; the unitarity figure
/// quoted in tests and diagnostics.
pub fn unitarity_deviation<T: RealScalar>(u: &CMatrix<T>) -> T {
    let n = u.nrows();
    max_abs(&(u.adjoint() * u - CMatrix::<T>::identity(n, n)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liouville::vectorize;
    use crate::scalar::c;
    use crate::spinboson::sigma_z;
    use crate::{liouville::DensityMatrix, CVector, Mat64, Vec64};
    use proptest::prelude::*;

    fn pseudo_random_matrix(n: usize, seed: u64) -> Mat64 {
        let mut s = seed.max(1);
        let mut next = move || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            ((s >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        };
        Mat64::from_fn(n, n, |_, _| c(next(), next()))
    }

    fn random_contraction(n: usize, seed: u64, margin: f64) -> Mat64 {
        let m = pseudo_random_matrix(n, seed);
        let norm = operator_norm(&m);
        m / cr(norm / margin)
    }

    #[test]
    fn already_a_contraction_passes_through() {
        let g = SuperOperator::new(Mat64::identity(4, 4) * cr(0.5)).unwrap();
        let res = contraction_normalize(&g);
        assert_eq!(res.n_c, 1.0);
        assert_eq!(res.g_prime.matrix(), g.matrix());
    }

    #[test]
    fn double_identity_is_halved() {
        let g = SuperOperator::new(Mat64::identity(4, 4) * cr(2.0)).unwrap();
        let res = contraction_normalize(&g);
        assert!((res.n_c - 2.0).abs() < 1e-12);
        assert!(max_abs(&(res.g_prime.matrix() - Mat64::identity(4, 4))) < 1e-12);
    }

    #[test]
    fn defect_limits() {
        let zero = Mat64::zeros(3, 3);
        assert!(max_abs(&(defect(&zero).unwrap() - Mat64::identity(3, 3))) < 1e-14);
        let eye = Mat64::identity(3, 3);
        assert!(max_abs(&defect(&eye).unwrap()) < 1e-7);
    }

    #[test]
    fn defect_of_a_diagonal_contraction() {
        let a = Mat64::from_diagonal(&Vec64::from_vec(vec![cr(0.6), cr(1.0)]));
        let d = defect(&a).unwrap();
        let expect = Mat64::from_diagonal(&Vec64::from_vec(vec![cr(0.8), cr(0.0)]));
        assert!(max_abs(&(d - expect)) < 1e-7);
    }

    #[test]
    fn defect_squares_back() {
        let a = random_contraction(6, 7, 0.9);
        let d = defect(&a).unwrap();
        let back = &d * &d;
        let expect = Mat64::identity(6, 6) - a.adjoint() * &a;
        assert!(max_abs(&(back - expect)) < 1e-10);
    }

    #[test]
    fn defect_rejects_an_expansion() {
        let a = Mat64::identity(3, 3) * cr(1.1);
        assert!(matches!(
            defect(&a),
            Err(DilationError::NotContraction { .. })
        ));
        assert!(matches!(
            dilate_1(&a, 1.1),
            Err(DilationError::NotContraction { .. })
        ));
    }

    #[test]
    fn scalar_dilation_is_the_textbook_rotation() {
        let a = Mat64::from_element(1, 1, cr(0.6));
        let u = dilate_1(&a, 1.0).unwrap();
        let expect = Mat64::from_row_slice(
            2,
            2,
            &[cr(0.6), cr(0.8), cr(0.8), cr(-0.6)],
        );
        assert!(max_abs(&(u.matrix - expect)) < 1e-12);
    }

    #[test]
    fn dilation_is_unitary_with_exact_top_block() {
        for seed in 1..20u64 {
            let a = random_contraction(4, seed, 0.95);
            let u = dilate_1(&a, 1.0).unwrap();
            assert!(
                unitarity_deviation(&u.matrix) < 1e-12,
                "seed {seed}: {}",
                unitarity_deviation(&u.matrix)
            );
            // The block is copied, not recomputed: exact equality.
            assert_eq!(u.matrix.view((0, 0), (4, 4)).clone_owned(), a);
        }
    }

    #[test]
    fn dilation_splits_a_vector_into_image_and_defect() {
        let a = random_contraction(4, 11, 0.9);
        let u = dilate_1(&a, 1.0).unwrap();
        let v = CVector::from_vec(vec![cr(0.5), c(0.1, -0.3), cr(0.0), c(0.2, 0.4)]);
        let mut padded = CVector::zeros(8);
        padded.rows_mut(0, 4).copy_from(&v);
        let out = &u.matrix * padded;
        let top = out.rows(0, 4).clone_owned();
        assert!((top - &a * &v).norm() < 1e-12);
        let bottom = out.rows(4, 4).clone_owned();
        let d = defect(&a).unwrap();
        assert!((bottom - d * v).norm() < 1e-9);
    }

    #[test]
    fn readout_round_trip_recovers_the_scaled_action() {
        // Non-contraction input: normalize, dilate, apply, unscale.
        let g = SuperOperator::new(pseudo_random_matrix(4, 23) * cr(3.0)).unwrap();
        let res = contraction_normalize(&g);
        assert!(res.n_c > 1.0);
        let u = dilate_1(res.g_prime.matrix(), res.n_c).unwrap();
        let rho = DensityMatrix::new(
            (sigma_z::<f64>() + Mat64::identity(2, 2) * cr(3.0)) * cr(1.0 / 6.0),
        )
        .unwrap();
        let v = vectorize(&rho).into_vector();
        let scale = v.norm();
        let mut padded = CVector::zeros(8);
        padded.rows_mut(0, 4).copy_from(&(&v / cr(scale)));
        let out = &u.matrix * padded;
        let recovered = out.rows(0, 4) * cr(u.n_c * scale);
        let direct = g.matrix() * v;
        assert!((recovered - direct).norm() < 1e-10);
    }

    #[test]
    fn schaffer_dilation_of_identity_and_zero() {
        let eye = Mat64::identity(2, 2);
        let u = dilate_2(&eye, 1.0).unwrap();
        assert!(unitarity_deviation(&u.matrix) < 1e-7);
        assert!(max_abs(&(u.matrix.view((0, 0), (2, 2)).clone_owned() - &eye)) < 1e-14);

        let zero = Mat64::zeros(2, 2);
        let u = dilate_2(&zero, 1.0).unwrap();
        assert!(unitarity_deviation(&u.matrix) < 1e-12);
        assert!(max_abs(&u.matrix.view((0, 0), (2, 2)).clone_owned()) < 1e-14);
    }

    #[test]
    fn schaffer_products_dilate_products() {
        for seed in 1..10u64 {
            let a = random_contraction(4, seed, 0.9);
            let b = random_contraction(4, seed + 100, 0.85);
            let ua = dilate_2(&a, 1.0).unwrap();
            let ub = dilate_2(&b, 1.0).unwrap();
            let prod = &ub.matrix * &ua.matrix;
            let top = prod.view((0, 0), (4, 4)).clone_owned();
            assert!(max_abs(&(top - &b * &a)) < 1e-12, "seed {seed}");
        }
    }

    #[test]
    fn embedding_pads_with_identity() {
        let a = random_contraction(4, 31, 0.9);
        let u12 = dilate_2(&a, 1.0).unwrap();
        let u16 = embed_pow2(&u12);
        assert_eq!(u16.dim(), 16);
        assert!(unitarity_deviation(&u16.matrix) < 1e-12);
        assert_eq!(
            u16.matrix.view((0, 0), (12, 12)).clone_owned(),
            u12.matrix
        );
        assert!(
            max_abs(&(u16.matrix.view((12, 12), (4, 4)).clone_owned() - Mat64::identity(4, 4)))
                == 0.0
        );

        let u8 = dilate_1(&a, 1.0).unwrap();
        assert_eq!(embed_pow2(&u8).matrix, u8.matrix);

        let tiny = DilatedUnitary {
            matrix: Mat64::identity(3, 3),
            n_c: 1.0,
        };
        assert_eq!(embed_pow2(&tiny).dim(), 4);
    }

    #[test]
    fn series_dilation_modes_agree_on_the_worst_step() {
        let g0 = SuperOperator::new(Mat64::identity(4, 4)).unwrap();
        let g1 = SuperOperator::new(pseudo_random_matrix(4, 41) * cr(2.0)).unwrap();
        let g2 = SuperOperator::new(pseudo_random_matrix(4, 43)).unwrap();
        let series = PropagatorSeries {
            dt: 0.1,
            g: vec![g0, g1.clone(), g2],
        };
        let per_step = dilate_series(&series, NcMode::PerStep).unwrap();
        let global = dilate_series(&series, NcMode::Global).unwrap();
        let worst = per_step.n_c.iter().cloned().fold(0.0f64, f64::max);
        for n_c in &global.n_c {
            assert!((n_c - worst).abs() < 1e-12);
        }
        assert!((worst - operator_norm(g1.matrix())).abs() < 1e-12);
        for u in per_step.u.iter().chain(&global.u) {
            assert_eq!(u.nrows(), 8);
            assert!(unitarity_deviation(u) < 1e-12);
        }
    }

    proptest! {
        /// The two defect blocks intertwine through the adjoint:
        /// `A' D_{A'} = D_A A'`.
        #[test]
        fn defect_blocks_intertwine(seed in 1u64..500, margin in 0.05f64..1.0) {
            let a = random_contraction(4, seed, margin);
            let pair = defect_pair(&a).unwrap();
            let lhs = a.adjoint() * &pair.d_a_dag;
            let rhs = &pair.d_a * a.adjoint();
            prop_assert!(max_abs(&(lhs - rhs)) < 1e-10);
        }

        #[test]
        fn random_contractions_dilate_unitarily(seed in 1u64..500, margin in 0.05f64..1.0) {
            let a = random_contraction(4, seed, margin);
            let u = dilate_1(&a, 1.0).unwrap();
            prop_assert!(unitarity_deviation(&u.matrix) < 1e-12);
        }
    }
}

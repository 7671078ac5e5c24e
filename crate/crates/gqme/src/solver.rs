//! Memory-kernel extraction and reduced-propagator integration.
//!
//! Two solvers share the uniform time grid of the input series:
//!
//! * [`solve_volterra`] turns projection-free inputs into the memory kernel
//!   by discretizing the Volterra integral equation
//!   `K(tau) = i Fdot(tau) - F(tau) L + i int_0^tau F(tau - s) K(s) ds`
//!   with trapezoidal quadrature. The implicit half-weight of `K(tau)` at the
//!   upper limit is resolved by one LU-factored linear solve per step.
//! * [`propagate_gqme`] integrates
//!   `dG/dt = -i L G(t) - int_0^t K(tau) G(t - tau) dtau`
//!   with classic RK4, evaluating the convolution by trapezoid over the
//!   stored history. Half-step stages fall between grid points; history and
//!   kernel values there are linearly interpolated, and the current stage
//!   value supplies the integrand at `tau = 0` (where the history would be
//!   the yet-unknown `G(t)`).

use thiserror::Error;

use crate::liouville::SuperOperator;
use crate::scalar::{ci, cr, RealScalar};
use crate::series::{MemoryKernelSeries, PfiSeries, PropagatorSeries};
use crate::CMatrix;

/// Condition-number limit for the implicit Volterra solve.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Errors from the kernel and propagator solvers.
#[derive(Debug, Error)]
pub enum SolverError {
    #[error("empty input series")]
    EmptySeries,
    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },
    #[error(
        "implicit Volterra matrix is ill-conditioned (condition {cond:.3e} > {limit:.1e}); \
         reduce dt"
    )]
    IllConditioned { cond: f64, limit: f64 },
    #[error("requested {steps} steps but the kernel holds only {kernel_steps}")]
    KernelTooShort { steps: usize, kernel_steps: usize },
}

/// Solve the Volterra equation for the memory kernel on the input grid.
pub fn solve_volterra<T: RealScalar>(
    pfis: &PfiSeries<T>,
    proj_l: &SuperOperator<T>,
) -> Result<MemoryKernelSeries<T>, SolverError> {
    let steps = pfis.f.len();
    if steps == 0 || pfis.fdot.len() != steps {
        return Err(SolverError::EmptySeries);
    }
    let dim = proj_l.dim();
    if pfis.f[0].dim() != dim {
        return Err(SolverError::DimensionMismatch {
            context: format!(
                "projection-free inputs are {}-dimensional, generator is {}-dimensional",
                pfis.f[0].dim(),
                dim
            ),
        });
    }
    let dt = pfis.dt;
    let l = proj_l.matrix();
    let f: Vec<&CMatrix<T>> = pfis.f.iter().map(|m| m.matrix()).collect();
    let fdot: Vec<&CMatrix<T>> = pfis.fdot.iter().map(|m| m.matrix()).collect();
    let i = ci(T::one());
    let one = cr(T::one());

    // K(0): the integral term vanishes.
    let mut k: Vec<CMatrix<T>> = Vec::with_capacity(steps);
    k.push(fdot[0] * i - f[0] * l);

    // Implicit matrix (I - i (dt/2) F[0]), shared by every step.
    let implicit = CMatrix::<T>::identity(dim, dim) - f[0] * (i * cr(dt * T::lit(0.5)));
    let sv = implicit.clone().svd(false, false).singular_values;
    let cond = if sv.min() > T::zero() {
        (sv.max() / sv.min()).as_f64()
    } else {
        f64::INFINITY
    };
    if cond.is_nan() || cond > CONDITION_LIMIT {
        return Err(SolverError::IllConditioned {
            cond,
            limit: CONDITION_LIMIT,
        });
    }
    let lu = implicit.lu();

    let half = cr(T::lit(0.5));
    for n in 1..steps {
        // Trapezoid over the history: half weight at s = 0, full inside.
        let mut acc = CMatrix::<T>::zeros(dim, dim);
        acc.gemm(half, f[n], &k[0], one);
        for m in 1..n {
            acc.gemm(one, f[n - m], &k[m], one);
        }
        let mut rhs = fdot[n] * i - f[n] * l;
        rhs += acc * (i * cr(dt));
        let kn = lu.solve(&rhs).ok_or(SolverError::IllConditioned {
            cond: cond.as_f64(),
            limit: CONDITION_LIMIT,
        })?;
        k.push(kn);
    }

    Ok(MemoryKernelSeries {
        dt,
        k: k
            .into_iter()
            .map(|m| SuperOperator::new(m).expect("kernel keeps the input shape"))
            .collect(),
    })
}

/// Where an RK4 stage sits relative to the grid interval `[n, n+1]`.
#[derive(Clone, Copy, PartialEq)]
enum Stage {
    Start,
    Half,
    End,
}

/// Trapezoid convolution `int_0^{t*} K(tau) G(t* - tau) dtau` for a stage at
/// `t* = (n + theta) dt`, given history `g[0..=n]` and the stage value of `G`.
fn convolution<T: RealScalar>(
    k: &[&CMatrix<T>],
    g: &[CMatrix<T>],
    n: usize,
    stage: Stage,
    g_stage: &CMatrix<T>,
    dt: T,
) -> CMatrix<T> {
    let dim = g_stage.nrows();
    let mut acc = CMatrix::<T>::zeros(dim, dim);
    let one = cr(T::one());
    let half = cr(T::lit(0.5));
    let quarter = cr(T::lit(0.25));
    match stage {
        Stage::Start => {
            // Nodes j = 0..=n; G(t* - j dt) = g[n - j], with the stage value
            // standing in at j = 0.
            if n == 0 {
                return acc;
            }
            acc.gemm(half, k[0], g_stage, one);
            for j in 1..n {
                acc.gemm(one, k[j], &g[n - j], one);
            }
            acc.gemm(half, k[n], &g[0], one);
            acc * cr(dt)
        }
        Stage::End => {
            // Nodes j = 0..=n+1; G(t* - j dt) = g[n + 1 - j], stage at j = 0.
            acc.gemm(half, k[0], g_stage, one);
            for j in 1..=n {
                acc.gemm(one, k[j], &g[n + 1 - j], one);
            }
            acc.gemm(half, k[n + 1], &g[0], one);
            acc * cr(dt)
        }
        Stage::Half => {
            // Full intervals cover [0, n dt]; history between grid points is
            // the average of its neighbours. A final segment of width dt/2
            // reaches t*, where K is interpolated and G(0) = g[0].
            if n > 0 {
                acc.gemm(half, k[0], g_stage, one);
                for j in 1..=n {
                    let w = if j == n { quarter } else { half };
                    acc.gemm(w, k[j], &g[n - j], one);
                    acc.gemm(w, k[j], &g[n - j + 1], one);
                }
                acc *= cr(dt);
            }
            let mut tail = CMatrix::<T>::zeros(dim, dim);
            if n == 0 {
                tail.gemm(one, k[0], g_stage, one);
            } else {
                tail.gemm(half, k[n], &g[0], one);
                tail.gemm(half, k[n], &g[1], one);
            }
            tail.gemm(half, k[n], &g[0], one);
            tail.gemm(half, k[n + 1], &g[0], one);
            acc + tail * (quarter * cr(dt))
        }
    }
}

/// Integrate the reduced-propagator equation of motion with RK4.
///
/// Produces `steps` grid values starting from the identity; the kernel must
/// extend over the full requested horizon (`kernel.steps() >= steps`).
pub fn propagate_gqme<T: RealScalar>(
    proj_l: &SuperOperator<T>,
    kernel: &MemoryKernelSeries<T>,
    steps: usize,
) -> Result<PropagatorSeries<T>, SolverError> {
    if steps == 0 {
        return Err(SolverError::EmptySeries);
    }
    if kernel.k.len() < steps {
        return Err(SolverError::KernelTooShort {
            steps,
            kernel_steps: kernel.k.len(),
        });
    }
    let dim = proj_l.dim();
    if kernel.k[0].dim() != dim {
        return Err(SolverError::DimensionMismatch {
            context: format!(
                "kernel is {}-dimensional, generator is {}-dimensional",
                kernel.k[0].dim(),
                dim
            ),
        });
    }
    let dt = kernel.dt;
    let l = proj_l.matrix();
    let k: Vec<&CMatrix<T>> = kernel.k.iter().map(|m| m.matrix()).collect();
    let minus_i = ci(-T::one());

    let rhs = |g: &[CMatrix<T>], n: usize, stage: Stage, y: &CMatrix<T>| -> CMatrix<T> {
        let mut out = convolution(&k, g, n, stage, y, dt) * cr(-T::one());
        out.gemm(minus_i, l, y, cr(T::one()));
        out
    };

    let mut g: Vec<CMatrix<T>> = Vec::with_capacity(steps);
    g.push(CMatrix::identity(dim, dim));
    let half_dt = cr(dt * T::lit(0.5));
    let sixth_dt = cr(dt / T::lit(6.0));
    let two = cr(T::lit(2.0));
    for n in 0..steps - 1 {
        let k1 = rhs(&g, n, Stage::Start, &g[n]);
        let y2 = &g[n] + &k1 * half_dt;
        let k2 = rhs(&g, n, Stage::Half, &y2);
        let y3 = &g[n] + &k2 * half_dt;
        let k3 = rhs(&g, n, Stage::Half, &y3);
        let y4 = &g[n] + &k3 * cr(dt);
        let k4 = rhs(&g, n, Stage::End, &y4);
        let step = (k1 + k2 * two + k3 * two + k4) * sixth_dt;
        g.push(&g[n] + step);
    }

    Ok(PropagatorSeries {
        dt,
        g: g
            .into_iter()
            .map(|m| SuperOperator::new(m).expect("propagator keeps the generator shape"))
            .collect(),
    })
}

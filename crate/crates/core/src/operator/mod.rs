//! Matrix-free parameterized Hermitian operators.
//!
//! An operator exposes two primitives: the matrix–vector product `A(θ)x` and
//! the derivative contraction `Re(wᴴ ∂A/∂θ_j v)`. Everything in the gradient
//! path is built on these two calls.

mod dense;
mod graph;
mod pauli;
mod rbf;

pub use dense::DenseSymmetricOperator;
pub use graph::{GraphDirection, SparseGraphOperator};
pub use pauli::{PauliString, PauliSumOperator, build_pauli_dictionary, MAX_PAULI_SITES};
pub use rbf::{RbfKernelOperator, RBF_JITTER};

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{ComplexField, DMatrix};

use crate::error::{Error, Result};
use crate::scalar::{self, Scalar};

/// A Hermitian operator `A(θ)` with real parameters `θ`.
///
/// Implementations must be pure: identical inputs give bit-identical outputs.
pub trait ParamOperator: Sync {
    type Scalar: Scalar;

    fn dim(&self) -> usize;

    fn num_params(&self) -> usize;

    /// `y ← A(θ)x`. Lengths are checked by the caller.
    fn matvec_into(&self, theta: &[f64], x: &[Self::Scalar], y: &mut [Self::Scalar]);

    /// `Re(wᴴ (∂A/∂θ_j) v)`. Lengths and `j` are checked by the caller.
    fn deriv_contract_unchecked(
        &self,
        theta: &[f64],
        j: usize,
        w: &[Self::Scalar],
        v: &[Self::Scalar],
    ) -> f64;

    /// `out[j] = Σ_i Re(w_iᴴ (∂A/∂θ_j) v_i)` over the columns of `w` and `v`,
    /// accumulated in `(j, i)` order.
    ///
    /// Operators whose entries are expensive to generate override this to
    /// share work across parameters and column pairs.
    fn contract_columns(
        &self,
        theta: &[f64],
        w: &DMatrix<Self::Scalar>,
        v: &DMatrix<Self::Scalar>,
        out: &mut [f64],
    ) {
        let n = self.dim();
        for (j, slot) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for i in 0..v.ncols() {
                acc += self.deriv_contract_unchecked(theta, j, column(w, i, n), column(v, i, n));
            }
            *slot = acc;
        }
    }

    /// Dense `A(θ)`, assembled column by column from matvecs.
    fn dense_matrix(&self, theta: &[f64]) -> DMatrix<Self::Scalar> {
        let n = self.dim();
        let mut a = DMatrix::zeros(n, n);
        let mut e = vec![Self::Scalar::ZERO; n];
        let mut y = vec![Self::Scalar::ZERO; n];
        for k in 0..n {
            e[k] = Self::Scalar::ONE;
            self.matvec_into(theta, &e, &mut y);
            a.column_mut(k).copy_from_slice(&y);
            e[k] = Self::Scalar::ZERO;
        }
        a
    }

    /// Dense `∂A/∂θ_j` at `θ`. Intended for desk-scale reference computations.
    fn dense_derivative(&self, theta: &[f64], j: usize) -> DMatrix<Self::Scalar>;
}

/// Column `i` of a column-major `n`-row matrix as a slice.
pub(crate) fn column<S: nalgebra::Scalar>(m: &DMatrix<S>, i: usize, n: usize) -> &[S] {
    &m.as_slice()[i * n..(i + 1) * n]
}

pub(crate) fn check_theta<O: ParamOperator + ?Sized>(op: &O, theta: &[f64]) -> Result<()> {
    Error::check_len("theta", op.num_params(), theta.len())
}

/// `A(θ)x` with dimension checks.
pub fn apply<O: ParamOperator + ?Sized>(
    op: &O,
    theta: &[f64],
    x: &[O::Scalar],
) -> Result<Vec<O::Scalar>> {
    check_theta(op, theta)?;
    Error::check_len("vector", op.dim(), x.len())?;
    let mut y = vec![O::Scalar::ZERO; op.dim()];
    op.matvec_into(theta, x, &mut y);
    Ok(y)
}

/// `Re(wᴴ (∂A/∂θ_j) v)` with index and dimension checks.
pub fn deriv_contract<O: ParamOperator + ?Sized>(
    op: &O,
    theta: &[f64],
    j: usize,
    w: &[O::Scalar],
    v: &[O::Scalar],
) -> Result<f64> {
    check_theta(op, theta)?;
    if j >= op.num_params() {
        return Err(Error::ParamIndex {
            index: j,
            count: op.num_params(),
        });
    }
    Error::check_len("w", op.dim(), w.len())?;
    Error::check_len("v", op.dim(), v.len())?;
    Ok(op.deriv_contract_unchecked(theta, j, w, v))
}

/// `|⟨y, Ax⟩ − conj(⟨x, Ay⟩)| / (‖A‖_est ‖x‖ ‖y‖)` where `‖A‖_est` is
/// `max(‖Ax‖/‖x‖, ‖Ay‖/‖y‖)`.
pub fn hermitian_defect<O: ParamOperator + ?Sized>(
    op: &O,
    theta: &[f64],
    x: &[O::Scalar],
    y: &[O::Scalar],
) -> Result<f64> {
    let ax = apply(op, theta, x)?;
    let ay = apply(op, theta, y)?;
    let lhs = scalar::dot(y, &ax);
    let rhs = scalar::dot(x, &ay).conjugate();
    let (nx, ny) = (scalar::norm(x), scalar::norm(y));
    let a_est = (scalar::norm(&ax) / nx).max(scalar::norm(&ay) / ny);
    let scale = a_est * nx * ny;
    let defect = (lhs - rhs).modulus();
    Ok(if scale > 0.0 { defect / scale } else { defect })
}

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use super::{ParamOperator, check_theta};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Affine dense operator `A(θ) = A₀ + Σ_j θ_j E_j` with Hermitian `A₀`, `E_j`.
///
/// This is the substrate for the dense reference computations.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSymmetricOperator<S: Scalar = f64> {
    base: DMatrix<S>,
    directions: Vec<DMatrix<S>>,
}

fn hermitian_gap<S: Scalar>(m: &DMatrix<S>) -> (f64, f64) {
    let mut gap = 0.0f64;
    let mut size = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            gap = gap.max((m[(i, j)] - m[(j, i)].conjugate()).modulus());
            size = size.max(m[(i, j)].modulus());
        }
    }
    (gap, size)
}

impl<S: Scalar> DenseSymmetricOperator<S> {
    pub fn new(base: DMatrix<S>, directions: Vec<DMatrix<S>>) -> Result<Self> {
        let n = base.nrows();
        if n == 0 {
            return Err(Error::input("operator dimension must be positive"));
        }
        Error::check_len("square matrix columns", n, base.ncols())?;
        for (k, m) in core::iter::once(&base).chain(&directions).enumerate() {
            Error::check_len("direction rows", n, m.nrows())?;
            Error::check_len("direction columns", n, m.ncols())?;
            let (gap, size) = hermitian_gap(m);
            if gap > 1e-12 * size.max(f64::MIN_POSITIVE) {
                let which = if k == 0 {
                    String::from("base matrix")
                } else {
                    format!("direction {}", k - 1)
                };
                return Err(Error::input(format!(
                    "{which} is not Hermitian (max asymmetry {gap:e})"
                )));
            }
        }
        Ok(Self { base, directions })
    }

    /// Operator without parameters.
    pub fn constant(base: DMatrix<S>) -> Result<Self> {
        Self::new(base, Vec::new())
    }

    /// First-order model of `op` around `θ`: `A(θ) + Σ_j θ'_j ∂A/∂θ_j(θ)`.
    ///
    /// Evaluating the returned operator at `θ' = 0` reproduces `op` at `θ`
    /// together with its parameter derivatives.
    pub fn tangent_at<O>(op: &O, theta: &[f64]) -> Result<Self>
    where
        O: ParamOperator<Scalar = S> + ?Sized,
    {
        check_theta(op, theta)?;
        let base = op.dense_matrix(theta);
        let directions = (0..op.num_params())
            .map(|j| op.dense_derivative(theta, j))
            .collect();
        Self::new(base, directions)
    }

    pub fn base(&self) -> &DMatrix<S> {
        &self.base
    }

    pub fn directions(&self) -> &[DMatrix<S>] {
        &self.directions
    }

    /// Dense `A(θ)`.
    pub fn assemble(&self, theta: &[f64]) -> Result<DMatrix<S>> {
        check_theta(self, theta)?;
        let mut a = self.base.clone();
        for (&t, e) in theta.iter().zip(&self.directions) {
            a += e * S::from_real(t);
        }
        Ok(a)
    }
}

impl<S: Scalar> ParamOperator for DenseSymmetricOperator<S> {
    type Scalar = S;

    fn dim(&self) -> usize {
        self.base.nrows()
    }

    fn num_params(&self) -> usize {
        self.directions.len()
    }

    fn matvec_into(&self, theta: &[f64], x: &[S], y: &mut [S]) {
        let n = self.dim();
        y.fill(S::ZERO);
        for (k, &xk) in x.iter().enumerate() {
            let col = &self.base.as_slice()[k * n..(k + 1) * n];
            for (yi, &a) in y.iter_mut().zip(col) {
                *yi += a * xk;
            }
        }
        for (&t, e) in theta.iter().zip(&self.directions) {
            if t == 0.0 {
                continue;
            }
            let t = S::from_real(t);
            for (k, &xk) in x.iter().enumerate() {
                let col = &e.as_slice()[k * n..(k + 1) * n];
                let s = t * xk;
                for (yi, &a) in y.iter_mut().zip(col) {
                    *yi += a * s;
                }
            }
        }
    }

    fn deriv_contract_unchecked(&self, _theta: &[f64], j: usize, w: &[S], v: &[S]) -> f64 {
        let e = &self.directions[j];
        let n = self.dim();
        let mut acc = S::ZERO;
        for (k, &vk) in v.iter().enumerate() {
            let col = &e.as_slice()[k * n..(k + 1) * n];
            let mut s = S::ZERO;
            for (&wi, &a) in w.iter().zip(col) {
                s += wi.conjugate() * a;
            }
            acc += s * vk;
        }
        acc.real()
    }

    fn dense_matrix(&self, theta: &[f64]) -> DMatrix<S> {
        let mut a = self.base.clone();
        for (&t, e) in theta.iter().zip(&self.directions) {
            a += e * S::from_real(t);
        }
        a
    }

    fn dense_derivative(&self, _theta: &[f64], j: usize) -> DMatrix<S> {
        self.directions[j].clone()
    }
}

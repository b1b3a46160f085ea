use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{ComplexField, DMatrix};

use super::{ParamOperator, column};
use crate::error::{Error, Result};

/// Diagonal jitter added to the noise variance.
pub const RBF_JITTER: f64 = 1e-6;

/// RBF kernel with diagonal noise,
/// `K_ij = σ_f² exp(−‖x_i − x_j‖² / (2ℓ²)) + (σ_n² + jitter) δ_ij`,
/// with `θ = (ℓ, σ_f, σ_n)`.
///
/// Kernel entries are generated on the fly; nothing of size `n²` is stored.
#[derive(Debug, Clone, PartialEq)]
pub struct RbfKernelOperator {
    /// Row-major `n × d` inputs.
    inputs: Vec<f64>,
    n: usize,
    d: usize,
}

impl RbfKernelOperator {
    pub const LENGTHSCALE: usize = 0;
    pub const SIGNAL: usize = 1;
    pub const NOISE: usize = 2;

    /// `inputs` holds `n` points of dimension `d`, row-major.
    pub fn new(inputs: Vec<f64>, d: usize) -> Result<Self> {
        if d == 0 || inputs.is_empty() || inputs.len() % d != 0 {
            return Err(Error::input(
                "RBF inputs must be a non-empty row-major n×d array",
            ));
        }
        if inputs.iter().any(|x| !x.is_finite()) {
            return Err(Error::input("RBF inputs must be finite"));
        }
        let n = inputs.len() / d;
        Ok(Self { inputs, n, d })
    }

    pub fn input_dim(&self) -> usize {
        self.d
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.d..(i + 1) * self.d]
    }

    fn sq_dist(&self, i: usize, j: usize) -> f64 {
        self.point(i)
            .iter()
            .zip(self.point(j))
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    /// `(K_ij, ∂K_ij/∂ℓ, ∂K_ij/∂σ_f, ∂K_ij/∂σ_n)`.
    #[inline]
    fn entry(&self, theta: &[f64], i: usize, j: usize) -> [f64; 4] {
        let (ell, sf, sn) = (theta[0], theta[1], theta[2]);
        let r2 = self.sq_dist(i, j);
        let e = (-0.5 * r2 / (ell * ell)).exp();
        let mut k = sf * sf * e;
        let d_ell = sf * sf * e * r2 / (ell * ell * ell);
        let d_sf = 2.0 * sf * e;
        let mut d_sn = 0.0;
        if i == j {
            k += sn * sn + RBF_JITTER;
            d_sn = 2.0 * sn;
        }
        [k, d_ell, d_sf, d_sn]
    }
}

impl ParamOperator for RbfKernelOperator {
    type Scalar = f64;

    fn dim(&self) -> usize {
        self.n
    }

    fn num_params(&self) -> usize {
        3
    }

    fn matvec_into(&self, theta: &[f64], x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (j, &xj) in x.iter().enumerate() {
                acc += self.entry(theta, i, j)[0] * xj;
            }
            *yi = acc;
        }
    }

    fn deriv_contract_unchecked(&self, theta: &[f64], j: usize, w: &[f64], v: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (a, &wa) in w.iter().enumerate() {
            if j == Self::NOISE {
                acc += wa * self.entry(theta, a, a)[3] * v[a];
                continue;
            }
            let mut row = 0.0;
            for (b, &vb) in v.iter().enumerate() {
                row += self.entry(theta, a, b)[1 + j] * vb;
            }
            acc += wa * row;
        }
        acc
    }

    fn contract_columns(
        &self,
        theta: &[f64],
        w: &DMatrix<f64>,
        v: &DMatrix<f64>,
        out: &mut [f64],
    ) {
        let n = self.n;
        let k = v.ncols();
        // Row-major copies so that row a of W and row b of V are contiguous.
        let mut w_rows = vec![0.0; n * k];
        let mut v_rows = vec![0.0; n * k];
        for i in 0..k {
            let (wc, vc) = (column(w, i, n), column(v, i, n));
            for a in 0..n {
                w_rows[a * k + i] = wc[a];
                v_rows[a * k + i] = vc[a];
            }
        }
        let mut acc = [0.0; 3];
        for a in 0..n {
            let wa = &w_rows[a * k..(a + 1) * k];
            for b in 0..n {
                let vb = &v_rows[b * k..(b + 1) * k];
                let s: f64 = wa.iter().zip(vb).map(|(x, y)| x * y).sum();
                let [_, d_ell, d_sf, d_sn] = self.entry(theta, a, b);
                acc[0] += d_ell * s;
                acc[1] += d_sf * s;
                acc[2] += d_sn * s;
            }
        }
        out.copy_from_slice(&acc);
    }

    fn dense_matrix(&self, theta: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.entry(theta, i, j)[0])
    }

    fn dense_derivative(&self, theta: &[f64], j: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |a, b| self.entry(theta, a, b)[1 + j])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::apply;

    #[test]
    fn collinear_column_matches_direct_kernel() {
        let op = RbfKernelOperator::new(vec![0.0, 1.0, 2.0], 1).unwrap();
        let y = apply(&op, &[1.0, 1.0, 0.0], &[1.0, 0.0, 0.0]).unwrap();
        let expected = [
            1.0 + RBF_JITTER,
            (-0.5f64).exp(),
            (-2.0f64).exp(),
        ];
        for (a, b) in y.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15, "{a} vs {b}");
        }
    }

    #[test]
    fn rejects_ragged_inputs() {
        assert!(RbfKernelOperator::new(vec![0.0, 1.0, 2.0], 2).is_err());
        assert!(RbfKernelOperator::new(vec![], 1).is_err());
    }
}

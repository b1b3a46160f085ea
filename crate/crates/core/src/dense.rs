//! Dense reference computations through a full eigendecomposition.
//!
//! Everything here is `O(n³)` and exists to measure the Krylov path against:
//! `f(A)`, `uᴴ f(A) v` and the Fréchet derivative
//! `L_f(A, E) = Q (F ∘ (Qᴴ E Q)) Qᴴ` with the divided-difference matrix `F`
//! of the eigenvalues of `A`.

use alloc::vec::Vec;

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::{FnValue, Scalar};
use crate::spectral::{SpectralFunction, check_domain, divided_difference_matrix};

type C64 = Complex<f64>;

/// Eigendecomposition `A = Q diag(λ) Qᴴ` of a dense Hermitian matrix.
#[derive(Debug, Clone)]
pub struct DenseSpectral<S: Scalar> {
    q: DMatrix<S>,
    lambda: Vec<f64>,
}

fn to_c64<S: Scalar>(m: &DMatrix<S>) -> DMatrix<C64> {
    m.map(|x| x.to_c64())
}

impl<S: Scalar> DenseSpectral<S> {
    pub fn new(a: &DMatrix<S>) -> Result<Self> {
        if a.nrows() != a.ncols() || a.nrows() == 0 {
            return Err(Error::input("dense eigendecomposition needs a non-empty square matrix"));
        }
        if a.iter().any(|x| !x.is_finite()) {
            return Err(Error::numerical("non-finite matrix entry"));
        }
        let eig = a
            .clone()
            .try_symmetric_eigen(f64::EPSILON, 0)
            .ok_or_else(|| Error::numerical("dense symmetric eigensolver did not converge"))?;
        Ok(Self {
            q: eig.eigenvectors,
            lambda: eig.eigenvalues.iter().copied().collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.lambda.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.lambda
    }

    pub fn eigenvectors(&self) -> &DMatrix<S> {
        &self.q
    }

    fn coords(&self, u: &[S]) -> Result<DVector<S>> {
        Error::check_len("vector", self.dim(), u.len())?;
        Ok(self.q.ad_mul(&DVector::from_column_slice(u)))
    }

    /// `uᴴ f(A) u`.
    pub fn quadratic<F: SpectralFunction + ?Sized>(&self, u: &[S], f: &F) -> Result<F::Value> {
        check_domain(f, &self.lambda)?;
        let ut = self.coords(u)?;
        let mut acc = F::Value::zero();
        for (&l, x) in self.lambda.iter().zip(ut.iter()) {
            acc += f.eval(l) * x.modulus_squared();
        }
        Ok(acc)
    }

    /// `uᴴ f(A) v` as a complex number.
    pub fn bilinear<F: SpectralFunction + ?Sized>(&self, u: &[S], v: &[S], f: &F) -> Result<C64> {
        check_domain(f, &self.lambda)?;
        let (ut, vt) = (self.coords(u)?, self.coords(v)?);
        let mut acc = C64::new(0.0, 0.0);
        for ((&l, a), b) in self.lambda.iter().zip(ut.iter()).zip(vt.iter()) {
            acc += f.eval(l).to_c64() * (a.conjugate() * *b).to_c64();
        }
        Ok(acc)
    }

    /// `f(A) u` in complex arithmetic.
    pub fn apply_function<F: SpectralFunction + ?Sized>(&self, u: &[S], f: &F) -> Result<Vec<C64>> {
        check_domain(f, &self.lambda)?;
        let ut = self.coords(u)?;
        let scaled = DVector::from_iterator(
            self.dim(),
            self.lambda
                .iter()
                .zip(ut.iter())
                .map(|(&l, x)| f.eval(l).to_c64() * x.to_c64()),
        );
        Ok((to_c64(&self.q) * scaled).iter().copied().collect())
    }

    /// `Qᴴ E Q`.
    pub fn rotate(&self, e: &DMatrix<S>) -> Result<DMatrix<S>> {
        Error::check_len("direction size", self.dim(), e.nrows())?;
        Error::check_len("direction size", self.dim(), e.ncols())?;
        Ok(self.q.ad_mul(e) * &self.q)
    }

    /// `uᴴ L_f(A, E) u`, real part per component of the function value.
    pub fn frechet_quadratic<F: SpectralFunction + ?Sized>(
        &self,
        u: &[S],
        e: &DMatrix<S>,
        f: &F,
    ) -> Result<F::Value> {
        let fmat = divided_difference_matrix(&self.lambda, f)?;
        let ut = self.coords(u)?;
        let rotated = self.rotate(e)?;
        Ok(hadamard_quadratic(&fmat, &rotated, ut.as_slice()))
    }

    /// `uᴴ L_f(A, E) v` in complex arithmetic.
    pub fn frechet_bilinear<F: SpectralFunction + ?Sized>(
        &self,
        u: &[S],
        v: &[S],
        e: &DMatrix<S>,
        f: &F,
    ) -> Result<C64> {
        let fmat = divided_difference_matrix(&self.lambda, f)?;
        let (ut, vt) = (self.coords(u)?, self.coords(v)?);
        let rotated = self.rotate(e)?;
        let n = self.dim();
        let mut acc = C64::new(0.0, 0.0);
        for b in 0..n {
            let mut col = C64::new(0.0, 0.0);
            for a in 0..n {
                col += ut[a].conjugate().to_c64() * fmat[(a, b)].to_c64() * rotated[(a, b)].to_c64();
            }
            acc += col * vt[b].to_c64();
        }
        Ok(acc)
    }

    /// Full Fréchet derivative `Q (F ∘ (Qᴴ E Q)) Qᴴ` in complex arithmetic.
    pub fn frechet_matrix<F: SpectralFunction + ?Sized>(
        &self,
        e: &DMatrix<S>,
        f: &F,
    ) -> Result<DMatrix<C64>> {
        let fmat = divided_difference_matrix(&self.lambda, f)?;
        let rotated = self.rotate(e)?;
        let n = self.dim();
        let inner = DMatrix::from_fn(n, n, |a, b| fmat[(a, b)].to_c64() * rotated[(a, b)].to_c64());
        let q = to_c64(&self.q);
        Ok(&q * inner * q.adjoint())
    }
}

/// `Σ_ab conj(x_a) (F_ab ∘ M_ab) x_b`, taken component-wise in `F` so that
/// Hermitian `M` gives a real number per component.
pub(crate) fn hadamard_quadratic<S: Scalar, V: FnValue>(
    fmat: &DMatrix<V>,
    m: &DMatrix<S>,
    x: &[S],
) -> V {
    let n = x.len();
    let mut parts = [0.0f64; 2];
    for (k, part) in parts.iter_mut().enumerate().take(V::PARTS) {
        let mut acc = S::ZERO;
        for b in 0..n {
            let mut col = S::ZERO;
            for a in 0..n {
                col += x[a].conjugate() * m[(a, b)] * S::from_real(fmat[(a, b)].part(k));
            }
            acc += col * x[b];
        }
        *part = acc.real();
    }
    V::from_parts(&parts[..V::PARTS])
}

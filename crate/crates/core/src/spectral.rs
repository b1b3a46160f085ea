//! Symmetric tridiagonal eigensolver, scalar spectral functions, the
//! divided-difference matrix and the Lanczos quadrature value.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{Complex, ComplexField, DMatrix};

use crate::error::{Error, Result};
use crate::lanczos::LanczosFactorization;
use crate::scalar::{FnValue, Scalar};

/// Relative gap below which two eigenvalues are treated as confluent in the
/// divided-difference matrix.
pub const CONFLUENT_TOL: f64 = 1e-7;

/// Interval on which a spectral function and its derivative are defined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Real,
    Positive,
    NonZero,
}

impl Domain {
    pub fn contains(self, x: f64) -> bool {
        x.is_finite()
            && match self {
                Domain::Real => true,
                Domain::Positive => x > 0.0,
                Domain::NonZero => x != 0.0,
            }
    }
}

/// A scalar function `f` applied to Hermitian matrices through their
/// eigenvalues, together with its derivative.
pub trait SpectralFunction: Sync {
    type Value: FnValue;

    fn name(&self) -> String;

    fn eval(&self, x: f64) -> Self::Value;

    fn deriv(&self, x: f64) -> Self::Value;

    fn domain(&self) -> Domain;
}

impl<F: SpectralFunction + ?Sized> SpectralFunction for &F {
    type Value = F::Value;

    fn name(&self) -> String {
        (**self).name()
    }

    fn eval(&self, x: f64) -> Self::Value {
        (**self).eval(x)
    }

    fn deriv(&self, x: f64) -> Self::Value {
        (**self).deriv(x)
    }

    fn domain(&self) -> Domain {
        (**self).domain()
    }
}

/// Real-valued built-ins.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RealFunction {
    Log,
    Exp,
    Sqrt,
    /// `λ ↦ 1/λ`
    Inverse,
    Identity,
}

impl SpectralFunction for RealFunction {
    type Value = f64;

    fn name(&self) -> String {
        String::from(match self {
            RealFunction::Log => "log",
            RealFunction::Exp => "exp",
            RealFunction::Sqrt => "sqrt",
            RealFunction::Inverse => "inv",
            RealFunction::Identity => "identity",
        })
    }

    fn eval(&self, x: f64) -> f64 {
        match self {
            RealFunction::Log => x.ln(),
            RealFunction::Exp => x.exp(),
            RealFunction::Sqrt => x.sqrt(),
            RealFunction::Inverse => 1.0 / x,
            RealFunction::Identity => x,
        }
    }

    fn deriv(&self, x: f64) -> f64 {
        match self {
            RealFunction::Log => 1.0 / x,
            RealFunction::Exp => x.exp(),
            RealFunction::Sqrt => 0.5 / x.sqrt(),
            RealFunction::Inverse => -1.0 / (x * x),
            RealFunction::Identity => 1.0,
        }
    }

    fn domain(&self) -> Domain {
        match self {
            RealFunction::Log | RealFunction::Sqrt => Domain::Positive,
            RealFunction::Inverse => Domain::NonZero,
            RealFunction::Exp | RealFunction::Identity => Domain::Real,
        }
    }
}

/// Time-evolution phase `λ ↦ exp(−i t λ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Phase {
    pub t: f64,
}

impl SpectralFunction for Phase {
    type Value = Complex<f64>;

    fn name(&self) -> String {
        format!("phase:{}", self.t)
    }

    fn eval(&self, x: f64) -> Complex<f64> {
        let a = -self.t * x;
        Complex::new(a.cos(), a.sin())
    }

    fn deriv(&self, x: f64) -> Complex<f64> {
        self.eval(x) * Complex::new(0.0, -self.t)
    }

    fn domain(&self) -> Domain {
        Domain::Real
    }
}

pub fn check_domain<F: SpectralFunction + ?Sized>(f: &F, lambda: &[f64]) -> Result<()> {
    let domain = f.domain();
    match lambda.iter().find(|&&x| !domain.contains(x)) {
        Some(&value) => Err(Error::Domain {
            function: f.name(),
            value,
        }),
        None => Ok(()),
    }
}

/// Eigendecomposition `T = Q Λ Qᵀ` of a symmetric tridiagonal matrix with
/// the first-row weights `c = Qᵀe₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagEigen {
    /// Orthonormal eigenvectors in columns, ordered like `lambda`.
    pub q: DMatrix<f64>,
    /// Eigenvalues, ascending.
    pub lambda: Vec<f64>,
    /// `Qᵀe₁`.
    pub c: Vec<f64>,
}

impl TridiagEigen {
    pub fn dim(&self) -> usize {
        self.lambda.len()
    }

    /// `Q Λ Qᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut ql = self.q.clone();
        for (j, &l) in self.lambda.iter().enumerate() {
            ql.column_mut(j).scale_mut(l);
        }
        &ql * self.q.transpose()
    }

    /// `f(T) e₁ = Q (f(Λ) c)`.
    pub fn apply_function_e1<F: SpectralFunction + ?Sized>(&self, f: &F) -> Result<Vec<F::Value>> {
        check_domain(f, &self.lambda)?;
        let m = self.dim();
        let weights: Vec<F::Value> = self
            .lambda
            .iter()
            .zip(&self.c)
            .map(|(&l, &c)| f.eval(l) * c)
            .collect();
        let mut out = vec![F::Value::zero(); m];
        for (a, slot) in out.iter_mut().enumerate() {
            for (b, &w) in weights.iter().enumerate() {
                *slot += w * self.q[(a, b)];
            }
        }
        Ok(out)
    }
}

/// Implicit-shift QL iteration with eigenvector accumulation on the
/// tridiagonal matrix with diagonal `alpha` and off-diagonal `beta`.
///
/// Eigenvalues are returned ascending; each eigenvector is signed so that
/// its first entry of magnitude above `1e-10` is positive.
pub fn tridiag_eigen(alpha: &[f64], beta: &[f64]) -> Result<TridiagEigen> {
    let n = alpha.len();
    if n == 0 {
        return Err(Error::input("empty tridiagonal matrix"));
    }
    Error::check_len("off-diagonal", n - 1, beta.len())?;
    if alpha.iter().chain(beta).any(|x| !x.is_finite()) {
        return Err(Error::numerical("non-finite tridiagonal entry"));
    }

    let mut d = alpha.to_vec();
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(beta);
    let mut z = DMatrix::<f64>::identity(n, n);

    let max_iter = 50 * n.max(1);
    let mut iterations = 0usize;
    let mut shift_acc = 0.0;
    let mut tst1 = 0.0f64;
    let eps = f64::EPSILON;

    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        // e[n-1] is zero, so m < n here.
        if m > l {
            loop {
                iterations += 1;
                if iterations > max_iter {
                    return Err(Error::numerical(format!(
                        "tridiagonal QL did not converge within {max_iter} iterations"
                    )));
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                shift_acc += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        let zk1 = z[(k, i + 1)];
                        let zk = z[(k, i)];
                        z[(k, i + 1)] = s * zk + c * zk1;
                        z[(k, i)] = c * zk - s * zk1;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += shift_acc;
        e[l] = 0.0;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let lambda: Vec<f64> = order.iter().map(|&k| d[k]).collect();
    let mut q = DMatrix::<f64>::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        q.set_column(dst, &z.column(src));
        let lead = q.column(dst).iter().copied().find(|x| x.abs() > 1e-10);
        if lead.is_some_and(|x| x < 0.0) {
            q.column_mut(dst).neg_mut();
        }
    }
    let c = q.row(0).iter().copied().collect();
    Ok(TridiagEigen { q, lambda, c })
}

/// Divided-difference matrix `F_ij = (f(λ_i) − f(λ_j)) / (λ_i − λ_j)`, with
/// `f′` at the midpoint when `|λ_i − λ_j| ≤ 1e-7 · (max λ − min λ)`.
pub fn divided_difference_matrix<F: SpectralFunction + ?Sized>(
    lambda: &[f64],
    f: &F,
) -> Result<DMatrix<F::Value>> {
    check_domain(f, lambda)?;
    let m = lambda.len();
    let (lo, hi) = lambda
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    let threshold = CONFLUENT_TOL * (hi - lo);
    let values: Vec<F::Value> = lambda.iter().map(|&x| f.eval(x)).collect();
    let domain = f.domain();
    let mut out = DMatrix::from_element(m, m, F::Value::zero());
    for i in 0..m {
        for j in 0..=i {
            let gap = lambda[i] - lambda[j];
            let entry = if gap.abs() <= threshold {
                let mid = 0.5 * (lambda[i] + lambda[j]);
                if !domain.contains(mid) {
                    return Err(Error::Domain {
                        function: f.name(),
                        value: mid,
                    });
                }
                f.deriv(mid)
            } else {
                (values[i] - values[j]) * (1.0 / gap)
            };
            out[(i, j)] = entry;
            out[(j, i)] = entry;
        }
    }
    Ok(out)
}

/// Lanczos quadrature `‖u‖² e₁ᵀ f(T) e₁ = ‖u‖² Σ_i c_i² f(λ_i)`.
pub fn quadrature_value<S, F>(fac: &LanczosFactorization<S>, f: &F) -> Result<F::Value>
where
    S: Scalar,
    F: SpectralFunction + ?Sized,
{
    let eig = fac.eigen()?;
    quadrature_from_eigen(&eig, fac.u_norm() * fac.u_norm(), f)
}

pub(crate) fn quadrature_from_eigen<F: SpectralFunction + ?Sized>(
    eig: &TridiagEigen,
    u_norm_sq: f64,
    f: &F,
) -> Result<F::Value> {
    check_domain(f, &eig.lambda)?;
    let mut acc = F::Value::zero();
    for (&l, &c) in eig.lambda.iter().zip(&eig.c) {
        acc += f.eval(l) * (c * c);
    }
    Ok(acc * u_norm_sq)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_by_one() {
        let eig = tridiag_eigen(&[3.5], &[]).unwrap();
        assert_eq!(eig.lambda, vec![3.5]);
        assert_eq!(eig.c, vec![1.0]);
        assert_eq!(eig.q[(0, 0)], 1.0);
    }

    #[test]
    fn symmetric_two_by_two() {
        let eig = tridiag_eigen(&[0.0, 0.0], &[1.0]).unwrap();
        assert!((eig.lambda[0] + 1.0).abs() < 1e-15);
        assert!((eig.lambda[1] - 1.0).abs() < 1e-15);
        let h = 0.5f64.sqrt();
        for &c in &eig.c {
            assert!((c - h).abs() < 1e-15);
        }
    }

    #[test]
    fn split_tridiagonal_is_handled() {
        let eig = tridiag_eigen(&[2.0, 1.0, 3.0], &[0.0, 0.0]).unwrap();
        assert_eq!(eig.lambda, vec![1.0, 2.0, 3.0]);
        assert_eq!(eig.c, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn identity_divided_differences_are_ones() {
        let f = divided_difference_matrix(&[-1.0, 0.5, 2.0], &RealFunction::Identity).unwrap();
        assert!(f.iter().all(|&x| x == 1.0));
    }

    #[test]
    fn confluent_exp_at_zero() {
        let f = divided_difference_matrix(&[0.0, 0.0], &RealFunction::Exp).unwrap();
        assert!(f.iter().all(|&x| x == 1.0));
    }

    #[test]
    fn log_divided_differences() {
        let f = divided_difference_matrix(&[1.0, 2.0], &RealFunction::Log).unwrap();
        assert_eq!(f[(0, 0)], 1.0);
        assert_eq!(f[(1, 1)], 0.5);
        assert!((f[(0, 1)] - 2.0f64.ln()).abs() < 1e-16);
    }

    #[test]
    fn domain_error_names_ritz_value() {
        let err = divided_difference_matrix(&[-0.5, 1.0], &RealFunction::Log).unwrap_err();
        assert_eq!(
            err,
            Error::Domain {
                function: "log".into(),
                value: -0.5
            }
        );
    }

    #[test]
    fn phase_derivative() {
        let p = Phase { t: 2.0 };
        let h = 1e-6;
        let fd = (p.eval(0.3 + h) - p.eval(0.3 - h)) * (0.5 / h);
        assert!((fd - p.deriv(0.3)).modulus() < 1e-9);
    }
}

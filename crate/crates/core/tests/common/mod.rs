//! Shared fixtures and a small dense reference built directly on nalgebra's
//! symmetric eigensolver. Nothing here calls the Lanczos or spectral code of
//! the crate under test.
#![allow(dead_code)]

use krylov_grad_core::nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn normal_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| normal(rng)).collect()
}

pub fn rademacher_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect()
}

/// Symmetric with `N(0, 1)` entries, scaled by `1/√n`.
pub fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let b = DMatrix::from_fn(n, n, |_, _| normal(rng));
    (&b + b.transpose()) * (0.5 / (n as f64).sqrt())
}

/// `B Bᵀ / n + shift·I`.
pub fn random_spd(rng: &mut ChaCha8Rng, n: usize, shift: f64) -> DMatrix<f64> {
    let b = DMatrix::from_fn(n, n, |_, _| normal(rng));
    &b * b.transpose() / n as f64 + DMatrix::identity(n, n) * shift
}

pub fn rel_err(approx: f64, exact: f64) -> f64 {
    (approx - exact).abs() / exact.abs()
}

pub fn rel_err_vec(approx: &[f64], exact: &[f64]) -> f64 {
    let num: f64 = approx.iter().zip(exact).map(|(a, b)| (a - b).powi(2)).sum();
    let den: f64 = exact.iter().map(|b| b * b).sum();
    (num / den).sqrt()
}

/// Scalar function with derivative, for the reference below.
#[derive(Clone, Copy)]
pub struct Fun {
    pub f: fn(f64) -> f64,
    pub df: fn(f64) -> f64,
}

pub const LOG: Fun = Fun { f: f64::ln, df: |x| 1.0 / x };
pub const EXP: Fun = Fun { f: f64::exp, df: f64::exp };
pub const INV: Fun = Fun { f: |x| 1.0 / x, df: |x| -1.0 / (x * x) };
pub const SQRT: Fun = Fun { f: f64::sqrt, df: |x| 0.5 / x.sqrt() };

/// `A = Q diag(λ) Qᵀ` from nalgebra.
pub struct Eigh {
    pub q: DMatrix<f64>,
    pub lambda: Vec<f64>,
}

impl Eigh {
    pub fn new(a: &DMatrix<f64>) -> Self {
        let e = a.clone().symmetric_eigen();
        Self {
            q: e.eigenvectors,
            lambda: e.eigenvalues.iter().copied().collect(),
        }
    }

    pub fn matfun(&self, f: Fun) -> DMatrix<f64> {
        let d = DMatrix::from_diagonal(&DVector::from_iterator(
            self.lambda.len(),
            self.lambda.iter().map(|&l| (f.f)(l)),
        ));
        &self.q * d * self.q.transpose()
    }

    pub fn quad(&self, u: &[f64], f: Fun) -> f64 {
        let y = self.q.tr_mul(&DVector::from_column_slice(u));
        y.iter().zip(&self.lambda).map(|(c, &l)| c * c * (f.f)(l)).sum()
    }

    /// Divided differences with the derivative on (near-)coincident pairs.
    pub fn divided(&self, f: Fun) -> DMatrix<f64> {
        let l = &self.lambda;
        let spread = l.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
        DMatrix::from_fn(l.len(), l.len(), |i, j| {
            let d = l[i] - l[j];
            if d.abs() <= 1e-9 * spread {
                (f.df)(0.5 * (l[i] + l[j]))
            } else {
                ((f.f)(l[i]) - (f.f)(l[j])) / d
            }
        })
    }

    /// `Q (F ∘ Qᵀ E Q) Qᵀ`.
    pub fn frechet(&self, e: &DMatrix<f64>, f: Fun) -> DMatrix<f64> {
        let r = self.q.tr_mul(e) * &self.q;
        &self.q * self.divided(f).component_mul(&r) * self.q.transpose()
    }

    /// `uᵀ L_f(A, E) u` without forming the full derivative.
    pub fn frechet_quad(&self, u: &[f64], e: &DMatrix<f64>, f: Fun) -> f64 {
        let y = self.q.tr_mul(&DVector::from_column_slice(u));
        let r = self.q.tr_mul(e) * &self.q;
        let fm = self.divided(f);
        let mut acc = 0.0;
        for i in 0..y.len() {
            for j in 0..y.len() {
                acc += y[i] * fm[(i, j)] * r[(i, j)] * y[j];
            }
        }
        acc
    }
}

/// `log det A` through a Cholesky factor.
pub fn logdet_cholesky(a: &DMatrix<f64>) -> f64 {
    let l = a.clone().cholesky().expect("matrix is not positive definite");
    2.0 * l.l().diagonal().iter().map(|d| d.ln()).sum::<f64>()
}

/// Erdős–Rényi-style edge list with `n·deg/2` distinct undirected edges.
pub fn random_edges(rng: &mut ChaCha8Rng, n: usize, avg_degree: usize) -> Vec<(usize, usize)> {
    let target = n * avg_degree / 2;
    let mut set = std::collections::BTreeSet::new();
    while set.len() < target {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a != b {
            set.insert((a.min(b), a.max(b)));
        }
    }
    set.into_iter().collect()
}

/// Matrix exponential by scaling, a degree-24 Taylor polynomial, and
/// repeated squaring. Independent of any eigendecomposition.
pub fn expm_taylor(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = a.abs().row_sum().amax();
    let s = if norm > 0.25 { (norm / 0.25).log2().ceil() as i32 } else { 0 };
    let b = a / 2f64.powi(s);
    let mut term = DMatrix::identity(n, n);
    let mut out = DMatrix::identity(n, n);
    for k in 1..=24 {
        term = &term * &b / k as f64;
        out += &term;
    }
    for _ in 0..s {
        out = &out * &out;
    }
    out
}

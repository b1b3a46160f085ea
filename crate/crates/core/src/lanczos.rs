//! Lanczos recurrence with optional full reorthogonalization.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{ComplexField, DMatrix};

use crate::error::{Error, Result};
use crate::operator::{ParamOperator, check_theta, column};
use crate::scalar::{self, Mix, Scalar};
use crate::spectral::{self, SpectralFunction, TridiagEigen};

/// Default breakdown threshold, relative to the running maximum of `|α|`, `β`.
pub const BREAKDOWN_TOL: f64 = 1e-12;

/// Tolerance on `|Im ⟨v, Av⟩|` relative to the running scale.
const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Reorth {
    None,
    /// Two passes of modified Gram–Schmidt against every stored column.
    #[default]
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanczosConfig {
    pub steps: usize,
    pub reorth: Reorth,
    pub breakdown_tol: f64,
}

impl LanczosConfig {
    pub fn new(steps: usize) -> Self {
        Self {
            steps,
            reorth: Reorth::Full,
            breakdown_tol: BREAKDOWN_TOL,
        }
    }

    pub fn with_reorth(mut self, reorth: Reorth) -> Self {
        self.reorth = reorth;
        self
    }
}

/// Output of `k ≤ m` Lanczos steps:
/// `A V = V T + β_res v_next e_kᵀ` with `T = tridiag(beta, alpha, beta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LanczosFactorization<S: Scalar = f64> {
    basis: DMatrix<S>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    beta_residual: f64,
    v_next: Option<Vec<S>>,
    u_norm: f64,
    breakdown: bool,
}

impl<S: Scalar> LanczosFactorization<S> {
    /// `n × k` orthonormal basis `V`.
    pub fn basis(&self) -> &DMatrix<S> {
        &self.basis
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    /// Off-diagonal of `T`, all entries positive.
    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    /// Coefficient coupling the Krylov space to its complement; zero after
    /// breakdown.
    pub fn beta_residual(&self) -> f64 {
        self.beta_residual
    }

    /// Unit vector `v_{k+1}`, absent after breakdown.
    pub fn v_next(&self) -> Option<&[S]> {
        self.v_next.as_deref()
    }

    pub fn u_norm(&self) -> f64 {
        self.u_norm
    }

    /// Number of retained columns `k`.
    pub fn steps(&self) -> usize {
        self.alpha.len()
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    /// Whether the recurrence stopped early on an invariant subspace.
    pub fn is_breakdown(&self) -> bool {
        self.breakdown
    }

    pub fn tridiagonal(&self) -> DMatrix<f64> {
        let k = self.steps();
        let mut t = DMatrix::zeros(k, k);
        for (i, &a) in self.alpha.iter().enumerate() {
            t[(i, i)] = a;
        }
        for (i, &b) in self.beta.iter().enumerate() {
            t[(i, i + 1)] = b;
            t[(i + 1, i)] = b;
        }
        t
    }

    pub fn eigen(&self) -> Result<TridiagEigen> {
        spectral::tridiag_eigen(&self.alpha, &self.beta)
    }

    /// The factorization the first `k` steps of the same run would have
    /// produced. Bit-identical to a fresh run with `steps = k`.
    pub fn truncated(&self, k: usize) -> Result<Self> {
        let have = self.steps();
        if k == 0 || k > have {
            return Err(Error::input(format!(
                "cannot truncate {have} Lanczos steps to {k}"
            )));
        }
        if k == have {
            return Ok(self.clone());
        }
        let n = self.dim();
        Ok(Self {
            basis: self.basis.columns(0, k).into_owned(),
            alpha: self.alpha[..k].to_vec(),
            beta: self.beta[..k - 1].to_vec(),
            beta_residual: self.beta[k - 1],
            v_next: Some(column(&self.basis, k, n).to_vec()),
            u_norm: self.u_norm,
            breakdown: false,
        })
    }

    /// `max |VᴴV − I|`.
    pub fn orthogonality_defect(&self) -> f64 {
        let k = self.steps();
        let gram = self.basis.adjoint() * &self.basis;
        let mut worst = 0.0f64;
        for i in 0..k {
            for j in 0..k {
                let target = if i == j { S::ONE } else { S::ZERO };
                worst = worst.max((gram[(i, j)] - target).modulus());
            }
        }
        worst
    }
}

/// Runs up to `cfg.steps` Lanczos steps on `A(θ)` from `v₁ = u/‖u‖`.
///
/// The recurrence is `w = A v_k − β_{k−1} v_{k−1}`, `α_k = ⟨v_k, w⟩`,
/// `w ← w − α_k v_k`, `β_k = ‖w‖`. When `β_k` drops to
/// `breakdown_tol · max(|α|, β)` the run stops, `beta_residual` is zero and
/// the retained basis spans an invariant subspace.
pub fn lanczos_factorize<O>(
    op: &O,
    theta: &[f64],
    u: &[O::Scalar],
    cfg: &LanczosConfig,
) -> Result<LanczosFactorization<O::Scalar>>
where
    O: ParamOperator + ?Sized,
{
    check_theta(op, theta)?;
    let n = op.dim();
    Error::check_len("start vector", n, u.len())?;
    if cfg.steps == 0 {
        return Err(Error::input("Lanczos needs at least one step"));
    }
    let u_norm = scalar::norm(u);
    if !u_norm.is_finite() {
        return Err(Error::input("start vector has non-finite entries"));
    }
    if u_norm == 0.0 {
        return Err(Error::input("start vector is zero"));
    }

    let m = cfg.steps;
    let inv = O::Scalar::from_real(1.0 / u_norm);
    let mut data: Vec<O::Scalar> = Vec::with_capacity(n * m.min(n + 1));
    data.extend(u.iter().map(|&x| x * inv));

    let mut alpha = Vec::with_capacity(m);
    let mut beta: Vec<f64> = Vec::with_capacity(m);
    let mut w = vec![O::Scalar::ZERO; n];
    let mut scale = 0.0f64;
    let mut beta_residual = 0.0;
    let mut v_next = None;
    let mut breakdown = false;

    for k in 0..m {
        op.matvec_into(theta, &data[k * n..(k + 1) * n], &mut w);
        if w.iter().any(|x| !x.is_finite()) {
            return Err(Error::numerical(format!(
                "matvec produced a non-finite entry at Lanczos step {}",
                k + 1
            )));
        }
        if k > 0 {
            let b = O::Scalar::from_real(-beta[k - 1]);
            scalar::axpy(b, &data[(k - 1) * n..k * n], &mut w);
        }
        let vk = &data[k * n..(k + 1) * n];
        let a = scalar::dot(vk, &w);
        let (a_re, a_im) = (a.real(), a.imaginary());
        if a_im.abs() > HERMITIAN_TOL * scale.max(a_re.abs()).max(1.0) {
            return Err(Error::numerical(format!(
                "Im⟨v, Av⟩ = {a_im:e} at step {}: operator is not Hermitian",
                k + 1
            )));
        }
        alpha.push(a_re);
        scalar::axpy(O::Scalar::from_real(-a_re), vk, &mut w);

        if cfg.reorth == Reorth::Full {
            for _pass in 0..2 {
                for j in 0..=k {
                    let vj = &data[j * n..(j + 1) * n];
                    let proj = scalar::dot(vj, &w);
                    scalar::axpy(-proj, vj, &mut w);
                }
            }
        }

        let b = scalar::norm(&w);
        scale = scale.max(a_re.abs()).max(b);
        if b <= cfg.breakdown_tol * scale {
            breakdown = true;
            break;
        }
        let inv = O::Scalar::from_real(1.0 / b);
        if k + 1 == m {
            beta_residual = b;
            v_next = Some(w.iter().map(|&x| x * inv).collect());
            break;
        }
        beta.push(b);
        data.extend(w.iter().map(|&x| x * inv));
    }

    let k = alpha.len();
    data.truncate(n * k);
    Ok(LanczosFactorization {
        basis: DMatrix::from_vec(n, k, data),
        alpha,
        beta,
        beta_residual,
        v_next,
        u_norm,
        breakdown,
    })
}

/// Krylov approximation `‖u‖ V f(T) e₁` to `f(A(θ)) u`.
pub fn lanczos_matfun_action<O, F>(
    op: &O,
    theta: &[f64],
    u: &[O::Scalar],
    f: &F,
    cfg: &LanczosConfig,
) -> Result<Vec<<O::Scalar as Mix<F::Value>>::Out>>
where
    O: ParamOperator + ?Sized,
    O::Scalar: Mix<F::Value>,
    F: SpectralFunction + ?Sized,
{
    let fac = lanczos_factorize(op, theta, u, cfg)?;
    matfun_action_from(&fac, f)
}

/// `‖u‖ V f(T) e₁` for an existing factorization.
pub fn matfun_action_from<S, F>(
    fac: &LanczosFactorization<S>,
    f: &F,
) -> Result<Vec<<S as Mix<F::Value>>::Out>>
where
    S: Mix<F::Value>,
    F: SpectralFunction + ?Sized,
{
    let eig = fac.eigen()?;
    let coeffs = eig.apply_function_e1(f)?;
    let n = fac.dim();
    let mut out = vec![<<S as Mix<F::Value>>::Out as Scalar>::ZERO; n];
    for (a, &coef) in coeffs.iter().enumerate() {
        let col = column(&fac.basis, a, n);
        for (o, &v) in out.iter_mut().zip(col) {
            *o += v.mix(coef * fac.u_norm);
        }
    }
    Ok(out)
}

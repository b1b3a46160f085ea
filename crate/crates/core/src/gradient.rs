//! Forward-only gradients of the Lanczos quadrature value.
//!
//! For `φ̂ = ‖u‖² e₁ᵀ f(T) e₁` with `T = Q Λ Qᵀ` and `c = Qᵀe₁`, the
//! sensitivity with respect to `T` is `G = ‖u‖² Q ((c cᵀ) ∘ F) Qᵀ`. Dropping
//! the variation of the basis gives `dφ̂ ≈ tr(G Vᴴ dA V)`, which is assembled
//! from `k` derivative contractions `w_iᴴ (∂A/∂θ_j) v_i` with `W = V G`. The
//! neglected part is exactly `2 β_res e_kᵀ G η`; see
//! [`boundary_term_diagnostic`].

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{ComplexField, DMatrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dense::DenseSpectral;
use crate::error::{Error, Result};
use crate::lanczos::{LanczosConfig, LanczosFactorization, lanczos_factorize};
use crate::operator::{DenseSymmetricOperator, ParamOperator, check_theta};
use crate::scalar::{FnValue, Scalar};
use crate::spectral::{
    SpectralFunction, TridiagEigen, divided_difference_matrix, quadrature_from_eigen,
};

/// Sensitivity `G` of the quadrature value with respect to `T`, and `W = V G`.
#[derive(Debug, Clone)]
pub struct ProjectedSensitivity<S: Scalar, V: FnValue> {
    g: DMatrix<V>,
    /// `V G_k` for each real component `G_k` of `G`.
    w: Vec<DMatrix<S>>,
    value: V,
}

impl<S: Scalar, V: FnValue> ProjectedSensitivity<S, V> {
    /// The `k × k` matrix `G`.
    pub fn g(&self) -> &DMatrix<V> {
        &self.g
    }

    /// Real component `part` of `G` (0 = real, 1 = imaginary).
    pub fn g_part(&self, part: usize) -> DMatrix<f64> {
        self.g.map(|x| x.part(part))
    }

    /// `V G_k`, columns `w_1..w_k`, for component `part`.
    pub fn w(&self, part: usize) -> &DMatrix<S> {
        &self.w[part]
    }

    /// The quadrature value `φ̂` of the same factorization.
    pub fn value(&self) -> V {
        self.value
    }
}

/// `‖u‖² Q ((c cᵀ) ∘ F) Qᵀ`, symmetrized.
pub fn sensitivity_matrix<F: SpectralFunction + ?Sized>(
    eig: &TridiagEigen,
    u_norm_sq: f64,
    f: &F,
) -> Result<DMatrix<F::Value>> {
    let m = eig.dim();
    let fmat = divided_difference_matrix(&eig.lambda, f)?;
    let mut parts = Vec::with_capacity(F::Value::PARTS);
    for k in 0..F::Value::PARTS {
        let h = DMatrix::from_fn(m, m, |a, b| u_norm_sq * eig.c[a] * eig.c[b] * fmat[(a, b)].part(k));
        let g = &eig.q * h * eig.q.transpose();
        parts.push((&g + g.transpose()) * 0.5);
    }
    Ok(DMatrix::from_fn(m, m, |a, b| {
        let p: [f64; 2] = core::array::from_fn(|k| parts.get(k).map_or(0.0, |g| g[(a, b)]));
        F::Value::from_parts(&p[..F::Value::PARTS])
    }))
}

/// Builds `G` and `W = V G` for a factorization.
pub fn projected_sensitivity<S, F>(
    fac: &LanczosFactorization<S>,
    f: &F,
) -> Result<ProjectedSensitivity<S, F::Value>>
where
    S: Scalar,
    F: SpectralFunction + ?Sized,
{
    let eig = fac.eigen()?;
    let u_norm_sq = fac.u_norm() * fac.u_norm();
    let value = quadrature_from_eigen(&eig, u_norm_sq, f)?;
    let g = sensitivity_matrix(&eig, u_norm_sq, f)?;
    let w = (0..F::Value::PARTS)
        .map(|k| fac.basis() * g.map(|x| S::from_real(x.part(k))))
        .collect();
    Ok(ProjectedSensitivity { g, w, value })
}

/// Gradient of the Lanczos quadrature value with diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientReport<V: FnValue = f64> {
    pub grad: Vec<V>,
    pub value: V,
    pub beta_residual: f64,
    pub steps_used: usize,
}

/// `dφ̂/dθ_j ≈ Σ_i Re(w_iᴴ (∂A/∂θ_j) v_i)` from an existing factorization of
/// `A(θ)`.
pub fn gradient_from_factorization<O, F>(
    op: &O,
    theta: &[f64],
    fac: &LanczosFactorization<O::Scalar>,
    f: &F,
) -> Result<GradientReport<F::Value>>
where
    O: ParamOperator + ?Sized,
    F: SpectralFunction + ?Sized,
{
    check_theta(op, theta)?;
    Error::check_len("factorization dimension", op.dim(), fac.dim())?;
    let sens = projected_sensitivity(fac, f)?;
    let p = op.num_params();
    let mut parts = vec![vec![0.0; p]; F::Value::PARTS];
    for (k, out) in parts.iter_mut().enumerate() {
        op.contract_columns(theta, sens.w(k), fac.basis(), out);
    }
    let grad = (0..p)
        .map(|j| {
            let comps: [f64; 2] = core::array::from_fn(|k| parts.get(k).map_or(0.0, |g| g[j]));
            F::Value::from_parts(&comps[..F::Value::PARTS])
        })
        .collect::<Vec<_>>();
    if grad.iter().any(|g| !g.is_finite()) || !sens.value.is_finite() {
        return Err(Error::numerical("non-finite gradient"));
    }
    Ok(GradientReport {
        grad,
        value: sens.value,
        beta_residual: fac.beta_residual(),
        steps_used: fac.steps(),
    })
}

/// One forward Lanczos pass plus `k` derivative contractions per parameter.
/// The recurrence itself is never differentiated.
pub fn gradient_forward_only<O, F>(
    op: &O,
    theta: &[f64],
    u: &[O::Scalar],
    f: &F,
    cfg: &LanczosConfig,
) -> Result<GradientReport<F::Value>>
where
    O: ParamOperator + ?Sized,
    F: SpectralFunction + ?Sized,
{
    let fac = lanczos_factorize(op, theta, u, cfg)?;
    gradient_from_factorization(op, theta, &fac, f)
}

/// Directional derivative of `φ̂` along the rank-one perturbation
/// `dA = a bᵀ`: `(Vᵀb)ᵀ G (Vᵀa)`.
///
/// `G` is symmetric, so the result is also the derivative along the
/// symmetrized direction `(a bᵀ + b aᵀ)/2`.
pub fn gradient_rank_one<F: SpectralFunction + ?Sized>(
    fac: &LanczosFactorization<f64>,
    f: &F,
    a: &[f64],
    b: &[f64],
) -> Result<F::Value> {
    let eig = fac.eigen()?;
    let g = sensitivity_matrix(&eig, fac.u_norm() * fac.u_norm(), f)?;
    rank_one_contraction(fac, &g, a, b)
}

/// [`gradient_rank_one`] with a precomputed `G`.
pub fn rank_one_contraction<V: FnValue>(
    fac: &LanczosFactorization<f64>,
    g: &DMatrix<V>,
    a: &[f64],
    b: &[f64],
) -> Result<V> {
    let n = fac.dim();
    Error::check_len("rank-one vector a", n, a.len())?;
    Error::check_len("rank-one vector b", n, b.len())?;
    let k = fac.steps();
    Error::check_len("sensitivity size", k, g.nrows())?;
    let va = fac.basis().tr_mul(&nalgebra::DVector::from_column_slice(a));
    let vb = fac.basis().tr_mul(&nalgebra::DVector::from_column_slice(b));
    let mut acc = V::zero();
    for j in 0..k {
        let mut col = V::zero();
        for i in 0..k {
            col += g[(i, j)] * va[j] * vb[i];
        }
        acc += col;
    }
    Ok(acc)
}

/// Reference value `uᴴ f(A) u` and gradient `uᴴ L_f(A, E_j) u` from a full
/// eigendecomposition of `A(θ)`.
pub fn dense_value_and_gradient<S, F>(
    op: &DenseSymmetricOperator<S>,
    theta: &[f64],
    u: &[S],
    f: &F,
) -> Result<GradientReport<F::Value>>
where
    S: Scalar,
    F: SpectralFunction + ?Sized,
{
    let a = op.assemble(theta)?;
    Error::check_len("vector", op.dim(), u.len())?;
    let spectral = DenseSpectral::new(&a)?;
    let value = spectral.quadratic(u, f)?;
    let grad = op
        .directions()
        .iter()
        .map(|e| spectral.frechet_quadratic(u, e, f))
        .collect::<Result<Vec<_>>>()?;
    Ok(GradientReport {
        grad,
        value,
        beta_residual: 0.0,
        steps_used: op.dim(),
    })
}

/// Decomposition of the basis differential `dV = V S + V⊥ N` at one
/// parameter, with the exact error term of the forward-only gradient.
#[derive(Debug, Clone)]
pub struct BasisVariationDiagnostic {
    /// `Vᵀ dV`, skew-symmetric up to finite-difference error.
    pub s: DMatrix<f64>,
    /// `(V⊥)ᵀ dV`; the first column of `V⊥` is `v_next` when it exists.
    pub n: DMatrix<f64>,
    /// `Nᵀ e₁ = dVᵀ v_next`.
    pub eta: Vec<f64>,
    /// `2 β_res e_kᵀ G η`.
    pub boundary_term: f64,
    /// `tr(V G Vᵀ dA)`, the forward-only gradient.
    pub direct_term: f64,
    /// Central difference of `φ̂` in the same parameter.
    pub fd_derivative: f64,
    pub beta_residual: f64,
    /// `‖G‖_F`.
    pub g_norm: f64,
    /// `‖S e₁‖`.
    pub s_e1_norm: f64,
    /// `‖N e₁‖`.
    pub n_e1_norm: f64,
    /// `max |S + Sᵀ|`.
    pub skew_defect: f64,
}

impl BasisVariationDiagnostic {
    /// `2 β_res ‖G‖_F ‖η‖`, an upper bound for `|boundary_term|`.
    pub fn error_bound(&self) -> f64 {
        let eta_norm = ComplexField::sqrt(self.eta.iter().map(|x| x * x).sum::<f64>());
        2.0 * self.beta_residual * self.g_norm * eta_norm
    }

    /// `|fd − direct − boundary|`.
    pub fn identity_residual(&self) -> f64 {
        (self.fd_derivative - self.direct_term - self.boundary_term).abs()
    }
}

/// Largest jump allowed between the bases at `θ ± h` before the basis is
/// declared discontinuous.
const BASIS_JUMP_TOL: f64 = 1e-2;

/// Measures the terms dropped by the forward-only gradient using central
/// differences of the Lanczos basis in parameter `j`.
///
/// Eigenvector and basis signs are fixed by convention, so `V(θ)` is locally
/// smooth unless Ritz values cross or the step count changes inside
/// `[θ − h, θ + h]`; both are reported as [`Error::Diagnostic`].
pub fn boundary_term_diagnostic<F>(
    op: &DenseSymmetricOperator<f64>,
    theta: &[f64],
    u: &[f64],
    f: &F,
    cfg: &LanczosConfig,
    j: usize,
    h: f64,
) -> Result<BasisVariationDiagnostic>
where
    F: SpectralFunction<Value = f64> + ?Sized,
{
    check_theta(op, theta)?;
    if j >= op.num_params() {
        return Err(Error::ParamIndex {
            index: j,
            count: op.num_params(),
        });
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::input("finite-difference step must be positive"));
    }
    let shifted = |delta: f64| {
        let mut t = theta.to_vec();
        t[j] += delta;
        t
    };
    let (tp, tm) = (shifted(h), shifted(-h));

    let fac = lanczos_factorize(op, theta, u, cfg)?;
    let fac_p = lanczos_factorize(op, &tp, u, cfg)?;
    let fac_m = lanczos_factorize(op, &tm, u, cfg)?;
    let k = fac.steps();
    if fac_p.steps() != k || fac_m.steps() != k {
        return Err(Error::Diagnostic(format!(
            "Lanczos step count changes within ±{h:e} of θ ({} / {k} / {}); try another θ or start vector",
            fac_m.steps(),
            fac_p.steps()
        )));
    }
    let jump = (fac_p.basis() - fac_m.basis()).amax();
    if jump > BASIS_JUMP_TOL {
        return Err(Error::Diagnostic(format!(
            "Lanczos basis jumps by {jump:e} within ±{h:e}; Ritz values are nearly degenerate"
        )));
    }

    let report = gradient_from_factorization(op, theta, &fac, f)?;
    let eig = fac.eigen()?;
    let g = sensitivity_matrix(&eig, fac.u_norm() * fac.u_norm(), f)?;
    let phi_p = crate::spectral::quadrature_value(&fac_p, f)?;
    let phi_m = crate::spectral::quadrature_value(&fac_m, f)?;
    let fd_derivative = (phi_p - phi_m) / (2.0 * h);

    let dv = (fac_p.basis() - fac_m.basis()) / (2.0 * h);
    let v = fac.basis();
    let s = v.tr_mul(&dv);
    let complement = orthogonal_complement(v, fac.v_next());
    let n_mat = complement.tr_mul(&dv);
    let eta: Vec<f64> = match fac.v_next() {
        Some(vn) => dv.tr_mul(&nalgebra::DVector::from_column_slice(vn)).iter().copied().collect(),
        None => vec![0.0; k],
    };
    let beta = fac.beta_residual();
    let boundary_term = 2.0 * beta * (0..k).map(|i| g[(k - 1, i)] * eta[i]).sum::<f64>();
    let skew_defect = (&s + s.transpose()).amax();
    Ok(BasisVariationDiagnostic {
        s_e1_norm: s.column(0).norm(),
        n_e1_norm: if n_mat.nrows() > 0 { n_mat.column(0).norm() } else { 0.0 },
        skew_defect,
        s,
        n: n_mat,
        eta,
        boundary_term,
        direct_term: report.grad[j],
        fd_derivative,
        beta_residual: beta,
        g_norm: g.norm(),
    })
}

/// Orthonormal basis of `span(V)⊥`, starting with `first` when given.
fn orthogonal_complement(v: &DMatrix<f64>, first: Option<&[f64]>) -> DMatrix<f64> {
    let (n, k) = v.shape();
    let mut kept: Vec<nalgebra::DVector<f64>> = v.column_iter().map(|c| c.into_owned()).collect();
    let mut out: Vec<nalgebra::DVector<f64>> = Vec::with_capacity(n - k);
    let candidates = first
        .map(nalgebra::DVector::from_column_slice)
        .into_iter()
        .chain((0..n).map(|i| nalgebra::DVector::from_fn(n, |r, _| if r == i { 1.0 } else { 0.0 })));
    for mut x in candidates {
        if out.len() == n - k {
            break;
        }
        for _pass in 0..2 {
            for q in &kept {
                let proj = q.dot(&x);
                x.axpy(-proj, q, 1.0);
            }
        }
        let norm = x.norm();
        if norm > 1e-8 {
            x /= norm;
            kept.push(x.clone());
            out.push(x);
        }
    }
    if out.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&out)
    }
}

/// `|tr(Gᵀ [T, S])| / (‖G‖_F ‖T‖_F ‖S‖_F)` for `trials` random skew `S`.
///
/// With `fixed_start` the first row and column of `S` are zero (`S e₁ = 0`,
/// as for the basis of a fixed start vector); otherwise `S` is a generic
/// skew matrix.
pub fn commutator_traces(
    eig: &TridiagEigen,
    g: &DMatrix<f64>,
    trials: usize,
    seed: u64,
    fixed_start: bool,
) -> Vec<f64> {
    let m = eig.dim();
    let t = eig.reconstruct();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = g.norm() * t.norm();
    (0..trials)
        .map(|_| {
            let b = DMatrix::<f64>::from_fn(m, m, |_, _| StandardNormal.sample(&mut rng));
            let mut s = &b - b.transpose();
            if fixed_start {
                s.row_mut(0).fill(0.0);
                s.column_mut(0).fill(0.0);
            }
            let denom = scale * s.norm();
            if denom == 0.0 {
                return 0.0;
            }
            let comm = &t * &s - &s * &t;
            g.dot(&comm).abs() / denom
        })
        .collect()
}

/// Largest normalized `|tr(Gᵀ [T, S])|` over random skew `S` with `S e₁ = 0`.
pub fn commutator_check(eig: &TridiagEigen, g: &DMatrix<f64>, trials: usize, seed: u64) -> f64 {
    commutator_traces(eig, g, trials, seed, true)
        .into_iter()
        .fold(0.0, f64::max)
}

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::Complex;

use crate::error::{Error, Result};
use crate::gradient::gradient_forward_only;
use crate::lanczos::{LanczosConfig, lanczos_factorize};
use crate::operator::{ParamOperator, check_theta};
use crate::scalar::{FnValue, Scalar};
use crate::spectral::{SpectralFunction, quadrature_value};

type C64 = Complex<f64>;

/// Polarization weights and start vectors with
/// `uᴴ M v = Σ_k w_k · z_kᴴ M z_k`.
///
/// Real operators use `¼[q(v + u) − q(v − u)]`; complex operators add the
/// `v ± i u` terms with weights `± i/4`.
pub fn polarization_terms<S: Scalar>(u: &[S], v: &[S]) -> Vec<(C64, Vec<S>)> {
    let combine = |alpha: S| -> Vec<S> { v.iter().zip(u).map(|(&b, &a)| b + alpha * a).collect() };
    let quarter = C64::new(0.25, 0.0);
    let mut terms = vec![(quarter, combine(S::ONE)), (-quarter, combine(-S::ONE))];
    if let Some(i) = S::imag_unit() {
        let iq = C64::new(0.0, 0.25);
        terms.push((iq, combine(i)));
        terms.push((-iq, combine(-i)));
    }
    terms
}

fn is_zero<S: Scalar>(z: &[S]) -> bool {
    z.iter().all(|x| *x == S::ZERO)
}

/// `uᴴ f(A(θ)) v` through quadratic forms on the polarization vectors.
pub fn bilinear_form<O, F>(
    op: &O,
    theta: &[f64],
    f: &F,
    u: &[O::Scalar],
    v: &[O::Scalar],
    cfg: &LanczosConfig,
) -> Result<C64>
where
    O: ParamOperator + ?Sized,
    F: SpectralFunction + ?Sized,
{
    check_theta(op, theta)?;
    Error::check_len("u", op.dim(), u.len())?;
    Error::check_len("v", op.dim(), v.len())?;
    let mut acc = C64::new(0.0, 0.0);
    for (w, z) in polarization_terms(u, v) {
        if is_zero(&z) {
            continue;
        }
        let fac = lanczos_factorize(op, theta, &z, cfg)?;
        acc += w * quadrature_value(&fac, f)?.to_c64();
    }
    Ok(acc)
}

/// Value and forward-only gradient of `uᴴ f(A(θ)) v`.
#[derive(Debug, Clone, PartialEq)]
pub struct BilinearReport {
    pub value: C64,
    pub grad: Vec<C64>,
}

/// Gradient of [`bilinear_form`], combining the forward-only gradients of
/// the polarization quadratic forms with the same weights.
pub fn bilinear_gradient<O, F>(
    op: &O,
    theta: &[f64],
    f: &F,
    u: &[O::Scalar],
    v: &[O::Scalar],
    cfg: &LanczosConfig,
) -> Result<BilinearReport>
where
    O: ParamOperator + ?Sized,
    F: SpectralFunction + ?Sized,
{
    check_theta(op, theta)?;
    Error::check_len("u", op.dim(), u.len())?;
    Error::check_len("v", op.dim(), v.len())?;
    let mut value = C64::new(0.0, 0.0);
    let mut grad = vec![C64::new(0.0, 0.0); op.num_params()];
    for (w, z) in polarization_terms(u, v) {
        if is_zero(&z) {
            continue;
        }
        let r = gradient_forward_only(op, theta, &z, f, cfg)?;
        value += w * r.value.to_c64();
        for (g, rg) in grad.iter_mut().zip(&r.grad) {
            *g += w * rg.to_c64();
        }
    }
    Ok(BilinearReport { value, grad })
}

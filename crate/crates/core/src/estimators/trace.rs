use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::ComplexField;

use super::ProbeConfig;
use crate::error::{Error, Result};
use crate::gradient::gradient_forward_only;
use crate::lanczos::{LanczosConfig, lanczos_factorize};
use crate::operator::ParamOperator;
use crate::scalar::Scalar;
use crate::spectral::{SpectralFunction, quadrature_value};

/// Hutchinson estimate of `tr f(A)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceEstimate {
    pub mean: f64,
    /// Sample standard deviation over `√p`; zero for a single probe.
    pub std_error: f64,
    pub samples: Vec<f64>,
}

impl TraceEstimate {
    /// Mean and standard error of per-probe values, summed in index order.
    pub fn from_samples(samples: Vec<f64>) -> Self {
        let p = samples.len();
        let mean = samples.iter().sum::<f64>() / p as f64;
        let std_error = if p > 1 {
            let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (p - 1) as f64;
            ComplexField::sqrt(var / p as f64)
        } else {
            0.0
        };
        Self {
            mean,
            std_error,
            samples,
        }
    }
}

fn real_probe<S: Scalar>(probes: &ProbeConfig, index: usize, n: usize) -> Vec<S> {
    probes
        .probe(index, n)
        .into_iter()
        .map(S::from_real)
        .collect()
}

fn tag(index: usize) -> impl Fn(Error) -> Error {
    move |e| Error::Probe {
        index,
        source: Box::new(e),
    }
}

/// Quadrature value `zᵢᵀ f(A) zᵢ` for probe `index`.
pub fn probe_quadrature<O, F>(
    op: &O,
    theta: &[f64],
    f: &F,
    probes: &ProbeConfig,
    index: usize,
    cfg: &LanczosConfig,
) -> Result<f64>
where
    O: ParamOperator + ?Sized,
    F: SpectralFunction<Value = f64> + ?Sized,
{
    let z = real_probe::<O::Scalar>(probes, index, op.dim());
    lanczos_factorize(op, theta, &z, cfg)
        .and_then(|fac| quadrature_value(&fac, f))
        .map_err(tag(index))
}

/// Forward-only gradient of `zᵢᵀ f(A(θ)) zᵢ` for probe `index`, with the
/// quadrature value.
pub fn probe_gradient<O, F>(
    op: &O,
    theta: &[f64],
    f: &F,
    probes: &ProbeConfig,
    index: usize,
    cfg: &LanczosConfig,
) -> Result<(f64, Vec<f64>)>
where
    O: ParamOperator + ?Sized,
    F: SpectralFunction<Value = f64> + ?Sized,
{
    let z = real_probe::<O::Scalar>(probes, index, op.dim());
    gradient_forward_only(op, theta, &z, f, cfg)
        .map(|r| (r.value, r.grad))
        .map_err(tag(index))
}

fn check_count(probes: &ProbeConfig) -> Result<()> {
    if probes.count == 0 {
        Err(Error::input("at least one probe is required"))
    } else {
        Ok(())
    }
}

/// Mean of `p` independent quadrature values `zᵀ f(A) z`.
pub fn trace_estimate<O, F>(
    op: &O,
    theta: &[f64],
    f: &F,
    probes: &ProbeConfig,
    cfg: &LanczosConfig,
) -> Result<TraceEstimate>
where
    O: ParamOperator + ?Sized,
    F: SpectralFunction<Value = f64> + ?Sized,
{
    check_count(probes)?;
    let samples = (0..probes.count)
        .map(|i| probe_quadrature(op, theta, f, probes, i, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(TraceEstimate::from_samples(samples))
}

/// Probe average of forward-only gradients; uses the same probes as
/// [`trace_estimate`] for equal configs.
pub fn trace_gradient<O, F>(
    op: &O,
    theta: &[f64],
    f: &F,
    probes: &ProbeConfig,
    cfg: &LanczosConfig,
) -> Result<Vec<f64>>
where
    O: ParamOperator + ?Sized,
    F: SpectralFunction<Value = f64> + ?Sized,
{
    check_count(probes)?;
    let mut acc = vec![0.0; op.num_params()];
    for i in 0..probes.count {
        let (_, g) = probe_gradient(op, theta, f, probes, i, cfg)?;
        for (a, gi) in acc.iter_mut().zip(g) {
            *a += gi;
        }
    }
    let scale = 1.0 / probes.count as f64;
    Ok(acc.into_iter().map(|x| x * scale).collect())
}

//! Operators, start vectors and spectral functions selected from the
//! command line.

use std::path::PathBuf;
use std::str::FromStr;

use krylov_grad_core::dense::DenseSpectral;
use krylov_grad_core::estimators::{ProbeConfig, ProbeDistribution};
use krylov_grad_core::nalgebra::{DMatrix, DVector};
use krylov_grad_core::operator::{
    DenseSymmetricOperator, GraphDirection, ParamOperator, RbfKernelOperator, SparseGraphOperator,
};
use krylov_grad_core::spectral::{Phase, RealFunction};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::mtx::load_matrix_market;

/// Largest `n` for which dense references are computed by default.
pub const DENSE_CAP: usize = 3000;

/// Default RBF hyperparameters `(ℓ, σ_f, σ_n)`.
pub const RBF_THETA: [f64; 3] = [0.9, 1.1, 0.15];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FunctionSpec {
    Real(RealFunction),
    Phase(Phase),
}

impl FunctionSpec {
    pub fn name(&self) -> String {
        match self {
            FunctionSpec::Real(f) => krylov_grad_core::spectral::SpectralFunction::name(f),
            FunctionSpec::Phase(p) => format!("phase:{}", p.t),
        }
    }

    /// The real function, or a usage error naming `command`.
    pub fn real(&self, command: &str) -> Result<RealFunction> {
        match self {
            FunctionSpec::Real(f) => Ok(*f),
            FunctionSpec::Phase(_) => Err(Error::usage(format!(
                "{command} needs a real function (log, exp, sqrt, inv)"
            ))),
        }
    }
}

impl FromStr for FunctionSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "log" => FunctionSpec::Real(RealFunction::Log),
            "exp" => FunctionSpec::Real(RealFunction::Exp),
            "sqrt" => FunctionSpec::Real(RealFunction::Sqrt),
            "inv" => FunctionSpec::Real(RealFunction::Inverse),
            _ => match s.strip_prefix("phase:").map(str::parse::<f64>) {
                Some(Ok(t)) if t.is_finite() => FunctionSpec::Phase(Phase { t }),
                _ => {
                    return Err(Error::usage(format!(
                        "unknown function {s:?} (log, exp, sqrt, inv, phase:<t>)"
                    )));
                }
            },
        })
    }
}

/// Where `A(θ)` comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum MatrixSpec {
    /// Matrix Market file; one parameter shifting the diagonal.
    Matrix(PathBuf),
    /// `n` standard-normal inputs in `R^d`; parameters `(ℓ, σ_f, σ_n)`.
    Rbf { n: usize, d: usize },
    /// Diagonal matrix; one shift parameter.
    Diag(Vec<f64>),
    /// `B Bᵀ/n + I` with Gaussian `B`; parameters are a shift and a random
    /// symmetric direction.
    Random(usize),
}

/// Parses `v1,v2,...` or `a:b:n` (n evenly spaced values from a to b).
pub fn parse_diag(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::usage(format!("bad diagonal spec {s:?} (v1,v2,... or a:b:n)"));
    let parts: Vec<&str> = s.split(':').collect();
    let values = if parts.len() == 3 {
        let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
        match n {
            0 => return Err(bad()),
            1 => vec![a],
            _ => (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect(),
        }
    } else {
        parse_floats(s).map_err(|_| bad())?
    };
    if values.is_empty() || values.iter().any(|x| !x.is_finite()) {
        return Err(bad());
    }
    Ok(values)
}

/// Comma-separated floats.
pub fn parse_floats(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::usage(format!("bad number {t:?}")))
        })
        .collect()
}

/// Comma-separated step counts; `a:b` is the inclusive range.
pub fn parse_steps_list(s: &str) -> Result<Vec<usize>> {
    let bad = || Error::usage(format!("bad step list {s:?} (m1,m2,... or a:b)"));
    let mut out = Vec::new();
    for part in s.split(',') {
        let part = part.trim();
        if let Some((a, b)) = part.split_once(':') {
            let a: usize = a.trim().parse().map_err(|_| bad())?;
            let b: usize = b.trim().parse().map_err(|_| bad())?;
            if a > b {
                return Err(bad());
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| bad())?);
        }
    }
    if out.is_empty() || out.contains(&0) {
        return Err(bad());
    }
    Ok(out)
}

/// Parses `n,d`.
pub fn parse_rbf(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::usage(format!("bad RBF spec {s:?} (n,d)"));
    let (n, d) = s.split_once(',').ok_or_else(bad)?;
    let n: usize = n.trim().parse().map_err(|_| bad())?;
    let d: usize = d.trim().parse().map_err(|_| bad())?;
    if n == 0 || d == 0 {
        return Err(bad());
    }
    Ok((n, d))
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProbeSpec {
    E1,
    Random(ProbeDistribution),
    File(PathBuf),
}

impl FromStr for ProbeSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "e1" => Ok(ProbeSpec::E1),
            "rademacher" => Ok(ProbeSpec::Random(ProbeDistribution::Rademacher)),
            "gaussian" => Ok(ProbeSpec::Random(ProbeDistribution::Gaussian)),
            _ => match s.strip_prefix("file:") {
                Some(p) if !p.is_empty() => Ok(ProbeSpec::File(p.into())),
                _ => Err(Error::usage(format!(
                    "unknown probe {s:?} (e1, rademacher, gaussian, file:PATH)"
                ))),
            },
        }
    }
}

/// Stream offset separating probe draws from matrix draws under one seed.
const PROBE_SEED_OFFSET: u64 = 0x9e37_79b9_7f4a_7c15;

impl ProbeSpec {
    pub fn vector(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        match self {
            ProbeSpec::E1 => {
                let mut e = vec![0.0; n];
                e[0] = 1.0;
                Ok(e)
            }
            ProbeSpec::Random(dist) => Ok(probe_config(1, *dist, seed).probe(0, n)),
            ProbeSpec::File(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                let mut v = Vec::new();
                for (k, line) in text.lines().enumerate() {
                    for tok in line.split(|c: char| c.is_whitespace() || c == ',') {
                        if tok.is_empty() {
                            continue;
                        }
                        let x: f64 = tok
                            .parse()
                            .map_err(|_| Error::parse(path, k + 1, format!("bad number {tok:?}")))?;
                        v.push(x);
                    }
                }
                if v.len() != n {
                    return Err(Error::usage(format!(
                        "probe file {} has {} entries, operator has n = {n}",
                        path.display(),
                        v.len()
                    )));
                }
                Ok(v)
            }
        }
    }
}

/// Probe family for estimators, derived from the run seed.
pub fn probe_config(count: usize, dist: ProbeDistribution, seed: u64) -> ProbeConfig {
    ProbeConfig::new(count, dist, seed ^ PROBE_SEED_OFFSET)
}

pub enum Problem {
    Sparse(SparseGraphOperator),
    Rbf(RbfKernelOperator),
    Dense(DenseSymmetricOperator<f64>),
}

/// Runs `$body` with `$op` bound to the concrete operator.
macro_rules! with_operator {
    ($problem:expr, $op:ident => $body:expr) => {
        match $problem {
            $crate::source::Problem::Sparse($op) => $body,
            $crate::source::Problem::Rbf($op) => $body,
            $crate::source::Problem::Dense($op) => $body,
        }
    };
}
pub(crate) use with_operator;

impl Problem {
    pub fn dim(&self) -> usize {
        with_operator!(self, op => op.dim())
    }

    pub fn num_params(&self) -> usize {
        with_operator!(self, op => op.num_params())
    }

    pub fn default_theta(&self) -> Vec<f64> {
        match self {
            Problem::Rbf(_) => RBF_THETA.to_vec(),
            _ => vec![0.0; self.num_params()],
        }
    }

    /// Dense `A(θ)` and `∂A/∂θ_j`.
    pub fn dense(&self, theta: &[f64]) -> (DMatrix<f64>, Vec<DMatrix<f64>>) {
        with_operator!(self, op => {
            let dirs = (0..op.num_params()).map(|j| op.dense_derivative(theta, j)).collect();
            (op.dense_matrix(theta), dirs)
        })
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn build_problem(spec: &MatrixSpec, seed: u64) -> Result<Problem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(match spec {
        MatrixSpec::Matrix(path) => {
            let m = load_matrix_market(path)?;
            Problem::Sparse(m.to_sparse()?.with_directions(vec![GraphDirection::Shift])?)
        }
        MatrixSpec::Rbf { n, d } => {
            let inputs = (0..n * d).map(|_| normal(&mut rng)).collect();
            Problem::Rbf(RbfKernelOperator::new(inputs, *d)?)
        }
        MatrixSpec::Diag(values) => {
            let n = values.len();
            let a = DMatrix::from_diagonal(&DVector::from_column_slice(values));
            Problem::Dense(DenseSymmetricOperator::new(a, vec![DMatrix::identity(n, n)])?)
        }
        MatrixSpec::Random(n) => {
            let n = *n;
            if n == 0 {
                return Err(Error::usage("--random needs n ≥ 1"));
            }
            let b = DMatrix::from_fn(n, n, |_, _| normal(&mut rng));
            let a = &b * b.transpose() / n as f64 + DMatrix::identity(n, n);
            let s = DMatrix::from_fn(n, n, |_, _| normal(&mut rng));
            let e = (&s + s.transpose()) / (2.0 * (n as f64).sqrt());
            Problem::Dense(DenseSymmetricOperator::new(a, vec![DMatrix::identity(n, n), e])?)
        }
    })
}

/// Eigendecomposition of `A(θ)` with the dense parameter derivatives.
pub struct DenseReference {
    pub spectral: DenseSpectral<f64>,
    pub directions: Vec<DMatrix<f64>>,
}

impl DenseReference {
    pub fn new(problem: &Problem, theta: &[f64]) -> Result<Self> {
        let (a, directions) = problem.dense(theta);
        Ok(Self {
            spectral: DenseSpectral::new(&a)?,
            directions,
        })
    }
}

//! Subcommand bodies. Each returns the rows to emit plus any per-row
//! failures that should turn the exit code non-zero.

use std::path::Path;
use std::time::Instant;

use krylov_grad_core::estimators::{
    DatasetConfig, GradientSource, Optimizer, SensitivityKind, SensitivityQuery, TraceEstimate,
    TrainConfig, dense_network_sensitivity, generate_dataset, hamiltonian_loss_and_grad,
    hamiltonian_loss_and_grad_dense, hamiltonian_train, network_sensitivity_with_config,
    perturbed_start, probe_gradient,
};
use krylov_grad_core::gradient::{boundary_term_diagnostic, gradient_from_factorization};
use krylov_grad_core::lanczos::{LanczosConfig, Reorth, lanczos_factorize};
use krylov_grad_core::operator::{DenseSymmetricOperator, ParamOperator, build_pauli_dictionary};
use krylov_grad_core::spectral::{RealFunction, SpectralFunction, quadrature_value};
use krylov_grad_core::C64;

use crate::edgelist::load_edge_list;
use crate::error::{Error, Result};
use crate::parallel::map_indexed;
use crate::record::RunRecord;
use crate::source::{
    DENSE_CAP, DenseReference, FunctionSpec, Problem, ProbeSpec, probe_config, with_operator,
};

/// Settings shared by every subcommand.
#[derive(Debug, Clone)]
pub struct Common {
    pub reorth: Reorth,
    pub seed: u64,
    pub timing: bool,
    pub force_reference: bool,
}

impl Common {
    fn lanczos(&self, steps: usize) -> LanczosConfig {
        LanczosConfig::new(steps).with_reorth(self.reorth)
    }

    fn wants_reference(&self, n: usize) -> bool {
        n <= DENSE_CAP || self.force_reference
    }

    fn record(&self, experiment: &str, n: usize) -> RunRecord {
        let mut r = RunRecord::new(experiment);
        r.n = Some(n);
        r.seed = Some(self.seed);
        r.reorth = reorth_name(self.reorth).into();
        r
    }
}

pub fn reorth_name(r: Reorth) -> &'static str {
    match r {
        Reorth::None => "none",
        Reorth::Full => "full",
    }
}

#[derive(Debug, Default)]
pub struct Outcome {
    pub records: Vec<RunRecord>,
    /// Messages for computations that failed after output was produced.
    pub failures: Vec<String>,
}

impl From<Vec<RunRecord>> for Outcome {
    fn from(records: Vec<RunRecord>) -> Self {
        Self {
            records,
            failures: Vec::new(),
        }
    }
}

/// `|a − b| / |b|`, or `|a − b|` when `b` is zero.
pub fn rel_err(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    if b == 0.0 { d } else { d / b.abs() }
}

pub fn rel_err_vec(a: &[f64], b: &[f64]) -> f64 {
    let d = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let r = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    if r == 0.0 { d } else { d / r }
}

fn stopwatch(on: bool) -> Option<Instant> {
    on.then(Instant::now)
}

fn elapsed(t: Option<Instant>) -> Option<f64> {
    t.map(|t| t.elapsed().as_secs_f64())
}

fn check_steps(steps: usize) -> Result<()> {
    if steps == 0 {
        Err(Error::usage("--steps must be at least 1"))
    } else {
        Ok(())
    }
}

/// One quadrature `uᵀ f(A(θ)) u` with an optional dense reference.
pub fn quadform(
    problem: &Problem,
    theta: &[f64],
    probe: &ProbeSpec,
    function: FunctionSpec,
    steps: usize,
    common: &Common,
) -> Result<Outcome> {
    check_steps(steps)?;
    let n = problem.dim();
    let u = probe.vector(n, common.seed)?;
    let clock = stopwatch(common.timing);
    let cfg = common.lanczos(steps);
    let (value, steps_used, beta) = with_operator!(problem, op => {
        let fac = lanczos_factorize(op, theta, &u, &cfg)?;
        let v = match function {
            FunctionSpec::Real(f) => C64::new(quadrature_value(&fac, &f)?, 0.0),
            FunctionSpec::Phase(f) => quadrature_value(&fac, &f)?,
        };
        (v, fac.steps(), fac.beta_residual())
    });
    let mut r = common.record("quadform", n);
    r.wall_time = elapsed(clock);
    r.m = Some(steps);
    r.steps_used = Some(steps_used);
    r.function = function.name();
    r.theta = theta.to_vec();
    r.value = Some(value.re);
    r.beta_residual = Some(beta);
    if let FunctionSpec::Phase(_) = function {
        r.value_imag = Some(value.im);
    }
    if common.wants_reference(n) {
        let reference = DenseReference::new(problem, theta)?;
        let exact = match function {
            FunctionSpec::Real(f) => C64::new(reference.spectral.quadratic(&u, &f)?, 0.0),
            FunctionSpec::Phase(f) => reference.spectral.quadratic(&u, &f)?,
        };
        r.reference_value = Some(exact.re);
        r.value_rel_error = Some(if exact.norm_sqr() == 0.0 {
            (value - exact).norm_sqr().sqrt()
        } else {
            ((value - exact).norm_sqr() / exact.norm_sqr()).sqrt()
        });
        if let FunctionSpec::Phase(_) = function {
            r.note = format!("reference_imag={}", crate::record::format_float(exact.im));
        }
    }
    Ok(vec![r].into())
}

/// Forward and gradient errors against the dense reference at every depth
/// in `sweep`. All depths are truncations of a single Lanczos run.
pub fn gradcheck(
    problem: &Problem,
    theta: &[f64],
    probe: &ProbeSpec,
    f: RealFunction,
    sweep: &[usize],
    common: &Common,
) -> Result<Outcome> {
    let n = problem.dim();
    let u = probe.vector(n, common.seed)?;
    let max_m = *sweep.iter().max().ok_or_else(|| Error::usage("empty step list"))?;
    let reference = if common.wants_reference(n) {
        let dense = DenseReference::new(problem, theta)?;
        let value = dense.spectral.quadratic(&u, &f)?;
        let grad = dense
            .directions
            .iter()
            .map(|e| dense.spectral.frechet_quadratic(&u, e, &f))
            .collect::<krylov_grad_core::Result<Vec<_>>>()?;
        Some((value, grad))
    } else {
        None
    };
    let clock = stopwatch(common.timing);
    let fac = with_operator!(problem, op => lanczos_factorize(op, theta, &u, &common.lanczos(max_m))?);
    let mut records = Vec::with_capacity(sweep.len());
    for &m in sweep {
        let clock_m = stopwatch(common.timing);
        let tr = if m < fac.steps() { fac.truncated(m)? } else { fac.clone() };
        let report = with_operator!(problem, op => gradient_from_factorization(op, theta, &tr, &f)?);
        let mut r = common.record("gradcheck", n);
        r.m = Some(m);
        r.steps_used = Some(report.steps_used);
        r.function = f.name();
        r.theta = theta.to_vec();
        r.value = Some(report.value);
        r.grad = report.grad.clone();
        r.beta_residual = Some(report.beta_residual);
        if let Some((value, grad)) = &reference {
            r.reference_value = Some(*value);
            r.value_rel_error = Some(rel_err(report.value, *value));
            r.reference_grad = grad.clone();
            r.grad_rel_error = Some(rel_err_vec(&report.grad, grad));
        }
        r.wall_time = elapsed(clock_m);
        records.push(r);
    }
    if let (Some(first), Some(t)) = (records.first_mut(), elapsed(clock)) {
        // the shared factorization is charged to the first row
        first.wall_time = Some(t);
    }
    Ok(records.into())
}

/// Hutchinson estimate of `tr f(A(θ))` and its gradient; probes run in
/// parallel and are reduced in index order.
pub fn logdet(
    problem: &Problem,
    theta: &[f64],
    f: RealFunction,
    probes: usize,
    dist: krylov_grad_core::estimators::ProbeDistribution,
    steps: usize,
    common: &Common,
) -> Result<Outcome> {
    check_steps(steps)?;
    if probes == 0 {
        return Err(Error::usage("--probes must be at least 1"));
    }
    let n = problem.dim();
    let pc = probe_config(probes, dist, common.seed);
    let cfg = common.lanczos(steps);
    let clock = stopwatch(common.timing);
    let per_probe = with_operator!(problem, op => {
        map_indexed(probes, |i| probe_gradient(op, theta, &f, &pc, i, &cfg))?
    });
    let mut values = Vec::with_capacity(probes);
    let mut grad = vec![0.0; problem.num_params()];
    for res in per_probe {
        let (v, g) = res?;
        values.push(v);
        for (a, b) in grad.iter_mut().zip(&g) {
            *a += b;
        }
    }
    for a in &mut grad {
        *a /= probes as f64;
    }
    let est = TraceEstimate::from_samples(values);
    let mut r = common.record("logdet", n);
    r.wall_time = elapsed(clock);
    r.m = Some(steps);
    r.function = f.name();
    r.probes = Some(probes);
    r.theta = theta.to_vec();
    r.value = Some(est.mean);
    r.std_error = Some(est.std_error);
    r.grad = grad.clone();
    if common.wants_reference(n) {
        let dense = DenseReference::new(problem, theta)?;
        let lambda = dense.spectral.eigenvalues();
        krylov_grad_core::spectral::check_domain(&f, lambda)?;
        let exact: f64 = lambda.iter().map(|&l| f.eval(l)).sum();
        let exact_grad = dense
            .directions
            .iter()
            .map(|e| {
                let rot = dense.spectral.rotate(e)?;
                Ok(lambda.iter().enumerate().map(|(k, &l)| f.deriv(l) * rot[(k, k)]).sum())
            })
            .collect::<Result<Vec<f64>>>()?;
        r.reference_value = Some(exact);
        r.value_rel_error = Some(rel_err(est.mean, exact));
        r.grad_rel_error = Some(rel_err_vec(&grad, &exact_grad));
        r.reference_grad = exact_grad;
    }
    Ok(vec![r].into())
}

#[derive(Debug, Clone, Copy)]
pub struct NetsensArgs {
    pub kind: SensitivityKind,
    pub i: u64,
    pub j: u64,
    pub ell: Option<u64>,
    pub steps: usize,
}

/// Total-communicability or subgraph-centrality sensitivity of one entry
/// `(i, j)` of an edge-list graph; node ids are the ids used in the file.
pub fn netsens(graph_path: &Path, args: NetsensArgs, common: &Common) -> Result<Outcome> {
    check_steps(args.steps)?;
    let g = load_edge_list(graph_path)?;
    let index = |id: u64| {
        g.index_of(id)
            .ok_or_else(|| Error::usage(format!("node {id} does not appear in {}", graph_path.display())))
    };
    let (i, j) = (index(args.i)?, index(args.j)?);
    let (query, label) = match args.kind {
        SensitivityKind::TotalCommunicability => {
            (SensitivityQuery::total(i, j), format!("tn i={} j={}", args.i, args.j))
        }
        SensitivityKind::SubgraphCentrality => {
            let ell = args.ell.ok_or_else(|| Error::usage("--kind sc needs --ell"))?;
            (
                SensitivityQuery::subgraph(i, j, index(ell)?),
                format!("sc i={} j={} ell={ell}", args.i, args.j),
            )
        }
    };
    let n = g.graph.dim();
    let clock = stopwatch(common.timing);
    let value = network_sensitivity_with_config(&g.graph, &query, &common.lanczos(args.steps))?;
    let mut r = common.record("netsens", n);
    r.wall_time = elapsed(clock);
    r.m = Some(args.steps);
    r.function = "exp".into();
    r.query = label;
    r.value = Some(value);
    if common.wants_reference(n) {
        let exact = dense_network_sensitivity(&g.graph, &query)?;
        r.reference_value = Some(exact);
        r.value_rel_error = Some(rel_err(value, exact));
    }
    Ok(vec![r].into())
}

#[derive(Debug, Clone, Copy)]
pub struct HamlearnArgs {
    pub sites: usize,
    pub samples: usize,
    pub steps: usize,
    pub lr: f64,
    pub m: usize,
    pub optimizer: Optimizer,
    pub dense_gradient: bool,
    pub perturbation: f64,
}

/// Learns Pauli coefficients from synthetic time-evolution data. The data
/// uses `seed` and the start point `seed + 1`.
pub fn hamlearn(args: HamlearnArgs, common: &Common) -> Result<Outcome> {
    check_steps(args.m)?;
    if args.samples == 0 {
        return Err(Error::usage("--samples must be at least 1"));
    }
    if !(args.lr.is_finite() && args.lr > 0.0) {
        return Err(Error::usage("--lr must be positive"));
    }
    if !(args.perturbation.is_finite() && args.perturbation >= 0.0) {
        return Err(Error::usage("--perturbation must be non-negative"));
    }
    let op = build_pauli_dictionary(args.sites)?;
    let mut dc = DatasetConfig::new(args.sites, common.seed);
    dc.samples = args.samples;
    let data = generate_dataset(&op, &dc)?;
    let theta0 = perturbed_start(&data.theta_star, args.perturbation, common.seed.wrapping_add(1));
    let cfg = common.lanczos(args.m);
    let n = op.dim();

    let initial = hamiltonian_loss_and_grad(&op, &theta0, &data, &cfg)?;
    let initial_dense = hamiltonian_loss_and_grad_dense(&op, &theta0, &data)?;

    let source = if args.dense_gradient {
        GradientSource::Dense
    } else {
        GradientSource::Lanczos(cfg)
    };
    let mut tc = TrainConfig::new(args.steps, args.lr, source);
    tc.optimizer = args.optimizer;
    let clock = stopwatch(common.timing);
    let (theta, trajectory) = hamiltonian_train(&op, &data, &theta0, &tc)?;
    let total = elapsed(clock);

    let last = trajectory.len() - 1;
    let records = trajectory
        .iter()
        .enumerate()
        .map(|(k, t)| {
            let mut r = common.record("hamlearn", n);
            r.m = Some(args.m);
            r.function = "phase".into();
            r.step = Some(t.step);
            r.loss = Some(t.loss);
            r.param_error = Some(t.param_error);
            if k == 0 {
                r.theta = theta0.clone();
                r.grad = initial.grad.clone();
                r.reference_grad = initial_dense.grad.clone();
                r.grad_rel_error = Some(rel_err_vec(&initial.grad, &initial_dense.grad));
                r.reference_value = Some(initial_dense.loss);
            }
            if k == last {
                r.theta = theta.clone();
                r.wall_time = total;
                r.note = if args.dense_gradient { "dense gradient" } else { "" }.into();
            }
            r
        })
        .collect::<Vec<_>>();
    Ok(records.into())
}

/// Per depth and parameter: the forward-only gradient, a central
/// difference of the Lanczos value, the boundary term and its bound.
///
/// `method_error = |fd_derivative − grad|` is the part of the gradient
/// error caused by ignoring the basis variation; `error_bound` bounds it.
pub fn errorstudy(
    problem: &Problem,
    theta: &[f64],
    probe: &ProbeSpec,
    f: RealFunction,
    sweep: &[usize],
    h: f64,
    common: &Common,
) -> Result<Outcome> {
    let n = problem.dim();
    if !common.wants_reference(n) {
        return Err(Error::usage(format!(
            "errorstudy needs dense matrices; n = {n} exceeds {DENSE_CAP} (use --force-reference)"
        )));
    }
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::usage("--fd-step must be positive"));
    }
    let u = probe.vector(n, common.seed)?;
    let tangent = with_operator!(problem, op => DenseSymmetricOperator::tangent_at(op, theta)?);
    let origin = vec![0.0; tangent.num_params()];
    let dense = DenseReference::new(problem, theta)?;
    let exact = dense
        .directions
        .iter()
        .map(|e| dense.spectral.frechet_quadratic(&u, e, &f))
        .collect::<krylov_grad_core::Result<Vec<_>>>()?;
    let mut out = Outcome::default();
    for &m in sweep {
        let cfg = common.lanczos(m);
        for (j, &exact_j) in exact.iter().enumerate() {
            let clock = stopwatch(common.timing);
            let mut r = common.record("errorstudy", n);
            r.m = Some(m);
            r.param = Some(j);
            r.function = f.name();
            r.theta = theta.to_vec();
            r.reference_grad = vec![exact_j];
            match boundary_term_diagnostic(&tangent, &origin, &u, &f, &cfg, j, h) {
                Ok(d) => {
                    r.grad = vec![d.direct_term];
                    r.grad_rel_error = Some(rel_err(d.direct_term, exact_j));
                    r.beta_residual = Some(d.beta_residual);
                    r.boundary_term = Some(d.boundary_term);
                    r.error_bound = Some(d.error_bound());
                    r.fd_derivative = Some(d.fd_derivative);
                    r.method_error = Some((d.fd_derivative - d.direct_term).abs());
                }
                Err(e) => {
                    r.note = e.to_string();
                    out.failures.push(format!("m={m} param={j}: {e}"));
                }
            }
            r.wall_time = elapsed(clock);
            out.records.push(r);
        }
    }
    Ok(out)
}

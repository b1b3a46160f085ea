//! Command-line front end. All flags are parsed and validated before any
//! matrix is built.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use krylov_grad_core::estimators::{Optimizer, ProbeDistribution, SensitivityKind};
use krylov_grad_core::lanczos::Reorth;

use crate::error::{Error, Result};
use crate::experiments::{self, Common, HamlearnArgs, NetsensArgs, Outcome};
use crate::record::{Format, emit_records};
use crate::source::{
    FunctionSpec, MatrixSpec, ProbeSpec, build_problem, parse_diag, parse_floats, parse_rbf,
    parse_steps_list,
};

#[derive(Debug, Parser)]
#[command(name = "krylov-grad", version, about = "Lanczos quadrature values and forward-only gradients")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Quadrature value uᵀ f(A(θ)) u.
    Quadform {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, default_value_t = 30)]
        steps: usize,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Forward and gradient errors against the dense reference per depth.
    Gradcheck {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, default_value_t = 30)]
        steps: usize,
        /// Depths to report, e.g. `5,10,20` or `1:80`; defaults to `--steps`.
        #[arg(long)]
        param_sweep: Option<String>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Hutchinson estimate of tr f(A(θ)) and its gradient.
    Logdet {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, default_value_t = 30)]
        steps: usize,
        #[arg(long, default_value_t = 30)]
        probes: usize,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Sensitivity of one exp(A) entry to a rank-one graph perturbation.
    Netsens {
        /// Edge list with `u v` lines.
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        i: u64,
        #[arg(long)]
        j: u64,
        /// Node whose self-loop is perturbed (subgraph centrality only).
        #[arg(long)]
        ell: Option<u64>,
        #[arg(long, default_value_t = 32)]
        steps: usize,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Learns Pauli coefficients from synthetic time-evolution data.
    Hamlearn {
        #[arg(long, default_value_t = 4)]
        sites: usize,
        #[arg(long, default_value_t = 30)]
        samples: usize,
        /// Optimizer steps.
        #[arg(long, default_value_t = 400)]
        steps: usize,
        #[arg(long, default_value_t = 0.01)]
        lr: f64,
        /// Lanczos steps per matrix-function action.
        #[arg(long, default_value_t = 16)]
        m: usize,
        #[arg(long, value_enum, default_value_t = OptimizerArg::Adam)]
        optimizer: OptimizerArg,
        /// Train on dense-reference gradients instead of Lanczos ones.
        #[arg(long)]
        dense_gradient: bool,
        /// Standard deviation of the start-point perturbation.
        #[arg(long, default_value_t = 0.1)]
        perturbation: f64,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Boundary term, its bound and the observed gradient error per depth.
    Errorstudy {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, default_value_t = 10)]
        steps: usize,
        /// Depths to report; defaults to `1:steps`.
        #[arg(long)]
        param_sweep: Option<String>,
        /// Central-difference step in θ.
        #[arg(long, default_value_t = 1e-6)]
        fd_step: f64,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ReorthArg {
    None,
    Full,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Csv,
    Jsonl,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KindArg {
    Tn,
    Sc,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OptimizerArg {
    Adam,
    Gd,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long, value_enum, default_value_t = ReorthArg::Full)]
    reorth: ReorthArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path; `-` writes to stdout.
    #[arg(long, default_value = "-")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    /// log, exp, sqrt, inv or phase:<t>.
    #[arg(long)]
    function: Option<FunctionSpec>,
    /// Record wall-clock seconds (makes output non-reproducible).
    #[arg(long)]
    timing: bool,
    /// Compute dense references above the size cap.
    #[arg(long)]
    force_reference: bool,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct MatrixArgs {
    /// Matrix Market file (coordinate real symmetric); θ shifts the diagonal.
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// RBF kernel on `n` random points in `R^d`, given as `n,d`.
    #[arg(long, value_parser = parse_rbf)]
    rbf: Option<(usize, usize)>,
    /// Diagonal `v1,v2,...` or `a:b:n`; θ shifts the diagonal.
    #[arg(long, allow_hyphen_values = true)]
    diag: Option<String>,
    /// Random SPD matrix of size `n` with two parameter directions.
    #[arg(long)]
    random: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SourceArgs {
    #[command(flatten)]
    matrix: MatrixArgs,
    /// Parameter vector, comma separated; defaults depend on the source.
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<String>,
    /// e1, rademacher, gaussian or file:PATH; defaults to e1 (rademacher
    /// for logdet).
    #[arg(long)]
    probe: Option<ProbeSpec>,
}

impl SourceArgs {
    fn spec(&self) -> Result<MatrixSpec> {
        let m = &self.matrix;
        Ok(if let Some(p) = &m.matrix {
            MatrixSpec::Matrix(p.clone())
        } else if let Some((n, d)) = m.rbf {
            MatrixSpec::Rbf { n, d }
        } else if let Some(v) = &m.diag {
            MatrixSpec::Diag(parse_diag(v)?)
        } else {
            MatrixSpec::Random(m.random.expect("clap enforces one source"))
        })
    }

    fn theta(&self) -> Result<Option<Vec<f64>>> {
        self.theta.as_deref().map(parse_floats).transpose()
    }

    fn probe(&self) -> ProbeSpec {
        self.probe.clone().unwrap_or(ProbeSpec::E1)
    }

    /// Validates everything that does not need the operator.
    fn check(&self) -> Result<()> {
        self.spec()?;
        self.theta()?;
        Ok(())
    }
}

struct Resolved {
    common: Common,
    out: PathBuf,
    format: Format,
    function: Option<FunctionSpec>,
}

fn resolve(c: &CommonArgs) -> Resolved {
    Resolved {
        common: Common {
            reorth: match c.reorth {
                ReorthArg::None => Reorth::None,
                ReorthArg::Full => Reorth::Full,
            },
            seed: c.seed,
            timing: c.timing,
            force_reference: c.force_reference,
        },
        out: c.out.clone(),
        format: match c.format {
            FormatArg::Csv => Format::Csv,
            FormatArg::Jsonl => Format::Jsonl,
        },
        function: c.function,
    }
}

fn default_log(f: Option<FunctionSpec>) -> FunctionSpec {
    f.unwrap_or(FunctionSpec::Real(krylov_grad_core::spectral::RealFunction::Log))
}

fn no_function(f: Option<FunctionSpec>, command: &str) -> Result<()> {
    match f {
        None => Ok(()),
        Some(_) => Err(Error::usage(format!("{command} does not take --function"))),
    }
}

fn sweep(list: &Option<String>, default: Vec<usize>) -> Result<Vec<usize>> {
    match list {
        Some(s) => parse_steps_list(s),
        None => Ok(default),
    }
}

fn theta_for(source: &SourceArgs, problem: &crate::source::Problem) -> Result<Vec<f64>> {
    let theta = source.theta()?.unwrap_or_else(|| problem.default_theta());
    if theta.len() != problem.num_params() {
        return Err(Error::usage(format!(
            "--theta has {} entries, the operator has {} parameters",
            theta.len(),
            problem.num_params()
        )));
    }
    Ok(theta)
}

/// Validates flags, runs the command and writes the records.
pub fn execute(cli: Cli) -> Result<Outcome> {
    let (out, format, outcome) = match cli.command {
        Command::Quadform { source, steps, common } => {
            let r = resolve(&common);
            source.check()?;
            let f = default_log(r.function);
            let problem = build_problem(&source.spec()?, r.common.seed)?;
            let theta = theta_for(&source, &problem)?;
            let o = experiments::quadform(&problem, &theta, &source.probe(), f, steps, &r.common)?;
            (r.out, r.format, o)
        }
        Command::Gradcheck { source, steps, param_sweep, common } => {
            let r = resolve(&common);
            source.check()?;
            let f = default_log(r.function).real("gradcheck")?;
            let ms = sweep(&param_sweep, vec![steps])?;
            let problem = build_problem(&source.spec()?, r.common.seed)?;
            let theta = theta_for(&source, &problem)?;
            let o = experiments::gradcheck(&problem, &theta, &source.probe(), f, &ms, &r.common)?;
            (r.out, r.format, o)
        }
        Command::Logdet { source, steps, probes, common } => {
            let r = resolve(&common);
            source.check()?;
            let f = default_log(r.function).real("logdet")?;
            let dist = match source.probe.clone().unwrap_or(ProbeSpec::Random(ProbeDistribution::Rademacher)) {
                ProbeSpec::Random(d) => d,
                ProbeSpec::E1 | ProbeSpec::File(_) => {
                    return Err(Error::usage("logdet needs --probe rademacher or gaussian"));
                }
            };
            let problem = build_problem(&source.spec()?, r.common.seed)?;
            let theta = theta_for(&source, &problem)?;
            let o = experiments::logdet(&problem, &theta, f, probes, dist, steps, &r.common)?;
            (r.out, r.format, o)
        }
        Command::Netsens { graph, kind, i, j, ell, steps, common } => {
            let r = resolve(&common);
            no_function(r.function, "netsens")?;
            let kind = match kind {
                KindArg::Tn => SensitivityKind::TotalCommunicability,
                KindArg::Sc => SensitivityKind::SubgraphCentrality,
            };
            if matches!(kind, SensitivityKind::SubgraphCentrality) && ell.is_none() {
                return Err(Error::usage("--kind sc needs --ell"));
            }
            let args = NetsensArgs { kind, i, j, ell, steps };
            let o = experiments::netsens(&graph, args, &r.common)?;
            (r.out, r.format, o)
        }
        Command::Hamlearn {
            sites,
            samples,
            steps,
            lr,
            m,
            optimizer,
            dense_gradient,
            perturbation,
            common,
        } => {
            let r = resolve(&common);
            no_function(r.function, "hamlearn")?;
            let optimizer = match optimizer {
                OptimizerArg::Adam => Optimizer::default(),
                OptimizerArg::Gd => Optimizer::GradientDescent,
            };
            let args = HamlearnArgs {
                sites,
                samples,
                steps,
                lr,
                m,
                optimizer,
                dense_gradient,
                perturbation,
            };
            let o = experiments::hamlearn(args, &r.common)?;
            (r.out, r.format, o)
        }
        Command::Errorstudy { source, steps, param_sweep, fd_step, common } => {
            let r = resolve(&common);
            source.check()?;
            let f = default_log(r.function).real("errorstudy")?;
            if steps == 0 {
                return Err(Error::usage("--steps must be at least 1"));
            }
            let ms = sweep(&param_sweep, (1..=steps).collect())?;
            let problem = build_problem(&source.spec()?, r.common.seed)?;
            let theta = theta_for(&source, &problem)?;
            let o = experiments::errorstudy(&problem, &theta, &source.probe(), f, &ms, fd_step, &r.common)?;
            (r.out, r.format, o)
        }
    };
    emit_records(&outcome.records, format, out)?;
    Ok(outcome)
}

/// Entry point shared by the binary: exit code 0 iff every computation
/// succeeded, 2 for invalid arguments.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(outcome) if outcome.failures.is_empty() => ExitCode::SUCCESS,
        Ok(outcome) => {
            for f in &outcome.failures {
                eprintln!("error: {f}");
            }
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Usage(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}

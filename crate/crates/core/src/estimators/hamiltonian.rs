use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{Complex, ComplexField, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::bilinear_gradient;
use crate::dense::DenseSpectral;
use crate::error::{Error, Result};
use crate::lanczos::{LanczosConfig, lanczos_matfun_action};
use crate::operator::{ParamOperator, PauliSumOperator, check_theta};
use crate::spectral::{Phase, divided_difference_matrix};

type C64 = Complex<f64>;

/// One observation `c = exp(−i t H_⋆) x`.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianSample {
    pub x: Vec<C64>,
    pub t: f64,
    pub c: Vec<C64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianDataset {
    pub sites: usize,
    pub samples: Vec<HamiltonianSample>,
    pub theta_star: Vec<f64>,
    pub seed: u64,
}

/// Ground-truth and sampling settings for synthetic evolution data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetConfig {
    pub sites: usize,
    pub samples: usize,
    pub t_min: f64,
    pub t_max: f64,
    /// Center of the `X_i` and `Z_i` coefficients.
    pub single_site: f64,
    /// Center of the `Z_i Z_{i+1}` coefficients.
    pub coupling: f64,
    /// Standard deviation of the Gaussian jitter added to every coefficient.
    pub jitter: f64,
    pub seed: u64,
}

impl DatasetConfig {
    pub fn new(sites: usize, seed: u64) -> Self {
        Self {
            sites,
            samples: 30,
            t_min: 2.0,
            t_max: 6.0,
            single_site: 0.35,
            coupling: 1.0,
            jitter: 0.05,
            seed,
        }
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Draws `θ⋆`, random unit states and times, and evolves each state with a
/// dense eigendecomposition of `H_{θ⋆}`. Terms must follow the ordering of
/// [`build_pauli_dictionary`](crate::operator::build_pauli_dictionary).
pub fn generate_dataset(op: &PauliSumOperator, cfg: &DatasetConfig) -> Result<HamiltonianDataset> {
    if cfg.sites != op.sites() {
        return Err(Error::Dimension {
            what: "site count",
            expected: op.sites(),
            got: cfg.sites,
        });
    }
    if cfg.samples == 0 {
        return Err(Error::input("at least one sample is required"));
    }
    if !(cfg.t_min <= cfg.t_max) || !cfg.t_min.is_finite() || !cfg.t_max.is_finite() {
        return Err(Error::input("invalid evolution time range"));
    }
    let l = cfg.sites;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let theta_star: Vec<f64> = (0..op.num_params())
        .map(|j| {
            let center = if j < 2 * l { cfg.single_site } else { cfg.coupling };
            center + cfg.jitter * normal(&mut rng)
        })
        .collect();
    let spectral = DenseSpectral::new(&op.dense_matrix(&theta_star))?;
    let n = op.dim();
    let mut samples = Vec::with_capacity(cfg.samples);
    for _ in 0..cfg.samples {
        let mut x: Vec<C64> = (0..n)
            .map(|_| C64::new(normal(&mut rng), normal(&mut rng)))
            .collect();
        let norm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        x.iter_mut().for_each(|z| *z /= norm);
        let t = if cfg.t_min == cfg.t_max {
            cfg.t_min
        } else {
            rng.random_range(cfg.t_min..cfg.t_max)
        };
        let c = spectral.apply_function(&x, &Phase { t })?;
        samples.push(HamiltonianSample { x, t, c });
    }
    Ok(HamiltonianDataset {
        sites: l,
        samples,
        theta_star,
        seed: cfg.seed,
    })
}

/// `θ⋆ + scale·ξ` with `ξ ~ N(0, I)`.
pub fn perturbed_start(theta_star: &[f64], scale: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    theta_star.iter().map(|&t| t + scale * normal(&mut rng)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossAndGrad {
    pub loss: f64,
    pub grad: Vec<f64>,
}

fn check_data(op: &PauliSumOperator, theta: &[f64], data: &HamiltonianDataset) -> Result<()> {
    check_theta(op, theta)?;
    for s in &data.samples {
        Error::check_len("sample state", op.dim(), s.x.len())?;
        Error::check_len("sample target", op.dim(), s.c.len())?;
    }
    Ok(())
}

fn residual_sq(c: &[C64], y: &[C64]) -> f64 {
    c.iter().zip(y).map(|(a, b)| (a - b).norm_sqr()).sum()
}

/// `Σ_j ‖c_j − exp(−i t_j H_θ) x_j‖²` with Krylov matrix-function actions.
pub fn hamiltonian_loss(
    op: &PauliSumOperator,
    theta: &[f64],
    data: &HamiltonianDataset,
    cfg: &LanczosConfig,
) -> Result<f64> {
    check_data(op, theta, data)?;
    let mut loss = 0.0;
    for s in &data.samples {
        let y = lanczos_matfun_action(op, theta, &s.x, &Phase { t: s.t }, cfg)?;
        loss += residual_sq(&s.c, &y);
    }
    Ok(loss)
}

/// Loss and forward-only gradient.
///
/// Each term is `‖c‖² + ‖x‖² − 2 Re cᴴ exp(−i t H_θ) x`; only the bilinear
/// form depends on `θ`, and its gradient comes from complex polarization.
pub fn hamiltonian_loss_and_grad(
    op: &PauliSumOperator,
    theta: &[f64],
    data: &HamiltonianDataset,
    cfg: &LanczosConfig,
) -> Result<LossAndGrad> {
    check_data(op, theta, data)?;
    let mut loss = 0.0;
    let mut grad = vec![0.0; op.num_params()];
    for s in &data.samples {
        let f = Phase { t: s.t };
        let y = lanczos_matfun_action(op, theta, &s.x, &f, cfg)?;
        loss += residual_sq(&s.c, &y);
        let report = bilinear_gradient(op, theta, &f, &s.c, &s.x, cfg)?;
        for (g, r) in grad.iter_mut().zip(&report.grad) {
            *g -= 2.0 * r.re;
        }
    }
    Ok(LossAndGrad { loss, grad })
}

/// Reference loss and gradient from one dense eigendecomposition of `H_θ`:
/// `∂_j 𝓛 = Σ 2 Re aᴴ (F ∘ Qᴴ P_j Q) b` with `a = Qᴴ(y − c)`, `b = Qᴴ x`.
pub fn hamiltonian_loss_and_grad_dense(
    op: &PauliSumOperator,
    theta: &[f64],
    data: &HamiltonianDataset,
) -> Result<LossAndGrad> {
    check_data(op, theta, data)?;
    let spectral = DenseSpectral::new(&op.dense_matrix(theta))?;
    let q = spectral.eigenvectors();
    let rotated = (0..op.num_params())
        .map(|j| spectral.rotate(&op.dense_term(j)))
        .collect::<Result<Vec<_>>>()?;
    let mut loss = 0.0;
    let mut grad = vec![0.0; op.num_params()];
    for s in &data.samples {
        let f = Phase { t: s.t };
        let y = spectral.apply_function(&s.x, &f)?;
        loss += residual_sq(&s.c, &y);
        let r = DVector::from_iterator(y.len(), y.iter().zip(&s.c).map(|(a, b)| a - b));
        let a = q.ad_mul(&r);
        let b = q.ad_mul(&DVector::from_column_slice(&s.x));
        let fmat = divided_difference_matrix(spectral.eigenvalues(), &f)?;
        for (g, e) in grad.iter_mut().zip(&rotated) {
            let mut acc = C64::new(0.0, 0.0);
            for col in 0..b.len() {
                let mut inner = C64::new(0.0, 0.0);
                for row in 0..a.len() {
                    inner += a[row].conjugate() * fmat[(row, col)] * e[(row, col)];
                }
                acc += inner * b[col];
            }
            *g += 2.0 * acc.re;
        }
    }
    Ok(LossAndGrad { loss, grad })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Optimizer {
    GradientDescent,
    /// Bias-corrected Adam.
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl Default for Optimizer {
    fn default() -> Self {
        Optimizer::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GradientSource {
    Lanczos(LanczosConfig),
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub steps: usize,
    pub lr: f64,
    pub optimizer: Optimizer,
    pub source: GradientSource,
}

impl TrainConfig {
    pub fn new(steps: usize, lr: f64, source: GradientSource) -> Self {
        Self {
            steps,
            lr,
            optimizer: Optimizer::default(),
            source,
        }
    }
}

/// Loss and `‖θ − θ⋆‖` at the start of `step`; the last record is the
/// final iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainRecord {
    pub step: usize,
    pub loss: f64,
    pub param_error: f64,
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// First-order training from `theta0`; returns the final parameters and one
/// record per step plus one for the final iterate.
pub fn hamiltonian_train(
    op: &PauliSumOperator,
    data: &HamiltonianDataset,
    theta0: &[f64],
    cfg: &TrainConfig,
) -> Result<(Vec<f64>, Vec<TrainRecord>)> {
    check_data(op, theta0, data)?;
    Error::check_len("theta_star", op.num_params(), data.theta_star.len())?;
    if !(cfg.lr.is_finite() && cfg.lr > 0.0) {
        return Err(Error::input("learning rate must be positive and finite"));
    }
    let eval = |theta: &[f64]| match cfg.source {
        GradientSource::Lanczos(lc) => hamiltonian_loss_and_grad(op, theta, data, &lc),
        GradientSource::Dense => hamiltonian_loss_and_grad_dense(op, theta, data),
    };
    let p = theta0.len();
    let mut theta = theta0.to_vec();
    let mut m1 = vec![0.0; p];
    let mut m2 = vec![0.0; p];
    let mut records = Vec::with_capacity(cfg.steps + 1);
    for step in 0..=cfg.steps {
        let lg = eval(&theta)?;
        records.push(TrainRecord {
            step,
            loss: lg.loss,
            param_error: distance(&theta, &data.theta_star),
        });
        if step == cfg.steps {
            break;
        }
        if lg.grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::numerical("non-finite gradient during training"));
        }
        match cfg.optimizer {
            Optimizer::GradientDescent => {
                for (t, g) in theta.iter_mut().zip(&lg.grad) {
                    *t -= cfg.lr * g;
                }
            }
            Optimizer::Adam { beta1, beta2, eps } => {
                let k = (step + 1) as i32;
                let c1 = 1.0 - beta1.powi(k);
                let c2 = 1.0 - beta2.powi(k);
                for i in 0..p {
                    let g = lg.grad[i];
                    m1[i] = beta1 * m1[i] + (1.0 - beta1) * g;
                    m2[i] = beta2 * m2[i] + (1.0 - beta2) * g * g;
                    theta[i] -= cfg.lr * (m1[i] / c1) / ((m2[i] / c2).sqrt() + eps);
                }
            }
        }
    }
    Ok((theta, records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::build_pauli_dictionary;

    #[test]
    fn dataset_targets_are_unit_vectors() {
        let op = build_pauli_dictionary(2).unwrap();
        let data = generate_dataset(&op, &DatasetConfig::new(2, 3)).unwrap();
        assert_eq!(data.samples.len(), 30);
        for s in &data.samples {
            let nx: f64 = s.x.iter().map(|z| z.norm_sqr()).sum();
            let nc: f64 = s.c.iter().map(|z| z.norm_sqr()).sum();
            assert!((nx - 1.0).abs() < 1e-12 && (nc - 1.0).abs() < 1e-10);
            assert!((2.0..6.0).contains(&s.t));
        }
    }

    #[test]
    fn ground_truth_is_stationary() {
        let op = build_pauli_dictionary(2).unwrap();
        let data = generate_dataset(&op, &DatasetConfig::new(2, 5)).unwrap();
        let lg = hamiltonian_loss_and_grad(&op, &data.theta_star, &data, &LanczosConfig::new(4))
            .unwrap();
        assert!(lg.loss <= 1e-18, "{}", lg.loss);
        assert!(lg.grad.iter().all(|g| g.abs() < 1e-9));
    }

    #[test]
    fn lanczos_matches_dense_at_full_depth() {
        let op = build_pauli_dictionary(2).unwrap();
        let data = generate_dataset(&op, &DatasetConfig::new(2, 9)).unwrap();
        let theta = perturbed_start(&data.theta_star, 0.1, 1);
        let a = hamiltonian_loss_and_grad(&op, &theta, &data, &LanczosConfig::new(4)).unwrap();
        let b = hamiltonian_loss_and_grad_dense(&op, &theta, &data).unwrap();
        assert!((a.loss - b.loss).abs() < 1e-12 * b.loss);
        for (x, y) in a.grad.iter().zip(&b.grad) {
            assert!((x - y).abs() < 1e-10, "{x} vs {y}");
        }
    }

    #[test]
    fn training_from_truth_stays_put() {
        let op = build_pauli_dictionary(2).unwrap();
        let data = generate_dataset(&op, &DatasetConfig::new(2, 2)).unwrap();
        let cfg = TrainConfig::new(5, 0.01, GradientSource::Dense);
        let (theta, recs) = hamiltonian_train(&op, &data, &data.theta_star, &cfg).unwrap();
        assert_eq!(recs.len(), 6);
        assert!(distance(&theta, &data.theta_star) < 1e-9);
    }
}

//! Randomized invariants. Instances are drawn from a seed chosen by proptest,
//! so failures shrink to a reproducible seed.

mod common;

use common::*;
use krylov_grad_core::dense::DenseSpectral;
use krylov_grad_core::estimators::{
    ProbeConfig, ProbeDistribution, SensitivityQuery, bilinear_gradient, network_sensitivity,
    network_sensitivity_affine, trace_estimate,
};
use krylov_grad_core::gradient::{
    boundary_term_diagnostic, dense_value_and_gradient, gradient_forward_only, gradient_rank_one,
    sensitivity_matrix,
};
use krylov_grad_core::lanczos::{LanczosConfig, Reorth, lanczos_factorize, lanczos_matfun_action};
use krylov_grad_core::nalgebra::{DMatrix, DVector};
use krylov_grad_core::operator::{
    DenseSymmetricOperator, GraphDirection, ParamOperator, RbfKernelOperator, SparseGraphOperator,
    apply, build_pauli_dictionary, hermitian_defect,
};
use krylov_grad_core::spectral::{Phase, RealFunction, divided_difference_matrix, quadrature_value};
use krylov_grad_core::{C64, Error, Scalar};
use krylov_grad_core::operator::deriv_contract;
use proptest::prelude::*;

fn complex_vec(r: &mut rand_chacha::ChaCha8Rng, n: usize) -> Vec<C64> {
    (0..n).map(|_| C64::new(normal(r), normal(r))).collect()
}

fn operator_zoo(seed: u64) -> (DenseSymmetricOperator<f64>, RbfKernelOperator, SparseGraphOperator) {
    let mut r = rng(seed);
    let n = 9;
    let dense = DenseSymmetricOperator::new(random_symmetric(&mut r, n), vec![random_symmetric(&mut r, n)])
        .unwrap();
    let rbf = RbfKernelOperator::new(normal_vec(&mut r, 3 * n), 3).unwrap();
    let graph = SparseGraphOperator::from_edges(n, &random_edges(&mut r, n, 3))
        .unwrap()
        .with_directions(vec![
            GraphDirection::Shift,
            GraphDirection::RankOne { a: normal_vec(&mut r, n), b: normal_vec(&mut r, n) },
        ])
        .unwrap();
    (dense, rbf, graph)
}

/// Largest relative defect of `deriv_contract` against central differences
/// of `Re⟨w, A(θ)v⟩`, requiring the error to shrink ~4× when `h` halves
/// unless it already sits at roundoff.
fn contract_fd_defect<O: ParamOperator>(op: &O, theta: &[f64], seed: u64) -> f64 {
    let mut r = rng(seed);
    let n = op.dim();
    let mut draw = || -> Vec<O::Scalar> {
        (0..n)
            .map(|_| {
                let im = if O::Scalar::IS_COMPLEX { normal(&mut r) } else { 0.0 };
                O::Scalar::from_c64(C64::new(normal(&mut r), im)).unwrap()
            })
            .collect()
    };
    let (w, v) = (draw(), draw());
    let form = |t: &[f64]| {
        let y = apply(op, t, &v).unwrap();
        w.iter().zip(&y).map(|(a, b)| (a.to_c64().conj() * b.to_c64()).re).sum::<f64>()
    };
    let mut worst: f64 = 0.0;
    for j in 0..op.num_params() {
        let exact = deriv_contract(op, theta, j, &w, &v).unwrap();
        let fd = |h: f64| {
            let (mut tp, mut tm) = (theta.to_vec(), theta.to_vec());
            tp[j] += h;
            tm[j] -= h;
            (form(&tp) - form(&tm)) / (2.0 * h)
        };
        let scale = exact.abs().max(1.0);
        let d1 = (fd(1e-3) - exact) / scale;
        let d2 = (fd(5e-4) - exact) / scale;
        // Second order: halving h quarters the error, and Richardson
        // extrapolation removes the h² term.
        let second_order = d2.abs() <= 0.3 * d1.abs() || d2.abs() < 1e-9;
        worst = worst.max(if second_order { ((4.0 * d2 - d1) / 3.0).abs() } else { 1.0 });
    }
    worst
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn deriv_contract_matches_finite_differences(seed in any::<u64>()) {
        let (dense, rbf, graph) = operator_zoo(seed);
        let mut r = rng(seed ^ 2);
        prop_assert!(contract_fd_defect(&dense, &[normal(&mut r)], seed) <= 1e-6);
        let theta = [r.random_range(0.5..2.0), r.random_range(0.5..2.0), r.random_range(0.05..1.0)];
        prop_assert!(contract_fd_defect(&rbf, &theta, seed) <= 1e-6);
        prop_assert!(contract_fd_defect(&graph, &[normal(&mut r), normal(&mut r)], seed) <= 1e-6);
        let pauli = build_pauli_dictionary(3).unwrap();
        let th = normal_vec(&mut r, pauli.num_params());
        prop_assert!(contract_fd_defect(&pauli, &th, seed) <= 1e-6);
    }

    #[test]
    fn shipped_operators_are_hermitian(seed in any::<u64>()) {
        let (dense, rbf, graph) = operator_zoo(seed);
        let mut r = rng(seed ^ 1);
        let (x, y) = (normal_vec(&mut r, 9), normal_vec(&mut r, 9));
        prop_assert!(hermitian_defect(&dense, &[normal(&mut r)], &x, &y).unwrap() <= 1e-12);
        let theta = [r.random_range(0.3..2.0), r.random_range(0.3..2.0), r.random_range(0.0..1.0)];
        prop_assert!(hermitian_defect(&rbf, &theta, &x, &y).unwrap() <= 1e-12);
        prop_assert!(hermitian_defect(&graph, &[normal(&mut r), normal(&mut r)], &x, &y).unwrap() <= 1e-12);
        let pauli = build_pauli_dictionary(3).unwrap();
        let th = normal_vec(&mut r, pauli.num_params());
        let (cx, cy) = (complex_vec(&mut r, 8), complex_vec(&mut r, 8));
        prop_assert!(hermitian_defect(&pauli, &th, &cx, &cy).unwrap() <= 1e-12);
    }

    #[test]
    fn pauli_matvec_matches_tensor_products(seed in any::<u64>(), sites in 1usize..=6) {
        let mut r = rng(seed);
        let op = build_pauli_dictionary(sites).unwrap();
        let theta = normal_vec(&mut r, op.num_params());
        let x = complex_vec(&mut r, 1 << sites);
        let dense = kron_hamiltonian(sites, &theta);
        let want = dense * DVector::from_column_slice(&x);
        let got = apply(&op, &theta, &x).unwrap();
        let err = got.iter().zip(want.iter()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        let scale = want.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        prop_assert!(err <= 1e-13 * scale);
    }

    #[test]
    fn shift_leaves_basis_and_beta_unchanged(seed in any::<u64>(), c in -5.0f64..5.0) {
        let mut r = rng(seed);
        let n = 30;
        let a = random_symmetric(&mut r, n);
        let u = normal_vec(&mut r, n);
        let cfg = LanczosConfig::new(15);
        let f1 = lanczos_factorize(&DenseSymmetricOperator::constant(a.clone()).unwrap(), &[], &u, &cfg).unwrap();
        let shifted = &a + DMatrix::identity(n, n) * c;
        let f2 = lanczos_factorize(&DenseSymmetricOperator::constant(shifted).unwrap(), &[], &u, &cfg).unwrap();
        prop_assert!((f1.basis() - f2.basis()).amax() <= 1e-12);
        for (x, y) in f1.beta().iter().zip(f2.beta()) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
        for (x, y) in f1.alpha().iter().zip(f2.alpha()) {
            prop_assert!((x + c - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn identical_inputs_give_identical_bits(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (dense, rbf, _) = operator_zoo(seed);
        let u = normal_vec(&mut r, 9);
        let a = gradient_forward_only(&rbf, &[1.0, 1.0, 0.5], &u, &RealFunction::Log, &LanczosConfig::new(6)).unwrap();
        let b = gradient_forward_only(&rbf, &[1.0, 1.0, 0.5], &u, &RealFunction::Log, &LanczosConfig::new(6)).unwrap();
        prop_assert_eq!(a, b);
        let probes = ProbeConfig::new(5, ProbeDistribution::Gaussian, seed);
        let t1 = trace_estimate(&dense, &[0.2], &RealFunction::Exp, &probes, &LanczosConfig::new(5)).unwrap();
        let t2 = trace_estimate(&dense, &[0.2], &RealFunction::Exp, &probes, &LanczosConfig::new(5)).unwrap();
        prop_assert_eq!(t1, t2);
    }

    #[test]
    fn frechet_matches_central_differences(seed in any::<u64>(), m in 2usize..=8) {
        let mut r = rng(seed);
        let t = random_spd(&mut r, m, 0.5);
        let e = random_symmetric(&mut r, m);
        for (f, fun) in [(RealFunction::Exp, EXP), (RealFunction::Log, LOG), (RealFunction::Inverse, INV)] {
            let exact = DenseSpectral::new(&t).unwrap().frechet_matrix(&e, &f).unwrap().map(|z| z.re);
            let fd = |h: f64| {
                let p = Eigh::new(&(&t + &e * h)).matfun(fun);
                let q = Eigh::new(&(&t - &e * h)).matfun(fun);
                ((p - q) / (2.0 * h) - &exact).amax() / exact.amax()
            };
            let (e1, e2) = (fd(2e-3), fd(1e-3));
            prop_assert!(e2 <= 0.3 * e1 || e2 <= 1e-9, "{:?}: {} {}", f, e1, e2);
        }
    }

    #[test]
    fn full_depth_quadrature_is_exact(seed in any::<u64>(), n in 2usize..=25) {
        let mut r = rng(seed);
        let a = random_spd(&mut r, n, 0.5);
        let u = normal_vec(&mut r, n);
        let fac = lanczos_factorize(&DenseSymmetricOperator::constant(a.clone()).unwrap(), &[], &u, &LanczosConfig::new(n)).unwrap();
        let eig = Eigh::new(&a);
        for (f, fun) in [(RealFunction::Log, LOG), (RealFunction::Sqrt, SQRT), (RealFunction::Exp, EXP)] {
            prop_assert!(rel_err(quadrature_value(&fac, &f).unwrap(), eig.quad(&u, fun)) <= 1e-12);
        }
    }

    #[test]
    fn confluent_divided_difference_is_continuous(seed in any::<u64>(), delta in 1e-9f64..1e-6) {
        let mut r = rng(seed);
        let lo = r.random_range(0.5..2.0);
        let scale = 3.0;
        let lambda = [lo, lo + 2.0 * delta * scale, lo + scale];
        for (f, fun) in [(RealFunction::Exp, EXP), (RealFunction::Log, LOG)] {
            let fm = divided_difference_matrix(&lambda, &f).unwrap();
            // Midpoint or quotient: both are within |f''|·δ·scale of f'(λ_i).
            prop_assert!((fm[(0, 1)] - (fun.df)(lo)).abs() <= 50.0 * delta);
        }
    }

    #[test]
    fn sensitivity_matrix_is_symmetric(seed in any::<u64>(), m in 1usize..=12) {
        let mut r = rng(seed);
        let alpha = normal_vec(&mut r, m);
        let beta: Vec<f64> = (1..m).map(|_| r.random_range(0.1..2.0)).collect();
        let eig = krylov_grad_core::spectral::tridiag_eigen(&alpha, &beta).unwrap();
        let g = sensitivity_matrix(&eig, 2.0, &RealFunction::Exp).unwrap();
        prop_assert!((&g - g.transpose()).amax() <= 1e-13 * g.amax());
    }

    #[test]
    fn invariance_makes_gradient_exact(seed in any::<u64>(), n in 2usize..=20) {
        let mut r = rng(seed);
        let op = DenseSymmetricOperator::new(random_spd(&mut r, n, 1.0), vec![random_symmetric(&mut r, n), random_symmetric(&mut r, n)]).unwrap();
        let u = normal_vec(&mut r, n);
        let rep = gradient_forward_only(&op, &[0.05, -0.05], &u, &RealFunction::Log, &LanczosConfig::new(n)).unwrap();
        let reference = dense_value_and_gradient(&op, &[0.05, -0.05], &u, &RealFunction::Log).unwrap();
        prop_assert!(rel_err_vec(&rep.grad, &reference.grad) <= 1e-9);
    }

    #[test]
    fn residual_bounds_gradient_error(seed in any::<u64>(), m in 2usize..=6) {
        let mut r = rng(seed);
        let n = 12;
        let op = DenseSymmetricOperator::new(random_symmetric(&mut r, n), vec![random_symmetric(&mut r, n)]).unwrap();
        let u = normal_vec(&mut r, n);
        match boundary_term_diagnostic(&op, &[0.0], &u, &RealFunction::Exp, &LanczosConfig::new(m), 0, 1e-6) {
            Ok(d) => {
                let err = (d.direct_term - d.fd_derivative).abs();
                // The bound is exact up to finite-difference error in φ̂.
                prop_assert!(err <= d.error_bound() + 1e-7 * d.fd_derivative.abs().max(1.0));
            }
            Err(Error::Diagnostic(_)) => {}
            Err(e) => prop_assert!(false, "{}", e),
        }
    }

    #[test]
    fn rank_one_and_affine_paths_agree(seed in any::<u64>(), m in 2usize..=12) {
        let mut r = rng(seed);
        let n = 16;
        let a0 = random_symmetric(&mut r, n);
        let (a, b, u) = (normal_vec(&mut r, n), normal_vec(&mut r, n), normal_vec(&mut r, n));
        let dir = DMatrix::from_fn(n, n, |i, j| 0.5 * (a[i] * b[j] + b[i] * a[j]));
        let op = DenseSymmetricOperator::new(a0, vec![dir]).unwrap();
        let cfg = LanczosConfig::new(m);
        let generic = gradient_forward_only(&op, &[0.0], &u, &RealFunction::Exp, &cfg).unwrap();
        let fac = lanczos_factorize(&op, &[0.0], &u, &cfg).unwrap();
        let rank_one = gradient_rank_one(&fac, &RealFunction::Exp, &a, &b).unwrap();
        prop_assert!((rank_one - generic.grad[0]).abs() <= 1e-12 * generic.grad[0].abs().max(1.0));
    }

    #[test]
    fn network_paths_agree(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = 40;
        let edges = random_edges(&mut r, n, 4);
        let g = SparseGraphOperator::from_edges(n, &edges).unwrap();
        let (i, j) = edges[r.random_range(0..edges.len())];
        let ell = r.random_range(0..n);
        for q in [SensitivityQuery::total(i, j), SensitivityQuery::subgraph(i, j, ell), SensitivityQuery::subgraph(i, i, i)] {
            let x = network_sensitivity(&g, &q, 12).unwrap();
            let y = network_sensitivity_affine(&g, &q, 12).unwrap();
            prop_assert!((x - y).abs() <= 1e-12 * y.abs().max(1e-300), "{:?}: {} {}", q, x, y);
        }
    }

    #[test]
    fn phase_action_is_unitary(seed in any::<u64>(), t in 0.1f64..6.0) {
        let mut r = rng(seed);
        let op = build_pauli_dictionary(4).unwrap();
        let theta = normal_vec(&mut r, op.num_params());
        let u = complex_vec(&mut r, 16);
        let y = lanczos_matfun_action(&op, &theta, &u, &Phase { t }, &LanczosConfig::new(16)).unwrap();
        let nu = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let ny = y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        prop_assert!((nu - ny).abs() <= 1e-8 * nu);
    }

    #[test]
    fn complex_bilinear_gradient_matches_dense(seed in any::<u64>()) {
        let mut r = rng(seed);
        let op = build_pauli_dictionary(3).unwrap();
        let theta = normal_vec(&mut r, op.num_params());
        let (u, v) = (complex_vec(&mut r, 8), complex_vec(&mut r, 8));
        let f = Phase { t: 1.3 };
        let rep = bilinear_gradient(&op, &theta, &f, &u, &v, &LanczosConfig::new(8)).unwrap();
        let spectral = DenseSpectral::new(&op.dense_matrix(&theta)).unwrap();
        for j in 0..op.num_params() {
            let want = spectral.frechet_bilinear(&u, &v, &op.dense_term(j), &f).unwrap();
            prop_assert!((rep.grad[j] - want).norm_sqr().sqrt() <= 1e-10 * want.norm_sqr().sqrt().max(1.0));
        }
    }
}

/// `Σ_j θ_j P_j` from explicit Kronecker products, dictionary order
/// `X_0..X_{L−1}, Z_0..Z_{L−1}, Z_iZ_{i+1}`.
fn kron_hamiltonian(sites: usize, theta: &[f64]) -> DMatrix<C64> {
    let x = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
    let z = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
    let id = DMatrix::<f64>::identity(2, 2);
    let kron = |ops: &[(usize, &DMatrix<f64>)]| {
        let mut m = DMatrix::<f64>::identity(1, 1);
        for s in 0..sites {
            m = m.kronecker(ops.iter().find(|(i, _)| *i == s).map_or(&id, |(_, f)| *f));
        }
        m
    };
    let mut terms = Vec::new();
    terms.extend((0..sites).map(|i| kron(&[(i, &x)])));
    terms.extend((0..sites).map(|i| kron(&[(i, &z)])));
    terms.extend((0..sites.saturating_sub(1)).map(|i| kron(&[(i, &z), (i + 1, &z)])));
    let n = 1 << sites;
    let mut h = DMatrix::<f64>::zeros(n, n);
    for (t, p) in theta.iter().zip(terms) {
        h += p * *t;
    }
    h.map(|v| C64::new(v, 0.0))
}

#[test]
fn hutchinson_is_unbiased() {
    let mut r = rng(5);
    let n = 50;
    let a = random_spd(&mut r, n, 0.5);
    let exact: f64 = Eigh::new(&a).lambda.iter().map(|l| l.ln()).sum();
    let op = DenseSymmetricOperator::constant(a).unwrap();
    let est = trace_estimate(&op, &[], &RealFunction::Log, &ProbeConfig::rademacher(10_000, 6), &LanczosConfig::new(n))
        .unwrap();
    assert!((est.mean - exact).abs() <= 4.0 * est.std_error, "{} vs {exact} ± {}", est.mean, est.std_error);
}

#[test]
fn quadrature_converges_without_reorthogonalization() {
    // One dominant, well-separated eigenvalue drives early loss of orthogonality.
    let mut r = rng(7);
    let n = 120;
    let mut lambda: Vec<f64> = (0..n).map(|i| 1.0 + i as f64 / n as f64).collect();
    lambda[n - 1] = 100.0;
    let b = DMatrix::from_fn(n, n, |_, _| normal(&mut r));
    let q = b.qr().q();
    let a = &q * DMatrix::from_diagonal(&DVector::from_vec(lambda)) * q.transpose();
    let a = (&a + a.transpose()) * 0.5;
    let u = normal_vec(&mut r, n);
    let exact = Eigh::new(&a).quad(&u, LOG);
    let op = DenseSymmetricOperator::constant(a).unwrap();
    let cfg = LanczosConfig::new(60).with_reorth(Reorth::None);
    let fac = lanczos_factorize(&op, &[], &u, &cfg).unwrap();
    assert!(fac.orthogonality_defect() > 1e-8, "orthogonality was not lost");
    let v = quadrature_value(&fac, &RealFunction::Log).unwrap();
    assert!(rel_err(v, exact) < 1e-10);
}

#[test]
fn hermitian_defect_flags_asymmetry() {
    let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
    assert!(DenseSymmetricOperator::constant(a).is_err());
}

use rand::Rng;

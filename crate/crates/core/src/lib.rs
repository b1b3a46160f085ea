//! Matrix-free Lanczos quadrature for quadratic forms `uᴴ f(A(θ)) u` and their
//! parameter gradients.
//!
//! The gradient path never differentiates the Lanczos recurrence. A single
//! forward pass produces the Krylov basis `V` and tridiagonal `T`; the
//! sensitivity of the quadrature value with respect to `T` is a small dense
//! matrix `G`, and the parameter gradient is assembled from `k` derivative
//! contractions `w_iᴴ (∂A/∂θ_j) v_i` with `W = V G`.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! thread pools live in the `krylov-grad` companion crate.
//!
//! ```
//! use krylov_grad_core::operator::DenseSymmetricOperator;
//! use krylov_grad_core::gradient::gradient_forward_only;
//! use krylov_grad_core::lanczos::LanczosConfig;
//! use krylov_grad_core::spectral::RealFunction;
//! use nalgebra::DMatrix;
//!
//! // A(θ) = diag(1, 2, 3) + θ·I
//! let a0 = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 2.0, 3.0]));
//! let op = DenseSymmetricOperator::new(a0, vec![DMatrix::identity(3, 3)]).unwrap();
//! let u = [1.0, 1.0, 1.0];
//! let report = gradient_forward_only(&op, &[0.0], &u, &RealFunction::Log, &LanczosConfig::new(3)).unwrap();
//! assert!((report.value - 6.0f64.ln()).abs() < 1e-12);
//! // d/dθ Σ log(λ_i + θ) = Σ 1/λ_i
//! assert!((report.grad[0] - (1.0 + 0.5 + 1.0 / 3.0)).abs() < 1e-12);
//! ```
#![no_std]

extern crate alloc;

pub mod dense;
pub mod error;
pub mod estimators;
pub mod gradient;
pub mod lanczos;
pub mod operator;
pub mod scalar;
pub mod spectral;

pub use error::{Error, Result};
pub use scalar::{FnValue, Scalar};

pub use nalgebra;
pub use nalgebra::Complex;

/// Complex double used for Hermitian operators and complex spectral functions.
pub type C64 = Complex<f64>;

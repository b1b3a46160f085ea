//! Scalar fields for operators and spectral-function values.

use core::fmt::Debug;
use core::ops::{Add, AddAssign, Mul, Sub};

use nalgebra::{ComplexField, Complex};

/// Entry type of a Hermitian operator: `f64` or `Complex<f64>`.
///
/// Inner products are conjugate-linear in the first argument.
pub trait Scalar: ComplexField<RealField = f64> + Copy + Send + Sync + Debug {
    const IS_COMPLEX: bool;
    const ZERO: Self;
    const ONE: Self;

    /// The imaginary unit, when the field has one.
    fn imag_unit() -> Option<Self>;

    fn from_c64(z: Complex<f64>) -> Option<Self>;

    fn to_c64(self) -> Complex<f64>;
}

impl Scalar for f64 {
    const IS_COMPLEX: bool = false;
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;

    fn imag_unit() -> Option<Self> {
        None
    }

    fn from_c64(z: Complex<f64>) -> Option<Self> {
        (z.im == 0.0).then_some(z.re)
    }

    fn to_c64(self) -> Complex<f64> {
        Complex::new(self, 0.0)
    }
}

impl Scalar for Complex<f64> {
    const IS_COMPLEX: bool = true;
    const ZERO: Self = Complex::new(0.0, 0.0);
    const ONE: Self = Complex::new(1.0, 0.0);

    fn imag_unit() -> Option<Self> {
        Some(Complex::new(0.0, 1.0))
    }

    fn from_c64(z: Complex<f64>) -> Option<Self> {
        Some(z)
    }

    fn to_c64(self) -> Complex<f64> {
        self
    }
}

/// `⟨x, y⟩ = Σ conj(x_i) y_i`.
pub fn dot<S: Scalar>(x: &[S], y: &[S]) -> S {
    x.iter()
        .zip(y)
        .fold(S::ZERO, |acc, (&a, &b)| acc + a.conjugate() * b)
}

pub fn norm<S: Scalar>(x: &[S]) -> f64 {
    x.iter()
        .fold(0.0, |acc, &a| acc + a.modulus_squared())
        .sqrt()
}

/// `y ← y + a·x`
pub fn axpy<S: Scalar>(a: S, x: &[S], y: &mut [S]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Value of a spectral function: `f64` or `Complex<f64>`.
///
/// The gradient machinery works on the real components separately; a
/// complex value contributes two real "parts".
pub trait FnValue:
    nalgebra::Scalar
    + Copy
    + Debug
    + PartialEq
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + AddAssign
    + Mul<f64, Output = Self>
{
    const PARTS: usize;

    fn zero() -> Self;

    fn part(self, k: usize) -> f64;

    fn from_parts(parts: &[f64]) -> Self;

    fn to_c64(self) -> Complex<f64>;

    fn is_finite(self) -> bool;

    fn magnitude(self) -> f64 {
        let z = self.to_c64();
        z.re.hypot(z.im)
    }
}

impl FnValue for f64 {
    const PARTS: usize = 1;

    fn zero() -> Self {
        0.0
    }

    fn part(self, _k: usize) -> f64 {
        self
    }

    fn from_parts(parts: &[f64]) -> Self {
        parts[0]
    }

    fn to_c64(self) -> Complex<f64> {
        Complex::new(self, 0.0)
    }

    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

impl FnValue for Complex<f64> {
    const PARTS: usize = 2;

    fn zero() -> Self {
        Complex::new(0.0, 0.0)
    }

    fn part(self, k: usize) -> f64 {
        if k == 0 { self.re } else { self.im }
    }

    fn from_parts(parts: &[f64]) -> Self {
        Complex::new(parts[0], parts[1])
    }

    fn to_c64(self) -> Complex<f64> {
        self
    }

    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Product of an operator scalar with a spectral-function value.
///
/// `f64 · f64` stays real; any complex factor makes the result complex.
pub trait Mix<V: FnValue>: Scalar {
    type Out: Scalar;

    fn mix(self, v: V) -> Self::Out;
}

impl Mix<f64> for f64 {
    type Out = f64;

    fn mix(self, v: f64) -> f64 {
        self * v
    }
}

impl Mix<Complex<f64>> for f64 {
    type Out = Complex<f64>;

    fn mix(self, v: Complex<f64>) -> Complex<f64> {
        v * self
    }
}

impl Mix<f64> for Complex<f64> {
    type Out = Complex<f64>;

    fn mix(self, v: f64) -> Complex<f64> {
        self * v
    }
}

impl Mix<Complex<f64>> for Complex<f64> {
    type Out = Complex<f64>;

    fn mix(self, v: Complex<f64>) -> Complex<f64> {
        self * v
    }
}

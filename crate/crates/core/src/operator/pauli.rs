use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::{Complex, ComplexField, DMatrix};

use super::ParamOperator;
use crate::error::{Error, Result};

type C64 = Complex<f64>;

/// Largest site count accepted by [`build_pauli_dictionary`].
pub const MAX_PAULI_SITES: usize = 12;

/// Tensor product of `I`, `X` and `Z` factors.
///
/// Site `i` of an `L`-site chain maps to bit `L − 1 − i` of the basis index,
/// so site 0 is the leftmost tensor factor. `P|b⟩ = (−1)^{|b ∧ z|} |b ⊕ x|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PauliString {
    x_mask: u32,
    z_mask: u32,
}

impl PauliString {
    /// `x_mask` and `z_mask` select the sites carrying `X` and `Z`; they must
    /// not overlap (no `Y` factors).
    pub fn new(x_mask: u32, z_mask: u32) -> Result<Self> {
        if x_mask & z_mask != 0 {
            return Err(Error::input("X and Z factors on the same site"));
        }
        Ok(Self { x_mask, z_mask })
    }

    pub fn x(sites: usize, i: usize) -> Self {
        Self {
            x_mask: 1 << (sites - 1 - i),
            z_mask: 0,
        }
    }

    pub fn z(sites: usize, i: usize) -> Self {
        Self {
            x_mask: 0,
            z_mask: 1 << (sites - 1 - i),
        }
    }

    pub fn zz(sites: usize, i: usize) -> Self {
        Self {
            x_mask: 0,
            z_mask: (1 << (sites - 1 - i)) | (1 << (sites - 2 - i)),
        }
    }

    /// Per-site labels, e.g. `"IXI"` or `"ZZI"`.
    pub fn label(&self, sites: usize) -> String {
        (0..sites)
            .map(|i| {
                let bit = 1u32 << (sites - 1 - i);
                if self.x_mask & bit != 0 {
                    'X'
                } else if self.z_mask & bit != 0 {
                    'Z'
                } else {
                    'I'
                }
            })
            .collect()
    }

    #[inline]
    fn sign(&self, b: usize) -> f64 {
        if (b as u32 & self.z_mask).count_ones() % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// `y ← y + coeff · P x`.
    pub fn apply_add(&self, coeff: f64, x: &[C64], y: &mut [C64]) {
        let flip = self.x_mask as usize;
        for (c, yc) in y.iter_mut().enumerate() {
            let b = c ^ flip;
            *yc += x[b] * (coeff * self.sign(b));
        }
    }

    /// `wᴴ P v`.
    pub fn expectation(&self, w: &[C64], v: &[C64]) -> C64 {
        let flip = self.x_mask as usize;
        let mut acc = C64::new(0.0, 0.0);
        for (c, wc) in w.iter().enumerate() {
            let b = c ^ flip;
            acc += wc.conjugate() * v[b] * self.sign(b);
        }
        acc
    }
}

/// `H_θ = Σ_j θ_j P_j` on `L` sites, applied term by term without forming
/// the `2^L × 2^L` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSumOperator {
    sites: usize,
    terms: Vec<PauliString>,
}

impl PauliSumOperator {
    pub fn new(sites: usize, terms: Vec<PauliString>) -> Result<Self> {
        if sites == 0 || sites > MAX_PAULI_SITES {
            return Err(Error::input(format!(
                "site count {sites} outside 1..={MAX_PAULI_SITES}"
            )));
        }
        let limit = 1u32 << sites;
        if terms.iter().any(|t| t.x_mask >= limit || t.z_mask >= limit) {
            return Err(Error::input("Pauli string acts outside the chain"));
        }
        Ok(Self { sites, terms })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn terms(&self) -> &[PauliString] {
        &self.terms
    }

    pub fn labels(&self) -> Vec<String> {
        self.terms.iter().map(|t| t.label(self.sites)).collect()
    }

    /// Dense matrix of term `j`.
    pub fn dense_term(&self, j: usize) -> DMatrix<C64> {
        let n = 1usize << self.sites;
        let term = self.terms[j];
        let mut m = DMatrix::zeros(n, n);
        for b in 0..n {
            m[(b ^ term.x_mask as usize, b)] = C64::new(term.sign(b), 0.0);
        }
        m
    }
}

/// Transverse-field Ising dictionary ordered
/// `{X_0..X_{L−1}, Z_0..Z_{L−1}, Z_0Z_1..Z_{L−2}Z_{L−1}}`, `p = 3L − 1`.
pub fn build_pauli_dictionary(sites: usize) -> Result<PauliSumOperator> {
    if sites == 0 || sites > MAX_PAULI_SITES {
        return Err(Error::input(format!(
            "site count {sites} outside 1..={MAX_PAULI_SITES}"
        )));
    }
    let mut terms = Vec::with_capacity(3 * sites - 1);
    terms.extend((0..sites).map(|i| PauliString::x(sites, i)));
    terms.extend((0..sites).map(|i| PauliString::z(sites, i)));
    terms.extend((0..sites - 1).map(|i| PauliString::zz(sites, i)));
    PauliSumOperator::new(sites, terms)
}

impl ParamOperator for PauliSumOperator {
    type Scalar = C64;

    fn dim(&self) -> usize {
        1 << self.sites
    }

    fn num_params(&self) -> usize {
        self.terms.len()
    }

    fn matvec_into(&self, theta: &[f64], x: &[C64], y: &mut [C64]) {
        y.fill(C64::new(0.0, 0.0));
        for (term, &t) in self.terms.iter().zip(theta) {
            term.apply_add(t, x, y);
        }
    }

    fn deriv_contract_unchecked(&self, _theta: &[f64], j: usize, w: &[C64], v: &[C64]) -> f64 {
        self.terms[j].expectation(w, v).re
    }

    fn dense_derivative(&self, _theta: &[f64], j: usize) -> DMatrix<C64> {
        self.dense_term(j)
    }
}

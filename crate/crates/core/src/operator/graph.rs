use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use super::ParamOperator;
use crate::error::{Error, Result};

/// Parameter direction of a [`SparseGraphOperator`].
#[derive(Debug, Clone, PartialEq)]
pub enum GraphDirection {
    /// `∂A/∂θ = I`.
    Shift,
    /// `∂A/∂θ = (a bᵀ + b aᵀ) / 2`.
    RankOne { a: Vec<f64>, b: Vec<f64> },
}

/// Symmetric sparse matrix in CSR form, optionally with affine parameter
/// directions `A(θ) = A₀ + Σ_j θ_j E_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseGraphOperator {
    n: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
    directions: Vec<GraphDirection>,
}

impl SparseGraphOperator {
    /// Builds from raw CSR arrays. Rows must have sorted, unique column
    /// indices and the stored pattern and values must be symmetric.
    pub fn from_csr(
        n: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::input("graph must have at least one node"));
        }
        Error::check_len("row offsets", n + 1, row_offsets.len())?;
        Error::check_len("CSR values", col_indices.len(), values.len())?;
        if row_offsets[0] != 0 || row_offsets[n] != col_indices.len() {
            return Err(Error::input("row offsets do not cover the column array"));
        }
        for r in 0..n {
            let (lo, hi) = (row_offsets[r], row_offsets[r + 1]);
            if lo > hi {
                return Err(Error::input(format!("row offsets decrease at row {r}")));
            }
            let cols = &col_indices[lo..hi];
            if cols.iter().any(|&c| c >= n) {
                return Err(Error::input(format!("column index out of range in row {r}")));
            }
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::input(format!(
                    "row {r} has unsorted or duplicate columns"
                )));
            }
        }
        let op = Self {
            n,
            row_offsets,
            col_indices,
            values,
            directions: Vec::new(),
        };
        for r in 0..n {
            for (c, v) in op.row(r) {
                if op.get(c, r) != Some(v) {
                    return Err(Error::input(format!(
                        "entry ({r}, {c}) has no symmetric partner"
                    )));
                }
            }
        }
        Ok(op)
    }

    /// Builds a symmetric matrix from `(row, col, value)` triplets. Each
    /// off-diagonal triplet is mirrored; repeated positions are summed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut entries: Vec<(usize, usize, f64)> = Vec::with_capacity(2 * triplets.len());
        for &(i, j, v) in triplets {
            if i >= n || j >= n {
                return Err(Error::input(format!(
                    "triplet ({i}, {j}) out of range for n = {n}"
                )));
            }
            entries.push((i, j, v));
            if i != j {
                entries.push((j, i, v));
            }
        }
        entries.sort_by_key(|e| (e.0, e.1));
        let mut row_offsets = vec![0usize; n + 1];
        let mut col_indices = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in entries {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            last = Some((i, j));
            row_offsets[i + 1] += 1;
            col_indices.push(j);
            values.push(v);
        }
        for r in 0..n {
            row_offsets[r + 1] += row_offsets[r];
        }
        Self::from_csr(n, row_offsets, col_indices, values)
    }

    /// Unweighted undirected graph. Duplicate edges collapse and self-loops
    /// are dropped.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut pairs: Vec<(usize, usize)> = edges
            .iter()
            .filter(|(u, v)| u != v)
            .map(|&(u, v)| if u < v { (u, v) } else { (v, u) })
            .collect();
        pairs.sort_unstable();
        pairs.dedup();
        let triplets: Vec<_> = pairs.into_iter().map(|(u, v)| (u, v, 1.0)).collect();
        Self::from_triplets(n, &triplets)
    }

    /// Adds parameter directions; `θ` then has one entry per direction.
    pub fn with_directions(mut self, directions: Vec<GraphDirection>) -> Result<Self> {
        for d in &directions {
            if let GraphDirection::RankOne { a, b } = d {
                Error::check_len("rank-one direction a", self.n, a.len())?;
                Error::check_len("rank-one direction b", self.n, b.len())?;
            }
        }
        self.directions = directions;
        Ok(self)
    }

    pub fn directions(&self) -> &[GraphDirection] {
        &self.directions
    }

    pub fn nnz(&self) -> usize {
        self.col_indices.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Iterator over `(column, value)` of row `r`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (lo, hi) = (self.row_offsets[r], self.row_offsets[r + 1]);
        self.col_indices[lo..hi]
            .iter()
            .copied()
            .zip(self.values[lo..hi].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> Option<f64> {
        let (lo, hi) = (self.row_offsets[r], self.row_offsets[r + 1]);
        self.col_indices[lo..hi]
            .binary_search(&c)
            .ok()
            .map(|k| self.values[lo + k])
    }

    pub fn degree(&self, r: usize) -> usize {
        self.row_offsets[r + 1] - self.row_offsets[r]
    }

    /// Dense copy of the stored matrix `A₀`.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for r in 0..self.n {
            for (c, v) in self.row(r) {
                a[(r, c)] = v;
            }
        }
        a
    }
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

impl ParamOperator for SparseGraphOperator {
    type Scalar = f64;

    fn dim(&self) -> usize {
        self.n
    }

    fn num_params(&self) -> usize {
        self.directions.len()
    }

    fn matvec_into(&self, theta: &[f64], x: &[f64], y: &mut [f64]) {
        for (r, yr) in y.iter_mut().enumerate() {
            *yr = self.row(r).map(|(c, v)| v * x[c]).sum();
        }
        for (&t, dir) in theta.iter().zip(&self.directions) {
            if t == 0.0 {
                continue;
            }
            match dir {
                GraphDirection::Shift => {
                    for (yi, xi) in y.iter_mut().zip(x) {
                        *yi += t * xi;
                    }
                }
                GraphDirection::RankOne { a, b } => {
                    let (bx, ax) = (0.5 * t * dot(b, x), 0.5 * t * dot(a, x));
                    for ((yi, ai), bi) in y.iter_mut().zip(a).zip(b) {
                        *yi += ai * bx + bi * ax;
                    }
                }
            }
        }
    }

    fn deriv_contract_unchecked(&self, _theta: &[f64], j: usize, w: &[f64], v: &[f64]) -> f64 {
        match &self.directions[j] {
            GraphDirection::Shift => dot(w, v),
            GraphDirection::RankOne { a, b } => {
                0.5 * (dot(w, a) * dot(b, v) + dot(w, b) * dot(a, v))
            }
        }
    }

    fn dense_matrix(&self, theta: &[f64]) -> DMatrix<f64> {
        let mut a = self.to_dense();
        for (j, &t) in theta.iter().enumerate() {
            a += self.dense_derivative(theta, j) * t;
        }
        a
    }

    fn dense_derivative(&self, _theta: &[f64], j: usize) -> DMatrix<f64> {
        match &self.directions[j] {
            GraphDirection::Shift => DMatrix::identity(self.n, self.n),
            GraphDirection::RankOne { a, b } => {
                DMatrix::from_fn(self.n, self.n, |r, c| 0.5 * (a[r] * b[c] + b[r] * a[c]))
            }
        }
    }
}

//! Matrix Market `coordinate real symmetric` files.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use krylov_grad_core::nalgebra::DMatrix;
use krylov_grad_core::operator::{DenseSymmetricOperator, SparseGraphOperator};

use crate::error::{Error, Result};

/// A symmetric matrix stored as its lower triangle, `row ≥ col`, 0-based,
/// in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    pub n: usize,
    pub lower: Vec<(usize, usize, f64)>,
}

impl SymmetricMatrix {
    /// Lower triangle of a dense matrix, dropping exact zeros off the diagonal.
    pub fn from_dense(a: &DMatrix<f64>) -> Self {
        let n = a.nrows();
        let mut lower = Vec::new();
        for c in 0..n {
            for r in c..n {
                if r == c || a[(r, c)] != 0.0 {
                    lower.push((r, c, a[(r, c)]));
                }
            }
        }
        Self { n, lower }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for &(r, c, v) in &self.lower {
            a[(r, c)] = v;
            a[(c, r)] = v;
        }
        a
    }

    pub fn to_sparse(&self) -> Result<SparseGraphOperator> {
        Ok(SparseGraphOperator::from_triplets(self.n, &self.lower)?)
    }

    /// Constant dense operator without parameter directions.
    pub fn to_dense_operator(&self) -> Result<DenseSymmetricOperator<f64>> {
        Ok(DenseSymmetricOperator::constant(self.to_dense())?)
    }
}

pub fn load_matrix_market(path: impl AsRef<Path>) -> Result<SymmetricMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_matrix_market(BufReader::new(file), path)
}

/// Reads a `%%MatrixMarket matrix coordinate real symmetric` stream. Entries
/// may sit in either triangle; a position given twice is an error.
pub fn parse_matrix_market<R: BufRead>(reader: R, origin: impl AsRef<Path>) -> Result<SymmetricMatrix> {
    let origin = origin.as_ref();
    let mut lines = reader.lines().enumerate();
    let mut next = || -> Result<Option<(usize, String)>> {
        match lines.next() {
            None => Ok(None),
            Some((k, l)) => l.map(|l| Some((k + 1, l))).map_err(|e| Error::io(origin, e)),
        }
    };

    let Some((_, banner)) = next()? else {
        return Err(Error::Format("empty Matrix Market file".into()));
    };
    let tokens: Vec<String> = banner.split_whitespace().map(str::to_ascii_lowercase).collect();
    if tokens.first().map(String::as_str) != Some("%%matrixmarket") || tokens.len() != 5 {
        return Err(Error::Format(format!("bad Matrix Market banner {banner:?}")));
    }
    let expect = ["matrix", "coordinate", "real", "symmetric"];
    for (got, want) in tokens[1..].iter().zip(expect) {
        if got != want {
            return Err(Error::Format(format!(
                "unsupported Matrix Market field {got:?} (only \"matrix coordinate real symmetric\")"
            )));
        }
    }

    let (size_line, size) = loop {
        match next()? {
            None => return Err(Error::Format("missing size line".into())),
            Some((_, l)) if l.trim().is_empty() || l.trim_start().starts_with('%') => continue,
            Some((k, l)) => break (k, l),
        }
    };
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|s| s.parse().map_err(|_| Error::parse(origin, size_line, format!("bad size field {s:?}"))))
        .collect::<Result<_>>()?;
    let &[rows, cols, nnz] = dims.as_slice() else {
        return Err(Error::parse(origin, size_line, "size line needs rows, cols, nnz"));
    };
    if rows != cols {
        return Err(Error::parse(origin, size_line, format!("symmetric matrix must be square, got {rows}x{cols}")));
    }
    if rows == 0 {
        return Err(Error::parse(origin, size_line, "matrix has zero rows"));
    }

    let mut lower = Vec::with_capacity(nnz);
    let mut seen = std::collections::HashSet::with_capacity(nnz);
    while let Some((k, l)) = next()? {
        let body = l.trim();
        if body.is_empty() || body.starts_with('%') {
            continue;
        }
        let f: Vec<&str> = body.split_whitespace().collect();
        if f.len() != 3 {
            return Err(Error::parse(origin, k, format!("expected `row col value`, found {} fields", f.len())));
        }
        let idx = |s: &str| -> Result<usize> {
            match s.parse::<usize>() {
                Ok(i) if (1..=rows).contains(&i) => Ok(i - 1),
                _ => Err(Error::parse(origin, k, format!("index {s:?} outside 1..={rows}"))),
            }
        };
        let (i, j) = (idx(f[0])?, idx(f[1])?);
        let v: f64 = f[2]
            .parse()
            .map_err(|_| Error::parse(origin, k, format!("bad value {:?}", f[2])))?;
        if !v.is_finite() {
            return Err(Error::parse(origin, k, "non-finite value"));
        }
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        if !seen.insert((r, c)) {
            return Err(Error::parse(origin, k, format!("duplicate entry ({}, {})", r + 1, c + 1)));
        }
        lower.push((r, c, v));
    }
    if lower.len() != nnz {
        return Err(Error::Format(format!("header declares {nnz} entries, found {}", lower.len())));
    }
    Ok(SymmetricMatrix { n: rows, lower })
}

/// Writes the lower triangle with 17 significant digits per value.
pub fn write_matrix_market<W: Write>(m: &SymmetricMatrix, mut w: W) -> std::io::Result<()> {
    writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
    writeln!(w, "{} {} {}", m.n, m.n, m.lower.len())?;
    for &(r, c, v) in &m.lower {
        writeln!(w, "{} {} {:.16e}", r + 1, c + 1, v)?;
    }
    w.flush()
}

pub fn save_matrix_market(m: &SymmetricMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_matrix_market(m, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}
